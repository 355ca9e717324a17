//! Span programs and their exact witness quantities.
//!
//! A span program is a target `τ ∈ V`, an operator `A : H → V`, and a
//! decomposition of `H` into one block per input position plus an
//! always-available block and a never-available block. Each block `j` carries
//! `q` subspaces `H_{j,a}` (one per symbol), which may overlap. An input `x`
//! selects `H(x) = ⊕_j H_{j,x_j} ⊕ H_true`.
//!
//! Every quantity here is computed by a finite linear-algebra route: pseudo
//! inverses for the exact witnesses, an equality-constrained quadratic program
//! for the negative witness, and two-stage least squares for the min-error
//! witnesses.

pub mod random;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{arg, Error, Result};
use crate::linalg::{self, Tolerances};

/// A witness size: either a finite squared norm or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessSize {
    Finite(f64),
    Infinite,
}

impl WitnessSize {
    pub fn is_finite(&self) -> bool {
        matches!(self, WitnessSize::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            WitnessSize::Finite(v) => Some(*v),
            WitnessSize::Infinite => None,
        }
    }

    /// `1/w`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> f64 {
        match self {
            WitnessSize::Finite(v) => 1.0 / v,
            WitnessSize::Infinite => 0.0,
        }
    }
}

impl fmt::Display for WitnessSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessSize::Finite(v) => write!(f, "{v}"),
            WitnessSize::Infinite => write!(f, "inf"),
        }
    }
}

/// A string in `[q]^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputString(Vec<usize>);

impl InputString {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    /// Parses a string of decimal digits, e.g. `"1100"`.
    pub fn from_digits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| arg(format!("'{c}' is not a digit")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hamming weight (number of nonzero symbols).
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }
}

impl fmt::Display for InputString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A span program on `[q]^n` over the reals.
///
/// Coordinates of `H` are the standard basis `0..dim_h`. `blocks[j]` lists the
/// coordinates of `H_j`; `subspaces[j][a]` holds, as columns, a spanning set
/// of `H_{j,a}` written in the local coordinates of `blocks[j]` (so it has
/// `blocks[j].len()` rows).
#[derive(Debug, Clone)]
pub struct SpanProgram {
    pub n: usize,
    pub q: usize,
    pub dim_h: usize,
    pub dim_v: usize,
    pub blocks: Vec<Vec<usize>>,
    pub true_coords: Vec<usize>,
    pub false_coords: Vec<usize>,
    pub subspaces: Vec<Vec<DMatrix<f64>>>,
    pub a: DMatrix<f64>,
    pub tau: DVector<f64>,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(ValidationCheck {
            name,
            passed,
            detail: detail.into(),
        });
    }
}

#[derive(Debug, Clone)]
pub struct MinimalWitness {
    pub w0: DVector<f64>,
    /// `N_+ = ‖w0‖²`.
    pub n_plus: f64,
    /// `N_- = 1/N_+`.
    pub n_minus: f64,
}

#[derive(Debug, Clone)]
pub struct PositiveWitness {
    /// `(AΠ_{H(x)})⁺τ` when `x` is positive.
    pub vector: Option<DVector<f64>>,
    pub size: WitnessSize,
}

#[derive(Debug, Clone)]
pub struct NegativeWitness {
    /// The functional `ω` as a vector in `V`.
    pub omega: Option<DVector<f64>>,
    /// `(ωA)ᵀ`, a vector in `H`.
    pub row: Option<DVector<f64>>,
    pub size: WitnessSize,
}

#[derive(Debug, Clone)]
pub struct MinErrorPositive {
    pub witness: DVector<f64>,
    /// `e_+(x) = ‖Π_{H(x)^⊥} w̃‖²`.
    pub error: f64,
    /// `w̃_+(x) = ‖w̃‖²`.
    pub size: f64,
}

#[derive(Debug, Clone)]
pub struct MinErrorNegative {
    pub omega: DVector<f64>,
    /// `(ω̃A)ᵀ`.
    pub row: DVector<f64>,
    /// `e_-(x) = ‖ω̃AΠ_{H(x)}‖²`.
    pub error: f64,
    /// `w̃_-(x) = ‖ω̃A‖²`.
    pub size: f64,
}

/// All witness quantities of one `(P, x)` pair.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub w_plus: WitnessSize,
    pub w_minus: WitnessSize,
    pub e_plus: f64,
    pub e_minus: f64,
    pub w_tilde_plus: f64,
    pub w_tilde_minus: f64,
    /// Optimal positive witness when `x ∈ P_1`, else the optimal min-error
    /// positive witness.
    pub witness_vec: DVector<f64>,
    /// `ωA` for the optimal exact negative witness when `x ∈ P_0`, else for
    /// the optimal min-error negative witness.
    pub neg_witness_row: DVector<f64>,
}

impl WitnessReport {
    pub fn is_positive(&self) -> bool {
        self.w_plus.is_finite()
    }
}

impl SpanProgram {
    /// The OR program on `{0,1}^n`: `V = ℝ`, `τ = 1`, `H_{i,1} = span{|i⟩}`,
    /// `H_{i,0} = {0}`, `A = Σ_i ⟨i|`.
    pub fn or(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(arg("OR program needs n >= 1"));
        }
        let blocks = (0..n).map(|i| vec![i]).collect();
        let subspaces = (0..n)
            .map(|_| vec![DMatrix::zeros(1, 0), DMatrix::from_element(1, 1, 1.0)])
            .collect();
        Ok(Self {
            n,
            q: 2,
            dim_h: n,
            dim_v: 1,
            blocks,
            true_coords: Vec::new(),
            false_coords: Vec::new(),
            subspaces,
            a: DMatrix::from_element(1, n, 1.0),
            tau: DVector::from_element(1, 1.0),
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Checks every structural constraint of the definition.
    ///
    /// Shape mismatches that make the program meaningless are returned as
    /// [`Error::Structural`]; the remaining constraints are reported per check.
    pub fn validate(&self) -> Result<ValidationReport> {
        if self.a.ncols() != self.dim_h {
            return Err(Error::Structural(format!(
                "A has {} columns but dim H = {}",
                self.a.ncols(),
                self.dim_h
            )));
        }
        if self.a.nrows() != self.dim_v || self.tau.len() != self.dim_v {
            return Err(Error::Structural(format!(
                "A has {} rows and tau has {} entries but dim V = {}",
                self.a.nrows(),
                self.tau.len(),
                self.dim_v
            )));
        }
        if self.blocks.len() != self.n || self.subspaces.len() != self.n {
            return Err(Error::Structural(format!(
                "expected {} input blocks, found {} index sets and {} subspace families",
                self.n,
                self.blocks.len(),
                self.subspaces.len()
            )));
        }
        for (j, fam) in self.subspaces.iter().enumerate() {
            if fam.len() != self.q {
                return Err(Error::Structural(format!(
                    "block {j} has {} subspaces, expected q = {}",
                    fam.len(),
                    self.q
                )));
            }
            for (s, m) in fam.iter().enumerate() {
                if m.nrows() != self.blocks[j].len() {
                    return Err(Error::Structural(format!(
                        "subspace ({j},{s}) has {} rows but block {j} has {} coordinates",
                        m.nrows(),
                        self.blocks[j].len()
                    )));
                }
            }
        }
        let all = self
            .blocks
            .iter()
            .flatten()
            .chain(&self.true_coords)
            .chain(&self.false_coords);
        if let Some(&c) = all.clone().find(|&&c| c >= self.dim_h) {
            return Err(Error::Structural(format!(
                "coordinate {c} out of range for dim H = {}",
                self.dim_h
            )));
        }

        let mut report = ValidationReport::default();
        let mut seen = vec![0usize; self.dim_h];
        for &c in all {
            seen[c] += 1;
        }
        let dup: Vec<usize> = (0..self.dim_h).filter(|&c| seen[c] > 1).collect();
        let missing: Vec<usize> = (0..self.dim_h).filter(|&c| seen[c] == 0).collect();
        report.push(
            "blocks-disjoint",
            dup.is_empty(),
            if dup.is_empty() {
                String::new()
            } else {
                format!("coordinates in more than one block: {dup:?}")
            },
        );
        report.push(
            "blocks-cover",
            missing.is_empty(),
            if missing.is_empty() {
                String::new()
            } else {
                format!("coordinates in no block: {missing:?}")
            },
        );
        let mut bad = Vec::new();
        for (j, fam) in self.subspaces.iter().enumerate() {
            let len = self.blocks[j].len();
            let refs: Vec<&DMatrix<f64>> = fam.iter().collect();
            let r = linalg::rank(&linalg::hstack(&refs, len), &self.tol);
            if r != len {
                bad.push(format!("block {j}: span has dim {r} < {len}"));
            }
        }
        report.push("subspaces-span-block", bad.is_empty(), bad.join("; "));
        Ok(report)
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = self.validate()?;
        if report.passed() {
            Ok(())
        } else {
            let msg: Vec<String> = report
                .failures()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect();
            Err(Error::Structural(msg.join("; ")))
        }
    }

    pub fn check_input(&self, x: &InputString) -> Result<()> {
        if x.len() != self.n {
            return Err(arg(format!(
                "input has length {} but the program has n = {}",
                x.len(),
                self.n
            )));
        }
        if let Some(&s) = x.symbols().iter().find(|&&s| s >= self.q) {
            return Err(arg(format!("symbol {s} is outside the alphabet [{}]", self.q)));
        }
        Ok(())
    }

    /// Orthogonal projector onto `H(x)`.
    pub fn subspace_projector(&self, x: &InputString) -> Result<DMatrix<f64>> {
        self.ensure_valid()?;
        self.check_input(x)?;
        Ok(self.projector_unchecked(x))
    }

    fn projector_unchecked(&self, x: &InputString) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.dim_h, self.dim_h);
        for (j, &sym) in x.symbols().iter().enumerate() {
            let coords = &self.blocks[j];
            let local = linalg::column_projector(&self.subspaces[j][sym], &self.tol);
            for (r, &cr) in coords.iter().enumerate() {
                for (c, &cc) in coords.iter().enumerate() {
                    p[(cr, cc)] = local[(r, c)];
                }
            }
        }
        for &c in &self.true_coords {
            p[(c, c)] = 1.0;
        }
        p
    }

    /// `A(x) = AΠ_{H(x)}`.
    pub fn restricted_operator(&self, x: &InputString) -> Result<DMatrix<f64>> {
        Ok(&self.a * self.subspace_projector(x)?)
    }

    /// `σ_max(A)`, the reference scale for rank decisions on matrices built
    /// from `A`.
    pub fn a_scale(&self) -> f64 {
        linalg::singular_values(&self.a).first().copied().unwrap_or(0.0)
    }

    pub fn target_in_column_space(&self) -> bool {
        linalg::in_column_space(&self.a, &self.tau, &self.tol)
    }

    /// `|w0⟩ = A⁺τ`, the shortest vector with `A|w⟩ = τ`.
    pub fn minimal_witness(&self) -> Result<MinimalWitness> {
        self.ensure_valid()?;
        if !self.target_in_column_space() {
            return Err(Error::GloballyInfeasible);
        }
        let w0 = linalg::pseudo_inverse(&self.a, &self.tol) * &self.tau;
        let n_plus = w0.norm_squared();
        Ok(MinimalWitness {
            w0,
            n_plus,
            n_minus: 1.0 / n_plus,
        })
    }

    pub fn positive_witness(&self, x: &InputString) -> Result<PositiveWitness> {
        let m = self.restricted_operator(x)?;
        let scale = self.a_scale();
        if !linalg::in_column_space_ref(&m, &self.tau, &self.tol, scale) {
            return Ok(PositiveWitness {
                vector: None,
                size: WitnessSize::Infinite,
            });
        }
        let w = linalg::pseudo_inverse_ref(&m, &self.tol, scale) * &self.tau;
        let size = w.norm_squared();
        Ok(PositiveWitness {
            vector: Some(w),
            size: WitnessSize::Finite(size),
        })
    }

    /// Minimizes `‖ωA‖²` subject to `ωAΠ_{H(x)} = 0` and `ωτ = 1`.
    ///
    /// `ω` is restricted to `(col AΠ_{H(x)})^⊥` through the projector `Q`.
    /// With `B = QA`, `c = Qτ`, `G = BBᵀ`: `c = 0` means no negative witness;
    /// a component of `c` in `ker G` gives a witness with `ωA = 0`; otherwise
    /// the optimum is `ω = G⁺c / cᵀG⁺c` with value `1 / cᵀG⁺c`.
    pub fn negative_witness(&self, x: &InputString) -> Result<NegativeWitness> {
        let m = self.restricted_operator(x)?;
        let tn = self.tau.norm();
        if tn == 0.0 {
            return Err(Error::Structural("target vector is zero".into()));
        }
        let scale = self.a_scale();
        let col_m = linalg::column_projector_ref(&m, &self.tol, scale);
        let q = DMatrix::identity(self.dim_v, self.dim_v) - col_m;
        let c = &q * &self.tau;
        if c.norm() <= self.tol.feasibility_rel * tn {
            return Ok(NegativeWitness {
                omega: None,
                row: None,
                size: WitnessSize::Infinite,
            });
        }
        let b = &q * &self.a;
        let g = &b * b.transpose();
        let col_g = linalg::column_projector_ref(&g, &self.tol, scale * scale);
        let c_ker = &c - &col_g * &c;
        if c_ker.norm() > self.tol.feasibility_rel * c.norm() {
            let omega = &c_ker / c.dot(&c_ker);
            let row = self.a.transpose() * &omega;
            let size = row.norm_squared();
            return Ok(NegativeWitness {
                omega: Some(omega),
                row: Some(row),
                size: WitnessSize::Finite(size),
            });
        }
        let g_pinv_c = linalg::pseudo_inverse_ref(&g, &self.tol, scale * scale) * &c;
        let denom = c.dot(&g_pinv_c);
        let omega = g_pinv_c / denom;
        let row = self.a.transpose() * &omega;
        let size = row.norm_squared();
        Ok(NegativeWitness {
            omega: Some(omega),
            row: Some(row),
            size: WitnessSize::Finite(size),
        })
    }

    /// Optimal min-error positive witness.
    ///
    /// Writes `w = w0 + K z` with `K` an orthonormal basis of `ker A`. Since
    /// `w0 ⊥ ker A`, `‖w‖² = ‖w0‖² + ‖z‖²`, so the minimum-norm least-squares
    /// solution of `Π_{H(x)^⊥} K z = −Π_{H(x)^⊥} w0` solves both stages.
    pub fn min_error_positive(&self, x: &InputString) -> Result<MinErrorPositive> {
        let proj = self.subspace_projector(x)?;
        let w0 = self.minimal_witness()?.w0;
        let perp = DMatrix::identity(self.dim_h, self.dim_h) - proj;
        let k = linalg::null_basis(&self.a, &self.tol);
        let c = &perp * &k;
        let d = -(&perp * &w0);
        let z = linalg::pseudo_inverse_ref(&c, &self.tol, 1.0) * d;
        let witness = w0 + k * z;
        let error = (&perp * &witness).norm_squared();
        let size = witness.norm_squared();
        Ok(MinErrorPositive {
            witness,
            error,
            size,
        })
    }

    /// Optimal min-error negative witness.
    ///
    /// Writes `ω = τ/‖τ‖² + K y` with `K` an orthonormal basis of `τ^⊥`.
    /// Stage one is least squares for `‖ωAΠ_{H(x)}‖`; stage two minimizes
    /// `‖ωA‖` over the kernel directions of the stage-one operator.
    pub fn min_error_negative(&self, x: &InputString) -> Result<MinErrorNegative> {
        let m = self.restricted_operator(x)?;
        let tn2 = self.tau.norm_squared();
        if tn2 == 0.0 {
            return Err(Error::Structural("target vector is zero".into()));
        }
        let base = &self.tau / tn2;
        let tau_hat = DMatrix::from_column_slice(self.dim_v, 1, (&self.tau / tn2.sqrt()).as_slice());
        let k = linalg::complement_basis(&tau_hat);

        let mt = m.transpose();
        let e = &mt * &k;
        let scale = self.a_scale();
        let y_star = -(linalg::pseudo_inverse_ref(&e, &self.tol, scale) * (&mt * &base));
        let nb = linalg::null_basis_ref(&e, &self.tol, scale);

        let at = self.a.transpose();
        let r0 = &at * (&base + &k * &y_star);
        let f = &at * &k * &nb;
        let t = -(linalg::pseudo_inverse_ref(&f, &self.tol, scale) * &r0);
        let omega = base + &k * (y_star + nb * t);
        let row = &at * &omega;
        let error = (&mt * &omega).norm_squared();
        let size = row.norm_squared();
        Ok(MinErrorNegative {
            omega,
            row,
            error,
            size,
        })
    }

    /// All six witness quantities for `x`.
    pub fn witness_report(&self, x: &InputString) -> Result<WitnessReport> {
        let pos = self.positive_witness(x)?;
        let neg = self.negative_witness(x)?;
        let mep = self.min_error_positive(x)?;
        let men = self.min_error_negative(x)?;
        let (e_plus, w_tilde_plus, witness_vec) = match (&pos.vector, pos.size) {
            (Some(v), WitnessSize::Finite(s)) => (0.0, s, v.clone()),
            _ => (mep.error, mep.size, mep.witness),
        };
        let (e_minus, w_tilde_minus, neg_witness_row) = match (&neg.row, neg.size) {
            (Some(r), WitnessSize::Finite(s)) => (0.0, s, r.clone()),
            _ => (men.error, men.size, men.row),
        };
        Ok(WitnessReport {
            w_plus: pos.size,
            w_minus: neg.size,
            e_plus,
            e_minus,
            w_tilde_plus,
            w_tilde_minus,
            witness_vec,
            neg_witness_row,
        })
    }

    /// Replaces the target by `τ/√N_+`, giving `N_+ = 1`.
    pub fn normalize(&self) -> Result<SpanProgram> {
        let mw = self.minimal_witness()?;
        let mut out = self.clone();
        out.tau = &self.tau / mw.n_plus.sqrt();
        Ok(out)
    }

    pub fn with_target(&self, tau: DVector<f64>) -> Result<SpanProgram> {
        if tau.len() != self.dim_v {
            return Err(Error::Structural("target has wrong dimension".into()));
        }
        let mut out = self.clone();
        out.tau = tau;
        Ok(out)
    }

    /// The scaled program `P^β`.
    ///
    /// Appends `ĥ0` (coordinate `dim_h`, in the false block) and `ĥ1`
    /// (coordinate `dim_h + 1`, in the true block) to `H`, and `ĥ1` as the last
    /// coordinate of `V`:
    /// `A^β = βA + τ⟨ĥ0| + (√(β²+N)/β)|ĥ1⟩⟨ĥ1|`, `τ^β = τ + |ĥ1⟩`.
    pub fn scale(&self, beta: f64) -> Result<SpanProgram> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(arg(format!("beta must be positive and finite, got {beta}")));
        }
        let n_plus = self.minimal_witness()?.n_plus;
        let (dv, dh) = (self.dim_v, self.dim_h);
        let mut a = DMatrix::zeros(dv + 1, dh + 2);
        a.view_mut((0, 0), (dv, dh)).copy_from(&(&self.a * beta));
        a.view_mut((0, dh), (dv, 1)).copy_from(&self.tau);
        a[(dv, dh + 1)] = (beta * beta + n_plus).sqrt() / beta;
        let mut tau = DVector::zeros(dv + 1);
        tau.rows_mut(0, dv).copy_from(&self.tau);
        tau[dv] = 1.0;
        let mut out = self.clone();
        out.dim_h = dh + 2;
        out.dim_v = dv + 1;
        out.a = a;
        out.tau = tau;
        out.false_coords.push(dh);
        out.true_coords.push(dh + 1);
        Ok(out)
    }

    /// Every string in `[q]^n`, in lexicographic order.
    pub fn all_inputs(&self) -> Vec<InputString> {
        let total = self.q.pow(self.n as u32);
        (0..total)
            .map(|mut idx| {
                let mut s = vec![0; self.n];
                for slot in s.iter_mut().rev() {
                    *slot = idx % self.q;
                    idx /= self.q;
                }
                InputString::new(s)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x(s: &str) -> InputString {
        InputString::from_digits(s).unwrap()
    }

    #[test]
    fn or_program_validates() {
        let p = SpanProgram::or(3).unwrap();
        assert!(p.validate().unwrap().passed());
    }

    #[test]
    fn overlapping_subspaces_are_allowed() {
        // H_1 = ℝ², H_{1,0} = span{e1, e1+e2}, H_{1,1} = span{e1}: shared vector.
        let p = SpanProgram {
            n: 1,
            q: 2,
            dim_h: 2,
            dim_v: 1,
            blocks: vec![vec![0, 1]],
            true_coords: vec![],
            false_coords: vec![],
            subspaces: vec![vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            ]],
            a: DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            tau: DVector::from_element(1, 1.0),
            tol: Tolerances::default(),
        };
        assert!(p.validate().unwrap().passed());
    }

    #[test]
    fn wrong_column_count_is_structural() {
        let mut p = SpanProgram::or(3).unwrap();
        p.a = DMatrix::from_element(1, 4, 1.0);
        assert!(matches!(p.validate(), Err(Error::Structural(_))));
    }

    #[test]
    fn uncovered_coordinate_fails_check() {
        let mut p = SpanProgram::or(2).unwrap();
        p.dim_h = 3;
        p.a = DMatrix::from_element(1, 3, 1.0);
        let r = p.validate().unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures().next().unwrap().name, "blocks-cover");
    }

    #[test]
    fn deficient_block_span_fails_check() {
        let mut p = SpanProgram::or(2).unwrap();
        p.subspaces[1][1] = DMatrix::zeros(1, 1);
        let r = p.validate().unwrap();
        assert_eq!(r.failures().next().unwrap().name, "subspaces-span-block");
    }

    #[test]
    fn or_projectors() {
        let p = SpanProgram::or(3).unwrap();
        let pr = p.subspace_projector(&x("101")).unwrap();
        assert_eq!(pr, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0])));
        assert_eq!(p.subspace_projector(&x("000")).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let p = SpanProgram::or(3).unwrap();
        assert!(p.subspace_projector(&x("10")).is_err());
        assert!(p.subspace_projector(&x("102")).is_err());
    }

    #[test]
    fn or_witness_sizes() {
        let n = 3;
        let p = SpanProgram::or(n).unwrap();
        let mw = p.minimal_witness().unwrap();
        assert_relative_eq!(mw.n_plus, 1.0 / n as f64, max_relative = 1e-12);
        for i in 0..n {
            assert_relative_eq!(mw.w0[i], 1.0 / n as f64, max_relative = 1e-12);
        }
        let pos = p.positive_witness(&x("110")).unwrap();
        assert_relative_eq!(pos.size.value().unwrap(), 0.5, max_relative = 1e-12);

        let neg = p.negative_witness(&x("000")).unwrap();
        assert_relative_eq!(neg.size.value().unwrap(), n as f64, max_relative = 1e-12);
        assert_eq!(p.negative_witness(&x("010")).unwrap().size, WitnessSize::Infinite);
        assert_eq!(p.positive_witness(&x("000")).unwrap().size, WitnessSize::Infinite);

        let mep = p.min_error_positive(&x("000")).unwrap();
        assert_relative_eq!(mep.error, 1.0 / n as f64, max_relative = 1e-12);
        let men = p.min_error_negative(&x("110")).unwrap();
        assert_relative_eq!(men.error, 2.0, max_relative = 1e-12);
        assert_relative_eq!(men.size, n as f64, max_relative = 1e-12);
    }

    #[test]
    fn min_error_on_own_side_matches_exact() {
        let p = SpanProgram::or(4).unwrap();
        let pos_x = x("0110");
        let mep = p.min_error_positive(&pos_x).unwrap();
        assert!(mep.error.abs() < 1e-14);
        assert_relative_eq!(mep.size, 0.5, max_relative = 1e-12);
        let men = p.min_error_negative(&x("0000")).unwrap();
        assert!(men.error.abs() < 1e-14);
        assert_relative_eq!(men.size, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_target_is_structural_for_negative_error() {
        let mut p = SpanProgram::or(2).unwrap();
        p.tau = DVector::zeros(1);
        assert!(matches!(
            p.min_error_negative(&x("10")),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn infeasible_target() {
        let mut p = SpanProgram::or(2).unwrap();
        p.dim_v = 2;
        p.a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        p.tau = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(p.minimal_witness().unwrap_err(), Error::GloballyInfeasible);
        assert_eq!(p.normalize().unwrap_err(), Error::GloballyInfeasible);
        // ω = e2 kills A and maps τ to 1.
        let neg = p.negative_witness(&x("11")).unwrap();
        assert!(neg.size.value().unwrap() < 1e-20);
    }

    #[test]
    fn normalization_is_idempotent() {
        let p = SpanProgram::or(5).unwrap().normalize().unwrap();
        assert_relative_eq!(p.minimal_witness().unwrap().n_plus, 1.0, max_relative = 1e-12);
        let again = p.normalize().unwrap();
        assert_relative_eq!(again.tau, p.tau, max_relative = 1e-12);
    }

    #[test]
    fn scale_rejects_nonpositive_beta() {
        let p = SpanProgram::or(2).unwrap();
        assert!(matches!(p.scale(0.0), Err(Error::Argument(_))));
        assert!(matches!(p.scale(-1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn scaled_layout() {
        let p = SpanProgram::or(2).unwrap().scale(2.0).unwrap();
        assert_eq!((p.dim_h, p.dim_v), (4, 2));
        assert_eq!(p.false_coords, vec![2]);
        assert_eq!(p.true_coords, vec![3]);
        assert!(p.validate().unwrap().passed());
        assert_relative_eq!(p.minimal_witness().unwrap().n_plus, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn all_inputs_enumerates_lexicographically() {
        let p = SpanProgram::or(2).unwrap();
        let xs: Vec<String> = p.all_inputs().iter().map(|x| x.to_string()).collect();
        assert_eq!(xs, vec!["00", "01", "10", "11"]);
    }
}
