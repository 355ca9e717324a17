//! Reflection products and their eigenphase decompositions.
//!
//! `U(P,x) = (2Π_{ker A} − I)(2Π_{H(x)} − I)` and
//! `U′(P,x) = (2Π_{H(x)} − I)(2Π_T − I)` with `T = ker A ⊕ span{w0}`.
//! Both are real orthogonal, so their spectrum is closed under conjugation.
//! A decomposition stores one real invariant subspace per phase magnitude
//! `|θ| ∈ [0, π]`: for `0 < |θ| < π` that subspace is the real span of the
//! `e^{iθ}` and `e^{−iθ}` eigenvectors together.

use nalgebra::{DMatrix, DVector};

use crate::error::{arg, Error, Result};
use crate::linalg::{self, Tolerances};
use crate::spanprog::{InputString, SpanProgram};

/// Phases this close to `0` or `π` are snapped there.
pub const PHASE_SNAP: f64 = 1e-9;
/// Phases this close together share an eigenspace projector.
pub const PHASE_CLUSTER: f64 = 1e-9;
/// Controlled applications of `U` or `U′` each cost this many queries.
pub const QUERIES_PER_APPLICATION: u64 = 2;

const COARSE_COS_GAP: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct PhaseBlock {
    /// Phase magnitude in `[0, π]`.
    pub phase: f64,
    /// Orthonormal basis (columns) of the real invariant subspace.
    pub basis: DMatrix<f64>,
    pub projector: DMatrix<f64>,
}

impl PhaseBlock {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Whether this block holds a conjugate pair `±θ` rather than a real
    /// eigenvalue `±1`.
    pub fn is_paired(&self) -> bool {
        self.phase > 0.0 && self.phase < std::f64::consts::PI
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryDecomposition {
    pub u: DMatrix<f64>,
    /// Blocks sorted by increasing phase magnitude.
    pub blocks: Vec<PhaseBlock>,
}

impl UnitaryDecomposition {
    /// Decomposes a real orthogonal matrix.
    ///
    /// The symmetric part `(U + Uᵀ)/2` has eigenvalues `cos θ`; its eigenspaces
    /// are grouped coarsely, and inside each group the antisymmetric part
    /// `(U − Uᵀ)/2`, whose singular values are `|sin θ|`, resolves the phases.
    /// The sine keeps small phases accurate where `arccos` would not.
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        if !u.is_square() {
            return Err(arg("unitary must be square"));
        }
        let dim = u.nrows();
        let ortho_err = linalg::max_abs(&(u.transpose() * &u - DMatrix::identity(dim, dim)));
        if ortho_err > 1e-8 {
            return Err(arg(format!("matrix is not orthogonal (error {ortho_err:e})")));
        }
        if dim == 0 {
            return Ok(Self {
                u,
                blocks: Vec::new(),
            });
        }
        let sym = (&u + u.transpose()) * 0.5;
        let skew = (&u - u.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match groups.last_mut() {
                Some(g)
                    if eig.eigenvalues[i] - eig.eigenvalues[*g.last().unwrap()]
                        <= COARSE_COS_GAP =>
                {
                    g.push(i)
                }
                _ => groups.push(vec![i]),
            }
        }

        let mut raw: Vec<(f64, DMatrix<f64>)> = Vec::new();
        for g in groups {
            let mut vc = DMatrix::zeros(dim, g.len());
            for (k, &i) in g.iter().enumerate() {
                vc.set_column(k, &eig.eigenvectors.column(i));
            }
            let kc = vc.transpose() * &skew * &vc;
            let svd = kc.svd(false, true);
            let v_t = svd.v_t.expect("right singular vectors requested");
            let mut sidx: Vec<usize> = (0..g.len()).collect();
            sidx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
            let mut sub: Vec<Vec<usize>> = Vec::new();
            for &i in &sidx {
                match sub.last_mut() {
                    Some(s)
                        if svd.singular_values[i] - svd.singular_values[*s.last().unwrap()]
                            <= PHASE_CLUSTER =>
                    {
                        s.push(i)
                    }
                    _ => sub.push(vec![i]),
                }
            }
            for s in sub {
                let mut local = DMatrix::zeros(g.len(), s.len());
                for (k, &i) in s.iter().enumerate() {
                    local.set_column(k, &v_t.row(i).transpose());
                }
                let basis = &vc * local;
                let sin = s.iter().map(|&i| svd.singular_values[i]).sum::<f64>() / s.len() as f64;
                let cos = (basis.transpose() * &sym * &basis).trace() / s.len() as f64;
                raw.push((snap(sin.atan2(cos)), basis));
            }
        }

        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Vec<DMatrix<f64>>)> = Vec::new();
        for (phase, basis) in raw {
            match merged.last_mut() {
                Some((p, parts)) if phase - *p <= PHASE_CLUSTER => parts.push(basis),
                _ => merged.push((phase, vec![basis])),
            }
        }
        let tol = Tolerances::default();
        let blocks = merged
            .into_iter()
            .map(|(phase, parts)| {
                let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
                let stacked = linalg::hstack(&refs, dim);
                let basis = if parts.len() == 1 {
                    stacked
                } else {
                    linalg::column_basis(&stacked, &tol)
                };
                let projector = linalg::projector_from_basis(&basis);
                PhaseBlock {
                    phase,
                    basis,
                    projector,
                }
            })
            .collect();
        Ok(Self { u, blocks })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Eigenphases in `(−π, π]` with multiplicity, ascending.
    pub fn phases(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            if b.is_paired() {
                for _ in 0..b.dim() / 2 {
                    out.push(b.phase);
                    out.push(-b.phase);
                }
                if b.dim() % 2 == 1 {
                    out.push(b.phase);
                }
            } else {
                out.extend(std::iter::repeat_n(b.phase, b.dim()));
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `Π_Θ`: projector onto the eigenspaces with `|θ| ≤ Θ`.
    pub fn projector_small_phase(&self, theta: f64) -> Result<DMatrix<f64>> {
        if !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(arg(format!("Theta must lie in [0, pi), got {theta}")));
        }
        let n = self.dim();
        Ok(self
            .blocks
            .iter()
            .filter(|b| b.phase <= theta)
            .fold(DMatrix::zeros(n, n), |acc, b| acc + &b.projector))
    }

    /// `Δ(U)`, the smallest nonzero phase magnitude; `None` when `U = I`.
    pub fn phase_gap(&self) -> Option<f64> {
        self.blocks.iter().map(|b| b.phase).find(|&p| p > 0.0)
    }

    /// Spectral weights of a real vector as `(|θ|, ‖Π_{|θ|} v‖²)` pairs.
    ///
    /// For a paired block the weight splits evenly between `+θ` and `−θ`.
    pub fn spectral_weights(&self, v: &DVector<f64>) -> Vec<(f64, f64)> {
        self.blocks
            .iter()
            .map(|b| (b.phase, (b.basis.transpose() * v).norm_squared()))
            .collect()
    }
}

fn snap(phase: f64) -> f64 {
    if phase <= PHASE_SNAP {
        0.0
    } else if phase >= std::f64::consts::PI - PHASE_SNAP {
        std::f64::consts::PI
    } else {
        phase
    }
}

/// `U(P,x) = (2Π_{ker A} − I)(2Π_{H(x)} − I)`.
pub fn build_u(p: &SpanProgram, x: &InputString) -> Result<UnitaryDecomposition> {
    let ph = p.subspace_projector(x)?;
    let pk = linalg::kernel_projector(&p.a, &p.tol);
    UnitaryDecomposition::new(linalg::reflection(&pk) * linalg::reflection(&ph))
}

/// `U′(P,x) = (2Π_{H(x)} − I)(2Π_T − I)`.
///
/// Also checks `U′ = Uᵀ(I − 2ŵ0ŵ0ᵀ)` for the unit vector `ŵ0 = w0/‖w0‖`.
pub fn build_u_prime(p: &SpanProgram, x: &InputString) -> Result<UnitaryDecomposition> {
    let w0 = p.minimal_witness()?.w0;
    let ph = p.subspace_projector(x)?;
    let pk = linalg::kernel_projector(&p.a, &p.tol);
    let w_hat = &w0 / w0.norm();
    let ww = &w_hat * w_hat.transpose();
    let pt = &pk + &ww;
    let u_prime = linalg::reflection(&ph) * linalg::reflection(&pt);

    let dim = p.dim_h;
    let u = linalg::reflection(&pk) * linalg::reflection(&ph);
    let rhs = u.transpose() * (DMatrix::identity(dim, dim) - ww * 2.0);
    let err = linalg::max_abs(&(&u_prime - rhs));
    if err > 1e-10 {
        return Err(Error::Numerical(format!(
            "U' differs from U^T(I - 2 w0 w0^T) by {err:e}"
        )));
    }
    UnitaryDecomposition::new(u_prime)
}

#[derive(Debug, Clone)]
pub struct DiscriminantReport {
    pub d: DMatrix<f64>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Smallest singular value above the rank cutoff; `None` when `D = 0`.
    pub sigma_min: Option<f64>,
}

/// Singular values of a product of projectors are at most one; values below
/// this are treated as zero.
pub const DISCRIMINANT_ZERO: f64 = 1e-10;

impl DiscriminantReport {
    /// Phases `±2 arccos σ` for the singular values strictly inside `(0, 1)`.
    pub fn szegedy_phases(&self, margin: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .singular_values
            .iter()
            .filter(|&&s| s > margin && s < 1.0 - margin)
            .flat_map(|&s| {
                let t = 2.0 * s.min(1.0).acos();
                [t, -t]
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// `D = Π_A Π_B`.
pub fn discriminant(pa: &DMatrix<f64>, pb: &DMatrix<f64>) -> Result<DiscriminantReport> {
    for (name, m) in [("Pi_A", pa), ("Pi_B", pb)] {
        if !linalg::is_orthogonal_projector(m, 1e-10) {
            return Err(arg(format!("{name} is not an orthogonal projector")));
        }
    }
    if pa.shape() != pb.shape() {
        return Err(arg("projectors act on different spaces"));
    }
    let d = pa * pb;
    let singular_values = linalg::singular_values(&d);
    let sigma_min = singular_values
        .iter()
        .rev()
        .copied()
        .find(|&s| s > DISCRIMINANT_ZERO);
    Ok(DiscriminantReport {
        d,
        singular_values,
        sigma_min,
    })
}

/// `dim(col Π_A ∩ col Π_B)` from ranks: `rank A + rank B − rank[A B]`.
pub fn intersection_dim(pa: &DMatrix<f64>, pb: &DMatrix<f64>, tol: &Tolerances) -> usize {
    let qa = linalg::svd_ref(pa, tol, 1.0).left;
    let qb = linalg::svd_ref(pb, tol, 1.0).left;
    let joint = linalg::hstack(&[&qa, &qb], pa.nrows());
    qa.ncols() + qb.ncols() - linalg::rank(&joint, tol)
}

/// `2σ_min(A(x))/σ_max(A)`, the phase-gap lower bound shared by `U` and `U′`.
pub fn kappa_bound(p: &SpanProgram, x: &InputString) -> Result<f64> {
    let ax = p.restricted_operator(x)?;
    let sx = linalg::svd_ref(&ax, &p.tol, p.a_scale());
    let smin = sx
        .sigma_min()
        .ok_or_else(|| Error::Degenerate("A(x) = 0".into()))?;
    let smax = linalg::svd(&p.a, &p.tol)
        .sigma_max()
        .ok_or_else(|| Error::Degenerate("A = 0".into()))?;
    Ok(2.0 * smin / smax)
}

/// Which reflection product the overlaps are taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `U(P,x)`, probing negative witnesses.
    Negative,
    /// `U′(P,x)`, probing positive witnesses.
    Positive,
}

fn ensure_normalized(p: &SpanProgram) -> Result<DVector<f64>> {
    let mw = p.minimal_witness()?;
    if (mw.n_plus - 1.0).abs() > 1e-8 {
        return Err(arg(format!(
            "span program is not normalized (N_+ = {})",
            mw.n_plus
        )));
    }
    Ok(mw.w0)
}

/// `‖Π_Θ w0‖²` for `U` (negative side) or `U′` (positive side).
///
/// Requires a normalized program.
pub fn small_phase_overlap(
    p: &SpanProgram,
    x: &InputString,
    side: Side,
    theta: f64,
) -> Result<f64> {
    let w0 = ensure_normalized(p)?;
    let dec = match side {
        Side::Negative => build_u(p, x)?,
        Side::Positive => build_u_prime(p, x)?,
    };
    Ok((dec.projector_small_phase(theta)? * w0).norm_squared())
}

/// Overlap of `w0` with the phase-zero space, i.e. `small_phase_overlap` at 0.
pub fn fixed_space_overlap(p: &SpanProgram, x: &InputString, side: Side) -> Result<f64> {
    small_phase_overlap(p, x, side, 0.0)
}
