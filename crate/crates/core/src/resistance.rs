//! Effective resistance through the st-connectivity span program.
//!
//! Vertices are 0-based in the API and 1-based in the text format.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algorithms::{KappaEstimator, Side, WitnessEstimator};
use crate::error::{arg, Error, Result};
use crate::linalg::{self, Tolerances};
use crate::qsim::QueryLedger;
use crate::spanprog::{InputString, SpanProgram, WitnessSize};

/// A simple undirected graph with two distinguished vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    s: usize,
    t: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Edges may be given in either orientation; repeats and loops are
    /// rejected.
    pub fn new(n: usize, s: usize, t: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(arg(format!("graph needs at least 2 vertices, got {n}")));
        }
        if s >= n || t >= n || s == t {
            return Err(arg(format!("need distinct s, t < {n}, got s={s}, t={t}")));
        }
        let mut g = Self {
            n,
            s,
            t,
            edges: BTreeSet::new(),
        };
        for &(u, v) in edges {
            g.insert_edge(u, v)?;
        }
        Ok(g)
    }

    fn insert_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(arg(format!("edge ({u}, {v}) out of range")));
        }
        if u == v {
            return Err(arg(format!("self-loop at {u}")));
        }
        if !self.edges.insert((u.min(v), u.max(v))) {
            return Err(arg(format!("duplicate edge ({u}, {v})")));
        }
        Ok(())
    }

    pub fn complete(n: usize, s: usize, t: usize) -> Result<Self> {
        let edges: Vec<_> = unordered_pairs(n).collect();
        Self::new(n, s, t, &edges)
    }

    /// The path `0 – 1 – … – n−1` with `s = 0`, `t = n−1`.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::new(n, 0, n.saturating_sub(1), &edges)
    }

    /// Each unordered pair is an edge independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, s: usize, t: usize, p: f64, rng: &mut R) -> Result<Self> {
        let edges: Vec<_> = unordered_pairs(n).filter(|_| rng.random_bool(p)).collect();
        Self::new(n, s, t, &edges)
    }

    /// Every graph on `n` vertices with `s = 0`, `t = n−1`, in the order of
    /// the edge bitmask.
    pub fn all(n: usize) -> Result<Vec<Self>> {
        let pairs: Vec<_> = unordered_pairs(n).collect();
        if pairs.len() > 24 {
            return Err(arg(format!("too many graphs to enumerate for n = {n}")));
        }
        (0u64..1 << pairs.len())
            .map(|mask| {
                let edges: Vec<_> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                Self::new(n, 0, n - 1, &edges)
            })
            .collect()
    }

    /// Parses the text format: a header `n m s t`, then `m` lines `u v`, all
    /// 1-based. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(0, "missing header line \"n m s t\"".into()))?;
        let nums = parse_numbers(header, 4).map_err(|m| perr(hline, m))?;
        let (n, m, s, t) = (nums[0], nums[1], nums[2], nums[3]);
        if n < 2 {
            return Err(perr(hline, format!("need n >= 2, got {n}")));
        }
        for (name, v) in [("s", s), ("t", t)] {
            if v < 1 || v > n {
                return Err(perr(hline, format!("{name} = {v} is not in 1..={n}")));
            }
        }
        if s == t {
            return Err(perr(hline, "s and t must differ".into()));
        }
        let mut g = Self {
            n,
            s: s - 1,
            t: t - 1,
            edges: BTreeSet::new(),
        };
        let mut count = 0;
        for (line, body) in lines {
            count += 1;
            if count > m {
                return Err(perr(line, format!("more than the declared {m} edges")));
            }
            let uv = parse_numbers(body, 2).map_err(|msg| perr(line, msg))?;
            let (u, v) = (uv[0], uv[1]);
            if u < 1 || u > n || v < 1 || v > n {
                return Err(perr(line, format!("vertex out of range 1..={n}")));
            }
            if u == v {
                return Err(perr(line, format!("self-loop at vertex {u}")));
            }
            if !g.edges.insert(((u - 1).min(v - 1), (u - 1).max(v - 1))) {
                return Err(perr(line, format!("duplicate edge {{{u}, {v}}}")));
            }
        }
        if count < m {
            return Err(perr(
                text.lines().count(),
                format!("expected {m} edges, found {count}"),
            ));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// One bit per unordered pair, in the input order of the st program.
    pub fn input_string(&self) -> InputString {
        InputString::new(
            unordered_pairs(self.n)
                .map(|(u, v)| usize::from(self.has_edge(u, v)))
                .collect(),
        )
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (u, v) in self.edges() {
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
        }
        l
    }

    pub fn st_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for (u, v) in self.edges() {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([self.s]);
        seen[self.s] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen[self.t]
    }

    pub fn is_connected(&self) -> bool {
        lambda2(self) > 1e-9
    }

    /// Renders the text format accepted by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.n, self.edges.len(), self.s + 1, self.t + 1);
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }
}

fn parse_numbers(line: &str, count: usize) -> std::result::Result<Vec<usize>, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(format!("expected {count} integers, found {} fields", fields.len()));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| format!("\"{f}\" is not a non-negative integer"))
        })
        .collect()
}

/// Unordered pairs `(u, v)`, `u < v`, in lexicographic order.
pub fn unordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |u| (u + 1..n).map(move |v| (u, v)))
}

/// The st-connectivity program on `n` vertices.
///
/// Input position `k` is the `k`-th unordered pair `{u < v}`. Its block holds
/// the two coordinates of the ordered pairs `(u, v)` and `(v, u)`, both
/// available exactly when the bit is 1. Column `(u, v)` of `A` is
/// `e_u − e_v` and `τ = e_s − e_t`.
pub fn build_st_span_program(n: usize, s: usize, t: usize) -> Result<SpanProgram> {
    if n < 2 {
        return Err(arg(format!("st-connectivity needs n >= 2, got {n}")));
    }
    if s >= n || t >= n || s == t {
        return Err(arg(format!("need distinct s, t < {n}, got s={s}, t={t}")));
    }
    let pairs: Vec<_> = unordered_pairs(n).collect();
    let dim_h = 2 * pairs.len();
    let mut a = DMatrix::zeros(n, dim_h);
    for (k, &(u, v)) in pairs.iter().enumerate() {
        a[(u, 2 * k)] = 1.0;
        a[(v, 2 * k)] = -1.0;
        a[(v, 2 * k + 1)] = 1.0;
        a[(u, 2 * k + 1)] = -1.0;
    }
    let mut tau = DVector::zeros(n);
    tau[s] = 1.0;
    tau[t] = -1.0;
    Ok(SpanProgram {
        n: pairs.len(),
        q: 2,
        dim_h,
        dim_v: n,
        blocks: (0..pairs.len()).map(|k| vec![2 * k, 2 * k + 1]).collect(),
        true_coords: Vec::new(),
        false_coords: Vec::new(),
        subspaces: (0..pairs.len())
            .map(|_| vec![DMatrix::zeros(2, 0), DMatrix::identity(2, 2)])
            .collect(),
        a,
        tau,
        tol: Tolerances::default(),
    })
}

/// `(e_s − e_t)ᵀ L⁺ (e_s − e_t)`, or `∞` when `s` and `t` are disconnected.
pub fn exact_resistance(g: &Graph) -> f64 {
    if !g.st_connected() {
        return f64::INFINITY;
    }
    let eig = g.laplacian().symmetric_eigen();
    let cutoff = 1e-10 * (g.n as f64);
    let mut b = DVector::zeros(g.n);
    b[g.s] = 1.0;
    b[g.t] = -1.0;
    eig.eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(&lam, _)| lam > cutoff)
        .map(|(&lam, phi)| phi.dot(&b).powi(2) / lam)
        .sum()
}

/// Second-smallest Laplacian eigenvalue (0 when `G` is disconnected).
pub fn lambda2(g: &Graph) -> f64 {
    let mut vals: Vec<f64> = g.laplacian().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let l2 = vals[1];
    if l2.abs() <= 1e-10 * (g.n as f64) {
        0.0
    } else {
        l2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceIdentity {
    pub w_plus: WitnessSize,
    pub resistance: f64,
    /// `|w_+ − R/2| / max(1, R/2)`, or 0 when both are infinite.
    pub deviation: f64,
    pub passed: bool,
}

/// Compares `w_+(x)` of the st program with half the Laplacian resistance.
pub fn witness_equals_half_resistance(g: &Graph, tol: f64) -> Result<ResistanceIdentity> {
    let p = build_st_span_program(g.n, g.s, g.t)?;
    let w_plus = p.positive_witness(&g.input_string())?.size;
    let resistance = exact_resistance(g);
    let deviation = match w_plus {
        WitnessSize::Infinite if resistance.is_infinite() => 0.0,
        WitnessSize::Finite(w) if resistance.is_finite() => {
            (w - resistance / 2.0).abs() / (resistance / 2.0).max(1.0)
        }
        _ => f64::INFINITY,
    };
    Ok(ResistanceIdentity {
        w_plus,
        resistance,
        deviation,
        passed: deviation <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    EffectiveGap,
    RealGap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::EffectiveGap => "effective-gap",
            Method::RealGap => "real-gap",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "effective-gap" => Ok(Method::EffectiveGap),
            "real-gap" => Ok(Method::RealGap),
            other => Err(arg(format!("unknown method \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceReport {
    pub exact: f64,
    pub estimate: f64,
    pub epsilon: f64,
    pub method: Method,
    pub mu: Option<f64>,
    pub queries: u64,
    pub lambda2: f64,
    pub rounds: usize,
    pub clamped: bool,
}

impl ResistanceReport {
    pub fn relative_error(&self) -> f64 {
        if self.exact.is_infinite() && self.estimate.is_infinite() {
            0.0
        } else {
            (self.estimate - self.exact).abs() / self.exact
        }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Disconnected,
    Witness(WitnessEstimator),
    Kappa(KappaEstimator),
}

/// Reusable resistance estimator: the spectral work for a graph is shared by
/// every seeded run.
#[derive(Debug, Clone)]
pub struct ResistanceEstimator {
    method: Method,
    mu: Option<f64>,
    n: usize,
    exact: f64,
    lambda2: f64,
    engine: Engine,
}

impl ResistanceEstimator {
    pub fn new(g: &Graph, method: Method, mu: Option<f64>) -> Result<Self> {
        let exact = exact_resistance(g);
        let l2 = lambda2(g);
        let p = build_st_span_program(g.n, g.s, g.t)?;
        let x = g.input_string();
        if method == Method::RealGap {
            match mu {
                None => return Err(arg("real-gap needs mu")),
                Some(m) if !(m > 0.0) => return Err(arg(format!("mu must be positive, got {m}"))),
                _ => {}
            }
        }
        let engine = if exact.is_infinite() {
            Engine::Disconnected
        } else {
            match method {
                Method::EffectiveGap => {
                    let bound = 2.0 * g.n as f64;
                    Engine::Witness(WitnessEstimator::new(&p.normalize()?, &x, Side::Positive, bound)?)
                }
                Method::RealGap => {
                    let mu = mu.unwrap_or_default();
                    if mu > l2 * (1.0 + 1e-12) {
                        return Err(arg(format!("mu must lie in (0, lambda2 = {l2}], got {mu}")));
                    }
                    let kappa = (g.n as f64 / mu).sqrt();
                    Engine::Kappa(KappaEstimator::new(&p, &x, kappa, Side::Positive)?)
                }
            }
        };
        Ok(Self {
            method,
            mu: if method == Method::RealGap { mu } else { None },
            n: g.n,
            exact,
            lambda2: l2,
            engine,
        })
    }

    pub fn exact(&self) -> f64 {
        self.exact
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<ResistanceReport> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(arg(format!("eps must lie in (0, 1), got {eps}")));
        }
        let (estimate, queries, rounds, clamped) = match &mut self.engine {
            Engine::Disconnected => (f64::INFINITY, 0, 0, false),
            Engine::Witness(est) => {
                let r = est.run(eps, rng, ledger)?;
                (2.0 * r.value / self.n as f64, r.queries, r.rounds, r.clamped)
            }
            Engine::Kappa(est) => {
                let r = est.run(eps, rng, ledger)?;
                (2.0 * r.value, r.queries, r.rounds, r.clamped)
            }
        };
        Ok(ResistanceReport {
            exact: self.exact,
            estimate,
            epsilon: eps,
            method: self.method,
            mu: self.mu,
            queries,
            lambda2: self.lambda2,
            rounds,
            clamped,
        })
    }
}

/// Estimates `R_{s,t}(G)` to relative accuracy `eps`. Disconnected `s`, `t`
/// give an infinite estimate without any queries.
pub fn estimate_resistance<R: Rng + ?Sized>(
    g: &Graph,
    eps: f64,
    method: Method,
    mu: Option<f64>,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<ResistanceReport> {
    ResistanceEstimator::new(g, method, mu)?.run(eps, rng, ledger)
}

/// Two stars on `n` vertices joined by the edge `{s, t}`, with `s = 0`,
/// `t = n−1`, `s`-leaves `1..n/2` and `t`-leaves `n/2..n−1`. Variant 1 adds
/// the cross edge `{i, j}` between an `s`-leaf `i` and a `t`-leaf `j`.
pub fn lower_bound_family(n: usize, variant: u8, cross: Option<(usize, usize)>) -> Result<Graph> {
    if n < 6 || n % 2 == 1 {
        return Err(arg(format!("n must be even and at least 6, got {n}")));
    }
    let (s, t, half) = (0, n - 1, n / 2);
    let mut edges: Vec<_> = (1..half).map(|i| (s, i)).collect();
    edges.extend((half..n - 1).map(|j| (j, t)));
    edges.push((s, t));
    match (variant, cross) {
        (0, None) => {}
        (1, Some((i, j))) => {
            if !(1..half).contains(&i) || !(half..n - 1).contains(&j) {
                return Err(arg(format!(
                    "cross edge needs an s-leaf in 1..{half} and a t-leaf in {half}..{}, got ({i}, {j})",
                    n - 1
                )));
            }
            edges.push((i, j));
        }
        (1, None) => return Err(arg("variant 1 needs the cross-edge leaves")),
        (0, Some(_)) => return Err(arg("variant 0 takes no cross edge")),
        (v, _) => return Err(arg(format!("variant must be 0 or 1, got {v}"))),
    }
    Graph::new(n, s, t, &edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCheck {
    pub n: usize,
    /// `max |M_Zᵀ M_Z − I|`.
    pub z_isometry_error: f64,
    /// `max |M_Yᵀ M_Y − I|`.
    pub y_isometry_error: f64,
    /// `max |M_Zᵀ M_Y − A/(2√(n−1))|`.
    pub product_error: f64,
    /// Largest `‖W M_Y k + M_Y k‖` over an orthonormal basis of `ker A`.
    pub kernel_error: f64,
    /// Largest `‖W M_Y k − M_Y k‖` over an orthonormal basis of `(ker A)^⊥`.
    pub complement_error: f64,
    /// Smallest `‖Π_Z M_Y k‖` over unit `k ∈ (ker A)^⊥`.
    pub complement_overlap: f64,
}

impl FactorizationCheck {
    pub fn passed(&self, identity_tol: f64, eigen_tol: f64) -> bool {
        self.z_isometry_error <= identity_tol
            && self.y_isometry_error <= identity_tol
            && self.product_error <= identity_tol
            && self.kernel_error <= eigen_tol
            && self.complement_error <= eigen_tol
    }
}

/// Builds `M_Z`, `M_Y` on `{0,1} × [n]³` and `W = (2Π_Z − I)(2Π_Y − I)`, and
/// measures how far they are from factorizing the st-connectivity `A`.
pub fn verify_reflection_factorization(n: usize) -> Result<FactorizationCheck> {
    if !(3..=6).contains(&n) {
        return Err(arg(format!("n must lie in 3..=6, got {n}")));
    }
    let p = build_st_span_program(n, 0, n - 1)?;
    let idx = |b: usize, u: usize, v: usize, w: usize| ((b * n + u) * n + v) * n + w;
    let dim = 2 * n * n * n;

    let zc = 1.0 / (2.0 * (n as f64 - 1.0)).sqrt();
    let mut mz = DMatrix::zeros(dim, n);
    for u in 0..n {
        for v in (0..n).filter(|&v| v != u) {
            mz[(idx(0, u, u, v), u)] += zc;
            mz[(idx(1, u, v, u), u)] += zc;
        }
    }
    let yc = std::f64::consts::FRAC_1_SQRT_2;
    let mut my = DMatrix::zeros(dim, p.dim_h);
    for (k, (a, b)) in unordered_pairs(n).enumerate() {
        for (col, (u, v)) in [(2 * k, (a, b)), (2 * k + 1, (b, a))] {
            my[(idx(0, u, u, v), col)] += yc;
            my[(idx(1, v, u, v), col)] -= yc;
        }
    }

    let id_n = DMatrix::<f64>::identity(n, n);
    let id_h = DMatrix::<f64>::identity(p.dim_h, p.dim_h);
    let z_isometry_error = linalg::max_abs(&(mz.transpose() * &mz - id_n));
    let y_isometry_error = linalg::max_abs(&(my.transpose() * &my - id_h));
    let scaled_a = &p.a / (2.0 * (n as f64 - 1.0).sqrt());
    let product_error = linalg::max_abs(&(mz.transpose() * &my - scaled_a));

    let rz = linalg::reflection(&(&mz * mz.transpose()));
    let ry = linalg::reflection(&(&my * my.transpose()));
    let w = rz * ry;
    let kernel = linalg::null_basis(&p.a, &p.tol);
    let complement = linalg::complement_basis(&kernel);
    let mk = &my * kernel;
    let mc = &my * complement;
    let kernel_error = max_column_norm(&(&w * &mk + &mk));
    let complement_error = max_column_norm(&(&w * &mc - &mc));
    let complement_overlap = linalg::singular_values(&(mz.transpose() * &mc))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(FactorizationCheck {
        n,
        z_isometry_error,
        y_isometry_error,
        product_error,
        kernel_error,
        complement_error,
        complement_overlap,
    })
}

fn max_column_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}
