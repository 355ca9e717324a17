use spanforge::nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spanforge::linalg;
use spanforge::resistance::{self, Graph};
use spanforge::spanprog::random::{gaussian_matrix, random_program, RandomShape};
use spanforge::spectral::{self, Side};
use spanforge::{Error, SpanProgram, WitnessSize};

use crate::report::{Check, Provenance};

pub const SUITES: [&str; 6] = ["duality", "spectral", "scaling", "szegedy", "kappa", "appendixB"];

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: Option<u64>,
    pub shape: RandomShape,
    pub tolerance: f64,
}

impl SuiteConfig {
    fn trials(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }
}

/// Per-task generator: one seed, one stream per `(suite, trial)`.
pub fn task_rng(seed: u64, suite: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((suite as u64) << 32) | trial);
    rng
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Option<Vec<Check>> {
    let idx = SUITES.iter().position(|s| *s == name)?;
    let checks = match name {
        "duality" => duality(cfg, idx),
        "spectral" => spectral_suite(cfg, idx),
        "scaling" => scaling(cfg, idx),
        "szegedy" => szegedy(cfg, idx),
        "kappa" => kappa(cfg, idx),
        _ => appendix_b(),
    };
    Some(
        checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{name}/{}", c.name);
                c
            })
            .collect(),
    )
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Relative amount by which `lhs` exceeds the bound `rhs`.
fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).max(0.0) / rhs.abs().max(1.0)
}

fn errors_check() -> Check {
    Check::new("evaluations", 0.0, Provenance::Trivial)
}

fn record_error(errors: &mut Check, r: Result<(), Error>) {
    errors.deviation(if r.is_ok() { 0.0 } else { f64::INFINITY });
    if let Err(e) = r {
        errors.note.get_or_insert_with(|| e.to_string());
    }
}

fn duality(cfg: &SuiteConfig, idx: usize) -> Vec<Check> {
    let tol = cfg.tolerance;
    let mut neg = Check::new("w_minus*e_plus", tol, Provenance::Paper);
    let mut pos = Check::new("w_plus*e_minus", tol, Provenance::Paper);
    let mut errors = errors_check();
    for trial in 0..cfg.trials(200) {
        let p = random_program(&mut task_rng(cfg.seed, idx, trial), cfg.shape);
        for x in p.all_inputs() {
            let r = p.witness_report(&x).map(|r| {
                neg.deviation(match r.w_minus {
                    WitnessSize::Finite(w) => (w * r.e_plus - 1.0).abs(),
                    WitnessSize::Infinite => r.e_plus.abs(),
                });
                pos.deviation(match r.w_plus {
                    WitnessSize::Finite(w) => (w * r.e_minus - 1.0).abs(),
                    WitnessSize::Infinite => r.e_minus.abs(),
                });
            });
            record_error(&mut errors, r);
        }
    }
    vec![neg, pos, errors]
}

pub const THETAS: usize = 30;

fn spectral_suite(cfg: &SuiteConfig, idx: usize) -> Vec<Check> {
    let tol = cfg.tolerance;
    let mut fixed_neg = Check::new("fixed-overlap-negative", tol, Provenance::Paper);
    let mut fixed_pos = Check::new("fixed-overlap-positive", tol, Provenance::Paper);
    let mut gap_neg = Check::new("small-phase-negative", tol, Provenance::Paper);
    let mut gap_pos = Check::new("small-phase-positive", tol, Provenance::Paper);
    let mut errors = errors_check();
    for trial in 0..cfg.trials(200) {
        let raw = random_program(&mut task_rng(cfg.seed, idx, trial), cfg.shape);
        let Ok(p) = raw.normalize() else {
            errors.deviation(f64::INFINITY);
            continue;
        };
        for x in p.all_inputs() {
            let r = (|| -> spanforge::Result<()> {
                let w0 = p.minimal_witness()?.w0;
                let r = p.witness_report(&x)?;
                for (side, fixed, gap, w, wt) in [
                    (Side::Negative, &mut fixed_neg, &mut gap_neg, r.w_minus, r.w_tilde_plus),
                    (Side::Positive, &mut fixed_pos, &mut gap_pos, r.w_plus, r.w_tilde_minus),
                ] {
                    let dec = match side {
                        Side::Negative => spectral::build_u(&p, &x)?,
                        Side::Positive => spectral::build_u_prime(&p, &x)?,
                    };
                    let overlap = (dec.projector_small_phase(0.0)? * &w0).norm_squared();
                    fixed.deviation((overlap - w.reciprocal()).abs());
                    for k in 1..=THETAS {
                        let theta = 0.05 * k as f64;
                        let lhs = (dec.projector_small_phase(theta)? * &w0).norm_squared();
                        let rhs = theta * theta / 4.0 * wt + w.reciprocal();
                        gap.deviation((lhs - rhs).max(0.0));
                    }
                }
                Ok(())
            })();
            record_error(&mut errors, r);
        }
    }
    vec![fixed_neg, fixed_pos, gap_neg, gap_pos, errors]
}

pub const BETAS: [f64; 3] = [0.25, 1.0, 4.0];

fn scaling(cfg: &SuiteConfig, idx: usize) -> Vec<Check> {
    let tol = cfg.tolerance;
    let mut wp = Check::new("w_plus", tol, Provenance::Paper);
    let mut wm = Check::new("w_minus", tol, Provenance::Paper);
    let mut wtm = Check::new("w_tilde_minus-bound", tol, Provenance::Paper);
    let mut wtp = Check::new("w_tilde_plus-bound", tol, Provenance::Paper);
    let mut w0c = Check::new("minimal-witness", tol, Provenance::Paper);
    let mut errors = errors_check();
    for trial in 0..cfg.trials(50) {
        let p = random_program(&mut task_rng(cfg.seed, idx, trial), cfg.shape);
        for beta in BETAS {
            let r = (|| -> spanforge::Result<()> {
                let mw = p.minimal_witness()?;
                let n = mw.n_plus;
                let b2 = beta * beta;
                let pb = p.scale(beta)?;
                let mb = pb.minimal_witness()?;
                let mut expect = DVector::zeros(p.dim_h + 2);
                expect
                    .rows_mut(0, p.dim_h)
                    .copy_from(&(&mw.w0 * (beta / (b2 + n))));
                expect[p.dim_h] = n / (b2 + n);
                expect[p.dim_h + 1] = beta / (b2 + n).sqrt();
                w0c.deviation((&mb.w0 - expect).amax().max((mb.n_plus - 1.0).abs()));
                for x in p.all_inputs() {
                    let r = p.witness_report(&x)?;
                    let rb = pb.witness_report(&x)?;
                    match (r.w_plus, rb.w_plus) {
                        (WitnessSize::Finite(a), WitnessSize::Finite(b)) => {
                            wp.deviation(relative(b, a / b2 + b2 / (n + b2)));
                            wtm.deviation(excess(rb.w_tilde_minus, b2 * r.w_tilde_minus + 2.0));
                        }
                        (WitnessSize::Infinite, WitnessSize::Infinite) => {}
                        _ => wp.deviation(f64::INFINITY),
                    }
                    match (r.w_minus, rb.w_minus) {
                        (WitnessSize::Finite(a), WitnessSize::Finite(b)) => {
                            wm.deviation(relative(b, b2 * a + 1.0));
                            wtp.deviation(excess(rb.w_tilde_plus, r.w_tilde_plus / b2 + 2.0));
                        }
                        (WitnessSize::Infinite, WitnessSize::Infinite) => {}
                        _ => wm.deviation(f64::INFINITY),
                    }
                }
                Ok(())
            })();
            record_error(&mut errors, r);
        }
    }
    vec![wp, wm, wtm, wtp, w0c, errors]
}

/// Phases of `U` closer than this to 0 or π count as real eigenvalues.
const REAL_MARGIN: f64 = 1e-7;

fn random_projector<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DMatrix<f64> {
    let tol = spanforge::Tolerances::default();
    if rank == 0 {
        return DMatrix::zeros(dim, dim);
    }
    linalg::column_projector(&gaussian_matrix(rng, dim, rank), &tol)
}

fn szegedy(cfg: &SuiteConfig, idx: usize) -> Vec<Check> {
    let tol = cfg.tolerance;
    let mut phases = Check::new("phases", tol, Provenance::Paper);
    let mut plus = Check::new("plus-one-dimension", 0.5, Provenance::Paper);
    let mut minus = Check::new("minus-one-dimension", 0.5, Provenance::Paper);
    let mut errors = errors_check();
    let stol = spanforge::Tolerances::default();
    for trial in 0..cfg.trials(100) {
        let mut rng = task_rng(cfg.seed, idx, trial);
        let dim = rng.random_range(2..=cfg.shape.max_dim_h.max(2));
        let (ra, rb) = (rng.random_range(0..=dim), rng.random_range(0..=dim));
        let pa = random_projector(&mut rng, dim, ra);
        let pb = random_projector(&mut rng, dim, rb);
        let r = (|| -> spanforge::Result<()> {
            let u = linalg::reflection(&pa) * linalg::reflection(&pb);
            let dec = spectral::UnitaryDecomposition::new(u)?;
            let all = dec.phases();
            let mut complex: Vec<f64> = all
                .iter()
                .copied()
                .filter(|p| p.abs() > REAL_MARGIN && p.abs() < std::f64::consts::PI - REAL_MARGIN)
                .collect();
            complex.sort_by(f64::total_cmp);
            let predicted = spectral::discriminant(&pa, &pb)?.szegedy_phases(REAL_MARGIN / 4.0);
            phases.deviation(if complex.len() == predicted.len() {
                complex
                    .iter()
                    .zip(&predicted)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            });
            let id = DMatrix::<f64>::identity(dim, dim);
            let (qa, qb) = (&id - &pa, &id - &pb);
            let ones = all.iter().filter(|p| p.abs() <= REAL_MARGIN).count();
            let minus_ones = all
                .iter()
                .filter(|p| p.abs() >= std::f64::consts::PI - REAL_MARGIN)
                .count();
            let want_plus = spectral::intersection_dim(&pa, &pb, &stol)
                + spectral::intersection_dim(&qa, &qb, &stol);
            let want_minus = spectral::intersection_dim(&pa, &qb, &stol)
                + spectral::intersection_dim(&qa, &pb, &stol);
            plus.deviation((ones as f64 - want_plus as f64).abs());
            minus.deviation((minus_ones as f64 - want_minus as f64).abs());
            Ok(())
        })();
        record_error(&mut errors, r);
    }
    vec![phases, plus, minus, errors]
}

fn gap_deviation(gap: Option<f64>, bound: f64) -> f64 {
    gap.map_or(0.0, |g| (bound - g).max(0.0))
}

/// Random connected graph with `s = 0`, `t = n−1`, by rejection.
pub fn random_connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Graph {
    loop {
        let p = rng.random_range(0.3..0.9);
        let g = Graph::random(n, 0, n - 1, p, rng).expect("valid endpoints");
        if g.is_connected() {
            return g;
        }
    }
}

fn kappa(cfg: &SuiteConfig, idx: usize) -> Vec<Check> {
    let tol = cfg.tolerance;
    let mut gap_u = Check::new("gap-U", tol, Provenance::Paper);
    let mut gap_up = Check::new("gap-U-prime", tol, Provenance::Paper);
    let mut graph_gap = Check::new("graph-gap-U", tol, Provenance::Paper);
    let mut graph_gap_p = Check::new("graph-gap-U-prime", tol, Provenance::Paper);
    let mut ratio = Check::new("graph-sigma-ratio", tol, Provenance::Paper);
    let mut errors = errors_check();
    let trials = cfg.trials(100);
    let check_program = |p: &SpanProgram,
                         x: &spanforge::InputString,
                         gu: &mut Check,
                         gup: &mut Check|
     -> spanforge::Result<()> {
        let bound = match spectral::kappa_bound(p, x) {
            Ok(b) => b,
            Err(Error::Degenerate(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        gu.deviation(gap_deviation(spectral::build_u(p, x)?.phase_gap(), bound));
        if p.positive_witness(x)?.size.is_finite() {
            gup.deviation(gap_deviation(spectral::build_u_prime(p, x)?.phase_gap(), bound));
        }
        Ok(())
    };
    for trial in 0..trials {
        let p = random_program(&mut task_rng(cfg.seed, idx, trial), cfg.shape);
        for x in p.all_inputs() {
            let r = check_program(&p, &x, &mut gap_u, &mut gap_up);
            record_error(&mut errors, r);
        }
    }
    for trial in 0..trials {
        let mut rng = task_rng(cfg.seed, idx, trials + trial);
        let n = rng.random_range(3..=7);
        let g = random_connected_graph(&mut rng, n);
        let r = (|| -> spanforge::Result<()> {
            let p = resistance::build_st_span_program(n, g.s(), g.t())?;
            let x = g.input_string();
            let l2 = resistance::lambda2(&g);
            ratio.deviation((spectral::kappa_bound(&p, &x)? - 2.0 * (l2 / n as f64).sqrt()).abs());
            check_program(&p, &x, &mut graph_gap, &mut graph_gap_p)
        })();
        record_error(&mut errors, r);
    }
    vec![gap_u, gap_up, graph_gap, graph_gap_p, ratio, errors]
}

pub const APPENDIX_B_SIZES: [usize; 3] = [3, 4, 5];

fn appendix_b() -> Vec<Check> {
    let mut iso_z = Check::new("isometry-Z", 1e-12, Provenance::Trivial);
    let mut iso_y = Check::new("isometry-Y", 1e-12, Provenance::Derived);
    let mut product = Check::new("product", 1e-12, Provenance::Derived);
    let mut kernel = Check::new("kernel-to-minus-one", 1e-10, Provenance::Paper);
    let mut complement = Check::new("complement-to-plus-one", 1e-10, Provenance::Paper).note(
        "M_Z^T M_Y has singular values sqrt(n/(2(n-1))) < 1 on (ker A)^perp, so W rotates that image",
    );
    let mut rotation = Check::new("complement-rotation", 1e-10, Provenance::Derived);
    let mut errors = errors_check();
    for n in APPENDIX_B_SIZES {
        match resistance::verify_reflection_factorization(n) {
            Ok(c) => {
                iso_z.deviation(c.z_isometry_error);
                iso_y.deviation(c.y_isometry_error);
                product.deviation(c.product_error);
                kernel.deviation(c.kernel_error);
                complement.deviation(c.complement_error);
                let nf = n as f64;
                let predicted = 2.0 * ((nf - 2.0) / (2.0 * (nf - 1.0))).sqrt();
                rotation.deviation((c.complement_error - predicted).abs());
                errors.deviation(0.0);
            }
            Err(e) => record_error(&mut errors, Err(e)),
        }
    }
    vec![iso_z, iso_y, product, kernel, complement, rotation, errors]
}
