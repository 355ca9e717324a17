//! Composite algorithms: threshold decisions, witness-size estimation by
//! interval shrinking, and phase-gap based estimation.
//!
//! Every randomized step samples an exact distribution, so for a fixed seed
//! the outcome and the query total are reproducible.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{arg, Error, Result};
use crate::qsim::{self, AmplitudeGap, QueryLedger};
use crate::spanprog::{InputString, SpanProgram, WitnessSize};
use crate::spectral::{self, UnitaryDecomposition};

pub use crate::spectral::Side;

/// The promise of a λ-approximate threshold problem.
///
/// `Negative`: `f(x) = 0` when `w_-(x) ≤ W_-`, `f(x) = 1` when
/// `w_-(x) ≥ W_-/λ`; `w_tilde_bound` bounds `w̃_+` on `f⁻¹(1)`.
/// `Positive`: `f(x) = 1` when `w_+(x) ≤ W_+`, `f(x) = 0` when
/// `w_+(x) ≥ W_+/λ`; `w_tilde_bound` bounds `w̃_-` on `f⁻¹(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub side: Side,
    pub lambda: f64,
    pub w_bound: f64,
    pub w_tilde_bound: f64,
}

impl ThresholdSpec {
    pub fn new(side: Side, lambda: f64, w_bound: f64, w_tilde_bound: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(arg(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        for (name, v) in [("w_bound", w_bound), ("w_tilde_bound", w_tilde_bound)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(arg(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            side,
            lambda,
            w_bound,
            w_tilde_bound,
        })
    }
}

fn clamp_open(v: f64, lo: f64, hi: f64, clamped: &mut bool) -> f64 {
    let margin = 1e-12;
    if v <= lo {
        *clamped = true;
        lo + margin
    } else if v >= hi {
        *clamped = true;
        hi - margin
    } else {
        v
    }
}

/// Everything a threshold decision needs that does not depend on `x`.
///
/// The program is scaled to `P^β` (which is normalized), the promise is
/// restated for `P^β` as `(W′, λ′, W̃′)`, and the phase-estimation and
/// amplitude-gap constants are derived from those.
#[derive(Debug, Clone)]
pub struct DecisionPlan {
    pub spec: ThresholdSpec,
    pub beta: f64,
    pub scaled: SpanProgram,
    pub w_prime: f64,
    pub lambda_prime: f64,
    pub w_tilde_prime: f64,
    pub theta: f64,
    pub eps: f64,
    pub phase_grid: u64,
    pub gap: AmplitudeGap,
    /// Set when a derived probability or angle had to be pulled back into
    /// its open range.
    pub clamped: bool,
    w0: DVector<f64>,
}

impl DecisionPlan {
    pub fn new(p: &SpanProgram, spec: ThresholdSpec) -> Result<Self> {
        let spec = ThresholdSpec::new(spec.side, spec.lambda, spec.w_bound, spec.w_tilde_bound)?;
        let n_plus = p.minimal_witness()?.n_plus;
        let (lam, w, wt) = (spec.lambda, spec.w_bound, spec.w_tilde_bound);
        let (beta, w_prime, lambda_prime, w_tilde_prime) = match spec.side {
            Side::Negative => (1.0 / w.sqrt(), 2.0, 2.0 * lam / (1.0 + lam), w * wt + 2.0),
            Side::Positive => {
                let c = w / (n_plus + w);
                (w.sqrt(), 1.0 + c, (1.0 + c) / (1.0 / lam + c), w * wt + 2.0)
            }
        };
        let scaled = p.scale(beta)?;
        let w0 = scaled.minimal_witness()?.w0;

        let mut clamped = false;
        let gap_frac = 1.0 - lambda_prime;
        let theta = clamp_open(
            (4.0 * gap_frac / (3.0 * w_prime * w_tilde_prime)).sqrt(),
            0.0,
            PI,
            &mut clamped,
        );
        let eps = clamp_open(gap_frac / (6.0 * w_prime), 0.0, 1.0, &mut clamped);
        let p0 = clamp_open(1.0 / w_prime, 0.0, 1.0, &mut clamped);
        let p1 = clamp_open(
            (1.0 + 2.0 * lambda_prime) / (3.0 * w_prime) + gap_frac / (6.0 * w_prime),
            0.0,
            p0,
            &mut clamped,
        );
        Ok(Self {
            spec,
            beta,
            scaled,
            w_prime,
            lambda_prime,
            w_tilde_prime,
            theta,
            eps,
            phase_grid: qsim::phase_grid_size(theta, eps)?,
            gap: AmplitudeGap::new(p0, p1)?,
            clamped,
            w0,
        })
    }

    /// Queries of one decision: `grid_size` calls to phase estimation.
    pub fn queries_per_run(&self) -> u64 {
        self.gap
            .grid_size
            .saturating_mul(qsim::phase_estimation_cost(self.phase_grid))
    }

    /// Probability that phase estimation of `w0^β` reads phase 0.
    pub fn zero_probability(&self, x: &InputString) -> Result<f64> {
        let dec = match self.spec.side {
            Side::Negative => spectral::build_u(&self.scaled, x)?,
            Side::Positive => spectral::build_u_prime(&self.scaled, x)?,
        };
        let weights = dec.spectral_weights(&self.w0);
        Ok(qsim::zero_outcome_probability(&weights, self.phase_grid).clamp(0.0, 1.0))
    }

    /// Exact probability of a "high" reading, i.e. of concluding that the
    /// witness size is at most `w_bound`.
    pub fn high_probability(&self, x: &InputString) -> Result<f64> {
        self.gap.high_probability(self.zero_probability(x)?)
    }

    /// Exact probability that the decision outputs `f(x) = 1`.
    pub fn one_probability(&self, x: &InputString) -> Result<f64> {
        let high = self.high_probability(x)?;
        Ok(match self.spec.side {
            Side::Negative => 1.0 - high,
            Side::Positive => high,
        })
    }

    /// Runs the decision and returns the bit `f(x)`.
    pub fn decide<R: Rng + ?Sized>(
        &self,
        x: &InputString,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<bool> {
        let p = self.zero_probability(x)?;
        let cost = qsim::phase_estimation_cost(self.phase_grid);
        let high = qsim::amplitude_gap_decide(p, self.gap.p0, self.gap.p1, cost, rng, ledger)?;
        Ok(match self.spec.side {
            Side::Negative => !high,
            Side::Positive => high,
        })
    }
}

/// Decides a λ-approximated threshold function with success probability at
/// least 2/3 on promise inputs. Outside the promise the bit is arbitrary.
pub fn decide_threshold<R: Rng + ?Sized>(
    p: &SpanProgram,
    x: &InputString,
    spec: ThresholdSpec,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<bool> {
    DecisionPlan::new(p, spec)?.decide(x, rng, ledger)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub value: f64,
    pub epsilon: f64,
    pub queries: u64,
    pub rounds: usize,
    /// `[e_min, e_max]` before each round (interval shrinking only).
    pub intervals: Vec<(f64, f64)>,
    pub clamped: bool,
}

/// `P(Binomial(k, p) > k/2)`.
pub fn majority_probability(p: f64, k: u64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = 0.0;
    let mut total = 0.0;
    for j in 0..=k {
        if j > 0 {
            ln_choose += ((k - j + 1) as f64).ln() - (j as f64).ln();
        }
        if 2 * j > k {
            total += (ln_choose + j as f64 * lp + (k - j) as f64 * lq).exp();
        }
    }
    total.min(1.0)
}

/// Smallest odd `k` with `exp(−k/18) ≤ δ`: majority of `k` runs that are
/// each right with probability ≥ 2/3 then errs with probability ≤ δ.
pub fn majority_repetitions(delta: f64) -> u64 {
    let k = (18.0 * (1.0 / delta).ln()).ceil().max(1.0) as u64;
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

fn ensure_normalized(p: &SpanProgram) -> Result<()> {
    let n_plus = p.minimal_witness()?.n_plus;
    if (n_plus - 1.0).abs() > 1e-8 {
        return Err(arg(format!(
            "span program must be normalized (N_+ = {n_plus})"
        )));
    }
    Ok(())
}

fn ensure_side(p: &SpanProgram, x: &InputString, side: Side) -> Result<()> {
    match side {
        Side::Positive => {
            if p.positive_witness(x)?.size == WitnessSize::Infinite {
                return Err(Error::Infeasible(format!("{x} has no positive witness")));
            }
        }
        Side::Negative => {
            if p.negative_witness(x)?.size == WitnessSize::Infinite {
                return Err(Error::Infeasible(format!("{x} has no negative witness")));
            }
        }
    }
    Ok(())
}

/// Witness-size estimation by shrinking an interval for `1/w(x)` in thirds.
///
/// Holds a cache of exact decision probabilities keyed by `(w, λ)`, so
/// repeated runs on the same input (different seeds) reuse the spectral work.
#[derive(Debug, Clone)]
pub struct WitnessEstimator {
    program: SpanProgram,
    input: InputString,
    side: Side,
    w_tilde_bound: f64,
    cache: HashMap<(u64, u64), (f64, u64, bool)>,
}

/// Round cap for interval shrinking.
pub const MAX_WITNESS_ROUNDS: usize = 400;

impl WitnessEstimator {
    /// `w_tilde_bound` bounds `w̃_-` (positive side) or `w̃_+` (negative side)
    /// over the inputs of interest.
    pub fn new(p: &SpanProgram, x: &InputString, side: Side, w_tilde_bound: f64) -> Result<Self> {
        ensure_normalized(p)?;
        ensure_side(p, x, side)?;
        if !(w_tilde_bound > 0.0 && w_tilde_bound.is_finite()) {
            return Err(arg("w_tilde_bound must be positive and finite"));
        }
        Ok(Self {
            program: p.clone(),
            input: x.clone(),
            side,
            w_tilde_bound,
            cache: HashMap::new(),
        })
    }

    fn decision(&mut self, w: f64, lambda: f64) -> Result<(f64, u64, bool)> {
        let key = (w.to_bits(), lambda.to_bits());
        if let Some(&hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let spec = ThresholdSpec::new(self.side, lambda, w, self.w_tilde_bound)?;
        let plan = DecisionPlan::new(&self.program, spec)?;
        let entry = (
            plan.high_probability(&self.input)?,
            plan.queries_per_run(),
            plan.clamped,
        );
        self.cache.insert(key, entry);
        Ok(entry)
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<EstimateResult> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(arg(format!("eps must lie in (0, 1), got {eps}")));
        }
        let start = ledger.total();
        let (mut e_max, mut e_min) = (1.0_f64, 0.0_f64);
        let mut intervals = Vec::new();
        let mut clamped = false;
        for i in 1..=MAX_WITNESS_ROUNDS {
            intervals.push((e_min, e_max));
            let e1 = 2.0 / 3.0 * e_max + 1.0 / 3.0 * e_min;
            let e0 = 1.0 / 3.0 * e_max + 2.0 / 3.0 * e_min;
            let (p_high, cost, c) = self.decision(1.0 / e1, e0 / e1)?;
            clamped |= c;
            let delta = (2.0_f64 / 3.0).powi(i as i32 - 1) / 9.0;
            let k = majority_repetitions(delta);
            ledger.charge(cost.saturating_mul(k));
            let says_small = rng.random_bool(majority_probability(p_high, k));
            if says_small {
                e_min = e0;
            } else {
                e_max = e1;
            }
            if e_max <= (1.0 + eps) * e_min {
                return Ok(EstimateResult {
                    value: 2.0 / (e_max + e_min),
                    epsilon: eps,
                    queries: ledger.total() - start,
                    rounds: i,
                    intervals,
                    clamped,
                });
            }
        }
        Err(Error::Numerical(format!(
            "interval shrinking did not terminate within {MAX_WITNESS_ROUNDS} rounds"
        )))
    }
}

/// Estimates `w_+(x)` (positive side) or `w_-(x)` (negative side) of a
/// normalized program to relative accuracy `eps`.
pub fn witness_estimate<R: Rng + ?Sized>(
    p: &SpanProgram,
    x: &InputString,
    eps: f64,
    side: Side,
    w_tilde_bound: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<EstimateResult> {
    WitnessEstimator::new(p, x, side, w_tilde_bound)?.run(eps, rng, ledger)
}

/// Per-run success probability of amplitude estimation is at least `8/π²`;
/// a median of `k` runs fails with probability at most
/// `exp(−2k(8/π² − 1/2)²) ≤ exp(−0.19k)`.
pub fn median_repetitions(delta: f64) -> u64 {
    let k = ((1.0 / delta).ln() / 0.19).ceil().max(1.0) as u64;
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

/// Cap on halvings of the phase-estimation accuracy.
pub const MAX_GAP_ITERATIONS: usize = 60;

/// Phase-gap based estimation of `1/‖Π_0 w0‖²` for a normalized program.
#[derive(Debug, Clone)]
pub struct GapEstimator {
    delta_lb: f64,
    weights: Vec<(f64, f64)>,
    samplers: HashMap<(u64, u64), WeightedIndex<f64>>,
}

impl GapEstimator {
    pub fn new(p: &SpanProgram, x: &InputString, delta_lb: f64, side: Side) -> Result<Self> {
        if !(delta_lb > 0.0 && delta_lb < PI) {
            return Err(arg(format!("deltaLB must lie in (0, pi), got {delta_lb}")));
        }
        ensure_normalized(p)?;
        ensure_side(p, x, side)?;
        let dec: UnitaryDecomposition = match side {
            Side::Negative => spectral::build_u(p, x)?,
            Side::Positive => spectral::build_u_prime(p, x)?,
        };
        let w0 = p.minimal_witness()?.w0;
        Ok(Self {
            delta_lb,
            weights: dec.spectral_weights(&w0),
            samplers: HashMap::new(),
        })
    }

    /// Median of `k` amplitude estimates of the zero-outcome probability of
    /// phase estimation at precision `deltaLB` and accuracy `pe_eps`.
    fn median_estimate<R: Rng + ?Sized>(
        &mut self,
        pe_eps: f64,
        p_min: f64,
        eps: f64,
        delta: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<f64> {
        let m_pe = qsim::phase_grid_size(self.delta_lb, pe_eps)?;
        let m_ae = (16.0 * PI / (eps * p_min.sqrt()))
            .max(PI * (8.0 / (eps * p_min)).sqrt())
            .ceil() as u64;
        let k = median_repetitions(delta);
        ledger.charge(
            k.saturating_mul(m_ae)
                .saturating_mul(qsim::phase_estimation_cost(m_pe)),
        );
        let sampler = match self.samplers.entry((m_pe, m_ae)) {
            std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let p = qsim::zero_outcome_probability(&self.weights, m_pe).clamp(0.0, 1.0);
                let dist = qsim::amplitude_distribution(p, m_ae)?;
                let idx = WeightedIndex::new(dist.iter().map(|w| w.max(0.0)))
                    .map_err(|e| Error::Numerical(format!("amplitude distribution: {e}")))?;
                v.insert(idx)
            }
        };
        let mut draws: Vec<f64> = (0..k)
            .map(|_| qsim::amplitude_estimate_value(sampler.sample(rng), m_ae))
            .collect();
        draws.sort_by(f64::total_cmp);
        Ok(draws[draws.len() / 2])
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<EstimateResult> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(arg(format!("eps must lie in (0, 1), got {eps}")));
        }
        let start = ledger.total();
        let mut eh = 0.5;
        for i in 1..=MAX_GAP_ITERATIONS {
            let delta = 0.5_f64.powi(i as i32) / 6.0;
            let p_tilde = self.median_estimate(eh, eh, eps, delta, rng, ledger)?;
            if p_tilde > 2.0 * (1.0 + eps / 4.0) * eh {
                let last = self.median_estimate(eh * eps / 8.0, eh, eps, 1.0 / 6.0, rng, ledger)?;
                return Ok(EstimateResult {
                    value: 1.0 / last,
                    epsilon: eps,
                    queries: ledger.total() - start,
                    rounds: i,
                    intervals: Vec::new(),
                    clamped: false,
                });
            }
            eh /= 2.0;
        }
        Err(Error::Numerical(format!(
            "accuracy halving did not terminate within {MAX_GAP_ITERATIONS} iterations"
        )))
    }
}

/// Estimates `w_-(x)` (via `U`) or `w_+(x)` (via `U′`) of a normalized
/// program, given a lower bound `deltaLB` on the phase gap at `x`.
pub fn gap_estimate<R: Rng + ?Sized>(
    p: &SpanProgram,
    x: &InputString,
    eps: f64,
    delta_lb: f64,
    side: Side,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<EstimateResult> {
    GapEstimator::new(p, x, delta_lb, side)?.run(eps, rng, ledger)
}

/// Phase-gap estimation on the normalized program, converted back to `P`.
#[derive(Debug, Clone)]
pub struct KappaEstimator {
    inner: GapEstimator,
    n_plus: f64,
    side: Side,
}

impl KappaEstimator {
    /// `kappa` must be at least `σ_max(A)/σ_min(A(x))`.
    pub fn new(p: &SpanProgram, x: &InputString, kappa: f64, side: Side) -> Result<Self> {
        if !(kappa > 2.0 / PI && kappa.is_finite()) {
            return Err(arg(format!("kappa must exceed 2/pi, got {kappa}")));
        }
        let n_plus = p.minimal_witness()?.n_plus;
        let normalized = p.normalize()?;
        Ok(Self {
            inner: GapEstimator::new(&normalized, x, 2.0 / kappa, side)?,
            n_plus,
            side,
        })
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<EstimateResult> {
        let mut r = self.inner.run(eps, rng, ledger)?;
        r.value = match self.side {
            Side::Positive => r.value * self.n_plus,
            Side::Negative => r.value / self.n_plus,
        };
        Ok(r)
    }
}

pub fn kappa_estimate<R: Rng + ?Sized>(
    p: &SpanProgram,
    x: &InputString,
    eps: f64,
    kappa: f64,
    side: Side,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<EstimateResult> {
    KappaEstimator::new(p, x, kappa, side)?.run(eps, rng, ledger)
}
