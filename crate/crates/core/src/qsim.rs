//! Query-counted simulation of phase estimation and amplitude estimation.
//!
//! Nothing here evolves a state vector. Each primitive's outcome
//! distribution is written down in closed form from the Fejér kernel
//! `F_M(δ) = sin²(Mδ/2) / (M² sin²(δ/2))`, and outcomes are sampled from it.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{arg, Result};
use crate::spectral::{UnitaryDecomposition, QUERIES_PER_APPLICATION};

/// Running total of simulated input queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    total: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, queries: u64) {
        self.total = self.total.saturating_add(queries);
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// `F_M(δ)`: probability that `M`-point phase estimation of phase `φ` lands
/// on the grid point at `φ − δ`. Equals 1 at `δ ≡ 0 (mod 2π)`.
pub fn fejer(m: u64, delta: f64) -> f64 {
    let half = delta / 2.0;
    let s = half.sin();
    if s.abs() < 1e-12 {
        return 1.0;
    }
    let mf = m as f64;
    let num = (mf * half).sin();
    (num * num) / (mf * mf * s * s)
}

/// `M = 2^⌈log₂(π/(Θ√ε))⌉`: the smallest power of two with
/// `F_M(θ) ≤ ε` for every `Θ ≤ |θ| ≤ π`.
pub fn phase_grid_size(theta: f64, eps: f64) -> Result<u64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(arg(format!("Theta must lie in (0, pi), got {theta}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(arg(format!("eps must lie in (0, 1), got {eps}")));
    }
    let target = PI / (theta * eps.sqrt());
    let exp = target.log2().ceil().max(0.0);
    if exp >= 62.0 {
        return Err(arg("phase estimation grid exceeds 2^62 points"));
    }
    Ok(1u64 << exp as u32)
}

/// Queries for one phase-estimation run on an `M`-point grid: the controlled
/// powers `U, U², …, U^{M/2}` apply `U` a total of `M − 1` times.
pub fn phase_estimation_cost(m: u64) -> u64 {
    QUERIES_PER_APPLICATION * (m - 1)
}

/// Probability of outcome 0 when the state has spectral weights `(|θ|, w)`.
pub fn zero_outcome_probability(weights: &[(f64, f64)], m: u64) -> f64 {
    weights.iter().map(|&(t, w)| w * fejer(m, t)).sum()
}

#[derive(Debug, Clone)]
pub struct PhaseEstimationOutcome {
    pub grid_size: u64,
    pub distribution: Vec<f64>,
    pub sampled: usize,
    pub queries: u64,
}

/// Grid phase estimation of `dec` on `state`.
///
/// Outcome `k` stands for phase `2πk/M`. A real state's weight on a paired
/// block is split evenly between `+θ` and `−θ`.
pub fn phase_estimation<R: Rng + ?Sized>(
    dec: &UnitaryDecomposition,
    state: &nalgebra::DVector<f64>,
    theta: f64,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<PhaseEstimationOutcome> {
    if (state.norm() - 1.0).abs() > 1e-10 {
        return Err(arg(format!("state has norm {}, expected 1", state.norm())));
    }
    if state.len() != dec.dim() {
        return Err(arg("state dimension does not match the unitary"));
    }
    let m = phase_grid_size(theta, eps)?;
    if m > 1 << 24 {
        return Err(arg(format!("grid of {m} points is too large to tabulate")));
    }
    let weights = dec.spectral_weights(state);
    let mut distribution = vec![0.0; m as usize];
    for (k, slot) in distribution.iter_mut().enumerate() {
        let grid = 2.0 * PI * k as f64 / m as f64;
        *slot = weights
            .iter()
            .map(|&(t, w)| {
                if t == 0.0 || t == PI {
                    w * fejer(m, t - grid)
                } else {
                    0.5 * w * (fejer(m, t - grid) + fejer(m, -t - grid))
                }
            })
            .sum();
    }
    let sampled = sample(&distribution, rng);
    let queries = phase_estimation_cost(m);
    ledger.charge(queries);
    Ok(PhaseEstimationOutcome {
        grid_size: m,
        distribution,
        sampled,
        queries,
    })
}

fn sample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    match WeightedIndex::new(weights.iter().map(|w| w.max(0.0))) {
        Ok(d) => d.sample(rng),
        Err(_) => 0,
    }
}

/// Exact outcome distribution of `M`-point amplitude estimation for
/// success probability `p`: with `θ_p = arcsin √p`,
/// `P(y) = ½[F_M(2πy/M − 2θ_p) + F_M(2πy/M + 2θ_p)]`, estimate
/// `p̃ = sin²(πy/M)`.
pub fn amplitude_distribution(p: f64, m: u64) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(arg("amplitude estimation needs M >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(arg(format!("p must lie in [0, 1], got {p}")));
    }
    let tp = p.sqrt().asin();
    Ok((0..m)
        .map(|y| {
            let g = 2.0 * PI * y as f64 / m as f64;
            0.5 * (fejer(m, g - 2.0 * tp) + fejer(m, g + 2.0 * tp))
        })
        .collect())
}

pub fn amplitude_estimate_value(y: usize, m: u64) -> f64 {
    let s = (PI * y as f64 / m as f64).sin();
    s * s
}

/// `2π√(p(1−p))/M + π²/M²`.
pub fn amplitude_error_bound(p: f64, m: u64) -> f64 {
    let mf = m as f64;
    2.0 * PI * (p * (1.0 - p)).sqrt() / mf + PI * PI / (mf * mf)
}

#[derive(Debug, Clone)]
pub struct AmplitudeEstimate {
    pub grid_size: u64,
    pub p_tilde: f64,
    /// Exact probability that `|p̃ − p|` is within [`amplitude_error_bound`].
    pub success_bound: f64,
}

pub fn amplitude_estimation<R: Rng + ?Sized>(
    p: f64,
    m: u64,
    rng: &mut R,
) -> Result<AmplitudeEstimate> {
    let dist = amplitude_distribution(p, m)?;
    let y = sample(&dist, rng);
    Ok(AmplitudeEstimate {
        grid_size: m,
        p_tilde: amplitude_estimate_value(y, m),
        success_bound: amplitude_success_probability(p, m)?,
    })
}

pub fn amplitude_success_probability(p: f64, m: u64) -> Result<f64> {
    let dist = amplitude_distribution(p, m)?;
    let bound = amplitude_error_bound(p, m) + 1e-12;
    Ok(dist
        .iter()
        .enumerate()
        .filter(|&(y, _)| (amplitude_estimate_value(y, m) - p).abs() <= bound)
        .map(|(_, w)| w)
        .sum())
}

/// Parameters of the amplitude-gap test separating `p ≥ p0` from `p ≤ p1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeGap {
    pub p0: f64,
    pub p1: f64,
    /// `⌈4π√(p0+p1)/(p0−p1)⌉`.
    pub grid_size: u64,
    /// Declare "high" iff `p̃ ≥ threshold`.
    pub threshold: f64,
}

impl AmplitudeGap {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        if !(0.0 <= p1 && p1 < p0 && p0 <= 1.0) {
            return Err(arg(format!("need 0 <= p1 < p0 <= 1, got p0={p0}, p1={p1}")));
        }
        let gap = p0 - p1;
        let grid_size = (4.0 * PI * (p0 + p1).sqrt() / gap).ceil() as u64;
        let upper = p1
            + p1.sqrt() * gap / (std::f64::consts::SQRT_2 * (p0.sqrt() + p1.sqrt()))
            + gap * gap / (16.0 * (p0 + p1));
        Ok(Self {
            p0,
            p1,
            grid_size: grid_size.max(1),
            threshold: upper + gap / 12.0,
        })
    }

    /// Exact probability of answering "high" when the true value is `p`.
    pub fn high_probability(&self, p: f64) -> Result<f64> {
        let m = self.grid_size;
        let dist = amplitude_distribution(p.clamp(0.0, 1.0), m)?;
        Ok(dist
            .iter()
            .enumerate()
            .filter(|&(y, _)| amplitude_estimate_value(y, m) >= self.threshold)
            .map(|(_, w)| w)
            .sum())
    }
}

/// Samples the amplitude-gap test on success probability `p`.
///
/// Charges `grid_size` calls of `cost_per_call` queries each.
pub fn amplitude_gap_decide<R: Rng + ?Sized>(
    p: f64,
    p0: f64,
    p1: f64,
    cost_per_call: u64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<bool> {
    let gap = AmplitudeGap::new(p0, p1)?;
    let est = amplitude_estimation(p.clamp(0.0, 1.0), gap.grid_size, rng)?;
    ledger.charge(gap.grid_size.saturating_mul(cost_per_call));
    Ok(est.p_tilde >= gap.threshold)
}
