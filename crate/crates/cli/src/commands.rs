use rand::seq::index::sample;
use serde_json::{json, Value};
use spanforge::algorithms::{DecisionPlan, Side, ThresholdSpec, WitnessEstimator};
use spanforge::qsim::QueryLedger;
use spanforge::resistance::{self, Graph, Method, ResistanceEstimator};
use spanforge::{InputString, SpanProgram, WitnessSize};

use crate::report::{num, Check, Provenance, Report};
use crate::verify::task_rng;
use crate::Failure;

fn check_eps(eps: f64) -> Result<(), Failure> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Failure::argument(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

pub fn resistance(
    echo: Value,
    text: &str,
    eps: f64,
    method: Method,
    mu: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<Report, Failure> {
    let g = Graph::parse(text)?;
    check_eps(eps)?;
    if method == Method::RealGap && mu.is_none() {
        return Err(Failure::argument("--method real-gap needs --mu"));
    }
    let mut estimator = ResistanceEstimator::new(&g, method, mu)?;
    let exact = estimator.exact();
    let n = g.n() as f64;

    let mut report = Report::new(echo);
    let identity = resistance::witness_equals_half_resistance(&g, 1e-8)?;
    let mut id_check = Check::new("witness-half-resistance", 1e-8, Provenance::Paper);
    id_check.deviation(identity.deviation);
    report.push(id_check);
    if exact.is_finite() {
        let mut range = Check::new("resistance-range", 1e-12, Provenance::Paper);
        range.deviation((2.0 / n - exact).max(exact - (n - 1.0)).max(0.0));
        report.push(range);
    }

    let mut runs = Vec::new();
    let mut within = 0;
    for trial in 0..trials {
        let mut rng = task_rng(seed, 0, trial);
        let mut ledger = QueryLedger::new();
        let r = estimator.run(eps, &mut rng, &mut ledger)?;
        let ok = r.relative_error() <= eps;
        within += u64::from(ok);
        report.queries += r.queries;
        runs.push(json!({
            "trial": trial,
            "estimate": num(r.estimate),
            "relative_error": num(r.relative_error()),
            "within_eps": ok,
            "queries": r.queries,
            "rounds": r.rounds,
            "clamped": r.clamped,
        }));
    }

    report.value("n", json!(g.n()));
    report.value("edges", json!(g.edge_count()));
    report.value("s", json!(g.s() + 1));
    report.value("t", json!(g.t() + 1));
    report.value(
        "exact",
        json!({ "value": num(exact), "provenance": "laplacian pseudo-inverse" }),
    );
    report.value("lambda2", num(resistance::lambda2(&g)));
    report.value("w_plus", num(identity.w_plus.value().unwrap_or(f64::INFINITY)));
    match method {
        Method::EffectiveGap => report.value("w_tilde_minus_bound", json!(2.0 * n)),
        Method::RealGap => {
            let mu = mu.unwrap_or_default();
            report.value("mu", json!(mu));
            report.value("kappa", num((n / mu).sqrt()));
        }
    }
    report.value("runs", Value::Array(runs));
    report.value("within_eps", json!(within));
    Ok(report)
}

/// A uniformly random string of Hamming weight `k`.
fn weighted_input<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> InputString {
    let mut bits = vec![0; n];
    for i in sample(rng, n, k) {
        bits[i] = 1;
    }
    InputString::new(bits)
}

pub fn or_demo(
    echo: Value,
    n: usize,
    t: usize,
    lambda: f64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<Report, Failure> {
    if n == 0 {
        return Err(Failure::argument("--n must be at least 1"));
    }
    if !(1..=n).contains(&t) {
        return Err(Failure::argument(format!("--t must lie in 1..={n}, got {t}")));
    }
    check_eps(eps)?;
    let p = SpanProgram::or(n)?;
    let normalized = p.normalize()?;
    let spec = ThresholdSpec::new(Side::Positive, lambda, 1.0 / t as f64, n as f64)?;
    let plan = DecisionPlan::new(&p, spec)?;

    let mut report = Report::new(echo);
    let mut size_check = Check::new("witness-size-reciprocal-weight", 1e-8, Provenance::Paper);
    let mut tilde_check = Check::new("w-tilde-minus-equals-n", 1e-8, Provenance::Paper);
    let mut success = Check::new("decision-success-probability", 0.0, Provenance::Derived)
        .note("exact probability of the correct bit on promise inputs, minus 2/3");
    let mut inputs = Vec::new();
    let mut w_tilde_max: f64 = 0.0;

    for k in 0..=n {
        let x = weighted_input(&mut task_rng(seed, 1, k as u64), n, k);
        let wr = p.witness_report(&x)?;
        let truth = if k == 0 { f64::INFINITY } else { 1.0 / k as f64 };
        size_check.deviation(match wr.w_plus {
            WitnessSize::Finite(w) => (w - truth).abs() / truth,
            WitnessSize::Infinite if k == 0 => 0.0,
            WitnessSize::Infinite => f64::INFINITY,
        });
        tilde_check.deviation((wr.w_tilde_minus - n as f64).abs() / n as f64);
        w_tilde_max = w_tilde_max.max(wr.w_tilde_minus);

        let f = k >= t;
        let promise = f || (k as f64) <= lambda * t as f64;
        let p_one = plan.one_probability(&x)?;
        let p_correct = if f { p_one } else { 1.0 - p_one };
        if promise {
            success.deviation((2.0 / 3.0 - p_correct).max(0.0));
        }
        let mut correct = 0;
        for trial in 0..trials {
            let mut rng = task_rng(seed, 2 + k, trial);
            let mut ledger = QueryLedger::new();
            correct += u64::from(plan.decide(&x, &mut rng, &mut ledger)? == f);
            report.queries += ledger.total();
        }

        let estimate = if k == 0 {
            Value::Null
        } else {
            let mut est = WitnessEstimator::new(&normalized, &x, Side::Positive, 1.0)?;
            let mut rng = task_rng(seed, 2 + n + 1 + k, 0);
            let mut ledger = QueryLedger::new();
            let r = est.run(eps, &mut rng, &mut ledger)?;
            report.queries += r.queries;
            let w = r.value / n as f64;
            json!({
                "w_plus": w,
                "weight": 1.0 / w,
                "rounds": r.rounds,
                "queries": r.queries,
            })
        };
        inputs.push(json!({
            "x": x.to_string(),
            "weight": k,
            "w_plus": num(truth),
            "f": u8::from(f),
            "in_promise": promise,
            "p_correct": p_correct,
            "empirical_correct": correct,
            "trials": trials,
            "estimate": estimate,
        }));
    }
    report.push(size_check);
    report.push(tilde_check);
    report.push(success);
    report.value("w_tilde_minus", json!(w_tilde_max));
    report.value(
        "plan",
        json!({
            "beta": plan.beta,
            "w_prime": plan.w_prime,
            "lambda_prime": plan.lambda_prime,
            "w_tilde_prime": plan.w_tilde_prime,
            "theta": plan.theta,
            "phase_eps": plan.eps,
            "phase_grid": plan.phase_grid,
            "p0": plan.gap.p0,
            "p1": plan.gap.p1,
            "amplitude_grid": plan.gap.grid_size,
            "queries_per_decision": plan.queries_per_run(),
            "clamped": plan.clamped,
        }),
    );
    report.value("inputs", Value::Array(inputs));
    Ok(report)
}
