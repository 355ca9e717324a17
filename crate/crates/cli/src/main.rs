use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use spanforge::spanprog::random::RandomShape;
use spanforge::Error;

mod commands;
mod report;
mod verify;

use report::Report;

#[derive(Parser)]
#[command(name = "spanforge", version, about = "Span program simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    EffectiveGap,
    RealGap,
}

impl From<MethodArg> for spanforge::resistance::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::EffectiveGap => Self::EffectiveGap,
            MethodArg::RealGap => Self::RealGap,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the effective resistance between s and t of a graph file.
    Resistance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, value_enum, default_value = "effective-gap")]
        method: MethodArg,
        /// Lower bound on the spectral gap of the graph (real-gap only).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite: duality, spectral, scaling, szegedy, kappa,
    /// appendixB or all.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long)]
        trials: Option<u64>,
        /// Maxima for random programs: dimH,dimV,n,q.
        #[arg(long, default_value = "8,6,4,3")]
        dims: String,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold decisions and approximate counting with the OR program.
    OrDemo {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 30)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failed run with the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn argument(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } => 2,
            Error::Argument(_) | Error::Infeasible(_) => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_dims(s: &str) -> Result<RandomShape, Failure> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::argument(format!("--dims expects dimH,dimV,n,q; got \"{s}\"")))?;
    match parts.as_slice() {
        &[h, v, n, q] if h >= 1 && v >= 1 && n >= 1 && q >= 1 => Ok(RandomShape {
            max_dim_h: h,
            max_dim_v: v,
            max_n: n,
            max_q: q,
        }),
        _ => Err(Failure::argument(format!(
            "--dims expects four positive integers dimH,dimV,n,q; got \"{s}\""
        ))),
    }
}

fn run(command: Command) -> Result<(Report, Option<PathBuf>), Failure> {
    match command {
        Command::Resistance {
            graph,
            eps,
            method,
            mu,
            trials,
            seed,
            out,
        } => {
            let text = std::fs::read_to_string(&graph)
                .map_err(|e| Failure::parse(format!("cannot read {}: {e}", graph.display())))?;
            let echo = json!({
                "name": "resistance",
                "graph": graph.display().to_string(),
                "eps": eps,
                "method": spanforge::resistance::Method::from(method).to_string(),
                "mu": mu,
                "trials": trials,
                "seed": seed,
            });
            let report = commands::resistance(echo, &text, eps, method.into(), mu, trials, seed)?;
            Ok((report, out))
        }
        Command::Verify {
            suite,
            trials,
            dims,
            tolerance,
            seed,
            out,
        } => {
            let shape = parse_dims(&dims)?;
            if !(tolerance > 0.0) {
                return Err(Failure::argument("--tolerance must be positive"));
            }
            let echo = json!({
                "name": "verify",
                "suite": suite,
                "trials": trials,
                "dims": dims,
                "tolerance": tolerance,
                "seed": seed,
            });
            let cfg = verify::SuiteConfig {
                seed,
                trials,
                shape,
                tolerance,
            };
            let names: Vec<&str> = if suite == "all" {
                verify::SUITES.to_vec()
            } else if verify::SUITES.contains(&suite.as_str()) {
                vec![suite.as_str()]
            } else {
                return Err(Failure::argument(format!(
                    "unknown suite \"{suite}\"; expected one of {} or all",
                    verify::SUITES.join(", ")
                )));
            };
            let mut report = Report::new(echo);
            for name in names {
                for check in verify::run_suite(name, &cfg).expect("suite name checked") {
                    report.push(check);
                }
            }
            Ok((report, out))
        }
        Command::OrDemo {
            n,
            t,
            lambda,
            eps,
            trials,
            seed,
            out,
        } => {
            let echo = json!({
                "name": "or-demo",
                "n": n,
                "t": t,
                "lambda": lambda,
                "eps": eps,
                "trials": trials,
                "seed": seed,
            });
            Ok((commands::or_demo(echo, n, t, lambda, eps, trials, seed)?, out))
        }
    }
}

fn emit(report: &Report, out: Option<PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Failure::argument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli.command).and_then(|(report, out)| {
        emit(&report, out)?;
        Ok(report.passed)
    });
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
