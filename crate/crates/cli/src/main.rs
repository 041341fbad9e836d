use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use copula_pooling::config::{parse_grid, CopulaSpec, ModelSpec, ScenarioConfig};
use copula_pooling::experiments::{preset, run_to_dir, PRESETS};
use copula_pooling::pooling::{dedicated_total, find_thresholds, pooling_curve, CurveMethod, DEFAULT_SCAN_POINTS, DEFAULT_ZERO_TOL};
use copula_pooling::joint_demand::SUM_QUANTILE_TOL;
use copula_pooling::{calibrate_parameter, CopulaFamily, Error};

const THREADS_ENV: &str = "COPOOL_THREADS";

#[derive(Parser)]
#[command(name = "copool", version, about = "Dedicated versus pooled newsvendor inventory under copula dependence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print Kendall's tau of a copula.
    Tau {
        /// Copula JSON, e.g. '{"family":"frank","theta":-4.6}', or a file holding it.
        #[arg(long)]
        copula: String,
    },
    /// Print the parameter that gives a family the requested Kendall's tau.
    Calibrate {
        #[arg(long)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
    },
    /// Print dedicated and pooled stock and their difference at one margin ratio.
    Quantile {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Write the pooling-effect curve over a grid as CSV.
    Curve {
        #[command(flatten)]
        model: ModelArg,
        /// lo:hi:n
        #[arg(long)]
        grid: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Locate sign changes of the pooling effect; prints JSON.
    Thresholds {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
        scan_points: usize,
        #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
        zero_tol: f64,
    },
    /// Run a scenario grid from a config file or a named preset.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; defaults to the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the named presets.
    PresetList,
}

#[derive(Args)]
struct ModelArg {
    /// Model JSON {"m1":..,"m2":..,"copula":..}, or a file holding it.
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct McArgs {
    /// Use Monte Carlo with this many samples instead of quadrature.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "mc")]
    seed: u64,
}

impl McArgs {
    fn method(&self) -> CurveMethod {
        match self.mc {
            Some(n) => CurveMethod::MonteCarlo { n_samples: n, seed: self.seed },
            None => CurveMethod::Quadrature,
        }
    }
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Inline JSON when it looks like an object, otherwise a path to read.
fn json_arg(arg: &str) -> Result<String, Failure> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("cannot read '{arg}': {e}")))
    }
}

fn load_model(arg: &ModelArg) -> Result<copula_pooling::JointDemandModel, Failure> {
    Ok(ModelSpec::from_json(&json_arg(&arg.model)?)?.build()?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Tau { copula } => {
            let spec: CopulaSpec =
                serde_json::from_str(&json_arg(&copula)?).map_err(|e| Failure::Usage(format!("copula JSON: {e}")))?;
            println!("tau={:?}", spec.build()?.kendall_tau());
        }
        Command::Calibrate { family, tau } => {
            let family: CopulaFamily = family.parse()?;
            let c = calibrate_parameter(family, tau)?;
            match c.theta() {
                Some(theta) => println!("theta={theta:?}"),
                None => println!("copula={}", c.family().name()),
            }
        }
        Command::Quantile { model, t, mc } => {
            let m = load_model(&model)?;
            let dedicated = dedicated_total(&m, t)?;
            let est = match mc.method() {
                CurveMethod::MonteCarlo { n_samples, seed } => m.sum_quantile_mc(t, n_samples, seed)?,
                CurveMethod::Quadrature => m.sum_quantile(t, SUM_QUANTILE_TOL)?,
            };
            println!("dedicated={dedicated:?}");
            println!("pooled={:?}", est.point);
            println!("effect={:?}", est.point - dedicated);
            if let Some(n) = est.n_samples {
                println!("ci_halfwidth={:?}", est.ci_halfwidth);
                println!("n_samples={n}");
            }
        }
        Command::Curve { model, grid, out, mc } => {
            let m = load_model(&model)?;
            let curve = pooling_curve(&m, &parse_grid(&grid)?, mc.method())?;
            for p in &curve.missing {
                eprintln!("warning: t={:?} missing: {}", p.t, p.reason);
            }
            match out {
                Some(path) => fs::write(&path, curve.to_csv()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => print!("{}", curve.to_csv()),
            }
        }
        Command::Thresholds { model, scan_points, zero_tol } => {
            let m = load_model(&model)?;
            println!("{}", find_thresholds(&m, scan_points, zero_tol)?.to_json());
        }
        Command::Run { config, preset: name, out } => {
            let cfg = match (config, name) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    ScenarioConfig::from_json(&text)?
                }
                (None, Some(name)) => preset(&name)?,
                (None, None) => return Err(Failure::Usage("give --config or --preset".into())),
            };
            let dir = out
                .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
                .ok_or_else(|| Failure::Usage("no --out and the config has no output_path".into()))?;
            let res = run_to_dir(&cfg, &dir)?;
            let failed: Vec<&str> = res.results.iter().filter(|r| r.status() == "failed").map(|r| r.cell_id.as_str()).collect();
            println!(
                "cells={} failed={} checks_passed={} checks_failed={} checks_not_evaluable={} out={}",
                res.results.len(),
                failed.len(),
                res.checks.passed,
                res.checks.failed,
                res.checks.not_evaluable,
                dir.display()
            );
            if !failed.is_empty() {
                return Err(Failure::Numeric(format!("{} cell(s) failed: {}", failed.len(), failed.join(", "))));
            }
        }
        Command::PresetList => {
            for p in PRESETS {
                println!("{p}");
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
