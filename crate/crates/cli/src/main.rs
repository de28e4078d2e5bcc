use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use quasinewton::bench::{compare, render_compare, run, Experiment, RunConfig};
use quasinewton::envelope::EnvelopeKind;

#[derive(Parser)]
#[command(name = "qnbench", version, about = "Quasi-Newton convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration over its seeds and write CSV traces.
    Run(RunArgs),
    /// Compare trace files against a theoretical envelope.
    Compare(CompareArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = Experiment::NAMES)]
    experiment: Option<String>,
    #[arg(long)]
    d: Option<String>,
    /// Log-sum-exp terms or logistic samples.
    #[arg(long, alias = "n")]
    m: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    /// sr1, bfgs, dfp or broyden:<tau>
    #[arg(long)]
    rule: Option<String>,
    /// greedy_broyden, greedy_sr1, greedy_bfgs, random_sphere or random_gaussian
    #[arg(long)]
    direction: Option<String>,
    #[arg(long)]
    scaled: Option<String>,
    /// Comma list and/or ranges, e.g. `0..200`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    data_seed: Option<String>,
    #[arg(long)]
    m_const: Option<String>,
    #[arg(long)]
    warm_start_steps: Option<String>,
    #[arg(long)]
    warm_start_grad: Option<String>,
    /// Update count for matrix_approx (default d).
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    grad_tol: Option<String>,
    #[arg(long)]
    lambda_tol: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    envelope: Option<String>,
    #[arg(long)]
    allow_expensive: bool,
    #[arg(long)]
    timing: bool,
    /// Any other config key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Envelope kind, e.g. sr1_matrix or bfgs_matrix.
    #[arg(long)]
    envelope: String,
    /// Multiplier applied to the envelope before flagging violations.
    #[arg(long, default_value_t = 1.0)]
    slack: f64,
    /// Additive allowance relative to the initial measured value.
    #[arg(long, default_value_t = 1e-9)]
    floor: f64,
    files: Vec<PathBuf>,
}

fn build_config(args: &RunArgs) -> quasinewton::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let named = [
        ("experiment", &args.experiment),
        ("d", &args.d),
        ("m", &args.m),
        ("gamma", &args.gamma),
        ("kappa", &args.kappa),
        ("rule", &args.rule),
        ("direction", &args.direction),
        ("scaled", &args.scaled),
        ("seeds", &args.seeds),
        ("data_seed", &args.data_seed),
        ("m_const", &args.m_const),
        ("warm_start_steps", &args.warm_start_steps),
        ("warm_start_grad", &args.warm_start_grad),
        ("steps", &args.steps),
        ("max_iters", &args.max_iters),
        ("grad_tol", &args.grad_tol),
        ("lambda_tol", &args.lambda_tol),
        ("dataset", &args.dataset),
        ("output", &args.output),
        ("envelope", &args.envelope),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            cfg.apply(key, v)?;
        }
    }
    if args.allow_expensive {
        cfg.allow_expensive = true;
    }
    if args.timing {
        cfg.timing = true;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| quasinewton::Error::Config(format!("--set expects key=value, got `{kv}`")))?;
        cfg.apply(k, v)?;
    }
    Ok(cfg)
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n");
    let _ = Cli::command().print_help();
    ExitCode::from(2)
}

fn cmd_run(args: &RunArgs) -> ExitCode {
    let cfg = match build_config(args).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for path in &report.traces {
        println!("{}", path.display());
    }
    println!("{}", report.summary.display());
    let mut failed = false;
    for (seed, msg) in report.failures() {
        eprintln!("seed {seed}: {msg}");
        failed = true;
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_compare(args: &CompareArgs) -> ExitCode {
    let kind = match EnvelopeKind::parse(&args.envelope) {
        Ok(k) => k,
        Err(e) => return usage_error(&e.to_string()),
    };
    match compare(&args.files, kind, args.slack, args.floor) {
        Ok(report) => {
            print!("{}", render_compare(&report));
            if report.deterministic && report.violations() > 0 {
                eprintln!("{} steps violate a deterministic bound", report.violations());
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
    }
}
