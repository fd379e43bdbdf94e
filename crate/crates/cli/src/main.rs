use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jdp_bandit::harness::{self, fit_loglog_slope, mean_final_regret, Experiment, RunConfig};
use jdp_bandit::noise::{MechanismKind, NoiseMechanism};
use jdp_bandit::Error;

/// Private linear-bandit simulator.
#[derive(Parser, Debug)]
#[command(name = "jdp-bandit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run an experiment batch and write its regret traces as CSV.
    Run(RunArgs),
    /// Print the derived parameters of a mechanism.
    Params(ParamsArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// exp1 | exp2 | exp3 | single
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Dimension, or a comma-separated grid for exp1.
    #[arg(long)]
    d: Option<String>,
    /// Actions per round (default d²).
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// NonPrivate | GaussianShifted | WishartShifted | WishartUnshifted
    #[arg(long)]
    mechanism: Option<String>,
    /// Forced suboptimality gap; 0 disables it, "both" runs 0 and 0.1.
    #[arg(long)]
    gap: Option<String>,
    /// pm1 | gaussian | gaussian:<sigma>
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long = "sweep-points")]
    sweep_points: Option<String>,
}

#[derive(Args, Debug)]
struct ParamsArgs {
    #[arg(long, default_value = "GaussianShifted")]
    mechanism: String,
    #[arg(long, default_value_t = 200_000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Defaults to 1/n.
    #[arg(long)]
    alpha: Option<f64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn build_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_kv_str(&text)?
        }
        None => RunConfig::default(),
    };
    // The experiment resets defaults, so it goes first.
    if let Some(exp) = &args.experiment {
        cfg.set("experiment", exp)?;
    }
    let overrides = [
        ("n", &args.n),
        ("d", &args.d),
        ("k", &args.k),
        ("eps", &args.eps),
        ("delta", &args.delta),
        ("mechanism", &args.mechanism),
        ("gap", &args.gap),
        ("reward", &args.reward),
        ("alpha", &args.alpha),
        ("rho", &args.rho),
        ("repeats", &args.repeats),
        ("seed", &args.seed),
        ("out", &args.out),
        ("checkpoints", &args.checkpoints),
        ("sweep-points", &args.sweep_points),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = build_config(&args)?;
    let traces = harness::run_experiment(&cfg)?;
    for tr in &traces {
        for line in tr.metadata_lines() {
            eprintln!("{line}");
        }
        if let Some(r) = tr.final_regret() {
            eprintln!("final_regret={r}");
        }
    }
    if cfg.experiment == Experiment::Exp1RegretVsDim {
        let points: Vec<(f64, f64)> = cfg
            .d
            .iter()
            .filter_map(|&d| {
                let mean = mean_final_regret(traces.iter().filter(|t| t.d == d))?;
                Some((d as f64, mean))
            })
            .collect();
        if let Ok(slope) = fit_loglog_slope(&points) {
            eprintln!("loglog_slope={slope}");
        }
    }
    match &cfg.out {
        Some(path) => harness::write_csv_file(&traces, path)?,
        None => harness::write_csv(&traces, std::io::stdout().lock())
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    let failed = traces.iter().filter(|t| t.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} runs failed; see error rows", traces.len());
    }
    Ok(())
}

fn params(args: ParamsArgs) -> Result<(), Failure> {
    let kind: MechanismKind = args.mechanism.parse()?;
    let alpha = args.alpha.unwrap_or(1.0 / args.n.max(2) as f64);
    let mech = if kind.is_private() {
        NoiseMechanism::private(
            kind,
            args.eps,
            args.delta,
            args.d,
            2f64.sqrt(),
            args.n,
            alpha,
        )?
    } else {
        NoiseMechanism::non_private(1.0, args.d, args.n)?
    };
    for (k, v) in mech.metadata() {
        println!("{k}={v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Params(a) => params(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
