use std::path::PathBuf;
use std::process::ExitCode;

use chronodet::config::{Format, SuiteConfig, SEED_ENV, SUITES};
use chronodet::{run_suite, SuiteError};
use clap::Parser;

/// Runs verification suites and writes a JSON or CSV report. Flags mirror
/// the keys of the JSON config file and take precedence over it.
#[derive(Debug, Parser)]
#[command(name = "verify", version, after_help = after_help())]
struct Cli {
    /// Suite to run.
    suite: String,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long = "epsilon-reg")]
    epsilon_reg: Option<f64>,
    #[arg(long = "scale-beta")]
    scale_beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
    #[arg(long = "uv-omegas", value_delimiter = ',')]
    uv_omegas: Option<Vec<f64>>,
    #[arg(long = "uv-bound-omegas", value_delimiter = ',')]
    uv_bound_omegas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long = "sector-L")]
    sector_l: Option<usize>,
    #[arg(long = "sector-beta")]
    sector_beta: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long = "lambda-fractions", value_delimiter = ',')]
    lambda_fractions: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    #[arg(long)]
    slack: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn after_help() -> String {
    format!(
        "Suites: {}\nExit codes: 0 all assertions pass, 1 an assertion failed, 2 configuration or domain error.\nThe seed defaults to ${SEED_ENV}, then to 0.",
        SUITES.join(", ")
    )
}

macro_rules! overlay {
    ($cfg:ident, $cli:ident, $($field:ident),*) => {
        $(if let Some(v) = $cli.$field { $cfg.$field = v; })*
    };
}

fn build_config(cli: Cli) -> Result<SuiteConfig, SuiteError> {
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|e| SuiteError::Config(format!("{SEED_ENV}={v}: {e}")))?,
        ),
        Err(_) => None,
    };
    let mut cfg = SuiteConfig::load(cli.config.as_deref(), env_seed)?;
    cfg.suite = cli.suite;
    overlay!(
        cfg,
        cli,
        seed,
        model,
        l,
        beta,
        trials,
        n_max,
        scale_beta,
        omegas,
        uv_omegas,
        uv_bound_omegas,
        betas,
        epsilons,
        sector_l,
        sector_beta,
        coupling,
        lambda_fractions,
        h,
        orders,
        slack,
        format
    );
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.epsilon_reg.is_some() {
        cfg.epsilon_reg = cli.epsilon_reg;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, SuiteError> {
    let cfg = build_config(cli)?;
    let report = run_suite(&cfg)?;
    match &cfg.out {
        Some(path) => report.write_atomic(path, cfg.format)?,
        None => {
            let bytes = report.render(cfg.format)?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    for check in report.failures() {
        eprintln!(
            "FAIL {} {} [{}]: observed {:e}, bound {:e}",
            check.suite,
            check.check,
            check.parameter,
            check.observed,
            check.bound.unwrap_or(f64::NAN)
        );
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("verify: {e}");
            if matches!(e, SuiteError::Config(_)) {
                eprintln!("usage: verify <SUITE> [OPTIONS]; see `verify --help`");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
