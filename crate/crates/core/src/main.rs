use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use dhif::bench::{
    compute_efficiencies, run_experiment_on, run_sweep, to_csv, to_json, BenchError, ExperimentConfig,
    OutputFormat, ScalingReport, TransportKind, REPORT_VERSION,
};
use dhif::dist::{read_roster, Comm, Socket};

/// Factor a periodic 3D variable-coefficient Poisson operator with HIF and
/// report accuracy, skeleton size, memory, timings and GMRES iterations.
///
/// `--n` and `--procs` accept comma-separated lists; every combination is
/// run and the efficiency columns are filled across the sweep.
#[derive(Parser, Debug)]
#[command(name = "dhif", version)]
struct Cli {
    /// key=value file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Points per dimension (power of two, at least 8).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// constant | random-high-contrast | checkerboard
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative ID precision.
    #[arg(long)]
    eps: Option<f64>,
    /// Process counts (powers of 8).
    #[arg(long, value_delimiter = ',')]
    procs: Vec<usize>,
    /// loopback | socket
    #[arg(long)]
    transport: Option<String>,
    /// One host:port per line, rank order.
    #[arg(long)]
    roster: Option<PathBuf>,
    /// This process's rank for socket runs; falls back to HIF_RANK.
    #[arg(long)]
    rank: Option<usize>,
    /// GMRES relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Exact mode, ε = 0.
    #[arg(long)]
    exact: bool,
    /// Compare against a dense direct solve (n ≤ 16 only).
    #[arg(long)]
    gather_oracle: bool,
    /// Seconds to wait for socket peers.
    #[arg(long, default_value_t = 60)]
    connect_timeout: u64,
}

fn base_config(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
    }
    let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
    set("field", cli.field.clone())?;
    set("seed", cli.seed.map(|v| v.to_string()))?;
    set("eps", cli.eps.map(|v| v.to_string()))?;
    set("transport", cli.transport.clone())?;
    set("tol", cli.tol.map(|v| v.to_string()))?;
    set("max-iter", cli.max_iter.map(|v| v.to_string()))?;
    set("format", cli.format.clone())?;
    if let Some(r) = &cli.roster {
        cfg.roster = Some(r.clone());
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.rank = match cli.rank {
        Some(r) => Some(r),
        None => match std::env::var("HIF_RANK") {
            Ok(v) => Some(v.parse().map_err(|_| BenchError::Config(format!("HIF_RANK = {v}")))?),
            Err(_) => cfg.rank,
        },
    };
    if cli.exact {
        cfg.eps = 0.0;
    }
    if cli.gather_oracle {
        cfg.gather_oracle = true;
    }
    Ok(cfg)
}

fn sweep(cli: &Cli, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let ns = if cli.n.is_empty() { vec![base.n] } else { cli.n.clone() };
    let ps = if cli.procs.is_empty() { vec![base.procs] } else { cli.procs.clone() };
    let mut out = Vec::new();
    for &n in &ns {
        for &procs in &ps {
            out.push(ExperimentConfig { n, procs, ..base.clone() });
        }
    }
    out
}

fn emit(cfg: &ExperimentConfig, report: &ScalingReport) -> Result<(), BenchError> {
    let text = match cfg.format {
        OutputFormat::Csv => to_csv(&report.rows),
        OutputFormat::Json => to_json(report)? + "\n",
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    for f in &report.failures {
        eprintln!("failed: n={} P={} [{}] {}", f.n, f.procs, f.stage, f.message);
    }
    Ok(())
}

fn run_socket(cli: &Cli, cfgs: &[ExperimentConfig]) -> Result<Option<ScalingReport>, BenchError> {
    let base = &cfgs[0];
    let roster_path = base.roster.as_ref().ok_or_else(|| BenchError::Config("socket transport needs --roster".into()))?;
    let rank = base.rank.ok_or_else(|| BenchError::Config("socket transport needs --rank or HIF_RANK".into()))?;
    let roster = read_roster(roster_path)?;
    let t = Socket::connect(&roster, rank, Duration::from_secs(cli.connect_timeout))?;
    let mut comm = Comm::new(Box::new(t));
    let mut rows = Vec::new();
    for cfg in cfgs {
        if let Some(row) = run_experiment_on(&mut comm, cfg)? {
            rows.push(row);
        }
    }
    comm.barrier()?;
    if rank != 0 {
        return Ok(None);
    }
    compute_efficiencies(&mut rows)?;
    Ok(Some(ScalingReport { version: REPORT_VERSION, rows, failures: Vec::new() }))
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    let base = base_config(cli)?;
    let cfgs = sweep(cli, &base);
    let report = match base.transport {
        TransportKind::Loopback => run_sweep(&cfgs),
        TransportKind::Socket => match run_socket(cli, &cfgs)? {
            Some(r) => r,
            None => return Ok(()),
        },
    };
    emit(&base, &report)?;
    if report.rows.is_empty() {
        return Err(BenchError::Config("no configuration completed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
