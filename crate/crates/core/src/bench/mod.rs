//! Experiment runner: assemble, factor, measure `e_s`, time one apply and
//! run preconditioned GMRES, then tabulate rows as CSV or JSON.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::dense::ldlt;
use crate::dist::{
    apply_inverse_distributed, factorize_distributed, run_loopback, Comm, CommStats, DistError,
    LocalFactorization, Phase, ProcessTree, Dec, Enc,
};
use crate::geometry::{assemble_stencil, CoefficientField, FieldKind, GeometryError, GridSpec, SparseSymMatrix};
use crate::hif::{factorize, HifError};
use crate::krylov::{gaussian_vector, gmres, solve_error, KrylovError, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Exact CSV header; changing it is a schema change.
pub const CSV_HEADER: &str = "N,P,e_s,sigma_L,m_f,t_f,ES_f,t_s,ES_s,n_iter,msgs,bytes";
pub const REPORT_VERSION: u32 = 1;
/// Largest grid for which the dense oracle is attempted.
pub const ORACLE_MAX_N: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hif(#[from] HifError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("no reference row for N = {0}")]
    MissingReference(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    Loopback,
    Socket,
}

impl std::str::FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loopback" => Ok(TransportKind::Loopback),
            "socket" => Ok(TransportKind::Socket),
            other => Err(format!("unknown transport '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub field: FieldKind,
    pub seed: u64,
    pub eps: f64,
    pub procs: usize,
    pub transport: TransportKind,
    pub roster: Option<PathBuf>,
    pub rank: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub gather_oracle: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 16,
            field: FieldKind::Constant,
            seed: 1,
            eps: 1e-3,
            procs: 1,
            transport: TransportKind::Loopback,
            roster: None,
            rank: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            out: None,
            format: OutputFormat::Csv,
            gather_oracle: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| BenchError::Config(format!("{key} = {v}: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, BenchError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(BenchError::Config(format!("{key} = {v}: expected a boolean"))),
    }
}

impl ExperimentConfig {
    /// Sets one `key = value` pair; keys mirror the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "n" => self.n = parse(&key, v)?,
            "field" => self.field = parse(&key, v)?,
            "seed" => self.seed = parse(&key, v)?,
            "eps" => self.eps = parse(&key, v)?,
            "procs" => self.procs = parse(&key, v)?,
            "transport" => self.transport = parse(&key, v)?,
            "roster" => self.roster = Some(PathBuf::from(v)),
            "rank" => self.rank = Some(parse(&key, v)?),
            "tol" => self.tol = parse(&key, v)?,
            "max-iter" => self.max_iter = parse(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = parse(&key, v)?,
            "exact" => {
                if parse_bool(&key, v)? {
                    self.eps = 0.0;
                }
            }
            "gather-oracle" => self.gather_oracle = parse_bool(&key, v)?,
            other => return Err(BenchError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, BenchError> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<GridSpec, BenchError> {
        Ok(GridSpec::new(self.n)?)
    }

    /// Checks grid and process-tree preconditions without running anything.
    pub fn validate(&self) -> Result<(), BenchError> {
        let spec = self.spec()?;
        let tree = ProcessTree::new(self.procs)?;
        crate::dist::Ownership::new(&spec, &tree)?;
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return Err(BenchError::Config(format!("eps = {} outside [0, 1)", self.eps)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(BenchError::Config(format!("tol = {} outside (0, 1)", self.tol)));
        }
        if self.transport == TransportKind::Socket && self.roster.is_none() {
            return Err(BenchError::Config("socket transport needs a roster".into()));
        }
        Ok(())
    }
}

/// One row of a scaling table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub procs: usize,
    pub field: FieldKind,
    pub eps: f64,
    pub e_s: f64,
    pub sigma_l: usize,
    /// Largest per-rank stored factor, GB.
    pub m_f: f64,
    /// Largest per-rank level-matrix footprint while factoring, GB.
    pub m_transient: f64,
    pub t_f: f64,
    pub es_f: Option<f64>,
    pub t_s: f64,
    pub es_s: Option<f64>,
    pub ew_f: Option<f64>,
    pub ew_s: Option<f64>,
    pub n_iter: usize,
    pub converged: bool,
    /// Messages and bytes sent by all ranks while factoring.
    pub msgs: u64,
    pub bytes: u64,
    /// Whether this row is the efficiency reference of its group.
    pub reference: bool,
    /// Relative distance to a dense direct solve, when requested.
    pub oracle_error: Option<f64>,
    pub comm: Option<CommStats>,
}

/// A configuration that did not produce a row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRecord {
    pub n: usize,
    pub procs: usize,
    pub field: FieldKind,
    pub eps: f64,
    pub stage: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub version: u32,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<FailureRecord>,
}

impl BenchError {
    /// Stage of the pipeline the error came from.
    pub fn stage(&self) -> &'static str {
        match self {
            BenchError::Config(_) | BenchError::MissingReference(_) => "config",
            BenchError::Geometry(_) => "assemble",
            BenchError::Hif(_) => "factorize",
            BenchError::Dist(_) => "distributed",
            BenchError::Krylov(_) => "solve",
            BenchError::Io(_) | BenchError::Json(_) => "output",
        }
    }
}

/// Runs every configuration in process, then fills the efficiency columns.
/// A failing configuration becomes a failure record instead of a row.
pub fn run_sweep(cfgs: &[ExperimentConfig]) -> ScalingReport {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cfg in cfgs {
        match run_experiment(cfg) {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(FailureRecord {
                n: cfg.n,
                procs: cfg.procs,
                field: cfg.field,
                eps: cfg.eps,
                stage: e.stage(),
                message: e.to_string(),
            }),
        }
    }
    if !rows.is_empty() {
        compute_efficiencies(&mut rows).expect("non-empty rows always have a reference");
    }
    ScalingReport { version: REPORT_VERSION, rows, failures }
}

fn gb(bytes: usize) -> f64 {
    bytes as f64 / 1e9
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn problem(cfg: &ExperimentConfig) -> Result<(GridSpec, SparseSymMatrix), BenchError> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let field = CoefficientField::new(&spec, cfg.field, cfg.seed);
    let a = assemble_stencil(&spec, &field)?;
    Ok((spec, a))
}

/// `‖F⁻¹b − A⁻¹b‖/‖A⁻¹b‖` against a dense LDLᵀ of `A`.
fn dense_oracle(
    a: &SparseSymMatrix,
    seed: u64,
    mut apply_finv: impl FnMut(&[f64]) -> Result<Vec<f64>, BenchError>,
) -> Result<f64, BenchError> {
    let n = a.dim();
    let f = ldlt(&a.to_dense()).map_err(HifError::from)?;
    let b = gaussian_vector(n, seed);
    let mut want = b.clone();
    f.solve_in_place(&mut want).map_err(HifError::from)?;
    let got = apply_finv(&b)?;
    let diff: Vec<f64> = got.iter().zip(&want).map(|(x, y)| x - y).collect();
    Ok(norm(&diff) / norm(&want))
}

/// Runs one configuration. `P = 1` uses the sequential code; larger `P`
/// runs the distributed code on loopback ranks in this process.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportRow, BenchError> {
    if cfg.transport == TransportKind::Socket {
        return Err(BenchError::Config("socket runs go through run_experiment_on".into()));
    }
    let (spec, a) = problem(cfg)?;
    if cfg.procs == 1 {
        return run_sequential(cfg, &spec, &a);
    }
    let out = run_loopback(cfg.procs, |comm| {
        run_distributed(comm, cfg, &spec, &a).map_err(|e| match e {
            BenchError::Dist(d) => d,
            other => DistError::Protocol(other.to_string()),
        })
    })?;
    out.into_iter()
        .find_map(|(row, _)| row)
        .ok_or_else(|| BenchError::Config("rank 0 produced no row".into()))
}

/// Runs one configuration on an already connected communicator. Rank 0
/// returns the row.
pub fn run_experiment_on(comm: &mut Comm, cfg: &ExperimentConfig) -> Result<Option<ReportRow>, BenchError> {
    let (spec, a) = problem(cfg)?;
    if comm.size() != cfg.procs {
        return Err(BenchError::Config(format!("procs = {} but {} ranks are connected", cfg.procs, comm.size())));
    }
    run_distributed(comm, cfg, &spec, &a)
}

fn run_sequential(cfg: &ExperimentConfig, spec: &GridSpec, a: &SparseSymMatrix) -> Result<ReportRow, BenchError> {
    let t0 = Instant::now();
    let f = factorize(a, spec, cfg.eps)?;
    let t_f = t0.elapsed().as_secs_f64();
    let nd = spec.num_dofs();
    let e_s = solve_error(|v| Ok::<_, HifError>(a.matvec(v)), |v| f.apply_inverse(v), nd, cfg.seed + 1)?;
    let probe = gaussian_vector(nd, cfg.seed + 3);
    let t1 = Instant::now();
    f.apply_inverse(&probe)?;
    let t_s = t1.elapsed().as_secs_f64();
    let rhs = gaussian_vector(nd, cfg.seed + 2);
    let (_, rep) = gmres(|v| Ok::<_, HifError>(a.matvec(v)), |v| f.apply_inverse(v), &rhs, cfg.tol, cfg.max_iter)?;
    let oracle_error = if cfg.gather_oracle && cfg.n <= ORACLE_MAX_N {
        Some(dense_oracle(a, cfg.seed + 4, |b| Ok(f.apply_inverse(b)?))?)
    } else {
        None
    };
    Ok(ReportRow {
        n: cfg.n,
        procs: 1,
        field: cfg.field,
        eps: cfg.eps,
        e_s,
        sigma_l: f.root_size(),
        m_f: gb(f.stored_bytes()),
        m_transient: gb(8 * f.peak_level_entries),
        t_f,
        es_f: None,
        t_s,
        es_s: None,
        ew_f: None,
        ew_s: None,
        n_iter: rep.iterations,
        converged: rep.converged,
        msgs: 0,
        bytes: 0,
        reference: false,
        oracle_error,
        comm: None,
    })
}

/// `F⁻¹v` for a replicated `v`, replicated on every rank.
fn replicated_inverse(comm: &mut Comm, lf: &LocalFactorization, v: &[f64]) -> Result<Vec<f64>, DistError> {
    let y = apply_inverse_distributed(comm, lf, v)?;
    let me = comm.rank();
    let owned: Vec<usize> = (0..y.len()).filter(|&i| lf.holder(0, i) == me).collect();
    let vals: Vec<f64> = owned.iter().map(|&i| y[i]).collect();
    let mut e = Enc::new();
    e.usizes(&owned).f64s(&vals);
    let mut out = vec![0.0; y.len()];
    for msg in comm.all_gather(e.finish())? {
        let mut d = Dec::new(&msg);
        let idx = d.usizes()?;
        for (i, x) in idx.into_iter().zip(d.f64s()?) {
            out[i] = x;
        }
    }
    Ok(out)
}

fn timed_max(comm: &mut Comm, t: Instant) -> Result<f64, DistError> {
    comm.all_reduce_max(t.elapsed().as_secs_f64())
}

fn run_distributed(
    comm: &mut Comm,
    cfg: &ExperimentConfig,
    spec: &GridSpec,
    a: &SparseSymMatrix,
) -> Result<Option<ReportRow>, BenchError> {
    comm.set_phase(Phase::Gather);
    comm.barrier()?;
    let t0 = Instant::now();
    let lf = factorize_distributed(comm, a, spec, cfg.eps)?;
    let t_f = timed_max(comm, t0)?;
    let factor_stats = comm.stats.clone();

    let nd = spec.num_dofs();
    let e_s = solve_error(|v| Ok::<_, DistError>(a.matvec(v)), |v| replicated_inverse(comm, &lf, v), nd, cfg.seed + 1)?;
    let probe = gaussian_vector(nd, cfg.seed + 3);
    comm.barrier()?;
    let t1 = Instant::now();
    apply_inverse_distributed(comm, &lf, &probe)?;
    let t_s = timed_max(comm, t1)?;
    let rhs = gaussian_vector(nd, cfg.seed + 2);
    let (_, rep) =
        gmres(|v| Ok::<_, DistError>(a.matvec(v)), |v| replicated_inverse(comm, &lf, v), &rhs, cfg.tol, cfg.max_iter)?;
    let oracle_error = if cfg.gather_oracle && cfg.n <= ORACLE_MAX_N {
        Some(dense_oracle(a, cfg.seed + 4, |b| Ok(replicated_inverse(comm, &lf, b)?))?)
    } else {
        None
    };
    let m_f = comm.all_reduce_max(gb(8 * lf.stored_entries()))?;
    let m_transient = comm.all_reduce_max(gb(8 * lf.peak_local_entries))?;

    // Factorization counters from every rank.
    comm.set_phase(Phase::Gather);
    let payload = serde_json::to_vec(&factor_stats)?;
    let run_payload = serde_json::to_vec(&comm.stats)?;
    let gathered = comm.gather(0, payload)?;
    let gathered_run = comm.gather(0, run_payload)?;
    let (Some(all), Some(all_run)) = (gathered, gathered_run) else { return Ok(None) };
    let parse = |v: Vec<Vec<u8>>| -> Result<Vec<CommStats>, BenchError> {
        v.into_iter().map(|b| serde_json::from_slice(&b).map_err(BenchError::from)).collect()
    };
    let fstats = CommStats::sum(parse(all)?.iter());
    let run_stats = CommStats::sum(parse(all_run)?.iter());
    let total = fstats.total();
    Ok(Some(ReportRow {
        n: cfg.n,
        procs: comm.size(),
        field: cfg.field,
        eps: cfg.eps,
        e_s,
        sigma_l: lf.root_size(),
        m_f,
        m_transient,
        t_f,
        es_f: None,
        t_s,
        es_s: None,
        ew_f: None,
        ew_s: None,
        n_iter: rep.iterations,
        converged: rep.converged,
        msgs: total.msgs_sent,
        bytes: total.bytes_sent,
        reference: false,
        oracle_error,
        comm: Some(run_stats),
    }))
}

/// Fills the efficiency columns. Strong scaling groups rows by `N` and uses
/// the smallest `P` in the group as reference `m`:
/// `E^S = m·T_m/(P·T_P)`. Weak scaling groups rows by `N/P` and uses
/// `E^W = T_m/T_P`.
pub fn compute_efficiencies(rows: &mut [ReportRow]) -> Result<(), BenchError> {
    if rows.is_empty() {
        return Err(BenchError::MissingReference(0));
    }
    let dofs = |r: &ReportRow| r.n * r.n * r.n;
    for r in rows.iter_mut() {
        r.reference = false;
    }
    let ns: Vec<usize> = rows.iter().map(dofs).collect();
    for &nn in &ns {
        let refi = (0..rows.len())
            .filter(|&i| ns[i] == nn)
            .min_by_key(|&i| rows[i].procs)
            .ok_or(BenchError::MissingReference(nn))?;
        let (m, tf, ts) = (rows[refi].procs as f64, rows[refi].t_f, rows[refi].t_s);
        rows[refi].reference = true;
        for i in (0..rows.len()).filter(|&i| ns[i] == nn) {
            let p = rows[i].procs as f64;
            rows[i].es_f = Some(m * tf / (p * rows[i].t_f));
            rows[i].es_s = Some(m * ts / (p * rows[i].t_s));
        }
    }
    for i in 0..rows.len() {
        let load = |r: &ReportRow| (dofs(r) as u128, r.procs as u128);
        let (ni, pi) = load(&rows[i]);
        let group: Vec<usize> =
            (0..rows.len()).filter(|&j| { let (nj, pj) = load(&rows[j]); nj * pi == ni * pj }).collect();
        let refi = *group.iter().min_by_key(|&&j| rows[j].procs).expect("row is in its own group");
        rows[i].ew_f = Some(rows[refi].t_f / rows[i].t_f);
        rows[i].ew_s = Some(rows[refi].t_s / rows[i].t_s);
    }
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{:.1}", 100.0 * x))
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.3e},{},{:.3e},{:.3e},{},{:.3e},{},{},{},{}",
            r.n * r.n * r.n,
            r.procs,
            r.e_s,
            r.sigma_l,
            r.m_f,
            r.t_f,
            pct(r.es_f),
            r.t_s,
            pct(r.es_s),
            r.n_iter,
            r.msgs,
            r.bytes
        );
    }
    s
}

pub fn to_json(report: &ScalingReport) -> Result<String, BenchError> {
    Ok(serde_json::to_string_pretty(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, procs: usize, t_f: f64, t_s: f64) -> ReportRow {
        ReportRow {
            n,
            procs,
            field: FieldKind::Constant,
            eps: 1e-3,
            e_s: 1e-3,
            sigma_l: 0,
            m_f: 0.0,
            m_transient: 0.0,
            t_f,
            es_f: None,
            t_s,
            es_s: None,
            ew_f: None,
            ew_s: None,
            n_iter: 6,
            converged: true,
            msgs: 0,
            bytes: 0,
            reference: false,
            oracle_error: None,
            comm: None,
        }
    }

    #[test]
    fn strong_scaling_formula() {
        let mut rows = vec![row(32, 1, 4.85, 0.136), row(32, 2, 2.60, 0.0665)];
        compute_efficiencies(&mut rows).unwrap();
        assert_eq!(rows[1].es_f.unwrap().to_bits(), (4.85f64 / (2.0 * 2.60)).to_bits());
        assert!(rows[0].reference && !rows[1].reference);
        assert_eq!(rows[0].es_f, Some(1.0));
        let again = rows.clone();
        compute_efficiencies(&mut rows).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn reference_is_the_smallest_p() {
        let mut rows = vec![row(64, 8, 1.0, 1.0), row(64, 2, 4.0, 4.0), row(64, 4, 2.0, 2.0)];
        compute_efficiencies(&mut rows).unwrap();
        for r in &rows {
            assert_eq!(r.es_f, Some(1.0));
        }
        assert!(rows[1].reference);
    }

    #[test]
    fn weak_scaling_groups_by_load() {
        let mut rows = vec![row(16, 1, 1.0, 1.0), row(32, 8, 1.25, 2.0)];
        compute_efficiencies(&mut rows).unwrap();
        assert_eq!(rows[1].ew_f, Some(0.8));
        assert_eq!(rows[1].ew_s, Some(0.5));
        assert!(compute_efficiencies(&mut []).is_err());
    }

    #[test]
    fn config_file_mirrors_flags() {
        let cfg = ExperimentConfig::from_text(
            "# sweep\nn = 32\nfield = checkerboard\neps = 1e-4\nprocs = 8\ntol=1e-10\nformat = json\ngather_oracle = true\n",
        )
        .unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.field, FieldKind::Checkerboard);
        assert_eq!(cfg.eps, 1e-4);
        assert_eq!(cfg.procs, 8);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert!(cfg.gather_oracle);
        assert!(ExperimentConfig::from_text("bogus = 1").is_err());
        assert!(ExperimentConfig::from_text("n 3").is_err());
        let exact = ExperimentConfig::from_text("exact = true").unwrap();
        assert_eq!(exact.eps, 0.0);
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig { n: 8, procs: 8, ..Default::default() };
        assert!(cfg.validate().is_ok());
        cfg.procs = 64;
        assert!(cfg.validate().is_err());
        cfg.procs = 3;
        assert!(cfg.validate().is_err());
        cfg.procs = 1;
        cfg.transport = TransportKind::Socket;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_schema() {
        let mut rows = vec![row(16, 1, 2.0, 0.5)];
        compute_efficiencies(&mut rows).unwrap();
        let csv = to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,P,e_s,sigma_L,m_f,t_f,ES_f,t_s,ES_s,n_iter,msgs,bytes"));
        assert_eq!(lines.next(), Some("4096,1,1.000e-3,0,0.000e0,2.000e0,100.0,5.000e-1,100.0,6,0,0"));
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = ExperimentConfig { n: 8, eps: 1e-3, ..Default::default() };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!((a.e_s.to_bits(), a.sigma_l, a.n_iter), (b.e_s.to_bits(), b.sigma_l, b.n_iter));
    }

    #[test]
    fn eight_loopback_ranks_reproduce_one() {
        let base = ExperimentConfig { n: 8, eps: 1e-3, field: FieldKind::RandomHighContrast, ..Default::default() };
        let one = run_experiment(&base).unwrap();
        let eight = run_experiment(&ExperimentConfig { procs: 8, ..base }).unwrap();
        assert_eq!(one.e_s.to_bits(), eight.e_s.to_bits());
        assert_eq!(one.n_iter, eight.n_iter);
        assert_eq!(one.sigma_l, eight.sigma_l);
        assert!(eight.msgs > 0);
    }

    #[test]
    fn sweep_records_failures() {
        let good = ExperimentConfig { n: 8, ..Default::default() };
        let bad = ExperimentConfig { n: 8, procs: 64, ..Default::default() };
        let rep = run_sweep(&[good, bad]);
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].procs, 64);
        assert!(rep.rows[0].reference);
        let json: serde_json::Value = serde_json::from_str(&to_json(&rep).unwrap()).unwrap();
        assert_eq!(json["version"], REPORT_VERSION);
        assert_eq!(json["failures"][0]["stage"], "distributed");
    }
}
