//! Experiment harness: configuration, per-seed CSV traces, summaries and
//! envelope comparison.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use crate::directions::{DirectionKind, DirectionStrategy};
use crate::envelope::{bound_envelope, BoundEnvelope, EnvelopeKind, EnvelopeParams, Method};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::objectives::{
    initial_point_on_sphere, make_logistic_synthetic, make_logsumexp_synthetic, parse_libsvm, random_spd,
    LogisticObjective, Objective, QuadraticObjective,
};
use crate::parallel::map_seeds;
use crate::rng::RngState;
use crate::solvers::{
    approx_matrix, newton_until, solve_general, solve_quadratic, IterationRecord, RunFailure, SolverOptions, StopRule,
};
use crate::updates::UpdateRule;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "QNBENCH_OUT_DIR";

/// Fixed trace columns.
pub const COLUMNS: [&str; 8] = ["k", "grad_norm", "lambda", "sigma", "tau", "r", "envelope", "elapsed_s"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    MatrixApprox,
    Quadratic,
    LogSumExp,
    Logistic,
}

impl Experiment {
    pub const NAMES: [&'static str; 4] = ["matrix_approx", "quadratic", "logsumexp", "logistic"];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::MatrixApprox => "matrix_approx",
            Experiment::Quadratic => "quadratic",
            Experiment::LogSumExp => "logsumexp",
            Experiment::Logistic => "logistic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "matrix_approx" => Experiment::MatrixApprox,
            "quadratic" => Experiment::Quadratic,
            "logsumexp" => Experiment::LogSumExp,
            "logistic" => Experiment::Logistic,
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Starting approximation for the quadratic experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialApprox {
    /// `L·I`
    Lipschitz,
    /// The exact Hessian.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeChoice {
    Auto,
    None,
    Kind(EnvelopeKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub d: usize,
    /// Number of log-sum-exp terms or logistic samples.
    pub m_or_n: usize,
    pub gamma: f64,
    /// Condition number of the generated matrix (matrix and quadratic runs).
    pub kappa: f64,
    pub rule: UpdateRule,
    pub direction: DirectionKind,
    /// `None` scales random directions exactly when the rule is BFGS.
    pub scaled: Option<bool>,
    pub seeds: Vec<u64>,
    pub data_seed: u64,
    /// Correction constant; `None` takes the objective's own value.
    pub m_const: Option<f64>,
    pub warm_start_steps: usize,
    /// Newton warm start stops early once `‖∇f‖` reaches this.
    pub warm_start_grad: Option<f64>,
    /// Radius of the random start around the minimizer; `None` means `1/d`.
    pub x0_radius: Option<f64>,
    pub g0: InitialApprox,
    /// Update count for matrix runs; `None` means `d`.
    pub steps: Option<usize>,
    pub stop: StopRule,
    pub dataset_path: Option<PathBuf>,
    pub output_path: PathBuf,
    pub allow_expensive: bool,
    pub dense: Option<bool>,
    pub timing: bool,
    pub envelope: EnvelopeChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::MatrixApprox,
            d: 10,
            m_or_n: 30,
            gamma: 1.0,
            kappa: 10.0,
            rule: UpdateRule::Sr1,
            direction: DirectionKind::GreedySr1,
            scaled: None,
            seeds: vec![0],
            data_seed: 0,
            m_const: None,
            warm_start_steps: 0,
            warm_start_grad: None,
            x0_radius: None,
            g0: InitialApprox::Lipschitz,
            steps: None,
            stop: StopRule::default(),
            dataset_path: None,
            output_path: PathBuf::from("qnbench-out"),
            allow_expensive: false,
            dense: None,
            timing: false,
            envelope: EnvelopeChoice::Auto,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

fn parse_opt<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "auto" | "none" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

/// Seeds as a comma list and/or half-open ranges, e.g. `1,2,10..20`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = parse_num("seeds", lo)?;
            let hi: u64 = parse_num("seeds", hi)?;
            seeds.extend(lo..hi);
        } else {
            seeds.push(parse_num("seeds", part)?);
        }
    }
    Ok(seeds)
}

impl RunConfig {
    /// Sets one field from its textual form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "experiment" => self.experiment = Experiment::parse(v)?,
            "d" => self.d = parse_num(key, v)?,
            "m" | "n" | "m_or_n" => self.m_or_n = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "rule" => self.rule = UpdateRule::parse(v)?,
            "direction" => self.direction = DirectionKind::parse(v)?,
            "scaled" => {
                self.scaled = match v {
                    "auto" => None,
                    _ => Some(parse_bool(key, v)?),
                }
            }
            "seeds" => self.seeds = parse_seeds(v)?,
            "data_seed" => self.data_seed = parse_num(key, v)?,
            "m_const" => self.m_const = parse_opt(key, v)?,
            "warm_start_steps" => self.warm_start_steps = parse_num(key, v)?,
            "warm_start_grad" => self.warm_start_grad = parse_opt(key, v)?,
            "x0_radius" => self.x0_radius = parse_opt(key, v)?,
            "g0" => {
                self.g0 = match v {
                    "lipschitz" => InitialApprox::Lipschitz,
                    "exact" => InitialApprox::Exact,
                    _ => return Err(Error::Config(format!("`g0`: expected lipschitz or exact, got `{v}`"))),
                }
            }
            "steps" => self.steps = parse_opt(key, v)?,
            "max_iters" => self.stop.max_iters = parse_num(key, v)?,
            "grad_tol" => self.stop.grad_tol = parse_num(key, v)?,
            "lambda_tol" => self.stop.lambda_tol = parse_num(key, v)?,
            "dataset" => self.dataset_path = (!v.is_empty()).then(|| PathBuf::from(v)),
            "output" => self.output_path = PathBuf::from(v),
            "allow_expensive" => self.allow_expensive = parse_bool(key, v)?,
            "dense" => {
                self.dense = match v {
                    "auto" => None,
                    _ => Some(parse_bool(key, v)?),
                }
            }
            "timing" => self.timing = parse_bool(key, v)?,
            "envelope" => {
                self.envelope = match v {
                    "auto" => EnvelopeChoice::Auto,
                    "none" => EnvelopeChoice::None,
                    _ => EnvelopeChoice::Kind(EnvelopeKind::parse(v)?),
                }
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, found `{line}`"),
            })?;
            cfg.apply(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn strategy(&self, seed: u64) -> DirectionStrategy {
        let scaled = self
            .scaled
            .unwrap_or(self.rule == UpdateRule::Bfgs && self.direction.is_random());
        DirectionStrategy::new(self.direction).with_seed(seed).with_scaling(scaled)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            allow_expensive: self.allow_expensive,
            dense_instrumentation: self.dense,
            timing: self.timing,
            ..Default::default()
        }
    }

    /// Rule and direction, safe for file names.
    pub fn method_label(&self) -> String {
        let rule = self.rule.name().replace(':', "");
        format!("{rule}_{}", self.strategy(0).label())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.dataset_path.is_some() && self.experiment != Experiment::Logistic {
            return Err(Error::Config("dataset only applies to the logistic experiment".into()));
        }
        if matches!(self.experiment, Experiment::MatrixApprox | Experiment::Quadratic) && !(self.kappa >= 1.0) {
            return Err(Error::Config("kappa must be at least 1".into()));
        }
        if matches!(self.experiment, Experiment::LogSumExp | Experiment::Logistic) && !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if self.experiment == Experiment::LogSumExp && self.m_or_n == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if let Some(m) = self.m_const {
            if !(m >= 0.0) {
                return Err(Error::Config("m_const must be non-negative".into()));
            }
        }
        crate::solvers::validate_pairing(self.rule, &self.strategy(0), &self.solver_options())
    }

    /// `key = value` lines in a fixed order, for trace metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        vec![
            ("experiment".into(), self.experiment.name().into()),
            ("d".into(), self.d.to_string()),
            ("m_or_n".into(), self.m_or_n.to_string()),
            ("gamma".into(), self.gamma.to_string()),
            ("kappa".into(), self.kappa.to_string()),
            ("rule".into(), self.rule.name()),
            ("direction".into(), self.direction.name().into()),
            ("scaled".into(), self.scaled.map_or("auto".into(), |b| b.to_string())),
            ("seeds".into(), seeds.join(",")),
            ("data_seed".into(), self.data_seed.to_string()),
            ("m_const".into(), opt(self.m_const)),
            ("warm_start_steps".into(), self.warm_start_steps.to_string()),
            ("warm_start_grad".into(), opt(self.warm_start_grad)),
            ("x0_radius".into(), opt(self.x0_radius)),
            (
                "g0".into(),
                match self.g0 {
                    InitialApprox::Lipschitz => "lipschitz".into(),
                    InitialApprox::Exact => "exact".into(),
                },
            ),
            ("steps".into(), self.steps.map_or("auto".into(), |s| s.to_string())),
            ("max_iters".into(), self.stop.max_iters.to_string()),
            ("grad_tol".into(), self.stop.grad_tol.to_string()),
            ("lambda_tol".into(), self.stop.lambda_tol.to_string()),
            (
                "dataset".into(),
                self.dataset_path.as_ref().map_or(String::new(), |p| p.display().to_string()),
            ),
            ("allow_expensive".into(), self.allow_expensive.to_string()),
            ("dense".into(), self.dense.map_or("auto".into(), |b| b.to_string())),
            ("timing".into(), self.timing.to_string()),
        ]
    }

    fn envelope_kind(&self) -> Option<EnvelopeKind> {
        match self.envelope {
            EnvelopeChoice::None => None,
            EnvelopeChoice::Kind(k) => Some(k),
            EnvelopeChoice::Auto => Some(match self.experiment {
                Experiment::MatrixApprox => match self.rule {
                    UpdateRule::Sr1 => EnvelopeKind::Sr1Matrix,
                    UpdateRule::Bfgs if self.strategy(0).scaled => EnvelopeKind::BfgsMatrix,
                    _ => EnvelopeKind::BroydenMatrix,
                },
                _ => EnvelopeKind::TwoPhase(self.method_family()),
            }),
        }
    }

    fn method_family(&self) -> Method {
        let random = self.direction.is_random();
        match (self.rule, random) {
            (UpdateRule::Sr1, false) => Method::GreedySr1,
            (UpdateRule::Sr1, true) => Method::RandomSr1,
            (UpdateRule::Bfgs, false) if self.strategy(0).scaled => Method::GreedyBfgs,
            (UpdateRule::Bfgs, true) if self.strategy(0).scaled => Method::RandomBfgs,
            (_, false) => Method::GreedyBroyden,
            (_, true) => Method::RandomBroyden,
        }
    }
}

/// Confidence level used for random-method envelopes that need one.
const ENVELOPE_DELTA: f64 = 0.1;

/// The problem instance shared by all seeds of a run.
enum Problem {
    Matrix { a: SymMatrix, g0: SymMatrix },
    Quadratic { obj: QuadraticObjective, x0: Vec<f64>, g0: SymMatrix },
    General { obj: Box<dyn Objective>, x0: Vec<f64>, m_const: f64 },
}

struct Instance {
    problem: Problem,
    kappa: f64,
    mu: f64,
    d: usize,
}

fn start_near(center: &[f64], cfg: &RunConfig) -> Vec<f64> {
    let d = center.len();
    let radius = cfg.x0_radius.unwrap_or(1.0 / d as f64);
    let offset = initial_point_on_sphere(d, radius, RngState::from_seed(cfg.data_seed).split(7).0);
    center.iter().zip(&offset).map(|(c, o)| c + o).collect()
}

fn warm_start(obj: &dyn Objective, x0: Vec<f64>, cfg: &RunConfig) -> Result<Vec<f64>> {
    match cfg.warm_start_grad {
        Some(target) => Ok(newton_until(obj, &x0, target, cfg.warm_start_steps.max(1) * 50)?.0),
        None => crate::solvers::newton_warm_start(obj, &x0, cfg.warm_start_steps),
    }
}

fn build_instance(cfg: &RunConfig) -> Result<Instance> {
    let d = cfg.d;
    match cfg.experiment {
        Experiment::MatrixApprox => {
            let a = random_spd(d, cfg.kappa, cfg.data_seed)?;
            let (lo, hi) = crate::linalg::extreme_eigs(&a, 5_000, 1e-13)?;
            Ok(Instance {
                problem: Problem::Matrix {
                    g0: SymMatrix::scaled_identity(d, hi),
                    a,
                },
                kappa: hi / lo,
                mu: lo,
                d,
            })
        }
        Experiment::Quadratic => {
            let a = random_spd(d, cfg.kappa, cfg.data_seed)?;
            let mut rng = RngState::from_seed(cfg.data_seed).split(3);
            let mut b = vec![0.0; d];
            for v in b.iter_mut() {
                let (x, next) = rng.uniform(-1.0, 1.0);
                rng = next;
                *v = x;
            }
            let obj = QuadraticObjective::new(a, b)?;
            let c = obj.constants();
            let x0 = start_near(&obj.minimizer(), cfg);
            let g0 = match cfg.g0 {
                InitialApprox::Lipschitz => SymMatrix::scaled_identity(d, c.lip_l),
                InitialApprox::Exact => obj.a().clone(),
            };
            Ok(Instance {
                kappa: c.kappa(),
                mu: c.mu,
                d,
                problem: Problem::Quadratic { obj, x0, g0 },
            })
        }
        Experiment::LogSumExp => {
            let obj = make_logsumexp_synthetic(d, cfg.m_or_n, cfg.gamma, cfg.data_seed)?;
            let x0 = warm_start(&obj, start_near(&vec![0.0; d], cfg), cfg)?;
            let c = obj.constants();
            Ok(Instance {
                kappa: c.kappa(),
                mu: c.mu,
                d,
                problem: Problem::General {
                    m_const: cfg.m_const.unwrap_or(c.self_concordant_m),
                    obj: Box::new(obj),
                    x0,
                },
            })
        }
        Experiment::Logistic => {
            let obj: LogisticObjective = match &cfg.dataset_path {
                Some(path) => {
                    let reader = BufReader::new(File::open(path)?);
                    let expected = (cfg.d > 0).then_some(cfg.d);
                    let (samples, dim) = parse_libsvm(reader, expected)?;
                    LogisticObjective::from_sparse(&samples, dim, cfg.gamma)?
                }
                None => make_logistic_synthetic(d, cfg.m_or_n, cfg.gamma, cfg.data_seed)?,
            };
            let d = obj.dim();
            let x0 = warm_start(&obj, vec![0.0; d], cfg)?;
            let c = obj.constants();
            Ok(Instance {
                kappa: c.kappa(),
                mu: c.mu,
                d,
                problem: Problem::General {
                    m_const: cfg.m_const.unwrap_or(c.self_concordant_m),
                    obj: Box::new(obj),
                    x0,
                },
            })
        }
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Vec<IterationRecord>,
    pub envelope: Option<BoundEnvelope>,
    pub failure: Option<String>,
}

fn run_seed(cfg: &RunConfig, inst: &Instance, seed: u64) -> SeedRun {
    let dir = cfg.strategy(seed);
    let opts = cfg.solver_options();
    let result: std::result::Result<Vec<IterationRecord>, RunFailure> = match &inst.problem {
        Problem::Matrix { a, g0 } => approx_matrix(a, g0, cfg.rule, dir, cfg.steps.unwrap_or(inst.d), &opts),
        Problem::Quadratic { obj, x0, g0 } => {
            solve_quadratic(obj, x0, g0, cfg.rule, dir, &cfg.stop, &opts).map(|(_, t)| t)
        }
        Problem::General { obj, x0, m_const } => {
            solve_general(obj.as_ref(), x0, cfg.rule, dir, *m_const, &cfg.stop, &opts).map(|(_, t)| t)
        }
    };
    let (trace, failure) = match result {
        Ok(t) => (t, None),
        Err(f) => (f.trace, Some(f.error.to_string())),
    };
    let envelope = cfg.envelope_kind().and_then(|kind| {
        let first = trace.first()?;
        let params = EnvelopeParams {
            d: inst.d,
            kappa: inst.kappa,
            sigma0: first.sigma.unwrap_or(f64::NAN),
            tau0: first.tau.unwrap_or(f64::NAN),
            mu: inst.mu,
            lambda0: first.lambda.unwrap_or(f64::NAN),
            delta: ENVELOPE_DELTA,
            k0: None,
        };
        bound_envelope(kind, &params, trace.len().saturating_sub(1)).ok()
    });
    SeedRun {
        seed,
        trace,
        envelope,
        failure,
    }
}

/// Formats a float so that parsing it back gives the same value.
pub fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn trace_row(rec: &IterationRecord, env: Option<f64>, timing: bool) -> [String; 8] {
    [
        rec.k.to_string(),
        cell(rec.grad_norm),
        cell(rec.lambda),
        cell(rec.sigma),
        cell(rec.tau),
        cell(rec.r),
        cell(env),
        if timing { fmt_float(rec.elapsed) } else { String::new() },
    ]
}

fn write_with_metadata(path: &Path, meta: &[(String, String)], rows: &[[String; 8]]) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path)?);
    for (k, v) in meta {
        writeln!(file, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Files produced by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub runs: Vec<SeedRun>,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = (u64, &str)> {
        self.runs
            .iter()
            .filter_map(|r| r.failure.as_deref().map(|f| (r.seed, f)))
    }
}

/// Output directory after applying [`OUT_DIR_ENV`].
pub fn resolve_output(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output_path.clone())
}

/// Runs every seed of `cfg`, writes one trace per seed plus a summary, and
/// returns what was written. Solver failures are reported in the result
/// with their partial traces on disk; configuration and I/O problems are
/// errors.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let inst = build_instance(cfg)?;
    let runs = map_seeds(&cfg.seeds, |seed| run_seed(cfg, &inst, seed));

    let out = resolve_output(cfg);
    std::fs::create_dir_all(&out)?;
    let stem = format!("{}_{}", cfg.experiment.name(), cfg.method_label());
    let mut base_meta = vec![
        ("tool".to_string(), format!("quasinewton {}", env!("CARGO_PKG_VERSION"))),
        ("method".to_string(), cfg.method_label()),
        ("instance_d".to_string(), inst.d.to_string()),
        ("instance_kappa".to_string(), fmt_float(inst.kappa)),
        ("instance_mu".to_string(), fmt_float(inst.mu)),
        (
            "envelope_kind".to_string(),
            cfg.envelope_kind().map_or("none".into(), |k| k.name()),
        ),
    ];
    if let Problem::General { m_const, .. } = inst.problem {
        base_meta.push(("m_const_used".into(), fmt_float(m_const)));
    }
    base_meta.extend(cfg.echo());

    let mut traces = Vec::with_capacity(runs.len());
    for r in &runs {
        let mut meta = base_meta.clone();
        meta.push(("seed".into(), r.seed.to_string()));
        meta.push((
            "status".into(),
            r.failure.as_ref().map_or("ok".into(), |f| format!("failed: {f}")),
        ));
        let rows: Vec<[String; 8]> = r
            .trace
            .iter()
            .map(|rec| {
                let env = r.envelope.as_ref().and_then(|e| e.values.get(rec.k).copied());
                trace_row(rec, env.filter(|v| v.is_finite()), cfg.timing)
            })
            .collect();
        let path = out.join(format!("{stem}_seed{}.csv", r.seed));
        write_with_metadata(&path, &meta, &rows)?;
        traces.push(path);
    }

    let summary = out.join(format!("{stem}_summary.csv"));
    let mut meta = base_meta;
    meta.push(("aggregate".into(), "mean over seeds present at each k".into()));
    let rows = summary_rows(&runs, cfg.timing);
    write_with_metadata(&summary, &meta, &rows)?;
    Ok(RunReport { traces, summary, runs })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn summary_rows(runs: &[SeedRun], timing: bool) -> Vec<[String; 8]> {
    let len = runs.iter().map(|r| r.trace.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let at: Vec<(&IterationRecord, Option<f64>)> = runs
                .iter()
                .filter_map(|r| {
                    let rec = r.trace.get(k)?;
                    let env = r.envelope.as_ref().and_then(|e| e.values.get(k).copied());
                    Some((rec, env.filter(|v| v.is_finite())))
                })
                .collect();
            let rec = IterationRecord {
                k,
                grad_norm: mean(at.iter().map(|(r, _)| r.grad_norm)),
                lambda: mean(at.iter().map(|(r, _)| r.lambda)),
                sigma: mean(at.iter().map(|(r, _)| r.sigma)),
                tau: mean(at.iter().map(|(r, _)| r.tau)),
                eta: None,
                r: mean(at.iter().map(|(r, _)| r.r)),
                hess_below_g: None,
                elapsed: mean(at.iter().map(|(r, _)| Some(r.elapsed))).unwrap_or(0.0),
            };
            trace_row(&rec, mean(at.iter().map(|(_, e)| *e)), timing)
        })
        .collect()
}

/// One row of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub grad_norm: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    pub r: Option<f64>,
    pub envelope: Option<f64>,
    pub elapsed_s: Option<f64>,
}

impl TraceRow {
    fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "grad_norm" => self.grad_norm,
            "lambda" => self.lambda,
            "sigma" => self.sigma,
            "tau" => self.tau,
            "r" => self.r,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    fn meta_num(&self, key: &str) -> Result<f64> {
        let v = self
            .meta(key)
            .ok_or_else(|| Error::Config(format!("trace metadata lacks `{key}`")))?;
        parse_num(key, v)
    }
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let text = std::fs::read_to_string(path)?;
    let mut metadata = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: 0,
            message: format!("{}: unexpected header {:?}", path.display(), headers),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<Option<f64>> {
            let s = rec.get(j).unwrap_or("");
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Parse {
                    line: i + 2,
                    message: format!("{}: bad number `{s}`", path.display()),
                })
            }
        };
        let k: usize = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Parse {
            line: i + 2,
            message: format!("{}: bad step index", path.display()),
        })?;
        rows.push(TraceRow {
            k,
            grad_norm: field(1)?,
            lambda: field(2)?,
            sigma: field(3)?,
            tau: field(4)?,
            r: field(5)?,
            envelope: field(6)?,
            elapsed_s: field(7)?,
        });
    }
    Ok(Trace { metadata, rows })
}

/// One step of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub k: usize,
    pub measured: f64,
    pub envelope: f64,
    pub ratio: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub kind: EnvelopeKind,
    pub files: usize,
    /// Greedy runs have per-instance bounds; random runs only in expectation.
    pub deterministic: bool,
    pub slack: f64,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }
}

/// Compares the seed-averaged measure of `files` against the envelope
/// `kind` scaled by `slack`. A step is a violation when the measured mean
/// exceeds `slack · envelope + floor · measured₀`.
pub fn compare(files: &[PathBuf], kind: EnvelopeKind, slack: f64, floor: f64) -> Result<CompareReport> {
    if files.is_empty() {
        return Err(Error::Config("compare needs at least one trace file".into()));
    }
    let traces: Vec<Trace> = files.iter().map(|f| read_trace(f)).collect::<Result<_>>()?;
    let grid: Vec<usize> = traces[0].rows.iter().map(|r| r.k).collect();
    for (t, f) in traces.iter().zip(files) {
        if t.rows.iter().map(|r| r.k).ne(grid.iter().copied()) {
            return Err(Error::Config(format!(
                "{} has a different step grid from {}",
                f.display(),
                files[0].display()
            )));
        }
    }
    let first = &traces[0];
    let d: usize = first.meta_num("instance_d")? as usize;
    let kappa = first.meta_num("instance_kappa")?;
    let mu = first.meta_num("instance_mu")?;
    let deterministic = first
        .meta("direction")
        .map(|s| !DirectionKind::parse(s).map(|k| k.is_random()).unwrap_or(true))
        .unwrap_or(false);

    let n = traces.len() as f64;
    let mean_of = |name: &str, k: usize| -> Option<f64> {
        let vals: Option<Vec<f64>> = traces.iter().map(|t| t.rows[k].metric(name)).collect();
        vals.map(|v| v.iter().sum::<f64>() / n)
    };
    let measure = kind.measure();
    let series: Vec<f64> = match measure {
        "lambda_ratio" => (0..grid.len().saturating_sub(1))
            .map(|k| {
                let ratios: Option<Vec<f64>> = traces
                    .iter()
                    .map(|t| Some(t.rows[k + 1].lambda? / t.rows[k].lambda?))
                    .collect();
                ratios.map_or(f64::NAN, |v| v.iter().sum::<f64>() / n)
            })
            .collect(),
        name => (0..grid.len())
            .map(|k| mean_of(name, k).unwrap_or(f64::NAN))
            .collect(),
    };
    if series.is_empty() || series.iter().all(|v| v.is_nan()) {
        return Err(Error::Config(format!("traces carry no `{measure}` values")));
    }
    let params = EnvelopeParams {
        d,
        kappa,
        sigma0: mean_of("sigma", 0).unwrap_or(f64::NAN),
        tau0: mean_of("tau", 0).unwrap_or(f64::NAN),
        mu,
        lambda0: mean_of("lambda", 0).unwrap_or(f64::NAN),
        delta: ENVELOPE_DELTA,
        k0: None,
    };
    let env = bound_envelope(kind, &params, series.len().saturating_sub(1))?;
    let base = match measure {
        "lambda_ratio" => 0.0,
        _ => series[0].abs(),
    };
    let rows = series
        .iter()
        .zip(&env.values)
        .enumerate()
        .filter(|(_, (m, _))| !m.is_nan())
        .map(|(k, (&m, &e))| CompareRow {
            k: grid[k],
            measured: m,
            envelope: e,
            ratio: if e > 0.0 { m / e } else if m <= 0.0 { 0.0 } else { f64::INFINITY },
            violated: m > slack * e + floor * base,
        })
        .collect();
    Ok(CompareReport {
        kind,
        files: traces.len(),
        deterministic,
        slack,
        rows,
    })
}

/// Renders a comparison as CSV text.
pub fn render_compare(report: &CompareReport) -> String {
    let mut out = format!(
        "# envelope = {}\n# files = {}\n# slack = {}\n# deterministic = {}\n# violations = {}\nk,measured,envelope,ratio,violated\n",
        report.kind.name(),
        report.files,
        report.slack,
        report.deterministic,
        report.violations()
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k,
            fmt_float(r.measured),
            fmt_float(r.envelope),
            fmt_float(r.ratio),
            r.violated
        ));
    }
    out
}
