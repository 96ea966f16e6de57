//! Experiment configuration, the end-to-end pipeline and table output.
//!
//! Configuration is a flat set of `key = value` pairs whose keys are the
//! command-line flag names. The same setter serves config files and flags,
//! so precedence is simply the order in which sources are applied.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::collocation::{gen_cube, gen_sphere, load_points, Distribution, PointSet};
use crate::error::{Error, Result};
use crate::hmatrix::{assemble_hmatrix, CompressionStats, HOperator, HParams};
use crate::krylov::{
    gmres_tikhonov_observed, lsqr_tikhonov_observed, LinearMap, MuStrategy, SolveReport,
    SolverConfig,
};
use crate::rbf::{
    assemble_a, assemble_f, assemble_h, sample_exact, ExactSolution, HelmholtzProblem, MqKernel,
};
use crate::tensor::{Operator6, Shape3, Tensor3};

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Cube,
    Sphere,
    File(PathBuf),
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::Config("file: domain needs a path".into()));
            }
            return Ok(Domain::File(PathBuf::from(path)));
        }
        match s {
            "cube" => Ok(Domain::Cube),
            "sphere" => Ok(Domain::Sphere),
            other => Err(Error::Config(format!(
                "unknown domain '{other}' (expected cube|sphere|file:PATH)"
            ))),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Cube => f.write_str("cube"),
            Domain::Sphere => f.write_str("sphere"),
            Domain::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Ggmres,
    Glsqr,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ggmres" => Ok(SolverKind::Ggmres),
            "glsqr" => Ok(SolverKind::Glsqr),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected ggmres|glsqr)"
            ))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Ggmres => "ggmres",
            SolverKind::Glsqr => "glsqr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compression {
    Dense,
    HMatrix,
}

impl FromStr for Compression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dense" => Ok(Compression::Dense),
            "hmatrix" => Ok(Compression::HMatrix),
            other => Err(Error::Config(format!(
                "unknown compression '{other}' (expected dense|hmatrix)"
            ))),
        }
    }
}

impl fmt::Display for Compression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compression::Dense => "dense",
            Compression::HMatrix => "hmatrix",
        })
    }
}

/// Parses `gcv`, `fixed:V` or `discrepancy:NU`. `V` is the weight of `|y|^2`.
pub fn parse_mu(s: &str) -> Result<MuStrategy> {
    let s = s.trim();
    if s == "gcv" {
        return Ok(MuStrategy::Gcv);
    }
    if let Some(v) = s.strip_prefix("fixed:") {
        return Ok(MuStrategy::Fixed(parse_f64("mu", v)?));
    }
    if let Some(v) = s.strip_prefix("discrepancy:") {
        return Ok(MuStrategy::Discrepancy(parse_f64("mu", v)?));
    }
    Err(Error::Config(format!(
        "unknown mu strategy '{s}' (expected gcv|fixed:V|discrepancy:NU)"
    )))
}

pub fn format_mu(mu: &MuStrategy) -> String {
    match mu {
        MuStrategy::Gcv => "gcv".into(),
        MuStrategy::Fixed(v) => format!("fixed:{v}"),
        MuStrategy::Discrepancy(nu) => format!("discrepancy:{nu}"),
        MuStrategy::Schedule(v) => {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("schedule:{}", parts.join(" "))
        }
    }
}

/// Parses `M`, `M N P` (whitespace or `x` separated).
pub fn parse_dims(s: &str) -> Result<Shape3> {
    let parts: Vec<&str> = s
        .split(|c: char| c.is_whitespace() || c == 'x')
        .filter(|p| !p.is_empty())
        .collect();
    let nums = parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::Config(format!("dims: '{p}' is not a positive integer")))
        })
        .collect::<Result<Vec<_>>>()?;
    match nums.as_slice() {
        [m] => Shape3::new(*m, *m, *m),
        [m, n, p] => Shape3::new(*m, *n, *p),
        _ => Err(Error::Config(format!(
            "dims needs 1 or 3 integers, got '{s}'"
        ))),
    }
}

/// Parses `default` or `cx cy cz sigma` terms separated by `;`.
pub fn parse_exact(s: &str) -> Result<Option<ExactSolution>> {
    let s = s.trim();
    if s == "default" {
        return Ok(None);
    }
    let mut terms = Vec::new();
    for term in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let v = term
            .split_whitespace()
            .map(|x| parse_f64("exact", x))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != 4 {
            return Err(Error::Config(format!(
                "exact: term '{term}' needs 'cx cy cz sigma'"
            )));
        }
        terms.push(([v[0], v[1], v[2]], v[3]));
    }
    ExactSolution::new(terms).map(Some)
}

pub fn format_exact(exact: &ExactSolution) -> String {
    exact
        .terms()
        .iter()
        .map(|(c, s)| format!("{} {} {} {}", c[0], c[1], c[2], s))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: '{}' is not a number", v.trim())))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| {
        Error::Config(format!(
            "{key}: '{}' is not a nonnegative integer",
            v.trim()
        ))
    })
}

/// Default manufactured solution per domain.
pub fn default_exact(domain: &Domain) -> ExactSolution {
    let terms = match domain {
        Domain::Sphere => vec![([0.25, 0.25, 0.0], 20.0)],
        Domain::Cube => vec![([0.0, 0.0, 0.0], 20.0)],
        Domain::File(_) => vec![([1.75, 0.0, 0.1], 0.5), ([0.0, 0.0, 0.0], 0.5)],
    };
    ExactSolution::new(terms).expect("default exact solution is valid")
}

/// Keys accepted by [`ExperimentConfig::set`], in report order.
pub const CONFIG_KEYS: &[&str] = &[
    "domain",
    "dist",
    "dims",
    "solver",
    "epsilon",
    "wavenumber",
    "bc-a",
    "bc-b",
    "exact",
    "mu",
    "restart",
    "tau",
    "tol",
    "maxit",
    "compress",
    "eta",
    "aca-tol",
    "leaf-t",
    "seed",
    "out",
    "history",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub dist: Distribution,
    /// Ignored for `file:` domains, whose header fixes the shape.
    pub dims: Shape3,
    pub solver: SolverKind,
    pub epsilon: f64,
    pub wavenumber: f64,
    pub bc_a: f64,
    pub bc_b: f64,
    /// `None` selects [`default_exact`] for the domain.
    pub exact: Option<ExactSolution>,
    pub mu: MuStrategy,
    pub restart: usize,
    pub tau: f64,
    pub tol: f64,
    pub maxit: usize,
    pub compress: Compression,
    pub eta: f64,
    pub aca_tol: f64,
    pub leaf_t: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Record the relative error of every iterate.
    pub history: bool,
    explicit: BTreeSet<&'static str>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: Domain::Sphere,
            dist: Distribution::Random,
            dims: Shape3::new(10, 10, 10).expect("valid"),
            solver: SolverKind::Glsqr,
            epsilon: MqKernel::DEFAULT_EPSILON,
            wavenumber: HelmholtzProblem::DEFAULT_WAVENUMBER,
            bc_a: 1.0,
            bc_b: 0.0,
            exact: None,
            mu: MuStrategy::Gcv,
            restart: SolverConfig::DEFAULT_RESTART,
            tau: SolverConfig::DEFAULT_TAU,
            tol: SolverConfig::DEFAULT_TOL,
            maxit: SolverConfig::DEFAULT_MAXIT,
            compress: Compression::Dense,
            eta: HParams::DEFAULT_ETA,
            aca_tol: HParams::DEFAULT_ACA_TOL,
            leaf_t: HParams::DEFAULT_LEAF_T,
            seed: 0,
            out: None,
            history: false,
            explicit: BTreeSet::new(),
        }
    }
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let canonical = CONFIG_KEYS
            .iter()
            .find(|k| **k == key || k.replace('-', "_") == key)
            .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
        let v = value.trim();
        match *canonical {
            "domain" => self.domain = v.parse()?,
            "dist" => self.dist = v.parse()?,
            "dims" => self.dims = parse_dims(v)?,
            "solver" => self.solver = v.parse()?,
            "epsilon" => self.epsilon = parse_f64(key, v)?,
            "wavenumber" => self.wavenumber = parse_f64(key, v)?,
            "bc-a" => self.bc_a = parse_f64(key, v)?,
            "bc-b" => self.bc_b = parse_f64(key, v)?,
            "exact" => self.exact = parse_exact(v)?,
            "mu" => self.mu = parse_mu(v)?,
            "restart" => self.restart = parse_usize(key, v)?,
            "tau" => self.tau = parse_f64(key, v)?,
            "tol" => self.tol = parse_f64(key, v)?,
            "maxit" => self.maxit = parse_usize(key, v)?,
            "compress" => self.compress = v.parse()?,
            "eta" => self.eta = parse_f64(key, v)?,
            "aca-tol" => self.aca_tol = parse_f64(key, v)?,
            "leaf-t" => self.leaf_t = parse_f64(key, v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: '{v}' is not a u64")))?
            }
            "out" => {
                self.out = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "history" => {
                self.history = match v {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::Config(format!("history: '{v}' is not a boolean"))),
                }
            }
            _ => unreachable!(),
        }
        self.explicit.insert(canonical);
        Ok(())
    }

    /// Applies every `key = value` line of a config text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Keys that were never set and carry built-in defaults.
    pub fn defaulted_keys(&self) -> Vec<&'static str> {
        CONFIG_KEYS
            .iter()
            .copied()
            .filter(|k| !self.explicit.contains(k))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.wavenumber >= 0.0 && self.wavenumber.is_finite()) {
            return Err(Error::Config(format!(
                "wavenumber must be nonnegative, got {}",
                self.wavenumber
            )));
        }
        if self.compress == Compression::HMatrix {
            if !(self.eta > 0.0) {
                return Err(Error::Config("eta must be positive".into()));
            }
            if !(self.aca_tol > 0.0 && self.aca_tol < 1.0) {
                return Err(Error::Config("aca-tol must lie in (0, 1)".into()));
            }
            if !(self.leaf_t > 0.0) {
                return Err(Error::Config("leaf-t must be positive".into()));
            }
        }
        self.solver_config().validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            restart: self.restart,
            tau: self.tau,
            tol: self.tol,
            maxit: self.maxit,
            mu: self.mu.clone(),
        }
    }

    pub fn exact_solution(&self) -> ExactSolution {
        self.exact
            .clone()
            .unwrap_or_else(|| default_exact(&self.domain))
    }

    pub fn value_of(&self, key: &str) -> Option<String> {
        Some(match key {
            "domain" => self.domain.to_string(),
            "dist" => self.dist.to_string(),
            "dims" => format!("{} {} {}", self.dims.m, self.dims.n, self.dims.p),
            "solver" => self.solver.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "wavenumber" => self.wavenumber.to_string(),
            "bc-a" => self.bc_a.to_string(),
            "bc-b" => self.bc_b.to_string(),
            "exact" => format_exact(&self.exact_solution()),
            "mu" => format_mu(&self.mu),
            "restart" => self.restart.to_string(),
            "tau" => format!("{:e}", self.tau),
            "tol" => format!("{:e}", self.tol),
            "maxit" => self.maxit.to_string(),
            "compress" => self.compress.to_string(),
            "eta" => self.eta.to_string(),
            "aca-tol" => format!("{:e}", self.aca_tol),
            "leaf-t" => self.leaf_t.to_string(),
            "seed" => self.seed.to_string(),
            "out" => self
                .out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "history" => self.history.to_string(),
            _ => return None,
        })
    }

    /// Fully resolved configuration as `key = value` lines; re-applying it
    /// reproduces the configuration.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key).unwrap_or_default());
        }
        s
    }

    pub fn points(&self) -> Result<PointSet> {
        match &self.domain {
            Domain::Cube => gen_cube(self.dims, self.dist, self.seed),
            Domain::Sphere => gen_sphere(self.dims, self.dist, self.seed),
            Domain::File(p) => load_points(p),
        }
    }
}

/// Splits `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Expands a table config: values containing `,` are lists and the result is
/// their cartesian product, varying the last listed key fastest. The `exact`
/// key is never split.
pub fn expand_table_config(text: &str, base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    let pairs = parse_kv(text)?;
    let mut configs = vec![base.clone()];
    for (key, value) in pairs {
        let values: Vec<&str> = if key == "exact" {
            vec![value.as_str()]
        } else {
            value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .collect()
        };
        if values.is_empty() {
            return Err(Error::Config(format!("key '{key}' has no values")));
        }
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for cfg in &configs {
            for v in &values {
                let mut c = cfg.clone();
                c.set(&key, v)?;
                next.push(c);
            }
        }
        configs = next;
    }
    Ok(configs)
}

pub fn compute_relative_error(u: &Tensor3, u_exact: &Tensor3) -> Result<f64> {
    if u.shape() != u_exact.shape() {
        return Err(Error::ShapeMismatch {
            expected: u_exact.shape(),
            found: u.shape(),
        });
    }
    let norm = u_exact.fro_norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error against a zero exact solution".into(),
        ));
    }
    Ok((u_exact - u).fro_norm() / norm)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub report: SolveReport,
    pub relative_error: f64,
    /// Seconds spent generating points and assembling operators.
    pub assembly_time: f64,
    /// `(iteration, relative error)` per iterate when `config.history` is set.
    pub error_history: Vec<(usize, f64)>,
    /// Statistics of the compressed operator tensor.
    pub compression: Option<CompressionStats>,
    /// Statistics of the compressed system tensor used for `U = A *3 Y`.
    pub compression_a: Option<CompressionStats>,
    pub n_points: usize,
}

impl RunRecord {
    /// `mu` in the notation of the respective reduced problem: the square
    /// root of `lambda` for GMRES, `lambda` itself for LSQR.
    pub fn mu_final(&self) -> Option<f64> {
        self.report
            .final_lambda()
            .map(|l| match self.config.solver {
                SolverKind::Ggmres => l.sqrt(),
                SolverKind::Glsqr => l,
            })
    }

    pub fn to_report(&self) -> String {
        let mut s = String::new();
        s.push_str("# resolved configuration\n");
        s.push_str(&self.config.to_kv());
        let _ = writeln!(s, "defaulted = {}", self.config.defaulted_keys().join(","));
        s.push_str("# results\n");
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "relative_error = {:.16e}", self.relative_error);
        let _ = writeln!(s, "termination = {}", self.report.termination);
        let _ = writeln!(s, "outer_iterations = {}", self.report.outer_iterations);
        let _ = writeln!(s, "inner_steps = {}", self.report.inner_steps);
        if let Some(l) = self.report.final_lambda() {
            let _ = writeln!(s, "lambda_final = {:.16e}", l);
        }
        if let Some(m) = self.mu_final() {
            let _ = writeln!(s, "mu_final = {:.16e}", m);
        }
        if let Some(r) = self.report.residual_history.last() {
            let _ = writeln!(s, "relative_residual = {:.16e}", r);
        }
        let _ = writeln!(s, "assembly_seconds = {:.6}", self.assembly_time);
        let _ = writeln!(s, "solve_seconds = {:.6}", self.report.wall_time);
        if let Some(c) = &self.compression {
            s.push_str("# compressed operator tensor\n");
            s.push_str(&c.to_report());
        }
        if let Some(c) = &self.compression_a {
            s.push_str("# compressed system tensor\n");
            s.push_str(&c.to_report());
        }
        s
    }
}

enum Built {
    Dense(Operator6),
    Hier(HOperator),
}

impl Built {
    fn map(&self) -> &dyn LinearMap {
        match self {
            Built::Dense(o) => o,
            Built::Hier(o) => o,
        }
    }

    fn stats(&self) -> Option<CompressionStats> {
        match self {
            Built::Dense(_) => None,
            Built::Hier(o) => Some(o.stats().clone()),
        }
    }
}

/// Runs the full pipeline for one configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let with_config =
        |e: Error| -> Error { Error::Config(format!("{e}\n# configuration\n{}", cfg.to_kv())) };
    run_inner(cfg).map_err(with_config)
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let points = cfg.points()?;
    let shape = points.shape();
    let kernel = MqKernel::new(cfg.epsilon)?;
    let exact = cfg.exact_solution();
    let problem = HelmholtzProblem::new(cfg.wavenumber, cfg.bc_a, cfg.bc_b, exact.clone())?;

    let (h, a) = match cfg.compress {
        Compression::Dense => (
            Built::Dense(assemble_h(&points, &kernel, &problem)?),
            Built::Dense(assemble_a(&points, &kernel)),
        ),
        Compression::HMatrix => {
            let params = HParams {
                eta: cfg.eta,
                aca_tol: cfg.aca_tol,
                leaf_threshold: HParams::leaf_threshold_for(shape, cfg.leaf_t),
            };
            (
                Built::Hier(assemble_hmatrix(&points, &kernel, Some(&problem), params)?),
                Built::Hier(assemble_hmatrix(&points, &kernel, None, params)?),
            )
        }
    };
    let f = assemble_f(&points, &problem)?;
    let u_exact = sample_exact(&points, &exact);
    let assembly_time = start.elapsed().as_secs_f64();

    let mut error_history = Vec::new();
    let mut history_err = None;
    let observe = |it: usize, y: &Tensor3| {
        if !cfg.history || history_err.is_some() {
            return;
        }
        match a
            .map()
            .apply(y)
            .and_then(|u| compute_relative_error(&u, &u_exact))
        {
            Ok(e) => error_history.push((it, e)),
            Err(e) => history_err = Some(e),
        }
    };
    let solver_cfg = cfg.solver_config();
    let report = match cfg.solver {
        SolverKind::Ggmres => {
            gmres_tikhonov_observed(h.map(), &f, &Tensor3::zeros(shape), &solver_cfg, observe)?
        }
        SolverKind::Glsqr => lsqr_tikhonov_observed(h.map(), &f, &solver_cfg, observe)?,
    };
    if let Some(e) = history_err {
        return Err(e);
    }
    let u = a.map().apply(&report.solution)?;
    let relative_error = compute_relative_error(&u, &u_exact)?;
    Ok(RunRecord {
        config: cfg.clone(),
        report,
        relative_error,
        assembly_time,
        error_history,
        compression: h.stats(),
        compression_a: a.stats(),
        n_points: points.len(),
    })
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub distribution: String,
    pub size: String,
    pub method: String,
    pub relative_error: Option<f64>,
    pub cpu_seconds: Option<f64>,
    pub iterations: Option<usize>,
    pub mu_final: Option<f64>,
    pub error: String,
}

pub const TABLE_HEADER: [&str; 8] = [
    "distribution",
    "M=N=P",
    "method",
    "relative_error",
    "cpu_seconds",
    "iterations",
    "mu_final",
    "error",
];

fn size_label(s: Shape3) -> String {
    if s.m == s.n && s.n == s.p {
        s.m.to_string()
    } else {
        s.to_string()
    }
}

impl TableRow {
    pub fn from_result(cfg: &ExperimentConfig, res: &Result<RunRecord>) -> Self {
        let mut row = TableRow {
            distribution: cfg.dist.to_string(),
            size: size_label(cfg.dims),
            method: cfg.solver.to_string(),
            relative_error: None,
            cpu_seconds: None,
            iterations: None,
            mu_final: None,
            error: String::new(),
        };
        match res {
            Ok(rec) => {
                row.relative_error = Some(rec.relative_error);
                row.cpu_seconds = Some(rec.report.wall_time);
                row.iterations = Some(rec.report.outer_iterations);
                row.mu_final = rec.mu_final();
            }
            Err(e) => {
                row.error = e.to_string().lines().next().unwrap_or("").to_string();
            }
        }
        row
    }

    fn fields(&self) -> [String; 8] {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        [
            self.distribution.clone(),
            self.size.clone(),
            self.method.clone(),
            f(self.relative_error),
            f(self.cpu_seconds),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            f(self.mu_final),
            self.error.clone(),
        ]
    }

    fn parse(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != TABLE_HEADER.len() {
            return Err(Error::Config(format!(
                "table row has {} fields, expected {}",
                rec.len(),
                TABLE_HEADER.len()
            )));
        }
        let f = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(TABLE_HEADER[i], s).map(Some)
            }
        };
        Ok(TableRow {
            distribution: rec[0].to_string(),
            size: rec[1].to_string(),
            method: rec[2].to_string(),
            relative_error: f(3)?,
            cpu_seconds: f(4)?,
            iterations: if rec[5].is_empty() {
                None
            } else {
                Some(parse_usize("iterations", &rec[5])?)
            },
            mu_final: f(6)?,
            error: rec[7].to_string(),
        })
    }
}

/// Runs every configuration; failures become rows with the error column set.
pub fn run_table(configs: &[ExperimentConfig]) -> Result<Vec<(TableRow, Option<RunRecord>)>> {
    if configs.is_empty() {
        return Err(Error::Config(
            "table needs at least one configuration".into(),
        ));
    }
    Ok(configs
        .iter()
        .map(|cfg| {
            let res = run_experiment(cfg);
            let row = TableRow::from_result(cfg, &res);
            (row, res.ok())
        })
        .collect())
}

pub fn write_table_csv<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = &'a TableRow>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TABLE_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_table_csv(path: impl AsRef<Path>) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let header = r.headers()?.clone();
    if header.iter().ne(TABLE_HEADER.iter().copied()) {
        return Err(Error::Config("unexpected table header".into()));
    }
    r.records().map(|rec| TableRow::parse(&rec?)).collect()
}

/// `iteration,relative_error` pairs.
pub fn write_history_csv(path: impl AsRef<Path>, history: &[(usize, f64)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "relative_error"])?;
    for (it, e) in history {
        w.write_record([it.to_string(), format!("{e:.16e}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_report(path: impl AsRef<Path>, record: &RunRecord) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, record.to_report()).map_err(|e| Error::io(path, e))
}
