//! Seeded Monte-Carlo experiments over a grid of SNR (or separation) values.
//!
//! Every replicate generates a dataset, solves the SDP, rounds it and records
//! one [`ExperimentRecord`]. Replicate `r` of sweep point `s` uses seed
//! `base_seed + 1000·s + r`. Rows are emitted in `(s, r)` order regardless of
//! how many worker threads run, so output depends only on the configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use ini::Ini;

use crate::error::{Error, Result};
use crate::io::read_centers_csv;
use crate::linalg::pairwise_sq_dists;
use crate::metrics::{center_error, l1_error, misrate};
use crate::mixture::{sample_dataset, snr, CenterLayout, MixtureSpec, Noise};
use crate::oracle::{build_instance, ip_worst_error};
use crate::pipeline::{estimate_centers, lloyd_baseline, ClusteringConfig};
use crate::rounding::{equalize, extract_balls_with_radius, RADIUS_DIVISOR};
use crate::sdp::{elementwise_round, solve_sdp, SolverConfig};

/// Stride between the seeds of consecutive sweep points.
pub const SEED_STRIDE: u64 = 1000;

const LLOYD_MAX_ITER: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutKind {
    Simplex,
    TwoPoint,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Ball,
    Sphere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub layout: LayoutKind,
    pub center_file: Option<PathBuf>,
    pub noise: NoiseKind,
    /// Gaussian noise scale σ (= τ). Ignored for ball/sphere noise.
    pub sigma: f64,
    /// τ = C/√d for ball and sphere noise.
    pub ball_constant: f64,
}

/// What the sweep values mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    /// Values are SNRs `s`; the separation is set to `Δ = s·τ`.
    Snr,
    /// Values are separations Δ.
    Delta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChecksConfig {
    pub run_oracle_ip: bool,
    pub run_lloyd: bool,
    pub check_snr_condition: bool,
    /// Constant in the SNR condition; reported, never enforced.
    pub c_s: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            run_oracle_ip: true,
            run_lloyd: true,
            check_snr_condition: true,
            c_s: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub radius_divisor: f64,
    pub checks: ChecksConfig,
    pub output: Option<PathBuf>,
    /// Write wall-clock times; disable for byte-reproducible CSVs.
    pub record_runtime: bool,
}

impl ExperimentConfig {
    /// Configuration with default solver, checks and output settings.
    pub fn new(model: ModelConfig, sweep: SweepConfig) -> Self {
        ExperimentConfig {
            model,
            sweep,
            solver: SolverConfig::default(),
            radius_divisor: RADIUS_DIVISOR,
            checks: ChecksConfig::default(),
            output: None,
            record_runtime: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.k < 2 || m.n < 4 || m.n % m.k != 0 {
            return Err(Error::input(format!(
                "model needs k >= 2, n >= 4 and n a multiple of k; got n = {}, k = {}",
                m.n, m.k
            )));
        }
        if m.d == 0 {
            return Err(Error::input("model d must be at least 1"));
        }
        if m.layout == LayoutKind::File && m.center_file.is_none() {
            return Err(Error::input("layout = file needs center_file"));
        }
        if m.noise == NoiseKind::Gaussian && !(m.sigma.is_finite() && m.sigma >= 0.0) {
            return Err(Error::input(format!("sigma must be >= 0, got {}", m.sigma)));
        }
        if m.noise != NoiseKind::Gaussian && !(m.ball_constant.is_finite() && m.ball_constant > 0.0) {
            return Err(Error::input("ball_constant must be positive"));
        }
        let s = &self.sweep;
        if s.values.is_empty() {
            return Err(Error::input("sweep needs at least one value"));
        }
        if let Some(v) = s.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::input(format!("sweep values must be positive, got {v}")));
        }
        if s.replicates == 0 || s.replicates as u64 > SEED_STRIDE {
            return Err(Error::input(format!(
                "replicates must be in 1..={SEED_STRIDE}, got {}",
                s.replicates
            )));
        }
        if s.threads == 0 {
            return Err(Error::input("threads must be at least 1"));
        }
        if self.checks.c_s < 0.0 {
            return Err(Error::input("c_s must be non-negative"));
        }
        if !(self.radius_divisor > 0.0) {
            return Err(Error::input("radius_divisor must be positive"));
        }
        self.solver.validate()
    }

    /// Parses the `key = value` / `[section]` configuration format.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line,
            msg: e.msg.to_string(),
        })?;
        let cfg = ConfigReader { ini: &ini, text, origin };
        cfg.check_known_keys()?;

        let noise = match cfg.get("model", "noise")?.unwrap_or("gaussian") {
            "gaussian" => NoiseKind::Gaussian,
            "ball" => NoiseKind::Ball,
            "sphere" => NoiseKind::Sphere,
            other => return Err(cfg.bad("model", "noise", format!("unknown noise {other:?}"))),
        };
        let layout = match cfg.get("model", "layout")?.unwrap_or("simplex") {
            "simplex" => LayoutKind::Simplex,
            "two-point" => LayoutKind::TwoPoint,
            "file" => LayoutKind::File,
            other => return Err(cfg.bad("model", "layout", format!("unknown layout {other:?}"))),
        };
        let center_file = cfg.get("model", "center_file")?.map(|p| {
            let p = PathBuf::from(p);
            match origin.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        });
        let model = ModelConfig {
            n: cfg.required("model", "n")?,
            k: cfg.required("model", "k")?,
            d: cfg.required("model", "d")?,
            layout,
            center_file,
            noise,
            sigma: cfg.parsed("model", "sigma")?.unwrap_or(1.0),
            ball_constant: cfg.parsed("model", "ball_constant")?.unwrap_or(1.0),
        };

        let (kind, key) = match (cfg.get("sweep", "snr")?, cfg.get("sweep", "delta")?) {
            (Some(_), Some(_)) => {
                return Err(cfg.bad("sweep", "delta", "give either snr or delta, not both".into()))
            }
            (Some(_), None) => (SweepKind::Snr, "snr"),
            (None, Some(_)) => (SweepKind::Delta, "delta"),
            (None, None) => return Err(cfg.bad("sweep", "snr", "missing snr or delta list".into())),
        };
        let sweep = SweepConfig {
            kind,
            values: cfg.list("sweep", key)?,
            replicates: cfg.parsed("sweep", "replicates")?.unwrap_or(1),
            base_seed: cfg.parsed("sweep", "base_seed")?.unwrap_or(0),
            threads: cfg.parsed("sweep", "threads")?.unwrap_or(1),
        };

        let (solver, radius_divisor) = cfg.solver_block()?;

        let check_defaults = ChecksConfig::default();
        let checks = ChecksConfig {
            run_oracle_ip: cfg.parsed("checks", "run_oracle_ip")?.unwrap_or(check_defaults.run_oracle_ip),
            run_lloyd: cfg.parsed("checks", "run_lloyd")?.unwrap_or(check_defaults.run_lloyd),
            check_snr_condition: cfg
                .parsed("checks", "check_snr_condition")?
                .unwrap_or(check_defaults.check_snr_condition),
            c_s: cfg.parsed("checks", "c_s")?.unwrap_or(check_defaults.c_s),
        };

        let config = ExperimentConfig {
            model,
            sweep,
            solver,
            radius_divisor,
            checks,
            output: cfg.get("output", "path")?.map(PathBuf::from),
            record_runtime: cfg.parsed("output", "record_runtime")?.unwrap_or(true),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn noise(&self) -> Noise {
        match self.model.noise {
            NoiseKind::Gaussian => Noise::SphericalGaussian {
                sigma: self.model.sigma,
            },
            NoiseKind::Ball => Noise::UniformBall,
            NoiseKind::Sphere => Noise::UniformSphere,
        }
    }

    /// Model for sweep value `value`.
    pub fn spec_for(&self, value: f64) -> Result<MixtureSpec> {
        let m = &self.model;
        let noise = self.noise();
        let tau = noise.default_tau(m.d, m.ball_constant);
        let delta = match self.sweep.kind {
            SweepKind::Snr => value * tau,
            SweepKind::Delta => value,
        };
        let centers = match m.layout {
            LayoutKind::Simplex => CenterLayout::Simplex { delta }.centers(m.k, m.d)?,
            LayoutKind::TwoPoint => CenterLayout::TwoPoint { delta }.centers(m.k, m.d)?,
            LayoutKind::File => {
                let path = m.center_file.as_ref().expect("validated");
                let raw = CenterLayout::Explicit(read_centers_csv(path)?).centers(m.k, m.d)?;
                // Rescale so the minimum separation equals Δ.
                let probe = MixtureSpec::new(m.n, raw.clone(), noise, m.ball_constant)?;
                let factor = delta / snr(&probe)?.delta;
                raw.into_iter()
                    .map(|c| c.into_iter().map(|v| v * factor).collect())
                    .collect()
            }
        };
        MixtureSpec::new(m.n, centers, noise, m.ball_constant)
    }

    pub fn seed(&self, sweep_index: usize, replicate: usize) -> u64 {
        self.sweep
            .base_seed
            .wrapping_add(SEED_STRIDE * sweep_index as u64)
            .wrapping_add(replicate as u64)
    }
}

struct ConfigReader<'a> {
    ini: &'a Ini,
    text: &'a str,
    origin: &'a Path,
}

/// Reads only the `[solver]` block of a configuration file; the other
/// sections may be present and are checked for unknown keys but otherwise
/// ignored.
pub fn clustering_config_from_file(path: &Path) -> Result<ClusteringConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ini = Ini::load_from_str_noescape(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line,
        msg: e.msg.to_string(),
    })?;
    let cfg = ConfigReader {
        ini: &ini,
        text: &text,
        origin: path,
    };
    cfg.check_known_keys()?;
    let (solver, radius_divisor) = cfg.solver_block()?;
    Ok(ClusteringConfig {
        solver,
        radius_divisor,
    })
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("model", &["n", "k", "d", "layout", "center_file", "noise", "sigma", "ball_constant"]),
    ("sweep", &["snr", "delta", "replicates", "base_seed", "threads"]),
    (
        "solver",
        &[
            "method",
            "rho",
            "tol_primal",
            "tol_dual",
            "max_iter",
            "log_every",
            "adaptive_rho",
            "radius_divisor",
        ],
    ),
    ("checks", &["run_oracle_ip", "run_lloyd", "check_snr_condition", "c_s"]),
    ("output", &["path", "record_runtime"]),
];

impl ConfigReader<'_> {
    fn solver_block(&self) -> Result<(SolverConfig, f64)> {
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            rho: self.parsed("solver", "rho")?,
            tol_primal: self.parsed("solver", "tol_primal")?.unwrap_or(defaults.tol_primal),
            tol_dual: self.parsed("solver", "tol_dual")?.unwrap_or(defaults.tol_dual),
            max_iter: self.parsed("solver", "max_iter")?.unwrap_or(defaults.max_iter),
            log_every: self.parsed("solver", "log_every")?.unwrap_or(defaults.log_every),
            adaptive_rho: self.parsed("solver", "adaptive_rho")?.unwrap_or(defaults.adaptive_rho),
            method: self.parsed("solver", "method")?.unwrap_or(defaults.method),
        };
        let radius_divisor = self.parsed("solver", "radius_divisor")?.unwrap_or(RADIUS_DIVISOR);
        if !(radius_divisor > 0.0) {
            return Err(self.bad("solver", "radius_divisor", "must be positive".into()));
        }
        solver.validate()?;
        Ok((solver, radius_divisor))
    }

    /// 1-based line of `key` inside `[section]`, for error messages.
    fn line_of(&self, section: &str, key: &str) -> usize {
        let mut current = String::new();
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim().to_string();
            } else if current == section
                && line.split(['=', ':']).next().map(str::trim) == Some(key)
            {
                return i + 1;
            }
        }
        0
    }

    fn bad(&self, section: &str, key: &str, msg: String) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line: self.line_of(section, key),
            msg: format!("[{section}] {key}: {msg}"),
        }
    }

    fn check_known_keys(&self) -> Result<()> {
        for (section, props) in self.ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(Error::Parse {
                        path: self.origin.to_path_buf(),
                        line: self.line_of("", key),
                        msg: format!("key {key:?} outside of any section"),
                    });
                }
                continue;
            };
            let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| *s == section) else {
                return Err(Error::Parse {
                    path: self.origin.to_path_buf(),
                    line: 0,
                    msg: format!("unknown section [{section}]"),
                });
            };
            for (key, _) in props.iter() {
                if !keys.contains(&key) {
                    return Err(self.bad(section, key, "unknown key".into()));
                }
            }
        }
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Result<Option<&str>> {
        Ok(self
            .ini
            .section(Some(section))
            .and_then(|p| p.get(key))
            .map(str::trim)
            .filter(|v| !v.is_empty()))
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key)? {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.bad(section, key, format!("cannot parse {v:?}"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.parsed(section, key)?
            .ok_or_else(|| self.bad(section, key, "required key is missing".into()))
    }

    fn list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(section, key)?.unwrap_or("");
        raw.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| self.bad(section, key, format!("cannot parse {:?}", v.trim())))
            })
            .collect()
    }
}

/// Right-hand side of the SNR condition
/// `s² ≥ C_s·(√(k·d·ln n / n) + k·d/n + k)` and whether `s` satisfies it.
pub fn snr_condition(n: usize, k: usize, d: usize, s: f64, c_s: f64) -> (f64, bool) {
    let (n, k, d) = (n as f64, k as f64, d as f64);
    let rhs = c_s * ((k * d * n.ln() / n).sqrt() + k * d / n + k);
    (rhs, s * s >= rhs)
}

/// One replicate's metrics. `None` fields are written as `NA`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub run_id: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub snr: f64,
    pub delta: f64,
    pub tau: f64,
    pub sdp_converged: Option<bool>,
    pub sdp_iters: Option<usize>,
    pub objective: Option<f64>,
    pub l1_ratio: Option<f64>,
    /// Oracle worst-case error as a per-point fraction (`count/n`).
    pub ip_ratio: Option<f64>,
    pub misrate: Option<f64>,
    pub misrate_lloyd: Option<f64>,
    pub center_err_perm: Option<f64>,
    pub exact_recovery: Option<bool>,
    pub snr_condition_value: Option<f64>,
    pub runtime_ms: Option<f64>,
    /// Failure message for a replicate that could not be completed.
    pub error: Option<String>,
}

pub const CSV_HEADER: &[&str] = &[
    "run_id",
    "seed",
    "n",
    "k",
    "d",
    "snr",
    "delta",
    "tau",
    "sdp_converged",
    "sdp_iters",
    "objective",
    "l1_ratio",
    "ip_ratio",
    "misrate",
    "misrate_lloyd",
    "center_err_perm",
    "exact_recovery",
    "snr_condition_value",
    "runtime_ms",
    "error",
];

const NA: &str = "NA";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| NA.to_string(), ToString::to_string)
}

fn opt_flag(v: Option<bool>) -> String {
    v.map_or_else(|| NA.to_string(), |b| u8::from(b).to_string())
}

impl ExperimentRecord {
    pub fn to_fields(&self) -> Vec<String> {
        vec![
            self.run_id.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.d.to_string(),
            self.snr.to_string(),
            self.delta.to_string(),
            self.tau.to_string(),
            opt_flag(self.sdp_converged),
            opt(&self.sdp_iters),
            opt(&self.objective),
            opt(&self.l1_ratio),
            opt(&self.ip_ratio),
            opt(&self.misrate),
            opt(&self.misrate_lloyd),
            opt(&self.center_err_perm),
            opt_flag(self.exact_recovery),
            opt(&self.snr_condition_value),
            opt(&self.runtime_ms),
            self.error.clone().unwrap_or_default(),
        ]
    }

    /// The Theorem-1-style check `‖Ŷ − Y*‖₁/‖Y*‖₁ ≤ 2·‖F − F*‖₁/‖F*‖₁`, with
    /// the oracle error converted from the per-point fraction.
    pub fn satisfies_ip_bound(&self) -> Option<bool> {
        Some(self.l1_ratio? <= 2.0 * (2.0 * self.ip_ratio?))
    }

    fn parse(fields: &csv::StringRecord, path: &Path, line: usize) -> Result<Self> {
        let bad = |col: &str, v: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("column {col}: cannot parse {v:?}"),
        };
        let get = |i: usize| fields.get(i).unwrap_or("");
        fn req<T: std::str::FromStr>(
            v: &str,
            col: &str,
            bad: &dyn Fn(&str, &str) -> Error,
        ) -> Result<T> {
            v.parse().map_err(|_| bad(col, v))
        }
        fn na<T: std::str::FromStr>(
            v: &str,
            col: &str,
            bad: &dyn Fn(&str, &str) -> Error,
        ) -> Result<Option<T>> {
            if v == NA {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(col, v))
            }
        }
        fn flag(v: &str, col: &str, bad: &dyn Fn(&str, &str) -> Error) -> Result<Option<bool>> {
            match v {
                NA => Ok(None),
                "0" => Ok(Some(false)),
                "1" => Ok(Some(true)),
                _ => Err(bad(col, v)),
            }
        }
        if fields.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {} fields, found {}", CSV_HEADER.len(), fields.len()),
            });
        }
        let h = CSV_HEADER;
        Ok(ExperimentRecord {
            run_id: req(get(0), h[0], &bad)?,
            seed: req(get(1), h[1], &bad)?,
            n: req(get(2), h[2], &bad)?,
            k: req(get(3), h[3], &bad)?,
            d: req(get(4), h[4], &bad)?,
            snr: req(get(5), h[5], &bad)?,
            delta: req(get(6), h[6], &bad)?,
            tau: req(get(7), h[7], &bad)?,
            sdp_converged: flag(get(8), h[8], &bad)?,
            sdp_iters: na(get(9), h[9], &bad)?,
            objective: na(get(10), h[10], &bad)?,
            l1_ratio: na(get(11), h[11], &bad)?,
            ip_ratio: na(get(12), h[12], &bad)?,
            misrate: na(get(13), h[13], &bad)?,
            misrate_lloyd: na(get(14), h[14], &bad)?,
            center_err_perm: na(get(15), h[15], &bad)?,
            exact_recovery: flag(get(16), h[16], &bad)?,
            snr_condition_value: na(get(17), h[17], &bad)?,
            runtime_ms: na(get(18), h[18], &bad)?,
            error: Some(get(19).to_string()).filter(|s| !s.is_empty()),
        })
    }
}

/// Generates, solves, rounds and measures one replicate.
pub fn run_replicate(config: &ExperimentConfig, sweep_index: usize, replicate: usize) -> ExperimentRecord {
    let seed = config.seed(sweep_index, replicate);
    let value = config.sweep.values[sweep_index];
    let m = &config.model;
    let mut record = ExperimentRecord {
        run_id: sweep_index * config.sweep.replicates + replicate,
        seed,
        n: m.n,
        k: m.k,
        d: m.d,
        snr: f64::NAN,
        delta: f64::NAN,
        tau: f64::NAN,
        sdp_converged: None,
        sdp_iters: None,
        objective: None,
        l1_ratio: None,
        ip_ratio: None,
        misrate: None,
        misrate_lloyd: None,
        center_err_perm: None,
        exact_recovery: None,
        snr_condition_value: None,
        runtime_ms: None,
        error: None,
    };
    if let Err(e) = fill_record(config, value, seed, &mut record) {
        record.error = Some(e.to_string().replace(['\n', '\r'], " "));
    }
    record
}

fn fill_record(config: &ExperimentConfig, value: f64, seed: u64, rec: &mut ExperimentRecord) -> Result<()> {
    let start = Instant::now();
    let spec = config.spec_for(value)?;
    let s = snr(&spec)?;
    rec.snr = s.snr;
    rec.delta = s.delta;
    rec.tau = s.tau;
    if config.checks.check_snr_condition {
        rec.snr_condition_value = Some(snr_condition(spec.n, spec.k, spec.d, s.snr, config.checks.c_s).0);
    }

    let ds = sample_dataset(&spec, seed)?;
    let k = spec.k;
    let a = pairwise_sq_dists(&ds.points)?;
    let sol = solve_sdp(&a, k, &config.solver)?;
    rec.sdp_converged = Some(sol.converged);
    rec.sdp_iters = Some(sol.iterations);
    rec.objective = Some(sol.objective);

    let truth = crate::mixture::ground_truth(&ds.labels, k)?;
    rec.l1_ratio = Some(l1_error(&sol.y, &truth.cluster_matrix)?.1);
    rec.exact_recovery = Some(elementwise_round(&sol.y) == truth.cluster_matrix);

    let radius = spec.n as f64 / (config.radius_divisor * k as f64);
    let assignment = equalize(&extract_balls_with_radius(&sol.y, k, radius)?, spec.n, k)?;
    rec.misrate = Some(misrate(assignment.labels(), &ds.labels, k)?.0);
    let centers_hat = estimate_centers(&ds.points, &assignment)?;
    rec.center_err_perm = Some(center_error(&centers_hat, &spec.centers)?.0);

    if config.checks.run_oracle_ip {
        rec.ip_ratio = Some(ip_worst_error(&build_instance(&ds)?).ratio);
    }
    if config.checks.run_lloyd {
        let lloyd = lloyd_baseline(&ds.points, k, seed, LLOYD_MAX_ITER)?;
        rec.misrate_lloyd = Some(misrate(lloyd.labels(), &ds.labels, k)?.0);
    }
    if config.record_runtime {
        rec.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(())
}

/// Runs every replicate and returns the records in `(sweep, replicate)`
/// order. When `config.output` is set, rows are streamed to that CSV as they
/// become available in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let mut sink: Option<(PathBuf, BufWriter<File>)> = match &config.output {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{}", CSV_HEADER.join(",")).map_err(|e| Error::io(path, e))?;
            Some((path.clone(), w))
        }
        None => None,
    };
    let mut emit = |rec: &ExperimentRecord| -> Result<()> {
        if let Some((path, w)) = sink.as_mut() {
            writeln!(w, "{}", csv_line(rec)).map_err(|e| Error::io(&*path, e))?;
            w.flush().map_err(|e| Error::io(&*path, e))?;
        }
        Ok(())
    };

    let reps = config.sweep.replicates;
    let total = config.sweep.values.len() * reps;
    let threads = config.sweep.threads.min(total).max(1);
    let mut records = Vec::with_capacity(total);

    if threads == 1 {
        for job in 0..total {
            let rec = run_replicate(config, job / reps, job % reps);
            emit(&rec)?;
            records.push(rec);
        }
        return Ok(records);
    }

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..threads {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let job = next.fetch_add(1, Ordering::Relaxed);
                if job >= total {
                    break;
                }
                let rec = run_replicate(config, job / reps, job % reps);
                if tx.send((job, rec)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (job, rec) in rx {
            pending.insert(job, rec);
            while let Some(rec) = pending.remove(&records.len()) {
                emit(&rec)?;
                records.push(rec);
            }
        }
        Ok(())
    })?;
    Ok(records)
}

/// Serializes one record as a CSV line (no trailing newline).
pub fn csv_line(rec: &ExperimentRecord) -> String {
    rec.to_fields()
        .iter()
        .map(|f| {
            if f.contains([',', '"']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&csv_line(r));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
    let header = reader.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("unexpected header, expected {}", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        records.push(ExperimentRecord::parse(&row, path, line)?);
    }
    Ok(records)
}

/// Aggregates for one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub snr: f64,
    pub delta: f64,
    pub n: usize,
    pub runs: usize,
    pub failed: usize,
    pub converged_frac: f64,
    pub median_misrate: f64,
    pub mean_misrate: f64,
    pub recovery_freq: f64,
    /// Fraction of runs with `l1_ratio ≤ 2·(2·ip_ratio)`; `None` without oracle data.
    pub ip_bound_frac: Option<f64>,
    pub mean_center_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub points: Vec<SweepSummary>,
    /// Least-squares slope of `ln(median misrate + 1/n)` against `s²`.
    pub decay_slope: Option<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Groups records by sweep point (consecutive equal `(snr, delta)`, in
/// order of first appearance) and computes per-point statistics.
pub fn summarize_records(records: &[ExperimentRecord]) -> Summary {
    let mut groups: Vec<Vec<&ExperimentRecord>> = Vec::new();
    for r in records {
        let same = |g: &Vec<&ExperimentRecord>| {
            g[0].snr.to_bits() == r.snr.to_bits() && g[0].delta.to_bits() == r.delta.to_bits()
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }

    let points: Vec<SweepSummary> = groups
        .iter()
        .map(|g| {
            let ok: Vec<&&ExperimentRecord> = g.iter().filter(|r| r.error.is_none()).collect();
            let rates: Vec<f64> = ok.iter().filter_map(|r| r.misrate).collect();
            let recov: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.exact_recovery)
                .map(|b| f64::from(u8::from(b)))
                .collect();
            let bound: Vec<bool> = ok.iter().filter_map(|r| r.satisfies_ip_bound()).collect();
            let conv: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.sdp_converged)
                .map(|b| f64::from(u8::from(b)))
                .collect();
            let cerr: Vec<f64> = ok.iter().filter_map(|r| r.center_err_perm).collect();
            SweepSummary {
                snr: g[0].snr,
                delta: g[0].delta,
                n: g[0].n,
                runs: g.len(),
                failed: g.len() - ok.len(),
                converged_frac: mean(&conv),
                median_misrate: median(&rates),
                mean_misrate: mean(&rates),
                recovery_freq: mean(&recov),
                ip_bound_frac: (!bound.is_empty())
                    .then(|| bound.iter().filter(|b| **b).count() as f64 / bound.len() as f64),
                mean_center_err: mean(&cerr),
            }
        })
        .collect();

    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.median_misrate.is_finite() && p.snr.is_finite())
        .map(|p| (p.snr * p.snr, (p.median_misrate + 1.0 / p.n as f64).ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
    Summary {
        decay_slope: ls_slope(&x, &y),
        points,
    }
}

pub fn summarize(csv_path: &Path) -> Result<Summary> {
    Ok(summarize_records(&read_records(csv_path)?))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x:.4}"))
}

impl Summary {
    /// Fixed-width text table, one line per sweep point plus the fitted slope.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>5} {:>6} {:>9} {:>12} {:>12} {:>9} {:>9} {:>11}",
            "snr", "delta", "runs", "failed", "converged", "median_mis", "mean_mis", "recovery", "ip_bound", "center_err"
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:>10.4} {:>10.4} {:>5} {:>6} {:>9.3} {:>12.6} {:>12.6} {:>9.3} {:>9} {:>11.5}",
                p.snr,
                p.delta,
                p.runs,
                p.failed,
                p.converged_frac,
                p.median_misrate,
                p.mean_misrate,
                p.recovery_freq,
                fmt_opt(p.ip_bound_frac),
                p.mean_center_err
            );
        }
        let _ = writeln!(out, "decay slope of ln(median misrate + 1/n) vs s^2: {}", fmt_opt(self.decay_slope));
        out
    }
}
