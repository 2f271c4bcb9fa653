//! Experiment configuration: a flat `key = value` text format.
//!
//! Unknown keys are hard errors; anything omitted falls back to a documented
//! default and is listed in the report so every run is reproducible from its
//! own output.

use crate::error::{Error, Result};
use crate::lattice::Integrator;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ResidualScaling,
    Theorem5,
    Metastability,
    Coercivity,
    Selftest,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::ResidualScaling => "residual-scaling",
            ExperimentKind::Theorem5 => "theorem5",
            ExperimentKind::Metastability => "metastability",
            ExperimentKind::Coercivity => "coercivity",
            ExperimentKind::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual-scaling" => Ok(ExperimentKind::ResidualScaling),
            "theorem5" => Ok(ExperimentKind::Theorem5),
            "metastability" => Ok(ExperimentKind::Metastability),
            "coercivity" => Ok(ExperimentKind::Coercivity),
            "selftest" => Ok(ExperimentKind::Selftest),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Shape of the right-moving field `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GProfile {
    None,
    GardnerSoliton,
    Gaussian { amp: f64, width: f64 },
}

impl fmt::Display for GProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GProfile::None => write!(f, "none"),
            GProfile::GardnerSoliton => write!(f, "gardner_soliton"),
            GProfile::Gaussian { amp, width } => write!(f, "gaussian:{amp}:{width}"),
        }
    }
}

impl std::str::FromStr for GProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(GProfile::None);
        }
        if s == "gardner_soliton" {
            return Ok(GProfile::GardnerSoliton);
        }
        if let Some(rest) = s.strip_prefix("gaussian:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() == 2 {
                let amp = parse_f64("g_profile amplitude", parts[0])?;
                let width = parse_f64("g_profile width", parts[1])?;
                if amp.abs() > 0.0 && width > 0.0 {
                    return Ok(GProfile::Gaussian { amp, width });
                }
            }
        }
        Err(Error::Config(format!(
            "g_profile must be none | gardner_soliton | gaussian:<amp>:<width>, got '{s}'"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Strictly decreasing list in (0,1).
    pub eps_list: Vec<f64>,
    /// Slow horizon of the ε⁻³ theorem.
    pub tau0: f64,
    /// Meta-stability exponent sacrifice, in (0, 1/2).
    pub r: f64,
    /// Meta-stability rate constant K in `t₀(ε) = r K⁻¹ ε⁻³ |log ε|`.
    pub big_k: f64,
    /// Kink parameter v of `√(12v)·tanh(√(12v)(X - vT))`.
    pub kink_v: f64,
    pub g_profile: GProfile,
    /// Target slow-grid spacing; actual spacing is `ε/p` for integer `p`.
    pub dxi_target: f64,
    /// Minimum slow box length; 0 selects `40/√(12v)`-based sizing.
    pub box_min: f64,
    pub n_checkpoints: usize,
    /// Lattice time step; 0 selects `min(0.05, ε)`.
    pub dt_lattice: f64,
    pub dt_slow: f64,
    pub dealias_fraction: f64,
    pub tail_tol: f64,
    /// Duhamel quadrature subintervals per unit wave time.
    pub quad_per_unit: usize,
    pub integrator: Integrator,
    /// Grid refinement factor for discretization-independence studies.
    pub resolution_mult: usize,
    /// Re-run one ε at doubled resolution and compare residual norms.
    pub resolution_check: bool,
    /// Add the perturbed-kink companion run to meta-stability sweeps.
    pub perturbed: bool,
    pub seed: u64,
    /// 0 = library default thread count.
    pub threads: usize,
    pub out_dir: PathBuf,
    /// Also write field-trajectory snapshot CSVs (large files).
    pub snapshots: bool,
    /// Keys that fell back to defaults while parsing.
    pub defaults_used: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Selftest,
            eps_list: vec![0.2, 0.14, 0.1, 0.07, 0.05],
            tau0: 1.0,
            r: 0.25,
            big_k: 1.0,
            kink_v: 1.0 / 24.0,
            g_profile: GProfile::None,
            dxi_target: 0.02,
            box_min: 0.0,
            n_checkpoints: 32,
            dt_lattice: 0.0,
            dt_slow: 1e-3,
            dealias_fraction: 2.0 / 3.0,
            tail_tol: 1e-8,
            quad_per_unit: 56,
            integrator: Integrator::Rk4,
            resolution_mult: 1,
            resolution_check: true,
            perturbed: true,
            seed: 0,
            threads: 0,
            out_dir: PathBuf::from("kinklab_out"),
            snapshots: false,
            defaults_used: Vec::new(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as a real number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as an integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected true/false, got '{other}'"))),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "eps_list",
    "tau0",
    "r",
    "big_k",
    "kink_v",
    "g_profile",
    "dxi_target",
    "box_min",
    "n_checkpoints",
    "dt_lattice",
    "dt_slow",
    "dealias_fraction",
    "tail_tol",
    "quad_per_unit",
    "integrator",
    "resolution_mult",
    "resolution_check",
    "perturbed",
    "seed",
    "threads",
    "out_dir",
    "snapshots",
];

impl ExperimentConfig {
    /// Parses the flat `key = value` format. `#` starts a comment. Unknown
    /// keys are hard errors; missing keys default and are recorded.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            seen.push(key.to_string());
            match key {
                "experiment" => cfg.kind = value.parse()?,
                "eps_list" => {
                    cfg.eps_list = value
                        .split(',')
                        .map(|s| parse_f64("eps_list", s))
                        .collect::<Result<Vec<_>>>()?;
                }
                "tau0" => cfg.tau0 = parse_f64(key, value)?,
                "r" => cfg.r = parse_f64(key, value)?,
                "big_k" => cfg.big_k = parse_f64(key, value)?,
                "kink_v" => cfg.kink_v = parse_f64(key, value)?,
                "g_profile" => cfg.g_profile = value.parse()?,
                "dxi_target" => cfg.dxi_target = parse_f64(key, value)?,
                "box_min" => cfg.box_min = parse_f64(key, value)?,
                "n_checkpoints" => cfg.n_checkpoints = parse_usize(key, value)?,
                "dt_lattice" => cfg.dt_lattice = parse_f64(key, value)?,
                "dt_slow" => cfg.dt_slow = parse_f64(key, value)?,
                "dealias_fraction" => cfg.dealias_fraction = parse_f64(key, value)?,
                "tail_tol" => cfg.tail_tol = parse_f64(key, value)?,
                "quad_per_unit" => cfg.quad_per_unit = parse_usize(key, value)?,
                "integrator" => {
                    cfg.integrator = match value {
                        "rk4" => Integrator::Rk4,
                        "strang" => Integrator::Strang,
                        other => {
                            return Err(Error::Config(format!(
                                "integrator must be rk4 or strang, got '{other}'"
                            )))
                        }
                    };
                }
                "resolution_mult" => cfg.resolution_mult = parse_usize(key, value)?,
                "resolution_check" => cfg.resolution_check = parse_bool(key, value)?,
                "perturbed" => cfg.perturbed = parse_bool(key, value)?,
                "seed" => {
                    cfg.seed = value.parse::<u64>().map_err(|_| {
                        Error::Config(format!("seed: cannot parse '{value}'"))
                    })?;
                }
                "threads" => cfg.threads = parse_usize(key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "snapshots" => cfg.snapshots = parse_bool(key, value)?,
                _ => unreachable!(),
            }
        }
        cfg.defaults_used = KNOWN_KEYS
            .iter()
            .filter(|k| !seen.iter().any(|s| s == **k))
            .map(|k| k.to_string())
            .collect();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.len() < 1 {
            return Err(Error::Config("eps_list is empty".into()));
        }
        for &e in &self.eps_list {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!("eps {e} outside (0,1)")));
            }
        }
        if !self.eps_list.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::Config("eps_list must be strictly decreasing".into()));
        }
        if !(self.tau0 > 0.0) {
            return Err(Error::Config(format!("tau0 must be > 0, got {}", self.tau0)));
        }
        if !(self.r > 0.0 && self.r < 0.5) {
            return Err(Error::Config(format!("r must lie in (0, 1/2), got {}", self.r)));
        }
        if !(self.big_k > 0.0) {
            return Err(Error::Config(format!("big_k must be > 0, got {}", self.big_k)));
        }
        if !(self.kink_v > 0.0) {
            return Err(Error::Config(format!("kink_v must be > 0, got {}", self.kink_v)));
        }
        if !(self.dxi_target > 0.0 && self.dxi_target <= 0.2) {
            return Err(Error::Config(format!(
                "dxi_target must lie in (0, 0.2], got {}",
                self.dxi_target
            )));
        }
        if self.n_checkpoints < 2 {
            return Err(Error::Config("n_checkpoints must be >= 2".into()));
        }
        if self.resolution_mult == 0 {
            return Err(Error::Config("resolution_mult must be >= 1".into()));
        }
        Ok(())
    }

    /// Sorted `key = value` echo for reports (excluding bookkeeping fields).
    pub fn echo(&self) -> String {
        let mut lines = vec![
            format!("experiment = {}", self.kind),
            format!(
                "eps_list = {}",
                self.eps_list
                    .iter()
                    .map(|e| format!("{e}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("tau0 = {}", self.tau0),
            format!("r = {}", self.r),
            format!("big_k = {}", self.big_k),
            format!("kink_v = {}", self.kink_v),
            format!("g_profile = {}", self.g_profile),
            format!("dxi_target = {}", self.dxi_target),
            format!("box_min = {}", self.box_min),
            format!("n_checkpoints = {}", self.n_checkpoints),
            format!("dt_lattice = {}", self.dt_lattice),
            format!("dt_slow = {}", self.dt_slow),
            format!("dealias_fraction = {}", self.dealias_fraction),
            format!("tail_tol = {}", self.tail_tol),
            format!("quad_per_unit = {}", self.quad_per_unit),
            format!(
                "integrator = {}",
                match self.integrator {
                    Integrator::Rk4 => "rk4",
                    Integrator::Strang => "strang",
                }
            ),
            format!("resolution_mult = {}", self.resolution_mult),
            format!("resolution_check = {}", self.resolution_check),
            format!("perturbed = {}", self.perturbed),
            format!("seed = {}", self.seed),
            format!("threads = {}", self.threads),
            format!("out_dir = {}", self.out_dir.display()),
            format!("snapshots = {}", self.snapshots),
        ];
        lines.sort();
        lines.join("\n")
    }
}
