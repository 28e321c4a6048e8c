//! Run configuration: a flat `key = value` file, overridable by CLI flags
//! (CLI wins over file, file wins over defaults; `LENSKI_THREADS` overrides
//! the thread count either way).
//!
//! Recognized keys: `experiment`, `n`, `gamma`, `r0`, `rho`, `b`, `mu`,
//! `a`, `q`, `u`, `epsilon`, `alpha`, `replicates`, `seed`, `horizon`,
//! `record_every`, `ks_samples`, `t_max`, `t_step`, `out`, `threads`,
//! `tolerance_profile`. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::{ModelParams, Scaling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Experiment {
    NeutralDay,
    Fixation,
    SweepStages,
    Genealogy,
    Gw,
    Evolve,
    Curves,
}

impl Experiment {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "neutral-day" => Ok(Self::NeutralDay),
            "fixation" => Ok(Self::Fixation),
            "sweep-stages" => Ok(Self::SweepStages),
            "genealogy" => Ok(Self::Genealogy),
            "gw" => Ok(Self::Gw),
            "evolve" => Ok(Self::Evolve),
            "curves" => Ok(Self::Curves),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NeutralDay => "neutral-day",
            Self::Fixation => "fixation",
            Self::SweepStages => "sweep-stages",
            Self::Genealogy => "genealogy",
            Self::Gw => "gw",
            Self::Evolve => "evolve",
            Self::Curves => "curves",
        }
    }
}

/// Multiplier applied to every check tolerance in reports.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ToleranceProfile {
    Strict,
    Default,
    Loose,
}

impl ToleranceProfile {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "strict" => Ok(Self::Strict),
            "default" => Ok(Self::Default),
            "loose" => Ok(Self::Loose),
            other => Err(Error::Config(format!(
                "unknown tolerance profile '{other}' (strict|default|loose)"
            ))),
        }
    }

    pub fn multiplier(&self) -> f64 {
        match self {
            Self::Strict => 0.5,
            Self::Default => 1.0,
            Self::Loose => 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Strict => "strict",
            Self::Default => "default",
            Self::Loose => "loose",
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: u64,
    pub gamma: f64,
    pub r0: f64,
    /// Explicit `rho` wins over the exponent `b`.
    pub rho: Option<f64>,
    pub b: f64,
    /// Explicit `mu` wins over the exponent `a`.
    pub mu: Option<f64>,
    pub a: f64,
    pub q: f64,
    pub u: Option<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub replicates: u64,
    pub master_seed: u64,
    pub horizon: Option<u64>,
    pub record_every: Option<u64>,
    pub ks_samples: u64,
    pub t_max: f64,
    pub t_step: f64,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub tolerance_profile: ToleranceProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Curves,
            n: 1000,
            gamma: 2.0,
            r0: 1.0,
            rho: None,
            b: 0.3,
            mu: None,
            a: 1.0,
            q: 0.0,
            u: None,
            epsilon: 0.05,
            alpha: 0.4,
            replicates: 1000,
            master_seed: 42,
            horizon: None,
            record_every: None,
            ks_samples: 1000,
            t_max: 10.0,
            t_step: 0.1,
            output_dir: PathBuf::from("lenski-out"),
            threads: None,
            tolerance_profile: ToleranceProfile::Default,
        }
    }
}

impl RunConfig {
    /// Resolved selection increment.
    pub fn resolved_rho(&self) -> f64 {
        self.rho.unwrap_or_else(|| (self.n as f64).powf(-self.b))
    }

    /// Resolved per-day mutation probability.
    pub fn resolved_mu(&self) -> f64 {
        self.mu.unwrap_or_else(|| (self.n as f64).powf(-self.a))
    }

    /// Evolve horizon: configured, or the fitness time scale
    /// `2 rho^{-2} mu^{-1}` days.
    pub fn resolved_horizon(&self) -> u64 {
        self.horizon.unwrap_or_else(|| {
            (2.0 * self.resolved_rho().powi(-2) / self.resolved_mu()).ceil() as u64
        })
    }

    pub fn resolved_record_every(&self) -> u64 {
        self.record_every
            .unwrap_or_else(|| (self.resolved_horizon() / 1000).max(1))
    }

    /// Model parameters for the evolve experiments.
    pub fn model_params(&self) -> Result<ModelParams> {
        let selection = match self.rho {
            Some(v) => Scaling::Explicit(v),
            None => Scaling::Exponent(self.b),
        };
        let mutation = match self.mu {
            Some(v) => Scaling::Explicit(v),
            None => Scaling::Exponent(self.a),
        };
        let params = ModelParams::new(self.n, self.gamma, self.r0, selection, mutation, self.q)?;
        match self.u {
            Some(u) => params.with_u(u),
            None => Ok(params),
        }
    }

    /// Applies `key = value` pairs from a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Shared by the file parser and the CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
        }
        match key {
            "experiment" => self.experiment = Experiment::parse(value)?,
            "n" => self.n = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "r0" => self.r0 = parse(key, value)?,
            "rho" => self.rho = Some(parse(key, value)?),
            "b" => self.b = parse(key, value)?,
            "mu" => self.mu = Some(parse(key, value)?),
            "a" => self.a = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "u" => self.u = Some(parse(key, value)?),
            "epsilon" => self.epsilon = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            "seed" => self.master_seed = parse(key, value)?,
            "horizon" => self.horizon = Some(parse(key, value)?),
            "record_every" => self.record_every = Some(parse(key, value)?),
            "ks_samples" => self.ks_samples = parse(key, value)?,
            "t_max" => self.t_max = parse(key, value)?,
            "t_step" => self.t_step = parse(key, value)?,
            "out" => self.output_dir = PathBuf::from(value),
            "threads" => self.threads = Some(parse(key, value)?),
            "tolerance_profile" => self.tolerance_profile = ToleranceProfile::parse(value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Environment override for the thread count, then validation.
    pub fn finalize(&mut self) -> Result<()> {
        if let Ok(t) = std::env::var("LENSKI_THREADS") {
            self.threads = Some(
                t.parse()
                    .map_err(|_| Error::Config(format!("invalid LENSKI_THREADS '{t}'")))?,
            );
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::Config(format!("r0 must be positive, got {}", self.r0)));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(self.t_step > 0.0) || !(self.t_max >= 0.0) {
            return Err(Error::Config("need t_step > 0 and t_max >= 0".into()));
        }
        let rho = self.resolved_rho();
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("resolved rho is invalid: {rho}")));
        }
        let mu = self.resolved_mu();
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Config(format!("resolved mu must lie in [0,1], got {mu}")));
        }
        Ok(())
    }

    /// Flat key-value view for the manifest.
    pub fn as_map(&self) -> BTreeMap<String, serde_json::Value> {
        use serde_json::json;
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), json!(self.experiment.name()));
        m.insert("n".into(), json!(self.n));
        m.insert("gamma".into(), json!(self.gamma));
        m.insert("r0".into(), json!(self.r0));
        m.insert("rho".into(), json!(self.resolved_rho()));
        m.insert("rho_explicit".into(), json!(self.rho));
        m.insert("b".into(), json!(self.b));
        m.insert("mu".into(), json!(self.resolved_mu()));
        m.insert("mu_explicit".into(), json!(self.mu));
        m.insert("a".into(), json!(self.a));
        m.insert("q".into(), json!(self.q));
        m.insert("u".into(), json!(self.u));
        m.insert("epsilon".into(), json!(self.epsilon));
        m.insert("alpha".into(), json!(self.alpha));
        m.insert("replicates".into(), json!(self.replicates));
        m.insert("seed".into(), json!(self.master_seed));
        m.insert("horizon".into(), json!(self.horizon));
        m.insert("record_every".into(), json!(self.record_every));
        m.insert("ks_samples".into(), json!(self.ks_samples));
        m.insert("t_max".into(), json!(self.t_max));
        m.insert("t_step".into(), json!(self.t_step));
        m.insert("threads".into(), json!(self.threads));
        m.insert("tolerance_profile".into(), json!(self.tolerance_profile.name()));
        m
    }
}
