use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ExitRule, RewireModel};
use crate::reputation::SolverConfig;

/// How the `density` number of a config is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Per ordered pair link probability `p`.
    Probability,
    /// Average links per user `m = p (N - 1)`.
    LinksPerUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub kind: DensityKind,
    pub value: f64,
}

impl Density {
    pub fn probability(p: f64) -> Self {
        Self {
            kind: DensityKind::Probability,
            value: p,
        }
    }

    pub fn links_per_user(m: f64) -> Self {
        Self {
            kind: DensityKind::LinksPerUser,
            value: m,
        }
    }

    pub fn model(&self, n: usize) -> Result<RewireModel, crate::dynamics::DynamicsError> {
        match self.kind {
            DensityKind::Probability => RewireModel::from_probability(self.value),
            DensityKind::LinksPerUser => RewireModel::from_links_per_user(self.value, n),
        }
    }
}

/// Every problem found in a configuration, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid experiment configuration: {}",
            self.problems.join("; ")
        )
    }
}

impl std::error::Error for ConfigError {}

/// On-disk layout; every field optional so that validation can report all
/// missing and out-of-range entries at once.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: Option<usize>,
    density_kind: Option<DensityKind>,
    density: Option<f64>,
    tau_values: Option<Vec<f64>>,
    t_max: Option<u64>,
    runs: Option<usize>,
    seed: Option<u64>,
    sample_every: Option<u64>,
    filter_whole: Option<bool>,
    burn_in: Option<u64>,
    workers: Option<usize>,
    solver: Option<SolverConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub density: Density,
    pub tau_values: Vec<f64>,
    pub t_max: u64,
    pub runs: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub sample_every: u64,
    pub filter_whole: bool,
    /// Steps excluded from the time-averaged benefit; `None` means `t_max / 10`.
    pub burn_in: Option<u64>,
    /// Worker threads for parallel sweeps; `None` defers to the environment.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: `N = 100`, `t_max = 10^4`, 50 runs, sampling every 10 steps.
    pub fn new(density: Density, tau_values: Vec<f64>) -> Self {
        Self {
            n: 100,
            density,
            tau_values,
            t_max: 10_000,
            runs: 50,
            seed: 0,
            solver: SolverConfig::default(),
            sample_every: 10,
            filter_whole: true,
            burn_in: None,
            workers: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            problems: vec![e.message().to_string()],
        })?;
        let mut problems = Vec::new();
        let mut need = |name: &str, present: bool| {
            if !present {
                problems.push(format!("missing required field `{name}`"));
            }
        };
        need("n", raw.n.is_some());
        need("density_kind", raw.density_kind.is_some());
        need("density", raw.density.is_some());
        need("tau_values", raw.tau_values.is_some());
        need("t_max", raw.t_max.is_some());
        need("runs", raw.runs.is_some());
        need("seed", raw.seed.is_some());
        if !problems.is_empty() {
            // range checks below need the required fields
            let partial = Self::partial(&raw);
            problems.extend(partial.problems_excluding_missing());
            return Err(ConfigError { problems });
        }
        let cfg = Self::partial(&raw);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            problems: vec![format!("cannot read {}: {e}", path.display())],
        })?;
        Self::from_toml_str(&text)
    }

    fn partial(raw: &RawConfig) -> Self {
        let density = Density {
            kind: raw.density_kind.unwrap_or(DensityKind::Probability),
            value: raw.density.unwrap_or(0.0),
        };
        let mut cfg = Self::new(density, raw.tau_values.clone().unwrap_or_default());
        cfg.n = raw.n.unwrap_or(cfg.n);
        cfg.t_max = raw.t_max.unwrap_or(cfg.t_max);
        cfg.runs = raw.runs.unwrap_or(cfg.runs);
        cfg.seed = raw.seed.unwrap_or(0);
        cfg.sample_every = raw.sample_every.unwrap_or(cfg.sample_every);
        cfg.filter_whole = raw.filter_whole.unwrap_or(cfg.filter_whole);
        cfg.burn_in = raw.burn_in;
        cfg.workers = raw.workers;
        cfg.solver = raw.solver.unwrap_or_default();
        cfg
    }

    fn problems_excluding_missing(&self) -> Vec<String> {
        self.problems()
            .into_iter()
            .filter(|p| !p.contains("tau_values must not be empty"))
            .collect()
    }

    fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n must be at least 2, got {}", self.n));
        }
        if self.tau_values.is_empty() {
            problems.push("tau_values must not be empty".into());
        }
        for &tau in &self.tau_values {
            if ExitRule::new(tau).is_err() {
                problems.push(format!("tau {tau} outside [0, 1)"));
            }
        }
        if self.n >= 2 {
            if let Err(e) = self.density.model(self.n) {
                problems.push(e.to_string());
            }
        }
        if self.t_max < 1 {
            problems.push("t_max must be at least 1".into());
        }
        if self.runs < 1 {
            problems.push("runs must be at least 1".into());
        }
        if self.sample_every < 1 {
            problems.push("sample_every must be at least 1".into());
        }
        if let Some(b) = self.burn_in {
            if b >= self.t_max {
                problems.push(format!(
                    "burn_in {b} must be smaller than t_max {}",
                    self.t_max
                ));
            }
        }
        if self.workers == Some(0) {
            problems.push("workers must be at least 1".into());
        }
        if let Err(e) = self.solver.validate() {
            problems.push(e.to_string());
        }
        problems
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    pub fn burn_in_steps(&self) -> u64 {
        self.burn_in.unwrap_or(self.t_max / 10)
    }

    pub fn model(&self) -> RewireModel {
        self.density.model(self.n).expect("validated density")
    }
}
