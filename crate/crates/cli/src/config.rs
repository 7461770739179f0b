//! Sweep configuration: a TOML file with `[sweep]`, `[physics]`,
//! `[tolerances]`, `[convergence]` and `[output]` sections.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trispdc_core::dynamics::{ConvergencePolicy, Thermal, DEFAULT_PUMP_PHASE, DEFAULT_SCHEDULE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn single(value: f64) -> Self {
        Axis {
            min: value,
            max: value,
            points: 1,
            scale: Scale::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let t = k as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points == 0 {
            bail!("axis `{name}` has no points");
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            bail!("axis `{name}` needs finite min <= max");
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            bail!("log axis `{name}` must be positive");
        }
        Ok(())
    }
}

/// Which operator plays the role of the generator `Â`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// `N̂ = Σ a_j† a_j`.
    #[default]
    Number,
    /// Eigen-optimized over the local quadrature sets.
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gt: Axis,
    /// Inverse temperature axis `ħω₁/(k_B T)`; takes precedence over
    /// `temperature`.
    #[serde(default)]
    pub beta_omega1: Option<Axis>,
    /// Fixed temperature in kelvin when no `beta_omega1` axis is given.
    #[serde(default)]
    pub temperature: f64,
    /// Worker threads; 0 picks the number of cores.
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "default_freqs")]
    pub frequencies_ghz: [f64; 3],
    #[serde(default = "default_phase")]
    pub pump_phase: f64,
    #[serde(default)]
    pub generator: GeneratorMode,
    /// Labels among `M1 M2 M3 Mopt order1 order2 order3`.
    #[serde(default = "default_measurements")]
    pub measurements: Vec<String>,
    /// Quantity compared against the bounds: `qfi` or a measurement label.
    #[serde(default = "default_certify")]
    pub certify: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    #[serde(default = "default_evolution_tol")]
    pub evolution: f64,
    #[serde(default = "default_obs_tol")]
    pub observables: f64,
    #[serde(default = "default_weight_floor")]
    pub weight_floor: f64,
    /// Safety margin `δ` of the classifier.
    #[serde(default)]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<usize>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    /// Fail a point that has not converged at `max_dim` instead of
    /// reporting the largest cutoff.
    #[serde(default = "default_true")]
    pub require: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output")]
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep: SweepSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_freqs() -> [f64; 3] {
    [4.2, 6.1, 7.5]
}
fn default_phase() -> f64 {
    DEFAULT_PUMP_PHASE
}
fn default_measurements() -> Vec<String> {
    ["M1", "M2", "M3", "Mopt"].map(String::from).to_vec()
}
fn default_certify() -> String {
    "qfi".into()
}
fn default_evolution_tol() -> f64 {
    1e-10
}
fn default_obs_tol() -> f64 {
    1e-4
}
fn default_weight_floor() -> f64 {
    1e-9
}
fn default_schedule() -> Vec<usize> {
    DEFAULT_SCHEDULE.to_vec()
}
fn default_max_dim() -> usize {
    20_000
}
fn default_true() -> bool {
    true
}
fn default_output() -> PathBuf {
    PathBuf::from("sweep.csv")
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            frequencies_ghz: default_freqs(),
            pump_phase: default_phase(),
            generator: GeneratorMode::default(),
            measurements: default_measurements(),
            certify: default_certify(),
        }
    }
}

impl Default for TolerancesSection {
    fn default() -> Self {
        TolerancesSection {
            evolution: default_evolution_tol(),
            observables: default_obs_tol(),
            weight_floor: default_weight_floor(),
            margin: 0.0,
        }
    }
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            schedule: default_schedule(),
            max_dim: default_max_dim(),
            require: true,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: default_output(),
        }
    }
}

pub const MEASUREMENT_LABELS: [&str; 7] = ["M1", "M2", "M3", "Mopt", "order1", "order2", "order3"];

impl SweepConfig {
    /// A vacuum-input configuration over the given `gt` axis.
    pub fn vacuum(gt: Axis) -> Self {
        SweepConfig {
            sweep: SweepSection {
                gt,
                beta_omega1: None,
                temperature: 0.0,
                threads: 0,
            },
            physics: PhysicsSection::default(),
            tolerances: TolerancesSection::default(),
            convergence: ConvergenceSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.gt.validate("gt")?;
        if self.sweep.gt.min < 0.0 {
            bail!("gt must be non-negative");
        }
        if let Some(b) = &self.sweep.beta_omega1 {
            b.validate("beta_omega1")?;
            if b.min <= 0.0 {
                bail!("beta_omega1 must be positive");
            }
        }
        if !(self.sweep.temperature >= 0.0) {
            bail!("temperature must be non-negative");
        }
        if self.physics.frequencies_ghz.iter().any(|f| !(*f > 0.0)) {
            bail!("frequencies must be positive");
        }
        for m in &self.physics.measurements {
            if !MEASUREMENT_LABELS.contains(&m.as_str()) {
                bail!("unknown measurement `{m}` (expected one of {MEASUREMENT_LABELS:?})");
            }
        }
        if self.physics.certify != "qfi"
            && !self.physics.measurements.contains(&self.physics.certify)
        {
            bail!(
                "certifying quantity `{}` must be `qfi` or one of the requested measurements",
                self.physics.certify
            );
        }
        let t = &self.tolerances;
        if !(t.evolution > 0.0 && t.observables > 0.0) {
            bail!("tolerances must be positive");
        }
        if !(t.weight_floor > 0.0 && t.weight_floor < 1.0) {
            bail!("weight floor must lie in (0, 1)");
        }
        if !(t.margin >= 0.0) {
            bail!("margin must be non-negative");
        }
        if self.convergence.max_dim < 64 {
            bail!("dimension cap must be at least 64");
        }
        if self.convergence.schedule.iter().any(|&d| d < 1) {
            bail!("cutoffs must be positive");
        }
        Ok(())
    }

    pub fn omegas(&self) -> [f64; 3] {
        self.physics.frequencies_ghz.map(|f| 2.0 * PI * f * 1e9)
    }

    /// Thermal input per `βω₁` grid value (`None` means the fixed
    /// temperature).
    pub fn thermal(&self, beta_omega1: Option<f64>) -> Thermal {
        match beta_omega1 {
            Some(b) => Thermal::BetaOmega1(b),
            None => Thermal::Temperature(self.sweep.temperature),
        }
    }

    pub fn policy(&self) -> ConvergencePolicy {
        ConvergencePolicy {
            tol_obs: self.tolerances.observables,
            evolution_tol: self.tolerances.evolution,
            weight_floor: self.tolerances.weight_floor,
            schedule: self.convergence.schedule.clone(),
            max_dim: self.convergence.max_dim,
            require_convergence: self.convergence.require,
        }
    }

    /// Grid points ordered by `(gt, βω₁)`.
    pub fn grid(&self) -> Vec<(f64, Option<f64>)> {
        let betas: Vec<Option<f64>> = match &self.sweep.beta_omega1 {
            Some(axis) => axis.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        self.sweep
            .gt
            .values()
            .into_iter()
            .flat_map(|g| betas.iter().map(move |b| (g, *b)))
            .collect()
    }
}
