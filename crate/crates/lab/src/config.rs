//! Experiment configuration: TOML or JSON, fully defaulted, validated per field.

use std::path::{Path, PathBuf};

use qelab_core::frequency::{diophantine_check, diophantine_witness, DiophantineParams};
use qelab_core::msa::{schedule_from, ScaleSchedule, ScheduleMode};
use qelab_core::{Disorder, DriveProfile, FrequencyVector, Model, OperatorSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Identities,
    Wegner,
    Exclusion,
    Msa,
    Dynamics,
    Localization,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Identities => "identities",
            Kind::Wegner => "wegner",
            Kind::Exclusion => "exclusion",
            Kind::Msa => "msa",
            Kind::Dynamics => "dynamics",
            Kind::Localization => "localization",
        }
    }
}

fn field(name: &str, reason: impl Into<String>) -> LabError {
    LabError::Config { field: name.to_string(), reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorBlock {
    pub d: usize,
    pub nu: usize,
    pub eps: f64,
    pub delta: f64,
    pub b: f64,
    pub model: Model,
    /// `uniform` or `uniform(a,b)`.
    pub disorder: String,
    /// Per-frequency drive weights; empty means `w_k = 1`.
    pub drive_weights: Vec<f64>,
}

impl Default for OperatorBlock {
    fn default() -> Self {
        Self {
            d: 1,
            nu: 1,
            eps: 0.1,
            delta: 0.05,
            b: 1.0,
            model: Model::Schrodinger,
            disorder: "uniform".into(),
            drive_weights: Vec::new(),
        }
    }
}

impl OperatorBlock {
    pub fn spec(&self) -> Result<OperatorSpec> {
        let disorder = Disorder::from_descriptor(&self.disorder).map_err(|e| field("operator.disorder", e.to_string()))?;
        let drive = if self.drive_weights.is_empty() {
            DriveProfile::Exponential
        } else {
            DriveProfile::Weighted { weights: self.drive_weights.clone() }
        };
        let spec = OperatorSpec {
            d: self.d,
            nu: self.nu,
            eps: self.eps,
            delta: self.delta,
            b: self.b,
            model: self.model,
            disorder,
            drive,
        };
        spec.validate().map_err(|e| match e {
            qelab_core::Error::InvalidParameter { field: name, reason } => {
                let key = if name == "drive" { "drive_weights" } else { name };
                field(&format!("operator.{key}"), reason)
            }
            other => LabError::Core(other),
        })?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Golden,
    /// Fractional parts of `sqrt 2, sqrt 3, sqrt 5, ...`.
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyBlock {
    /// Explicit frequency vector; overrides the generator.
    pub omega: Vec<f64>,
    pub generator: Generator,
    pub skip: usize,
    pub diophantine: Option<DiophantineParams>,
}

impl Default for FrequencyBlock {
    fn default() -> Self {
        Self {
            omega: Vec::new(),
            generator: Generator::Golden,
            skip: 0,
            diophantine: Some(DiophantineParams { a: 2.0, c: 0.05, m: 100 }),
        }
    }
}

impl FrequencyBlock {
    pub fn resolve(&self, nu: usize) -> Result<FrequencyVector> {
        let omega = if !self.omega.is_empty() {
            if self.omega.len() != nu {
                return Err(field("frequency.omega", format!("needs {nu} components")));
            }
            FrequencyVector::new(self.omega.clone()).map_err(|e| field("frequency.omega", e.to_string()))?
        } else {
            match self.generator {
                Generator::Golden if nu == 1 && self.skip == 0 => FrequencyVector::golden(),
                Generator::Golden => return Err(field("frequency.generator", "golden needs nu = 1 and skip = 0")),
                Generator::Quadratic => FrequencyVector::quadratic_irrational(nu, self.skip),
            }
        };
        if let Some(p) = &self.diophantine {
            let p = DiophantineParams::new(p.a, p.c, p.m).map_err(|e| field("frequency.diophantine", e.to_string()))?;
            if !diophantine_check(&omega, &p) {
                let n = diophantine_witness(&omega, &p).unwrap_or_default();
                return Err(field("frequency.omega", format!("violates the Diophantine condition at n = {n:?}")));
            }
        }
        Ok(omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleBlock {
    pub n0: usize,
    pub exponent: f64,
    pub levels: usize,
    pub sigma: f64,
    pub gamma0: f64,
    pub mode: ScheduleMode,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        Self { n0: 8, exponent: 2.0, levels: 3, sigma: 0.9, gamma0: 1.0, mode: ScheduleMode::Paper }
    }
}

impl ScheduleBlock {
    pub fn resolve(&self, dim: usize) -> Result<ScaleSchedule> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(field("schedule.sigma", "must lie in (0, 1)"));
        }
        if !(self.exponent > 1.0) {
            return Err(field("schedule.exponent", "must exceed 1"));
        }
        if self.n0 == 0 {
            return Err(field("schedule.n0", "must be positive"));
        }
        if self.levels == 0 {
            return Err(field("schedule.levels", "must be positive"));
        }
        if !(self.gamma0 > 0.0) {
            return Err(field("schedule.gamma0", "must be positive"));
        }
        schedule_from(self.n0, self.exponent, self.mode, self.levels, dim, self.sigma, self.gamma0)
            .map_err(|e| field("schedule", e.to_string()))
    }
}

/// Names of the exact-identity suites.
pub const SUITES: [&str; 7] = ["shift", "counting", "resolvent", "poisson", "theta_derivative", "schur", "expansion"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesBlock {
    pub instances: usize,
    pub min_radius: u32,
    pub max_radius: u32,
    pub tolerance: f64,
    pub suites: Vec<String>,
    pub expansion_orders: usize,
    /// Slack on the per-order residual ratio bound.
    pub expansion_slack: f64,
}

impl Default for IdentitiesBlock {
    fn default() -> Self {
        Self {
            instances: 100,
            min_radius: 2,
            max_radius: 8,
            tolerance: 1e-8,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            expansion_orders: 5,
            expansion_slack: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WegnerBlock {
    pub radius: u32,
    pub kappas: Vec<f64>,
    pub energy: f64,
    pub samples: usize,
    /// Disorder trials for the `x` estimate.
    pub x_trials: usize,
    /// Radius of the box for the general `x` estimate.
    pub x_radius: u32,
    /// Standard normal quantile for the Monte Carlo comparison interval.
    pub z: f64,
}

impl Default for WegnerBlock {
    fn default() -> Self {
        Self {
            radius: 6,
            kappas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            energy: 0.0,
            samples: 20,
            x_trials: 10_000,
            x_radius: 2,
            z: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionBlock {
    /// Number of constraint sets compared by QMC and interval union.
    pub sets: usize,
    pub set_radius: usize,
    pub set_n: usize,
    pub set_n0: usize,
    pub qmc_points: usize,
    pub qmc_replicates: usize,
    pub census_n0: usize,
    pub census_n: usize,
    /// Odd trials plant a resonance at a random window eigenvalue; even
    /// trials draw `E` uniformly from `[-1, 1]`.
    pub census_trials: usize,
    /// Disorder samples tried while looking for one the frequency accepts.
    pub census_candidates: usize,
    pub wave: bool,
}

impl Default for ExclusionBlock {
    fn default() -> Self {
        Self {
            sets: 20,
            set_radius: 2,
            set_n: 2,
            set_n0: 10,
            qmc_points: 1 << 20,
            qmc_replicates: 16,
            census_n0: 16,
            census_n: 33,
            census_trials: 100,
            census_candidates: 64,
            wave: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationBlock {
    pub scales: Vec<usize>,
    pub beta: f64,
    pub trials: usize,
    /// Compare the uncoupled case with the order-statistics law.
    pub oracle: bool,
    pub oracle_scale: usize,
    pub oracle_points: Vec<f64>,
}

impl Default for SeparationBlock {
    fn default() -> Self {
        Self {
            scales: vec![4, 8, 16],
            beta: 0.5,
            trials: 2000,
            oracle: true,
            oracle_scale: 2,
            oracle_points: vec![0.005, 0.02, 0.05, 0.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityBlock {
    pub scale: usize,
    pub rate: f64,
    pub energies: Vec<f64>,
    pub tolerance: f64,
    pub trials: usize,
}

impl Default for RegularityBlock {
    fn default() -> Self {
        Self { scale: 6, rate: 0.5, energies: vec![0.0], tolerance: 1e-6, trials: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsaBlock {
    pub census: bool,
    pub energy: f64,
    pub samples: usize,
    pub theta_grid: usize,
    /// Per-level `[samples, theta_grid]`.
    pub per_scale: Vec<(usize, usize)>,
    /// Reference good fraction per level; empty skips the comparison.
    pub reference_good: Vec<f64>,
    /// Allowed drop below the reference, and spread across seeds.
    pub good_tolerance: f64,
    /// Band `[lo, hi]` for the mean fitted rate per level.
    pub gamma_band: Vec<(f64, f64)>,
    pub separation: Option<SeparationBlock>,
    pub regularity: Option<RegularityBlock>,
}

impl Default for MsaBlock {
    fn default() -> Self {
        Self {
            census: true,
            energy: 0.3,
            samples: 4,
            theta_grid: 64,
            per_scale: Vec::new(),
            reference_good: Vec::new(),
            good_tolerance: 0.03,
            gamma_band: Vec::new(),
            separation: None,
            regularity: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContrastBlock {
    pub t_short: f64,
    pub t_long: f64,
    pub runs: usize,
    pub window: i64,
    pub max_ratio: f64,
    pub min_free_growth: f64,
}

impl Default for ContrastBlock {
    fn default() -> Self {
        Self { t_short: 100.0, t_long: 1000.0, runs: 20, window: 40, max_ratio: 3.0, min_free_growth: 50.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsBlock {
    pub dt: f64,
    pub samples: usize,
    /// Free spreading check: duration and relative tolerance.
    pub free_time: f64,
    pub free_window: i64,
    pub free_tolerance: f64,
    /// Single-site driven check against the closed-form phase.
    pub single_site_time: f64,
    pub single_site_tolerance: f64,
    pub contrast: Option<ContrastBlock>,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        Self {
            dt: 0.05,
            samples: 100,
            free_time: 200.0,
            free_window: 30,
            free_tolerance: 0.01,
            single_site_time: 50.0,
            single_site_tolerance: 1e-8,
            contrast: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationBlock {
    pub radius: u32,
    pub samples: usize,
    pub theta: f64,
    pub window: (f64, f64),
    pub gamma_min: f64,
    pub pr_threshold: f64,
    /// Required localized fraction. Without it the census is reported only.
    pub min_fraction: Option<f64>,
}

impl Default for LocalizationBlock {
    fn default() -> Self {
        Self {
            radius: 10,
            samples: 10,
            theta: 0.0,
            window: (-0.5, 0.5),
            gamma_min: 1.0,
            pr_threshold: qelab_core::spectral::PR_THRESHOLD,
            min_fraction: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub operator: OperatorBlock,
    #[serde(default)]
    pub frequency: FrequencyBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub identities: IdentitiesBlock,
    #[serde(default)]
    pub wegner: WegnerBlock,
    #[serde(default)]
    pub exclusion: ExclusionBlock,
    #[serde(default)]
    pub msa: MsaBlock,
    #[serde(default)]
    pub dynamics: DynamicsBlock,
    #[serde(default)]
    pub localization: LocalizationBlock,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            seeds: default_seeds(),
            out: None,
            operator: OperatorBlock::default(),
            frequency: FrequencyBlock::default(),
            schedule: ScheduleBlock::default(),
            identities: IdentitiesBlock::default(),
            wegner: WegnerBlock::default(),
            exclusion: ExclusionBlock::default(),
            msa: MsaBlock::default(),
            dynamics: DynamicsBlock::default(),
            localization: LocalizationBlock::default(),
        }
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Parse(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form. The output directory is not
    /// part of the experiment and is left out.
    pub fn hash(&self) -> String {
        let canon = ExperimentConfig { out: None, ..self.clone() };
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn spec(&self) -> Result<OperatorSpec> {
        self.operator.spec()
    }

    pub fn omega(&self) -> Result<FrequencyVector> {
        self.frequency.resolve(self.operator.nu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(field("seeds", "needs at least one master seed"));
        }
        self.spec()?;
        self.omega()?;
        self.schedule.resolve(self.operator.d + self.operator.nu)?;
        match self.kind {
            Kind::Identities => self.validate_identities(),
            Kind::Wegner => self.validate_wegner(),
            Kind::Exclusion => self.validate_exclusion(),
            Kind::Msa => self.validate_msa(),
            Kind::Dynamics => self.validate_dynamics(),
            Kind::Localization => self.validate_localization(),
        }
    }

    fn validate_identities(&self) -> Result<()> {
        let b = &self.identities;
        if b.instances == 0 {
            return Err(field("identities.instances", "must be positive"));
        }
        if b.min_radius < 1 || b.min_radius > b.max_radius {
            return Err(field("identities.min_radius", "needs 1 <= min_radius <= max_radius"));
        }
        if !(b.tolerance > 0.0) {
            return Err(field("identities.tolerance", "must be positive"));
        }
        if let Some(s) = b.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(field("identities.suites", format!("unknown suite {s:?}")));
        }
        if self.operator.d != 1 || self.operator.nu != 1 {
            return Err(field("operator.d", "the identity suites run on d = nu = 1"));
        }
        Ok(())
    }

    fn validate_wegner(&self) -> Result<()> {
        let b = &self.wegner;
        if b.kappas.is_empty() || b.kappas.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(field("wegner.kappas", "needs values in (0, 1)"));
        }
        if b.samples == 0 {
            return Err(field("wegner.samples", "must be positive"));
        }
        if b.x_trials == 0 {
            return Err(field("wegner.x_trials", "must be positive"));
        }
        if !(b.z > 0.0) {
            return Err(field("wegner.z", "must be positive"));
        }
        if self.operator.model == Model::Wave {
            return Err(field("operator.model", "the Wegner estimates cover the Schrödinger model only"));
        }
        Ok(())
    }

    fn validate_exclusion(&self) -> Result<()> {
        let b = &self.exclusion;
        if self.operator.nu != 1 {
            return Err(field("operator.nu", "the exclusion experiment runs with nu = 1"));
        }
        if b.sets == 0 {
            return Err(field("exclusion.sets", "must be positive"));
        }
        if b.qmc_replicates < 2 {
            return Err(field("exclusion.qmc_replicates", "must be at least 2"));
        }
        if b.census_n <= b.census_n0 {
            return Err(field("exclusion.census_n", "must exceed census_n0"));
        }
        if b.census_candidates == 0 {
            return Err(field("exclusion.census_candidates", "must be positive"));
        }
        Ok(())
    }

    fn validate_msa(&self) -> Result<()> {
        let b = &self.msa;
        if b.samples == 0 || b.theta_grid == 0 || b.per_scale.iter().any(|&(s, g)| s == 0 || g == 0) {
            return Err(field("msa.per_scale", "sample and grid counts must be positive"));
        }
        if b.reference_good.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(field("msa.reference_good", "fractions must lie in [0, 1]"));
        }
        if b.gamma_band.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(field("msa.gamma_band", "needs lo <= hi"));
        }
        if let Some(s) = &b.separation {
            if s.scales.is_empty() || s.trials == 0 {
                return Err(field("msa.separation.scales", "needs scales and a positive trial count"));
            }
            if !(s.beta > 0.0) {
                return Err(field("msa.separation.beta", "must be positive"));
            }
        }
        if let Some(r) = &b.regularity {
            if r.trials == 0 {
                return Err(field("msa.regularity.trials", "must be positive"));
            }
            if r.energies.is_empty() {
                return Err(field("msa.regularity.energies", "must not be empty"));
            }
        }
        Ok(())
    }

    fn validate_dynamics(&self) -> Result<()> {
        let b = &self.dynamics;
        if !(b.dt > 0.0) {
            return Err(field("dynamics.dt", "must be positive"));
        }
        if !(b.free_time > 0.0) || b.free_window < 1 {
            return Err(field("dynamics.free_time", "needs a positive time and window"));
        }
        if self.operator.model == Model::Wave {
            return Err(field("operator.model", "the dynamics checks use the Schrödinger propagator"));
        }
        if let Some(c) = &b.contrast {
            if !(c.t_short > 0.0 && c.t_long > c.t_short) {
                return Err(field("dynamics.contrast.t_long", "needs 0 < t_short < t_long"));
            }
            if c.runs == 0 || c.window < 1 {
                return Err(field("dynamics.contrast.runs", "needs positive runs and window"));
            }
        }
        Ok(())
    }

    fn validate_localization(&self) -> Result<()> {
        let b = &self.localization;
        if b.samples == 0 {
            return Err(field("localization.samples", "must be positive"));
        }
        if !(b.window.0 < b.window.1) {
            return Err(field("localization.window", "needs lo < hi"));
        }
        Ok(())
    }
}
