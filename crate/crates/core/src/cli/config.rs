//! Experiment configuration: one TOML document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::isochron::IsochronOptions;
use crate::model::{FhnParams, ModelSpec, NoiseShape};
use crate::pulse::PulseOptions;
use crate::reduction::NoiseSpec;
use crate::spde::SpdeConfig;
use crate::torus::squeeze::SqueezeOptions;
use crate::torus::sync::SyncScanConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub nu: f64,
    pub a: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Constant part of `g(u)`, one entry per component.
    pub noise_offset: Vec<f64>,
    /// Linear part of `g(u)`, row-major per component; empty for none.
    pub noise_slope: Vec<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = FhnParams::default();
        Self {
            nu: p.nu,
            a: p.a,
            epsilon: p.epsilon,
            gamma: p.gamma,
            noise_offset: vec![1.0, 0.0],
            noise_slope: Vec::new(),
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        let shape = if self.noise_slope.is_empty() {
            NoiseShape::constant(self.noise_offset.clone())
        } else {
            NoiseShape::affine(self.noise_offset.clone(), self.noise_slope.clone())
        };
        ModelSpec::fitzhugh_nagumo(
            FhnParams {
                nu: self.nu,
                a: self.a,
                epsilon: self.epsilon,
                gamma: self.gamma,
            },
            shape,
        )
        .map_err(|e| field_error("model", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub length: u32,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            length: 16,
            points: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    /// Existing pulse file; computed from scratch when empty.
    pub file: Option<PathBuf>,
    pub settle: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub tol_eig: f64,
    pub separation: f64,
    pub spectrum: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let o = PulseOptions::default();
        Self {
            file: None,
            settle: 400.0,
            tol: o.tol,
            max_iter: o.max_iter,
            tol_eig: o.tol_eig,
            separation: o.separation,
            spectrum: o.spectrum,
        }
    }
}

impl PulseConfig {
    pub fn options(&self) -> PulseOptions {
        PulseOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            tol_eig: self.tol_eig,
            separation: self.separation,
            spectrum: self.spectrum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub truncation: usize,
    pub sigma: f64,
    /// `α_k` for `k = -K..=K`; the default table when empty.
    pub alpha: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            truncation: 3,
            sigma: 0.1,
            alpha: Vec::new(),
        }
    }
}

impl NoiseConfig {
    pub fn build(&self) -> Result<NoiseSpec> {
        let spec = if self.alpha.is_empty() {
            NoiseSpec::default_table(self.truncation, self.sigma)
        } else {
            NoiseSpec::new(self.truncation, self.alpha.clone(), self.sigma)
        };
        spec.map_err(|e| field_error("noise", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsochronConfig {
    pub t_relax: f64,
    pub dt: f64,
    pub checkpoint: f64,
    pub tube_fraction: f64,
    /// Finite-difference step for the second variations.
    pub fd_step: f64,
}

impl Default for IsochronConfig {
    fn default() -> Self {
        let o = IsochronOptions::default();
        Self {
            t_relax: o.t_relax,
            dt: o.dt,
            checkpoint: o.checkpoint,
            tube_fraction: o.tube_fraction,
            fd_step: 1e-3,
        }
    }
}

impl IsochronConfig {
    pub fn options(&self) -> IsochronOptions {
        IsochronOptions {
            t_relax: self.t_relax,
            dt: self.dt,
            checkpoint: self.checkpoint,
            tube_fraction: self.tube_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReducedConfig {
    /// Reduced model written by `coeffs`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub x0: Vec<f64>,
    pub horizon: f64,
    /// Step size; the coefficient-based rule capped at `dt_cap` when absent.
    pub dt: Option<f64>,
    pub dt_cap: f64,
    pub seed: u64,
    pub record_stride: u64,
    pub tangent: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            x0: vec![0.0, 0.25, 0.5, 0.75],
            horizon: 100.0,
            dt: None,
            dt_cap: 1e-3,
            seed: 1,
            record_stride: 1000,
            tangent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    /// Monte Carlo length in units of `σ⁻²`.
    pub length_factor: f64,
    pub burn_in_fraction: f64,
    pub x0: f64,
    pub seed: u64,
    pub dt_cap: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            length_factor: 1e4,
            burn_in_fraction: 0.01,
            x0: 0.0,
            seed: 1,
            dt_cap: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub points: usize,
    pub gap_points: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            points: 1024,
            gap_points: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpdeSection {
    pub x0: f64,
    pub y0: f64,
    pub dt: f64,
    /// Horizon in units of `σ⁻²`.
    pub horizon_factor: f64,
    pub checkpoint: Option<f64>,
    pub seed: u64,
    pub seeds: usize,
    pub substeps: u64,
    pub isochron_every: Option<usize>,
}

impl Default for SpdeSection {
    fn default() -> Self {
        Self {
            x0: 0.0,
            y0: 0.3,
            dt: 0.01,
            horizon_factor: 50.0,
            checkpoint: None,
            seed: 1,
            seeds: 20,
            substeps: 10,
            isochron_every: None,
        }
    }
}

impl SpdeSection {
    pub fn run_config(&self, sigma: f64, seed: u64) -> Result<SpdeConfig> {
        if !(sigma > 0.0) {
            return Err(invalid("noise.sigma: must be positive for stochastic PDE runs"));
        }
        Ok(SpdeConfig {
            dt: self.dt,
            horizon: self.horizon_factor / (sigma * sigma),
            checkpoint: self.checkpoint,
            seed,
            substeps: self.substeps,
            isochron_every: self.isochron_every,
            snapshot_every: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqueezeConfig {
    pub gains: Vec<f64>,
    pub extra: Vec<f64>,
    pub steps_per_unit: usize,
    pub record_every: usize,
    pub with_drift: bool,
    pub epsilon: f64,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self {
            gains: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            extra: vec![-0.25, -0.1, 0.1, 0.25],
            steps_per_unit: 20_000,
            record_every: 100,
            with_drift: false,
            epsilon: 0.05,
        }
    }
}

impl SqueezeConfig {
    pub fn options(&self) -> SqueezeOptions {
        SqueezeOptions {
            steps_per_unit: self.steps_per_unit,
            with_drift: self.with_drift,
            record_every: self.record_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output: PathBuf,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub pulse: PulseConfig,
    pub noise: NoiseConfig,
    pub isochron: IsochronConfig,
    pub reduced: ReducedConfig,
    pub sim: SimConfig,
    pub lyapunov: LyapunovConfig,
    pub density: DensityConfig,
    pub sync: SyncScanConfig,
    pub spde: SpdeSection,
    pub squeeze: SqueezeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("pulsesync-out"),
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            pulse: PulseConfig::default(),
            noise: NoiseConfig::default(),
            isochron: IsochronConfig::default(),
            reduced: ReducedConfig::default(),
            sim: SimConfig::default(),
            lyapunov: LyapunovConfig::default(),
            density: DensityConfig::default(),
            sync: SyncScanConfig::default(),
            spde: SpdeSection::default(),
            squeeze: SqueezeConfig::default(),
        }
    }
}

fn field_error(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{section}: {m}")),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Checks every section that does not need a command context.
    pub fn validate(&self) -> Result<()> {
        self.model.build()?;
        self.grid()?;
        self.noise.build()?;
        if !(self.pulse.settle > 0.0) || !(self.pulse.tol > 0.0) || self.pulse.max_iter == 0 {
            return Err(invalid("pulse: settle, tol and max_iter must be positive"));
        }
        if !(self.isochron.t_relax > 0.0) || !(self.isochron.dt > 0.0) || !(self.isochron.fd_step > 0.0) {
            return Err(invalid("isochron: t_relax, dt and fd_step must be positive"));
        }
        if self.sim.x0.is_empty() || !(self.sim.horizon > 0.0) || !(self.sim.dt_cap > 0.0) {
            return Err(invalid("sim: x0 must be nonempty, horizon and dt_cap positive"));
        }
        if let Some(dt) = self.sim.dt {
            if !(dt > 0.0) {
                return Err(invalid("sim.dt: must be positive"));
            }
        }
        if !(self.lyapunov.length_factor > 0.0)
            || !(self.lyapunov.burn_in_fraction >= 0.0 && self.lyapunov.burn_in_fraction < 1.0)
        {
            return Err(invalid("lyapunov: length_factor must be positive and burn_in_fraction in [0, 1)"));
        }
        if self.density.points < 8 || self.density.gap_points < 8 {
            return Err(invalid("density: points and gap_points must be at least 8"));
        }
        if !(self.spde.dt > 0.0) || !(self.spde.horizon_factor > 0.0) || self.spde.seeds == 0 || self.spde.substeps == 0
        {
            return Err(invalid("spde: dt, horizon_factor, seeds and substeps must be positive"));
        }
        if self.squeeze.gains.iter().any(|g| !(*g >= 0.0)) || self.squeeze.steps_per_unit == 0 {
            return Err(invalid("squeeze: gains must be nonnegative and steps_per_unit positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.length, self.grid.points).map_err(|e| field_error("grid", e))
    }
}
