//! Synchronization-time experiments and their noise-intensity scaling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduction::coefficients::ReducedModel;
use crate::stats;
use crate::torus::path::{rescale_noise, NoisePath};
use crate::torus::sde::{sync_time, SyncOutcome};

pub const DEFAULT_THRESHOLD: f64 = 1e-2;
pub const CENSOR_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncScanConfig {
    pub sigmas: Vec<f64>,
    pub reps: usize,
    pub threshold: f64,
    pub x0: f64,
    pub y0: f64,
    pub seed: u64,
    /// Horizon in units of `σ⁻²`.
    pub horizon_factor: f64,
    pub dt_cap: f64,
}

impl Default for SyncScanConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![0.2, 0.14, 0.1, 0.07, 0.05],
            reps: 200,
            threshold: DEFAULT_THRESHOLD,
            x0: 0.0,
            y0: 0.5,
            seed: 1,
            horizon_factor: 1e3,
            dt_cap: 1e-3,
        }
    }
}

impl SyncScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigmas.len() < 2 || self.sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(invalid("sigmas: need at least two positive values"));
        }
        let max = self.sigmas.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.sigmas.iter().cloned().fold(f64::MAX, f64::min);
        if max < 4.0 * min * (1.0 - 1e-12) {
            return Err(invalid("sigmas: must span at least a factor 4"));
        }
        if self.reps == 0 {
            return Err(invalid("reps: must be positive"));
        }
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold: must be positive"));
        }
        if !(self.horizon_factor > 0.0) || !(self.dt_cap > 0.0) {
            return Err(invalid("horizon_factor and dt_cap must be positive"));
        }
        Ok(())
    }
}

/// Seed of replica `rep`; shared across noise intensities.
pub fn replica_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncRow {
    pub sigma: f64,
    pub dt: f64,
    pub horizon: f64,
    pub median: Option<f64>,
    pub censored: usize,
    pub reps: usize,
    pub unreliable: bool,
    pub order_violations: usize,
    pub times: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncScan {
    pub rows: Vec<SyncRow>,
    /// Least-squares slope of `log median τ` against `log σ`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Sync times of `reps` shared-noise pairs at one `σ`.
pub fn sync_row(model: &ReducedModel, sigma: f64, cfg: &SyncScanConfig) -> Result<SyncRow> {
    let dt = model.suggested_dt(sigma, cfg.dt_cap);
    let horizon = cfg.horizon_factor / (sigma * sigma);
    let outcomes: Vec<SyncOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let path = NoisePath::new(replica_seed(cfg.seed, rep), model.truncation, dt, horizon)?;
            sync_time(model, sigma, cfg.x0, cfg.y0, cfg.threshold, &path)
        })
        .collect::<Result<_>>()?;
    let times: Vec<Option<f64>> = outcomes.iter().map(|o| o.time).collect();
    let censored = times.iter().filter(|t| t.is_none()).count();
    Ok(SyncRow {
        sigma,
        dt,
        horizon: outcomes.first().map_or(horizon, |o| o.horizon),
        median: stats::censored_median(&times),
        censored,
        reps: cfg.reps,
        unreliable: censored as f64 > CENSOR_LIMIT * cfg.reps as f64,
        order_violations: outcomes.iter().filter(|o| !o.order_preserved).count(),
        times,
    })
}

pub fn sync_scaling_scan(model: &ReducedModel, cfg: &SyncScanConfig) -> Result<SyncScan> {
    cfg.validate()?;
    let rows = cfg
        .sigmas
        .iter()
        .map(|&s| sync_row(model, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (lx, ly): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.median.filter(|m| *m > 0.0).map(|m| (r.sigma.ln(), m.ln())))
        .unzip();
    let (slope, intercept) = if lx.len() >= 2 {
        let (s, i) = stats::linear_fit(&lx, &ly);
        (Some(s), Some(i))
    } else {
        (None, None)
    };
    Ok(SyncScan {
        rows,
        slope,
        intercept,
    })
}

/// Sync times at `σ` measured on time-rescaled paths, reported in rescaled time `σ²τ`.
/// The drift speed is removed, so this is the `σ`-free reduced model seen through the time change.
pub fn rescaled_sync_times(
    model: &ReducedModel,
    sigma: f64,
    cfg: &SyncScanConfig,
    rescaled_horizon: f64,
) -> Result<Vec<Option<f64>>> {
    let free = model.with_speed(0.0);
    let base_dt = cfg.dt_cap;
    let horizon = rescaled_horizon / (sigma * sigma);
    (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let path = NoisePath::new(replica_seed(cfg.seed, rep), model.truncation, base_dt, horizon)?;
            let scaled = rescale_noise(&path, 0.0, sigma)?;
            let out = sync_time(&free, 1.0, cfg.x0, cfg.y0, cfg.threshold, &scaled)?;
            Ok(out.time)
        })
        .collect()
}
