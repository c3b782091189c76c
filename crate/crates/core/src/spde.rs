//! Stochastic PDE runs of the pulse under spatially periodic multiplicative noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::{reaction_field, step_count, EtdStepper};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::isochron::{Isochron, IsochronOptions};
use crate::model::ModelSpec;
use crate::phase::{wrap_centered, PhaseFitter};
use crate::pulse::PulseSolution;
use crate::reduction::coefficients::ReducedModel;
use crate::reduction::noise::{basis, NoiseSpec};
use crate::stats;
use crate::torus::path::{NoiseCursor, NoisePath};
use crate::torus::sde::{torus_distance, SdeKernel};

/// One ETD step of the Itô SPDE with precomputed noise fields.
#[derive(Debug, Clone)]
pub struct SpdeStepper {
    model: ModelSpec,
    stepper: EtdStepper,
    sigma: f64,
    truncation: usize,
    /// `(index into the increment vector, α_k e_k on the grid)` for `α_k ≠ 0`.
    modes: Vec<(usize, Vec<f64>)>,
    /// `Σ_k α_k² e_k²` on the grid.
    correction: Vec<f64>,
    noisy: bool,
    forcing: Vec<f64>,
    shifted: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
    field: Vec<f64>,
    g: Vec<f64>,
}

impl SpdeStepper {
    pub fn new(model: &ModelSpec, noise: &NoiseSpec, sigma: f64, grid: Grid1D, dt: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma must be finite and nonnegative"));
        }
        let period = grid
            .points_per_period()
            .ok_or_else(|| invalid("grid must resolve the unit noise period with an integer number of points"))?;
        let n = grid.points();
        let kk = noise.truncation() as i32;
        let tile = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            let one: Vec<f64> = (0..period).map(|i| f(grid.x(i))).collect();
            (0..n).map(|i| one[i % period]).collect()
        };
        let modes: Vec<(usize, Vec<f64>)> = noise
            .modes()
            .filter(|&k| noise.alpha(k) != 0.0)
            .map(|k| {
                let a = noise.alpha(k);
                ((k + kk) as usize, tile(&|x| a * basis(k, x)))
            })
            .collect();
        let correction = tile(&|x| noise.modes().map(|k| (noise.alpha(k) * basis(k, x)).powi(2)).sum());
        let len = model.components() * n;
        Ok(Self {
            model: model.clone(),
            stepper: EtdStepper::new(grid, model.diffusion(), dt)?,
            sigma,
            truncation: noise.truncation(),
            noisy: sigma != 0.0 && !model.noise_shape().is_zero() && !modes.is_empty(),
            modes,
            correction,
            forcing: vec![0.0; len],
            shifted: vec![0.0; len],
            next: vec![0.0; len],
            scratch: vec![0.0; n],
            field: vec![0.0; n],
            g: vec![0.0; len],
        })
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Advances `state` by one step with increments `dw` (ordered `k = -K..=K`).
    /// Returns `false` when the result is not finite.
    pub fn step(&mut self, state: &mut FieldState, dw: &[f64]) -> bool {
        let n = self.stepper.grid().points();
        reaction_field(&self.model, n, state.as_slice(), &mut self.forcing);
        if self.noisy {
            self.field.iter_mut().for_each(|v| *v = 0.0);
            for (idx, e) in &self.modes {
                let b = dw[*idx];
                for (w, ei) in self.field.iter_mut().zip(e) {
                    *w += ei * b;
                }
            }
            let comps = self.model.components();
            let half = 0.5 * self.sigma * self.sigma;
            let u = state.as_slice();
            let shape = self.model.noise_shape();
            match &shape.slope {
                None => {
                    for c in 0..comps {
                        let r = c * n..(c + 1) * n;
                        let g = self.sigma * shape.offset[c];
                        for ((o, &v), &w) in self.shifted[r.clone()].iter_mut().zip(&u[r]).zip(&self.field) {
                            *o = v + g * w;
                        }
                    }
                }
                Some(slope) => {
                    let g = &mut self.g;
                    for c in 0..comps {
                        let gc = &mut g[c * n..(c + 1) * n];
                        gc.iter_mut().for_each(|v| *v = shape.offset[c]);
                        for (j, &m) in slope[c].iter().enumerate() {
                            if m != 0.0 {
                                for (gv, &uv) in gc.iter_mut().zip(&u[j * n..(j + 1) * n]) {
                                    *gv += m * uv;
                                }
                            }
                        }
                    }
                    for c in 0..comps {
                        for i in 0..n {
                            let mut gg = 0.0;
                            for (j, &m) in slope[c].iter().enumerate() {
                                gg += m * g[j * n + i];
                            }
                            self.shifted[c * n + i] = u[c * n + i] + self.sigma * g[c * n + i] * self.field[i];
                            self.forcing[c * n + i] += half * self.correction[i] * gg;
                        }
                    }
                }
            }
            self.stepper
                .advance(&self.shifted, &self.forcing, &mut self.next, &mut self.scratch);
        } else {
            self.stepper
                .advance(state.as_slice(), &self.forcing, &mut self.next, &mut self.scratch);
        }
        state.as_mut_slice().copy_from_slice(&self.next);
        state.t += self.stepper.dt();
        self.next.iter().all(|v| v.is_finite())
    }
}

/// Single step; builds the stepper on every call.
pub fn spde_step(
    state: &FieldState,
    model: &ModelSpec,
    noise: &NoiseSpec,
    sigma: f64,
    increments: &[f64],
    dt: f64,
) -> Result<FieldState> {
    if increments.len() != 2 * noise.truncation() + 1 {
        return Err(invalid("increments must cover k = -K..=K"));
    }
    let mut stepper = SpdeStepper::new(model, noise, sigma, state.grid(), dt)?;
    let mut out = state.clone();
    if !stepper.step(&mut out, increments) {
        return Err(Error::BlowUp { step: 1, time: out.t });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Time between checkpoints; `None` selects `σ⁻²/100` (or `horizon/100` at `σ = 0`).
    pub checkpoint: Option<f64>,
    pub seed: u64,
    /// Fine noise steps per SPDE step; the reduced SDE runs on the fine steps.
    pub substeps: u64,
    /// Exact isochron evaluation every this many checkpoints.
    pub isochron_every: Option<usize>,
    /// Field snapshots every this many checkpoints.
    pub snapshot_every: Option<usize>,
}

impl Default for SpdeConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 100.0,
            checkpoint: None,
            seed: 1,
            substeps: 10,
            isochron_every: None,
            snapshot_every: None,
        }
    }
}

impl SpdeConfig {
    fn checkpoint_steps(&self, sigma: f64) -> Result<usize> {
        let every = self.checkpoint.unwrap_or(if sigma > 0.0 {
            0.01 / (sigma * sigma)
        } else {
            0.01 * self.horizon
        });
        if !(every > 0.0) {
            return Err(invalid("checkpoint interval must be positive"));
        }
        Ok(((every / self.dt).round() as usize).max(1))
    }

    fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0) || self.substeps == 0 {
            return Err(invalid("dt and substeps must be positive"));
        }
        step_count(self.horizon, self.dt)
    }

    /// Noise path shared by every run of this configuration.
    pub fn path(&self, truncation: usize) -> Result<NoisePath> {
        NoisePath::new(self.seed, truncation, self.dt / self.substeps as f64, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    /// Continuous lift of the fitted phase.
    pub phase: f64,
    pub tube: f64,
    /// Reduced-model phase on the same increments.
    pub gamma: Option<f64>,
    /// Lift of the exact isochron phase.
    pub isochron: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdeRun {
    pub sigma: f64,
    pub seed: u64,
    pub dt: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub snapshots: Vec<FieldState>,
    /// Failure that ended the run early, if any.
    pub failure: Option<String>,
}

impl SpdeRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_tube(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.tube).fold(0.0, f64::max)
    }
}

/// Phase tracking state of one solution.
struct Tracker {
    fitter: PhaseFitter,
    length: f64,
    lift: f64,
}

impl Tracker {
    fn new(fitter: PhaseFitter, state: &FieldState, x0: f64) -> Result<(Self, f64)> {
        let length = state.grid().length();
        let fit = fitter.fit(state)?;
        let lift = x0 + wrap_centered(fit.phase - x0, length);
        Ok((Self { fitter, length, lift }, fit.tube))
    }

    fn update(&mut self, state: &FieldState, predicted_advance: f64) -> Result<f64> {
        let fit = self.fitter.fit(state)?;
        let predicted = self.lift + predicted_advance;
        self.lift = predicted + wrap_centered(fit.phase - predicted, self.length);
        Ok(fit.tube)
    }
}

/// `T_x u*`; integer-grid translations are taken exactly.
pub fn translated_pulse(pulse: &PulseSolution, x: f64) -> FieldState {
    let grid = pulse.grid();
    let cells = x / grid.spacing();
    if cells == cells.round() {
        pulse.profile().shifted(cells as isize)
    } else {
        PhaseFitter::new(pulse).translate_profile(x)
    }
}

/// `minₙ ‖u(· + n) − v‖₂` over integer `n`.
pub fn field_discrepancy(u: &FieldState, v: &FieldState) -> f64 {
    let grid = u.grid();
    let period = grid.points_per_period().unwrap_or(grid.points());
    let copies = grid.points() / period;
    (0..copies as isize)
        .map(|n| u.shifted(n * period as isize).distance(v))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseRecord {
    pub t: f64,
    pub phase_u: f64,
    pub phase_v: f64,
    pub tube_u: f64,
    pub tube_v: f64,
    /// Torus distance of the phases modulo the noise period.
    pub distance: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseReport {
    pub sigma: f64,
    pub seed: u64,
    pub x0: f64,
    pub y0: f64,
    pub records: Vec<TwoPulseRecord>,
    pub failure: Option<String>,
}

impl TwoPulseReport {
    pub fn censored(&self) -> bool {
        self.failure.is_some()
    }

    pub fn final_distance(&self) -> Option<f64> {
        if self.censored() {
            None
        } else {
            self.records.last().map(|r| r.distance)
        }
    }

    pub fn max_tube(&self) -> f64 {
        self.records.iter().map(|r| r.tube_u.max(r.tube_v)).fold(0.0, f64::max)
    }

    pub fn discrepancy_reduction(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => a.discrepancy / b.discrepancy,
            _ => f64::NAN,
        }
    }
}

/// Two solutions from `T_{x0}u*` and `T_{y0}u*` stepped in lockstep on one increment stream.
pub fn two_pulse_experiment(
    x0: f64,
    y0: f64,
    model: &ModelSpec,
    pulse: &PulseSolution,
    noise: &NoiseSpec,
    sigma: f64,
    cfg: &SpdeConfig,
) -> Result<TwoPulseReport> {
    let total = cfg.validate()?;
    let every = cfg.checkpoint_steps(sigma)?;
    let grid = pulse.grid();
    let path = cfg.path(noise.truncation())?.coarsened(cfg.substeps)?;
    let mut cursor = path.cursor();
    let mut stepper = SpdeStepper::new(model, noise, sigma, grid, cfg.dt)?;
    let mut u = translated_pulse(pulse, x0);
    let mut v = if ((y0 - x0) / grid.spacing()).fract() == 0.0 {
        u.shifted(((y0 - x0) / grid.spacing()) as isize)
    } else {
        translated_pulse(pulse, y0)
    };
    let fitter = PhaseFitter::new(pulse);
    let (mut tu, tube_u) = Tracker::new(fitter.clone(), &u, x0)?;
    let (mut tv, tube_v) = Tracker::new(fitter, &v, y0)?;
    let record = |t: f64, tu: &Tracker, tv: &Tracker, tube_u, tube_v, u: &FieldState, v: &FieldState| TwoPulseRecord {
        t,
        phase_u: tu.lift,
        phase_v: tv.lift,
        tube_u,
        tube_v,
        distance: torus_distance(tu.lift, tv.lift),
        discrepancy: field_discrepancy(u, v),
    };
    let mut report = TwoPulseReport {
        sigma,
        seed: cfg.seed,
        x0,
        y0,
        records: vec![record(0.0, &tu, &tv, tube_u, tube_v, &u, &v)],
        failure: None,
    };
    let mut dw = vec![0.0; 2 * noise.truncation() + 1];
    let advance = pulse.speed() * every as f64 * cfg.dt;
    let mut s = 0;
    while s < total {
        let k = every.min(total - s);
        for _ in 0..k {
            cursor.next_into(&mut dw);
            let ok_u = stepper.step(&mut u, &dw);
            let ok_v = stepper.step(&mut v, &dw);
            s += 1;
            if !(ok_u && ok_v) {
                report.failure = Some(format!("blow-up at t = {}", s as f64 * cfg.dt));
                return Ok(report);
            }
        }
        let adv = advance * k as f64 / every as f64;
        let fits = tu.update(&u, adv).and_then(|a| tv.update(&v, adv).map(|b| (a, b)));
        match fits {
            Ok((a, b)) => report.records.push(record(s as f64 * cfg.dt, &tu, &tv, a, b, &u, &v)),
            Err(e) => {
                report.failure = Some(format!("t = {}: {e}", s as f64 * cfg.dt));
                return Ok(report);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub run: SpdeRun,
    /// `max |x̂ − γ|` over the checkpoints.
    pub max_phase_error: f64,
    /// First checkpoint time with tube distance above `tube_multiple · σ`.
    pub tube_exit: Option<f64>,
    pub tube_multiple: f64,
}

pub const TUBE_MULTIPLE: f64 = 5.0;

/// SPDE from `T_{x0}u*` alongside the reduced SDE on the identical increments.
#[allow(clippy::too_many_arguments)]
pub fn reduced_vs_full(
    x0: f64,
    model: &ModelSpec,
    pulse: &PulseSolution,
    noise: &NoiseSpec,
    reduced: &ReducedModel,
    sigma: f64,
    cfg: &SpdeConfig,
) -> Result<ComparisonRecord> {
    let total = cfg.validate()?;
    let every = cfg.checkpoint_steps(sigma)?;
    if reduced.truncation != noise.truncation() {
        return Err(invalid("reduced model and noise table have different truncations"));
    }
    let grid = pulse.grid();
    let fine = cfg.path(noise.truncation())?;
    let mut cursor: NoiseCursor = fine.cursor();
    let fine_dt = fine.dt();
    let mut stepper = SpdeStepper::new(model, noise, sigma, grid, cfg.dt)?;
    let mut kernel = SdeKernel::new(reduced, sigma)?;
    let iso = match cfg.isochron_every {
        Some(_) => Some(Isochron::new(pulse, model, IsochronOptions::default())?),
        None => None,
    };
    let mut u = translated_pulse(pulse, x0);
    let (mut tracker, tube0) = Tracker::new(PhaseFitter::new(pulse), &u, x0)?;
    let mut gamma = x0;
    let kk = noise.truncation();
    let mut fine_dw = vec![0.0; 2 * kk + 1];
    let mut dw = vec![0.0; 2 * kk + 1];
    let mut run = SpdeRun {
        sigma,
        seed: cfg.seed,
        dt: cfg.dt,
        checkpoints: vec![Checkpoint {
            t: 0.0,
            phase: tracker.lift,
            tube: tube0,
            gamma: Some(gamma),
            isochron: None,
        }],
        snapshots: Vec::new(),
        failure: None,
    };
    if cfg.snapshot_every.is_some() {
        run.snapshots.push(u.clone());
    }
    let advance = pulse.speed() * cfg.dt;
    let mut s = 0;
    let mut index = 0;
    while s < total {
        let k = every.min(total - s);
        for _ in 0..k {
            dw.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..cfg.substeps {
                cursor.next_into(&mut fine_dw);
                gamma = kernel.ito_step(gamma, &fine_dw, fine_dt);
                for (a, b) in dw.iter_mut().zip(&fine_dw) {
                    *a += b;
                }
            }
            s += 1;
            if !stepper.step(&mut u, &dw) {
                run.failure = Some(format!("blow-up at t = {}", s as f64 * cfg.dt));
                return Ok(finish(run, sigma));
            }
        }
        index += 1;
        let tube = match tracker.update(&u, advance * k as f64) {
            Ok(t) => t,
            Err(e) => {
                run.failure = Some(format!("t = {}: {e}", s as f64 * cfg.dt));
                return Ok(finish(run, sigma));
            }
        };
        let isochron = match (&iso, cfg.isochron_every) {
            (Some(iso), Some(m)) if m > 0 && index % m == 0 => iso
                .eval(&u)
                .ok()
                .map(|p| tracker.lift + wrap_centered(p - tracker.lift, grid.length())),
            _ => None,
        };
        run.checkpoints.push(Checkpoint {
            t: s as f64 * cfg.dt,
            phase: tracker.lift,
            tube,
            gamma: Some(gamma),
            isochron,
        });
        if let Some(m) = cfg.snapshot_every {
            if m > 0 && index % m == 0 {
                run.snapshots.push(u.clone());
            }
        }
    }
    Ok(finish(run, sigma))
}

fn finish(run: SpdeRun, sigma: f64) -> ComparisonRecord {
    let max_phase_error = run
        .checkpoints
        .iter()
        .filter_map(|c| c.gamma.map(|g| (c.phase - g).abs()))
        .fold(0.0, f64::max);
    let tube_exit = run
        .checkpoints
        .iter()
        .find(|c| c.tube > TUBE_MULTIPLE * sigma)
        .map(|c| c.t);
    ComparisonRecord {
        run,
        max_phase_error,
        tube_exit,
        tube_multiple: TUBE_MULTIPLE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapstoneSummary {
    pub sigma: f64,
    pub reports: Vec<TwoPulseReport>,
    pub median_final_distance: Option<f64>,
    pub max_tube: f64,
    pub median_discrepancy_reduction: f64,
    pub censored: usize,
}

/// Two-pulse experiments over consecutive seeds, in parallel.
#[allow(clippy::too_many_arguments)]
pub fn two_pulse_ensemble(
    x0: f64,
    y0: f64,
    model: &ModelSpec,
    pulse: &PulseSolution,
    noise: &NoiseSpec,
    sigma: f64,
    cfg: &SpdeConfig,
    seeds: usize,
) -> Result<CapstoneSummary> {
    let reports: Vec<TwoPulseReport> = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let c = SpdeConfig {
                seed: cfg.seed + i,
                ..*cfg
            };
            two_pulse_experiment(x0, y0, model, pulse, noise, sigma, &c)
        })
        .collect::<Result<_>>()?;
    let finals: Vec<Option<f64>> = reports.iter().map(|r| r.final_distance()).collect();
    let reductions: Vec<f64> = reports.iter().map(|r| r.discrepancy_reduction()).collect();
    Ok(CapstoneSummary {
        sigma,
        median_final_distance: stats::censored_median(&finals),
        max_tube: reports.iter().map(|r| r.max_tube()).fold(0.0, f64::max),
        median_discrepancy_reduction: stats::median(&reductions),
        censored: reports.iter().filter(|r| r.censored()).count(),
        reports,
    })
}
