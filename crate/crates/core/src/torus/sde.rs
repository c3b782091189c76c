//! Shared-noise simulation of the reduced phase SDE on the torus.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduction::coefficients::ReducedModel;
use crate::reduction::trig::{Harmonics, TrigSeries};
use crate::torus::path::NoisePath;

/// Torus distance on the unit circle.
#[inline]
pub fn torus_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Euler–Maruyama for the Itô form.
    ItoEuler,
    /// Heun predictor–corrector for the Stratonovich form.
    StratonovichHeun,
}

/// Ensemble of lifted positions (the torus position is the fractional part).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusEnsemble {
    pub lifts: Vec<f64>,
    /// `log ∂ₓγ` per member, when tangent dynamics are tracked.
    pub log_tangent: Option<Vec<f64>>,
    pub t: f64,
}

impl TorusEnsemble {
    pub fn new(positions: Vec<f64>) -> Self {
        Self {
            lifts: positions,
            log_tangent: None,
            t: 0.0,
        }
    }

    pub fn with_tangent(positions: Vec<f64>) -> Self {
        let n = positions.len();
        Self {
            lifts: positions,
            log_tangent: Some(vec![0.0; n]),
            t: 0.0,
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        self.lifts.iter().map(|&x| wrap_unit(x)).collect()
    }

    pub fn len(&self) -> usize {
        self.lifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lifts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<u64>,
    pub times: Vec<f64>,
    /// Lifted positions per record.
    pub lifts: Vec<Vec<f64>>,
    pub log_tangent: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn positions(&self, record: usize) -> Vec<f64> {
        self.lifts[record].iter().map(|&x| wrap_unit(x)).collect()
    }
}

#[derive(Debug, Clone)]
struct Sparse {
    mean: f64,
    terms: Vec<(usize, f64, f64)>,
}

impl Sparse {
    fn new(s: &TrigSeries) -> Self {
        Self {
            mean: s.mean,
            terms: (1..=s.order())
                .filter_map(|n| {
                    let (a, b) = (s.cos_coeff(n), s.sin_coeff(n));
                    (a != 0.0 || b != 0.0).then_some((n, a, b))
                })
                .collect(),
        }
    }

    #[inline]
    fn eval(&self, h: &Harmonics) -> f64 {
        let mut acc = self.mean;
        for &(n, a, b) in &self.terms {
            acc += a * h.cos[n] + b * h.sin[n];
        }
        acc
    }
}

/// Precompiled coefficients of one reduced model at fixed `σ`.
#[derive(Debug, Clone)]
pub struct SdeKernel {
    speed: f64,
    sigma: f64,
    truncation: usize,
    a: Sparse,
    a_prime: Sparse,
    strat: Sparse,
    /// `(index into the increment vector, 𝔟_k, 𝔟_k')` for modes with nonzero coefficients.
    modes: Vec<(usize, Sparse, Sparse)>,
    active: Vec<i32>,
    harmonics: Harmonics,
    b: Vec<f64>,
}

impl SdeKernel {
    pub fn new(model: &ReducedModel, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma must be finite and nonnegative"));
        }
        let kk = model.truncation as i32;
        let active = model.active_modes();
        let modes: Vec<(usize, Sparse, Sparse)> = active
            .iter()
            .map(|&k| ((k + kk) as usize, Sparse::new(model.b(k)), Sparse::new(model.b_prime(k))))
            .collect();
        let m = modes.len();
        Ok(Self {
            speed: model.speed,
            sigma,
            truncation: model.truncation,
            a: Sparse::new(&model.a),
            a_prime: Sparse::new(&model.a_prime),
            strat: Sparse::new(&model.strat_drift),
            modes,
            active,
            harmonics: Harmonics::new(model.order().max(1)),
            b: vec![0.0; m],
        })
    }

    pub fn active_modes(&self) -> &[i32] {
        &self.active
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// One Itô Euler–Maruyama step of a single lift.
    #[inline]
    pub fn ito_step(&mut self, x: f64, dw: &[f64], dt: f64) -> f64 {
        self.harmonics.fill(x);
        let drift = self.speed + self.sigma * self.sigma * self.a.eval(&self.harmonics);
        let mut noise = 0.0;
        for (idx, b, _) in &self.modes {
            noise += b.eval(&self.harmonics) * dw[*idx];
        }
        x + drift * dt + self.sigma * noise
    }

    /// Itô step of position and `log ∂ₓγ`.
    #[inline]
    pub fn ito_step_tangent(&mut self, x: f64, ell: f64, dw: &[f64], dt: f64) -> (f64, f64) {
        self.harmonics.fill(x);
        let s2 = self.sigma * self.sigma;
        let drift = self.speed + s2 * self.a.eval(&self.harmonics);
        let mut noise = 0.0;
        let mut tnoise = 0.0;
        let mut energy = 0.0;
        for (idx, b, bp) in &self.modes {
            let dv = dw[*idx];
            let bpv = bp.eval(&self.harmonics);
            noise += b.eval(&self.harmonics) * dv;
            tnoise += bpv * dv;
            energy += bpv * bpv;
        }
        let ap = self.a_prime.eval(&self.harmonics);
        (
            x + drift * dt + self.sigma * noise,
            ell + s2 * (ap - 0.5 * energy) * dt + self.sigma * tnoise,
        )
    }

    #[inline]
    fn strat_parts(&mut self, x: f64) -> f64 {
        self.harmonics.fill(x);
        for (i, (_, b, _)) in self.modes.iter().enumerate() {
            self.b[i] = b.eval(&self.harmonics);
        }
        self.speed + self.sigma * self.sigma * self.strat.eval(&self.harmonics)
    }

    /// One Heun step of the Stratonovich form.
    #[inline]
    pub fn heun_step(&mut self, x: f64, dw: &[f64], dt: f64) -> f64 {
        let f0 = self.strat_parts(x);
        let mut g0 = 0.0;
        for (i, (idx, _, _)) in self.modes.iter().enumerate() {
            g0 += self.b[i] * dw[*idx];
        }
        let pred = x + f0 * dt + self.sigma * g0;
        let f1 = self.strat_parts(pred);
        let mut g1 = 0.0;
        for (i, (idx, _, _)) in self.modes.iter().enumerate() {
            g1 += self.b[i] * dw[*idx];
        }
        x + 0.5 * (f0 + f1) * dt + 0.5 * self.sigma * (g0 + g1)
    }

    #[inline]
    pub fn step(&mut self, scheme: Scheme, x: f64, dw: &[f64], dt: f64) -> f64 {
        match scheme {
            Scheme::ItoEuler => self.ito_step(x, dw, dt),
            Scheme::StratonovichHeun => self.heun_step(x, dw, dt),
        }
    }

    /// Pointwise Lyapunov integrand `σ²(𝔞' − ½Σ𝔟_k'²)`.
    pub fn lyapunov_density(&mut self, x: f64) -> f64 {
        self.harmonics.fill(x);
        let mut energy = 0.0;
        for (_, _, bp) in &self.modes {
            let v = bp.eval(&self.harmonics);
            energy += v * v;
        }
        self.sigma * self.sigma * (self.a_prime.eval(&self.harmonics) - 0.5 * energy)
    }
}

fn check_path(model: &ReducedModel, path: &NoisePath) -> Result<()> {
    if path.truncation() != model.truncation {
        return Err(invalid(format!(
            "noise path has {} modes per sign, reduced model has {}",
            path.truncation(),
            model.truncation
        )));
    }
    Ok(())
}

/// Number of path steps covering `duration`.
pub fn steps_for(path: &NoisePath, duration: f64) -> Result<u64> {
    let dt = path.dt();
    let steps = (duration / dt).round();
    if !(duration >= 0.0) || (steps * dt - duration).abs() > 1e-9 * duration.max(dt) {
        return Err(invalid(format!(
            "duration {duration} is not a whole number of steps of {dt}"
        )));
    }
    if steps as u64 > path.steps() {
        return Err(invalid(format!(
            "duration {duration} exceeds the noise horizon {}",
            path.horizon()
        )));
    }
    Ok(steps as u64)
}

/// Simulates the ensemble for `steps` steps under one shared noise path.
/// Records every `record_stride` steps (including the initial state).
pub fn simulate_steps(
    model: &ReducedModel,
    sigma: f64,
    ensemble: &TorusEnsemble,
    path: &NoisePath,
    steps: u64,
    record_stride: u64,
    scheme: Scheme,
) -> Result<(TorusEnsemble, Trajectory)> {
    check_path(model, path)?;
    if steps > path.steps() {
        return Err(invalid("simulation exceeds the noise horizon"));
    }
    let mut kernel = SdeKernel::new(model, sigma)?;
    let mut cursor = path.cursor_for(kernel.active_modes());
    let dt = path.dt();
    let mut state = ensemble.clone();
    let tracking = state.log_tangent.is_some();
    if tracking && scheme != Scheme::ItoEuler {
        return Err(invalid("tangent dynamics are integrated in the Itô form only"));
    }
    let stride = record_stride.max(1);
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, s: u64, st: &TorusEnsemble| {
        traj.steps.push(s);
        traj.times.push(st.t);
        traj.lifts.push(st.lifts.clone());
        if let Some(l) = &st.log_tangent {
            traj.log_tangent.push(l.clone());
        }
    };
    record(&mut traj, 0, &state);
    let mut dw = vec![0.0; 2 * model.truncation + 1];
    let t0 = state.t;
    for s in 1..=steps {
        cursor.next_into(&mut dw);
        if let Some(ells) = state.log_tangent.as_mut() {
            for (x, l) in state.lifts.iter_mut().zip(ells.iter_mut()) {
                let (nx, nl) = kernel.ito_step_tangent(*x, *l, &dw, dt);
                *x = nx;
                *l = nl;
            }
        } else {
            for x in state.lifts.iter_mut() {
                *x = kernel.step(scheme, *x, &dw, dt);
            }
        }
        state.t = t0 + s as f64 * dt;
        if s % stride == 0 || s == steps {
            record(&mut traj, s, &state);
        }
    }
    Ok((state, traj))
}

/// Simulates for `duration` (a whole number of path steps) with the Itô scheme.
pub fn simulate(
    model: &ReducedModel,
    sigma: f64,
    ensemble: &TorusEnsemble,
    path: &NoisePath,
    duration: f64,
    record_stride: u64,
) -> Result<(TorusEnsemble, Trajectory)> {
    let steps = steps_for(path, duration)?;
    simulate_steps(model, sigma, ensemble, path, steps, record_stride, Scheme::ItoEuler)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub stderr: f64,
    pub batches: usize,
    pub duration: f64,
}

/// Time-average growth rate of `log ∂ₓγ` after `burn_in`, with a batch-means standard error.
pub fn tangent_lyapunov_mc(
    model: &ReducedModel,
    sigma: f64,
    x0: f64,
    path: &NoisePath,
    duration: f64,
    burn_in: f64,
) -> Result<LyapunovEstimate> {
    const BATCHES: usize = 20;
    if !(duration > burn_in) || !(burn_in >= 0.0) {
        return Err(invalid("duration must exceed the burn-in"));
    }
    let dt = path.dt();
    let total = steps_for(path, duration)?;
    let burn = (burn_in / dt).round() as u64;
    let measured = total - burn;
    let per_batch = measured / BATCHES as u64;
    if per_batch == 0 {
        return Err(invalid("too few steps for batch means"));
    }
    check_path(model, path)?;
    let mut kernel = SdeKernel::new(model, sigma)?;
    let mut cursor = path.cursor_for(kernel.active_modes());
    let mut dw = vec![0.0; 2 * model.truncation + 1];
    let (mut x, mut ell) = (x0, 0.0);
    for _ in 0..burn {
        cursor.next_into(&mut dw);
        let r = kernel.ito_step_tangent(x, ell, &dw, dt);
        x = r.0;
        ell = r.1;
    }
    let mut slopes = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let start = ell;
        for _ in 0..per_batch {
            cursor.next_into(&mut dw);
            let r = kernel.ito_step_tangent(x, ell, &dw, dt);
            x = r.0;
            ell = r.1;
        }
        slopes.push((ell - start) / (per_batch as f64 * dt));
    }
    let (lambda, stderr) = crate::stats::mean_stderr(&slopes);
    Ok(LyapunovEstimate {
        lambda,
        stderr,
        batches: BATCHES,
        duration: per_batch as f64 * BATCHES as f64 * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncOutcome {
    /// First time the torus distance drops below the threshold; `None` if censored.
    pub time: Option<f64>,
    pub horizon: f64,
    /// Lifted trajectories stayed ordered (`x < y < x + 1`) at every step.
    pub order_preserved: bool,
}

/// First passage of the shared-noise two-point distance below `threshold`.
pub fn sync_time(
    model: &ReducedModel,
    sigma: f64,
    x0: f64,
    y0: f64,
    threshold: f64,
    path: &NoisePath,
) -> Result<SyncOutcome> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    let horizon = path.horizon();
    if torus_distance(x0, y0) < threshold || threshold >= 0.5 {
        return Ok(SyncOutcome {
            time: Some(0.0),
            horizon,
            order_preserved: true,
        });
    }
    check_path(model, path)?;
    let mut kernel = SdeKernel::new(model, sigma)?;
    let mut cursor = path.cursor_for(kernel.active_modes());
    let dt = path.dt();
    let mut dw = vec![0.0; 2 * model.truncation + 1];
    let mut x = x0;
    let mut y = x0 + (y0 - x0).rem_euclid(1.0);
    let mut ordered = true;
    for s in 1..=path.steps() {
        cursor.next_into(&mut dw);
        x = kernel.ito_step(x, &dw, dt);
        y = kernel.ito_step(y, &dw, dt);
        if !(x < y && y < x + 1.0) {
            ordered = false;
        }
        let d = (y - x).min(x + 1.0 - y);
        if d < threshold {
            return Ok(SyncOutcome {
                time: Some(s as f64 * dt),
                horizon,
                order_preserved: ordered,
            });
        }
    }
    Ok(SyncOutcome {
        time: None,
        horizon,
        order_preserved: ordered,
    })
}
