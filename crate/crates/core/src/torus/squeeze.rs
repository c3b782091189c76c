//! Open-loop control of the reduced phase ODE that squeezes three reference points in turn.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::reduction::coefficients::ReducedModel;

pub const REFERENCE_POINTS: [f64; 3] = [0.0, 1.0 / 3.0, -1.0 / 3.0];
pub const SCHEDULE_END: f64 = 5.0;

/// Sign of the control on unit interval `t`.
pub fn schedule_sign(t: f64) -> f64 {
    if (t.floor() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Squeeze target on unit interval `t`.
pub fn schedule_target(t: f64) -> f64 {
    match t.floor() as i64 {
        i64::MIN..=1 => REFERENCE_POINTS[0],
        2 | 3 => REFERENCE_POINTS[1],
        _ => REFERENCE_POINTS[2],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeOptions {
    pub steps_per_unit: usize,
    /// Include the drift `c + σ²(𝔞 − ½Σ𝔟ₖ'𝔟ₖ)`.
    pub with_drift: bool,
    pub record_every: usize,
}

impl Default for SqueezeOptions {
    fn default() -> Self {
        Self {
            steps_per_unit: 20_000,
            with_drift: false,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeInequality {
    pub time: f64,
    pub target: f64,
    pub lower: f64,
    pub upper: f64,
    pub ordered: bool,
    /// Largest distance of either endpoint from the target.
    pub deviation: f64,
}

impl SqueezeInequality {
    pub fn holds(&self, eps: f64) -> bool {
        self.ordered && self.deviation <= eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub gain: f64,
    pub sigma: f64,
    /// Piecewise constant controls `(h₁, h₋₁)` on each unit interval.
    pub controls: Vec<(f64, f64)>,
    /// Max mismatch between the realized vector field and `-k L sin(2π(x - η))`.
    pub control_residual: f64,
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inequalities: [SqueezeInequality; 3],
    /// `max |γ(2) - γ(0)|` and `max |γ(4) - γ(0)|` over the ensemble.
    pub reversal_error: (f64, f64),
}

impl SqueezeReport {
    pub fn holds(&self, eps: f64) -> bool {
        self.inequalities.iter().all(|q| q.holds(eps))
    }

    pub fn epsilon(&self) -> f64 {
        self.inequalities.iter().map(|q| q.deviation).fold(0.0, f64::max)
    }
}

fn first_harmonic(model: &ReducedModel, k: i32) -> (f64, f64) {
    let s = model.b(k);
    (s.cos_coeff(1), s.sin_coeff(1))
}

/// Controls making `σ(𝔟₁h₁ + 𝔟₋₁h₋₁)` equal to `-k L sin(2π(x - η))`.
pub fn squeeze_controls(model: &ReducedModel, sigma: f64, gain: f64, sign: f64, eta: f64) -> Result<(f64, f64)> {
    if model.truncation < 1 {
        return Err(invalid("squeezing needs the modes k = ±1"));
    }
    let (a1, b1) = first_harmonic(model, 1);
    let (a2, b2) = first_harmonic(model, -1);
    let det = a1 * b2 - a2 * b1;
    let scale = (a1 * a1 + b1 * b1 + a2 * a2 + b2 * b2).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-12 * scale || !(sigma > 0.0) {
        return Err(Error::Nondegeneracy(
            "the first harmonics of b₁ and b₋₁ do not span cos and sin".into(),
        ));
    }
    // -kL sin(2πx - 2πη) = kL sin(2πη) cos(2πx) - kL cos(2πη) sin(2πx)
    let (s, c) = (TAU * eta).sin_cos();
    let rc = sign * gain * s / sigma;
    let rs = -sign * gain * c / sigma;
    Ok(((rc * b2 - rs * a2) / det, (a1 * rs - b1 * rc) / det))
}

/// Integrates the controlled phase ODE over `[0, 5]` with RK4 from `z₁, z₂, z₃` followed by `extra` points.
pub fn controlled_squeeze(
    model: &ReducedModel,
    sigma: f64,
    gain: f64,
    extra: &[f64],
    opts: &SqueezeOptions,
) -> Result<SqueezeReport> {
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(invalid("gain must be finite and nonnegative"));
    }
    if opts.steps_per_unit == 0 {
        return Err(invalid("steps_per_unit must be positive"));
    }
    let mut controls = Vec::with_capacity(5);
    for i in 0..5 {
        let t = i as f64 + 0.5;
        controls.push(squeeze_controls(model, sigma, gain, schedule_sign(t), schedule_target(t))?);
    }
    let b1 = model.b(1).clone();
    let bm1 = model.b(-1).clone();
    let drift = if opts.with_drift {
        Some(model.strat_drift.scale(sigma * sigma))
    } else {
        None
    };
    let speed = model.speed;
    let field = |x: f64, h: (f64, f64)| -> f64 {
        let mut v = sigma * (b1.eval(x) * h.0 + bm1.eval(x) * h.1);
        if let Some(d) = &drift {
            v += speed + d.eval(x);
        }
        v
    };
    let mut residual: f64 = 0.0;
    for (i, &h) in controls.iter().enumerate() {
        let t = i as f64 + 0.5;
        let (k, eta) = (schedule_sign(t), schedule_target(t));
        for j in 0..64 {
            let x = j as f64 / 64.0;
            let want = -k * gain * (TAU * (x - eta)).sin();
            let got = sigma * (b1.eval(x) * h.0 + bm1.eval(x) * h.1);
            residual = residual.max((got - want).abs());
        }
    }
    let initial: Vec<f64> = REFERENCE_POINTS.iter().chain(extra).copied().collect();
    let n = opts.steps_per_unit;
    let dt = 1.0 / n as f64;
    let mut state = initial.clone();
    let mut times = vec![0.0];
    let mut states = vec![state.clone()];
    let mut snapshots = vec![state.clone()];
    let every = opts.record_every.max(1);
    for (unit, &h) in controls.iter().enumerate() {
        for s in 1..=n {
            for x in state.iter_mut() {
                let k1 = field(*x, h);
                let k2 = field(*x + 0.5 * dt * k1, h);
                let k3 = field(*x + 0.5 * dt * k2, h);
                let k4 = field(*x + dt * k3, h);
                *x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            if s % every == 0 {
                times.push(unit as f64 + s as f64 * dt);
                states.push(state.clone());
            }
        }
        snapshots.push(state.clone());
    }
    let [z1, z2, z3] = REFERENCE_POINTS;
    let ineq = |time: usize, target: f64, lower: f64, upper: f64| SqueezeInequality {
        time: time as f64,
        target,
        lower,
        upper,
        ordered: lower < upper,
        deviation: (lower - target).abs().max((upper - target).abs()),
    };
    let at = |t: usize, i: usize| snapshots[t][i];
    let inequalities = [
        ineq(1, z1, at(1, 2), at(1, 1)),
        ineq(3, z2, at(3, 0), at(3, 2) + 1.0),
        ineq(5, z3, at(5, 1) - 1.0, at(5, 0)),
    ];
    let rev = |t: usize| {
        snapshots[t]
            .iter()
            .zip(&initial)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    Ok(SqueezeReport {
        gain,
        sigma,
        controls,
        control_residual: residual,
        initial: initial.clone(),
        times,
        states,
        inequalities,
        reversal_error: (rev(2), rev(4)),
    })
}

/// Exact solution of `dγ/dt = -k L sin(2π(γ - η))` on one unit interval.
pub fn squeeze_exact(x: f64, gain: f64, sign: f64, eta: f64, t: f64) -> f64 {
    let d = x - eta;
    let n = d.round();
    let r = d - n;
    let tan = (std::f64::consts::PI * r).tan() * (-TAU * sign * gain * t).exp();
    eta + n + tan.atan() / std::f64::consts::PI
}
