//! Numerical isochron map and its variations.

use crate::error::{invalid, Error, Result};
use crate::evolve::{step_count, Evolver};
use crate::field::FieldState;
use crate::model::ModelSpec;
use crate::phase::{wrap_centered, PhaseFitter};
use crate::pulse::PulseSolution;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsochronOptions {
    pub t_relax: f64,
    pub dt: f64,
    /// Interval between phase checkpoints.
    pub checkpoint: f64,
    /// Tube radius as a fraction of `‖u*‖₂`.
    pub tube_fraction: f64,
}

impl Default for IsochronOptions {
    fn default() -> Self {
        Self {
            t_relax: 200.0,
            dt: 0.01,
            checkpoint: 5.0,
            tube_fraction: 0.1,
        }
    }
}

/// Asymptotic-phase map `π` relative to the pulse, normalized so `π(u*) = 0`.
///
/// The phase of a relaxed state is compared with the relaxed pulse itself, which
/// cancels the speed error of the time discretization.
#[derive(Debug, Clone)]
pub struct Isochron {
    model: ModelSpec,
    fitter: PhaseFitter,
    speed: f64,
    opts: IsochronOptions,
    steps_per_checkpoint: usize,
    total_steps: usize,
    tube_limit: f64,
    reference: f64,
}

impl Isochron {
    pub fn new(pulse: &PulseSolution, model: &ModelSpec, opts: IsochronOptions) -> Result<Self> {
        if !(opts.t_relax > 0.0) || !(opts.checkpoint > 0.0) || !(opts.tube_fraction > 0.0) {
            return Err(invalid("isochron options must be positive"));
        }
        let total = step_count(opts.t_relax, opts.dt)?;
        let per = ((opts.checkpoint / opts.dt).round() as usize).max(1);
        let mut iso = Self {
            model: model.clone(),
            fitter: PhaseFitter::new(pulse),
            speed: pulse.speed(),
            opts,
            steps_per_checkpoint: per,
            total_steps: total,
            tube_limit: opts.tube_fraction * pulse.profile().norm(),
            reference: 0.0,
        };
        iso.reference = iso.relaxed_lift(pulse.profile())?;
        Ok(iso)
    }

    pub fn tube_limit(&self) -> f64 {
        self.tube_limit
    }

    pub fn options(&self) -> &IsochronOptions {
        &self.opts
    }

    pub fn fitter(&self) -> &PhaseFitter {
        &self.fitter
    }

    /// Continuous phase lift of `v` after relaxation.
    fn relaxed_lift(&self, v: &FieldState) -> Result<f64> {
        let grid = v.grid();
        let l = grid.length();
        let first = self.fitter.fit(v)?;
        if first.tube > self.tube_limit {
            return Err(Error::LeftBasin {
                time: 0.0,
                distance: first.tube,
                limit: self.tube_limit,
            });
        }
        let mut lift = wrap_centered(first.phase, l);
        let mut evolver = Evolver::new(&self.model, grid, self.opts.dt)?;
        let mut state = v.clone();
        state.t = 0.0;
        let mut remaining = self.total_steps;
        while remaining > 0 {
            let k = remaining.min(self.steps_per_checkpoint);
            remaining -= k;
            evolver.run(&mut state, k)?;
            let advance = self.speed * k as f64 * self.opts.dt;
            let fit = self.fitter.fit(&state)?;
            if fit.tube > self.tube_limit {
                return Err(Error::LeftBasin {
                    time: state.t,
                    distance: fit.tube,
                    limit: self.tube_limit,
                });
            }
            let predicted = lift + advance;
            lift = predicted + wrap_centered(fit.phase - predicted, l);
        }
        Ok(lift)
    }

    /// `π(v)`.
    pub fn eval(&self, v: &FieldState) -> Result<f64> {
        if !v.same_shape(self.fitter.profile()) {
            return Err(invalid("state does not match the pulse grid"));
        }
        Ok(self.relaxed_lift(v)? - self.reference)
    }

    /// `π(u* + s v)` for the pulse profile `u*`.
    pub fn eval_offset(&self, s: f64, v: &FieldState) -> Result<f64> {
        self.eval(&self.fitter.profile().axpy(s, v))
    }

    /// Central difference `(π(u* + εv) − π(u* − εv)) / 2ε`.
    pub fn first_variation(&self, v: &FieldState, eps: f64) -> Result<f64> {
        let plus = self.eval_offset(eps, v)?;
        let minus = self.eval_offset(-eps, v)?;
        Ok((plus - minus) / (2.0 * eps))
    }

    /// `π''(u*)[v, w]` by polarization of second central differences, using `π(u*) = 0`.
    pub fn second_variation(&self, v: &FieldState, w: &FieldState, eps: f64) -> Result<f64> {
        let sum = v.axpy(1.0, w);
        let diff = v.axpy(-1.0, w);
        let vals = [
            self.eval_offset(eps, &sum)?,
            self.eval_offset(-eps, &sum)?,
            self.eval_offset(eps, &diff)?,
            self.eval_offset(-eps, &diff)?,
        ];
        Ok(((vals[0] + vals[1]) - (vals[2] + vals[3])) / (4.0 * eps * eps))
    }

    /// Pure second central difference `(π(u*+εv) + π(u*−εv)) / ε²`, i.e. `π''(u*)[v, v]`.
    pub fn second_difference(&self, v: &FieldState, eps: f64) -> Result<f64> {
        let plus = self.eval_offset(eps, v)?;
        let minus = self.eval_offset(-eps, v)?;
        Ok((plus + minus) / (eps * eps))
    }
}

/// One-shot `π(v)`.
pub fn isochron_map(v: &FieldState, pulse: &PulseSolution, model: &ModelSpec, t_relax: f64) -> Result<f64> {
    let opts = IsochronOptions {
        t_relax,
        ..IsochronOptions::default()
    };
    Isochron::new(pulse, model, opts)?.eval(v)
}

/// One-shot `π''(u*)[v, w]`.
pub fn second_variation(
    pulse: &PulseSolution,
    model: &ModelSpec,
    v: &FieldState,
    w: &FieldState,
    eps: f64,
    opts: IsochronOptions,
) -> Result<f64> {
    Isochron::new(pulse, model, opts)?.second_variation(v, w, eps)
}
