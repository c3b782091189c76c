//! Exponential time differencing for `u_t = D u_xx + f(u)`.

use crate::error::{invalid, Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::{ModelSpec, Reaction};
use crate::spectral::{apply_circulant, circulant_kernel, laplacian_symbol, Kernel, Spectral};

const KERNEL_TOL: f64 = 1e-14;

/// First-order ETD step `u ← e^{dt A} a + dt φ₁(dt A) b`, applied per component
/// as truncated circulant stencils built from the exact Fourier multipliers.
#[derive(Debug, Clone)]
pub struct EtdStepper {
    grid: Grid1D,
    dt: f64,
    propagator: Vec<Kernel>,
    integrator: Vec<Kernel>,
}

impl EtdStepper {
    pub fn new(grid: Grid1D, diffusion: &[f64], dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let spectral = Spectral::new(grid);
        let mut propagator = Vec::with_capacity(diffusion.len());
        let mut integrator = Vec::with_capacity(diffusion.len());
        for &d in diffusion {
            if d == 0.0 {
                propagator.push(Kernel::identity(1.0));
                integrator.push(Kernel::identity(dt));
                continue;
            }
            let z = |k: f64| dt * d * laplacian_symbol(grid, k);
            propagator.push(circulant_kernel(&spectral, |k| z(k).exp(), KERNEL_TOL));
            integrator.push(circulant_kernel(
                &spectral,
                |k| {
                    let zk = z(k);
                    if zk == 0.0 {
                        dt
                    } else {
                        dt * zk.exp_m1() / zk
                    }
                },
                KERNEL_TOL,
            ));
        }
        Ok(Self {
            grid,
            dt,
            propagator,
            integrator,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn stencil_width(&self, component: usize) -> usize {
        self.propagator[component].len().max(self.integrator[component].len())
    }

    /// `out = E a + Φ b`, all slices component-major.
    pub fn advance(&self, a: &[f64], b: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = self.grid.points();
        for c in 0..self.propagator.len() {
            let r = c * n..(c + 1) * n;
            apply_circulant(&self.propagator[c], &a[r.clone()], &mut out[r.clone()]);
            apply_circulant(&self.integrator[c], &b[r.clone()], &mut scratch[..n]);
            for (o, s) in out[r].iter_mut().zip(&scratch[..n]) {
                *o += s;
            }
        }
    }
}

/// Evaluates `f(u)` pointwise into `out` (component-major).
pub fn reaction_field(model: &ModelSpec, n: usize, u: &[f64], out: &mut [f64]) {
    if let Reaction::FitzHughNagumo { a, epsilon, gamma } = *model.reaction_spec() {
        let (x, y) = u.split_at(n);
        let (fx, fy) = out.split_at_mut(n);
        for i in 0..n {
            let (xi, yi) = (x[i], y[i]);
            fx[i] = xi * (xi - a) * (1.0 - xi) - yi;
            fy[i] = epsilon * (xi - gamma * yi);
        }
        return;
    }
    let comps = model.components();
    let mut p = [0.0; 8];
    let mut q = [0.0; 8];
    for i in 0..n {
        for c in 0..comps {
            p[c] = u[c * n + i];
        }
        model.reaction(&p[..comps], &mut q[..comps]);
        for c in 0..comps {
            out[c * n + i] = q[c];
        }
    }
}

/// Deterministic integrator with reusable buffers.
#[derive(Debug, Clone)]
pub struct Evolver {
    model: ModelSpec,
    stepper: EtdStepper,
    forcing: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
}

impl Evolver {
    pub fn new(model: &ModelSpec, grid: Grid1D, dt: f64) -> Result<Self> {
        let stepper = EtdStepper::new(grid, model.diffusion(), dt)?;
        let len = model.components() * grid.points();
        Ok(Self {
            model: model.clone(),
            stepper,
            forcing: vec![0.0; len],
            next: vec![0.0; len],
            scratch: vec![0.0; grid.points()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt
    }

    pub fn stepper(&self) -> &EtdStepper {
        &self.stepper
    }

    /// One step in place; returns `false` if the result is not finite.
    pub fn step(&mut self, state: &mut FieldState) -> bool {
        let n = self.stepper.grid.points();
        reaction_field(&self.model, n, state.as_slice(), &mut self.forcing);
        self.stepper
            .advance(state.as_slice(), &self.forcing, &mut self.next, &mut self.scratch);
        state.as_mut_slice().copy_from_slice(&self.next);
        state.t += self.stepper.dt;
        self.next.iter().all(|v| v.is_finite())
    }

    /// Advances `steps` steps, reporting the first non-finite step.
    pub fn run(&mut self, state: &mut FieldState, steps: usize) -> Result<()> {
        for s in 0..steps {
            if !self.step(state) {
                return Err(Error::BlowUp {
                    step: s + 1,
                    time: state.t,
                });
            }
        }
        Ok(())
    }
}

/// Number of whole steps of size `dt` in `duration`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid("duration must be nonnegative and dt positive"));
    }
    let steps = (duration / dt).round();
    if (steps * dt - duration).abs() > 1e-9 * duration.max(dt) {
        return Err(invalid(format!(
            "duration {duration} is not a whole multiple of dt {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Integrates `state` for `duration` with ETD1 steps of size `dt`.
pub fn evolve_pde(state: &FieldState, model: &ModelSpec, duration: f64, dt: f64) -> Result<FieldState> {
    if state.components() != model.components() {
        return Err(invalid("state component count does not match the model"));
    }
    let steps = step_count(duration, dt)?;
    let mut evolver = Evolver::new(model, state.grid(), dt)?;
    let mut out = state.clone();
    evolver.run(&mut out, steps)?;
    Ok(out)
}
