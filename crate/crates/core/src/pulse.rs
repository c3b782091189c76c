//! Traveling pulse solver, linearization and adjoint.

use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::Evolver;
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::model::ModelSpec;
use crate::spectral::{derivative_matrix, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseOptions {
    /// Newton stops when the traveling-wave residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Eigenvalues with modulus below this count as the translation mode.
    pub tol_eig: f64,
    /// Minimum admissible modulus of the second-smallest eigenvalue.
    pub separation: f64,
    /// Compute the full spectrum of the linearization for gap diagnostics.
    pub spectrum: bool,
}

impl Default for PulseOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            tol_eig: 1e-6,
            separation: 1e-4,
            spectrum: true,
        }
    }
}

/// Spectral diagnostics of the discretized linearization `ℒ = D∂ₓₓ + c∂ₓ + f'(u*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    /// Eigenvalue of smallest modulus (real part).
    pub zero_eigenvalue: f64,
    /// Number of eigenvalues with modulus at most `tol_eig`; `None` without a full spectrum.
    pub zero_count: Option<usize>,
    /// `-max Re λ` over the remaining eigenvalues; `NaN` without a full spectrum.
    pub gap: f64,
    /// Modulus estimate of the second-smallest eigenvalue.
    pub second_smallest: f64,
    /// Cosine similarity between the kernel vector and `∂ₓu*`.
    pub null_cosine: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSolution {
    profile: FieldState,
    speed: f64,
    derivative: FieldState,
    adjoint: FieldState,
    residual: f64,
    adjoint_residual: f64,
    iterations: usize,
    diagnostics: SpectralDiagnostics,
}

impl PulseSolution {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        profile: FieldState,
        speed: f64,
        derivative: FieldState,
        adjoint: FieldState,
        residual: f64,
        adjoint_residual: f64,
        iterations: usize,
        diagnostics: SpectralDiagnostics,
    ) -> Self {
        Self {
            profile,
            speed,
            derivative,
            adjoint,
            residual,
            adjoint_residual,
            iterations,
            diagnostics,
        }
    }

    pub fn profile(&self) -> &FieldState {
        &self.profile
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn derivative(&self) -> &FieldState {
        &self.derivative
    }

    pub fn adjoint(&self) -> &FieldState {
        &self.adjoint
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn adjoint_residual(&self) -> f64 {
        self.adjoint_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn diagnostics(&self) -> &SpectralDiagnostics {
        &self.diagnostics
    }

    pub fn gap(&self) -> f64 {
        self.diagnostics.gap
    }

    pub fn grid(&self) -> Grid1D {
        self.profile.grid()
    }

    /// Pulse translated right by `shift` grid points, with matching derivative and adjoint.
    pub fn shifted(&self, shift: isize) -> PulseSolution {
        let mut out = self.clone();
        out.profile = self.profile.shifted(shift);
        out.derivative = self.derivative.shifted(shift);
        out.adjoint = self.adjoint.shifted(shift);
        out
    }
}

/// Spectral derivative of every component.
pub fn field_derivative(spectral: &Spectral, u: &FieldState) -> FieldState {
    let mut out = u.clone();
    for c in 0..u.components() {
        let d = spectral.derivative(u.component(c));
        out.component_mut(c).copy_from_slice(&d);
    }
    out
}

/// Traveling-wave residual `D u'' + c u' + f(u)`, component-major.
pub fn traveling_wave_residual(model: &ModelSpec, u: &FieldState, speed: f64) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.points();
    let spectral = Spectral::new(grid);
    let mut out = vec![0.0; u.as_slice().len()];
    crate::evolve::reaction_field(model, n, u.as_slice(), &mut out);
    let mut lap = vec![0.0; n];
    for c in 0..u.components() {
        let du = spectral.derivative(u.component(c));
        crate::spectral::laplacian(grid, u.component(c), &mut lap);
        let d = model.diffusion()[c];
        for i in 0..n {
            out[c * n + i] += d * lap[i] + speed * du[i];
        }
    }
    out
}

fn weighted_norm(h: f64, v: &[f64]) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Dense matrix of the linearization at `(u, c)`, size `nN x nN`.
pub fn linearization(model: &ModelSpec, u: &FieldState, speed: f64) -> Mat<f64> {
    let grid = u.grid();
    let n = grid.points();
    let comps = model.components();
    let dm = derivative_matrix(grid);
    let h = grid.spacing();
    let w = 1.0 / (12.0 * h * h);
    let stencil = [(-2isize, -w), (-1, 16.0 * w), (0, -30.0 * w), (1, 16.0 * w), (2, -w)];
    let mut m = Mat::<f64>::zeros(comps * n, comps * n);
    for c in 0..comps {
        let off = c * n;
        let d = model.diffusion()[c];
        for i in 0..n {
            for j in 0..n {
                m[(off + i, off + j)] = speed * dm[i * n + j];
            }
            if d != 0.0 {
                for &(s, wt) in &stencil {
                    let j = (i as isize + s).rem_euclid(n as isize) as usize;
                    m[(off + i, off + j)] += d * wt;
                }
            }
        }
    }
    let mut p = vec![0.0; comps];
    let mut jac = vec![0.0; comps * comps];
    for i in 0..n {
        u.point(i, &mut p);
        model.reaction_jacobian(&p, &mut jac);
        for a in 0..comps {
            for b in 0..comps {
                m[(a * n + i, b * n + i)] += jac[a * comps + b];
            }
        }
    }
    m
}

fn col_norm(v: &Mat<f64>) -> f64 {
    (0..v.nrows()).map(|i| v[(i, 0)] * v[(i, 0)]).sum::<f64>().sqrt()
}

fn seed_vector(len: usize) -> Mat<f64> {
    Mat::from_fn(len, 1, |i, _| ((i as f64) * 0.618_033_988_749_895).fract() - 0.5)
}

fn all_finite(v: &Mat<f64>) -> bool {
    (0..v.nrows()).all(|i| v[(i, 0)].is_finite())
}

/// Inverse iteration at shift 0; returns the normalized vector.
fn inverse_iteration(a: &Mat<f64>, iterations: usize) -> Result<Mat<f64>> {
    let lu = a.partial_piv_lu();
    let mut x = seed_vector(a.nrows());
    for _ in 0..iterations {
        let y = lu.solve(&x);
        let nrm = col_norm(&y);
        if !(nrm.is_finite() && nrm > 0.0) || !all_finite(&y) {
            return Err(Error::DegeneratePulse("inverse iteration produced non-finite values".into()));
        }
        x = y * Scale(1.0 / nrm);
    }
    Ok(x)
}

/// Modulus of the second-smallest eigenvalue, by inverse iteration deflated
/// against the kernel pair `(r, l)` with `lᵀr = 1`.
fn second_smallest_estimate(a: &Mat<f64>, r: &Mat<f64>, l: &Mat<f64>) -> f64 {
    let lu = a.partial_piv_lu();
    let project = |x: &Mat<f64>| -> Mat<f64> {
        let s: f64 = (0..x.nrows()).map(|i| l[(i, 0)] * x[(i, 0)]).sum();
        Mat::from_fn(x.nrows(), 1, |i, _| x[(i, 0)] - s * r[(i, 0)])
    };
    let mut x = project(&seed_vector(a.nrows()));
    let nrm = col_norm(&x);
    x *= Scale(1.0 / nrm);
    let mut log_growth = 0.0;
    let warmup = 10;
    let measured = 30;
    for it in 0..warmup + measured {
        let y = project(&lu.solve(&x));
        let g = col_norm(&y);
        if !(g.is_finite() && g > 0.0) {
            return 0.0;
        }
        if it >= warmup {
            log_growth += g.ln();
        }
        x = y * Scale(1.0 / g);
    }
    (-log_growth / measured as f64).exp()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    (ab / (aa * bb).sqrt()).abs()
}

/// Kernel vector of `ℒ*`, scaled so `⟨ψ, ∂ₓu*⟩ = -1`, plus diagnostics.
fn adjoint_and_diagnostics(
    model: &ModelSpec,
    profile: &FieldState,
    speed: f64,
    derivative: &FieldState,
    opts: &PulseOptions,
) -> Result<(FieldState, f64, SpectralDiagnostics)> {
    let grid = profile.grid();
    let h = grid.spacing();
    let lin = linearization(model, profile, speed);
    let lin_t = lin.transpose().to_owned();
    let right = inverse_iteration(&lin, 4)?;
    let left = inverse_iteration(&lin_t, 4)?;
    let len = lin.nrows();
    let r: Vec<f64> = (0..len).map(|i| right[(i, 0)]).collect();
    let null_cosine = cosine(&r, derivative.as_slice());

    let pair: f64 = (0..len).map(|i| left[(i, 0)] * derivative.as_slice()[i]).sum::<f64>() * h;
    if pair == 0.0 || !pair.is_finite() {
        return Err(Error::DegeneratePulse("adjoint kernel is orthogonal to the derivative".into()));
    }
    let psi: Vec<f64> = (0..len).map(|i| -left[(i, 0)] / pair).collect();
    let adjoint = FieldState::from_flat(grid, profile.components(), psi.clone())?;
    let psi_mat = Mat::from_fn(len, 1, |i, _| psi[i]);
    let lpsi = &lin_t * &psi_mat;
    let adjoint_residual = col_norm(&lpsi) / col_norm(&psi_mat);
    let zero_eigenvalue = {
        let lr = &lin * &right;
        (0..len).map(|i| right[(i, 0)] * lr[(i, 0)]).sum::<f64>()
    };

    let lscaled = Mat::from_fn(len, 1, |i, _| {
        left[(i, 0)] / (0..len).map(|j| left[(j, 0)] * right[(j, 0)]).sum::<f64>()
    });
    let (zero_count, gap, second) = if opts.spectrum {
        let eig = lin
            .eigenvalues()
            .map_err(|e| Error::LinearAlgebra(format!("eigenvalue solver failed: {e:?}")))?;
        let mut mods: Vec<(f64, f64)> = eig.iter().map(|z| (z.norm(), z.re)).collect();
        mods.sort_by(|a, b| a.0.total_cmp(&b.0));
        let zero_count = mods.iter().filter(|m| m.0 <= opts.tol_eig).count();
        let gap = -mods[1..].iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
        (Some(zero_count), gap, mods[1].0)
    } else {
        (None, f64::NAN, second_smallest_estimate(&lin, &right, &lscaled))
    };
    if second < opts.separation {
        return Err(Error::IllConditionedNullspace {
            second,
            threshold: opts.separation,
        });
    }
    Ok((
        adjoint,
        adjoint_residual,
        SpectralDiagnostics {
            zero_eigenvalue,
            zero_count,
            gap,
            second_smallest: second,
            null_cosine,
        },
    ))
}

/// Recomputes the adjoint eigenfunction of an existing pulse.
pub fn compute_adjoint(pulse: &PulseSolution, model: &ModelSpec, opts: &PulseOptions) -> Result<FieldState> {
    let (psi, _, _) =
        adjoint_and_diagnostics(model, pulse.profile(), pulse.speed(), pulse.derivative(), opts)?;
    Ok(psi)
}

/// Newton solve of the periodic traveling-wave problem with a frozen phase condition.
pub fn find_pulse(
    model: &ModelSpec,
    guess: &FieldState,
    guess_speed: f64,
    opts: &PulseOptions,
) -> Result<PulseSolution> {
    if guess.components() != model.components() {
        return Err(invalid("guess component count does not match the model"));
    }
    if !guess.is_finite() || !guess_speed.is_finite() {
        return Err(invalid("guess must be finite"));
    }
    let grid = guess.grid();
    let n = grid.points();
    let h = grid.spacing();
    let comps = model.components();
    let len = comps * n;
    let spectral = Spectral::new(grid);
    let guess_d = field_derivative(&spectral, guess);
    let guess_d_norm = guess_d.norm();
    if guess_d_norm == 0.0 {
        return Err(Error::NoPulse {
            iterations: 0,
            residual: f64::NAN,
        });
    }

    let mut u = guess.clone();
    let mut c = guess_speed;
    let phase = |u: &FieldState| -> f64 {
        h * guess_d
            .as_slice()
            .iter()
            .zip(u.as_slice().iter().zip(guess.as_slice()))
            .map(|(g, (a, b))| g * (a - b))
            .sum::<f64>()
    };
    let merit = |u: &FieldState, c: f64| -> (Vec<f64>, f64, f64) {
        let r = traveling_wave_residual(model, u, c);
        let res = weighted_norm(h, &r);
        let p = phase(u);
        (r, res, (res * res + p * p).sqrt())
    };

    let (mut r, mut res, mut total) = merit(&u, c);
    let mut iterations = 0;
    while res > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoPulse {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let du = field_derivative(&spectral, &u);
        if du.norm() < 1e-8 * guess_d_norm {
            return Err(Error::NoPulse {
                iterations,
                residual: res,
            });
        }
        let lin = linearization(model, &u, c);
        let mut jac = Mat::<f64>::zeros(len + 1, len + 1);
        jac.as_mut().submatrix_mut(0, 0, len, len).copy_from(lin.as_ref());
        for i in 0..len {
            jac[(i, len)] = du.as_slice()[i];
            jac[(len, i)] = h * guess_d.as_slice()[i];
        }
        let rhs = Mat::from_fn(len + 1, 1, |i, _| if i < len { -r[i] } else { -phase(&u) });
        let step = jac.partial_piv_lu().solve(&rhs);
        if !all_finite(&step) {
            return Err(Error::DegeneratePulse(format!(
                "singular Newton system at iteration {iterations}"
            )));
        }
        let mut lambda = 1.0;
        loop {
            let mut trial = u.clone();
            for (i, v) in trial.as_mut_slice().iter_mut().enumerate() {
                *v += lambda * step[(i, 0)];
            }
            let tc = c + lambda * step[(len, 0)];
            let (tr, tres, ttotal) = merit(&trial, tc);
            if ttotal.is_finite() && (ttotal < total || lambda < 1.0 / 64.0) {
                u = trial;
                c = tc;
                r = tr;
                res = tres;
                total = ttotal;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            return Err(Error::NoPulse {
                iterations,
                residual: res,
            });
        }
    }
    let derivative = field_derivative(&spectral, &u);
    if derivative.norm() < 1e-8 * guess_d_norm {
        return Err(Error::NoPulse {
            iterations,
            residual: res,
        });
    }
    u.t = 0.0;
    let (adjoint, adjoint_residual, diagnostics) =
        adjoint_and_diagnostics(model, &u, c, &derivative, opts)?;
    Ok(PulseSolution {
        profile: u,
        speed: c,
        derivative,
        adjoint,
        residual: res,
        adjoint_residual,
        iterations,
        diagnostics,
    })
}

/// Trigonometric interpolation of `u` onto `target` (same length `L`).
pub fn resample(u: &FieldState, target: Grid1D) -> Result<FieldState> {
    let src = u.grid();
    if src.length_units() != target.length_units() {
        return Err(invalid("resampling requires equal domain lengths"));
    }
    let (n, m) = (src.points(), target.points());
    let s_src = Spectral::new(src);
    let s_dst = Spectral::new(target);
    let mut comps = Vec::with_capacity(u.components());
    for c in 0..u.components() {
        let spec = s_src.forward(u.component(c));
        let mut out = vec![num_complex::Complex64::new(0.0, 0.0); m];
        let keep = n.min(m) / 2;
        let scale = m as f64 / n as f64;
        for j in 0..keep {
            out[j] = spec[j] * scale;
            if j > 0 {
                out[m - j] = spec[n - j] * scale;
            }
        }
        // split the source Nyquist mode symmetrically when refining
        if m > n {
            let ny = spec[n / 2] * (0.5 * scale);
            out[n / 2] = ny;
            out[m - n / 2] = ny;
        } else if m < n {
            out[m / 2] = num_complex::Complex64::new((spec[m / 2] + spec[n - m / 2]).re * 0.5 * scale, 0.0);
        } else {
            out[m / 2] = spec[n / 2];
        }
        comps.push(s_dst.inverse_real(out));
    }
    let mut f = FieldState::from_components(target, comps)?;
    f.t = u.t;
    Ok(f)
}

/// Initial condition for an excitable medium: a one-sided stimulus at `x = 2`
/// with a refractory region behind it.
pub fn stimulus(grid: Grid1D, components: usize) -> FieldState {
    FieldState::from_fn(grid, components, |c, x| match c {
        0 => {
            if (x - 2.0).abs() < 0.5 {
                1.0
            } else {
                0.0
            }
        }
        1
            if x < 1.4 => {
                0.3
            }
        _ => 0.0,
    })
}

/// Develops a pulse from [`stimulus`] by direct simulation and polishes it with
/// [`find_pulse`]; the profile is recentred so its maximum sits near `L/2`.
pub fn develop_pulse(model: &ModelSpec, grid: Grid1D, settle: f64, opts: &PulseOptions) -> Result<PulseSolution> {
    let dt = 0.01;
    let mut evolver = Evolver::new(model, grid, dt)?;
    let mut state = stimulus(grid, model.components());
    let steps = crate::evolve::step_count(settle, dt)?;
    evolver.run(&mut state, steps)?;
    let peak0 = peak_position(&state);
    let probe = 10.0;
    evolver.run(&mut state, crate::evolve::step_count(probe, dt)?)?;
    let peak1 = peak_position(&state);
    let l = grid.length();
    let mut travel = peak1 - peak0;
    travel -= l * (travel / l).round();
    let speed = travel / probe;
    let centre = argmax(state.component(0));
    let shift = (grid.points() / 2) as isize - centre as isize;
    let mut guess = state.shifted(shift);
    guess.t = 0.0;
    find_pulse(model, &guess, speed, opts)
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
        .0
}

fn peak_position(u: &FieldState) -> f64 {
    let v = u.component(0);
    let n = v.len();
    let i = argmax(v);
    let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    let denom = a - 2.0 * b + c;
    let off = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    (i as f64 + off) * u.grid().spacing()
}
