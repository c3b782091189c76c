//! Stationary Fokker–Planck density and analytic Lyapunov exponents of the reduced SDE.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::reduction::coefficients::ReducedModel;
use crate::spectral::{derivative_matrix, Spectral};

pub const NULLSPACE_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_POINTS: usize = 256;

/// Dense spectral second-derivative matrix on a periodic grid, row-major.
pub fn second_derivative_matrix(grid: Grid1D) -> Vec<f64> {
    let n = grid.points();
    let l = grid.length();
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / l).powi(2);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let m = i as isize - j as isize;
            d[i * n + j] = if m == 0 {
                if n.is_multiple_of(2) {
                    -PI * PI / (3.0 * h * h) - 1.0 / 6.0
                } else {
                    -PI * PI / (3.0 * h * h) + 1.0 / 12.0
                }
            } else {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let s = (0.5 * m as f64 * h).sin();
                if n.is_multiple_of(2) {
                    -sign / (2.0 * s * s)
                } else {
                    -sign * (0.5 * m as f64 * h).cos() / (2.0 * s * s)
                }
            };
            d[i * n + j] *= scale;
        }
    }
    d
}

fn check_points(points: usize) -> Result<Grid1D> {
    if points < 8 {
        return Err(invalid("density grid needs at least 8 points"));
    }
    Grid1D::new(1, points)
}

/// Grid samples of the diffusion `B = Σ𝔟ₖ²` and Itô drift `c + σ²𝔞`.
fn coefficients_on(model: &ReducedModel, sigma: f64, grid: Grid1D) -> (Vec<f64>, Vec<f64>) {
    let diffusion = model.diffusion_series();
    let xs = grid.coordinates();
    let b = xs.iter().map(|&x| diffusion.eval(x)).collect();
    let f = xs
        .iter()
        .map(|&x| model.speed + sigma * sigma * model.a.eval(x))
        .collect();
    (b, f)
}

/// Collocation matrix of the adjoint generator `½σ²∂ₓₓ(B·) − ∂ₓ((c + σ²𝔞)·)`.
pub fn adjoint_generator_matrix(model: &ReducedModel, sigma: f64, grid: Grid1D) -> Mat<f64> {
    let n = grid.points();
    let d1 = derivative_matrix(grid);
    let d2 = second_derivative_matrix(grid);
    let (b, f) = coefficients_on(model, sigma, grid);
    let s2 = 0.5 * sigma * sigma;
    Mat::from_fn(n, n, |i, j| s2 * d2[i * n + j] * b[j] - d1[i * n + j] * f[j])
}

/// Collocation matrix of the generator `(c + σ²𝔞)∂ₓ + ½σ²B∂ₓₓ`.
pub fn generator_matrix(model: &ReducedModel, sigma: f64, grid: Grid1D) -> Mat<f64> {
    let n = grid.points();
    let d1 = derivative_matrix(grid);
    let d2 = second_derivative_matrix(grid);
    let (b, f) = coefficients_on(model, sigma, grid);
    let s2 = 0.5 * sigma * sigma;
    Mat::from_fn(n, n, |i, j| f[i] * d1[i * n + j] + s2 * b[i] * d2[i * n + j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDensity {
    pub sigma: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Trapezoidal integral after normalization.
    pub integral: f64,
    /// Discrete L² norm of the collocated stationary equation.
    pub residual: f64,
    /// Smallest two singular values of the collocation matrix, relative to the largest.
    pub singular_ratio: (f64, f64),
}

impl StationaryDensity {
    pub fn points(&self) -> usize {
        self.p.len()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.p.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.p.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal `∫ f p`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.spacing() * self.x.iter().zip(&self.p).map(|(&x, &p)| f(x) * p).sum::<f64>()
    }

    /// Spectral interpolation of the density's CDF at `x ∈ [0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.p.len();
        let spectral = Spectral::new(Grid1D::new(1, n).expect("grid"));
        let spec = spectral.forward(&self.p);
        let mut acc = x;
        for (j, c) in spec.iter().enumerate().skip(1).take((n - 1) / 2) {
            let k = 2.0 * PI * j as f64;
            let (re, im) = (c.re / n as f64, c.im / n as f64);
            // 2 Re(c e^{ikx}) integrated from 0 to x
            acc += 2.0 * (re * (k * x).sin() + im * ((k * x).cos() - 1.0)) / k;
        }
        acc
    }
}

/// Stationary density as the normalized nullvector of the collocated adjoint generator.
pub fn stationary_density(model: &ReducedModel, sigma: f64, points: usize) -> Result<StationaryDensity> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma must be positive"));
    }
    let grid = check_points(points)?;
    let diffusion = model.diffusion_series();
    let bmin = (0..points)
        .map(|i| diffusion.eval(i as f64 / points as f64))
        .fold(f64::INFINITY, f64::min);
    if !(bmin > 0.0) {
        return Err(Error::Nondegeneracy(format!(
            "diffusion Σ𝔟ₖ² is not positive (min {bmin:e})"
        )));
    }
    let m = adjoint_generator_matrix(model, sigma, grid);
    let svd = m
        .svd()
        .map_err(|e| Error::LinearAlgebra(format!("singular value decomposition failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let top = s[0];
    let threshold = NULLSPACE_THRESHOLD * top;
    let null = (0..points).filter(|&i| s[i] <= threshold).count();
    if null != 1 {
        return Err(Error::DegenerateGenerator(format!(
            "nullspace dimension {null} at threshold {threshold:e}"
        )));
    }
    let v = svd.V();
    let mut p: Vec<f64> = (0..points).map(|i| v[(i, points - 1)]).collect();
    let h = grid.spacing();
    let total: f64 = h * p.iter().sum::<f64>();
    if total == 0.0 {
        return Err(Error::DegenerateGenerator("nullvector has zero mean".into()));
    }
    p.iter_mut().for_each(|x| *x /= total);
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::PositivityFailure { min });
    }
    let pm = Mat::from_fn(points, 1, |i, _| p[i]);
    let r = &m * &pm;
    let residual = (h * (0..points).map(|i| r[(i, 0)] * r[(i, 0)]).sum::<f64>()).sqrt();
    Ok(StationaryDensity {
        sigma,
        x: grid.coordinates(),
        integral: h * p.iter().sum::<f64>(),
        p,
        residual,
        singular_ratio: (s[points - 1] / top, s[points - 2] / top),
    })
}

/// Stationary density from the constant-flux formula `½σ²(Bp)' − (c + σ²𝔞)p = −J`:
/// `B(x)p(x) ∝ ∫ₓ^{x+1} exp(M(x) − M(s)) ds` with `M' = 2(c + σ²𝔞)/(σ²B)`, by composite Simpson on `points` cells.
pub fn flux_density(model: &ReducedModel, sigma: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 8 {
        return Err(invalid("flux quadrature needs at least 8 cells"));
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    let diffusion = model.diffusion_series();
    let s2 = sigma * sigma;
    let mu = |x: f64| 2.0 * (model.speed + s2 * model.a.eval(x)) / (s2 * diffusion.eval(x));
    let h = 1.0 / points as f64;
    // M at half-cell nodes on [0, 2]
    let half = 2 * points;
    let mut m = vec![0.0; 2 * half + 1];
    for i in 0..2 * half {
        let a = i as f64 * 0.5 * h;
        m[i + 1] = m[i] + h / 12.0 * (mu(a) + 4.0 * mu(a + 0.25 * h) + mu(a + 0.5 * h));
    }
    let xs: Vec<f64> = (0..points).map(|i| i as f64 * h).collect();
    let mut q: Vec<f64> = (0..points)
        .map(|i| {
            let base = 2 * i;
            let f = |j: usize| (m[base] - m[base + j]).exp();
            let mut acc = 0.0;
            for c in 0..points {
                acc += f(2 * c) + 4.0 * f(2 * c + 1) + f(2 * c + 2);
            }
            acc * h / 6.0
        })
        .collect();
    for (qi, &x) in q.iter_mut().zip(&xs) {
        *qi /= diffusion.eval(x);
    }
    let total: f64 = h * q.iter().sum::<f64>();
    Ok(xs.into_iter().zip(q.into_iter().map(|v| v / total)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPair {
    /// `σ²∫(𝔞' − ½Σ𝔟ₖ'²) dμ`
    pub lambda_a: f64,
    /// `−½σ²Σ∫|∂ₓ(𝔟ₖp)|²/p`
    pub lambda_b: f64,
}

impl LyapunovPair {
    pub fn difference(&self) -> f64 {
        self.lambda_a - self.lambda_b
    }

    pub fn relative_difference(&self) -> f64 {
        self.difference().abs() / self.lambda_b.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn lyapunov_analytic(model: &ReducedModel, density: &StationaryDensity) -> Result<LyapunovPair> {
    let n = density.points();
    let grid = check_points(n)?;
    let sigma = density.sigma;
    let s2 = sigma * sigma;
    let h = grid.spacing();
    let spectral = Spectral::new(grid);
    let dp = spectral.derivative(&density.p);
    let energy = model.derivative_energy_series();
    let lambda_a = s2 * density.expectation(|x| model.a_prime.eval(x) - 0.5 * energy.eval(x));
    let mut acc = 0.0;
    for k in model.active_modes() {
        let (b, bp) = (model.b(k), model.b_prime(k));
        for i in 0..n {
            let x = density.x[i];
            let flux = bp.eval(x) * density.p[i] + b.eval(x) * dp[i];
            acc += flux * flux / density.p[i];
        }
    }
    Ok(LyapunovPair {
        lambda_a,
        lambda_b: -0.5 * s2 * h * acc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpectrum {
    /// `−Re` of the leading nonzero eigenvalue.
    pub gap: f64,
    /// Eigenvalues sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Mixing-rate surrogate from the collocated generator spectrum.
pub fn generator_gap(model: &ReducedModel, sigma: f64, points: usize) -> Result<GeneratorSpectrum> {
    let grid = check_points(points)?;
    let l = generator_matrix(model, sigma, grid);
    let eig = l
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("eigenvalue solver failed: {e:?}")))?;
    let mut ev: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let scale = ev.iter().map(|z| z.0.hypot(z.1)).fold(0.0, f64::max).max(1.0);
    let zero = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.hypot(a.1 .1).total_cmp(&b.1 .0.hypot(b.1 .1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let zmod = ev[zero].0.hypot(ev[zero].1);
    if zmod > 1e-9 * scale {
        return Err(Error::DiscretizationInconsistency(format!(
            "smallest generator eigenvalue has modulus {zmod:e}"
        )));
    }
    let zero_eig = ev.remove(zero);
    let gap = -ev.first().map_or(f64::NAN, |z| z.0);
    ev.insert(0, zero_eig);
    Ok(GeneratorSpectrum { gap, eigenvalues: ev })
}
