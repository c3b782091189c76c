//! Fourier helpers on a periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid1D;

/// Forward/inverse FFT pair for one grid size.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Unnormalized DFT `û_j = Σ_i u_i e^{-2πi ij/N}`.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/N` factor; returns the real part.
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spec);
        let scale = 1.0 / self.grid.points() as f64;
        spec.iter().map(|z| z.re * scale).collect()
    }

    pub fn inverse_complex(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        self.inverse.process(&mut spec);
        let scale = 1.0 / self.grid.points() as f64;
        spec.iter_mut().for_each(|z| *z *= scale);
        spec
    }

    /// Spectral derivative; the Nyquist mode is dropped.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.points();
        let mut spec = self.forward(u);
        for (j, z) in spec.iter_mut().enumerate() {
            if j == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, self.grid.wavenumber(j));
            }
        }
        self.inverse_real(spec)
    }

    /// Continuous right translation `u(· - s)` by trigonometric interpolation.
    pub fn translate(&self, u: &[f64], s: f64) -> Vec<f64> {
        let n = self.grid.points();
        let mut spec = self.forward(u);
        for (j, z) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            if j == n / 2 {
                *z *= (k * s).cos();
            } else {
                *z *= Complex64::from_polar(1.0, -k * s);
            }
        }
        self.inverse_real(spec)
    }
}

/// Dense spectral first-derivative matrix, row-major.
pub fn derivative_matrix(grid: Grid1D) -> Vec<f64> {
    let n = grid.points();
    let l = grid.length();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let m = i as isize - j as isize;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            d[i * n + j] = (PI / l) * sign / (PI * m as f64 / n as f64).tan();
        }
    }
    d
}

/// Symbol of the fourth-order central second-difference operator at angular wavenumber `k`.
pub fn laplacian_symbol(grid: Grid1D, k: f64) -> f64 {
    let h = grid.spacing();
    (-2.0 * (2.0 * k * h).cos() + 32.0 * (k * h).cos() - 30.0) / (12.0 * h * h)
}

/// Fourth-order periodic second difference.
pub fn laplacian(grid: Grid1D, u: &[f64], out: &mut [f64]) {
    let n = grid.points();
    let h = grid.spacing();
    let w = 1.0 / (12.0 * h * h);
    for i in 0..n {
        let m2 = u[(i + n - 2) % n];
        let m1 = u[(i + n - 1) % n];
        let p1 = u[(i + 1) % n];
        let p2 = u[(i + 2) % n];
        out[i] = w * (-m2 + 16.0 * m1 - 30.0 * u[i] + 16.0 * p1 - p2);
    }
}

/// Real-space circulant kernel: `out_i = Σ_m weights[m] u_{i - (start + m)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub start: isize,
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn identity(scale: f64) -> Self {
        Self {
            start: 0,
            weights: vec![scale],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Circulant kernel with even Fourier multiplier `symbol(k)`, truncated where
/// entries fall below `tol` relative to the largest.
pub fn circulant_kernel(spectral: &Spectral, symbol: impl Fn(f64) -> f64, tol: f64) -> Kernel {
    let grid = spectral.grid();
    let n = grid.points();
    let spec: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(symbol(grid.wavenumber(j)), 0.0))
        .collect();
    let full = spectral.inverse_real(spec);
    let peak = full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut half = 0usize;
    for m in 1..=n / 2 {
        if full[m].abs().max(full[n - m].abs()) > tol * peak {
            half = m;
        }
    }
    if 2 * half + 1 > n {
        let start = -((n / 2) as isize - 1);
        let weights = (0..n)
            .map(|m| full[(start + m as isize).rem_euclid(n as isize) as usize])
            .collect();
        return Kernel { start, weights };
    }
    let mut weights = Vec::with_capacity(2 * half + 1);
    for m in -(half as isize)..=(half as isize) {
        let idx = m.rem_euclid(n as isize) as usize;
        weights.push(0.5 * (full[idx] + full[(n - idx) % n]));
    }
    Kernel {
        start: -(half as isize),
        weights,
    }
}

/// Applies `kernel` with a fixed summation order.
pub fn apply_circulant(kernel: &Kernel, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let w = &kernel.weights;
    if w.len() == 1 && kernel.start == 0 {
        let s = w[0];
        for (o, v) in out.iter_mut().zip(u) {
            *o = s * v;
        }
        return;
    }
    // offsets reach from i - start - (len - 1) to i - start
    let lo = (kernel.start + w.len() as isize - 1).max(0) as usize;
    let hi = (n as isize + kernel.start).min(n as isize).max(0) as usize;
    if lo < hi {
        // weight-major sweep; each output still sums its terms in order m = 0, 1, ...
        let off = lo as isize - kernel.start;
        let dst = &mut out[lo..hi];
        dst.iter_mut().for_each(|o| *o = 0.0);
        for (m, &wm) in w.iter().enumerate() {
            let from = (off - m as isize) as usize;
            let src = &u[from..from + dst.len()];
            for (o, v) in dst.iter_mut().zip(src) {
                *o += wm * v;
            }
        }
        for i in (0..lo).chain(hi..n) {
            out[i] = wrapped(kernel, u, i);
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = wrapped(kernel, u, i);
        }
    }
}

#[inline]
fn wrapped(kernel: &Kernel, u: &[f64], i: usize) -> f64 {
    let n = u.len() as isize;
    let mut acc = 0.0;
    for (m, w) in kernel.weights.iter().enumerate() {
        let idx = (i as isize - kernel.start - m as isize).rem_euclid(n) as usize;
        acc += w * u[idx];
    }
    acc
}

/// Trapezoidal mean of `f` over a periodic grid of `n` points: `(1/n) Σ f_i`.
pub fn periodic_mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(4, 64).unwrap()
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid();
        let s = Spectral::new(g);
        let u: Vec<f64> = g.coordinates().iter().map(|x| (PI * x).sin()).collect();
        let du = s.derivative(&u);
        for (x, d) in g.coordinates().iter().zip(&du) {
            assert!((d - PI * (PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matrix_agrees_with_fft() {
        let g = grid();
        let s = Spectral::new(g);
        let n = g.points();
        let u: Vec<f64> = g.coordinates().iter().map(|x| (2.0 * (PI * x / 2.0).sin()).exp()).collect();
        let d = derivative_matrix(g);
        let du = s.derivative(&u);
        for i in 0..n {
            let row: f64 = (0..n).map(|j| d[i * n + j] * u[j]).sum();
            assert!((row - du[i]).abs() < 1e-10, "{row} vs {}", du[i]);
        }
    }

    #[test]
    fn translate_matches_grid_shift() {
        let g = grid();
        let s = Spectral::new(g);
        let u: Vec<f64> = g.coordinates().iter().map(|x| (PI * x / 2.0).cos().powi(3)).collect();
        let t = s.translate(&u, 3.0 * g.spacing());
        for i in 0..g.points() {
            assert!((t[(i + 3) % g.points()] - u[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_reproduces_laplacian() {
        let g = grid();
        let s = Spectral::new(g);
        let k = circulant_kernel(&s, |k| laplacian_symbol(g, k), 1e-14);
        assert_eq!(k.len(), 5);
        let u: Vec<f64> = g.coordinates().iter().map(|x| (PI * x).sin() + 0.3 * x.cos()).collect();
        let mut a = vec![0.0; g.points()];
        let mut b = vec![0.0; g.points()];
        apply_circulant(&k, &u, &mut a);
        laplacian(g, &u, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }
}
