use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid1D;

/// An `n`-component real field sampled on a [`Grid1D`], stored component-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    grid: Grid1D,
    components: usize,
    data: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(grid: Grid1D, components: usize) -> Self {
        Self {
            grid,
            components,
            data: vec![0.0; components * grid.points()],
            t: 0.0,
        }
    }

    pub fn from_components(grid: Grid1D, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(invalid("field needs at least one component"));
        }
        let n = grid.points();
        if comps.iter().any(|c| c.len() != n) {
            return Err(invalid("component length does not match grid"));
        }
        let components = comps.len();
        let data: Vec<f64> = comps.into_iter().flatten().collect();
        Ok(Self {
            grid,
            components,
            data,
            t: 0.0,
        })
    }

    pub fn from_flat(grid: Grid1D, components: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != components * grid.points() || components == 0 {
            return Err(invalid("flat data length does not match grid and component count"));
        }
        Ok(Self {
            grid,
            components,
            data,
            t: 0.0,
        })
    }

    /// Samples `profile(x)` on the grid for each component.
    pub fn from_fn(grid: Grid1D, components: usize, profile: impl Fn(usize, f64) -> f64) -> Self {
        let mut s = Self::zeros(grid, components);
        for c in 0..components {
            for i in 0..grid.points() {
                s.data[c * grid.points() + i] = profile(c, grid.x(i));
            }
        }
        s
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.points();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.points();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Values of all components at grid point `i`.
    pub fn point(&self, i: usize, out: &mut [f64]) {
        let n = self.grid.points();
        for (c, o) in out.iter_mut().enumerate().take(self.components) {
            *o = self.data[c * n + i];
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Discrete L² pairing `h Σ_i Σ_c a_c(x_i) b_c(x_i)`.
    pub fn dot(&self, other: &FieldState) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.grid.spacing() * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &FieldState) -> f64 {
        let h = self.grid.spacing();
        (h * self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
        .sqrt()
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &FieldState) -> FieldState {
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += s * b;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> FieldState {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Right translation by `shift` grid points: `(T f)(x_i) = f(x_{i - shift})`.
    pub fn shifted(&self, shift: isize) -> FieldState {
        let n = self.grid.points();
        let s = shift.rem_euclid(n as isize) as usize;
        let mut out = self.clone();
        for c in 0..self.components {
            let src = self.component(c);
            let dst = out.component_mut(c);
            for i in 0..n {
                dst[(i + s) % n] = src[i];
            }
        }
        out
    }

    pub fn same_shape(&self, other: &FieldState) -> bool {
        self.grid == other.grid && self.components == other.components
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_is_right_translation() {
        let g = Grid1D::new(1, 8).unwrap();
        let f = FieldState::from_fn(g, 1, |_, x| x);
        let s = f.shifted(2);
        assert_eq!(s.component(0)[2], f.component(0)[0]);
        assert_eq!(s.component(0)[0], f.component(0)[6]);
        assert_eq!(f.shifted(-3).shifted(3), f);
    }

    #[test]
    fn pairing_uses_grid_weight() {
        let g = Grid1D::new(2, 8).unwrap();
        let one = FieldState::from_fn(g, 2, |_, _| 1.0);
        assert!((one.dot(&one) - 4.0).abs() < 1e-15);
    }
}
