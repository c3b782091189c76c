use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid on `[0, L)` with `L` a whole number of noise periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    length: u32,
    points: usize,
}

impl Grid1D {
    pub fn new(length: u32, points: usize) -> Result<Self> {
        if length == 0 {
            return Err(invalid("grid length must be a positive integer"));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(invalid(format!(
                "grid point count must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length as f64
    }

    pub fn length_units(&self) -> u32 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length as f64 / self.points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    /// Grid points per unit length, when the unit noise period is resolved
    /// by a whole number of points.
    pub fn points_per_period(&self) -> Option<usize> {
        self.points.is_multiple_of(self.length as usize).then(|| self.points / self.length as usize)
    }

    /// Angular wavenumber of DFT bin `j` (signed, Nyquist bin reported positive).
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points;
        let signed = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * std::f64::consts::PI * signed / self.length as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(0, 64).is_err());
        assert!(Grid1D::new(4, 2).is_err());
        assert!(Grid1D::new(4, 96).is_err());
        let g = Grid1D::new(16, 1024).unwrap();
        assert_eq!(g.spacing(), 1.0 / 64.0);
        assert_eq!(g.points_per_period(), Some(64));
        assert_eq!(Grid1D::new(20, 1024).unwrap().points_per_period(), None);
    }
}
