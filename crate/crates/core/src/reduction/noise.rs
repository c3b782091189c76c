//! Spatially periodic noise `W(t, x) = Σ_k α_k e_k(x) β_k(t)`.

use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Orthonormal basis of `L²(𝕋)`: `1`, `√2 cos(2πkx)` for `k > 0`, `√2 sin(2π|k|x)` for `k < 0`.
#[inline]
pub fn basis(k: i32, x: f64) -> f64 {
    let y = x - x.floor();
    match k.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => SQRT_2 * (TAU * k as f64 * y).cos(),
        std::cmp::Ordering::Less => SQRT_2 * (TAU * (-k) as f64 * y).sin(),
    }
}

/// Noise coefficients `α_k`, `|k| ≤ K`, and amplitude `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    truncation: usize,
    /// `α_k` ordered `k = -K, ..., K`.
    alpha: Vec<f64>,
    sigma: f64,
}

impl NoiseSpec {
    pub fn new(truncation: usize, alpha: Vec<f64>, sigma: f64) -> Result<Self> {
        if truncation == 0 {
            return Err(invalid("noise truncation K must be at least 1"));
        }
        if alpha.len() != 2 * truncation + 1 {
            return Err(invalid(format!(
                "noise table needs {} coefficients for K = {truncation}, got {}",
                2 * truncation + 1,
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(invalid("noise coefficients must be finite"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("noise amplitude must be finite and nonnegative, got {sigma}")));
        }
        Ok(Self {
            truncation,
            alpha,
            sigma,
        })
    }

    /// `α_{±k} = coeff(k)`.
    pub fn homogeneous(truncation: usize, sigma: f64, coeff: impl Fn(usize) -> f64) -> Result<Self> {
        let alpha = (-(truncation as i32)..=truncation as i32)
            .map(|k| coeff(k.unsigned_abs() as usize))
            .collect();
        Self::new(truncation, alpha, sigma)
    }

    /// Build from a closure over signed `k`.
    pub fn from_fn(truncation: usize, sigma: f64, coeff: impl Fn(i32) -> f64) -> Result<Self> {
        let alpha = (-(truncation as i32)..=truncation as i32).map(coeff).collect();
        Self::new(truncation, alpha, sigma)
    }

    /// Default table: `α₀ = 0.05`, `α_{±k} = 0.15 / k²`.
    pub fn default_table(truncation: usize, sigma: f64) -> Result<Self> {
        Self::homogeneous(truncation, sigma, |k| if k == 0 { 0.05 } else { 0.15 / (k * k) as f64 })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.truncation, self.alpha.clone(), sigma)
    }

    pub fn alpha(&self, k: i32) -> f64 {
        let kk = self.truncation as i32;
        if k.abs() > kk {
            0.0
        } else {
            self.alpha[(k + kk) as usize]
        }
    }

    /// Coefficient table ordered `k = -K..=K`.
    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let kk = self.truncation as i32;
        -kk..=kk
    }

    /// Number of driving Brownian motions, `2K + 1`.
    pub fn mode_count(&self) -> usize {
        2 * self.truncation + 1
    }

    /// `α_k = α_{-k}` for every `k`.
    pub fn is_homogeneous(&self) -> bool {
        (1..=self.truncation as i32).all(|k| self.alpha(k) == self.alpha(-k))
    }

    /// `S(x) = Σ_k α_k² e_k(x)²`.
    pub fn variance_profile(&self, x: f64) -> f64 {
        self.modes()
            .map(|k| {
                let e = basis(k, x);
                self.alpha(k) * self.alpha(k) * e * e
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let n = 256;
        for a in -3..=3 {
            for b in -3..=3 {
                let ip: f64 = (0..n)
                    .map(|i| {
                        let x = i as f64 / n as f64;
                        basis(a, x) * basis(b, x)
                    })
                    .sum::<f64>()
                    / n as f64;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12, "({a},{b}) -> {ip}");
            }
        }
    }

    #[test]
    fn table_indexing_and_homogeneity() {
        let n = NoiseSpec::from_fn(2, 0.1, |k| k as f64).unwrap();
        assert_eq!(n.alpha(-2), -2.0);
        assert_eq!(n.alpha(1), 1.0);
        assert_eq!(n.alpha(5), 0.0);
        assert!(!n.is_homogeneous());
        assert!(NoiseSpec::default_table(4, 0.1).unwrap().is_homogeneous());
        assert!(NoiseSpec::new(2, vec![0.0; 4], 0.1).is_err());
    }

    #[test]
    fn homogeneous_variance_is_flat() {
        let n = NoiseSpec::default_table(5, 1.0).unwrap();
        let s0 = n.variance_profile(0.0);
        for i in 1..50 {
            assert!((n.variance_profile(i as f64 / 50.0) - s0).abs() < 1e-13);
        }
    }
}
