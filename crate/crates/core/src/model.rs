//! Reaction–diffusion model definitions: `du = D ∂ₓₓu dt + f(u) dt + σ g(u) ∘ dW`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reaction term `f: ℝⁿ → ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Reaction {
    /// `f(u, v) = (u(u - a)(1 - u) - v, ε(u - γv))`.
    FitzHughNagumo { a: f64, epsilon: f64, gamma: f64 },
    /// `f(u) = M u`, row-major `M`.
    Linear { matrix: Vec<Vec<f64>> },
}

/// Noise shape `g(u) = g₀ + G u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseShape {
    pub offset: Vec<f64>,
    #[serde(default)]
    pub slope: Option<Vec<Vec<f64>>>,
}

impl NoiseShape {
    pub fn constant(offset: Vec<f64>) -> Self {
        Self {
            offset,
            slope: None,
        }
    }

    pub fn zero(components: usize) -> Self {
        Self::constant(vec![0.0; components])
    }

    pub fn affine(offset: Vec<f64>, slope: Vec<Vec<f64>>) -> Self {
        Self {
            offset,
            slope: Some(slope),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.offset.iter().all(|&v| v == 0.0)
            && self.slope.as_ref().is_none_or(|m| m.iter().flatten().all(|&v| v == 0.0))
    }

    pub fn is_constant(&self) -> bool {
        self.slope.as_ref().is_none_or(|m| m.iter().flatten().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhnParams {
    pub nu: f64,
    pub a: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            nu: 0.01,
            a: 0.1,
            epsilon: 0.01,
            gamma: 3.0,
        }
    }
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(invalid(format!("FitzHugh–Nagumo requires nu > 0, got {}", self.nu)));
        }
        if !(self.a > 0.0 && self.a < 0.5) {
            return Err(invalid(format!("FitzHugh–Nagumo requires 0 < a < 1/2, got {}", self.a)));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid(format!(
                "FitzHugh–Nagumo requires epsilon > 0, got {}",
                self.epsilon
            )));
        }
        if !self.gamma.is_finite() {
            return Err(invalid("FitzHugh–Nagumo gamma must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    diffusion: Vec<f64>,
    reaction: Reaction,
    noise_shape: NoiseShape,
}

impl ModelSpec {
    pub fn new(diffusion: Vec<f64>, reaction: Reaction, noise_shape: NoiseShape) -> Result<Self> {
        let n = diffusion.len();
        if n == 0 {
            return Err(invalid("model needs at least one component"));
        }
        if diffusion.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(invalid("diffusion coefficients must be finite and nonnegative"));
        }
        if diffusion.iter().all(|&d| d == 0.0) {
            return Err(invalid("at least one diffusion coefficient must be positive"));
        }
        match &reaction {
            Reaction::FitzHughNagumo { a, epsilon, gamma } => {
                if n != 2 {
                    return Err(invalid("FitzHugh–Nagumo has two components"));
                }
                FhnParams {
                    nu: diffusion[0],
                    a: *a,
                    epsilon: *epsilon,
                    gamma: *gamma,
                }
                .validate()?;
            }
            Reaction::Linear { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(invalid("linear reaction matrix must be n x n"));
                }
            }
        }
        if noise_shape.offset.len() != n {
            return Err(invalid("noise shape offset must have n entries"));
        }
        if let Some(m) = &noise_shape.slope {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(invalid("noise shape slope must be n x n"));
            }
        }
        Ok(Self {
            diffusion,
            reaction,
            noise_shape,
        })
    }

    /// FitzHugh–Nagumo with diffusion only in the fast component.
    pub fn fitzhugh_nagumo(p: FhnParams, noise_shape: NoiseShape) -> Result<Self> {
        Self::new(
            vec![p.nu, 0.0],
            Reaction::FitzHughNagumo {
                a: p.a,
                epsilon: p.epsilon,
                gamma: p.gamma,
            },
            noise_shape,
        )
    }

    pub fn components(&self) -> usize {
        self.diffusion.len()
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn reaction_spec(&self) -> &Reaction {
        &self.reaction
    }

    pub fn noise_shape(&self) -> &NoiseShape {
        &self.noise_shape
    }

    pub fn with_noise_shape(&self, noise_shape: NoiseShape) -> Result<Self> {
        Self::new(self.diffusion.clone(), self.reaction.clone(), noise_shape)
    }

    #[inline]
    pub fn reaction(&self, u: &[f64], out: &mut [f64]) {
        match &self.reaction {
            Reaction::FitzHughNagumo { a, epsilon, gamma } => {
                let (x, y) = (u[0], u[1]);
                out[0] = x * (x - a) * (1.0 - x) - y;
                out[1] = epsilon * (x - gamma * y);
            }
            Reaction::Linear { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o = row.iter().zip(u).map(|(m, v)| m * v).sum();
                }
            }
        }
    }

    /// Row-major `n x n` Jacobian `f'(u)`.
    #[inline]
    pub fn reaction_jacobian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.components();
        match &self.reaction {
            Reaction::FitzHughNagumo { a, epsilon, gamma } => {
                let x = u[0];
                out[0] = -3.0 * x * x + 2.0 * (1.0 + a) * x - a;
                out[1] = -1.0;
                out[2] = *epsilon;
                out[3] = -epsilon * gamma;
            }
            Reaction::Linear { matrix } => {
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = matrix[i][j];
                    }
                }
            }
        }
    }

    #[inline]
    pub fn noise(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.noise_shape.offset);
        if let Some(m) = &self.noise_shape.slope {
            for (o, row) in out.iter_mut().zip(m) {
                *o += row.iter().zip(u).map(|(s, v)| s * v).sum::<f64>();
            }
        }
    }

    /// `g'(u) g(u)`, the Itô–Stratonovich correction direction.
    #[inline]
    pub fn noise_drift(&self, u: &[f64], out: &mut [f64]) {
        match &self.noise_shape.slope {
            None => out.iter_mut().for_each(|o| *o = 0.0),
            Some(m) => {
                let mut g = [0.0; 8];
                let n = self.components();
                let g = &mut g[..n];
                self.noise(u, g);
                for (o, row) in out.iter_mut().zip(m) {
                    *o = row.iter().zip(g.iter()).map(|(s, v)| s * v).sum();
                }
            }
        }
    }

    /// Spatially homogeneous state solving `f(u) = 0`, when known in closed form.
    pub fn rest_state(&self) -> Vec<f64> {
        vec![0.0; self.components()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fhn() -> ModelSpec {
        ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0])).unwrap()
    }

    #[test]
    fn fhn_jacobian_matches_finite_differences() {
        let m = fhn();
        let u = [0.37, 0.05];
        let mut jac = [0.0; 4];
        m.reaction_jacobian(&u, &mut jac);
        let h = 1e-6;
        for j in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
            m.reaction(&up, &mut fp);
            m.reaction(&dn, &mut fm);
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[i * 2 + j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        let bad = FhnParams {
            a: 0.6,
            ..FhnParams::default()
        };
        assert!(ModelSpec::fitzhugh_nagumo(bad, NoiseShape::zero(2)).is_err());
        assert!(ModelSpec::new(
            vec![0.0, 0.0],
            Reaction::Linear {
                matrix: vec![vec![-1.0, 0.0], vec![0.0, -1.0]]
            },
            NoiseShape::zero(2)
        )
        .is_err());
    }

    #[test]
    fn affine_noise_drift() {
        let m = ModelSpec::fitzhugh_nagumo(
            FhnParams::default(),
            NoiseShape::affine(vec![1.0, 0.0], vec![vec![0.5, 0.0], vec![0.0, 0.0]]),
        )
        .unwrap();
        let mut d = [0.0; 2];
        m.noise_drift(&[0.2, 0.0], &mut d);
        assert!((d[0] - 0.5 * 1.1).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
    }
}
