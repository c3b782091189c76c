//! Finite trigonometric series of period 1.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// `f(x) = mean + Σ_{n=1}^{M} cos[n-1]·cos(2πnx) + sin[n-1]·sin(2πnx)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSeries {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Table of `cos(2πnx), sin(2πnx)` for `n = 0..=order`.
#[derive(Debug, Clone)]
pub struct Harmonics {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Harmonics {
    pub fn new(order: usize) -> Self {
        Self {
            cos: vec![1.0; order + 1],
            sin: vec![0.0; order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.cos.len() - 1
    }

    /// Fills the table at `x`, reducing the argument to one period first.
    pub fn fill(&mut self, x: f64) {
        let theta = TAU * (x - x.floor());
        let (s1, c1) = theta.sin_cos();
        self.cos[0] = 1.0;
        self.sin[0] = 0.0;
        for n in 1..self.cos.len() {
            if n == 1 {
                self.cos[1] = c1;
                self.sin[1] = s1;
            } else if n % 16 == 0 {
                let (s, c) = (n as f64 * theta).sin_cos();
                self.cos[n] = c;
                self.sin[n] = s;
            } else {
                let (cp, sp) = (self.cos[n - 1], self.sin[n - 1]);
                self.cos[n] = cp * c1 - sp * s1;
                self.sin[n] = sp * c1 + cp * s1;
            }
        }
    }
}

impl TrigSeries {
    pub fn new(mean: f64, mut cos: Vec<f64>, mut sin: Vec<f64>) -> Self {
        let m = cos.len().max(sin.len());
        cos.resize(m, 0.0);
        sin.resize(m, 0.0);
        Self { mean, cos, sin }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, vec![], vec![])
    }

    /// `a·cos(2πnx) + b·sin(2πnx)`.
    pub fn harmonic(n: usize, a: f64, b: f64) -> Self {
        if n == 0 {
            return Self::constant(a);
        }
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        cos[n - 1] = a;
        sin[n - 1] = b;
        Self { mean: 0.0, cos, sin }
    }

    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn cos_coeff(&self, n: usize) -> f64 {
        if n == 0 {
            self.mean
        } else {
            self.cos.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn sin_coeff(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.sin.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut h = Harmonics::new(self.order());
        h.fill(x);
        self.eval_with(&h)
    }

    /// Evaluation from a precomputed table of order at least [`Self::order`].
    #[inline]
    pub fn eval_with(&self, h: &Harmonics) -> f64 {
        let mut acc = self.mean;
        for n in 0..self.cos.len() {
            acc += self.cos[n] * h.cos[n + 1] + self.sin[n] * h.sin[n + 1];
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let m = self.order();
        let mut cos = vec![0.0; m];
        let mut sin = vec![0.0; m];
        for n in 0..m {
            let w = TAU * (n + 1) as f64;
            cos[n] = w * self.sin[n];
            sin[n] = -w * self.cos[n];
        }
        Self { mean: 0.0, cos, sin }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mean: s * self.mean,
            cos: self.cos.iter().map(|v| s * v).collect(),
            sin: self.sin.iter().map(|v| s * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let m = self.order().max(other.order());
        let mut out = Self::new(self.mean + other.mean, vec![0.0; m], vec![0.0; m]);
        for n in 0..m {
            out.cos[n] = self.cos.get(n).copied().unwrap_or(0.0) + other.cos.get(n).copied().unwrap_or(0.0);
            out.sin[n] = self.sin.get(n).copied().unwrap_or(0.0) + other.sin.get(n).copied().unwrap_or(0.0);
        }
        out
    }

    /// Exact product by product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.order() + other.order();
        let mut c = vec![0.0; m + 1];
        let mut s = vec![0.0; m + 1];
        let terms = |t: &Self| -> Vec<(usize, f64, f64)> {
            let mut v = vec![(0usize, t.mean, 0.0)];
            for n in 0..t.order() {
                v.push((n + 1, t.cos[n], t.sin[n]));
            }
            v
        };
        let (ta, tb) = (terms(self), terms(other));
        for &(p, ap, bp) in &ta {
            for &(q, aq, bq) in &tb {
                if ap == 0.0 && bp == 0.0 || aq == 0.0 && bq == 0.0 {
                    continue;
                }
                let sum = p + q;
                let (diff, sign) = if p >= q { (p - q, 1.0) } else { (q - p, -1.0) };
                // cos p cos q = ½[cos(p−q) + cos(p+q)]
                c[diff] += 0.5 * ap * aq;
                c[sum] += 0.5 * ap * aq;
                // sin p sin q = ½[cos(p−q) − cos(p+q)]
                c[diff] += 0.5 * bp * bq;
                c[sum] -= 0.5 * bp * bq;
                // sin p cos q = ½[sin(p+q) + sin(p−q)]
                s[sum] += 0.5 * bp * aq;
                s[diff] += 0.5 * sign * bp * aq;
                // cos p sin q = ½[sin(p+q) − sin(p−q)]
                s[sum] += 0.5 * ap * bq;
                s[diff] -= 0.5 * sign * ap * bq;
            }
        }
        Self::new(c[0], c[1..].to_vec(), s[1..].to_vec()).trimmed()
    }

    /// Drops trailing zero harmonics.
    pub fn trimmed(mut self) -> Self {
        while self.cos.last() == Some(&0.0) && self.sin.last() == Some(&0.0) {
            self.cos.pop();
            self.sin.pop();
        }
        self
    }

    /// Largest absolute harmonic coefficient (excluding the mean).
    pub fn max_harmonic(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `∫₀¹ f(x)² dx`.
    pub fn mean_square(&self) -> f64 {
        self.mean * self.mean
            + 0.5
                * self
                    .cos
                    .iter()
                    .chain(&self.sin)
                    .map(|v| v * v)
                    .sum::<f64>()
    }

    /// Maximum of `|f|` sampled on `samples` points of one period.
    pub fn sup_norm(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.eval(i as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series() -> impl Strategy<Value = TrigSeries> {
        (
            -2.0..2.0f64,
            prop::collection::vec(-1.0..1.0f64, 0..6),
            prop::collection::vec(-1.0..1.0f64, 0..6),
        )
            .prop_map(|(m, c, s)| TrigSeries::new(m, c, s))
    }

    proptest! {
        #[test]
        fn product_matches_pointwise(a in series(), b in series(), x in -3.0..3.0f64) {
            let p = a.mul(&b);
            let direct = a.eval(x) * b.eval(x);
            prop_assert!((p.eval(x) - direct).abs() < 1e-12);
        }

        #[test]
        fn periodic(a in series(), x in -5.0..5.0f64) {
            prop_assert!((a.eval(x) - a.eval(x + 1.0)).abs() < 1e-13);
        }

        #[test]
        fn derivative_matches_difference(a in series(), x in 0.0..1.0f64) {
            let h = 1e-6;
            let fd = (a.eval(x + h) - a.eval(x - h)) / (2.0 * h);
            prop_assert!((a.derivative().eval(x) - fd).abs() < 1e-6);
        }

        #[test]
        fn product_rule(a in series()) {
            let lhs = a.derivative().mul(&a).scale(2.0);
            let rhs = a.mul(&a).derivative();
            for i in 0..16 {
                let x = i as f64 / 16.0;
                prop_assert!((lhs.eval(x) - rhs.eval(x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mean_square_by_quadrature() {
        let a = TrigSeries::new(0.3, vec![1.0, -0.5], vec![0.25, 0.0, 2.0]);
        let n = 64;
        let q: f64 = (0..n).map(|i| a.eval(i as f64 / n as f64).powi(2)).sum::<f64>() / n as f64;
        assert!((q - a.mean_square()).abs() < 1e-13);
    }
}
