//! Reduced coefficients `𝔞`, `𝔟_k` as trigonometric series.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::reduction::noise::NoiseSpec;
use crate::reduction::pairing::PairingSet;
use crate::reduction::trig::{Harmonics, TrigSeries};

/// `𝔟_k(x) = α_k ⟨ψ g(u*), T_{-x} e_k⟩`, ordered `k = -K..=K`.
pub fn build_b(noise: &NoiseSpec, pairings: &PairingSet) -> Result<Vec<TrigSeries>> {
    let kk = noise.truncation() as i32;
    if pairings.truncation < noise.truncation() {
        return Err(invalid("pairings do not cover the noise truncation"));
    }
    Ok((-kk..=kk)
        .map(|k| {
            let m = k.unsigned_abs() as usize;
            let a = noise.alpha(k);
            let (cp, cm) = (pairings.c(m as i32), pairings.c(-(m as i32)));
            match k.cmp(&0) {
                std::cmp::Ordering::Equal => TrigSeries::constant(a * pairings.c(0)),
                std::cmp::Ordering::Greater => TrigSeries::harmonic(m, a * cp, -a * cm).trimmed(),
                std::cmp::Ordering::Less => TrigSeries::harmonic(m, a * cm, a * cp).trimmed(),
            }
        })
        .collect())
}

/// `𝔞(x) = ½ Σ_k α_k² (π'[g'g T_{-x}e_k²] + π''[g T_{-x}e_k, g T_{-x}e_k])` at `T_x u*`.
pub fn build_a(noise: &NoiseSpec, pairings: &PairingSet) -> Result<TrigSeries> {
    if pairings.truncation < noise.truncation() {
        return Err(invalid("pairings do not cover the noise truncation"));
    }
    let k_max = noise.truncation();
    let a0 = noise.alpha(0);
    let mut mean = 0.5 * a0 * a0 * (pairings.d0 + pairings.q0);
    let mut cos = vec![0.0; 2 * k_max];
    let mut sin = vec![0.0; 2 * k_max];
    for m in 1..=k_max {
        let ap = noise.alpha(m as i32).powi(2);
        let am = noise.alpha(-(m as i32)).powi(2);
        let q = pairings.q_block(m);
        let (dp, dm) = (pairings.d(2 * m as i32), pairings.d(-2 * m as i32));
        mean += 0.5 * (ap + am) * (pairings.d0 + 0.5 * (q.pp + q.mm));
        let diff = ap - am;
        cos[2 * m - 1] += 0.5 * diff * (FRAC_1_SQRT_2 * dp + 0.5 * (q.pp - q.mm));
        sin[2 * m - 1] += 0.5 * diff * (-FRAC_1_SQRT_2 * dm - q.pm);
    }
    Ok(TrigSeries::new(mean, cos, sin).trimmed())
}

/// Stratonovich drift `𝔞 − ½ Σ_k 𝔟_k' 𝔟_k`.
pub fn strat_drift(a: &TrigSeries, b: &[TrigSeries]) -> TrigSeries {
    let mut corr = TrigSeries::zero();
    for bk in b {
        corr = corr.add(&bk.derivative().mul(bk));
    }
    a.add(&corr.scale(-0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub passed: bool,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// `c₁² + c₋₁²`.
    pub c_energy: f64,
    pub threshold: f64,
    /// `min_x 𝔟₁(x)² + 𝔟₋₁(x)²` over a fine grid.
    pub min_b_energy: f64,
    pub message: String,
}

/// Checks `α_{±1} ≠ 0` and `c₁² + c₋₁² > 1e-12·‖ψ·g(u*)‖²`.
pub fn nondegeneracy_check(noise: &NoiseSpec, pairings: &PairingSet) -> NondegeneracyReport {
    let (ap, am) = (noise.alpha(1), noise.alpha(-1));
    let (c1, cm1) = (pairings.c(1), pairings.c(-1));
    let c_energy = c1 * c1 + cm1 * cm1;
    let threshold = 1e-12 * pairings.source_norm_sq;
    let b1 = TrigSeries::harmonic(1, ap * c1, -ap * cm1);
    let bm1 = TrigSeries::harmonic(1, am * cm1, am * c1);
    let samples = 1024;
    let min_b_energy = (0..samples)
        .map(|i| {
            let x = i as f64 / samples as f64;
            b1.eval(x).powi(2) + bm1.eval(x).powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    let mut problems = Vec::new();
    if ap == 0.0 {
        problems.push("alpha_1 is zero");
    }
    if am == 0.0 {
        problems.push("alpha_-1 is zero");
    }
    if !(c_energy > threshold) {
        problems.push("the adjoint pairing with the first sine/cosine modes vanishes");
    }
    let passed = problems.is_empty();
    let message = if passed {
        "noise nondegeneracy satisfied".to_string()
    } else {
        format!("noise nondegeneracy assumption violated: {}", problems.join("; "))
    };
    NondegeneracyReport {
        passed,
        alpha_plus: ap,
        alpha_minus: am,
        c_energy,
        threshold,
        min_b_energy,
        message,
    }
}

/// Scalar phase SDE `dγ = (c + σ²𝔞(γ))dt + σ Σ_k 𝔟_k(γ) dβ_k` on the unit torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedModel {
    pub speed: f64,
    pub truncation: usize,
    pub a: TrigSeries,
    pub a_prime: TrigSeries,
    /// Ordered `k = -K..=K`.
    pub b: Vec<TrigSeries>,
    pub b_prime: Vec<TrigSeries>,
    pub strat_drift: TrigSeries,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub pairings: Option<PairingSet>,
}

impl ReducedModel {
    /// Assembles the reduced model from pairings.
    pub fn build(speed: f64, noise: &NoiseSpec, pairings: &PairingSet) -> Result<Self> {
        pairings.validate()?;
        let b = build_b(noise, pairings)?;
        let a = build_a(noise, pairings)?;
        let mut model = Self::from_coefficients(speed, a, b)?;
        model.noise = Some(noise.clone());
        model.pairings = Some(pairings.clone());
        Ok(model)
    }

    /// Model from explicit coefficient series, `b` ordered `k = -K..=K`.
    pub fn from_coefficients(speed: f64, a: TrigSeries, b: Vec<TrigSeries>) -> Result<Self> {
        if b.len() % 2 != 1 {
            return Err(invalid("diffusion coefficients must be indexed k = -K..=K"));
        }
        if !speed.is_finite() || !a.is_finite() || b.iter().any(|s| !s.is_finite()) {
            return Err(invalid("reduced coefficients must be finite"));
        }
        let truncation = b.len() / 2;
        let a_prime = a.derivative();
        let b_prime: Vec<TrigSeries> = b.iter().map(TrigSeries::derivative).collect();
        let strat = strat_drift(&a, &b);
        Ok(Self {
            speed,
            truncation,
            a,
            a_prime,
            b,
            b_prime,
            strat_drift: strat,
            noise: None,
            pairings: None,
        })
    }

    pub fn b(&self, k: i32) -> &TrigSeries {
        &self.b[(k + self.truncation as i32) as usize]
    }

    pub fn b_prime(&self, k: i32) -> &TrigSeries {
        &self.b_prime[(k + self.truncation as i32) as usize]
    }

    /// Same coefficients with a different deterministic speed.
    pub fn with_speed(&self, speed: f64) -> Self {
        let mut out = self.clone();
        out.speed = speed;
        out
    }

    /// Highest harmonic present in any coefficient.
    pub fn order(&self) -> usize {
        self.b
            .iter()
            .chain(&self.b_prime)
            .chain([&self.a, &self.a_prime, &self.strat_drift])
            .map(TrigSeries::order)
            .max()
            .unwrap_or(0)
    }

    /// `B(x) = Σ_k 𝔟_k(x)²`.
    pub fn diffusion_series(&self) -> TrigSeries {
        self.b.iter().fold(TrigSeries::zero(), |acc, bk| acc.add(&bk.mul(bk)))
    }

    /// `Σ_k 𝔟_k'(x)²`.
    pub fn derivative_energy_series(&self) -> TrigSeries {
        self.b_prime
            .iter()
            .fold(TrigSeries::zero(), |acc, bk| acc.add(&bk.mul(bk)))
    }

    /// Indices `k` (signed) of modes with a nonzero coefficient.
    pub fn active_modes(&self) -> Vec<i32> {
        let kk = self.truncation as i32;
        (-kk..=kk)
            .filter(|&k| {
                let s = self.b(k);
                s.mean != 0.0 || s.max_harmonic() != 0.0
            })
            .collect()
    }

    /// Suggested step: `10⁻² / (1 + σ² max|𝔞| + σ K max_{k,x}|𝔟_k|)`, capped at `cap`.
    pub fn suggested_dt(&self, sigma: f64, cap: f64) -> f64 {
        let samples = 256;
        let amax = self.a.sup_norm(samples);
        let bmax = self.b.iter().map(|s| s.sup_norm(samples)).fold(0.0, f64::max);
        let dt = 1e-2 / (1.0 + sigma * sigma * amax + sigma * bmax * self.truncation as f64);
        dt.min(cap)
    }

    pub fn nondegeneracy(&self) -> Result<NondegeneracyReport> {
        match (&self.noise, &self.pairings) {
            (Some(n), Some(p)) => Ok(nondegeneracy_check(n, p)),
            _ => {
                // explicit-coefficient models: check the first modes directly
                let b1 = self.b(1.min(self.truncation as i32));
                let bm1 = self.b(-(1.min(self.truncation as i32)));
                let samples = 1024;
                let min = (0..samples)
                    .map(|i| {
                        let x = i as f64 / samples as f64;
                        b1.eval(x).powi(2) + bm1.eval(x).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min);
                Ok(NondegeneracyReport {
                    passed: min > 0.0,
                    alpha_plus: f64::NAN,
                    alpha_minus: f64::NAN,
                    c_energy: f64::NAN,
                    threshold: 0.0,
                    min_b_energy: min,
                    message: if min > 0.0 {
                        "first-mode coefficients span".into()
                    } else {
                        "noise nondegeneracy assumption violated: first-mode coefficients vanish somewhere".into()
                    },
                })
            }
        }
    }

    /// Errors unless the noise nondegeneracy assumption holds.
    pub fn require_nondegenerate(&self) -> Result<()> {
        let r = self.nondegeneracy()?;
        if r.passed {
            Ok(())
        } else {
            let detail = r.message.trim_start_matches("noise nondegeneracy assumption violated: ");
            Err(Error::Nondegeneracy(detail.to_string()))
        }
    }

    pub fn evaluator(&self) -> CoefficientEvaluator<'_> {
        CoefficientEvaluator::new(self)
    }
}

/// Evaluates all coefficients at one point from a shared harmonic table.
#[derive(Debug, Clone)]
pub struct CoefficientEvaluator<'a> {
    model: &'a ReducedModel,
    harmonics: Harmonics,
    modes: Vec<i32>,
}

impl<'a> CoefficientEvaluator<'a> {
    pub fn new(model: &'a ReducedModel) -> Self {
        Self {
            model,
            harmonics: Harmonics::new(model.order()),
            modes: (-(model.truncation as i32)..=model.truncation as i32).collect(),
        }
    }

    pub fn set(&mut self, x: f64) {
        self.harmonics.fill(x);
    }

    pub fn a(&self) -> f64 {
        self.model.a.eval_with(&self.harmonics)
    }

    pub fn a_prime(&self) -> f64 {
        self.model.a_prime.eval_with(&self.harmonics)
    }

    pub fn strat_drift(&self) -> f64 {
        self.model.strat_drift.eval_with(&self.harmonics)
    }

    pub fn b(&self, idx: usize) -> f64 {
        self.model.b[idx].eval_with(&self.harmonics)
    }

    pub fn b_prime(&self, idx: usize) -> f64 {
        self.model.b_prime[idx].eval_with(&self.harmonics)
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }
}
