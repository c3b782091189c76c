//! Cross-correlation phase fitting against the pulse profile.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::FieldState;
use crate::pulse::PulseSolution;
use crate::spectral::Spectral;

/// Relative curvature threshold below which the correlation peak counts as lost.
pub const CURVATURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    /// Fitted translation in `[0, L)`.
    pub phase: f64,
    /// `‖w − T_phase u*‖₂`.
    pub tube: f64,
}

/// Precomputed spectra of the pulse profile for repeated fits.
#[derive(Debug, Clone)]
pub struct PhaseFitter {
    spectral: Spectral,
    profile: FieldState,
    profile_hat: Vec<Vec<Complex64>>,
    curvature_scale: f64,
}

impl PhaseFitter {
    pub fn new(pulse: &PulseSolution) -> Self {
        let profile = pulse.profile().clone();
        let spectral = Spectral::new(profile.grid());
        let profile_hat = (0..profile.components())
            .map(|c| spectral.forward(profile.component(c)))
            .collect();
        let d = pulse.derivative();
        Self {
            spectral,
            profile,
            profile_hat,
            curvature_scale: d.dot(d),
        }
    }

    pub fn profile(&self) -> &FieldState {
        &self.profile
    }

    fn cross_spectrum(&self, w: &FieldState) -> Vec<Complex64> {
        let n = self.profile.grid().points();
        let mut p = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..w.components() {
            let wh = self.spectral.forward(w.component(c));
            for ((acc, a), b) in p.iter_mut().zip(&wh).zip(&self.profile_hat[c]) {
                *acc += a.conj() * b;
            }
        }
        p
    }

    /// `(C, C', C'')` of `s ↦ ⟨w, T_s u*⟩`.
    fn correlation(&self, p: &[Complex64], s: f64) -> (f64, f64, f64) {
        let grid = self.profile.grid();
        let n = grid.points();
        let scale = grid.spacing() / n as f64;
        let (mut c0, mut c1, mut c2) = (0.0, 0.0, 0.0);
        for (j, pj) in p.iter().enumerate() {
            let k = grid.wavenumber(j);
            if j == n / 2 {
                let (sn, cs) = (k * s).sin_cos();
                c0 += pj.re * cs;
                c1 -= k * pj.re * sn;
                c2 -= k * k * pj.re * cs;
            } else {
                let z = pj * Complex64::from_polar(1.0, -k * s);
                c0 += z.re;
                c1 += k * z.im;
                c2 -= k * k * z.re;
            }
        }
        (scale * c0, scale * c1, scale * c2)
    }

    pub fn fit(&self, w: &FieldState) -> Result<PhaseFit> {
        if !w.same_shape(&self.profile) {
            return Err(invalid("field does not match the pulse grid"));
        }
        let grid = self.profile.grid();
        let n = grid.points();
        let h = grid.spacing();
        let l = grid.length();
        let p = self.cross_spectrum(w);

        // grid-shift correlations C(m h) = (h/N) Σ_j P_j e^{-2πi jm/N}
        let mut buf = p.clone();
        let mut planner = rustfft::FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        let m0 = buf
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, z)| if z.re > acc.1 { (i, z.re) } else { acc })
            .0;
        let s0 = m0 as f64 * h;

        let mut s = s0;
        let mut newton_ok = false;
        for _ in 0..20 {
            let (_, d1, d2) = self.correlation(&p, s);
            if !(d2 < 0.0) {
                break;
            }
            let step = d1 / d2;
            s -= step;
            if (s - s0).abs() > h {
                break;
            }
            if step.abs() <= 1e-14 * l {
                newton_ok = true;
                break;
            }
        }
        if !newton_ok || (s - s0).abs() > h {
            let at = |m: isize| buf[m.rem_euclid(n as isize) as usize].re;
            let (a, b, c) = (at(m0 as isize - 1), at(m0 as isize), at(m0 as isize + 1));
            let denom = a - 2.0 * b + c;
            let off = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            s = s0 + off * h;
        }
        let (value, _, curvature) = self.correlation(&p, s);
        let threshold = CURVATURE_FRACTION * self.curvature_scale;
        if !(-curvature > threshold) || !(value > 0.0) {
            return Err(Error::OffManifold {
                curvature: -curvature,
                threshold,
            });
        }
        let mut phase = s.rem_euclid(l);
        if phase >= l {
            phase = 0.0;
        }
        let tube = self.tube_distance(w, phase);
        Ok(PhaseFit { phase, tube })
    }

    /// `‖w − T_s u*‖₂`.
    pub fn tube_distance(&self, w: &FieldState, s: f64) -> f64 {
        let h = self.profile.grid().spacing();
        let mut acc = 0.0;
        for c in 0..w.components() {
            let shifted = self.spectral.translate(self.profile.component(c), s);
            acc += w
                .component(c)
                .iter()
                .zip(&shifted)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        (h * acc).sqrt()
    }

    /// `T_s u*` as a field.
    pub fn translate_profile(&self, s: f64) -> FieldState {
        let mut out = self.profile.clone();
        for c in 0..out.components() {
            let shifted = self.spectral.translate(self.profile.component(c), s);
            out.component_mut(c).copy_from_slice(&shifted);
        }
        out
    }
}

/// Phase of `w` relative to the pulse, with tube distance.
pub fn phase_fit(w: &FieldState, pulse: &PulseSolution) -> Result<PhaseFit> {
    PhaseFitter::new(pulse).fit(w)
}

/// Representative of `d` modulo `period` in `(-period/2, period/2]`.
pub fn wrap_centered(d: f64, period: f64) -> f64 {
    let r = d - period * (d / period).round();
    if r <= -0.5 * period {
        r + period
    } else {
        r
    }
}
