#![allow(dead_code)]

use pulsesync::reduction::{NoiseSpec, PairingSet, QBlock, ReducedModel, TrigSeries};

/// Pairing table with the magnitudes of the FitzHugh–Nagumo pulse and an affine-noise `d` table.
pub fn pairings(truncation: usize) -> PairingSet {
    let c_pos = [0.8234816, -0.1187044, -0.0060701, 0.00096074];
    let c_neg = [0.8234816, -0.5863470, 0.0494081, -0.0034231];
    let q = [(-1.2962, -1.1378, -0.57758), (-0.15726, -0.0090587, -0.16306), (-0.079688, -4.17e-5, -0.079744)];
    let k = truncation;
    let mut c = vec![0.0; 2 * k + 1];
    for j in 0..=k {
        c[k + j] = c_pos.get(j).copied().unwrap_or(0.0);
        c[k - j] = c_neg.get(j).copied().unwrap_or(0.0);
    }
    PairingSet {
        truncation: k,
        c,
        d0: 0.11,
        d_even: (1..=k).map(|j| 0.07 / j as f64).collect(),
        d_odd: (1..=k).map(|j| -0.05 / j as f64).collect(),
        q0: -3.537,
        q: (0..k)
            .map(|j| {
                let (pp, pm, mm) = q.get(j).copied().unwrap_or((-0.05, 0.0, -0.05));
                QBlock { pp, pm, mm }
            })
            .collect(),
        source_norm_sq: 1.0,
    }
}

pub fn asymmetric_noise(truncation: usize, sigma: f64) -> NoiseSpec {
    NoiseSpec::from_fn(truncation, sigma, |k| match k {
        0 => 0.1,
        k if k > 0 => 0.35 / (k * k) as f64,
        k => 0.2 / (k * k) as f64,
    })
    .unwrap()
}

pub const SPEED: f64 = 0.0458253605;

pub fn asymmetric_model(truncation: usize) -> ReducedModel {
    ReducedModel::build(SPEED, &asymmetric_noise(truncation, 0.1), &pairings(truncation)).unwrap()
}

pub fn homogeneous_model(truncation: usize) -> ReducedModel {
    let noise = NoiseSpec::default_table(truncation, 0.1).unwrap();
    ReducedModel::build(SPEED, &noise, &pairings(truncation)).unwrap()
}

/// `𝔟 = b·sin(2πx)` and `b·cos(2πx)` on modes ±1 with no drift correction.
pub fn constant_diffusion_model(b: f64) -> ReducedModel {
    ReducedModel::from_coefficients(
        0.0,
        TrigSeries::zero(),
        vec![TrigSeries::harmonic(1, b, 0.0), TrigSeries::constant(0.0), TrigSeries::harmonic(1, 0.0, b)],
    )
    .unwrap()
}
