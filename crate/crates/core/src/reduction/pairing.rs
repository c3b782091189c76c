//! Fourier pairings of the adjoint against the noise basis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::FieldState;
use crate::isochron::{Isochron, IsochronOptions};
use crate::model::ModelSpec;
use crate::pulse::PulseSolution;
use crate::reduction::noise::basis;

/// `Q_{ij} = π''(u*)[g(u*)e_i, g(u*)e_j]` restricted to `i, j ∈ {k, -k}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QBlock {
    /// `Q_{k,k}`
    pub pp: f64,
    /// `Q_{k,-k} = Q_{-k,k}`
    pub pm: f64,
    /// `Q_{-k,-k}`
    pub mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSet {
    pub truncation: usize,
    /// `c_k = ⟨ψ·g(u*), e_k⟩`, ordered `k = -K..=K`.
    pub c: Vec<f64>,
    /// `d_0 = ⟨ψ·g'(u*)g(u*), e_0⟩`.
    pub d0: f64,
    /// `d_{2k}`, `k = 1..=K`.
    pub d_even: Vec<f64>,
    /// `d_{-2k}`, `k = 1..=K`.
    pub d_odd: Vec<f64>,
    /// `Q_{0,0}`.
    pub q0: f64,
    /// Blocks for `k = 1..=K`.
    pub q: Vec<QBlock>,
    /// `∫ (ψ·g(u*))²`.
    pub source_norm_sq: f64,
}

impl PairingSet {
    pub fn c(&self, k: i32) -> f64 {
        let kk = self.truncation as i32;
        if k.abs() > kk {
            0.0
        } else {
            self.c[(k + kk) as usize]
        }
    }

    /// `d_j` for `j ∈ {0} ∪ {±2k}`.
    pub fn d(&self, j: i32) -> f64 {
        if j == 0 {
            return self.d0;
        }
        if j % 2 != 0 || (j.unsigned_abs() / 2) as usize > self.truncation {
            return 0.0;
        }
        let idx = (j.unsigned_abs() / 2) as usize - 1;
        if j > 0 {
            self.d_even[idx]
        } else {
            self.d_odd[idx]
        }
    }

    pub fn q_block(&self, k: usize) -> QBlock {
        self.q[k - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.c
            .iter()
            .chain(&self.d_even)
            .chain(&self.d_odd)
            .chain([&self.d0, &self.q0, &self.source_norm_sq])
            .all(|v| v.is_finite())
            && self.q.iter().all(|b| b.pp.is_finite() && b.pm.is_finite() && b.mm.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.truncation;
        if k == 0 || self.c.len() != 2 * k + 1 || self.d_even.len() != k || self.d_odd.len() != k || self.q.len() != k
        {
            return Err(Error::Format("pairing table sizes do not match the truncation".into()));
        }
        if !self.is_finite() {
            return Err(Error::Format("pairing table contains non-finite entries".into()));
        }
        Ok(())
    }
}

/// Pointwise `ψ·g(u*)` and `ψ·g'(u*)g(u*)`.
pub fn adjoint_sources(pulse: &PulseSolution, model: &ModelSpec) -> (Vec<f64>, Vec<f64>) {
    let u = pulse.profile();
    let psi = pulse.adjoint();
    let n = u.grid().points();
    let comps = model.components();
    let mut p = vec![0.0; comps];
    let mut q = vec![0.0; comps];
    let mut g = vec![0.0; comps];
    let mut gg = vec![0.0; comps];
    let mut s = vec![0.0; n];
    let mut r = vec![0.0; n];
    for i in 0..n {
        u.point(i, &mut p);
        psi.point(i, &mut q);
        model.noise(&p, &mut g);
        model.noise_drift(&p, &mut gg);
        s[i] = q.iter().zip(&g).map(|(a, b)| a * b).sum();
        r[i] = q.iter().zip(&gg).map(|(a, b)| a * b).sum();
    }
    (s, r)
}

fn project(grid_h: f64, xs: &[f64], f: &[f64], k: i32) -> f64 {
    grid_h * xs.iter().zip(f).map(|(&x, v)| v * basis(k, x)).sum::<f64>()
}

/// `c_k` and `d_j` by trapezoidal quadrature over `[0, L)`; the `Q` entries are left at zero.
pub fn fourier_pairings(pulse: &PulseSolution, model: &ModelSpec, truncation: usize) -> Result<PairingSet> {
    if truncation == 0 {
        return Err(invalid("truncation K must be at least 1"));
    }
    let grid = pulse.grid();
    let h = grid.spacing();
    let xs = grid.coordinates();
    let (s, r) = adjoint_sources(pulse, model);
    let kk = truncation as i32;
    let c = (-kk..=kk).map(|k| project(h, &xs, &s, k)).collect();
    let d_even = (1..=kk).map(|k| project(h, &xs, &r, 2 * k)).collect();
    let d_odd = (1..=kk).map(|k| project(h, &xs, &r, -2 * k)).collect();
    Ok(PairingSet {
        truncation,
        c,
        d0: project(h, &xs, &r, 0),
        d_even,
        d_odd,
        q0: 0.0,
        q: vec![QBlock::default(); truncation],
        source_norm_sq: h * s.iter().map(|v| v * v).sum::<f64>(),
    })
}

/// Direction `g(u*) e_k` as a field.
pub fn noise_direction(pulse: &PulseSolution, model: &ModelSpec, k: i32) -> FieldState {
    let u = pulse.profile();
    let grid = u.grid();
    let comps = model.components();
    let mut out = FieldState::zeros(grid, comps);
    let mut p = vec![0.0; comps];
    let mut g = vec![0.0; comps];
    let n = grid.points();
    for i in 0..n {
        u.point(i, &mut p);
        model.noise(&p, &mut g);
        let e = basis(k, grid.x(i));
        for c in 0..comps {
            out.as_mut_slice()[c * n + i] = g[c] * e;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum QTask {
    Diag(i32),
    Cross(usize),
}

/// `Q` entries by finite differences of the isochron map along normalized directions.
pub fn q_matrix(
    pulse: &PulseSolution,
    model: &ModelSpec,
    truncation: usize,
    eps: f64,
    opts: IsochronOptions,
) -> Result<(f64, Vec<QBlock>)> {
    if truncation == 0 {
        return Err(invalid("truncation K must be at least 1"));
    }
    if !(eps > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let iso = Isochron::new(pulse, model, opts)?;
    let kk = truncation as i32;
    let dirs: Vec<(FieldState, f64)> = (-kk..=kk)
        .map(|k| {
            let v = noise_direction(pulse, model, k);
            let nrm = v.norm();
            let unit = if nrm > 0.0 { v.scaled(1.0 / nrm) } else { v };
            (unit, nrm)
        })
        .collect();
    let dir = |k: i32| &dirs[(k + kk) as usize];

    let mut tasks: Vec<QTask> = (-kk..=kk).map(QTask::Diag).collect();
    tasks.extend((1..=truncation).map(QTask::Cross));
    let results: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|task| match *task {
            QTask::Diag(k) => {
                let (v, nrm) = dir(k);
                if *nrm == 0.0 {
                    return Ok(0.0);
                }
                iso.second_difference(v, eps)
                    .map(|q| q * nrm * nrm)
                    .map_err(|e| Error::Mode {
                        mode: k,
                        source: Box::new(e),
                    })
            }
            QTask::Cross(k) => {
                let k = k as i32;
                let (v, nv) = dir(k);
                let (w, nw) = dir(-k);
                if *nv == 0.0 || *nw == 0.0 {
                    return Ok(0.0);
                }
                iso.second_variation(v, w, eps)
                    .map(|q| q * nv * nw)
                    .map_err(|e| Error::Mode {
                        mode: k,
                        source: Box::new(e),
                    })
            }
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let diag = |k: i32| values[(k + kk) as usize];
    let cross_base = 2 * truncation + 1;
    let blocks = (1..=truncation)
        .map(|k| QBlock {
            pp: diag(k as i32),
            pm: values[cross_base + k - 1],
            mm: diag(-(k as i32)),
        })
        .collect();
    Ok((diag(0), blocks))
}

/// Full pairing set including `Q`.
pub fn compute_pairings(
    pulse: &PulseSolution,
    model: &ModelSpec,
    truncation: usize,
    eps: f64,
    opts: IsochronOptions,
) -> Result<PairingSet> {
    let mut set = fourier_pairings(pulse, model, truncation)?;
    let (q0, q) = q_matrix(pulse, model, truncation, eps, opts)?;
    set.q0 = q0;
    set.q = q;
    Ok(set)
}
