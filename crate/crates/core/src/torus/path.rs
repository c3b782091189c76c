//! Counter-based Brownian increments, keyed by `(seed, mode, step)`.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Stream identifier of mode `k`, independent of the truncation.
#[inline]
pub fn stream_id(k: i32) -> u64 {
    if k >= 0 {
        2 * k as u64
    } else {
        2 * (-k) as u64 - 1
    }
}

/// Normals per independently addressable block of a stream.
pub const BLOCK: u64 = 64;
const BLOCK_WORDS: u128 = 1 << 24;

fn rng_for(seed: u64, k: i32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id(k));
    rng
}

/// The `BLOCK` standard normals of block `block` in mode `k`'s stream.
fn fill_block(rng: &mut ChaCha8Rng, block: u64, out: &mut [f64; BLOCK as usize]) {
    rng.set_word_pos(block as u128 * BLOCK_WORDS);
    for z in out.iter_mut() {
        *z = StandardNormal.sample(rng);
    }
}

/// Standard normal number `index` of mode `k`'s stream.
pub fn standard_normal(seed: u64, k: i32, index: u64) -> f64 {
    let mut rng = rng_for(seed, k);
    let mut buf = [0.0; BLOCK as usize];
    fill_block(&mut rng, index / BLOCK, &mut buf);
    buf[(index % BLOCK) as usize]
}

/// Driving noise for the modes `k = -K..=K`.
///
/// Fine increments are `√dt₀ Z_k(n)`. A path view may skip `offset` fine steps,
/// sum `stride` fine steps per step, rotate each pair `(k, -k)` by the angle
/// `-2πk·rotation·n·dt₀` before summation, and finally scale increments by
/// `amplitude` and the step length by `time_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    seed: u64,
    truncation: usize,
    base_dt: f64,
    fine_steps: u64,
    offset: u64,
    stride: u64,
    rotation: f64,
    amplitude: f64,
    time_scale: f64,
}

impl NoisePath {
    pub fn new(seed: u64, truncation: usize, dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("noise step must be positive, got {dt}")));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(invalid("noise horizon must be finite and nonnegative"));
        }
        Ok(Self {
            seed,
            truncation,
            base_dt: dt,
            fine_steps: (horizon / dt).ceil() as u64,
            offset: 0,
            stride: 1,
            rotation: 0.0,
            amplitude: 1.0,
            time_scale: 1.0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Step length seen by an integrator.
    pub fn dt(&self) -> f64 {
        self.stride as f64 * self.base_dt * self.time_scale
    }

    pub fn base_dt(&self) -> f64 {
        self.base_dt
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// Number of whole steps available.
    pub fn steps(&self) -> u64 {
        self.fine_steps.saturating_sub(self.offset) / self.stride
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt()
    }

    /// Path started `steps` steps later (the shift `θ_t`).
    pub fn shifted(&self, steps: u64) -> Self {
        let mut out = self.clone();
        out.offset += steps * self.stride;
        out
    }

    /// Path whose steps are sums of `factor` consecutive steps.
    pub fn coarsened(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("coarsening factor must be positive"));
        }
        let mut out = self.clone();
        out.stride *= factor;
        Ok(out)
    }

    /// Extends the horizon to at least `horizon` (in the path's own time).
    pub fn with_horizon(&self, horizon: f64) -> Self {
        let mut out = self.clone();
        let fine = (horizon / (self.base_dt * self.time_scale)).ceil() as u64 + self.offset;
        out.fine_steps = out.fine_steps.max(fine);
        out
    }

    /// Step `step` increments of every mode, ordered `k = -K..=K`.
    pub fn increment(&self, step: u64, out: &mut [f64]) {
        let mut cursor = self.cursor_at(step, None);
        cursor.next_into(out);
    }

    pub fn cursor(&self) -> NoiseCursor {
        self.cursor_at(0, None)
    }

    /// Cursor generating only the listed modes (others read as zero).
    pub fn cursor_for(&self, modes: &[i32]) -> NoiseCursor {
        self.cursor_at(0, Some(modes))
    }

    pub fn cursor_at(&self, step: u64, modes: Option<&[i32]>) -> NoiseCursor {
        let kk = self.truncation as i32;
        let mut active: Vec<i32> = match modes {
            Some(m) => m.iter().copied().filter(|k| k.abs() <= kk).collect(),
            None => (-kk..=kk).collect(),
        };
        // rotation mixes k and -k, so both members of a pair must be generated
        if self.rotation != 0.0 {
            let mut extra: Vec<i32> = active.iter().filter(|&&k| k != 0).map(|&k| -k).collect();
            active.append(&mut extra);
        }
        active.sort_unstable();
        active.dedup();
        let fine = self.offset + step * self.stride;
        let streams = active
            .iter()
            .map(|&k| {
                let mut s = Stream {
                    k,
                    rng: rng_for(self.seed, k),
                    block: fine / BLOCK,
                    pos: (fine % BLOCK) as usize,
                    buf: [0.0; BLOCK as usize],
                };
                fill_block(&mut s.rng, s.block, &mut s.buf);
                s
            })
            .collect();
        NoiseCursor {
            path: self.clone(),
            fine,
            streams,
            fine_buf: vec![0.0; 2 * self.truncation + 1],
            sqrt_dt: self.base_dt.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
struct Stream {
    k: i32,
    rng: ChaCha8Rng,
    block: u64,
    pos: usize,
    buf: [f64; BLOCK as usize],
}

impl Stream {
    #[inline]
    fn next(&mut self) -> f64 {
        if self.pos == BLOCK as usize {
            self.block += 1;
            self.pos = 0;
            fill_block(&mut self.rng, self.block, &mut self.buf);
        }
        let z = self.buf[self.pos];
        self.pos += 1;
        z
    }
}

/// Sequential reader of a [`NoisePath`].
#[derive(Debug, Clone)]
pub struct NoiseCursor {
    path: NoisePath,
    fine: u64,
    streams: Vec<Stream>,
    fine_buf: Vec<f64>,
    sqrt_dt: f64,
}

impl NoiseCursor {
    pub fn dt(&self) -> f64 {
        self.path.dt()
    }

    /// Writes the next step's increments into `out` (length `2K + 1`, ordered `k = -K..=K`).
    pub fn next_into(&mut self, out: &mut [f64]) {
        let kk = self.path.truncation as i32;
        out.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.path.stride {
            for s in self.streams.iter_mut() {
                self.fine_buf[(s.k + kk) as usize] = self.sqrt_dt * s.next();
            }
            if self.path.rotation != 0.0 {
                let t = self.fine as f64 * self.path.base_dt;
                for k in 1..=kk {
                    let (ip, im) = ((k + kk) as usize, (kk - k) as usize);
                    let (s, c) = (-TAU * k as f64 * self.path.rotation * t).sin_cos();
                    let (bp, bm) = (self.fine_buf[ip], self.fine_buf[im]);
                    self.fine_buf[ip] = c * bp - s * bm;
                    self.fine_buf[im] = s * bp + c * bm;
                }
            }
            for s in &self.streams {
                let i = (s.k + kk) as usize;
                out[i] += self.fine_buf[i];
            }
            self.fine += 1;
        }
        if self.path.amplitude != 1.0 {
            for s in &self.streams {
                out[(s.k + kk) as usize] *= self.path.amplitude;
            }
        }
    }
}

/// Rotated and time-rescaled path of the noise time change.
///
/// Pairs `(β_k, β_{-k})` are rotated by `R(-2πk c t)` at fine resolution, then the
/// increments are scaled by `σ` and the step length by `σ²`.
pub fn rescale_noise(path: &NoisePath, c: f64, sigma: f64) -> Result<NoisePath> {
    if !(sigma > 0.0) || !sigma.is_finite() || !c.is_finite() {
        return Err(invalid("rescaling needs finite c and positive sigma"));
    }
    if path.rotation != 0.0 || path.amplitude != 1.0 || path.time_scale != 1.0 {
        return Err(invalid("path is already rescaled"));
    }
    let mut out = path.clone();
    out.rotation = c;
    out.amplitude = sigma;
    out.time_scale = sigma * sigma;
    Ok(out)
}

/// Rotation of a single increment pair by `R(-2πk c t)`; `k = 0` is rejected.
pub fn rotate_pair(k: i32, c: f64, t: f64, pair: (f64, f64)) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(invalid("the constant mode is not rotated"));
    }
    let (s, co) = (-TAU * k as f64 * c * t).sin_cos();
    Ok((co * pair.0 - s * pair.1, s * pair.0 + co * pair.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_is_bit_identical() {
        let p = NoisePath::new(42, 3, 0.01, 1.0).unwrap();
        let mut a = vec![0.0; 7];
        let mut b = vec![0.0; 7];
        let mut cur = p.cursor();
        for step in 0..50 {
            cur.next_into(&mut a);
            p.increment(step, &mut b);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_access_matches_sequential_normals() {
        for idx in [0u64, 1, 2, 7, 100] {
            let p = NoisePath::new(5, 1, 1.0, 200.0).unwrap();
            let mut out = vec![0.0; 3];
            p.increment(idx, &mut out);
            assert_eq!(out[2], standard_normal(5, 1, idx));
            assert_eq!(out[0], standard_normal(5, -1, idx));
        }
    }

    #[test]
    fn streams_do_not_depend_on_truncation() {
        let a = NoisePath::new(9, 2, 0.1, 10.0).unwrap();
        let b = NoisePath::new(9, 5, 0.1, 10.0).unwrap();
        let (mut x, mut y) = (vec![0.0; 5], vec![0.0; 11]);
        a.increment(3, &mut x);
        b.increment(3, &mut y);
        assert_eq!(x[..], y[3..8]);
    }

    #[test]
    fn coarsening_sums_fine_steps() {
        let p = NoisePath::new(1, 1, 0.01, 1.0).unwrap();
        let q = p.coarsened(4).unwrap();
        let mut fine = vec![0.0; 3];
        let mut acc = [0.0; 3];
        for s in 4..8 {
            p.increment(s, &mut fine);
            for (a, f) in acc.iter_mut().zip(&fine) {
                *a += f;
            }
        }
        let mut coarse = vec![0.0; 3];
        q.increment(1, &mut coarse);
        for (a, c) in acc.iter().zip(&coarse) {
            assert!((a - c).abs() < 1e-15);
        }
        assert!((q.dt() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn moments_are_standard() {
        let n = 200_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let z = standard_normal(3, 2, i);
            s1 += z;
            s2 += z * z;
        }
        let m = s1 / n as f64;
        let v = s2 / n as f64 - m * m;
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.01);
    }

    #[test]
    fn rotation_preserves_pair_energy() {
        let p = NoisePath::new(11, 3, 0.01, 1.0).unwrap();
        let r = rescale_noise(&p, 0.7, 1.0).unwrap();
        let (mut a, mut b) = (vec![0.0; 7], vec![0.0; 7]);
        for step in 0..20 {
            p.increment(step, &mut a);
            r.increment(step, &mut b);
            assert_eq!(a[3], b[3]);
            for k in 1..=3usize {
                let ea = a[3 + k].powi(2) + a[3 - k].powi(2);
                let eb = b[3 + k].powi(2) + b[3 - k].powi(2);
                assert!((ea - eb).abs() <= 1e-15 * ea.max(1e-300));
            }
        }
        assert!(rotate_pair(0, 1.0, 1.0, (1.0, 0.0)).is_err());
    }
}
