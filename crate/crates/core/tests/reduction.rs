mod common;

use proptest::prelude::*;
use pulsesync::reduction::{
    basis, build_b, reduced_from_str, reduced_to_string, NoiseSpec, PairingSet, QBlock, ReducedModel, TrigSeries,
};
use pulsesync::torus::NoisePath;

const K: usize = 3;

fn pairing_table() -> impl Strategy<Value = PairingSet> {
    (
        prop::collection::vec(-1.0..1.0f64, 2 * K + 1),
        prop::collection::vec(-0.5..0.5f64, 2 * K + 1),
        prop::collection::vec((-2.0..0.0f64, -1.0..1.0f64, -2.0..0.0f64), K),
        -4.0..0.0f64,
    )
        .prop_map(|(c, d, q, q0)| PairingSet {
            truncation: K,
            c,
            d0: d[0],
            d_even: d[1..=K].to_vec(),
            d_odd: d[K + 1..].to_vec(),
            q0,
            q: q.into_iter().map(|(pp, pm, mm)| QBlock { pp, pm, mm }).collect(),
            source_norm_sq: 1.0,
        })
}

fn alphas() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..0.5f64, 2 * K + 1)
}

fn spread(s: &TrigSeries) -> f64 {
    let v: Vec<f64> = (0..256).map(|i| s.eval(i as f64 / 256.0)).collect();
    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
}

/// `α_k ∫ f(y) e_k(y + x) dy` for `f = Σ c_j e_j`, by midpoint quadrature.
fn b_by_quadrature(p: &PairingSet, alpha: f64, k: i32, x: f64) -> f64 {
    let n = 512;
    let kk = K as i32;
    (0..n)
        .map(|i| {
            let y = (i as f64 + 0.5) / n as f64;
            let f: f64 = (-kk..=kk).map(|j| p.c(j) * basis(j, y)).sum();
            f * basis(k, y + x)
        })
        .sum::<f64>()
        * alpha
        / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn b_matches_translated_pairing(p in pairing_table(), a in alphas(), x in 0.0..1.0f64) {
        let noise = NoiseSpec::new(K, a, 0.1).unwrap();
        let b = build_b(&noise, &p).unwrap();
        for (i, k) in (-(K as i32)..=K as i32).enumerate() {
            let q = b_by_quadrature(&p, noise.alpha(k), k, x);
            prop_assert!((b[i].eval(x) - q).abs() < 1e-12, "k {}: {} vs {}", k, b[i].eval(x), q);
        }
    }

    #[test]
    fn constant_mode_has_flat_coefficient(p in pairing_table(), a in alphas()) {
        let m = ReducedModel::build(0.05, &NoiseSpec::new(K, a, 0.1).unwrap(), &p).unwrap();
        let b0 = m.b_prime(0);
        prop_assert!(b0.mean == 0.0 && b0.cos.iter().chain(&b0.sin).all(|&v| v == 0.0));
        prop_assert_eq!(m.b(0).order(), 0);
    }

    #[test]
    fn homogeneous_noise_gives_constant_drift_and_diffusion(p in pairing_table(), half in prop::collection::vec(0.01..0.5f64, K + 1)) {
        let noise = NoiseSpec::homogeneous(K, 0.1, |k| half[k]).unwrap();
        let m = ReducedModel::build(0.05, &noise, &p).unwrap();
        let a_scale = m.a.mean.abs().max(1e-3);
        let b_scale = m.diffusion_series().mean;
        prop_assert!(spread(&m.a) <= 1e-10 * a_scale);
        prop_assert!(spread(&m.diffusion_series()) <= 1e-10 * b_scale);
    }

    #[test]
    fn coefficients_are_one_periodic(p in pairing_table(), a in alphas(), x in -2.0..2.0f64, n in -3i32..4) {
        let m = ReducedModel::build(0.05, &NoiseSpec::new(K, a, 0.1).unwrap(), &p).unwrap();
        for s in [&m.a, &m.a_prime, &m.strat_drift].into_iter().chain(&m.b).chain(&m.b_prime) {
            let scale = s.sup_norm(128).max(1e-300);
            prop_assert!((s.eval(x + n as f64) - s.eval(x)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn stratonovich_drift_is_ito_minus_half_correction(p in pairing_table(), a in alphas(), x in 0.0..1.0f64) {
        let m = ReducedModel::build(0.05, &NoiseSpec::new(K, a, 0.1).unwrap(), &p).unwrap();
        let corr: f64 = m.b.iter().zip(&m.b_prime).map(|(b, d)| b.eval(x) * d.eval(x)).sum();
        prop_assert!((m.strat_drift.eval(x) - (m.a.eval(x) - 0.5 * corr)).abs() < 1e-12);
    }

    #[test]
    fn reduced_model_json_roundtrip(p in pairing_table(), a in alphas()) {
        let m = ReducedModel::build(0.0458, &NoiseSpec::new(K, a, 0.1).unwrap(), &p).unwrap();
        let back = reduced_from_str(&reduced_to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn shifted_path_reads_later_increments(seed in 0u64..1000, shift in 0u64..300, step in 0u64..100) {
        let p = NoisePath::new(seed, 2, 0.01, 5.0).unwrap();
        let (mut a, mut b) = (vec![0.0; 5], vec![0.0; 5]);
        p.shifted(shift).increment(step, &mut a);
        p.increment(shift + step, &mut b);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn coarsened_path_sums_fine_increments(seed in 0u64..1000, factor in 1u64..9, step in 0u64..40) {
        let p = NoisePath::new(seed, 1, 0.01, 4.0).unwrap();
        let mut coarse = vec![0.0; 3];
        p.coarsened(factor).unwrap().increment(step, &mut coarse);
        let mut sum = [0.0; 3];
        let mut fine = vec![0.0; 3];
        for j in 0..factor {
            p.increment(step * factor + j, &mut fine);
            for (s, f) in sum.iter_mut().zip(&fine) {
                *s += f;
            }
        }
        for (c, s) in coarse.iter().zip(&sum) {
            prop_assert!((c - s).abs() < 1e-14);
        }
    }

    #[test]
    fn modes_do_not_depend_on_truncation(seed in 0u64..1000, step in 0u64..200) {
        let (mut small, mut large) = (vec![0.0; 3], vec![0.0; 7]);
        NoisePath::new(seed, 1, 0.01, 3.0).unwrap().increment(step, &mut small);
        NoisePath::new(seed, 3, 0.01, 3.0).unwrap().increment(step, &mut large);
        prop_assert_eq!(&small[..], &large[2..5]);
    }
}

#[test]
fn vanishing_first_mode_fails_nondegeneracy() {
    let p = common::pairings(K);
    let ok = NoiseSpec::default_table(K, 0.1).unwrap();
    assert!(ReducedModel::build(0.05, &ok, &p).unwrap().require_nondegenerate().is_ok());
    for k in [1, -1] {
        let bad = NoiseSpec::from_fn(K, 0.1, |j| if j == k { 0.0 } else { 0.1 }).unwrap();
        let err = ReducedModel::build(0.05, &bad, &p).unwrap().require_nondegenerate().unwrap_err();
        assert!(err.to_string().contains("noise nondegeneracy assumption violated"), "{err}");
    }
}

#[test]
fn increments_have_unit_variance_per_time() {
    let p = NoisePath::new(9, 2, 0.01, 2000.0).unwrap();
    let mut cur = p.cursor();
    let mut dw = vec![0.0; 5];
    let mut acc = [0.0; 5];
    for _ in 0..p.steps() {
        cur.next_into(&mut dw);
        for (a, d) in acc.iter_mut().zip(&dw) {
            *a += d * d;
        }
    }
    for a in acc {
        let rate = a / p.horizon();
        assert!((rate - 1.0).abs() < 0.02, "{rate}");
    }
}
