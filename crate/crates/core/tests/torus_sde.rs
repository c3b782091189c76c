mod common;

use pulsesync::reduction::{ReducedModel, TrigSeries};
use pulsesync::stats;
use pulsesync::torus::sde::steps_for;
use pulsesync::torus::squeeze::{controlled_squeeze, squeeze_exact, SqueezeOptions};
use pulsesync::torus::{
    rescale_noise, simulate, simulate_steps, sync_time, tangent_lyapunov_mc, torus_distance, NoisePath, Scheme,
    TorusEnsemble,
};

#[test]
fn zero_noise_is_pure_drift() {
    let model = common::asymmetric_model(2);
    let path = NoisePath::new(3, 2, 1e-3, 10.0).unwrap();
    let start = TorusEnsemble::new(vec![0.1, 0.4, 0.95]);
    let (end, _) = simulate(&model, 0.0, &start, &path, 10.0, 1000).unwrap();
    for (x, x0) in end.lifts.iter().zip(&start.lifts) {
        assert!((x - x0 - model.speed * 10.0).abs() < 1e-12);
    }
}

#[test]
fn cocycle_is_bit_exact() {
    let model = common::asymmetric_model(2);
    let path = NoisePath::new(11, 2, 1e-3, 3.0).unwrap();
    let start = TorusEnsemble::new(vec![0.0, 0.3, 0.7]);
    let (whole, _) = simulate_steps(&model, 0.3, &start, &path, 3000, 3000, Scheme::ItoEuler).unwrap();
    let (mid, _) = simulate_steps(&model, 0.3, &start, &path, 1200, 1200, Scheme::ItoEuler).unwrap();
    let (end, _) = simulate_steps(&model, 0.3, &mid, &path.shifted(1200), 1800, 1800, Scheme::ItoEuler).unwrap();
    assert_eq!(whole.lifts, end.lifts);
}

#[test]
fn lift_equivariance() {
    let model = common::asymmetric_model(2);
    let path = NoisePath::new(5, 2, 1e-3, 2.0).unwrap();
    let a = TorusEnsemble::new(vec![0.25]);
    let b = TorusEnsemble::new(vec![1.25]);
    let (ea, _) = simulate(&model, 0.4, &a, &path, 2.0, 100).unwrap();
    let (eb, _) = simulate(&model, 0.4, &b, &path, 2.0, 100).unwrap();
    assert!((eb.lifts[0] - ea.lifts[0] - 1.0).abs() < 1e-12);
}

#[test]
fn shared_noise_preserves_order() {
    let model = common::asymmetric_model(3);
    let path = NoisePath::new(21, 3, 1e-3, 50.0).unwrap();
    let start = TorusEnsemble::new(vec![0.0, 0.2, 0.5, 0.8]);
    let (_, traj) = simulate(&model, 0.5, &start, &path, 50.0, 10).unwrap();
    for lifts in &traj.lifts {
        for w in lifts.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(lifts[3] < lifts[0] + 1.0);
    }
}

#[test]
fn trajectory_records_stride() {
    let model = common::asymmetric_model(1);
    let path = NoisePath::new(1, 1, 0.01, 1.0).unwrap();
    let (_, traj) = simulate(&model, 0.1, &TorusEnsemble::new(vec![0.5]), &path, 1.0, 30).unwrap();
    assert_eq!(traj.steps, vec![0, 30, 60, 90, 100]);
    assert!(simulate(&model, 0.1, &TorusEnsemble::new(vec![0.5]), &path, 2.0, 1).is_err());
}

#[test]
fn no_noise_gives_zero_exponent() {
    let zero = vec![TrigSeries::zero(); 3];
    let model = ReducedModel::from_coefficients(0.3, TrigSeries::zero(), zero).unwrap();
    let path = NoisePath::new(1, 1, 1e-2, 100.0).unwrap();
    let est = tangent_lyapunov_mc(&model, 0.5, 0.2, &path, 100.0, 10.0).unwrap();
    assert_eq!(est.lambda, 0.0);
}

#[test]
fn homogeneous_exponent_matches_closed_form() {
    let model = common::homogeneous_model(2);
    let sigma = 1.0;
    let closed = -0.5 * sigma * sigma * model.derivative_energy_series().mean;
    let path = NoisePath::new(17, 2, 2e-3, 4000.0).unwrap();
    let est = tangent_lyapunov_mc(&model, sigma, 0.1, &path, 4000.0, 100.0).unwrap();
    assert!(
        (est.lambda - closed).abs() < 3.0 * est.stderr + 0.02 * closed.abs(),
        "{est:?} vs {closed}"
    );
}

#[test]
fn sync_time_trivial_cases() {
    let model = common::asymmetric_model(2);
    let path = NoisePath::new(2, 2, 1e-3, 1.0).unwrap();
    assert_eq!(sync_time(&model, 0.1, 0.3, 0.3, 0.01, &path).unwrap().time, Some(0.0));
    assert_eq!(sync_time(&model, 0.1, 0.0, 0.5, 0.5, &path).unwrap().time, Some(0.0));
    let short = sync_time(&model, 0.1, 0.0, 0.5, 0.01, &path).unwrap();
    assert_eq!(short.time, None);
    assert!(short.order_preserved);
}

#[test]
fn sync_happens_under_strong_noise() {
    let model = common::asymmetric_model(2);
    let path = NoisePath::new(8, 2, 1e-3, 2000.0).unwrap();
    let out = sync_time(&model, 1.0, 0.0, 0.5, 0.01, &path).unwrap();
    let t = out.time.expect("synchronized");
    assert!(t > 0.0 && out.order_preserved);
}

#[test]
fn driftless_time_change_is_exact() {
    let model = common::asymmetric_model(3).with_speed(0.0);
    let sigma = 0.25;
    let path = NoisePath::new(4, 3, 1e-3, 20.0).unwrap();
    let scaled = rescale_noise(&path, 0.0, sigma).unwrap();
    let start = TorusEnsemble::new(vec![0.1, 0.6]);
    let steps = 20_000;
    let (a, _) = simulate_steps(&model, sigma, &start, &path, steps, steps, Scheme::ItoEuler).unwrap();
    let (b, _) = simulate_steps(&model, 1.0, &start, &scaled, steps, steps, Scheme::ItoEuler).unwrap();
    for (x, y) in a.lifts.iter().zip(&b.lifts) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
    assert!((scaled.horizon() - sigma * sigma * path.horizon()).abs() < 1e-12);
}

fn rotated_discrepancy(fine_dt: f64, factor: u64, seed: u64) -> f64 {
    let model = common::homogeneous_model(2);
    let free = model.with_speed(0.0);
    let (sigma, horizon) = (0.5, 4.0);
    let fine = NoisePath::new(seed, 2, fine_dt, horizon).unwrap();
    let path = fine.coarsened(factor).unwrap();
    let scaled = rescale_noise(&fine, model.speed, sigma).unwrap().coarsened(factor).unwrap();
    let start = TorusEnsemble::new(vec![0.2]);
    let steps = steps_for(&path, horizon).unwrap();
    let (a, _) = simulate_steps(&model, sigma, &start, &path, steps, steps, Scheme::ItoEuler).unwrap();
    let (b, _) = simulate_steps(&free, 1.0, &start, &scaled, steps, steps, Scheme::ItoEuler).unwrap();
    (a.lifts[0] - model.speed * horizon - b.lifts[0]).abs()
}

#[test]
fn rotated_time_change_converges() {
    let fine = 1.0 / 4096.0;
    let errs: Vec<f64> = [64u64, 16, 4]
        .iter()
        .map(|&f| {
            let e: Vec<f64> = (0..24).map(|s| rotated_discrepancy(fine, f, 100 + s).powi(2)).collect();
            stats::mean(&e).sqrt()
        })
        .collect();
    // two halvings per level, order ≥ 0.5 means at least a factor 2 per level
    assert!(errs[1] < errs[0] / 1.6 && errs[2] < errs[1] / 1.6, "{errs:?}");
}

#[test]
fn euler_strong_order() {
    let model = common::asymmetric_model(2);
    let start = TorusEnsemble::new(vec![0.3]);
    let n = 2 * 8192;
    let mut errs = Vec::new();
    for f in [64u64, 16, 4] {
        let mut acc = 0.0;
        for seed in 0..16 {
            let p = NoisePath::new(300 + seed, 2, 1.0 / 8192.0, 2.0).unwrap();
            let (r, _) = simulate_steps(&model, 1.0, &start, &p, n, n, Scheme::ItoEuler).unwrap();
            let c = p.coarsened(f).unwrap();
            let (e, _) = simulate_steps(&model, 1.0, &start, &c, n / f, n / f, Scheme::ItoEuler).unwrap();
            acc += (r.lifts[0] - e.lifts[0]).powi(2);
        }
        errs.push((acc / 16.0).sqrt());
    }
    let rate = (errs[0] / errs[2]).log2() / 4.0;
    assert!(rate >= 0.45, "errors {errs:?}, rate {rate}");
}

#[test]
fn torus_distance_is_symmetric_and_bounded() {
    assert!((torus_distance(0.05, 0.95) - 0.1).abs() < 1e-15);
    assert!((torus_distance(2.3, -0.3) - 0.4).abs() < 1e-12);
    assert!(torus_distance(0.0, 0.5) <= 0.5);
}

#[test]
fn squeeze_without_gain_is_constant() {
    let model = common::asymmetric_model(2);
    let opts = SqueezeOptions { steps_per_unit: 100, ..Default::default() };
    let r = controlled_squeeze(&model, 0.1, 0.0, &[0.2], &opts).unwrap();
    for s in &r.states {
        assert_eq!(s, &r.initial);
    }
}

#[test]
fn squeeze_matches_exact_flow() {
    let model = common::asymmetric_model(2);
    let opts = SqueezeOptions { steps_per_unit: 4000, record_every: 4000, ..Default::default() };
    let gain = 1.5;
    let r = controlled_squeeze(&model, 0.1, gain, &[0.45, -0.2], &opts).unwrap();
    assert!(r.control_residual < 1e-10);
    for (i, &x0) in r.initial.iter().enumerate() {
        let x1 = squeeze_exact(x0, gain, 1.0, 0.0, 1.0);
        assert!((r.states[1][i] - x1).abs() < 1e-9, "{} vs {x1}", r.states[1][i]);
    }
    assert!(r.reversal_error.0 < 1e-9 && r.reversal_error.1 < 1e-9, "{:?}", r.reversal_error);
}

#[test]
fn squeeze_epsilon_decreases_with_gain() {
    let model = common::asymmetric_model(2);
    let opts = SqueezeOptions { steps_per_unit: 4000, record_every: 4000, ..Default::default() };
    let eps: Vec<f64> = [0.2, 0.5, 1.0, 2.0]
        .iter()
        .map(|&g| controlled_squeeze(&model, 0.1, g, &[], &opts).unwrap().epsilon())
        .collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "{eps:?}");
    let strong = controlled_squeeze(&model, 0.1, 2.0, &[], &opts).unwrap();
    assert!(strong.holds(0.05));
}
