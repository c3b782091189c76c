//! Two pulses driven by one shared noise realization, starting at different positions.

use std::time::Instant;

use pulsesync::pulse::{develop_pulse, PulseOptions};
use pulsesync::reduction::NoiseSpec;
use pulsesync::spde::{two_pulse_experiment, SpdeConfig};
use pulsesync::{FhnParams, Grid1D, ModelSpec, NoiseShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut next = |d: f64| -> Result<f64, Box<dyn std::error::Error>> {
        Ok(args.next().map(|s| s.parse()).transpose()?.unwrap_or(d))
    };
    let sigma = next(0.1)?;
    let factor = next(50.0)?;
    let scale = next(1.0)?;
    let dt = next(0.01)?;
    let seed = next(1.0)? as u64;
    let model = ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0]))?;
    let start = Instant::now();
    let pulse = develop_pulse(&model, Grid1D::new(16, 1024)?, 400.0, &PulseOptions::default())?;
    let noise = NoiseSpec::homogeneous(3, sigma, |k| scale * if k == 0 { 0.1 } else { 0.3 / (k * k) as f64 })?;
    let cfg = SpdeConfig {
        dt,
        horizon: factor / (sigma * sigma),
        seed,
        substeps: 1,
        ..Default::default()
    };
    let report = two_pulse_experiment(0.0, 0.3, &model, &pulse, &noise, sigma, &cfg)?;
    println!("{:>9} {:>10} {:>10} {:>8} {:>8} {:>9} {:>11}", "t", "x_u", "x_v", "tube_u", "tube_v", "dist", "discrep");
    let stride = (report.records.len() / 25).max(1);
    for r in report.records.iter().step_by(stride) {
        println!(
            "{:>9.1} {:>10.4} {:>10.4} {:>8.4} {:>8.4} {:>9.2e} {:>11.3e}",
            r.t, r.phase_u, r.phase_v, r.tube_u, r.tube_v, r.distance, r.discrepancy
        );
    }
    println!("max tube        {:.4} ({:.2}σ)", report.max_tube(), report.max_tube() / sigma);
    println!("final distance  {:?}", report.final_distance());
    println!("discrepancy     reduced {:.3e}x", report.discrepancy_reduction());
    if let Some(f) = &report.failure {
        println!("failure         {f}");
    }
    println!("elapsed         {:.1?}", start.elapsed());
    Ok(())
}
