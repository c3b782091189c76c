//! Full SPDE phase against the reduced phase SDE driven by the same increments.

use std::time::Instant;

use pulsesync::pulse::{develop_pulse, PulseOptions};
use pulsesync::reduction::read_reduced;
use pulsesync::spde::{reduced_vs_full, SpdeConfig};
use pulsesync::{FhnParams, Grid1D, ModelSpec, NoiseShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: reduced_vs_full REDUCED.json [SIGMA] [HORIZON] [SEED]")?;
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let horizon: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0 / (sigma * sigma));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let reduced = read_reduced(&file)?;
    let noise = reduced.noise.clone().ok_or("file has no noise table")?.with_sigma(sigma)?;
    let model = ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0]))?;
    let start = Instant::now();
    let pulse = develop_pulse(&model, Grid1D::new(16, 1024)?, 400.0, &PulseOptions::default())?;
    let cfg = SpdeConfig {
        horizon,
        seed,
        ..Default::default()
    };
    let cmp = reduced_vs_full(0.0, &model, &pulse, &noise, &reduced, sigma, &cfg)?;
    println!("{:>10} {:>14} {:>14} {:>12} {:>10}", "t", "phase", "gamma", "error", "tube");
    let stride = (cmp.run.checkpoints.len() / 20).max(1);
    for c in cmp.run.checkpoints.iter().step_by(stride) {
        let g = c.gamma.unwrap_or(f64::NAN);
        println!("{:>10.2} {:>14.6} {:>14.6} {:>12.3e} {:>10.4}", c.t, c.phase, g, c.phase - g, c.tube);
    }
    println!("max phase error {:.4e}", cmp.max_phase_error);
    println!("tube exit       {:?} (above {}σ)", cmp.tube_exit, cmp.tube_multiple);
    if let Some(f) = &cmp.run.failure {
        println!("failure         {f}");
    }
    println!("elapsed         {:.1?}", start.elapsed());
    Ok(())
}
