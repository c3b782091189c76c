//! Lyapunov exponent of a reduced model three ways: two quadratures of the stationary
//! density and a tangent-dynamics Monte Carlo run.

use std::time::Instant;

use pulsesync::measure::{generator_gap, lyapunov_analytic, stationary_density};
use pulsesync::reduction::{read_reduced, NoiseSpec, ReducedModel};
use pulsesync::torus::{tangent_lyapunov_mc, NoisePath};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: lyapunov_triple REDUCED.json [SIGMA] [LENGTH_FACTOR]")?;
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let factor: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e4);
    let stored = read_reduced(&file)?;
    let pairings = stored.pairings.clone().ok_or("file has no pairing table")?;
    let k = stored.truncation;
    let noise = NoiseSpec::from_fn(k, sigma, |m| match m {
        0 => 0.1,
        m if m > 0 => 0.35 / (m * m) as f64,
        m => 0.2 / (m * m) as f64,
    })?;
    let model = ReducedModel::build(stored.speed, &noise, &pairings)?;
    let start = Instant::now();
    let density = stationary_density(&model, sigma, 1024)?;
    let pair = lyapunov_analytic(&model, &density)?;
    let gap = generator_gap(&model, sigma, 128)?;
    println!("lambda_A      {:+.8e}", pair.lambda_a);
    println!("lambda_B      {:+.8e}  (rel diff {:.2e})", pair.lambda_b, pair.relative_difference());
    println!("density min   {:.4}  residual {:.2e}", density.min(), density.residual);
    println!("gap           {:.6e}  ({:.1?})", gap.gap, start.elapsed());
    let dt = model.suggested_dt(sigma, 1e-3);
    let duration = factor / (sigma * sigma);
    let path = NoisePath::new(2024, k, dt, duration)?;
    let mc = tangent_lyapunov_mc(&model, sigma, 0.0, &path, duration, 0.01 * duration)?;
    println!(
        "lambda_MC     {:+.8e} ± {:.2e}  ({:.2} stderr from lambda_B, dt {dt:e}, {:.1?})",
        mc.lambda,
        mc.stderr,
        (mc.lambda - pair.lambda_b) / mc.stderr,
        start.elapsed()
    );
    Ok(())
}
