//! Noise time change: the σ-driven reduced SDE against the σ-free one on the rotated,
//! rescaled path, for decreasing step size.

use pulsesync::reduction::read_reduced;
use pulsesync::torus::sde::steps_for;
use pulsesync::torus::{rescale_noise, simulate_steps, NoisePath, Scheme, TorusEnsemble};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: time_change REDUCED.json [SIGMA] [HORIZON]")?;
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let horizon: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);
    let model = read_reduced(&file)?;
    let free = model.with_speed(0.0);
    let fine_dt = 1.0 / 4096.0;
    let start = TorusEnsemble::new(vec![0.2]);
    for factor in [64u64, 32, 16, 8, 4] {
        let mut acc = 0.0;
        let seeds = 32;
        for seed in 0..seeds {
            let fine = NoisePath::new(seed, model.truncation, fine_dt, horizon)?;
            let path = fine.coarsened(factor)?;
            let scaled = rescale_noise(&fine, model.speed, sigma)?.coarsened(factor)?;
            let steps = steps_for(&path, horizon)?;
            let (a, _) = simulate_steps(&model, sigma, &start, &path, steps, steps, Scheme::ItoEuler)?;
            let (b, _) = simulate_steps(&free, 1.0, &start, &scaled, steps, steps, Scheme::ItoEuler)?;
            acc += (a.lifts[0] - model.speed * horizon - b.lifts[0]).powi(2);
        }
        println!("dt {:.3e}  rms discrepancy {:.3e}", fine_dt * factor as f64, (acc / seeds as f64).sqrt());
    }
    Ok(())
}

