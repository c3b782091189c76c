//! Stationary density of a reduced model from the generator nullspace, checked against the
//! flux quadrature.

use pulsesync::measure::{flux_density, stationary_density};
use pulsesync::reduction::{read_reduced, NoiseSpec, ReducedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: stationary_density REDUCED.json [SIGMA]")?;
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let stored = read_reduced(&file)?;
    let pairings = stored.pairings.clone().ok_or("file has no pairing table")?;
    let k = stored.truncation;
    for (label, noise) in [
        ("homogeneous", NoiseSpec::default_table(k, sigma)?),
        ("asymmetric", NoiseSpec::from_fn(k, sigma, |m| if m < 0 { 0.05 } else { 0.2 })?),
    ] {
        let model = ReducedModel::build(stored.speed, &noise, &pairings)?;
        let d = stationary_density(&model, sigma, 512)?;
        let flux = flux_density(&model, sigma, 512)?;
        let gap = d.p.iter().zip(&flux).map(|(a, (_, b))| (a - b).abs()).fold(0.0, f64::max);
        let max = d.p.iter().cloned().fold(f64::MIN, f64::max);
        println!(
            "{label:<12} min {:.6} max {max:.6} integral {:.15} residual {:.2e} |p - flux| {gap:.2e}",
            d.min(),
            d.integral,
            d.residual
        );
    }
    Ok(())
}
