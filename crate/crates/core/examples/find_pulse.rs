//! Computes the FitzHugh–Nagumo pulse and prints its spectral diagnostics.

use std::time::Instant;

use pulsesync::pulse::{develop_pulse, PulseOptions};
use pulsesync::{FhnParams, Grid1D, ModelSpec, NoiseShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0]))?;
    let points = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1024);
    let grid = Grid1D::new(16, points)?;
    let start = Instant::now();
    let pulse = develop_pulse(&model, grid, 400.0, &PulseOptions::default())?;
    let d = pulse.diagnostics();
    println!("grid          L = {}, N = {}", grid.length(), grid.points());
    println!("speed         {:.12}", pulse.speed());
    println!("residual      {:.3e} after {} Newton steps", pulse.residual(), pulse.iterations());
    println!("adjoint res   {:.3e}", pulse.adjoint_residual());
    println!("zero eig      {:.3e} (count {:?})", d.zero_eigenvalue, d.zero_count);
    println!("second |eig|  {:.4e}", d.second_smallest);
    println!("gap           {:.6}", d.gap);
    println!("null cosine   1 - {:.3e}", 1.0 - d.null_cosine);
    println!("psi . u'      {:.15}", pulse.adjoint().dot(pulse.derivative()));
    println!("elapsed       {:.2?}", start.elapsed());
    Ok(())
}
