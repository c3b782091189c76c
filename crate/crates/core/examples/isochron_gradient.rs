//! Compares finite differences of the isochron map with the adjoint pairing `⟨ψ, v⟩`.

use pulsesync::isochron::{Isochron, IsochronOptions};
use pulsesync::pulse::{develop_pulse, PulseOptions};
use pulsesync::{FhnParams, FieldState, Grid1D, ModelSpec, NoiseShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth random perturbation localized around the pulse.
fn random_direction(pulse_centre: f64, grid: Grid1D, rng: &mut impl Rng) -> FieldState {
    let l = grid.length();
    let coeffs: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..4.0)))
        .collect();
    let shift = rng.random_range(-2.0..2.0);
    let v = FieldState::from_fn(grid, 2, |c, x| {
        let mut d = x - pulse_centre - shift;
        d -= l * (d / l).round();
        let envelope = (-d * d / 2.0).exp();
        let (a, b, w) = coeffs[c * 3 % 6];
        envelope * (a * (w * d).cos() + b * (w * d).sin()) * if c == 0 { 1.0 } else { 0.3 }
    });
    let n = v.norm();
    v.scaled(1.0 / n)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0]))?;
    let grid = Grid1D::new(16, 1024)?;
    let pulse = develop_pulse(&model, grid, 400.0, &PulseOptions { spectrum: false, ..Default::default() })?;
    let centre = grid.length() / 2.0;
    let t_values: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let t_values = if t_values.is_empty() { vec![300.0] } else { t_values };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dirs: Vec<FieldState> = (0..10).map(|_| random_direction(centre, grid, &mut rng)).collect();
    for t in t_values {
        let iso = Isochron::new(&pulse, &model, IsochronOptions { t_relax: t, ..Default::default() })?;
        let start = std::time::Instant::now();
        let mut worst: f64 = 0.0;
        for v in &dirs {
            let fd = iso.first_variation(v, 1e-3)?;
            let exact = pulse.adjoint().dot(v);
            let rel = (fd - exact).abs() / exact.abs();
            worst = worst.max(rel);
            println!("T = {t:6.1}  fd = {fd:+.6e}  <psi,v> = {exact:+.6e}  rel = {rel:.2e}");
        }
        println!("T = {t:6.1}  worst relative error {worst:.3e}  ({:.1?})", start.elapsed());
    }
    Ok(())
}
