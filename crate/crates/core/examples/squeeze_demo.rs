//! Controlled squeezing of three phases into one shrinking arc for increasing gain.

use pulsesync::reduction::read_reduced;
use pulsesync::torus::{controlled_squeeze, SqueezeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: squeeze_demo REDUCED.json [SIGMA]")?;
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let model = read_reduced(&file)?;
    let opts = SqueezeOptions::default();
    for gain in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = controlled_squeeze(&model, sigma, gain, &[0.2, -0.4], &opts)?;
        println!(
            "gain {gain:<5} epsilon {:.3e} holds(0.05) {:<5} reversal {:.1e}",
            r.epsilon(),
            r.holds(0.05),
            r.reversal_error.0
        );
    }
    Ok(())
}
