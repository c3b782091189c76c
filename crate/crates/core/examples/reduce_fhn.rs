//! Builds the reduced phase model of the FitzHugh–Nagumo pulse and writes it as JSON.

use std::time::Instant;

use pulsesync::isochron::IsochronOptions;
use pulsesync::pulse::{develop_pulse, PulseOptions};
use pulsesync::reduction::{compute_pairings, write_reduced, NoiseSpec, ReducedModel};
use pulsesync::{FhnParams, Grid1D, ModelSpec, NoiseShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "fhn_reduced.json".into());
    let truncation: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let model = ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0]))?;
    let start = Instant::now();
    let pulse = develop_pulse(&model, Grid1D::new(16, 1024)?, 400.0, &PulseOptions::default())?;
    println!("pulse         c = {:.10} ({:.1?})", pulse.speed(), start.elapsed());
    let pairings = compute_pairings(&pulse, &model, truncation, 1e-3, IsochronOptions::default())?;
    println!("pairings      {:.1?}", start.elapsed());
    let noise = NoiseSpec::default_table(truncation, 0.1)?;
    let reduced = ReducedModel::build(pulse.speed(), &noise, &pairings)?;
    let report = reduced.nondegeneracy()?;
    println!("nondegenerate {}", report.passed);
    for k in -(truncation as i32)..=truncation as i32 {
        println!("c[{k:+}] = {:+.6e}", pairings.c(k));
    }
    println!("d0 = {:+.6e}  q0 = {:+.6e}", pairings.d0, pairings.q0);
    for (k, q) in pairings.q.iter().enumerate() {
        println!("Q[{}] = ({:+.4e}, {:+.4e}, {:+.4e})", k + 1, q.pp, q.pm, q.mm);
    }
    println!("a  = {:?}", reduced.a);
    write_reduced(&out, &reduced)?;
    println!("wrote {out}");
    Ok(())
}
