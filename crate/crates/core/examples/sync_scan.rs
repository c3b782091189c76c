//! Median two-point synchronization time across noise strengths.

use pulsesync::reduction::read_reduced;
use pulsesync::torus::{sync_scaling_scan, SyncScanConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let file = args.next().ok_or("usage: sync_scan REDUCED.json [REPS] [SIGMA...]")?;
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let sigmas: Vec<f64> = args.map(|s| s.parse()).collect::<Result<_, _>>()?;
    let mut cfg = SyncScanConfig { reps, ..Default::default() };
    if !sigmas.is_empty() {
        cfg.sigmas = sigmas;
    }
    let model = read_reduced(&file)?;
    let start = std::time::Instant::now();
    let scan = sync_scaling_scan(&model, &cfg)?;
    for row in &scan.rows {
        println!(
            "sigma {:<6} dt {:.1e} median {:>10.2} censored {:>3}/{} order violations {}",
            row.sigma,
            row.dt,
            row.median.unwrap_or(f64::NAN),
            row.censored,
            row.reps,
            row.order_violations
        );
    }
    match scan.slope {
        Some(s) => println!("slope {s:.3} ({:.1?})", start.elapsed()),
        None => println!("slope undetermined"),
    }
    Ok(())
}
