//! Stationary histograms of the Itô–Euler and Stratonovich–Heun schemes on one shared path.

use pulsesync::measure::stationary_density;
use pulsesync::reduction::{NoiseSpec, PairingSet, QBlock, ReducedModel};
use pulsesync::stats::{ks_against, ks_statistic};
use pulsesync::torus::{simulate_steps, NoisePath, Scheme, TorusEnsemble};

fn model(k: usize) -> ReducedModel {
    let pairings = PairingSet {
        truncation: k,
        c: [-0.0034231, 0.0494081, -0.5863470, 0.8234816, -0.1187044, -0.0060701, 0.00096074][3 - k..=3 + k].to_vec(),
        d0: 0.0,
        d_even: vec![0.0; k],
        d_odd: vec![0.0; k],
        q0: -3.537,
        q: [(-1.2962, -1.1378, -0.57758), (-0.15726, -0.0090587, -0.16306), (-0.079688, -4.17e-5, -0.079744)][..k]
            .iter()
            .map(|&(pp, pm, mm)| QBlock { pp, pm, mm })
            .collect(),
        source_norm_sq: 1.0,
    };
    let noise = NoiseSpec::from_fn(k, 1.0, |j| match j {
        0 => 0.1,
        j if j > 0 => 0.35 / (j * j) as f64,
        j => 0.2 / (j * j) as f64,
    })
    .unwrap();
    ReducedModel::build(0.0458253605, &noise, &pairings).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let horizon: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e5);
    let coarse: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.04);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let m = model(2);
    let exact = stationary_density(&m, sigma, 256)?;
    let levels = 4u64;
    let fine = coarse / (1u64 << (levels - 1)) as f64;
    let path = NoisePath::new(seed, m.truncation, fine, horizon)?;
    let every = 0.5;
    println!("{:>10} {:>12} {:>12} {:>12}", "dt", "KS(ito,str)", "KS(ito,p)", "KS(str,p)");
    for level in 0..levels {
        let factor = 1u64 << (levels - 1 - level);
        let p = path.coarsened(factor)?;
        let stride = (every / p.dt()).round() as u64;
        let sample = |scheme| -> Result<Vec<f64>, pulsesync::Error> {
            let (_, traj) =
                simulate_steps(&m, sigma, &TorusEnsemble::new(vec![0.0]), &p, p.steps(), stride, scheme)?;
            Ok((0..traj.steps.len()).skip(traj.steps.len() / 100).map(|r| traj.positions(r)[0]).collect())
        };
        let ito = sample(Scheme::ItoEuler)?;
        let strat = sample(Scheme::StratonovichHeun)?;
        println!(
            "{:>10.5} {:>12.4e} {:>12.4e} {:>12.4e}",
            p.dt(),
            ks_statistic(&ito, &strat),
            ks_against(&ito, |x| exact.cdf(x)),
            ks_against(&strat, |x| exact.cdf(x))
        );
    }
    Ok(())
}
