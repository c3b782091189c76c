//! Command implementations. Every command writes into one directory and ends with `provenance.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::config::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::measure::{generator_gap, lyapunov_analytic, stationary_density};
use crate::model::ModelSpec;
use crate::pulse::{develop_pulse, PulseSolution};
use crate::pulse_io::{header, read_pulse, write_pulse};
use crate::reduction::{
    compute_pairings, fourier_pairings, nondegeneracy_check, read_reduced, write_reduced, NoiseSpec, ReducedModel,
};
use crate::spde::{reduced_vs_full, two_pulse_ensemble};
use crate::torus::squeeze::controlled_squeeze;
use crate::torus::sync::{replica_seed, sync_scaling_scan};
use crate::torus::{simulate_steps, tangent_lyapunov_mc, NoisePath, Scheme, TorusEnsemble};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

pub const PROVENANCE: &str = "provenance.json";
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pulse,
    Coeffs,
    ReducedSim,
    Lyapunov,
    Density,
    SyncScan,
    SpdeTwoPulse,
    ReducedVsFull,
    SqueezeDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pulse => "pulse",
            Command::Coeffs => "coeffs",
            Command::ReducedSim => "reduced-sim",
            Command::Lyapunov => "lyapunov",
            Command::Density => "density",
            Command::SyncScan => "sync-scan",
            Command::SpdeTwoPulse => "spde-two-pulse",
            Command::ReducedVsFull => "reduced-vs-full",
            Command::SqueezeDemo => "squeeze-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedEntry {
    pub purpose: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Partial,
    Failed,
}

/// What a finished command reports back to the runner.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub metrics: Value,
    pub seeds: Vec<SeedEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub package: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub seeds: Vec<SeedEntry>,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub artifacts: Vec<String>,
    pub metrics: Value,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Nondegeneracy(_) | Error::Format(_) | Error::Json(_) => EXIT_VALIDATION,
        Error::Mode { source, .. } => exit_code(source),
        _ => EXIT_NUMERICAL,
    }
}

/// Runs `command` into `dir`. Errors from the command itself are recorded in the
/// provenance and failure marker; only failures to write those are returned.
pub fn run(command: Command, cfg: &ExperimentConfig, dir: &Path) -> Result<Provenance> {
    fs::create_dir_all(dir)?;
    let marker = dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let start = Instant::now();
    let mut out = Output::new(dir);
    let result = cfg.validate().and_then(|_| dispatch(command, cfg, &mut out));
    let (status, code, message, metrics, seeds) = match result {
        Ok(o) => {
            let code = if o.status == Status::Ok { EXIT_OK } else { EXIT_PARTIAL };
            (o.status, code, None, o.metrics, o.seeds)
        }
        Err(e) => (Status::Failed, exit_code(&e), Some(e.to_string()), Value::Null, out.seeds.clone()),
    };
    if let Some(m) = &message {
        fs::write(&marker, format!("{m}\n"))?;
    }
    let prov = Provenance {
        command: command.name().into(),
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        seeds,
        status,
        exit_code: code,
        message,
        artifacts: out.files.clone(),
        metrics,
    };
    fs::write(dir.join(PROVENANCE), serde_json::to_string_pretty(&prov)? + "\n")?;
    Ok(prov)
}

fn dispatch(command: Command, cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    match command {
        Command::Pulse => cmd_pulse(cfg, out),
        Command::Coeffs => cmd_coeffs(cfg, out),
        Command::ReducedSim => cmd_reduced_sim(cfg, out),
        Command::Lyapunov => cmd_lyapunov(cfg, out),
        Command::Density => cmd_density(cfg, out),
        Command::SyncScan => cmd_sync_scan(cfg, out),
        Command::SpdeTwoPulse => cmd_spde_two_pulse(cfg, out),
        Command::ReducedVsFull => cmd_reduced_vs_full(cfg, out),
        Command::SqueezeDemo => cmd_squeeze_demo(cfg, out),
    }
}

/// Artifact writer that remembers what it wrote.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
    seeds: Vec<SeedEntry>,
}

impl Output {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            seeds: Vec::new(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn seed(&mut self, purpose: impl Into<String>, seed: u64) {
        self.seeds.push(SeedEntry {
            purpose: purpose.into(),
            seed,
        });
    }

    fn finish(&self, status: Status, metrics: Value) -> Outcome {
        Outcome {
            status,
            metrics,
            seeds: self.seeds.clone(),
        }
    }
}

/// Whitespace-separated columns with a `#` header line.
struct Table {
    body: String,
}

impl Table {
    fn new(columns: &[String]) -> Self {
        Self {
            body: format!("# {}\n", columns.join(" ")),
        }
    }

    fn row(&mut self, cells: &[Cell]) {
        let mut first = true;
        for c in cells {
            if !first {
                self.body.push(' ');
            }
            first = false;
            match c {
                Cell::F(v) => write!(self.body, "{v:e}").ok(),
                Cell::I(v) => write!(self.body, "{v}").ok(),
            };
        }
        self.body.push('\n');
    }
}

enum Cell {
    F(f64),
    I(u64),
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn load_pulse(cfg: &ExperimentConfig, model: &ModelSpec, out: &mut Output) -> Result<PulseSolution> {
    match &cfg.pulse.file {
        Some(p) => {
            let pulse = read_pulse(p)?;
            if pulse.grid() != cfg.grid()? {
                return Err(invalid("pulse.file: grid does not match the grid section"));
            }
            Ok(pulse)
        }
        None => {
            let pulse = develop_pulse(model, cfg.grid()?, cfg.pulse.settle, &cfg.pulse.options())?;
            write_pulse(out.path("pulse.dat"), &pulse)?;
            Ok(pulse)
        }
    }
}

/// Reduced model from `reduced.file`, rebuilt from its pairings when `noise.alpha` is set.
fn load_reduced(cfg: &ExperimentConfig) -> Result<ReducedModel> {
    let file = cfg
        .reduced
        .file
        .as_ref()
        .ok_or_else(|| invalid("reduced.file: required for this command (write one with `coeffs`)"))?;
    let stored = read_reduced(file)?;
    let model = if cfg.noise.alpha.is_empty() {
        stored
    } else {
        let pairings = stored
            .pairings
            .as_ref()
            .ok_or_else(|| invalid("noise.alpha: the reduced file carries no pairings to rebuild from"))?;
        if pairings.truncation != cfg.noise.truncation {
            return Err(invalid(format!(
                "noise.truncation: {} does not match the reduced file ({})",
                cfg.noise.truncation, pairings.truncation
            )));
        }
        ReducedModel::build(stored.speed, &cfg.noise.build()?, pairings)?
    };
    model.require_nondegenerate()?;
    Ok(model)
}

/// Noise table consistent with `reduced`, at the configured `σ`.
fn reduced_noise(cfg: &ExperimentConfig, reduced: &ReducedModel) -> Result<NoiseSpec> {
    match (&reduced.noise, cfg.noise.alpha.is_empty()) {
        (Some(n), true) => n.with_sigma(cfg.noise.sigma),
        _ => cfg.noise.build(),
    }
}

fn cmd_pulse(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let model = cfg.model.build()?;
    let pulse = develop_pulse(&model, cfg.grid()?, cfg.pulse.settle, &cfg.pulse.options())?;
    write_pulse(out.path("pulse.dat"), &pulse)?;
    let h = header(&pulse);
    out.json("pulse_summary.json", &h)?;
    Ok(out.finish(Status::Ok, serde_json::to_value(&h)?))
}

fn cmd_coeffs(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let model = cfg.model.build()?;
    let pulse = load_pulse(cfg, &model, out)?;
    let noise = cfg.noise.build()?;
    let pairings = compute_pairings(
        &pulse,
        &model,
        cfg.noise.truncation,
        cfg.isochron.fd_step,
        cfg.isochron.options(),
    )?;
    out.json("pairings.json", &pairings)?;
    let reduced = ReducedModel::build(pulse.speed(), &noise, &pairings)?;
    write_reduced(out.path("reduced.json"), &reduced)?;
    let kk = reduced.truncation as i32;
    let mut names = cols(&["x", "a", "a_prime", "strat_drift"]);
    names.extend((-kk..=kk).map(|k| format!("b{k}")));
    let mut t = Table::new(&names);
    let samples = 256;
    for i in 0..samples {
        let x = i as f64 / samples as f64;
        let mut row = vec![
            Cell::F(x),
            Cell::F(reduced.a.eval(x)),
            Cell::F(reduced.a_prime.eval(x)),
            Cell::F(reduced.strat_drift.eval(x)),
        ];
        row.extend(reduced.b.iter().map(|b| Cell::F(b.eval(x))));
        t.row(&row);
    }
    out.text("coefficients.dat", &t.body)?;
    let nd = nondegeneracy_check(&noise, &pairings);
    Ok(out.finish(
        Status::Ok,
        json!({
            "speed": pulse.speed(),
            "pulse_residual": pulse.residual(),
            "truncation": reduced.truncation,
            "c": pairings.c,
            "d0": pairings.d0,
            "q0": pairings.q0,
            "drift_mean": reduced.a.mean,
            "nondegeneracy": nd,
        }),
    ))
}

fn cmd_reduced_sim(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let reduced = load_reduced(cfg)?;
    let sigma = cfg.noise.sigma;
    let sim = &cfg.sim;
    let dt = sim.dt.unwrap_or_else(|| reduced.suggested_dt(sigma, sim.dt_cap));
    out.seed("shared noise path", sim.seed);
    let path = NoisePath::new(sim.seed, reduced.truncation, dt, sim.horizon)?;
    let ens = if sim.tangent {
        TorusEnsemble::with_tangent(sim.x0.clone())
    } else {
        TorusEnsemble::new(sim.x0.clone())
    };
    let (end, traj) = simulate_steps(&reduced, sigma, &ens, &path, path.steps(), sim.record_stride.max(1), Scheme::ItoEuler)?;
    let m = sim.x0.len();
    let mut names = cols(&["step", "t"]);
    names.extend((1..=m).map(|i| format!("x{i}")));
    if sim.tangent {
        names.extend((1..=m).map(|i| format!("l{i}")));
    }
    let mut t = Table::new(&names);
    for r in 0..traj.steps.len() {
        let mut row = vec![Cell::I(traj.steps[r]), Cell::F(traj.times[r])];
        row.extend(traj.positions(r).into_iter().map(Cell::F));
        if sim.tangent {
            row.extend(traj.log_tangent[r].iter().map(|&l| Cell::F(l)));
        }
        t.row(&row);
    }
    out.text("trajectory.dat", &t.body)?;
    let finals = end.positions();
    let spread = finals
        .iter()
        .flat_map(|&x| finals.iter().map(move |&y| crate::torus::torus_distance(x, y)))
        .fold(0.0, f64::max);
    Ok(out.finish(
        Status::Ok,
        json!({
            "sigma": sigma,
            "dt": dt,
            "steps": path.steps(),
            "final_time": end.t,
            "final_positions": finals,
            "final_max_pairwise_distance": spread,
        }),
    ))
}

fn density_table(x: &[f64], p: &[f64]) -> String {
    let mut t = Table::new(&cols(&["x", "p"]));
    for (xi, pi) in x.iter().zip(p) {
        t.row(&[Cell::F(*xi), Cell::F(*pi)]);
    }
    t.body
}

fn cmd_lyapunov(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let reduced = load_reduced(cfg)?;
    let sigma = cfg.noise.sigma;
    if !(sigma > 0.0) {
        return Err(invalid("noise.sigma: must be positive"));
    }
    let ly = &cfg.lyapunov;
    let dt = reduced.suggested_dt(sigma, ly.dt_cap);
    let steps = (ly.length_factor / (sigma * sigma) / dt).ceil();
    let duration = steps * dt;
    let burn = ((ly.burn_in_fraction * duration) / dt).round() * dt;
    out.seed("tangent Monte Carlo path", ly.seed);
    let path = NoisePath::new(ly.seed, reduced.truncation, dt, duration)?;
    let mc = tangent_lyapunov_mc(&reduced, sigma, ly.x0, &path, duration, burn)?;
    let density = stationary_density(&reduced, sigma, cfg.density.points)?;
    out.text("density.dat", &density_table(&density.x, &density.p))?;
    let pair = lyapunov_analytic(&reduced, &density)?;
    let spectrum = generator_gap(&reduced, sigma, cfg.density.gap_points)?;
    let z_a = (mc.lambda - pair.lambda_a) / mc.stderr;
    let z_b = (mc.lambda - pair.lambda_b) / mc.stderr;
    let report = json!({
        "sigma": sigma,
        "dt": dt,
        "monte_carlo": mc,
        "lambda_a": pair.lambda_a,
        "lambda_b": pair.lambda_b,
        "analytic_relative_difference": pair.relative_difference(),
        "z_monte_carlo_vs_a": z_a,
        "z_monte_carlo_vs_b": z_b,
        "all_negative": mc.lambda < 0.0 && pair.lambda_a < 0.0 && pair.lambda_b < 0.0,
        "consistent": z_a.abs() <= 3.0 && z_b.abs() <= 3.0,
        "generator_gap": spectrum.gap,
        "density_min": density.min(),
        "density_residual": density.residual,
    });
    out.json("lyapunov.json", &report)?;
    Ok(out.finish(Status::Ok, report))
}

fn cmd_density(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let reduced = load_reduced(cfg)?;
    let sigma = cfg.noise.sigma;
    let density = stationary_density(&reduced, sigma, cfg.density.points)?;
    out.text("density.dat", &density_table(&density.x, &density.p))?;
    let spectrum = generator_gap(&reduced, sigma, cfg.density.gap_points)?;
    let mut t = Table::new(&cols(&["re", "im"]));
    for &(re, im) in &spectrum.eigenvalues {
        t.row(&[Cell::F(re), Cell::F(im)]);
    }
    out.text("spectrum.dat", &t.body)?;
    let pair = lyapunov_analytic(&reduced, &density)?;
    let report = json!({
        "sigma": sigma,
        "points": density.points(),
        "integral": density.integral,
        "min": density.min(),
        "residual": density.residual,
        "singular_ratio": density.singular_ratio,
        "generator_gap": spectrum.gap,
        "lambda_a": pair.lambda_a,
        "lambda_b": pair.lambda_b,
    });
    out.json("density_summary.json", &report)?;
    Ok(out.finish(Status::Ok, report))
}

fn cmd_sync_scan(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let reduced = load_reduced(cfg)?;
    let sc = &cfg.sync;
    sc.validate().map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("sync: {m}")),
        other => other,
    })?;
    for rep in 0..sc.reps {
        out.seed(format!("replica {rep} (shared across sigmas)"), replica_seed(sc.seed, rep));
    }
    let scan = sync_scaling_scan(&reduced, sc)?;
    let mut t = Table::new(&cols(&["sigma", "rep", "dt", "time", "censored"]));
    for row in &scan.rows {
        for (rep, time) in row.times.iter().enumerate() {
            t.row(&[
                Cell::F(row.sigma),
                Cell::I(rep as u64),
                Cell::F(row.dt),
                Cell::F(time.unwrap_or(f64::NAN)),
                Cell::I(time.is_none() as u64),
            ]);
        }
    }
    out.text("sync_times.dat", &t.body)?;
    let rows: Vec<Value> = scan
        .rows
        .iter()
        .map(|r| {
            json!({
                "sigma": r.sigma,
                "dt": r.dt,
                "horizon": r.horizon,
                "median": r.median,
                "censored": r.censored,
                "reps": r.reps,
                "unreliable": r.unreliable,
                "order_violations": r.order_violations,
            })
        })
        .collect();
    let report = json!({ "rows": rows, "slope": scan.slope, "intercept": scan.intercept });
    out.json("sync_summary.json", &report)?;
    let partial = scan.slope.is_none() || scan.rows.iter().any(|r| r.unreliable);
    Ok(out.finish(if partial { Status::Partial } else { Status::Ok }, report))
}

fn cmd_spde_two_pulse(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let model = cfg.model.build()?;
    let noise = cfg.noise.build()?;
    let pulse = load_pulse(cfg, &model, out)?;
    let nd = nondegeneracy_check(&noise, &fourier_pairings(&pulse, &model, noise.truncation())?);
    if !nd.passed {
        return Err(Error::Nondegeneracy(nd.message));
    }
    let sp = &cfg.spde;
    let sigma = noise.sigma();
    let run_cfg = sp.run_config(sigma, sp.seed)?;
    for i in 0..sp.seeds as u64 {
        out.seed(format!("replica {i}"), sp.seed + i);
    }
    let summary = two_pulse_ensemble(sp.x0, sp.y0, &model, &pulse, &noise, sigma, &run_cfg, sp.seeds)?;
    let mut t = Table::new(&cols(&[
        "seed",
        "t",
        "phase_u",
        "phase_v",
        "tube_u",
        "tube_v",
        "distance",
        "discrepancy",
    ]));
    for r in &summary.reports {
        for c in &r.records {
            t.row(&[
                Cell::I(r.seed),
                Cell::F(c.t),
                Cell::F(c.phase_u),
                Cell::F(c.phase_v),
                Cell::F(c.tube_u),
                Cell::F(c.tube_v),
                Cell::F(c.distance),
                Cell::F(c.discrepancy),
            ]);
        }
    }
    out.text("two_pulse.dat", &t.body)?;
    let seeds: Vec<Value> = summary
        .reports
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "final_distance": r.final_distance(),
                "max_tube": r.max_tube(),
                "discrepancy_reduction": r.discrepancy_reduction(),
                "failure": r.failure,
            })
        })
        .collect();
    let report = json!({
        "sigma": sigma,
        "observation_time": run_cfg.horizon,
        "median_final_distance": summary.median_final_distance,
        "max_tube": summary.max_tube,
        "max_tube_over_sigma": summary.max_tube / sigma,
        "median_discrepancy_reduction": summary.median_discrepancy_reduction,
        "censored": summary.censored,
        "runs": seeds,
    });
    out.json("two_pulse_summary.json", &report)?;
    let status = if summary.censored > 0 { Status::Partial } else { Status::Ok };
    Ok(out.finish(status, report))
}

fn cmd_reduced_vs_full(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let model = cfg.model.build()?;
    let reduced = load_reduced(cfg)?;
    let noise = reduced_noise(cfg, &reduced)?;
    let pulse = load_pulse(cfg, &model, out)?;
    let sp = &cfg.spde;
    let sigma = noise.sigma();
    let run_cfg = sp.run_config(sigma, sp.seed)?;
    out.seed("shared increments", sp.seed);
    let cmp = reduced_vs_full(sp.x0, &model, &pulse, &noise, &reduced, sigma, &run_cfg)?;
    let mut t = Table::new(&cols(&["t", "phase", "gamma", "tube", "isochron"]));
    for c in &cmp.run.checkpoints {
        t.row(&[
            Cell::F(c.t),
            Cell::F(c.phase),
            Cell::F(c.gamma.unwrap_or(f64::NAN)),
            Cell::F(c.tube),
            Cell::F(c.isochron.unwrap_or(f64::NAN)),
        ]);
    }
    out.text("checkpoints.dat", &t.body)?;
    let report = json!({
        "sigma": sigma,
        "horizon": run_cfg.horizon,
        "max_phase_error": cmp.max_phase_error,
        "max_tube": cmp.run.max_tube(),
        "tube_exit": cmp.tube_exit,
        "tube_multiple": cmp.tube_multiple,
        "failure": cmp.run.failure,
    });
    out.json("comparison_summary.json", &report)?;
    let status = if cmp.run.failure.is_some() { Status::Partial } else { Status::Ok };
    Ok(out.finish(status, report))
}

fn cmd_squeeze_demo(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let reduced = load_reduced(cfg)?;
    let sigma = cfg.noise.sigma;
    let sq = &cfg.squeeze;
    let opts = sq.options();
    let mut gains = Vec::new();
    for (i, &gain) in sq.gains.iter().enumerate() {
        let rep = controlled_squeeze(&reduced, sigma, gain, &sq.extra, &opts)?;
        let mut names = cols(&["t"]);
        names.extend((1..=rep.initial.len()).map(|j| format!("x{j}")));
        let mut t = Table::new(&names);
        for (time, state) in rep.times.iter().zip(&rep.states) {
            let mut row = vec![Cell::F(*time)];
            row.extend(state.iter().map(|&x| Cell::F(x)));
            t.row(&row);
        }
        out.text(&format!("squeeze_{i:02}.dat"), &t.body)?;
        gains.push(json!({
            "gain": gain,
            "epsilon": rep.epsilon(),
            "holds": rep.holds(sq.epsilon),
            "control_residual": rep.control_residual,
            "reversal_error": rep.reversal_error,
            "controls": rep.controls,
            "inequalities": rep.inequalities,
        }));
    }
    let report = json!({ "sigma": sigma, "target_epsilon": sq.epsilon, "gains": gains });
    out.json("squeeze_summary.json", &report)?;
    Ok(out.finish(Status::Ok, report))
}
