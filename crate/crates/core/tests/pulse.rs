use std::sync::OnceLock;

use pulsesync::evolve::evolve_pde;
use pulsesync::isochron::{Isochron, IsochronOptions};
use pulsesync::phase::phase_fit;
use pulsesync::pulse::{develop_pulse, traveling_wave_residual, PulseOptions, PulseSolution};
use pulsesync::pulse_io::{pulse_from_str, pulse_to_string};
use pulsesync::{FhnParams, FieldState, Grid1D, ModelSpec, NoiseShape};

fn model() -> ModelSpec {
    ModelSpec::fitzhugh_nagumo(FhnParams::default(), NoiseShape::constant(vec![1.0, 0.0])).unwrap()
}

fn pulse() -> &'static PulseSolution {
    static PULSE: OnceLock<PulseSolution> = OnceLock::new();
    PULSE.get_or_init(|| develop_pulse(&model(), Grid1D::new(16, 1024).unwrap(), 400.0, &PulseOptions::default()).unwrap())
}

fn isochron() -> &'static Isochron {
    static ISO: OnceLock<Isochron> = OnceLock::new();
    ISO.get_or_init(|| Isochron::new(pulse(), &model(), IsochronOptions::default()).unwrap())
}

fn bump(grid: Grid1D, centre: f64, width: f64) -> FieldState {
    let l = grid.length();
    let v = FieldState::from_fn(grid, 2, |c, x| {
        let mut d = x - centre;
        d -= l * (d / l).round();
        (-d * d / (2.0 * width * width)).exp() * if c == 0 { 1.0 } else { -0.4 }
    });
    let n = v.norm();
    v.scaled(1.0 / n)
}

#[test]
fn pulse_is_a_traveling_wave_with_normalized_adjoint() {
    let p = pulse();
    let r = traveling_wave_residual(&model(), p.profile(), p.speed());
    let norm = (r.iter().map(|v| v * v).sum::<f64>() * p.grid().spacing()).sqrt();
    assert!(norm <= 1e-8, "residual {norm:e}");
    assert!((p.adjoint().dot(p.derivative()) + 1.0).abs() < 1e-10);
    assert!(p.speed() > 0.0);
    let d = p.diagnostics();
    assert_eq!(d.zero_count, Some(1));
    assert!(d.gap > 0.0 && d.null_cosine > 1.0 - 1e-6, "{d:?}");
}

#[test]
fn pulse_text_roundtrip() {
    let p = pulse();
    let back = pulse_from_str(&pulse_to_string(p).unwrap()).unwrap();
    assert_eq!(back.speed(), p.speed());
    assert_eq!(back.profile().as_slice(), p.profile().as_slice());
    assert_eq!(back.adjoint().as_slice(), p.adjoint().as_slice());
}

#[test]
fn phase_fit_recovers_grid_shifts() {
    let p = pulse();
    let h = p.grid().spacing();
    let base = phase_fit(p.profile(), p).unwrap();
    for cells in [1isize, 7, 64, -33] {
        let fit = phase_fit(&p.profile().shifted(cells), p).unwrap();
        let mut d = fit.phase - base.phase - cells as f64 * h;
        d -= p.grid().length() * (d / p.grid().length()).round();
        assert!(d.abs() < 1e-9, "shift {cells}: {d:e}");
        assert!(fit.tube < 1e-9);
    }
}

#[test]
fn isochron_is_zero_at_pulse_and_equivariant() {
    let iso = isochron();
    let p = pulse();
    assert_eq!(iso.eval(p.profile()).unwrap(), 0.0);
    let h = p.grid().spacing();
    for cells in [16isize, -5] {
        let phase = iso.eval(&p.profile().shifted(cells)).unwrap();
        assert!((phase - cells as f64 * h).abs() < 1e-8, "{cells}: {phase}");
    }
}

#[test]
fn isochron_gradient_is_adjoint_pairing() {
    let iso = isochron();
    let p = pulse();
    let along = iso.first_variation(p.derivative(), 1e-4).unwrap();
    assert!((along + 1.0).abs() < 1e-3, "{along}");
    let v = bump(p.grid(), p.grid().length() / 2.0 + 0.7, 0.8);
    let fd = iso.first_variation(&v, 1e-3).unwrap();
    let exact = p.adjoint().dot(&v);
    assert!(((fd - exact) / exact).abs() < 1e-2, "{fd} vs {exact}");
}

#[test]
fn isochron_is_constant_along_the_flow_up_to_drift() {
    let iso = isochron();
    let p = pulse();
    let v = p.profile().axpy(0.02, &bump(p.grid(), p.grid().length() / 2.0 - 0.5, 1.0));
    let dt = iso.options().dt;
    let t = 30.0;
    let before = iso.eval(&v).unwrap();
    let after = iso.eval(&evolve_pde(&v, &model(), t, dt).unwrap()).unwrap();
    let drift = iso.eval(&evolve_pde(p.profile(), &model(), t, dt).unwrap()).unwrap();
    assert!((after - before - drift).abs() < 1e-6, "{before} {after} {drift}");
    assert!((drift - p.speed() * t).abs() < 1e-2 * p.speed() * t);
}

#[test]
fn isochron_rejects_states_outside_the_tube() {
    let iso = isochron();
    let p = pulse();
    let far = p.profile().axpy(iso.tube_limit() * 3.0, &bump(p.grid(), 1.0, 0.5));
    assert!(iso.eval(&far).is_err());
}
