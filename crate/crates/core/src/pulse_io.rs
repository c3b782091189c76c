//! Columnar text format for pulse solutions.
//!
//! Layout: a `#`-prefixed JSON header line, a `#`-prefixed column line, then one
//! row per grid point `x u_1..u_n ψ_1..ψ_n ∂ₓu_1..∂ₓu_n` at 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::Grid1D;
use crate::pulse::{PulseSolution, SpectralDiagnostics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseHeader {
    pub length: u32,
    pub points: usize,
    pub components: usize,
    pub speed: f64,
    pub gap: f64,
    pub residual: f64,
    pub adjoint_residual: f64,
    pub iterations: usize,
    pub diagnostics: SpectralDiagnostics,
}

pub fn header(pulse: &PulseSolution) -> PulseHeader {
    let g = pulse.grid();
    PulseHeader {
        length: g.length_units(),
        points: g.points(),
        components: pulse.profile().components(),
        speed: pulse.speed(),
        gap: pulse.gap(),
        residual: pulse.residual(),
        adjoint_residual: pulse.adjoint_residual(),
        iterations: pulse.iterations(),
        diagnostics: *pulse.diagnostics(),
    }
}

pub fn pulse_to_string(pulse: &PulseSolution) -> Result<String> {
    let h = header(pulse);
    let mut out = String::new();
    writeln!(out, "# {}", serde_json::to_string(&h)?).ok();
    let mut cols = vec!["x".to_string()];
    for prefix in ["u", "psi", "du"] {
        for c in 0..h.components {
            cols.push(format!("{prefix}{}", c + 1));
        }
    }
    writeln!(out, "# {}", cols.join(" ")).ok();
    let grid = pulse.grid();
    let fields = [pulse.profile(), pulse.adjoint(), pulse.derivative()];
    for i in 0..grid.points() {
        write!(out, "{:.16e}", grid.x(i)).ok();
        for f in fields {
            for c in 0..h.components {
                write!(out, " {:.16e}", f.component(c)[i]).ok();
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn pulse_from_str(text: &str) -> Result<PulseSolution> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::Format("missing pulse header".into()))?;
    let h: PulseHeader = serde_json::from_str(head)?;
    let grid = Grid1D::new(h.length, h.points)?;
    lines
        .next()
        .filter(|l| l.starts_with('#'))
        .ok_or_else(|| Error::Format("missing column line".into()))?;
    let n = h.components;
    let mut cols = vec![vec![0.0; h.points]; 3 * n];
    let mut rows = 0;
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        if i >= h.points {
            return Err(Error::Format("more rows than grid points".into()));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Format(format!("row {i}: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 1 + 3 * n {
            return Err(Error::Format(format!("row {i}: expected {} columns", 1 + 3 * n)));
        }
        for (col, v) in cols.iter_mut().zip(&vals[1..]) {
            col[i] = *v;
        }
        rows += 1;
    }
    if rows != h.points {
        return Err(Error::Format(format!("expected {} rows, found {rows}", h.points)));
    }
    let mut it = cols.into_iter();
    let mut take = || FieldState::from_components(grid, (&mut it).take(n).collect());
    let profile = take()?;
    let adjoint = take()?;
    let derivative = take()?;
    Ok(PulseSolution::from_parts(
        profile,
        h.speed,
        derivative,
        adjoint,
        h.residual,
        h.adjoint_residual,
        h.iterations,
        h.diagnostics,
    ))
}

pub fn write_pulse(path: impl AsRef<Path>, pulse: &PulseSolution) -> Result<()> {
    std::fs::write(path, pulse_to_string(pulse)?)?;
    Ok(())
}

pub fn read_pulse(path: impl AsRef<Path>) -> Result<PulseSolution> {
    pulse_from_str(&std::fs::read_to_string(path)?)
}
