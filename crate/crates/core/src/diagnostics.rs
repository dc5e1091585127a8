//! Energy functionals and inter-run error measures, all evaluated in
//! coefficient space.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::field::{inner, SpectralField};
use crate::solver::Trajectory;

/// Relative tolerance when matching output times of two runs.
const TIME_MATCH_TOL: f64 = 1e-9;

pub const ENERGY_CSV_HEADER: &str = "t,E0,E_alpha,D_alpha,balance_residual";
pub const ERROR_CSV_HEADER: &str = "t,err_L2,err_H1,err_H1_cum";

/// Spectral sums at one instant; two consecutive snapshots give a balance
/// residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySnapshot {
    pub t: f64,
    pub e0: f64,
    pub e_alpha: f64,
    pub d_alpha: f64,
    /// `⟨f(t), u⟩`
    pub power: f64,
}

impl EnergySnapshot {
    pub fn new(eigenvalues: &[f64], alpha: f64, t: f64, u: &SpectralField, f: &SpectralField) -> Self {
        let a2 = alpha * alpha;
        let (mut e0, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for (c, l) in u.coeffs().iter().zip(eigenvalues) {
            let c2 = c * c;
            e0 += c2;
            h1 += l * c2;
            h2 += l * l * c2;
        }
        EnergySnapshot {
            t,
            e0,
            e_alpha: e0 + a2 * h1,
            d_alpha: h1 + a2 * h2,
            power: inner(f, u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `‖u‖²`
    pub e0: f64,
    /// `‖u‖² + α²‖A^{1/2}u‖²`
    pub e_alpha: f64,
    /// `‖A^{1/2}u‖² + α²‖Au‖²`
    pub d_alpha: f64,
    /// Second-energy functional; the same sum as `d_alpha`.
    pub e2: f64,
    /// Trapezoidal defect of `dE_α/dt = −2ν D_α + 2⟨f, u⟩` over the last step.
    pub balance_residual: f64,
}

/// Record at `cur`, with the balance residual taken over the window from
/// `prev` (zero when there is no previous step).
pub fn energy_record(prev: Option<&EnergySnapshot>, cur: &EnergySnapshot, nu: f64) -> EnergyRecord {
    let balance_residual = match prev {
        Some(p) if cur.t > p.t => {
            let dt = cur.t - p.t;
            ((cur.e_alpha - p.e_alpha) / dt + nu * (p.d_alpha + cur.d_alpha) - (p.power + cur.power)).abs()
        }
        _ => 0.0,
    };
    EnergyRecord {
        t: cur.t,
        e0: cur.e0,
        e_alpha: cur.e_alpha,
        d_alpha: cur.d_alpha,
        e2: cur.d_alpha,
        balance_residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    /// `‖u₁ − u₂‖`
    pub err_l2: f64,
    /// `‖A^{1/2}(u₁ − u₂)‖`
    pub err_h1: f64,
    /// `∫₀ᵗ ‖A^{1/2}(u₁ − u₂)‖²` (trapezoidal over the records)
    pub err_h1_cum: f64,
}

fn times_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Eigenvalues covering both runs; errors if the runs do not share a basis.
fn common_eigenvalues<'a>(a: &'a Trajectory, b: &'a Trajectory) -> Result<&'a [f64]> {
    let (short, long) = if a.eigenvalues.len() <= b.eigenvalues.len() {
        (&a.eigenvalues, &b.eigenvalues)
    } else {
        (&b.eigenvalues, &a.eigenvalues)
    };
    if long[..short.len()] != short[..] {
        return Err(Error::config("runs do not share a common eigenbasis"));
    }
    Ok(long)
}

/// `(‖d‖², ‖A^{1/2}d‖²)` for `d = a − b` on the union of supports.
pub fn difference_norms(eigenvalues: &[f64], a: &SpectralField, b: &SpectralField) -> (f64, f64) {
    let d = a - b;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (c, l) in d.coeffs().iter().zip(eigenvalues) {
        l2 += c * c;
        h1 += l * c * c;
    }
    (l2, h1)
}

/// Error records at every output time of two runs sharing an output grid.
pub fn error_series(a: &Trajectory, b: &Trajectory) -> Result<Vec<ErrorRecord>> {
    let lam = common_eigenvalues(a, b)?;
    if a.times.len() != b.times.len() || !a.times.iter().zip(&b.times).all(|(x, y)| times_match(*x, *y)) {
        return Err(Error::arg(format!(
            "output times differ ({} vs {} records); runs must share output_cadence·dt",
            a.times.len(),
            b.times.len()
        )));
    }
    let mut out: Vec<ErrorRecord> = Vec::with_capacity(a.times.len());
    let mut prev: Option<(f64, f64)> = None;
    let mut cum = 0.0;
    for (k, &t) in a.times.iter().enumerate() {
        let (l2, h1) = difference_norms(lam, &a.u[k], &b.u[k]);
        if let Some((tp, hp)) = prev {
            cum += 0.5 * (t - tp) * (hp + h1);
        }
        prev = Some((t, h1));
        out.push(ErrorRecord {
            t,
            err_l2: l2.sqrt(),
            err_h1: h1.sqrt(),
            err_h1_cum: cum,
        });
    }
    Ok(out)
}

/// The error record at output time `t`.
pub fn error_record(a: &Trajectory, b: &Trajectory, t: f64) -> Result<ErrorRecord> {
    error_series(a, b)?
        .into_iter()
        .find(|r| times_match(r.t, t))
        .ok_or_else(|| Error::arg(format!("t = {t} is not an output time of both runs")))
}

/// `sup_t ‖u₁ − u₂‖²` over the emitted records.
pub fn sup_err_l2_sq(series: &[ErrorRecord]) -> f64 {
    series.iter().map(|r| r.err_l2 * r.err_l2).fold(0.0, f64::max)
}

/// `sup_t ‖A^{1/2}(u₁ − u₂)‖²` over the emitted records.
pub fn sup_err_h1_sq(series: &[ErrorRecord]) -> f64 {
    series.iter().map(|r| r.err_h1 * r.err_h1).fold(0.0, f64::max)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_energy_csv<W: Write>(mut out: W, records: &[EnergyRecord]) -> Result<()> {
    writeln!(out, "{ENERGY_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(r.t),
            fmt17(r.e0),
            fmt17(r.e_alpha),
            fmt17(r.d_alpha),
            fmt17(r.balance_residual)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_error_csv<W: Write>(mut out: W, records: &[ErrorRecord]) -> Result<()> {
    writeln!(out, "{ERROR_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            fmt17(r.t),
            fmt17(r.err_l2),
            fmt17(r.err_h1),
            fmt17(r.err_h1_cum)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: BufRead>(input: R, header: &str, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == header => {}
        _ => return Err(Error::Format(format!("expected CSV header '{header}'"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
        if row.len() != width {
            return Err(Error::Format(format!("line {}: expected {width} columns", i + 2)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_energy_csv<R: BufRead>(input: R) -> Result<Vec<EnergyRecord>> {
    Ok(read_rows(input, ENERGY_CSV_HEADER, 5)?
        .into_iter()
        .map(|r| EnergyRecord {
            t: r[0],
            e0: r[1],
            e_alpha: r[2],
            d_alpha: r[3],
            e2: r[3],
            balance_residual: r[4],
        })
        .collect())
}

pub fn read_error_csv<R: BufRead>(input: R) -> Result<Vec<ErrorRecord>> {
    Ok(read_rows(input, ERROR_CSV_HEADER, 4)?
        .into_iter()
        .map(|r| ErrorRecord {
            t: r[0],
            err_l2: r[1],
            err_h1: r[2],
            err_h1_cum: r[3],
        })
        .collect())
}
