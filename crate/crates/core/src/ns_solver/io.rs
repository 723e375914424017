//! Plain-text field files: `NVD NPD MU` header, one `ux uy` line per P2
//! node, one pressure line per vertex.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::fem::P2Space;
use super::field::FlowField;
use super::SolverError;

pub fn write_field(field: &FlowField, mut w: impl Write) -> Result<(), SolverError> {
    writeln!(w, "# gauge {:.16e}", field.gauge_multiplier)?;
    writeln!(w, "{} {} {:.16e}", field.velocity.len(), field.pressure.len(), field.mu)?;
    for u in &field.velocity {
        writeln!(w, "{:.16e} {:.16e}", u[0], u[1])?;
    }
    for p in &field.pressure {
        writeln!(w, "{:.16e}", p)?;
    }
    Ok(())
}

pub fn read_field(space: Arc<P2Space>, r: impl BufRead) -> Result<FlowField, SolverError> {
    let mut gauge = 0.0;
    let mut lines = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("# gauge") {
            gauge = parse(rest.trim())?;
        } else if !t.is_empty() && !t.starts_with('#') {
            lines.push(t.to_string());
        }
    }
    let mut it = lines.iter();
    let header: Vec<&str> = it
        .next()
        .ok_or_else(|| SolverError::Format("empty field file".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 3 {
        return Err(SolverError::Format("header must be `NVD NPD MU`".into()));
    }
    let nvd: usize = header[0].parse().map_err(|_| SolverError::Format("bad NVD".into()))?;
    let npd: usize = header[1].parse().map_err(|_| SolverError::Format("bad NPD".into()))?;
    let mu = parse(header[2])?;
    if nvd != space.n_nodes() || npd != space.n_vertices() {
        return Err(SolverError::Format(format!(
            "field has {nvd}/{npd} dofs, mesh expects {}/{}",
            space.n_nodes(),
            space.n_vertices()
        )));
    }
    let mut velocity = Vec::with_capacity(nvd);
    for _ in 0..nvd {
        let l = it.next().ok_or_else(|| SolverError::Format("truncated velocity block".into()))?;
        let v: Vec<f64> = l.split_whitespace().map(parse).collect::<Result<_, _>>()?;
        if v.len() != 2 {
            return Err(SolverError::Format(format!("bad velocity line `{l}`")));
        }
        velocity.push([v[0], v[1]]);
    }
    let mut pressure = Vec::with_capacity(npd);
    for _ in 0..npd {
        let l = it.next().ok_or_else(|| SolverError::Format("truncated pressure block".into()))?;
        pressure.push(parse(l)?);
    }
    if it.next().is_some() {
        return Err(SolverError::Format("trailing lines after pressure block".into()));
    }
    Ok(FlowField {
        space,
        velocity,
        pressure,
        mu,
        gauge_multiplier: gauge,
    })
}

fn parse(s: &str) -> Result<f64, SolverError> {
    s.parse().map_err(|_| SolverError::Format(format!("bad number `{s}`")))
}
