use std::io::Write;

use super::{ExperimentRecord, PairFlag, StabilityError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulusModel {
    /// `d = C (log|log ε|)^{−β}`
    LogLog,
    /// `d = C |log ε|^{−γ}`
    Log,
}

impl ModulusModel {
    pub fn name(self) -> &'static str {
        match self {
            ModulusModel::LogLog => "LOGLOG",
            ModulusModel::Log => "LOG",
        }
    }

    /// Regressor for `ln d`.
    fn regressor(self, eps: f64) -> f64 {
        match self {
            ModulusModel::LogLog => eps.ln().abs().ln().ln(),
            ModulusModel::Log => eps.ln().abs().ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusFit {
    pub model: ModulusModel,
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of `ln d`.
    pub residual: f64,
    /// Set on the model with the smaller residual.
    pub preferred: bool,
    pub n_records: usize,
}

pub const FITS_CSV_HEADER: &str = "model,exponent,prefactor,residual,preferred,n_records";

impl ModulusFit {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.14e},{:.14e},{:.14e},{},{}",
            self.model.name(),
            self.exponent,
            self.prefactor,
            self.residual,
            self.preferred,
            self.n_records
        )
    }
}

pub fn write_fits_csv(fits: &[ModulusFit], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "{FITS_CSV_HEADER}")?;
    for f in fits {
        writeln!(w, "{}", f.csv_line())?;
    }
    Ok(())
}

const MIN_RECORDS: usize = 5;

/// `(d, ε)` of the records usable in a fit: flagged ok, `d > 0` and
/// `0 < ε < e⁻¹`.
pub fn fit_points(records: &[ExperimentRecord]) -> Vec<(f64, f64)> {
    let limit = (-1.0f64).exp();
    records
        .iter()
        .filter(|r| r.flag == PairFlag::Ok && r.d_hausdorff > 0.0 && r.epsilon > 0.0 && r.epsilon < limit)
        .map(|r| (r.d_hausdorff, r.epsilon))
        .collect()
}

/// Least-squares fits of `ln d` against `ln ln|ln ε|` (LOGLOG) and
/// `ln|ln ε|` (LOG).
pub fn fit_stability_moduli(records: &[ExperimentRecord]) -> Result<(ModulusFit, ModulusFit), StabilityError> {
    let points = fit_points(records);
    if points.len() < MIN_RECORDS {
        return Err(StabilityError::Insufficient(format!(
            "{} valid records, need at least {MIN_RECORDS}",
            points.len()
        )));
    }
    let mut loglog = fit_model(&points, ModulusModel::LogLog)?;
    let mut log = fit_model(&points, ModulusModel::Log)?;
    if loglog.residual <= log.residual {
        loglog.preferred = true;
    } else {
        log.preferred = true;
    }
    Ok((loglog, log))
}

fn fit_model(points: &[(f64, f64)], model: ModulusModel) -> Result<ModulusFit, StabilityError> {
    let xs: Vec<f64> = points.iter().map(|&(_, e)| model.regressor(e)).collect();
    let ys: Vec<f64> = points.iter().map(|&(d, _)| d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let tiny = |s: f64, m: f64| s <= 1e-24 * n * m.abs().max(1.0).powi(2);
    if tiny(sxx, mx) {
        return Err(StabilityError::Degenerate(format!("{}: zero-variance regressor", model.name())));
    }
    if tiny(syy, my) {
        return Err(StabilityError::Degenerate(format!("{}: constant distances", model.name())));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let exponent = -slope;
    if !(exponent > 0.0) {
        return Err(StabilityError::Degenerate(format!(
            "{}: fitted exponent {exponent} is not positive",
            model.name()
        )));
    }
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(ModulusFit {
        model,
        exponent,
        prefactor: intercept.exp(),
        residual: (rss / n).sqrt(),
        preferred: false,
        n_records: points.len(),
    })
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either sample is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let m = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}
