use std::collections::BTreeMap;
use std::sync::Mutex;

use obstacle_core::cauchy::DEFAULT_SAMPLES;
use obstacle_core::geometry::{Point, StarShape};
use obstacle_core::stability::{
    fit_stability_moduli, generate_obstacle_family, pair_record, read_records_csv, record_csv_line, solve_obstacle,
    spearman, ExperimentRecord, FamilyMode, PairFlag, PairSetup, StabilityError, FITS_CSV_HEADER,
    RECORDS_CSV_HEADER,
};
use rayon::prelude::*;

use crate::config::{Config, BUMP_KEYS, DOMAIN_KEYS, SOLVER_KEYS};
use crate::error::CliError;
use crate::output::{num, Meta, OutDir};
use crate::RunArgs;

const KEYS: &[&str] = &["base_obstacle", "family", "d_targets", "h", "mesh_ratio", "samples"];

/// Family sweep against the base obstacle, then both modulus fits.
/// Writes `records.csv`, `fits.csv`, `summary.csv` and `d_epsilon.csv`.
/// Rows of an existing `records.csv` written under the same config and
/// seed are kept verbatim; only missing or failed pairs are recomputed.
pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = Config::load(&args.config, &[KEYS, DOMAIN_KEYS, BUMP_KEYS, SOLVER_KEYS])?;
    let base = cfg.shape("base_obstacle")?.map_or_else(
        || StarShape::circle(Point::ORIGIN, 0.3).map_err(|e| CliError::config(None, e.to_string())),
        Ok,
    )?;
    let family = cfg.str_or("family", "DILATE");
    let mode = FamilyMode::parse(family)
        .ok_or_else(|| CliError::config(Some("family"), format!("unknown family `{family}`")))?;
    let targets = cfg
        .f64_list("d_targets")?
        .ok_or_else(|| CliError::config(Some("d_targets"), "d_targets is required".into()))?;
    let h = cfg.f64_or("h", 0.05)?;
    let domain = cfg.domain(Some(base.clone()))?;
    let shapes = generate_obstacle_family(&base, mode, &targets, &domain).map_err(|e| match e {
        StabilityError::Unreachable { .. } | StabilityError::Invalid(_) => CliError::config(Some("d_targets"), e.to_string()),
        e => CliError::numerical(e),
    })?;
    let mut setup = PairSetup::new(&domain, cfg.bump()?, cfg.f64_or("mu", 1.0)?, h)
        .map_err(|e| CliError::config(None, e.to_string()))?
        .with_mesh_ratio(cfg.f64_or("mesh_ratio", 0.7)?);
    setup.samples = cfg.usize_or("samples", DEFAULT_SAMPLES)?;
    setup.solver = cfg.solver()?;

    let meta = Meta { config_hash: cfg.hash.clone(), seed: args.seed };
    let out = OutDir::create(&args.out)?;
    let ids: Vec<String> = (0..shapes.len()).map(|i| format!("{}-{i:02}", mode.name().to_ascii_lowercase())).collect();

    let rows: Mutex<BTreeMap<usize, String>> = Mutex::new(previous_rows(&out, &meta, &ids));
    let missing: Vec<usize> = (0..ids.len()).filter(|i| !rows.lock().expect("lock").contains_key(i)).collect();
    let write_rows = |rows: &BTreeMap<usize, String>| -> Result<(), CliError> {
        let lines: Vec<String> = rows.values().cloned().collect();
        out.write("records.csv", meta.csv(RECORDS_CSV_HEADER, &lines).as_bytes())
    };
    if !missing.is_empty() {
        let first = solve_obstacle(&setup, &base, h);
        missing.par_iter().try_for_each(|&i| {
            let record = match &first {
                Ok(s1) => pair_record(&setup, s1, &shapes[i], &ids[i], args.seed).map_err(CliError::numerical)?,
                Err(_) => ExperimentRecord::failed(&ids[i], targets[i], h, args.seed),
            };
            let mut rows = rows.lock().expect("lock");
            rows.insert(i, record_csv_line(&record));
            write_rows(&rows)
        })?;
    }
    let rows = rows.into_inner().expect("lock");
    write_rows(&rows)?;

    let text = meta.csv(RECORDS_CSV_HEADER, &rows.values().cloned().collect::<Vec<_>>());
    let records = read_records_csv(&mut text.as_bytes()).map_err(CliError::numerical)?;
    let failed = records.iter().filter(|r| r.flag == PairFlag::Failed).count();
    let ok: Vec<&ExperimentRecord> = records.iter().filter(|r| r.flag == PairFlag::Ok).collect();

    let pairs: Vec<String> = ok.iter().map(|r| format!("{},{}", num(r.d_hausdorff), num(r.epsilon))).collect();
    out.write("d_epsilon.csv", meta.csv("d_hausdorff,epsilon", &pairs).as_bytes())?;

    let d: Vec<f64> = ok.iter().map(|r| r.d_hausdorff).collect();
    let eps: Vec<f64> = ok.iter().map(|r| r.epsilon).collect();
    let floor = ok.iter().filter(|r| r.d_hausdorff == 0.0).map(|r| r.epsilon).fold(None, |m: Option<f64>, e| {
        Some(m.map_or(e, |m| m.max(e)))
    });
    let fits = fit_stability_moduli(&records);
    let mut summary = vec![
        format!("records_ok,{}", ok.len()),
        format!("records_failed,{failed}"),
        format!("spearman_d_epsilon,{}", spearman(&d, &eps).map(num).unwrap_or_default()),
        format!("epsilon_floor,{}", floor.map(num).unwrap_or_default()),
    ];
    let fit_rows = match &fits {
        Ok((a, b)) => vec![a.csv_line(), b.csv_line()],
        Err(e) => {
            summary.push(format!("fit_error,{}", e.to_string().replace(',', ";")));
            Vec::new()
        }
    };
    out.write("fits.csv", meta.csv(FITS_CSV_HEADER, &fit_rows).as_bytes())?;
    out.write("summary.csv", meta.csv("quantity,value", &summary).as_bytes())?;

    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} pairs failed", records.len())));
    }
    fits.map_err(CliError::numerical)?;
    Ok(())
}

/// Ok rows of a previous run under the same metadata, by family index.
fn previous_rows(out: &OutDir, meta: &Meta, ids: &[String]) -> BTreeMap<usize, String> {
    let Ok(text) = std::fs::read_to_string(out.path("records.csv")) else { return BTreeMap::new() };
    if text.lines().next() != Some(meta.line().as_str()) {
        return BTreeMap::new();
    }
    let mut kept = BTreeMap::new();
    for line in text.lines().skip(2) {
        let Ok(parsed) = read_records_csv(&mut format!("{RECORDS_CSV_HEADER}\n{line}\n").as_bytes()) else { continue };
        let Some(r) = parsed.first() else { continue };
        if r.flag != PairFlag::Ok {
            continue;
        }
        if let Some(i) = ids.iter().position(|id| *id == r.pair_id) {
            kept.insert(i, line.to_string());
        }
    }
    kept
}
