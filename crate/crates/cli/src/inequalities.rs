use std::f64::consts::TAU;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use obstacle_core::continuation::{
    caccioppoli_ratio, difference_three_spheres_check, fit_common_delta, gradient_three_spheres_check,
    interpolation_check, poincare_ratio, pos_profile, random_triples, three_spheres_check, write_records_csv,
    BallTriple, Clearance, ContinuationError, InequalityKind, InequalityRecord, RecordFlag, DEFAULT_RATIOS,
    DEFAULT_S,
};
use obstacle_core::geometry::{DomainSpec, GammaArc, Point, StarShape};
use obstacle_core::meshing::{generate_mesh, read_mesh, Mesh};
use obstacle_core::ns_solver::{read_field, FlowField, P2Space};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, Meta, OutDir};
use crate::RunArgs;

const KEYS: &[&str] = &[
    "source",
    "h",
    "mesh_file",
    "field_file",
    "mesh_file_2",
    "field_file_2",
    "kinds",
    "triples",
    "ratios",
    "random_triples",
    "random_box",
    "random_r3",
    "delta",
    "c",
    "quantile",
    "rho0",
    "patch_radius",
    "pos_rhos",
    "pos_s",
];

pub const FIT_CSV_HEADER: &str = "kind,delta,C,satisfied,records";

/// Flow region of one mesh, or the region shared by two.
struct Meshes<'a>(&'a Mesh, Option<&'a Mesh>);

impl Clearance for Meshes<'_> {
    fn clearance(&self, p: Point) -> f64 {
        let a = self.0.clearance(p);
        self.1.map_or(a, |b| a.min(b.clearance(p)))
    }
}

enum Source {
    /// `u = (y, x)` on the unit disk, interpolated on a mesh of size `h`.
    Synthetic { field: FlowField, domain: DomainSpec },
    /// Fields read from disk; the second one only for differences.
    Files { field: FlowField, second: Option<FlowField> },
}

impl Source {
    fn field(&self) -> &FlowField {
        match self {
            Source::Synthetic { field, .. } | Source::Files { field, .. } => field,
        }
    }

    fn clearance(&self) -> Box<dyn Clearance + '_> {
        match self {
            Source::Synthetic { domain, .. } => Box::new(domain.clone()),
            Source::Files { field, second } => Box::new(Meshes(field.space.mesh(), second.as_ref().map(|b| b.space.mesh()))),
        }
    }
}

fn load_field(mesh: &Path, field: &Path) -> Result<FlowField, CliError> {
    let mesh = read_mesh(BufReader::new(File::open(mesh)?)).map_err(CliError::numerical)?;
    let space = Arc::new(P2Space::new(mesh));
    read_field(space, BufReader::new(File::open(field)?)).map_err(CliError::numerical)
}

fn load_source(cfg: &Config, kinds: &[InequalityKind]) -> Result<Source, CliError> {
    match cfg.str_or("source", "synthetic_yx") {
        "synthetic_yx" => {
            if kinds.contains(&InequalityKind::ThreeSpheresDiff) {
                return Err(CliError::config(Some("kinds"), "THREE_SPHERES_DIFF needs source = field".into()));
            }
            let domain = DomainSpec::new(
                StarShape::circle(Point::ORIGIN, 1.0).map_err(CliError::numerical)?,
                None,
                GammaArc::new(0.0, TAU).map_err(CliError::numerical)?,
                1.0,
                1.0,
                10.0,
            )
            .map_err(CliError::numerical)?;
            let h = cfg.f64_or("h", 0.1)?;
            let mesh = generate_mesh(&domain, h).map_err(|e| CliError::config(Some("h"), e.to_string()))?;
            let field = FlowField::interpolate(Arc::new(P2Space::new(mesh)), 1.0, |p| [p.y, p.x], |_| 0.0);
            Ok(Source::Synthetic { field, domain })
        }
        "field" => {
            let need = |key: &str| {
                cfg.existing_path(key)?.ok_or_else(|| CliError::config(Some(key), format!("{key} is required")))
            };
            let field = load_field(&need("mesh_file")?, &need("field_file")?)?;
            let second = if kinds.contains(&InequalityKind::ThreeSpheresDiff) {
                Some(load_field(&need("mesh_file_2")?, &need("field_file_2")?)?)
            } else {
                None
            };
            Ok(Source::Files { field, second })
        }
        other => Err(CliError::config(Some("source"), format!("unknown source `{other}`"))),
    }
}

/// Record for a configuration that leaves the flow region or is invalid.
fn outside(kind: InequalityKind, center: Point, r3: f64) -> InequalityRecord {
    let mut rec = InequalityRecord::new(kind);
    rec.center = Some(center);
    rec.r[2] = Some(r3);
    rec.c = f64::NAN;
    rec.flag = RecordFlag::OutsideDomain;
    rec
}

fn keep_or_flag(
    res: Result<InequalityRecord, ContinuationError>,
    kind: InequalityKind,
    center: Point,
    r3: f64,
) -> Result<InequalityRecord, CliError> {
    match res {
        Ok(r) => Ok(r),
        Err(ContinuationError::BallOutsideDomain { .. } | ContinuationError::Invalid(_)) => Ok(outside(kind, center, r3)),
        Err(e) => Err(CliError::numerical(e)),
    }
}

/// Runs the requested inequality checks and writes one
/// `inequalities_<kind>.csv` per kind plus `inequalities_fit.csv` with the
/// common `(δ, C)` of each three-spheres kind.
pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = Config::load(&args.config, &[KEYS])?;
    let kinds: Vec<InequalityKind> = cfg
        .str_or("kinds", "THREE_SPHERES")
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| InequalityKind::parse(s).ok_or_else(|| CliError::config(Some("kinds"), format!("unknown kind `{s}`"))))
        .collect::<Result<_, _>>()?;
    let ratios = match cfg.f64_list("ratios")? {
        None => DEFAULT_RATIOS,
        Some(r) if r.len() == 2 => (r[0], r[1]),
        Some(_) => return Err(CliError::config(Some("ratios"), "expected two numbers".into())),
    };
    let constants = match (cfg.f64_opt("delta")?, cfg.f64_opt("c")?) {
        (Some(d), Some(c)) => Some((d, c)),
        (None, None) => None,
        _ => return Err(CliError::config(Some("delta"), "delta and c must be given together".into())),
    };
    let quantile = cfg.f64_or("quantile", 0.95)?;
    let rho0 = cfg.f64_or("rho0", 1.0)?;

    let source = load_source(&cfg, &kinds)?;
    let clearance = source.clearance();
    let mut triples: Vec<(Point, f64)> =
        cfg.groups("triples", 3)?.into_iter().map(|g| (Point::new(g[0], g[1]), g[2])).collect();
    let count = cfg.usize_or("random_triples", 0)?;
    if count > 0 {
        let bx = cfg.f64_list("random_box")?.unwrap_or_else(|| vec![-1.0, -1.0, 1.0, 1.0]);
        let r3 = cfg.f64_list("random_r3")?.unwrap_or_else(|| vec![0.1, 0.3]);
        if bx.len() != 4 {
            return Err(CliError::config(Some("random_box"), "expected `x0 y0 x1 y1`".into()));
        }
        if r3.len() != 2 {
            return Err(CliError::config(Some("random_r3"), "expected `lo hi`".into()));
        }
        let found = random_triples(
            clearance.as_ref(),
            (Point::new(bx[0], bx[1]), Point::new(bx[2], bx[3])),
            count,
            ratios,
            (r3[0], r3[1]),
            args.seed,
        )
        .map_err(|e| CliError::config(Some("random_triples"), e.to_string()))?;
        triples.extend(found.iter().map(|t| (t.center, t.r3)));
    }

    let meta = Meta { config_hash: cfg.hash.clone(), seed: args.seed };
    let out = OutDir::create(&args.out)?;
    let mut fit_rows = Vec::new();
    for &kind in &kinds {
        let records = records_for(kind, &source, clearance.as_ref(), &triples, ratios, constants, &cfg, rho0)?;
        let mut buf = format!("{}\n", meta.line()).into_bytes();
        write_records_csv(&records, &mut buf).map_err(CliError::numerical)?;
        out.write(&format!("inequalities_{}.csv", kind.name().to_ascii_lowercase()), &buf)?;

        let spheres = matches!(
            kind,
            InequalityKind::ThreeSpheres | InequalityKind::ThreeSpheresGrad | InequalityKind::ThreeSpheresDiff
        );
        let usable: Vec<InequalityRecord> =
            records.into_iter().filter(|r| r.flag != RecordFlag::OutsideDomain).collect();
        if spheres && !usable.is_empty() {
            match fit_common_delta(&usable, quantile) {
                Ok(f) => fit_rows.push(format!("{kind},{},{},{},{}", num(f.delta), num(f.c), num(f.satisfied), f.records)),
                Err(ContinuationError::Degenerate(_)) => {}
                Err(e) => return Err(CliError::config(Some("quantile"), e.to_string())),
            }
        }
    }
    out.write("inequalities_fit.csv", meta.csv(FIT_CSV_HEADER, &fit_rows).as_bytes())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn records_for(
    kind: InequalityKind,
    source: &Source,
    clearance: &dyn Clearance,
    triples: &[(Point, f64)],
    ratios: (f64, f64),
    constants: Option<(f64, f64)>,
    cfg: &Config,
    rho0: f64,
) -> Result<Vec<InequalityRecord>, CliError> {
    let u = source.field();
    match kind {
        InequalityKind::Poincare => {
            let patch = cfg.f64_or("patch_radius", rho0)?;
            let rec = poincare_ratio(u, rho0, patch).map_err(|e| CliError::config(Some("patch_radius"), e.to_string()))?;
            Ok(vec![rec])
        }
        InequalityKind::PosProfile => {
            let rhos = cfg.f64_list("pos_rhos")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
            let s = cfg.f64_or("pos_s", DEFAULT_S)?;
            let prof = pos_profile(u, clearance, &rhos, s, rho0).map_err(|e| match e {
                ContinuationError::Invalid(_) | ContinuationError::EmptyErosion { .. } => {
                    CliError::config(Some("pos_rhos"), e.to_string())
                }
                e => CliError::numerical(e),
            })?;
            Ok(prof.records)
        }
        _ => triples
            .iter()
            .map(|&(center, r3)| {
                let triple = match BallTriple::with_ratios(center, r3, ratios) {
                    Ok(t) => t,
                    Err(_) => return Ok(outside(kind, center, r3)),
                };
                let res = match kind {
                    InequalityKind::ThreeSpheres => three_spheres_check(u, clearance, &triple, constants),
                    InequalityKind::ThreeSpheresGrad => gradient_three_spheres_check(u, clearance, &triple, constants),
                    InequalityKind::ThreeSpheresDiff => match source {
                        Source::Files { field, second: Some(b) } => {
                            difference_three_spheres_check(field, b, clearance, &triple, constants)
                        }
                        _ => unreachable!("difference kind requires two fields"),
                    },
                    InequalityKind::Caccioppoli => caccioppoli_ratio(u, clearance, center, triple.r2, r3),
                    InequalityKind::Interpolation => {
                        interpolation_check(u, clearance, center, r3, constants.map(|(_, c)| c))
                    }
                    InequalityKind::Poincare | InequalityKind::PosProfile => unreachable!(),
                };
                keep_or_flag(res, kind, center, r3)
            })
            .collect(),
    }
}
