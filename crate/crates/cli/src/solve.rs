use std::sync::Arc;

use obstacle_core::cauchy::{compute_normal_stress, write_pair_csv, DEFAULT_SAMPLES};
use obstacle_core::meshing::{generate_mesh, rectangle_mesh, write_mesh, BoundaryTag, RectangleTags};
use obstacle_core::ns_solver::{write_field, BoundaryData, FlowField, NewtonTrace, NsSolver, P2Space};

use crate::config::{Config, BUMP_KEYS, DOMAIN_KEYS, SOLVER_KEYS};
use crate::error::CliError;
use crate::output::{num, Meta, OutDir};
use crate::RunArgs;

const KEYS: &[&str] = &["preset", "h", "obstacle", "samples", "channel_length", "umax"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Preset {
    /// Channel `[0, L] × [−1, 1]` with the parabolic profile.
    Poiseuille,
    /// Container and obstacle with the bump profile on Γ.
    Bump,
    /// Container and obstacle with zero data.
    Zero,
}

/// Writes `mesh.txt`, `field.txt`, `diagnostics.csv` and, for the domain
/// presets, `cauchy.csv`.
pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = Config::load(&args.config, &[KEYS, DOMAIN_KEYS, BUMP_KEYS, SOLVER_KEYS])?;
    let preset = match cfg.str_or("preset", "bump") {
        "poiseuille" => Preset::Poiseuille,
        "bump" => Preset::Bump,
        "zero" => Preset::Zero,
        other => return Err(CliError::config(Some("preset"), format!("unknown preset `{other}`"))),
    };
    let h = cfg.f64_or("h", 0.1)?;
    let mu = cfg.f64_or("mu", 1.0)?;
    let opts = cfg.solver()?;
    let samples = cfg.usize_or("samples", DEFAULT_SAMPLES)?;
    let meta = Meta { config_hash: cfg.hash.clone(), seed: args.seed };
    let out = OutDir::create(&args.out)?;

    let mut rows: Vec<(String, String)> = Vec::new();
    let (field, trace, cauchy) = if preset == Preset::Poiseuille {
        let length = cfg.f64_or("channel_length", 4.0)?;
        let umax = cfg.f64_or("umax", 1.0)?;
        if !(h > 0.0 && length > 0.0) {
            return Err(CliError::config(Some("h"), format!("need positive h and channel_length, got {h}, {length}")));
        }
        let tags = RectangleTags {
            bottom: BoundaryTag::Wall,
            right: BoundaryTag::Gamma,
            top: BoundaryTag::Wall,
            left: BoundaryTag::Gamma,
        };
        let (nx, ny) = ((length / h).ceil() as usize, (2.0 / h).ceil() as usize);
        let mesh = rectangle_mesh((0.0, length), (-1.0, 1.0), nx, ny, tags).map_err(CliError::numerical)?;
        let space = Arc::new(P2Space::new(mesh));
        let g = BoundaryData::poiseuille(&space, 1.0, umax);
        let (field, trace) = solve(space, mu, &g, &opts)?;
        let exact = move |p: obstacle_core::geometry::Point| [umax * (1.0 - p.y * p.y), 0.0];
        rows.push(("velocity_l2_error".into(), num(field.velocity_l2_error(exact))));
        (field, trace, None)
    } else {
        let domain = cfg.domain(cfg.shape("obstacle")?)?;
        let mesh = generate_mesh(&domain, h).map_err(|e| CliError::config(Some("h"), e.to_string()))?;
        let space = Arc::new(P2Space::new(mesh));
        let g = match preset {
            Preset::Zero => BoundaryData::zero(&space, domain.rho0),
            _ => BoundaryData::bump(&space, &domain, &cfg.bump()?).map_err(|e| CliError::config(None, e.to_string()))?,
        };
        let (field, trace) = solve(space, mu, &g, &opts)?;
        let pair = compute_normal_stress(&field, &domain, &g, samples).map_err(CliError::numerical)?;
        (field, trace, Some(pair))
    };

    let mesh = field.space.mesh();
    let mut diag = vec![
        ("n_vertices".to_string(), mesh.n_vertices().to_string()),
        ("n_triangles".into(), mesh.n_triangles().to_string()),
        ("newton_iterations".into(), trace.iterations.to_string()),
        ("final_residual".into(), num(*trace.residuals.last().unwrap_or(&0.0))),
        ("projected_divergence".into(), num(field.projected_divergence())),
        ("obstacle_trace_max".into(), num(field.obstacle_trace_max())),
        ("velocity_l2".into(), num(field.velocity_l2())),
        ("grad_l2".into(), num(field.grad_l2())),
        ("energy_ratio".into(), num(trace.energy_ratio)),
    ];
    diag.extend(rows);

    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf).map_err(CliError::numerical)?;
    out.write("mesh.txt", &buf)?;
    let mut buf = Vec::new();
    write_field(&field, &mut buf).map_err(CliError::numerical)?;
    out.write("field.txt", &buf)?;
    let lines: Vec<String> = diag.iter().map(|(k, v)| format!("{k},{v}")).collect();
    out.write("diagnostics.csv", meta.csv("quantity,value", &lines).as_bytes())?;
    if let Some(pair) = cauchy {
        let mut buf = format!("{}\n", meta.line()).into_bytes();
        write_pair_csv(&pair, &mut buf).map_err(CliError::numerical)?;
        out.write("cauchy.csv", &buf)?;
    }
    Ok(())
}

fn solve(
    space: Arc<P2Space>,
    mu: f64,
    g: &BoundaryData,
    opts: &obstacle_core::ns_solver::SolverOptions,
) -> Result<(FlowField, NewtonTrace), CliError> {
    if !(mu > 0.0) {
        return Err(CliError::config(Some("mu"), format!("viscosity must be positive, got {mu}")));
    }
    let solver = NsSolver::new(space).map_err(CliError::numerical)?;
    solver.solve_navier_stokes(mu, g, None, opts).map_err(CliError::numerical)
}
