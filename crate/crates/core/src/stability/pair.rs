use std::f64::consts::TAU;
use std::sync::Arc;

use super::{ExperimentRecord, PairFlag, StabilityError};
use crate::cauchy::{compute_normal_stress, discrepancy, CauchyPair, DEFAULT_SAMPLES};
use crate::geometry::{estimate_regularity_constants, hausdorff_distance, DomainSpec, Point, StarShape};
use crate::meshing::generate_mesh;
use crate::ns_solver::{
    grad_norm2, BoundaryData, BumpProfile, FlowField, NsSolver, P2Space, SolverOptions, TriangleGeom,
};
use crate::quadrature::triangle7;

/// Shared settings of a sweep: container, Γ and constants come from
/// `domain` (its obstacle is ignored), the data profile from `profile`.
#[derive(Clone, Debug)]
pub struct PairSetup {
    pub domain: DomainSpec,
    pub profile: BumpProfile,
    pub mu: f64,
    /// Mesh size of the first problem.
    pub h: f64,
    /// The second problem is meshed at `mesh_ratio · h`.
    pub mesh_ratio: f64,
    /// Measurement grid size on the container curve.
    pub samples: usize,
    pub solver: SolverOptions,
    /// Profile used for the `g` samples of every measurement, built once
    /// on the obstacle-free container so all pairs compare equal data.
    reference: BoundaryData,
}

impl PairSetup {
    pub fn new(domain: &DomainSpec, profile: BumpProfile, mu: f64, h: f64) -> Result<Self, StabilityError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(StabilityError::Invalid(format!("viscosity mu = {mu}")));
        }
        let empty = DomainSpec::new(domain.container.clone(), None, domain.gamma, domain.rho0, domain.m0, domain.m1)?;
        let space = P2Space::new(generate_mesh(&empty, h)?);
        let reference = BoundaryData::bump(&space, &empty, &profile)?;
        Ok(PairSetup {
            domain: empty,
            profile,
            mu,
            h,
            mesh_ratio: 1.0,
            samples: DEFAULT_SAMPLES,
            solver: SolverOptions::default(),
            reference,
        })
    }

    pub fn with_mesh_ratio(mut self, ratio: f64) -> Self {
        self.mesh_ratio = ratio;
        self
    }

    pub fn reference(&self) -> &BoundaryData {
        &self.reference
    }

    pub fn domain_with(&self, obstacle: &StarShape) -> Result<DomainSpec, StabilityError> {
        Ok(self.domain.with_obstacle(obstacle.clone())?)
    }
}

/// A forward solve and its measurement.
#[derive(Clone, Debug)]
pub struct SolvedObstacle {
    pub obstacle: StarShape,
    pub domain: DomainSpec,
    pub field: FlowField,
    pub pair: CauchyPair,
    pub newton_iters: usize,
}

impl SolvedObstacle {
    pub fn space(&self) -> &Arc<P2Space> {
        &self.field.space
    }
}

/// Meshes `Ω ∖ D̄` at size `h` and solves with the bump data.
pub fn solve_obstacle(setup: &PairSetup, obstacle: &StarShape, h: f64) -> Result<SolvedObstacle, StabilityError> {
    let domain = setup.domain_with(obstacle)?;
    let space = Arc::new(P2Space::new(generate_mesh(&domain, h)?));
    let solver = NsSolver::new(space)?;
    solve_on(setup, domain, &solver, None)
}

/// Solves on the solver's space. The Dirichlet data carries the flux
/// correction of that mesh; the measured `g` samples come from the shared
/// reference profile.
pub(crate) fn solve_on(
    setup: &PairSetup,
    domain: DomainSpec,
    solver: &NsSolver,
    start: Option<&FlowField>,
) -> Result<SolvedObstacle, StabilityError> {
    let space = solver.space();
    let g = BoundaryData::bump(space, &domain, &setup.profile)?;
    let (field, trace) = match start {
        Some(s) => solver.newton_from(s, &g, None, &setup.solver)?,
        None => solver.solve_navier_stokes(setup.mu, &g, None, &setup.solver)?,
    };
    let pair = compute_normal_stress(&field, &domain, &setup.reference, setup.samples)?;
    Ok(SolvedObstacle {
        obstacle: domain.obstacle.clone().expect("obstacle domain"),
        domain,
        field,
        pair,
        newton_iters: trace.iterations,
    })
}

/// Solves `D1` at `h` and `D2` at `mesh_ratio · h` and measures the pair.
/// Solver failures give a [`PairFlag::Failed`] record; invalid obstacles
/// are errors.
pub fn run_pair(
    setup: &PairSetup,
    d1: &StarShape,
    d2: &StarShape,
    pair_id: &str,
    seed: u64,
) -> Result<ExperimentRecord, StabilityError> {
    setup.domain_with(d1)?;
    setup.domain_with(d2)?;
    let d = hausdorff_distance(d1, d2).distance;
    let s1 = match solve_obstacle(setup, d1, setup.h) {
        Ok(s) => s,
        Err(StabilityError::Solver(_)) => return Ok(ExperimentRecord::failed(pair_id, d, setup.h, seed)),
        Err(e) => return Err(e),
    };
    pair_record(setup, &s1, d2, pair_id, seed)
}

/// Like [`run_pair`] with the first problem already solved.
pub fn pair_record(
    setup: &PairSetup,
    s1: &SolvedObstacle,
    d2: &StarShape,
    pair_id: &str,
    seed: u64,
) -> Result<ExperimentRecord, StabilityError> {
    let d1 = &s1.obstacle;
    let d = hausdorff_distance(d1, d2).distance;
    let h = s1.field.space.mesh().h_target;
    let s2 = match solve_obstacle(setup, d2, setup.mesh_ratio * setup.h) {
        Ok(s) => s,
        Err(StabilityError::Solver(_)) => return Ok(ExperimentRecord::failed(pair_id, d, h, seed)),
        Err(e) => return Err(e),
    };
    let epsilon = discrepancy(&s1.pair, &s2.pair)?;
    let tags = boundary_tags(d1, d2, setup.domain.rho0);
    Ok(ExperimentRecord {
        pair_id: pair_id.to_string(),
        d_hausdorff: d,
        epsilon,
        grad_misfit_1: misfit_integral(&s1.field, d2, Some(d1)),
        grad_misfit_2: misfit_integral(&s2.field, d1, Some(d2)),
        mesh_h: h,
        newton_iters: s1.newton_iters + s2.newton_iters,
        seed,
        crossings: tags.crossings,
        crossing_angle: tags.crossing_angle,
        intersection_rho0: tags.intersection_rho0,
        flag: PairFlag::Ok,
    })
}

/// Subdivision depth for triangles cut by a shape boundary.
const MISFIT_LEVELS: usize = 4;

/// Radial gap to `∂shape`, negative inside.
fn radial_gap(shape: &StarShape, p: Point) -> f64 {
    (p - shape.center()).norm() - shape.radius(shape.polar_angle(p))
}

/// `∫ |∇u|²` over the part of the field's mesh inside `inside` and outside
/// `outside`. Triangles far from both boundaries (by radial gap) are
/// classified whole; cut ones are split `MISFIT_LEVELS` times and each
/// piece is kept by its centroid.
pub fn misfit_integral(field: &FlowField, inside: &StarShape, outside: Option<&StarShape>) -> f64 {
    let space = &field.space;
    let mesh = space.mesh();
    let keep = |p: Point| inside.contains(p) && outside.is_none_or(|o| !o.contains(p));
    (0..mesh.n_triangles())
        .map(|t| {
            let pts = mesh.triangle_points(t);
            let size = pts[0].distance(pts[1]).max(pts[1].distance(pts[2])).max(pts[2].distance(pts[0]));
            let far = 2.0 * size;
            let gin = pts.map(|p| radial_gap(inside, p));
            let gout = outside.map(|o| pts.map(|p| radial_gap(o, p)));
            if gin.iter().all(|&g| g > far) || gout.is_some_and(|g| g.iter().all(|&g| g < -far)) {
                return 0.0;
            }
            let geom = space.geom(t);
            let whole = gin.iter().all(|&g| g < -far) && gout.is_none_or(|g| g.iter().all(|&g| g > far));
            let mut sum = 0.0;
            let mut stack = vec![([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 0usize)];
            while let Some((a, b, cc, level)) = stack.pop() {
                if !whole && level < MISFIT_LEVELS {
                    let m = |x: [f64; 3], y: [f64; 3]| [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1]), 0.5 * (x[2] + y[2])];
                    let (ab, bc, ca) = (m(a, b), m(b, cc), m(cc, a));
                    stack.extend([(a, ab, ca, level + 1), (ab, b, bc, level + 1), (ca, bc, cc, level + 1), (ab, bc, ca, level + 1)]);
                    continue;
                }
                if !whole {
                    let centroid = [(a[0] + b[0] + cc[0]) / 3.0, (a[1] + b[1] + cc[1]) / 3.0, (a[2] + b[2] + cc[2]) / 3.0];
                    if !keep(geom.point_at(centroid)) {
                        continue;
                    }
                }
                sum += piece_energy(field, t, &geom, [a, b, cc]);
            }
            sum
        })
        .sum()
}

fn piece_energy(field: &FlowField, t: usize, geom: &TriangleGeom, corners: [[f64; 3]; 3]) -> f64 {
    let area = geom.area * sub_area(corners);
    triangle7()
        .iter()
        .map(|(q, w)| {
            let l = [0, 1, 2].map(|i| q[0] * corners[0][i] + q[1] * corners[1][i] + q[2] * corners[2][i]);
            w * grad_norm2(&field.eval_in(t, geom, l).grad)
        })
        .sum::<f64>()
        * area
}

/// Area fraction of a sub-triangle given by barycentric corners.
fn sub_area(c: [[f64; 3]; 3]) -> f64 {
    ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1])).abs()
}

struct BoundaryTags {
    crossings: usize,
    crossing_angle: Option<f64>,
    intersection_rho0: Option<f64>,
}

const TAG_SAMPLES: usize = 4096;

/// Crossings of `∂D₂` through `∂D₁`, their smallest angle, and, when the
/// boundaries do not cross, the patch radius of the outer one (the inner
/// boundary of `Ω₁ ∩ Ω₂`).
fn boundary_tags(d1: &StarShape, d2: &StarShape, rho0: f64) -> BoundaryTags {
    let gap = |p: Point| radial_gap(d1, p);
    let thetas: Vec<f64> = (0..TAG_SAMPLES).map(|i| TAU * i as f64 / TAG_SAMPLES as f64).collect();
    let gaps: Vec<f64> = thetas.iter().map(|&t| gap(d2.point(t))).collect();
    let scale = 1e-12 * d1.radius(0.0).max(d2.radius(0.0));
    let sign = |g: f64| if g > scale { 1 } else if g < -scale { -1 } else { 0 };
    let mut crossings = 0;
    let mut angle: Option<f64> = None;
    for i in 0..TAG_SAMPLES {
        let j = (i + 1) % TAG_SAMPLES;
        let (si, sj) = (sign(gaps[i]), sign(gaps[j]));
        if si * sj < 0 {
            crossings += 1;
            let theta = thetas[i] + (TAU / TAG_SAMPLES as f64) * gaps[i] / (gaps[i] - gaps[j]);
            let t2 = d2.outward_normal(theta).perp();
            let t1 = d1.outward_normal(d1.polar_angle(d2.point(theta))).perp();
            let a = t1.dot(t2).abs().min(1.0).acos();
            angle = Some(angle.map_or(a, |b: f64| b.min(a)));
        }
    }
    let intersection_rho0 = (crossings == 0).then(|| {
        let outer = if gaps.iter().all(|&g| g >= -scale) { d2 } else { d1 };
        estimate_regularity_constants(outer, rho0).rho0_est
    });
    BoundaryTags {
        crossings,
        crossing_angle: angle,
        intersection_rho0,
    }
}
