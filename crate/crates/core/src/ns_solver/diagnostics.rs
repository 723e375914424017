//! Checks run on converged fields: Hölder surrogate, energy identity,
//! uniqueness from several starts, and the discrete inf-sup constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::boundary::BoundaryData;
use super::field::{grad_norm2, FlowField, Grad2};
use super::solver::{ForceFn, NsSolver, SolverOptions};
use super::SolverError;
use crate::geometry::Point;
use crate::quadrature::gauss5;

/// Random vertex pairs sampled for the Hölder quotient, on top of mesh edges.
pub const HOLDER_SAMPLES: usize = 10_000;

fn grad_diff(a: &Grad2, b: &Grad2) -> f64 {
    let d = [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]];
    grad_norm2(&d).sqrt()
}

/// `sup|u| + ρ₀ sup|∇u| + ρ₀^{1+α} sup |∇u(x)−∇u(y)|/|x−y|^α` over mesh
/// vertices, with gradients averaged over adjacent triangles. The Hölder
/// quotient is sampled on mesh edges plus [`HOLDER_SAMPLES`] seeded pairs.
pub fn c1alpha_norm_estimate(field: &FlowField, alpha: f64, rho0: f64, seed: u64) -> f64 {
    let mesh = field.space.mesh();
    let nv = mesh.n_vertices();
    let grads = field.vertex_gradients();
    let sup_u = field.velocity[..nv].iter().map(|u| u[0].hypot(u[1])).fold(0.0, f64::max);
    let sup_g = grads.iter().map(|g| grad_norm2(g).sqrt()).fold(0.0, f64::max);
    let quotient = |i: usize, j: usize| {
        let r = mesh.vertices[i].distance(mesh.vertices[j]);
        if r > 0.0 {
            grad_diff(&grads[i], &grads[j]) / r.powf(alpha)
        } else {
            0.0
        }
    };
    let mut holder = 0.0f64;
    for e in &field.space.edge_table().edges {
        holder = holder.max(quotient(e[0], e[1]));
    }
    if nv > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..HOLDER_SAMPLES {
            let i = rng.random_range(0..nv);
            let j = rng.random_range(0..nv);
            holder = holder.max(quotient(i, j));
        }
    }
    sup_u + rho0 * sup_g + rho0.powf(1.0 + alpha) * holder
}

/// Region over which the energy identity is checked.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Whole,
    /// Triangles whose centroid lies in the disk.
    Disk { center: Point, radius: f64 },
    /// Explicit per-triangle mask.
    Mask(Vec<bool>),
}

impl Region {
    pub fn mask(&self, field: &FlowField) -> Vec<bool> {
        let mesh = field.space.mesh();
        match self {
            Region::Whole => vec![true; mesh.n_triangles()],
            Region::Disk { center, radius } => (0..mesh.n_triangles())
                .map(|t| {
                    let [a, b, c] = mesh.triangle_points(t);
                    ((a + b + c) * (1.0 / 3.0)).distance(*center) < *radius
                })
                .collect(),
            Region::Mask(m) => m.clone(),
        }
    }
}

/// Both sides of the energy identity over a region: `μ∫|∇u|²` and the
/// boundary integral of `μ(∂_ν u)·u − ½(u·ν)|u|² − p(u·ν)`.
pub fn energy_identity_sides(field: &FlowField, region: &Region) -> (f64, f64) {
    let mask = region.mask(field);
    let mu = field.mu;
    let lhs = mu * field.integrate_where(|t| mask[t], |_, v| grad_norm2(&v.grad));
    let space = &field.space;
    let edges = space.edge_table();
    let (gx, gw) = gauss5();
    let mut rhs = 0.0;
    for t in (0..space.n_triangles()).filter(|&t| mask[t]) {
        let geom = space.geom(t);
        for k in 0..3 {
            let e = edges.triangle_edges[t][k];
            let other = edges.edge_triangles[e].into_iter().flatten().find(|&s| s != t);
            if other.is_some_and(|s| mask[s]) {
                continue;
            }
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let d = geom.points[j] - geom.points[i];
            let len = d.norm();
            let nu = Point::new(d.y, -d.x) * (1.0 / len);
            for (s, w) in gx.iter().zip(gw) {
                let mut l = [0.0; 3];
                l[i] = 1.0 - s;
                l[j] = *s;
                let v = field.eval_in(t, &geom, l);
                let un = v.u[0] * nu.x + v.u[1] * nu.y;
                let uu = v.u[0] * v.u[0] + v.u[1] * v.u[1];
                let dnu_u = (0..2)
                    .map(|c| (v.grad[c][0] * nu.x + v.grad[c][1] * nu.y) * v.u[c])
                    .sum::<f64>();
                rhs += w * len * (mu * dnu_u - 0.5 * un * uu - v.p * un);
            }
        }
    }
    (lhs, rhs)
}

/// `|LHS − RHS| / LHS` of [`energy_identity_sides`]; 0 when both vanish.
pub fn energy_identity_residual(field: &FlowField, region: &Region) -> f64 {
    let (lhs, rhs) = energy_identity_sides(field, region);
    if lhs == 0.0 {
        if rhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (lhs - rhs).abs() / lhs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UniquenessVerdict {
    Unique,
    NonUnique,
    Inconclusive,
}

impl std::fmt::Display for UniquenessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UniquenessVerdict::Unique => "unique",
            UniquenessVerdict::NonUnique => "non-unique",
            UniquenessVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniquenessOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Perturbation amplitude relative to `max(1, sup|g|)`.
    pub perturbation: f64,
    /// H¹ distance under which two iterates coincide.
    pub tolerance: f64,
    pub solver: SolverOptions,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        UniquenessOptions {
            n_starts: 5,
            seed: 0,
            perturbation: 1.0,
            tolerance: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    pub verdict: UniquenessVerdict,
    /// Per start: converged or not (start 0 is the Stokes start).
    pub converged: Vec<bool>,
    /// Largest pairwise H¹ distance between converged iterates.
    pub max_pairwise_h1: f64,
}

/// Newton from the Stokes solution and from `n_starts − 1` starts perturbed
/// by random smooth sine modes.
pub fn check_small_data_uniqueness(
    solver: &NsSolver,
    mu: f64,
    g: &BoundaryData,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport, SolverError> {
    check_uniqueness_with_force(solver, mu, g, None, opts)
}

pub fn check_uniqueness_with_force(
    solver: &NsSolver,
    mu: f64,
    g: &BoundaryData,
    force: Option<&ForceFn>,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport, SolverError> {
    if opts.n_starts < 2 {
        return Err(SolverError::InvalidData(format!("n_starts must be at least 2, got {}", opts.n_starts)));
    }
    let space = solver.space();
    let stokes = solver.solve_stokes(mu, g, force)?;
    let gmax = g.values.iter().map(|v| v[0].hypot(v[1])).fold(1.0, f64::max);
    let amp = opts.perturbation * gmax;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut results = Vec::with_capacity(opts.n_starts);
    for k in 0..opts.n_starts {
        let mut start = stokes.clone();
        if k > 0 {
            let modes: Vec<(Point, f64, [f64; 2])> = (0..4)
                .map(|_| {
                    let w = Point::from_polar(rng.random_range(1.0..6.0), rng.random_range(0.0..std::f64::consts::TAU));
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    (w, phase, [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                })
                .collect();
            for n in 0..space.n_nodes() {
                if space.is_boundary(n) {
                    continue;
                }
                let x = space.node_point(n);
                for (w, phase, a) in &modes {
                    let s = (w.dot(x) + phase).sin() * amp * 0.25;
                    start.velocity[n][0] += a[0] * s;
                    start.velocity[n][1] += a[1] * s;
                }
            }
        }
        results.push(solver.newton_from(&start, g, force, &opts.solver).ok().map(|r| r.0));
    }
    let converged: Vec<bool> = results.iter().map(Option::is_some).collect();
    let fields: Vec<&FlowField> = results.iter().flatten().collect();
    let mut max_d = 0.0f64;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            max_d = max_d.max(fields[i].difference(fields[j]).h1_norm());
        }
    }
    let verdict = if max_d >= opts.tolerance {
        UniquenessVerdict::NonUnique
    } else if converged.iter().all(|&c| c) {
        UniquenessVerdict::Unique
    } else {
        UniquenessVerdict::Inconclusive
    };
    Ok(UniquenessReport {
        verdict,
        converged,
        max_pairwise_h1: max_d,
    })
}

/// P1 mass matrix times a vertex vector.
fn mass_apply(field_space: &super::fem::P2Space, x: &[f64]) -> Vec<f64> {
    let mesh = field_space.mesh();
    let mut y = vec![0.0; x.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.triangle_area(t) / 12.0;
        let s: f64 = tri.iter().map(|&v| x[v]).sum();
        for &v in tri {
            y[v] += a * (s + x[v]);
        }
    }
    y
}

/// Discrete inf-sup constant `β = min_q sup_v (q, div v) / (|v|_{H¹} ‖q‖)`
/// over zero-mean pressures, by inverse iteration on the pressure Schur
/// complement against the mass matrix.
pub fn inf_sup_constant(solver: &NsSolver) -> Result<f64, SolverError> {
    let lu = solver.stokes_operator()?;
    let space = solver.space();
    let nv = space.n_vertices();
    let off = solver.pressure_offset();
    let n = solver.layout().n_dofs();
    let area = space.mesh().area();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut x: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
    let center = |x: &mut Vec<f64>| {
        let mean = mass_apply(space, x).iter().sum::<f64>() / area;
        x.iter_mut().for_each(|v| *v -= mean);
    };
    center(&mut x);
    let mut theta = 0.0;
    for _ in 0..400 {
        let mx = mass_apply(space, &x);
        let xmx: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let mut rhs = vec![0.0; n];
        for j in 0..nv {
            rhs[off + j] = -mx[j];
        }
        let sol = solver.bordered_solve(&lu, &rhs)?;
        let mut q: Vec<f64> = sol[off..off + nv].to_vec();
        if q.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Singular("inf-sup iteration produced non-finite values".into()));
        }
        center(&mut q);
        let next: f64 = q.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() / xmx;
        let qn = mass_apply(space, &q).iter().zip(&q).map(|(a, b)| a * b).sum::<f64>().sqrt();
        x = q.iter().map(|v| v / qn).collect();
        let done = (next - theta).abs() <= 1e-9 * next.abs();
        theta = next;
        if done {
            break;
        }
    }
    Ok(1.0 / theta.abs().sqrt())
}
