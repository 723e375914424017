//! Assembly and Newton iteration for the P2/P1 discretization.
//!
//! Unknowns are the velocity components at non-boundary nodes, the pressure
//! at every vertex, and one multiplier for the zero-mean pressure gauge.
//! Boundary velocities are eliminated: residuals are always evaluated at the
//! full state, which carries the Dirichlet values.
//!
//! The gauge row is dense, and a dense row ruins the fill of a sparse LU, so
//! the bordered system `[K m; mᵀ 0]` is solved by block elimination. Constant
//! pressures span both the kernel and the cokernel of `K`. That makes the
//! multiplier `λ = 1ᵀr_p / 1ᵀm`, and `K x = r − mλ` is then consistent. It is
//! solved with `K + e₀e₀ᵀ`, which is nonsingular and agrees with `K` on
//! consistent data. Last, a constant is added to the pressure to meet the
//! gauge.

use std::sync::{Arc, OnceLock};

use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;
use rayon::prelude::*;

use super::boundary::BoundaryData;
use super::sparse_lu::{SparseLu, SymbolicFactor};
use super::fem::{p2_gradients, p2_values, P2Space};
use super::field::{FlowField, Vec2};
use super::SolverError;
use crate::geometry::Point;
use crate::quadrature::triangle7;

pub type ForceFn = dyn Fn(Point) -> Vec2 + Send + Sync;

const NLOC: usize = 15;

/// Sparsity structure and symbolic factorization for one mesh topology.
pub struct Layout {
    /// Free-velocity index per node (`None` on the boundary).
    vel_index: Vec<Option<usize>>,
    n_vel: usize,
    n_vertices: usize,
    n_dofs: usize,
    n_values: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: OnceLock<SymbolicFactor>,
}

impl std::fmt::Debug for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Layout").field("n_dofs", &self.n_dofs).finish()
    }
}

impl Layout {
    fn new(space: &P2Space) -> Result<Self, SolverError> {
        let mut vel_index = vec![None; space.n_nodes()];
        let mut n_free = 0;
        for (n, slot) in vel_index.iter_mut().enumerate() {
            if !space.is_boundary(n) {
                *slot = Some(n_free);
                n_free += 1;
            }
        }
        let n_vel = 2 * n_free;
        let nv = space.n_vertices();
        let n_dofs = n_vel + nv + 1;
        let n_core = n_vel + nv;
        let mut pairs = Vec::new();
        for t in 0..space.n_triangles() {
            let map = local_map(&vel_index, n_vel, space, t);
            for (r, gr) in map.iter().enumerate() {
                let Some(gr) = gr else { continue };
                for (s, gs) in map.iter().enumerate() {
                    let Some(gs) = gs else { continue };
                    if r >= 12 && s >= 12 {
                        continue;
                    }
                    pairs.push(Pair { row: *gr, col: *gs });
                }
            }
        }
        pairs.push(Pair { row: n_vel, col: n_vel });
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n_core, n_core, &pairs)
            .map_err(|e| SolverError::Assembly(format!("{e:?}")))?;
        Ok(Layout {
            vel_index,
            n_vel,
            n_vertices: nv,
            n_dofs,
            n_values: pairs.len(),
            symbolic,
            argsort,
            symbolic_lu: OnceLock::new(),
        })
    }

    fn local_map(&self, space: &P2Space, t: usize) -> [Option<usize>; NLOC] {
        local_map(&self.vel_index, self.n_vel, space, t)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    fn symbolic_lu(&self) -> Result<&SymbolicFactor, SolverError> {
        if let Some(s) = self.symbolic_lu.get() {
            return Ok(s);
        }
        let s = SymbolicFactor::new(self.symbolic.as_ref())?;
        Ok(self.symbolic_lu.get_or_init(|| s))
    }
}

/// Newton settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual tolerance (against the residual of the lifted data).
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 20,
            max_halvings: 10,
        }
    }
}

/// Convergence record of one nonlinear solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonTrace {
    /// Relative residual after the Stokes start and after each Newton step.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Step halvings taken per Newton step.
    pub halvings: Vec<usize>,
    /// `‖u‖_{H¹} / holder_norm_estimate(g)` (0 for zero data).
    pub energy_ratio: f64,
}

impl NewtonTrace {
    /// `r_{k+1} / r_k²` over consecutive Newton steps with `r_k` above the
    /// round-off floor.
    pub fn quadratic_ratios(&self, floor: f64) -> Vec<f64> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > floor && w[1] > floor)
            .map(|w| w[1] / (w[0] * w[0]))
            .collect()
    }
}

/// Discrete state: full velocity (with boundary values), pressure, gauge
/// multiplier.
#[derive(Clone, Debug)]
struct State {
    velocity: Vec<Vec2>,
    pressure: Vec<f64>,
    lambda: f64,
}

struct LocalSystem {
    jac: [[f64; NLOC]; NLOC],
    res: [f64; NLOC],
}

/// Forward solver bound to one space; cheap to clone, and the symbolic
/// factorization is shared with solvers built by [`NsSolver::for_space`].
#[derive(Clone)]
pub struct NsSolver {
    space: Arc<P2Space>,
    layout: Arc<Layout>,
    /// `m_j = ∫ λ_j`, the gauge row.
    vertex_mass: Vec<f64>,
    area: f64,
}

impl std::fmt::Debug for NsSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NsSolver").field("layout", &self.layout).finish()
    }
}

impl NsSolver {
    pub fn new(space: Arc<P2Space>) -> Result<Self, SolverError> {
        let layout = Arc::new(Layout::new(&space)?);
        Ok(Self::with_layout(space, layout))
    }

    /// Solver on another space, reusing the layout when the connectivity
    /// matches.
    pub fn for_space(&self, space: Arc<P2Space>) -> Result<Self, SolverError> {
        if space.same_topology(&self.space) {
            Ok(Self::with_layout(space, self.layout.clone()))
        } else {
            Self::new(space)
        }
    }

    fn with_layout(space: Arc<P2Space>, layout: Arc<Layout>) -> Self {
        let mesh = space.mesh();
        let mut vertex_mass = vec![0.0; mesh.n_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.triangle_area(t) / 3.0;
            for &v in tri {
                vertex_mass[v] += a;
            }
        }
        let area = vertex_mass.iter().sum();
        NsSolver {
            space,
            layout,
            vertex_mass,
            area,
        }
    }

    pub fn space(&self) -> &Arc<P2Space> {
        &self.space
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check_data(&self, g: &BoundaryData) -> Result<(), SolverError> {
        if g.values.len() != self.space.n_nodes() {
            return Err(SolverError::InvalidData(format!(
                "boundary data has {} nodes, space has {}",
                g.values.len(),
                self.space.n_nodes()
            )));
        }
        Ok(())
    }

    fn lifted(&self, g: &BoundaryData) -> State {
        State {
            velocity: (0..self.space.n_nodes())
                .map(|n| if self.space.is_boundary(n) { g.values[n] } else { [0.0; 2] })
                .collect(),
            pressure: vec![0.0; self.layout.n_vertices],
            lambda: 0.0,
        }
    }

    fn local(&self, t: usize, s: &State, mu: f64, convective: bool, force: Option<&ForceFn>) -> LocalSystem {
        let space = &*self.space;
        let geom = space.geom(t);
        let nodes = space.triangle_nodes(t);
        let mut jac = [[0.0; NLOC]; NLOC];
        let mut res = [0.0; NLOC];
        let uloc: [Vec2; 6] = std::array::from_fn(|a| s.velocity[nodes[a]]);
        let ploc: [f64; 3] = std::array::from_fn(|j| s.pressure[nodes[j]]);
        for (l, w) in triangle7() {
            let w = w * geom.area;
            let phi = p2_values(*l);
            let dphi = p2_gradients(*l, &geom.grad_lambda);
            let mut u = [0.0; 2];
            let mut g = [[0.0; 2]; 2];
            for a in 0..6 {
                for c in 0..2 {
                    u[c] += uloc[a][c] * phi[a];
                    g[c][0] += uloc[a][c] * dphi[a].x;
                    g[c][1] += uloc[a][c] * dphi[a].y;
                }
            }
            let p = ploc[0] * l[0] + ploc[1] * l[1] + ploc[2] * l[2];
            let f = force.map_or([0.0; 2], |f| f(geom.point_at(*l)));
            let d = |a: usize, c: usize| if c == 0 { dphi[a].x } else { dphi[a].y };
            let udphi: [f64; 6] = std::array::from_fn(|b| u[0] * dphi[b].x + u[1] * dphi[b].y);
            for a in 0..6 {
                for c in 0..2 {
                    let r = 2 * a + c;
                    let mut val = mu * (g[c][0] * dphi[a].x + g[c][1] * dphi[a].y) - p * d(a, c) - f[c] * phi[a];
                    if convective {
                        val += (u[0] * g[c][0] + u[1] * g[c][1]) * phi[a];
                    }
                    res[r] += w * val;
                    for b in 0..6 {
                        let lap = mu * dphi[b].dot(dphi[a]);
                        for e in 0..2 {
                            let mut v = if c == e { lap } else { 0.0 };
                            if convective {
                                v += (phi[b] * g[c][e] + if c == e { udphi[b] } else { 0.0 }) * phi[a];
                            }
                            jac[r][2 * b + e] += w * v;
                        }
                    }
                    for j in 0..3 {
                        jac[r][12 + j] -= w * l[j] * d(a, c);
                    }
                }
            }
            let div = g[0][0] + g[1][1];
            for j in 0..3 {
                res[12 + j] -= w * l[j] * div;
                for b in 0..6 {
                    for e in 0..2 {
                        jac[12 + j][2 * b + e] -= w * l[j] * d(b, e);
                    }
                }
            }
        }
        LocalSystem {
            jac,
            res,
        }
    }

    fn locals(&self, s: &State, mu: f64, convective: bool, force: Option<&ForceFn>) -> Vec<LocalSystem> {
        (0..self.space.n_triangles())
            .into_par_iter()
            .map(|t| self.local(t, s, mu, convective, force))
            .collect()
    }

    /// Residual vector from precomputed local systems.
    fn residual_from(&self, s: &State, locals: &[LocalSystem]) -> Vec<f64> {
        let lay = &*self.layout;
        let mut r = vec![0.0; lay.n_dofs];
        let m = &self.vertex_mass;
        for (t, loc) in locals.iter().enumerate() {
            let map = lay.local_map(&self.space, t);
            for (k, gk) in map.iter().enumerate() {
                if let Some(gk) = gk {
                    r[*gk] += loc.res[k];
                }
            }
        }
        for j in 0..lay.n_vertices {
            r[lay.n_vel + j] += s.lambda * m[j];
            r[lay.n_dofs - 1] += m[j] * s.pressure[j];
        }
        r
    }

    /// Velocity-pressure block with the pinned pressure diagonal.
    fn matrix_from(&self, locals: &[LocalSystem], mu: f64) -> Result<SparseColMat<usize, f64>, SolverError> {
        let lay = &*self.layout;
        let mut vals = Vec::with_capacity(lay.n_values);
        for (t, loc) in locals.iter().enumerate() {
            let map = lay.local_map(&self.space, t);
            for (r, gr) in map.iter().enumerate() {
                if gr.is_none() {
                    continue;
                }
                for (s, gs) in map.iter().enumerate() {
                    if gs.is_none() || (r >= 12 && s >= 12) {
                        continue;
                    }
                    vals.push(loc.jac[r][s]);
                }
            }
        }
        vals.push(self.vertex_mass[0] / mu);
        SparseColMat::new_from_argsort(lay.symbolic.clone(), &lay.argsort, &vals)
            .map_err(|e| SolverError::Assembly(format!("{e:?}")))
    }

    fn factor(&self, mat: &SparseColMat<usize, f64>) -> Result<SparseLu, SolverError> {
        SparseLu::new(self.layout.symbolic_lu()?, mat)
    }

    /// Solves the bordered system `[K m; mᵀ 0] x = b` (see the module notes).
    pub(super) fn bordered_solve(&self, lu: &SparseLu, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        let lay = &*self.layout;
        let (nvel, nv) = (lay.n_vel, lay.n_vertices);
        let m = &self.vertex_mass;
        let lambda = b[nvel..nvel + nv].iter().sum::<f64>() / self.area;
        let mut rhs = Mat::<f64>::from_fn(nvel + nv, 1, |i, _| if i < nvel { b[i] } else { b[i] - m[i - nvel] * lambda });
        lu.solve_in_place(rhs.as_mut());
        let mut x: Vec<f64> = (0..nvel + nv).map(|i| rhs[(i, 0)]).collect();
        let mean: f64 = (0..nv).map(|j| m[j] * x[nvel + j]).sum();
        let shift = (b[nvel + nv] - mean) / self.area;
        x[nvel..].iter_mut().for_each(|p| *p += shift);
        x.push(lambda);
        Ok(x)
    }

    /// Solves `J δ = −r`.
    fn newton_direction(&self, lu: &SparseLu, r: &[f64]) -> Result<Vec<f64>, SolverError> {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = self.bordered_solve(lu, &neg)?;
        if d.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::Singular(
                "non-finite solution of the linear system; check boundary tags and the pressure gauge".into(),
            ));
        }
        Ok(d)
    }

    fn apply(&self, s: &State, d: &[f64], step: f64) -> State {
        let lay = &*self.layout;
        let mut out = s.clone();
        for (n, k) in lay.vel_index.iter().enumerate() {
            if let Some(k) = k {
                out.velocity[n][0] += step * d[2 * k];
                out.velocity[n][1] += step * d[2 * k + 1];
            }
        }
        for j in 0..lay.n_vertices {
            out.pressure[j] += step * d[lay.n_vel + j];
        }
        out.lambda += step * d[lay.n_dofs - 1];
        out
    }

    fn to_field(&self, s: State, mu: f64) -> FlowField {
        FlowField {
            space: self.space.clone(),
            velocity: s.velocity,
            pressure: s.pressure,
            mu,
            gauge_multiplier: s.lambda,
        }
    }

    fn from_field(&self, field: &FlowField) -> State {
        State {
            velocity: field.velocity.clone(),
            pressure: field.pressure.clone(),
            lambda: field.gauge_multiplier,
        }
    }

    /// One linear solve of the Stokes system.
    pub fn solve_stokes(&self, mu: f64, g: &BoundaryData, force: Option<&ForceFn>) -> Result<FlowField, SolverError> {
        check_mu(mu)?;
        self.check_data(g)?;
        let s0 = self.lifted(g);
        let locals = self.locals(&s0, mu, false, force);
        let r0 = self.residual_from(&s0, &locals);
        if norm(&r0) == 0.0 {
            return Ok(self.to_field(s0, mu));
        }
        let lu = self.factor(&self.matrix_from(&locals, mu)?)?;
        let d = self.newton_direction(&lu, &r0)?;
        Ok(self.to_field(self.apply(&s0, &d, 1.0), mu))
    }

    /// Newton iteration from the Stokes solution.
    pub fn solve_navier_stokes(
        &self,
        mu: f64,
        g: &BoundaryData,
        force: Option<&ForceFn>,
        opts: &SolverOptions,
    ) -> Result<(FlowField, NewtonTrace), SolverError> {
        let start = self.solve_stokes(mu, g, force)?;
        self.newton_from(&start, g, force, opts)
    }

    /// Newton iteration from an arbitrary start (boundary values are reset
    /// to `g`).
    pub fn newton_from(
        &self,
        start: &FlowField,
        g: &BoundaryData,
        force: Option<&ForceFn>,
        opts: &SolverOptions,
    ) -> Result<(FlowField, NewtonTrace), SolverError> {
        check_mu(start.mu)?;
        self.check_data(g)?;
        if !(opts.tol > 0.0) {
            return Err(SolverError::InvalidData(format!("tol must be positive, got {}", opts.tol)));
        }
        let mu = start.mu;
        let lifted = self.lifted(g);
        let scale = norm(&self.residual_from(&lifted, &self.locals(&lifted, mu, true, force)));
        let mut s = self.from_field(start);
        for n in 0..self.space.n_nodes() {
            if self.space.is_boundary(n) {
                s.velocity[n] = g.values[n];
            }
        }
        let mut trace = NewtonTrace::default();
        let rel = |r: f64| if scale > 0.0 { r / scale } else { r };
        let mut locals = self.locals(&s, mu, true, force);
        let mut r = self.residual_from(&s, &locals);
        let mut rn = norm(&r);
        trace.residuals.push(rel(rn));
        while rel(rn) > opts.tol && !(scale == 0.0 && rn == 0.0) {
            if trace.iterations >= opts.max_iter {
                return Err(SolverError::NonConvergence {
                    residuals: trace.residuals,
                });
            }
            let lu = self.factor(&self.matrix_from(&locals, mu)?)?;
            let d = self.newton_direction(&lu, &r)?;
            let mut step = 1.0;
            let mut halvings = 0;
            let (mut trial, mut tl, mut tr, mut tn);
            loop {
                trial = self.apply(&s, &d, step);
                tl = self.locals(&trial, mu, true, force);
                tr = self.residual_from(&trial, &tl);
                tn = norm(&tr);
                if tn < rn || halvings >= opts.max_halvings {
                    break;
                }
                step *= 0.5;
                halvings += 1;
            }
            if !tn.is_finite() {
                return Err(SolverError::NonConvergence {
                    residuals: trace.residuals,
                });
            }
            s = trial;
            locals = tl;
            r = tr;
            rn = tn;
            trace.iterations += 1;
            trace.halvings.push(halvings);
            trace.residuals.push(rel(rn));
        }
        let field = self.to_field(s, mu);
        trace.energy_ratio = if g.holder_norm_estimate > 0.0 {
            field.h1_norm() / g.holder_norm_estimate
        } else {
            0.0
        };
        Ok((field, trace))
    }

    /// Relative nonlinear residual of `field` (against the lifted data).
    pub fn residual_norm(&self, field: &FlowField, g: &BoundaryData, force: Option<&ForceFn>) -> f64 {
        let lifted = self.lifted(g);
        let scale = norm(&self.residual_from(&lifted, &self.locals(&lifted, field.mu, true, force)));
        let s = self.from_field(field);
        let r = norm(&self.residual_from(&s, &self.locals(&s, field.mu, true, force)));
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// Factorized Stokes matrix with `μ = 1`, for the inf-sup estimate.
    pub(super) fn stokes_operator(&self) -> Result<SparseLu, SolverError> {
        let g = BoundaryData::zero(&self.space, 1.0);
        let s = self.lifted(&g);
        self.factor(&self.matrix_from(&self.locals(&s, 1.0, false, None), 1.0)?)
    }

    pub(super) fn pressure_offset(&self) -> usize {
        self.layout.n_vel
    }
}

fn local_map(vel_index: &[Option<usize>], n_vel: usize, space: &P2Space, t: usize) -> [Option<usize>; NLOC] {
    let nodes = space.triangle_nodes(t);
    let mut map = [None; NLOC];
    for a in 0..6 {
        if let Some(k) = vel_index[nodes[a]] {
            map[2 * a] = Some(2 * k);
            map[2 * a + 1] = Some(2 * k + 1);
        }
    }
    for j in 0..3 {
        map[12 + j] = Some(n_vel + nodes[j]);
    }
    map
}

fn check_mu(mu: f64) -> Result<(), SolverError> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidData(format!("viscosity must be positive, got {mu}")))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Stokes solve on a fresh solver.
pub fn solve_stokes(
    space: Arc<P2Space>,
    mu: f64,
    g: &BoundaryData,
    force: Option<&ForceFn>,
) -> Result<FlowField, SolverError> {
    NsSolver::new(space)?.solve_stokes(mu, g, force)
}

/// Navier–Stokes solve on a fresh solver.
pub fn solve_navier_stokes(
    space: Arc<P2Space>,
    mu: f64,
    g: &BoundaryData,
    opts: &SolverOptions,
) -> Result<(FlowField, NewtonTrace), SolverError> {
    NsSolver::new(space)?.solve_navier_stokes(mu, g, None, opts)
}
