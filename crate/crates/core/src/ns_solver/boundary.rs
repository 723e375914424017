//! Dirichlet data on the outer boundary.

use std::fmt;
use std::sync::Arc;

use super::fem::P2Space;
use super::field::Vec2;
use super::SolverError;
use crate::geometry::{ArclengthMap, DomainSpec, Point};
use crate::meshing::BoundaryTag;

type ProfileFn = dyn Fn(Point) -> Vec2 + Send + Sync;

/// Velocity data at the boundary nodes plus its measured norms.
#[derive(Clone)]
pub struct BoundaryData {
    /// Value at every P2 node (zero off the boundary and on OBSTACLE nodes).
    pub values: Vec<Vec2>,
    /// Analytic profile, evaluated at points of the container boundary.
    profile: Arc<ProfileFn>,
    /// Support as an arclength interval of Γ, when the profile is localized.
    pub support: Option<(f64, f64)>,
    /// C^{1,α} surrogate `sup|g| + ρ₀ sup|g'| + ρ₀^{1+α}[g']_α` along the
    /// boundary loops (α = 0.5).
    pub holder_norm_estimate: f64,
    /// `ρ₀^{-1/2} ‖g‖_{L²(∂Ω)}`.
    pub l2_norm: f64,
    /// Discrete normal flux `∫ g·ν` over the polygonal boundary.
    pub flux: f64,
    /// Componentwise integral `∫ g ds`, reported as a diagnostic only.
    pub componentwise_integral: Vec2,
    pub rho0: f64,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("support", &self.support)
            .field("holder_norm_estimate", &self.holder_norm_estimate)
            .field("l2_norm", &self.l2_norm)
            .field("flux", &self.flux)
            .finish()
    }
}

/// Localized profile on Γ: with `σ = (s − s_c)/w`,
/// `g = A[t·b(σ)τ + n·q(σ)ν] − c·A·b(σ)ν`, `b = (1−σ²)³`, `q = σ(1−σ²)³`,
/// where `c` cancels the discrete normal flux.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile {
    pub amplitude: f64,
    /// Center as a fraction of the length of Γ.
    pub center: f64,
    /// Half width as a fraction of the length of Γ.
    pub half_width: f64,
    pub tangential: f64,
    pub normal: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile {
            amplitude: 1.0,
            center: 0.5,
            half_width: 0.3,
            tangential: 1.0,
            normal: 0.5,
        }
    }
}

fn bump(sigma: f64) -> f64 {
    if sigma.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - sigma * sigma).powi(3)
    }
}

/// Quadratic trace on an edge at `t ∈ [0,1]` from end, mid and end values.
fn edge_value(a: Vec2, m: Vec2, b: Vec2, t: f64) -> Vec2 {
    let (wa, wm, wb) = ((1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0));
    [wa * a[0] + wm * m[0] + wb * b[0], wa * a[1] + wm * m[1] + wb * b[1]]
}

impl BoundaryData {
    pub fn zero(space: &P2Space, rho0: f64) -> Self {
        Self::from_fn(space, rho0, |_| [0.0, 0.0])
    }

    /// Evaluates `f` at every GAMMA and WALL node; OBSTACLE nodes get zero.
    pub fn from_fn(space: &P2Space, rho0: f64, f: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        let profile: Arc<ProfileFn> = Arc::new(f);
        let values = (0..space.n_nodes())
            .map(|n| match space.node_tag(n) {
                Some(BoundaryTag::Gamma) | Some(BoundaryTag::Wall) => profile(space.node_point(n)),
                _ => [0.0, 0.0],
            })
            .collect();
        let mut data = BoundaryData {
            values,
            profile,
            support: None,
            holder_norm_estimate: 0.0,
            l2_norm: 0.0,
            flux: 0.0,
            componentwise_integral: [0.0, 0.0],
            rho0,
        };
        data.measure(space);
        data
    }

    /// `(u_max(1 − y²), 0)`, the parabolic channel profile.
    pub fn poiseuille(space: &P2Space, rho0: f64, umax: f64) -> Self {
        Self::from_fn(space, rho0, move |p| [umax * (1.0 - p.y * p.y), 0.0])
    }

    /// `ω(−(y − c_y), x − c_x)` on the outer boundary.
    pub fn rigid_rotation(space: &P2Space, rho0: f64, omega: f64, center: Point) -> Self {
        Self::from_fn(space, rho0, move |p| {
            let d = p - center;
            [-omega * d.y, omega * d.x]
        })
    }

    /// Localized data on Γ with the flux correction described at
    /// [`BumpProfile`].
    pub fn bump(space: &P2Space, domain: &DomainSpec, bump_profile: &BumpProfile) -> Result<Self, SolverError> {
        let container = domain.container.clone();
        let map = ArclengthMap::new(&container, domain.gamma.start);
        let gamma_len = if domain.gamma.span() >= std::f64::consts::TAU - 1e-12 {
            map.length()
        } else {
            map.s_of_theta(domain.gamma.end)
        };
        let sc = bump_profile.center * gamma_len;
        let w = bump_profile.half_width * gamma_len;
        if !(w > 0.0 && sc - w > 0.0 && sc + w < gamma_len) {
            return Err(SolverError::InvalidData(format!(
                "bump support [{}, {}] not compactly inside Γ = [0, {gamma_len}]",
                sc - w,
                sc + w
            )));
        }
        let bp = *bump_profile;
        // Returns (tangential part, normal bump b(σ)·ν) so the flux
        // correction can be solved for before fixing the profile.
        let parts: Arc<dyn Fn(Point) -> (Vec2, Vec2) + Send + Sync> = Arc::new(move |p: Point| {
            let theta = container.polar_angle(p);
            let sigma = (map.s_of_theta(theta) - sc) / w;
            let b = bump(sigma);
            if b == 0.0 {
                return ([0.0; 2], [0.0; 2]);
            }
            let nu = container.outward_normal(theta);
            let tau = nu.perp();
            let (tt, tn) = (bp.amplitude * bp.tangential * b, bp.amplitude * bp.normal * sigma * b);
            (
                [tt * tau.x + tn * nu.x, tt * tau.y + tn * nu.y],
                [bp.amplitude * b * nu.x, bp.amplitude * b * nu.y],
            )
        });
        let f = parts.clone();
        let uncorrected = Self::from_fn(space, domain.rho0, move |p| f(p).0);
        let f = parts.clone();
        let unit = Self::from_fn(space, domain.rho0, move |p| f(p).1);
        let c = uncorrected.flux / unit.flux;
        let mut data = Self::from_fn(space, domain.rho0, move |p| {
            let (g, n) = parts(p);
            [g[0] - c * n[0], g[1] - c * n[1]]
        });
        data.support = Some((sc - w, sc + w));
        Ok(data)
    }

    /// Profile value at a point of the container boundary.
    pub fn eval(&self, p: Point) -> Vec2 {
        (self.profile)(p)
    }

    /// Same profile scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.profile.clone();
        BoundaryData {
            values: self.values.iter().map(|v| [c * v[0], c * v[1]]).collect(),
            profile: Arc::new(move |p| {
                let v = inner(p);
                [c * v[0], c * v[1]]
            }),
            support: self.support,
            holder_norm_estimate: c.abs() * self.holder_norm_estimate,
            l2_norm: c.abs() * self.l2_norm,
            flux: c * self.flux,
            componentwise_integral: [c * self.componentwise_integral[0], c * self.componentwise_integral[1]],
            rho0: self.rho0,
        }
    }

    /// Transfers the profile onto another space (for example a second
    /// obstacle mesh with the same container).
    pub fn on_space(&self, space: &P2Space) -> Self {
        let inner = self.profile.clone();
        let mut data = Self::from_fn(space, self.rho0, move |p| inner(p));
        data.support = self.support;
        data
    }

    fn measure(&mut self, space: &P2Space) {
        let mesh = space.mesh();
        let mids = space.boundary_midpoints();
        let (gx, gw) = crate::quadrature::gauss5();
        let mut flux = 0.0;
        let mut comp = [0.0; 2];
        let mut l2 = 0.0;
        for (be, &m) in mesh.boundary_edges.iter().zip(&mids) {
            let (a, b) = (self.values[be.v[0]], self.values[be.v[1]]);
            let gm = self.values[m];
            let len = mesh.vertices[be.v[0]].distance(mesh.vertices[be.v[1]]);
            let nu = mesh.edge_outward_normal(be);
            for c in 0..2 {
                comp[c] += len / 6.0 * (a[c] + 4.0 * gm[c] + b[c]);
            }
            flux += len / 6.0 * ((a[0] + 4.0 * gm[0] + b[0]) * nu.x + (a[1] + 4.0 * gm[1] + b[1]) * nu.y);
            for (t, w) in gx.iter().zip(gw) {
                let v = edge_value(a, gm, b, *t);
                l2 += w * len * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        self.flux = flux;
        self.componentwise_integral = comp;
        self.l2_norm = (l2 / self.rho0).sqrt();
        self.holder_norm_estimate = self.holder_estimate(space, 0.5);
    }

    /// Walks each boundary loop through vertex and midpoint nodes and takes
    /// finite-difference tangential derivatives.
    fn holder_estimate(&self, space: &P2Space, alpha: f64) -> f64 {
        let mesh = space.mesh();
        let mids = space.boundary_midpoints();
        let Ok(loops) = mesh.boundary_loops() else {
            return f64::NAN;
        };
        let mut sup = 0.0f64;
        let mut dsup = 0.0f64;
        let mut holder = 0.0f64;
        for lp in loops {
            let mut pts = Vec::with_capacity(2 * lp.len() + 1);
            let mut vals = Vec::with_capacity(2 * lp.len() + 1);
            for &i in &lp {
                let be = mesh.boundary_edges[i];
                pts.push(mesh.vertices[be.v[0]]);
                vals.push(self.values[be.v[0]]);
                pts.push(space.node_point(mids[i]));
                vals.push(self.values[mids[i]]);
            }
            pts.push(pts[0]);
            vals.push(vals[0]);
            for v in &vals {
                sup = sup.max(v[0].hypot(v[1]));
            }
            let derivs: Vec<(Point, Vec2)> = (0..pts.len() - 1)
                .map(|k| {
                    let ds = pts[k].distance(pts[k + 1]);
                    let d = [(vals[k + 1][0] - vals[k][0]) / ds, (vals[k + 1][1] - vals[k][1]) / ds];
                    ((pts[k] + pts[k + 1]) * 0.5, d)
                })
                .collect();
            for (_, d) in &derivs {
                dsup = dsup.max(d[0].hypot(d[1]));
            }
            let stride = (derivs.len() / 512).max(1);
            let sub: Vec<&(Point, Vec2)> = derivs.iter().step_by(stride).collect();
            for (i, (x, dx)) in sub.iter().enumerate() {
                for (y, dy) in &sub[i + 1..] {
                    let r = x.distance(*y);
                    if r > 0.0 {
                        holder = holder.max((dx[0] - dy[0]).hypot(dx[1] - dy[1]) / r.powf(alpha));
                    }
                }
            }
        }
        sup + self.rho0 * dsup + self.rho0.powf(1.0 + alpha) * holder
    }
}
