use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::morph::morph_vertices;
use super::pair::{solve_on, PairSetup};
use super::StabilityError;
use crate::cauchy::{discrepancy, CauchyPair};
use crate::geometry::{obstacle_clearance, Point, StarShape};
use crate::meshing::generate_mesh;
use crate::ns_solver::{FlowField, NsSolver, P2Space};

/// `[cx, cy, a₀, a₁..a_K, b₁..b_K]`, truncated or zero-padded to order `k`.
pub fn shape_parameters(shape: &StarShape, k: usize) -> Vec<f64> {
    let c = shape.center();
    let mut p = vec![c.x, c.y];
    p.extend((0..=k).map(|i| shape.cos_coeffs().get(i).copied().unwrap_or(0.0)));
    p.extend((0..k).map(|i| shape.sin_coeffs().get(i).copied().unwrap_or(0.0)));
    p
}

pub fn shape_from_parameters(p: &[f64]) -> Result<StarShape, StabilityError> {
    if p.len() < 3 || (p.len() - 3) % 2 != 0 {
        return Err(StabilityError::Invalid(format!("{} shape parameters", p.len())));
    }
    let k = (p.len() - 3) / 2;
    Ok(StarShape::new(Point::new(p[0], p[1]), p[2..3 + k].to_vec(), p[3 + k..].to_vec())?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Budget on the summed cost reported by the objective.
    pub budget: usize,
    /// Hard cap on objective calls (infeasible points may cost nothing).
    pub max_calls: usize,
    /// Stop once the best value is at or below this.
    pub target: f64,
    /// A run ends when the simplex diameter drops below this.
    pub xtol: f64,
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            budget: 200,
            max_calls: 10_000,
            target: 0.0,
            xtol: 1e-8,
            max_restarts: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value after each completed iteration.
    pub trace: Vec<f64>,
    pub cost: usize,
    pub calls: usize,
    /// Budget or call cap reached before convergence or target.
    pub exhausted: bool,
}

/// Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½) with
/// restarts from the best point at half the previous step. The objective
/// returns its value and a cost counted against the budget.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> (f64, usize),
    x0: &[f64],
    step: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let mut cost = 0usize;
    let mut calls = 0usize;
    let mut best = (x0.to_vec(), f64::INFINITY);
    let mut trace = Vec::new();
    let out_of_budget = |cost: usize, calls: usize| cost >= opts.budget || calls >= opts.max_calls;
    // Past the budget the objective is not called; the loop then stops.
    let mut eval = |x: &[f64], cost: &mut usize, calls: &mut usize, best: &mut (Vec<f64>, f64)| {
        if out_of_budget(*cost, *calls) {
            return f64::INFINITY;
        }
        let (v, c) = f(x);
        *cost += c;
        *calls += 1;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < best.1 {
            *best = (x.to_vec(), v);
        }
        v
    };
    let mut scale = 1.0;
    let mut exhausted = false;
    'restarts: for restart in 0..=opts.max_restarts {
        let start = if restart == 0 { x0.to_vec() } else { best.0.clone() };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            if out_of_budget(cost, calls) {
                exhausted = true;
                break 'restarts;
            }
            let mut x = start.clone();
            if i > 0 {
                x[i - 1] += scale * step[i - 1];
            }
            let v = if i == 0 && restart > 0 { best.1 } else { eval(&x, &mut cost, &mut calls, &mut best) };
            simplex.push((x, v));
            if best.1 <= opts.target {
                break 'restarts;
            }
        }
        let best_before = best.1;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diameter < opts.xtol {
                break;
            }
            if best.1 <= opts.target {
                break 'restarts;
            }
            if out_of_budget(cost, calls) {
                exhausted = true;
                break 'restarts;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect() };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut cost, &mut calls, &mut best);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = if out_of_budget(cost, calls) { f64::INFINITY } else { eval(&xe, &mut cost, &mut calls, &mut best) };
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let x = along(-0.5);
                    let v = eval(&x, &mut cost, &mut calls, &mut best);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = eval(&x, &mut cost, &mut calls, &mut best);
                    (x, v)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        if out_of_budget(cost, calls) {
                            break;
                        }
                        let x: Vec<f64> = (0..n).map(|j| x0[j] + 0.5 * (item.0[j] - x0[j])).collect();
                        let v = eval(&x, &mut cost, &mut calls, &mut best);
                        *item = (x, v);
                    }
                }
            }
            trace.push(best.1);
        }
        if best.1 >= best_before && restart > 0 {
            break;
        }
        scale *= 0.5;
    }
    NelderMeadResult {
        x: best.0,
        value: best.1,
        trace,
        cost,
        calls,
        exhausted,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionOptions {
    /// Forward-solve budget.
    pub budget: usize,
    /// Fourier order of the search; `None` uses the init order capped at 3.
    pub order: Option<usize>,
    /// Mesh size of the reference mesh around the initial shape.
    pub h: f64,
    /// Stop once `ε ≤ target_rel · ρ₀‖ψ_measured‖_{H^{-1/2}}`.
    pub target_rel: f64,
    /// Initial simplex steps for the center, `a₀`, and higher modes.
    pub center_step: f64,
    pub radius_step: f64,
    pub mode_step: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            budget: 200,
            order: None,
            h: 0.05,
            target_rel: 1e-9,
            center_step: 0.05,
            radius_step: 0.03,
            mode_step: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub shape: StarShape,
    pub misfit: f64,
    /// Best misfit after each simplex iteration; non-increasing.
    pub trace: Vec<f64>,
    pub solves: usize,
    /// Budget exhausted before convergence; `shape` is the best so far.
    pub exhausted: bool,
}

/// Derivative-free fit of the obstacle to measured Cauchy data, `measured`
/// being produced with the same `setup`. Candidates live on one mesh
/// generated around `init` and morphed to each candidate, so solver
/// layouts are shared and Newton is warm-started from the best field.
pub fn reconstruct_obstacle(
    measured: &CauchyPair,
    setup: &PairSetup,
    init: &StarShape,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult, StabilityError> {
    if opts.budget == 0 {
        return Err(StabilityError::Invalid("budget must allow at least one solve".into()));
    }
    let init_domain = setup.domain_with(init)?;
    let base = Arc::new(P2Space::new(generate_mesh(&init_domain, opts.h)?));
    let solver = NsSolver::new(base.clone())?;
    let zero = measured.psi.iter().map(|_| [0.0; 2]).collect();
    let scale = discrepancy(measured, &CauchyPair { psi: zero, ..measured.clone() })?;
    let init_clearance = obstacle_clearance(&setup.domain.container, init);

    let k = opts.order.unwrap_or(init.order().min(3));
    let x0 = shape_parameters(init, k);
    let mut step = vec![opts.center_step, opts.center_step, opts.radius_step];
    step.extend(std::iter::repeat(opts.mode_step).take(2 * k));

    let mut best_field: Option<(f64, FlowField)> = None;
    let mut objective = |p: &[f64]| -> (f64, usize) {
        let Ok(shape) = shape_from_parameters(p) else { return (f64::INFINITY, 0) };
        let Ok(domain) = setup.domain_with(&shape) else { return (f64::INFINITY, 0) };
        let band = 0.9 * init_clearance.min(obstacle_clearance(&setup.domain.container, &shape));
        let Some(vertices) = morph_vertices(&base, init, &shape, band) else { return (f64::INFINITY, 0) };
        let space = Arc::new(base.with_vertices(vertices));
        let Ok(local) = solver.for_space(space) else { return (f64::INFINITY, 1) };
        let start = best_field.as_ref().map(|(_, f)| f);
        let solved = match solve_on(setup, domain.clone(), &local, start) {
            Ok(s) => Ok(s),
            // A poor warm start can stall Newton; retry from Stokes.
            Err(_) if start.is_some() => solve_on(setup, domain, &local, None),
            Err(e) => Err(e),
        };
        let Ok(solved) = solved else { return (f64::INFINITY, 1) };
        let eps = discrepancy(measured, &solved.pair).unwrap_or(f64::INFINITY);
        if best_field.as_ref().is_none_or(|(b, _)| eps < *b) {
            best_field = Some((eps, solved.field));
        }
        (eps, 1)
    };
    let nm = NelderMeadOptions {
        budget: opts.budget,
        target: opts.target_rel * scale,
        ..NelderMeadOptions::default()
    };
    let result = nelder_mead(&mut objective, &x0, &step, &nm);
    if !result.value.is_finite() {
        return Err(StabilityError::Infeasible);
    }
    Ok(ReconstructionResult {
        shape: shape_from_parameters(&result.x)?,
        misfit: result.value,
        trace: result.trace,
        solves: result.cost,
        exhausted: result.exhausted,
    })
}

/// Measurement for `truth` on the mesh that [`reconstruct_obstacle`]
/// builds around `init` at size `h`, morphed to `truth` (the same-mesh
/// setting of a closed-loop test).
pub fn synthesize_same_mesh(
    setup: &PairSetup,
    init: &StarShape,
    truth: &StarShape,
    h: f64,
) -> Result<CauchyPair, StabilityError> {
    let init_domain = setup.domain_with(init)?;
    let domain = setup.domain_with(truth)?;
    let base = P2Space::new(generate_mesh(&init_domain, h)?);
    let band = 0.9 * obstacle_clearance(&setup.domain.container, init).min(obstacle_clearance(&setup.domain.container, truth));
    let vertices = morph_vertices(&base, init, truth, band)
        .ok_or_else(|| StabilityError::Invalid("mesh morph to the true shape inverts a triangle".into()))?;
    let solver = NsSolver::new(Arc::new(base.with_vertices(vertices)))?;
    Ok(solve_on(setup, domain, &solver, None)?.pair)
}

/// Adds a random combination of the first 8 Fourier modes along Γ to
/// `ψ`, scaled so that `discrepancy(noisy, pair) = level`.
pub fn add_fourier_noise(pair: &CauchyPair, level: f64, seed: u64) -> Result<CauchyPair, StabilityError> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(StabilityError::Invalid(format!("noise level {level}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = pair.s.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let modes: Vec<[f64; 4]> = (1..=8)
        .map(|k| {
            let w = 1.0 / k as f64;
            [0; 4].map(|_| w * rng.random_range(-1.0..1.0))
        })
        .collect();
    let eta: Vec<[f64; 2]> = pair
        .s
        .iter()
        .map(|&s| {
            let mut v = [0.0; 2];
            for (k, m) in modes.iter().enumerate() {
                let (sn, cs) = (std::f64::consts::PI * (k + 1) as f64 * s / length).sin_cos();
                v[0] += m[0] * cs + m[1] * sn;
                v[1] += m[2] * cs + m[3] * sn;
            }
            v
        })
        .collect();
    let mut noisy = pair.clone();
    noisy.psi = pair.psi.iter().zip(&eta).map(|(p, e)| [p[0] + e[0], p[1] + e[1]]).collect();
    let unit = discrepancy(&noisy, pair)?;
    if unit == 0.0 {
        return Ok(pair.clone());
    }
    let c = level / unit;
    noisy.psi = pair.psi.iter().zip(&eta).map(|(p, e)| [p[0] + c * e[0], p[1] + c * e[1]]).collect();
    Ok(noisy)
}
