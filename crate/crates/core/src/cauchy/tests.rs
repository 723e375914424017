use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{GammaArc, Point, StarShape};
use crate::meshing::{generate_mesh, rectangle_mesh, BoundaryTag, RectangleTags};
use crate::ns_solver::{solve_navier_stokes, solve_stokes, BumpProfile, P2Space, SolverOptions};

fn annulus() -> DomainSpec {
    DomainSpec::new(
        StarShape::circle(Point::ORIGIN, 1.0).unwrap(),
        Some(StarShape::circle(Point::ORIGIN, 0.3).unwrap()),
        GammaArc::new(-FRAC_PI_2, FRAC_PI_2).unwrap(),
        0.3,
        1.0,
        100.0,
    )
    .unwrap()
}

fn disk() -> DomainSpec {
    DomainSpec::new(
        StarShape::circle(Point::ORIGIN, 1.0).unwrap(),
        None,
        GammaArc::new(0.0, TAU).unwrap(),
        1.0,
        1.0,
        10.0,
    )
    .unwrap()
}

fn space(domain: &DomainSpec, h: f64) -> Arc<P2Space> {
    Arc::new(P2Space::new(generate_mesh(domain, h).unwrap()))
}

fn full_grid(grid: &ArcGrid) -> Vec<f64> {
    (0..grid.n).map(|k| grid.s(k)).collect()
}

#[test]
fn constant_pressure_gives_minus_normal() {
    let domain = annulus();
    let sp = space(&domain, 0.075);
    let field = FlowField::interpolate(sp.clone(), 1.0, |_| [0.0, 0.0], |_| 1.0);
    let pair = compute_normal_stress(&field, &domain, &BoundaryData::zero(&sp, 0.3), 256).unwrap();
    assert!(pair.s.windows(2).all(|w| w[1] > w[0]));
    // Γ is the right half circle: samples cover [0, π].
    assert!(pair.s[0] == 0.0 && (PI - pair.s.last().unwrap()) < pair.grid.spacing());
    for (psi, nu) in pair.psi.iter().zip(&pair.normals) {
        assert!((psi[0] + nu[0]).abs() < 1e-12 && (psi[1] + nu[1]).abs() < 1e-12);
    }
}

#[test]
fn poiseuille_wall_traction() {
    let tags = RectangleTags {
        bottom: BoundaryTag::Wall,
        right: BoundaryTag::Gamma,
        top: BoundaryTag::Wall,
        left: BoundaryTag::Gamma,
    };
    let sp = Arc::new(P2Space::new(rectangle_mesh((0.0, 4.0), (-1.0, 1.0), 40, 20, tags).unwrap()));
    let g = BoundaryData::poiseuille(&sp, 1.0, 1.0);
    let field = solve_stokes(sp, 1.0, &g, None).unwrap();
    for i in 0..=16 {
        let x = 0.25 * i as f64;
        let (_, v) = field.eval_at(Point::new(x, 1.0));
        let psi = v.traction(1.0, Point::new(0.0, 1.0));
        // ψ = (−2, −p) with p = 4 − 2x.
        assert!((psi[0] + 2.0).abs() < 1e-8, "{psi:?}");
        assert!((psi[1] - (2.0 * x - 4.0)).abs() < 1e-8, "{psi:?}");
    }
}

#[test]
fn rigid_rotation_traction_is_normal_pressure() {
    let domain = disk();
    let sp = space(&domain, 0.05);
    let g = BoundaryData::rigid_rotation(&sp, 1.0, 1.0, Point::ORIGIN);
    let (field, _) = solve_navier_stokes(sp.clone(), 1.0, &g, &SolverOptions::default()).unwrap();
    let pair = compute_normal_stress(&field, &domain, &g, 256).unwrap();
    assert_eq!(pair.s.len(), 256);
    // Mean of r²/2 over the unit disk is 1/4.
    let p_wall = 0.5 - 0.25;
    let err = pair
        .psi
        .iter()
        .zip(&pair.normals)
        .map(|(psi, nu)| (psi[0] + p_wall * nu[0]).hypot(psi[1] + p_wall * nu[1]))
        .fold(0.0, f64::max);
    assert!(err < 2e-2, "{err}");
}

#[test]
fn norm_examples() {
    let grid = ArcGrid::new(2.0, 64).unwrap();
    let s = full_grid(&grid);
    let zeros = vec![[0.0; 2]; 64];
    assert_eq!(h_minus_half_norm(&grid, &s, &zeros, 1.0).unwrap(), 0.0);
    assert_eq!(h_half_norm(&grid, &s, &zeros, 1.0).unwrap(), 0.0);
    // Constant: only k = 0, weight 1.
    let c = 0.7;
    let constant = vec![[c, 0.0]; 64];
    let n2 = h_minus_half_norm(&grid, &s, &constant, 1.0).unwrap().powi(2);
    assert!((n2 - c * c * grid.length).abs() < 1e-12);
    // Single mode: weight at k times c²L/2, over ρ₀.
    for rho0 in [1.0, 0.3] {
        for k in [1usize, 5, 11] {
            let vals: Vec<Vec2> = s.iter().map(|&x| [c * (TAU * k as f64 * x / grid.length).cos(), 0.0]).collect();
            let xi = TAU * rho0 * k as f64 / grid.length;
            let w = (1.0 + xi * xi).sqrt();
            let minus = h_minus_half_norm(&grid, &s, &vals, rho0).unwrap().powi(2);
            let plus = h_half_norm(&grid, &s, &vals, rho0).unwrap().powi(2);
            let base = c * c * grid.length / 2.0 / rho0;
            assert!((minus - base / w).abs() < 1e-12 * base, "{k} {rho0}");
            assert!((plus - base * w).abs() < 1e-12 * base * w, "{k} {rho0}");
        }
    }
}

#[test]
fn grid_is_validated() {
    assert!(matches!(ArcGrid::new(1.0, 100), Err(CauchyError::NotPowerOfTwo(100))));
    let grid = ArcGrid::new(1.0, 16).unwrap();
    let mut s = full_grid(&grid);
    s[3] += 0.01;
    let v = vec![[1.0, 0.0]; 16];
    assert!(matches!(h_minus_half_norm(&grid, &s, &v, 1.0), Err(CauchyError::NonUniformGrid(_))));
    // A windowed prefix of the grid is fine.
    let s = full_grid(&grid)[..5].to_vec();
    assert!(h_half_norm(&grid, &s, &v[..5], 1.0).is_ok());
}

#[test]
fn duality_sandwich() {
    let grid = ArcGrid::new(3.0, 128).unwrap();
    let s = full_grid(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho0 = 0.4;
    for _ in 0..100 {
        let v: Vec<Vec2> = (0..128).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let w: Vec<Vec2> = (0..128).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        // Parseval and Cauchy–Schwarz: (L/N)|Σ v·w| ≤ ρ₀‖v‖_{1/2}‖w‖_{−1/2}.
        let dot: f64 = v.iter().zip(&w).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        let lhs = grid.spacing() * dot.abs();
        let rhs = rho0 * h_half_norm(&grid, &s, &v, rho0).unwrap() * h_minus_half_norm(&grid, &s, &w, rho0).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} {rhs}");
    }
}

proptest! {
    #[test]
    fn norms_are_ordered(vals in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 32), rho0 in 0.05f64..2.0) {
        let grid = ArcGrid::new(1.5, 32).unwrap();
        let s = full_grid(&grid);
        let v: Vec<Vec2> = vals.iter().map(|&(a, b)| [a, b]).collect();
        let plus = h_half_norm(&grid, &s, &v, rho0).unwrap();
        let l2 = l2_trace_norm(&grid, &s, &v, rho0).unwrap();
        let minus = h_minus_half_norm(&grid, &s, &v, rho0).unwrap();
        prop_assert!(plus >= l2 * (1.0 - 1e-12));
        prop_assert!(l2 >= minus * (1.0 - 1e-12));
        // L² under the convention is the plain sum ρ₀⁻¹(L/N)Σ|v|².
        let direct = (v.iter().map(|a| a[0] * a[0] + a[1] * a[1]).sum::<f64>() * grid.spacing() / rho0).sqrt();
        prop_assert!((l2 - direct).abs() <= 1e-10 * direct.max(1.0));
    }
}

#[test]
fn discrepancy_examples() {
    let domain = disk();
    let sp = space(&domain, 0.1);
    let g = BoundaryData::rigid_rotation(&sp, 1.0, 1.0, Point::ORIGIN);
    let field = solve_stokes(sp, 1.0, &g, None).unwrap();
    let a = compute_normal_stress(&field, &domain, &g, 128).unwrap();
    assert_eq!(discrepancy(&a, &a.clone()).unwrap(), 0.0);
    // On the unit circle from θ = 0, 10⁻³ν = 10⁻³(cos s, sin s): one k = 1
    // mode per component.
    let mut b = a.clone();
    for (psi, nu) in b.psi.iter_mut().zip(&a.normals) {
        psi[0] += 1e-3 * nu[0];
        psi[1] += 1e-3 * nu[1];
    }
    let rho0 = a.rho0;
    let xi = TAU * rho0 / a.grid.length;
    let w = 1.0 / (1.0 + xi * xi).sqrt();
    let expected = rho0 * (w * 1e-6 * a.grid.length / rho0).sqrt();
    let eps = discrepancy(&a, &b).unwrap();
    assert!((eps - expected).abs() < 1e-9 * expected, "{eps} {expected}");
    let mut c = a.clone();
    c.g[3][0] += 1e-6;
    assert!(matches!(discrepancy(&a, &c), Err(CauchyError::Mismatch(_))));
    let coarse = compute_normal_stress(&field, &domain, &g, 64).unwrap();
    assert!(discrepancy(&a, &coarse).is_err());
}

#[test]
fn discrepancy_self_convergence() {
    let domain = annulus();
    let pairs: Vec<CauchyPair> = [0.075, 0.0375]
        .iter()
        .map(|&h| {
            let sp = space(&domain, h);
            let g = BoundaryData::bump(&sp, &domain, &BumpProfile::default()).unwrap();
            let (f, _) = solve_navier_stokes(sp, 1.0, &g, &SolverOptions::default()).unwrap();
            compute_normal_stress(&f, &domain, &g, DEFAULT_SAMPLES).unwrap()
        })
        .collect();
    let eps = discrepancy(&pairs[0], &pairs[1]).unwrap();
    assert!(eps <= 10.0 * 0.075f64.powi(2), "{eps}");
}

#[test]
fn traction_is_linear() {
    let domain = annulus();
    let sp = space(&domain, 0.075);
    let f1 = FlowField::interpolate(sp.clone(), 0.7, |p| [p.x * p.y, p.y.sin()], |p| p.x + 2.0);
    let f2 = FlowField::interpolate(sp.clone(), 0.7, |p| [p.x.cos(), p.x - p.y * p.y], |p| p.y * p.x);
    let mut sum = f1.clone();
    for (a, b) in sum.velocity.iter_mut().zip(&f2.velocity) {
        a[0] += b[0];
        a[1] += b[1];
    }
    for (a, b) in sum.pressure.iter_mut().zip(&f2.pressure) {
        *a += b;
    }
    let g = BoundaryData::zero(&sp, 0.3);
    let (p1, p2, ps) = (
        compute_normal_stress(&f1, &domain, &g, 256).unwrap(),
        compute_normal_stress(&f2, &domain, &g, 256).unwrap(),
        compute_normal_stress(&sum, &domain, &g, 256).unwrap(),
    );
    for k in 0..ps.s.len() {
        for c in 0..2 {
            assert!((ps.psi[k][c] - p1.psi[k][c] - p2.psi[k][c]).abs() < 1e-9);
        }
    }
}

#[test]
fn trace_norm_equivalence_bracket() {
    let domain = annulus();
    let sp = space(&domain, 0.075);
    let zero = FlowField::zeros(sp.clone(), 1.0);
    let mut ratios = Vec::new();
    for (center, half_width, amplitude) in [(0.5, 0.3, 1.0), (0.4, 0.2, 2.0), (0.6, 0.25, 0.5), (0.5, 0.15, 1.0)] {
        let profile = BumpProfile {
            center,
            half_width,
            amplitude,
            ..BumpProfile::default()
        };
        let g = BoundaryData::bump(&sp, &domain, &profile).unwrap();
        let pair = compute_normal_stress(&zero, &domain, &g, DEFAULT_SAMPLES).unwrap();
        let n = h_half_norm(&pair.grid, &pair.s, &pair.g, pair.rho0).unwrap();
        ratios.push(n / g.holder_norm_estimate);
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, u), &r| (l.min(r), u.max(r)));
    assert!(lo > 0.0 && hi.is_finite(), "{ratios:?}");
    assert!(hi / lo <= 10.0, "{ratios:?}");
}

#[test]
fn support_and_csv_round_trip() {
    let domain = annulus();
    let sp = space(&domain, 0.075);
    let g = BoundaryData::bump(&sp, &domain, &BumpProfile::default()).unwrap();
    let (field, _) = solve_navier_stokes(sp, 1.0, &g, &SolverOptions::default()).unwrap();
    let pair = compute_normal_stress(&field, &domain, &g, 256).unwrap();
    let (s0, s1) = pair.support.unwrap();
    for (s, gv) in pair.s.iter().zip(&pair.g) {
        if *s <= s0 || *s >= s1 {
            assert_eq!(gv, &[0.0, 0.0]);
        }
    }
    let mut buf = Vec::new();
    write_pair_csv(&pair, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("s,g_x,g_y,psi_x,psi_y\n"));
    let back = read_pair_csv(pair.grid, pair.rho0, buf.as_slice()).unwrap();
    for k in 0..pair.s.len() {
        for c in 0..2 {
            assert!((back.psi[k][c] - pair.psi[k][c]).abs() <= 1e-14 * pair.psi[k][c].abs().max(1e-300));
        }
    }
    assert!(discrepancy(&pair, &back).unwrap() < 1e-12);
}
