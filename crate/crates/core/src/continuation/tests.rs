use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::geometry::{DomainSpec, GammaArc, Point, StarShape};
use crate::meshing::{generate_mesh, rectangle_mesh, BoundaryTag, Mesh, RectangleTags};
use crate::ns_solver::{
    solve_navier_stokes, BoundaryData, BumpProfile, FlowField, P2Space, SolverOptions, Vec2,
};

const WALLS: RectangleTags = RectangleTags {
    bottom: BoundaryTag::Wall,
    right: BoundaryTag::Wall,
    top: BoundaryTag::Wall,
    left: BoundaryTag::Wall,
};

fn square(a: f64, n: usize) -> Arc<P2Space> {
    Arc::new(P2Space::new(rectangle_mesh((-a, a), (-a, a), n, n, WALLS).unwrap()))
}

fn disk_domain() -> DomainSpec {
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

fn annulus_domain(r_in: f64) -> DomainSpec {
    DomainSpec::new(
        StarShape::circle(Point::ORIGIN, 1.0).unwrap(),
        Some(StarShape::circle(Point::ORIGIN, r_in).unwrap()),
        GammaArc::new(-FRAC_PI_2, FRAC_PI_2).unwrap(),
        r_in,
        1.0,
        100.0,
    )
    .unwrap()
}

fn space_for(domain: &DomainSpec, h: f64) -> Arc<P2Space> {
    Arc::new(P2Space::new(generate_mesh(domain, h).unwrap()))
}

fn swap_field(space: Arc<P2Space>) -> FlowField {
    FlowField::interpolate(space, 1.0, |p| [p.y, p.x], |_| 0.0)
}

fn field(space: Arc<P2Space>, u: impl Fn(Point) -> Vec2) -> FlowField {
    FlowField::interpolate(space, 1.0, u, |_| 0.0)
}

fn mesh_of(f: &FlowField) -> &Mesh {
    f.space.mesh()
}

#[test]
fn ball_integrals_of_linear_field() {
    let domain = disk_domain();
    let u = swap_field(space_for(&domain, 0.1));
    let zero = FlowField::zeros(u.space.clone(), 1.0);
    assert_eq!(ball_l2(&zero, &domain, Point::ORIGIN, 0.5, Integrand::Velocity).unwrap(), 0.0);
    for r in [0.2, 0.5, 0.7] {
        let v = ball_l2(&u, &domain, Point::ORIGIN, r, Integrand::Velocity).unwrap();
        assert!((v - PI * r.powi(4) / 2.0).abs() <= 1e-12, "r {r}: {v}");
        let g = ball_l2(&u, &domain, Point::ORIGIN, r, Integrand::Gradient).unwrap();
        assert!((g - 2.0 * PI * r * r).abs() <= 1e-12, "r {r}: {g}");
    }
    // Off-center: ∫_{B_r(c)} |x|² = πr⁴/2 + πr²|c|².
    let c = Point::new(0.2, -0.15);
    let r = 0.55;
    let v = ball_integral(&u, &domain, c, r, Integrand::Velocity).unwrap();
    let exact = PI * r.powi(4) / 2.0 + PI * r * r * c.norm_squared();
    assert!((v.value - exact).abs() <= 1e-12 * exact, "{} vs {exact}", v.value);
    assert!(v.relative_error <= 1e-12);
}

#[test]
fn ball_smaller_than_a_triangle() {
    let space = square(1.0, 2);
    let one = field(space, |_| [1.0, 0.0]);
    let r = 0.05;
    let area = ball_l2(&one, mesh_of(&one), Point::new(0.31, 0.22), r, Integrand::Velocity).unwrap();
    assert!((area - PI * r * r).abs() <= 1e-14, "{area}");
}

#[test]
fn ball_outside_domain_is_rejected() {
    let domain = disk_domain();
    let u = swap_field(space_for(&domain, 0.1));
    let err = ball_l2(&u, &domain, Point::new(0.5, 0.0), 0.6, Integrand::Velocity).unwrap_err();
    assert!(matches!(err, ContinuationError::BallOutsideDomain { .. }), "{err}");
    assert!(ball_l2(&u, &domain, Point::ORIGIN, -1.0, Integrand::Velocity).is_err());
}

#[test]
fn difference_on_distinct_meshes_is_resolved() {
    let a = swap_field(space_for(&disk_domain(), 0.1));
    let b = field(space_for(&disk_domain(), 0.08), |p| [0.5 * p.y, 0.5 * p.x]);
    let w = FieldDifference::new(&a, &b);
    let r = 0.6;
    let v = ball_integral(&w, &disk_domain(), Point::ORIGIN, r, Integrand::Velocity).unwrap();
    assert!((v.value - 0.25 * PI * r.powi(4) / 2.0).abs() <= 1e-10, "{}", v.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clipped_area_is_exact(cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.01f64..0.45) {
        let space = square(1.0, 7);
        let one = field(space, |_| [1.0, 0.0]);
        let area = ball_l2(&one, mesh_of(&one), Point::new(cx, cy), r, Integrand::Velocity).unwrap();
        prop_assert!((area - PI * r * r).abs() <= 1e-13, "area {} vs {}", area, PI * r * r);
    }

    #[test]
    fn ball_l2_is_monotone_in_radius(cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.05f64..0.3, dr in 0.0f64..0.3) {
        let space = square(1.0, 8);
        let u = field(space, |p| [(3.0 * p.x).sin(), p.x * p.y]);
        let m = mesh_of(&u);
        let c = Point::new(cx, cy);
        for what in [Integrand::Velocity, Integrand::Gradient] {
            let a = ball_l2(&u, m, c, r, what).unwrap();
            let b = ball_l2(&u, m, c, r + dr, what).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn minimal_c_is_scale_invariant(scale in 0.01f64..100.0, n1 in 0.01f64..1.0, n2 in 1.0f64..2.0, delta in 0.05f64..0.95) {
        let n = [n1, n2, 3.0];
        let s2 = scale * scale;
        let a = minimal_c(n, delta);
        let b = minimal_c(n.map(|v| v * s2), delta);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn three_spheres_closed_form() {
    let domain = disk_domain();
    let u = swap_field(space_for(&domain, 0.1));
    let triple = BallTriple::with_ratios(Point::ORIGIN, 0.8, DEFAULT_RATIOS).unwrap();
    let delta_star = (8.0f64 / 3.0).ln() / 8.0f64.ln();
    for rec in [
        three_spheres_check(&u, &domain, &triple, None).unwrap(),
        gradient_three_spheres_check(&u, &domain, &triple, None).unwrap(),
    ] {
        assert_eq!(rec.flag, RecordFlag::Holds);
        assert!((rec.delta.unwrap() - delta_star).abs() <= 1e-14);
        assert!((rec.c - 1.0).abs() <= 1e-10, "{rec:?}");
    }
    // Grid neighbours of δ* need a larger constant.
    let n = three_spheres_check(&u, &domain, &triple, None).unwrap().n.map(Option::unwrap);
    assert!(minimal_c(n, 0.5) > 1.0);
    let tight = three_spheres_check(&u, &domain, &triple, Some((0.5, 1.0))).unwrap();
    assert_eq!(tight.flag, RecordFlag::Violated);
    let loose = three_spheres_check(&u, &domain, &triple, Some((0.5, 2.0))).unwrap();
    assert_eq!(loose.flag, RecordFlag::Holds);
    // Scaling the field leaves the constant unchanged.
    let scaled = u.scaled(-3.7);
    let rec = three_spheres_check(&scaled, &domain, &triple, None).unwrap();
    assert!((rec.c - 1.0).abs() <= 1e-10);
}

#[test]
fn three_spheres_trivial_and_unverifiable() {
    let space = square(1.0, 40);
    let zero = FlowField::zeros(space.clone(), 1.0);
    let triple = BallTriple::new(Point::ORIGIN, 0.1, 0.3, 0.8, THETA_STAR).unwrap();
    let m = space.mesh();
    let rec = three_spheres_check(&zero, m, &triple, Some((0.5, 0.0))).unwrap();
    assert_eq!(rec.flag, RecordFlag::Trivial);
    let late = field(space.clone(), |p| [(p.x - 0.25).max(0.0).powi(2), 0.0]);
    let rec = three_spheres_check(&late, m, &triple, None).unwrap();
    assert_eq!(rec.n[0], Some(0.0));
    assert!(rec.n[1].unwrap() > 0.0);
    assert_eq!(rec.flag, RecordFlag::Unverifiable);
    assert!(rec.c.is_infinite());
}

#[test]
fn triple_invariants() {
    assert!(BallTriple::new(Point::ORIGIN, 0.1, 0.5, 0.8, THETA_STAR).is_err());
    assert!(BallTriple::new(Point::ORIGIN, 0.3, 0.2, 0.8, THETA_STAR).is_err());
    assert!(BallTriple::new(Point::ORIGIN, 0.1, 0.2, 0.8, 0.7).is_err());
    assert!(BallTriple::new(Point::ORIGIN, 0.1, 0.2, 0.8, 0.6).is_ok());
}

#[test]
fn common_delta_fit() {
    let mut recs = Vec::new();
    for k in 0..20 {
        let mut r = InequalityRecord::new(InequalityKind::ThreeSpheres);
        // log N affine in log r with exponent 4: C(δ*) = 1 for every record.
        let r3 = 0.2 + 0.01 * k as f64;
        let radii = [r3 / 8.0, 3.0 * r3 / 8.0, r3];
        r.n = radii.map(|x| Some(x.powi(4)));
        r.delta = Some((8.0f64 / 3.0).ln() / 8.0f64.ln());
        recs.push(r);
    }
    let fit = fit_common_delta(&recs, 0.95).unwrap();
    assert!((fit.delta - recs[0].delta.unwrap()).abs() < 1e-15);
    assert!((fit.c - 1.0).abs() < 1e-12);
    assert_eq!(fit.satisfied, 1.0);
    assert!(fit_common_delta(&[], 0.95).is_err());
}

#[test]
fn random_triples_are_admissible() {
    let domain = annulus_domain(0.3);
    let t = random_triples(&domain, (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)), 30, DEFAULT_RATIOS, (0.1, 0.3), 4)
        .unwrap();
    assert_eq!(t.len(), 30);
    for b in &t {
        assert!(domain.clearance(b.center) >= b.r3);
    }
    let again =
        random_triples(&domain, (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)), 30, DEFAULT_RATIOS, (0.1, 0.3), 4)
            .unwrap();
    assert_eq!(t, again);
}

#[test]
fn caccioppoli_examples() {
    let space = square(2.5, 20);
    let m = space.mesh();
    let u = swap_field(space.clone());
    let rec = caccioppoli_ratio(&u, m, Point::ORIGIN, 1.0, 2.0).unwrap();
    assert!((rec.c - 0.25).abs() <= 1e-12, "{}", rec.c);
    let constant = field(space.clone(), |_| [2.0, -1.0]);
    let rec = caccioppoli_ratio(&constant, m, Point::new(0.1, 0.2), 0.5, 1.5).unwrap();
    assert!(rec.c.abs() <= 1e-20);
    let zero = FlowField::zeros(space.clone(), 1.0);
    assert_eq!(caccioppoli_ratio(&zero, m, Point::ORIGIN, 1.0, 2.0).unwrap().flag, RecordFlag::Trivial);
    assert!(caccioppoli_ratio(&u, m, Point::ORIGIN, 2.0, 1.0).is_err());
}

#[test]
fn poincare_examples() {
    let space = Arc::new(P2Space::new(rectangle_mesh((0.0, 1.0), (0.0, 1.0), 10, 10, WALLS).unwrap()));
    let u = field(space.clone(), |p| [p.y, 0.0]);
    let rec = poincare_ratio(&u, 1.0, 0.5).unwrap();
    assert!((rec.c - 1.0 / 3f64.sqrt()).abs() <= 1e-12, "{}", rec.c);
    // The trace is nonzero on the sides within distance 1 of (0.5, 0).
    assert!(matches!(poincare_ratio(&u, 1.0, 1.0), Err(ContinuationError::Precondition(_))));
    let zero = FlowField::zeros(space.clone(), 1.0);
    assert_eq!(poincare_ratio(&zero, 1.0, 0.5).unwrap().c, 0.0);
    let nowhere = field(space, |p| [1.0 + p.x, 0.0]);
    assert!(poincare_ratio(&nowhere, 1.0, 0.1).is_err());
}

#[test]
fn interpolation_examples() {
    let space = square(2.0, 16);
    let m = space.mesh();
    let constant = field(space.clone(), |_| [0.6, -0.8]);
    let rec = interpolation_check(&constant, m, Point::new(0.1, 0.0), 0.7, None).unwrap();
    // Rounding in ∇v ≈ 1e-16 enters through a square root.
    assert!((rec.c - 1.0 / PI.sqrt()).abs() <= 1e-6, "{}", rec.c);
    let u = swap_field(space.clone());
    let rec = interpolation_check(&u, m, Point::ORIGIN, 1.0, None).unwrap();
    assert!((rec.n[1].unwrap() - 1.0).abs() <= 1e-12);
    assert!((rec.n[2].unwrap() - 2f64.sqrt()).abs() <= 1e-12);
    let expected = 1.0 / (PI.powf(0.25) + (PI / 2.0).sqrt());
    assert!((rec.c - expected).abs() <= 1e-12, "{} vs {expected}", rec.c);
    assert_eq!(interpolation_check(&u, m, Point::ORIGIN, 1.0, Some(0.3)).unwrap().flag, RecordFlag::Violated);
    let zero = FlowField::zeros(space.clone(), 1.0);
    assert_eq!(interpolation_check(&zero, m, Point::ORIGIN, 1.0, Some(0.0)).unwrap().flag, RecordFlag::Trivial);
}

#[test]
fn pos_profile_of_linear_field_is_area_ratio() {
    let domain = disk_domain();
    let u = swap_field(space_for(&domain, 0.05));
    let area = u.space.mesh().area();
    let prof = pos_profile(&u, &domain, &[0.3, 0.2, 0.1], DEFAULT_S, 1.0).unwrap();
    for (rho, c) in prof.values() {
        let exact = PI * rho * rho / area;
        assert!((c - exact).abs() <= 1e-12, "rho {rho}: {c} vs {exact}");
        assert!((c - rho * rho).abs() <= 1e-2 * rho * rho);
    }
    assert!(prof.fit.is_some());
    let big = pos_profile(&u, &domain, &[0.9], 1.05, 1.0).unwrap();
    assert!(big.records[0].c >= 0.5);
    let zero = FlowField::zeros(u.space.clone(), 1.0);
    assert!(matches!(pos_profile(&zero, &domain, &[0.2], 3.0, 1.0), Err(ContinuationError::Degenerate(_))));
    assert!(matches!(pos_profile(&u, &domain, &[0.4], 3.0, 1.0), Err(ContinuationError::EmptyErosion { .. })));
}

fn channel_flow() -> (FlowField, BoundaryData) {
    let tags = RectangleTags {
        bottom: BoundaryTag::Wall,
        right: BoundaryTag::Gamma,
        top: BoundaryTag::Wall,
        left: BoundaryTag::Gamma,
    };
    let space = Arc::new(P2Space::new(rectangle_mesh((0.0, 4.0), (-1.0, 1.0), 40, 20, tags).unwrap()));
    let g = BoundaryData::poiseuille(&space, 1.0, 1.0);
    (field(space, |p| [1.0 - p.y * p.y, 0.0]), g)
}

#[test]
fn pos_profile_on_poiseuille_is_monotone() {
    let (u, _) = channel_flow();
    let prof = pos_profile(&u, u.space.mesh(), &[0.4, 0.2, 0.1], 2.0, 1.0).unwrap();
    let v = prof.values();
    for w in v.windows(2) {
        assert!(w[1].1 <= w[0].1, "{v:?}");
    }
    assert!(v.iter().all(|&(_, c)| c > 0.0 && c <= 1.0));
    let (a, b) = prof.fit.unwrap();
    assert!(a > 0.0 && b.is_finite());
}

#[test]
fn boundary_version_matches_profile_times_energy_ratio() {
    let (u, g) = channel_flow();
    let m = u.space.mesh();
    let total = u.integrate(|_, v| crate::ns_solver::grad_norm2(&v.grad));
    let prof = pos_profile(&u, m, &[0.2], 3.0, 1.0).unwrap();
    let b = pos_boundary_version(&u, m, 0.2, 2.0, &g).unwrap();
    let expected = prof.records[0].c * total / g.holder_norm_estimate.powi(2);
    assert!((b.c - expected).abs() <= 1e-10 * expected, "{} vs {expected}", b.c);
    assert!(b.c > 0.0);
    let zero = BoundaryData::zero(&u.space, 1.0);
    assert!(matches!(pos_boundary_version(&u, m, 0.2, 2.0, &zero), Err(ContinuationError::Degenerate(_))));
}

#[test]
fn linearized_coefficients_example() {
    let space = space_for(&disk_domain(), 0.1);
    let u1 = swap_field(space.clone());
    let u2 = field(space.clone(), |p| [1.0 - p.y * p.y, 0.0]);
    let lc = linearized_coefficients(&u1, &u2, 1.0, 0.5, 0).unwrap();
    for ((x, a), b) in lc.points.iter().zip(&lc.a).zip(&lc.b) {
        assert!((a[0] - (x.y * x.y - 1.0)).abs() <= 1e-12 && a[1].abs() <= 1e-12);
        assert!(b[0][0].abs() <= 1e-12 && b[1][1].abs() <= 1e-12);
        assert!((b[0][1] - 1.0).abs() <= 1e-12 && (b[1][0] - 1.0).abs() <= 1e-12);
    }
    assert!(lc.a_norm >= 1.0 && lc.b_norm >= 2f64.sqrt() - 1e-12);
    let zero = FlowField::zeros(space.clone(), 1.0);
    let lz = linearized_coefficients(&zero, &zero, 1.0, 0.5, 0).unwrap();
    assert!(lz.a.iter().all(|a| a == &[0.0, 0.0]) && lz.b.iter().all(|b| b == &[[0.0; 2]; 2]));
    assert_eq!(lz.a_norm, 0.0);
    let other = swap_field(space_for(&disk_domain(), 0.08));
    assert!(matches!(linearized_coefficients(&u1, &other, 1.0, 0.5, 0), Err(ContinuationError::MeshMismatch)));
}

#[test]
fn difference_system_residual_of_converged_flows() {
    let domain = annulus_domain(0.3);
    let h = 0.075;
    let space = space_for(&domain, h);
    let opts = SolverOptions::default();
    let g1 = BoundaryData::bump(&space, &domain, &BumpProfile::default()).unwrap();
    let g2 = BoundaryData::bump(&space, &domain, &BumpProfile { amplitude: 0.6, center: 0.45, ..BumpProfile::default() })
        .unwrap();
    let (u1, _) = solve_navier_stokes(space.clone(), 0.1, &g1, &opts).unwrap();
    let (u2, _) = solve_navier_stokes(space, 0.1, &g2, &opts).unwrap();
    let r = difference_residual(&u1, &u2).unwrap();
    assert!(r.linearized <= 10.0 * (opts.tol + h * h), "{r:?}");
    assert!(r.consistency <= 1e-12, "{r:?}");
}

#[test]
fn chain_counts() {
    let line = |len: f64| [Point::ORIGIN, Point::new(len, 0.0)];
    let c = chain_of_balls(&line(1.0), 0.5, 1.0, None).unwrap();
    assert_eq!(c.centers.len(), 3);
    for w in c.centers.windows(2) {
        assert!((w[0].distance(w[1]) - 0.25).abs() <= 1e-14);
    }
    assert!(c.centers.last().unwrap().distance(Point::new(1.0, 0.0)) <= 0.25 + 1e-14);
    assert!(c.separated);
    assert_eq!(chain_of_balls(&line(0.2), 0.5, 1.0, None).unwrap().centers.len(), 1);
    let coarse = chain_of_balls(&line(4.0), 0.5, 1.0, None).unwrap().centers.len() as f64;
    let fine = chain_of_balls(&line(4.0), 0.25, 1.0, None).unwrap().centers.len() as f64;
    assert!((1.8..=2.2).contains(&(fine / coarse)), "{coarse} -> {fine}");
}

#[test]
fn chain_follows_bends_and_checks_clearance() {
    let corridor = [Point::new(-0.5, -0.5), Point::new(0.5, -0.5), Point::new(0.5, 0.5)];
    let c = chain_of_balls(&corridor, 0.2, 1.0, None).unwrap();
    for w in c.centers.windows(2) {
        assert!((w[0].distance(w[1]) - 0.1).abs() <= 1e-13);
    }
    assert!(c.centers.last().unwrap().distance(corridor[2]) <= 0.1 + 1e-13);
    assert!((c.measured_c - c.centers.len() as f64 * 0.04).abs() <= 1e-12);
    let domain = disk_domain();
    assert!(chain_of_balls(&corridor, 0.2, 1.0, Some(&domain)).is_ok());
    assert!(matches!(
        chain_of_balls(&corridor, 0.4, 1.0, Some(&domain)),
        Err(ContinuationError::Clearance { .. })
    ));
}

#[test]
fn records_csv_round_trip() {
    let domain = disk_domain();
    let u = swap_field(space_for(&domain, 0.1));
    let triple = BallTriple::with_ratios(Point::new(0.1, 0.0), 0.6, DEFAULT_RATIOS).unwrap();
    let recs = vec![
        three_spheres_check(&u, &domain, &triple, None).unwrap(),
        caccioppoli_ratio(&u, &domain, Point::ORIGIN, 0.2, 0.5).unwrap(),
        interpolation_check(&u, &domain, Point::ORIGIN, 0.5, None).unwrap(),
    ];
    let mut buf = Vec::new();
    write_records_csv(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(RECORD_CSV_HEADER));
    let back = read_records_csv(&mut buf.as_slice()).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in recs.iter().zip(&back) {
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.flag, b.flag);
        assert!((a.c - b.c).abs() <= 1e-13 * a.c.abs().max(1.0));
        assert_eq!(a.r.map(|x| x.is_some()), b.r.map(|x| x.is_some()));
    }
    assert!(read_records_csv(&mut "kind\n".as_bytes()).is_err());
}

