use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::cauchy::discrepancy;
use crate::geometry::{hausdorff_distance, DomainSpec, GammaArc, Point, StarShape};
use crate::meshing::{generate_mesh, rectangle_mesh, BoundaryTag, RectangleTags};
use crate::ns_solver::{BumpProfile, FlowField, P2Space};

fn circle(cx: f64, cy: f64, r: f64) -> StarShape {
    StarShape::circle(Point::new(cx, cy), r).unwrap()
}

fn base_domain() -> DomainSpec {
    DomainSpec::new(
        circle(0.0, 0.0, 1.0),
        Some(circle(0.0, 0.0, 0.3)),
        GammaArc::new(-FRAC_PI_2, FRAC_PI_2).unwrap(),
        0.25,
        1.0,
        100.0,
    )
    .unwrap()
}

/// Same container with a smaller ρ₀, leaving room for mode perturbations.
fn loose_domain() -> DomainSpec {
    let d = base_domain();
    DomainSpec::new(d.container, d.obstacle, d.gamma, 0.1, 1.0, 400.0).unwrap()
}

const H: f64 = 0.0625;

fn setup() -> PairSetup {
    PairSetup::new(&base_domain(), BumpProfile::default(), 1.0, H).unwrap()
}

#[test]
fn dilate_family_gives_concentric_circles() {
    let base = circle(0.0, 0.0, 0.3);
    let fam = generate_obstacle_family(&base, FamilyMode::Dilate, &[0.01, 0.02, 0.05], &base_domain()).unwrap();
    for (s, r) in fam.iter().zip([0.31, 0.32, 0.35]) {
        assert_eq!(s.order(), 0);
        assert!((s.cos_coeffs()[0] - r).abs() < 1e-12);
        assert_eq!(s.center(), Point::ORIGIN);
    }
}

#[test]
fn translate_family_shifts_center() {
    let base = circle(0.0, 0.0, 0.3);
    let fam = generate_obstacle_family(&base, FamilyMode::Translate, &[0.05], &base_domain()).unwrap();
    assert!((fam[0].center().x - 0.05).abs() < 1e-12);
    assert_eq!(fam[0].center().y, 0.0);
    let d = hausdorff_distance(&base, &fam[0]).distance;
    assert!((d - 0.05).abs() < 1e-9, "{d}");
}

#[test]
fn mode_family_hits_targets_by_bisection() {
    let base = circle(0.0, 0.0, 0.3);
    let targets = [0.005, 0.01, 0.02];
    let fam = generate_obstacle_family(&base, FamilyMode::ModePerturb, &targets, &loose_domain()).unwrap();
    for (s, t) in fam.iter().zip(targets) {
        let d = hausdorff_distance(&base, s).distance;
        assert!((d - t).abs() <= 0.05 * t, "{d} vs {t}");
        assert!(s.cos_coeffs()[3] > 0.0);
    }
}

#[test]
fn family_rejects_targets_violating_clearance() {
    let base = circle(0.0, 0.0, 0.3);
    let err = generate_obstacle_family(&base, FamilyMode::Dilate, &[0.5], &base_domain()).unwrap_err();
    assert!(matches!(err, StabilityError::Unreachable { .. }), "{err}");
    let zero = generate_obstacle_family(&base, FamilyMode::Translate, &[0.0], &base_domain()).unwrap();
    assert_eq!(zero[0], base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn family_distances_within_five_percent(t in 0.002f64..0.08, mode in 0usize..3) {
        let mode = [FamilyMode::Dilate, FamilyMode::Translate, FamilyMode::ModePerturb][mode];
        let base = circle(0.0, 0.0, 0.3);
        let fam = generate_obstacle_family(&base, mode, &[t], &loose_domain()).unwrap();
        let d = hausdorff_distance(&base, &fam[0]).distance;
        prop_assert!((d - t).abs() <= 0.05 * t);
    }

    #[test]
    fn loglog_fit_recovers_parameters(beta in 0.2f64..2.0, c in 0.5f64..5.0) {
        let records = synthetic(|e| c * e.ln().abs().ln().powf(-beta));
        let (ll, _) = fit_stability_moduli(&records).unwrap();
        prop_assert!((ll.exponent - beta).abs() < 1e-9);
        prop_assert!((ll.prefactor / c - 1.0).abs() < 1e-9);
        prop_assert!(ll.residual < 1e-10 && ll.preferred);
    }

    #[test]
    fn records_round_trip(d in 0.0f64..1.0, eps in 0.0f64..1.0, iters in 0usize..50, angle in proptest::option::of(0.0f64..1.6)) {
        let r = ExperimentRecord {
            pair_id: "dilate-3".into(),
            d_hausdorff: d,
            epsilon: eps,
            grad_misfit_1: d * eps,
            grad_misfit_2: 0.0,
            mesh_h: 0.05,
            newton_iters: iters,
            seed: 7,
            crossings: 2,
            crossing_angle: angle,
            intersection_rho0: None,
            flag: PairFlag::Ok,
        };
        let mut buf = Vec::new();
        write_records_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let back = read_records_csv(&mut buf.as_slice()).unwrap();
        // 15 significant digits.
        prop_assert!((back[0].d_hausdorff - d).abs() <= 1e-14 * d.max(1e-300));
        prop_assert_eq!(back[0].newton_iters, iters);
        prop_assert_eq!(back[0].crossing_angle.is_some(), angle.is_some());
    }
}

fn synthetic(d: impl Fn(f64) -> f64) -> Vec<ExperimentRecord> {
    (3..=8)
        .map(|k| {
            let eps = 10f64.powi(-k);
            ExperimentRecord {
                pair_id: format!("s{k}"),
                d_hausdorff: d(eps),
                epsilon: eps,
                grad_misfit_1: 0.0,
                grad_misfit_2: 0.0,
                mesh_h: 0.05,
                newton_iters: 0,
                seed: 0,
                crossings: 0,
                crossing_angle: None,
                intersection_rho0: None,
                flag: PairFlag::Ok,
            }
        })
        .collect()
}

#[test]
fn loglog_synthetic_example() {
    let records = synthetic(|e| 2.0 * e.ln().abs().ln().powf(-0.5));
    let (ll, log) = fit_stability_moduli(&records).unwrap();
    assert_eq!(ll.model, ModulusModel::LogLog);
    assert!((ll.exponent - 0.5).abs() < 0.01);
    assert!((ll.prefactor / 2.0 - 1.0).abs() < 0.02);
    assert!(ll.preferred && !log.preferred);
}

#[test]
fn log_synthetic_example() {
    let records = synthetic(|e| 3.0 * e.ln().abs().powf(-1.2));
    let (ll, log) = fit_stability_moduli(&records).unwrap();
    assert!((log.exponent - 1.2).abs() < 0.01);
    assert!((log.prefactor / 3.0 - 1.0).abs() < 0.02);
    assert!(log.residual < 1e-12 && log.preferred && !ll.preferred);
}

#[test]
fn fit_rejects_degenerate_and_short_records() {
    let flat = synthetic(|_| 0.05);
    assert!(matches!(fit_stability_moduli(&flat), Err(StabilityError::Degenerate(_))));
    let mut few = synthetic(|e| e.ln().abs().recip());
    few.truncate(4);
    assert!(matches!(fit_stability_moduli(&few), Err(StabilityError::Insufficient(_))));
    // Failed, zero-distance and large-ε records are not counted.
    let mut mixed = synthetic(|e| e.ln().abs().recip());
    mixed[0].flag = PairFlag::Failed;
    mixed[1].d_hausdorff = 0.0;
    mixed[2].epsilon = 0.5;
    assert_eq!(fit_points(&mixed).len(), 3);
}

#[test]
fn spearman_with_ties() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
    // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): 4.5 / √(4.5·5).
    let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((rho - (4.5f64 / 5.0).sqrt()).abs() < 1e-15);
    assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
}

#[test]
fn misfit_integral_matches_disk_moment() {
    let tags = RectangleTags::uniform(BoundaryTag::Wall);
    let space = Arc::new(P2Space::new(rectangle_mesh((-1.0, 1.0), (-1.0, 1.0), 20, 20, tags).unwrap()));
    // |∇u|² = x², so the integral over the disk is πr⁴/4 + πr²cₓ².
    let field = FlowField::interpolate(space, 1.0, |p| [0.5 * p.x * p.x, 0.0], |_| 0.0);
    let (cx, r): (f64, f64) = (0.1, 0.4);
    let exact = PI * r.powi(4) / 4.0 + PI * r * r * cx * cx;
    let got = misfit_integral(&field, &circle(cx, 0.05, r), None);
    assert!((got / exact - 1.0).abs() < 1e-3, "{got} vs {exact}");
    assert_eq!(misfit_integral(&field, &circle(5.0, 5.0, 0.3), None), 0.0);
    // Annulus between radii 0.2 and 0.4 about the origin: π(r₂⁴ − r₁⁴)/4.
    let ring = misfit_integral(&field, &circle(0.0, 0.0, 0.4), Some(&circle(0.0, 0.0, 0.2)));
    let exact = PI * (0.4f64.powi(4) - 0.2f64.powi(4)) / 4.0;
    assert!((ring / exact - 1.0).abs() < 1e-3, "{ring} vs {exact}");
}

#[test]
fn misfit_vanishes_as_distance_shrinks() {
    let domain = base_domain();
    let space = Arc::new(P2Space::new(generate_mesh(&domain, H).unwrap()));
    let field = FlowField::interpolate(space, 1.0, |p| [p.y, p.x * p.x], |_| 0.0);
    let values: Vec<f64> = [0.04, 0.02, 0.01, 0.005, 0.0]
        .iter()
        .map(|d| misfit_integral(&field, &circle(0.0, 0.0, 0.3 + d), Some(&circle(0.0, 0.0, 0.3))))
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    assert_eq!(values[4], 0.0);
}

#[test]
fn morph_moves_obstacle_vertices_onto_target() {
    let domain = base_domain();
    let from = circle(0.0, 0.0, 0.3);
    let space = P2Space::new(generate_mesh(&domain, H).unwrap());
    let same = morph_vertices(&space, &from, &from, 0.5).unwrap();
    assert_eq!(same, space.mesh().vertices);
    let to = StarShape::new(Point::new(0.08, -0.03), vec![0.32, 0.0, 0.01], vec![0.0, 0.02]).unwrap();
    let moved = morph_vertices(&space, &from, &to, 0.5).unwrap();
    let mesh = space.mesh();
    for e in &mesh.boundary_edges {
        for &v in &e.v {
            match e.tag {
                BoundaryTag::Obstacle => assert!(to.unsigned_distance(moved[v]) < 1e-12),
                _ => assert_eq!(moved[v], mesh.vertices[v]),
            }
        }
    }
    let far = circle(0.4, 0.0, 0.3);
    assert!(morph_vertices(&space, &from, &far, 0.05).is_none());
}

#[test]
fn nelder_mead_minimizes_quadratic_within_budget() {
    let f = |x: &[f64]| ((x[0] - 1.0).powi(2) + 10.0 * (x[1] + 0.5).powi(2), 1);
    let opts = NelderMeadOptions { budget: 400, ..NelderMeadOptions::default() };
    let r = nelder_mead(f, &[0.0, 0.0], &[0.1, 0.1], &opts);
    assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 0.5).abs() < 1e-6, "{:?}", r.x);
    assert!(r.cost <= 400);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));

    let tight = NelderMeadOptions { budget: 12, ..NelderMeadOptions::default() };
    let r = nelder_mead(f, &[0.0, 0.0], &[0.1, 0.1], &tight);
    assert!(r.exhausted && r.cost <= 12);

    // Infeasible points cost nothing and are never chosen.
    let g = |x: &[f64]| if x[0] < 0.0 { (f64::INFINITY, 0) } else { ((x[0] - 0.3).powi(2), 1) };
    let r = nelder_mead(g, &[0.05], &[0.1], &opts);
    assert!((r.x[0] - 0.3).abs() < 1e-6);
}

#[test]
fn shape_parameters_round_trip() {
    let s = StarShape::new(Point::new(0.1, -0.2), vec![0.3, 0.01, 0.02], vec![0.005, -0.01]).unwrap();
    let p = shape_parameters(&s, 2);
    assert_eq!(p, vec![0.1, -0.2, 0.3, 0.01, 0.02, 0.005, -0.01]);
    assert_eq!(shape_from_parameters(&p).unwrap(), s);
    assert_eq!(shape_parameters(&s, 0), vec![0.1, -0.2, 0.3]);
    assert_eq!(shape_parameters(&circle(0.0, 0.0, 0.3), 1), vec![0.0, 0.0, 0.3, 0.0, 0.0]);
}

// Forward solves below share one setup and run at h = ρ₀/4.

#[test]
fn identical_obstacles_give_zero_discrepancy() {
    let s = setup();
    let d = circle(0.0, 0.0, 0.3);
    let r = run_pair(&s, &d, &d, "same", 1).unwrap();
    assert_eq!(r.flag, PairFlag::Ok);
    assert_eq!(r.d_hausdorff, 0.0);
    assert!(r.epsilon <= 1e-8, "{}", r.epsilon);
    assert_eq!((r.grad_misfit_1, r.grad_misfit_2), (0.0, 0.0));
    assert_eq!(r.crossings, 0);
    assert!(r.intersection_rho0.unwrap() > 0.25);
}

#[test]
fn nested_pair_exceeds_floor_and_is_symmetric() {
    let s = setup();
    let (d1, d2) = (circle(0.0, 0.0, 0.3), circle(0.0, 0.0, 0.35));
    let floor = run_pair(&s, &d1, &d1, "floor", 0).unwrap().epsilon;
    let a = run_pair(&s, &d1, &d2, "a", 0).unwrap();
    let b = run_pair(&s, &d2, &d1, "b", 0).unwrap();
    assert!(a.epsilon > floor && a.epsilon > 0.0);
    assert!((a.epsilon - b.epsilon).abs() <= 1e-12 * a.epsilon, "{} vs {}", a.epsilon, b.epsilon);
    assert!((a.d_hausdorff - 0.05).abs() < 1e-9);
    assert!(a.grad_misfit_1 > 0.0 && a.grad_misfit_2 == 0.0);
    assert_eq!((b.grad_misfit_1, b.grad_misfit_2), (a.grad_misfit_2, a.grad_misfit_1));
}

#[test]
fn crossing_pair_is_tagged() {
    let s = setup();
    let (d1, d2) = (circle(0.0, 0.0, 0.3), circle(0.05, 0.0, 0.3));
    let r = run_pair(&s, &d1, &d2, "x", 0).unwrap();
    assert_eq!(r.crossings, 2);
    // Equal circles offset by e cross at angle 2·asin(e / 2r).
    let expected = 2.0 * (0.05f64 / 0.6).asin();
    assert!((r.crossing_angle.unwrap() - expected).abs() < 1e-3, "{:?}", r.crossing_angle);
    assert!(r.intersection_rho0.is_none());
    assert!(r.grad_misfit_1 > 0.0 && r.grad_misfit_2 > 0.0);
}

#[test]
fn discrepancy_is_mesh_converged() {
    let (d1, d2) = (circle(0.0, 0.0, 0.3), circle(0.0, 0.0, 0.35));
    let coarse = run_pair(&setup(), &d1, &d2, "h", 0).unwrap().epsilon;
    let fine_setup = PairSetup::new(&base_domain(), BumpProfile::default(), 1.0, H / 2.0).unwrap();
    let fine = run_pair(&fine_setup, &d1, &d2, "h/2", 0).unwrap().epsilon;
    assert!((coarse / fine - 1.0).abs() < 0.2, "{coarse} vs {fine}");
}

#[test]
fn fourier_noise_has_requested_level() {
    let s = setup();
    let solved = solve_obstacle(&s, &circle(0.0, 0.0, 0.3), H).unwrap();
    for level in [1e-3, 1e-5] {
        let noisy = add_fourier_noise(&solved.pair, level, 9).unwrap();
        let eps = discrepancy(&noisy, &solved.pair).unwrap();
        assert!((eps / level - 1.0).abs() < 1e-10, "{eps}");
        assert_eq!(noisy, add_fourier_noise(&solved.pair, level, 9).unwrap());
        assert_eq!(noisy.g, solved.pair.g);
    }
    assert_eq!(add_fourier_noise(&solved.pair, 0.0, 9).unwrap().psi, solved.pair.psi);
}

#[test]
fn reconstruction_from_truth_stops_immediately() {
    let s = setup();
    let truth = circle(0.1, 0.0, 0.3);
    let measured = solve_obstacle(&s, &truth, H).unwrap().pair;
    let opts = ReconstructionOptions { h: H, ..ReconstructionOptions::default() };
    let r = reconstruct_obstacle(&measured, &s, &truth, &opts).unwrap();
    assert!(r.solves <= 5, "{}", r.solves);
    assert_eq!(r.shape, truth);
    assert!(r.misfit <= 1e-12, "{}", r.misfit);
    assert!(!r.exhausted);
}

#[test]
fn short_reconstruction_reduces_misfit_monotonically() {
    let s = setup();
    let truth = circle(0.05, 0.0, 0.3);
    let measured = solve_obstacle(&s, &truth, H).unwrap().pair;
    let init = circle(0.0, 0.0, 0.28);
    let opts = ReconstructionOptions { h: H, budget: 25, ..ReconstructionOptions::default() };
    let r = reconstruct_obstacle(&measured, &s, &init, &opts).unwrap();
    assert!(r.solves <= 25 && r.exhausted, "{} {}", r.solves, r.exhausted);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    let start = hausdorff_distance(&init, &truth).distance;
    let end = hausdorff_distance(&r.shape, &truth).distance;
    assert!(end < 0.5 * start, "{start} -> {end}");
}
