//! Mesh → solve → Cauchy data → continuation checks, across module
//! boundaries and through the file formats.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use obstacle_core::cauchy::{compute_normal_stress, discrepancy, read_pair_csv, write_pair_csv, DEFAULT_SAMPLES};
use obstacle_core::continuation::{
    difference_three_spheres_check, fit_common_delta, random_triples, Clearance, RecordFlag, DEFAULT_RATIOS,
};
use obstacle_core::geometry::{DomainSpec, GammaArc, Point, StarShape};
use obstacle_core::meshing::{generate_mesh, read_mesh, write_mesh, Mesh};
use obstacle_core::ns_solver::{
    read_field, solve_navier_stokes, write_field, BoundaryData, BumpProfile, FlowField, P2Space, SolverOptions,
};

fn domain(obstacle: StarShape) -> DomainSpec {
    DomainSpec::new(
        StarShape::circle(Point::ORIGIN, 1.0).unwrap(),
        Some(obstacle),
        GammaArc::new(-FRAC_PI_2, FRAC_PI_2).unwrap(),
        0.25,
        1.0,
        100.0,
    )
    .unwrap()
}

fn solve(domain: &DomainSpec, h: f64) -> (FlowField, BoundaryData) {
    let space = Arc::new(P2Space::new(generate_mesh(domain, h).unwrap()));
    let g = BoundaryData::bump(&space, domain, &BumpProfile::default()).unwrap();
    let (field, _) = solve_navier_stokes(space, 1.0, &g, &SolverOptions::default()).unwrap();
    (field, g)
}

#[test]
fn files_reproduce_the_cauchy_data() {
    let dom = domain(StarShape::circle(Point::new(0.05, -0.05), 0.3).unwrap());
    let (field, g) = solve(&dom, 0.0625);
    assert!(field.projected_divergence() <= 1e-10);
    assert!(field.obstacle_trace_max() <= 1e-10);

    let mut mesh_text = Vec::new();
    write_mesh(field.space.mesh(), &mut mesh_text).unwrap();
    let mut field_text = Vec::new();
    write_field(&field, &mut field_text).unwrap();
    let mesh = read_mesh(mesh_text.as_slice()).unwrap();
    let space = Arc::new(P2Space::new(mesh));
    let back = read_field(space, field_text.as_slice()).unwrap();

    let a = compute_normal_stress(&field, &dom, &g, DEFAULT_SAMPLES).unwrap();
    let b = compute_normal_stress(&back, &dom, &g, DEFAULT_SAMPLES).unwrap();
    assert!(discrepancy(&a, &b).unwrap() <= 1e-12);

    let mut csv = Vec::new();
    write_pair_csv(&a, &mut csv).unwrap();
    let c = read_pair_csv(a.grid, a.rho0, csv.as_slice()).unwrap();
    assert!(discrepancy(&a, &c).unwrap() <= 1e-12);
}

struct Common<'a>(&'a Mesh, &'a Mesh);

impl Clearance for Common<'_> {
    fn clearance(&self, p: Point) -> f64 {
        self.0.clearance(p).min(self.1.clearance(p))
    }
}

#[test]
fn difference_of_two_obstacle_flows_satisfies_three_spheres() {
    let (u1, _) = solve(&domain(StarShape::circle(Point::ORIGIN, 0.3).unwrap()), 0.0625);
    let (u2, _) = solve(&domain(StarShape::circle(Point::new(0.05, 0.0), 0.3).unwrap()), 0.0625);
    let region = Common(u1.space.mesh(), u2.space.mesh());
    let box_ = (Point::new(-1.0, -1.0), Point::new(1.0, 1.0));
    let triples = random_triples(&region, box_, 20, DEFAULT_RATIOS, (0.1, 0.3), 11).unwrap();
    let records: Vec<_> = triples
        .iter()
        .map(|t| difference_three_spheres_check(&u1, &u2, &region, t, None).unwrap())
        .collect();
    assert!(records.iter().all(|r| r.flag == RecordFlag::Holds && r.c.is_finite() && r.c > 0.0));
    let fit = fit_common_delta(&records, 0.95).unwrap();
    assert!(fit.satisfied >= 0.95);
    assert!(fit.c <= 1e3, "{fit:?}");
}
