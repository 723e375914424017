use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::quality::mesh_quality;
use super::{BoundaryEdge, BoundaryTag, Mesh, MeshError};
use crate::geometry::{obstacle_clearance, orient, DomainSpec, Point, StarShape};

#[derive(Clone, Copy, Debug)]
pub struct MeshOptions {
    /// Minimum angle requested from the Delaunay refinement, in degrees.
    pub angle_limit_deg: f64,
    /// Largest triangle area as a multiple of h².
    pub area_factor: f64,
    /// Boundary sample spacing as a fraction of h.
    pub boundary_spacing: f64,
    /// Retries with a smaller area bound if the edge-length check fails.
    pub max_retries: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            angle_limit_deg: 25.0,
            area_factor: 0.3,
            boundary_spacing: 0.7,
            max_retries: 4,
        }
    }
}

pub fn generate_mesh(domain: &DomainSpec, h: f64) -> Result<Mesh, MeshError> {
    generate_mesh_with(domain, h, &MeshOptions::default())
}

pub fn generate_mesh_with(domain: &DomainSpec, h: f64, opts: &MeshOptions) -> Result<Mesh, MeshError> {
    let limit = domain.rho0 / 4.0;
    if !(h > 0.0 && h <= limit * (1.0 + 1e-12)) {
        return Err(MeshError::SizeOutOfRange { h, limit });
    }
    if let Some(obstacle) = &domain.obstacle {
        let clearance = obstacle_clearance(&domain.container, obstacle);
        if clearance < 2.0 * h {
            return Err(MeshError::ObstacleTooClose { clearance, h });
        }
    }

    let mut area_factor = opts.area_factor;
    let mut last_err = None;
    for _ in 0..=opts.max_retries {
        let mesh = triangulate(domain, h, opts, area_factor)?;
        let q = mesh_quality(&mesh);
        if q.min_angle_deg < super::MIN_ANGLE_DEG {
            return Err(MeshError::Quality(format!(
                "minimum angle {:.2}° below {}°",
                q.min_angle_deg,
                super::MIN_ANGLE_DEG
            )));
        }
        if q.h_max <= 2.0 * h {
            mesh.validate(1e-12 * domain.rho0)?;
            return Ok(mesh);
        }
        last_err = Some(MeshError::Quality(format!("longest edge {} exceeds 2h", q.h_max)));
        area_factor *= 0.7;
    }
    Err(last_err.expect("at least one attempt"))
}

/// Angles `θ₀ … θ₁` of `n + 1` points equispaced in arclength along the arc.
fn arc_angles(shape: &StarShape, theta0: f64, theta1: f64, n: usize) -> Vec<f64> {
    let fine = (64 * n).max(2048);
    let step = (theta1 - theta0) / fine as f64;
    let mut table = Vec::with_capacity(fine + 1);
    let mut acc = 0.0;
    let mut prev = shape.point(theta0);
    table.push(0.0);
    for i in 1..=fine {
        let q = shape.point(theta0 + step * i as f64);
        acc += q.distance(prev);
        prev = q;
        table.push(acc);
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    for i in 0..=n {
        let target = acc * i as f64 / n as f64;
        while j + 1 < fine && table[j + 1] <= target {
            j += 1;
        }
        let frac = ((target - table[j]) / (table[j + 1] - table[j])).clamp(0.0, 1.0);
        out.push(theta0 + step * (j as f64 + frac));
    }
    out[n] = theta1;
    out
}

fn arc_length(shape: &StarShape, theta0: f64, theta1: f64) -> f64 {
    let fine = 4096;
    let step = (theta1 - theta0) / fine as f64;
    (0..fine)
        .map(|i| {
            shape
                .point(theta0 + step * i as f64)
                .distance(shape.point(theta0 + step * (i + 1) as f64))
        })
        .sum()
}

fn segments(length: f64, spacing: f64, min: usize) -> usize {
    ((length / spacing).ceil() as usize).max(min)
}

/// Radial projection onto the curve.
fn project(shape: &StarShape, p: Point) -> Point {
    shape.point(shape.polar_angle(p))
}

fn radial_gap(shape: &StarShape, p: Point) -> f64 {
    let d = p - shape.center();
    (d.norm() - shape.radius(d.angle())).abs()
}

fn triangulate(domain: &DomainSpec, h: f64, opts: &MeshOptions, area_factor: f64) -> Result<Mesh, MeshError> {
    let container = &domain.container;
    let spacing = opts.boundary_spacing * h;
    let gamma = domain.gamma;

    let mut outer_angles = Vec::new();
    if gamma.span() >= TAU - 1e-12 {
        let n = segments(arc_length(container, gamma.start, gamma.start + TAU), spacing, 8);
        outer_angles.extend_from_slice(&arc_angles(container, gamma.start, gamma.start + TAU, n)[..n]);
    } else {
        let n_gamma = segments(arc_length(container, gamma.start, gamma.end), spacing, 2);
        let n_wall = segments(arc_length(container, gamma.end, gamma.start + TAU), spacing, 2);
        outer_angles.extend_from_slice(&arc_angles(container, gamma.start, gamma.end, n_gamma)[..n_gamma]);
        outer_angles.extend_from_slice(&arc_angles(container, gamma.end, gamma.start + TAU, n_wall)[..n_wall]);
    }
    let mut points: Vec<Point> = outer_angles.iter().map(|&t| container.point(t)).collect();
    let n_outer = points.len();
    let mut constraints: Vec<[usize; 2]> = (0..n_outer).map(|i| [i, (i + 1) % n_outer]).collect();

    if let Some(obstacle) = &domain.obstacle {
        let n = segments(arc_length(obstacle, 0.0, TAU), spacing, 8);
        let angles = arc_angles(obstacle, 0.0, TAU, n);
        points.extend(angles[..n].iter().map(|&t| obstacle.point(t)));
        constraints.extend((0..n).map(|i| [n_outer + i, n_outer + (i + 1) % n]));
    }
    let n_initial = points.len();

    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, constraints)
        .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    if cdt.num_vertices() != n_initial {
        return Err(MeshError::Triangulation("duplicate boundary samples".into()));
    }
    let budget = (50.0 * domain.flow_area() / (h * h)) as usize + 10 * n_initial;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .with_angle_limit(AngleLimit::from_deg(opts.angle_limit_deg))
        .with_max_allowed_area(area_factor * h * h)
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(MeshError::Triangulation("refinement ran out of vertices".into()));
    }
    let excluded: HashSet<_> = result.excluded_faces.iter().copied().collect();

    let mut raw_tris = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        raw_tris.push([vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()]);
    }
    let raw_points: Vec<Point> = cdt
        .vertices()
        .map(|v| Point::new(v.position().x, v.position().y))
        .collect();

    // Renumber the referenced vertices in increasing original index so the
    // boundary samples keep their leading positions.
    let mut used = vec![false; raw_points.len()];
    for t in &raw_tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; raw_points.len()];
    let mut old_index = Vec::new();
    let mut vertices = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = vertices.len();
            old_index.push(i);
            vertices.push(raw_points[i]);
        }
    }
    let mut triangles: Vec<[usize; 3]> = raw_tris
        .iter()
        .map(|t| {
            let mut tri = [remap[t[0]], remap[t[1]], remap[t[2]]];
            if orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
                tri.swap(1, 2);
            }
            tri
        })
        .collect();
    triangles.sort_unstable();

    // Directed boundary edges with the domain on the left.
    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    for t in &triangles {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]));
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !directed.contains(&(b, a)) {
                next.insert(a, b);
            }
        }
    }

    // Project split vertices onto the analytic curves.
    let on_obstacle = |p: Point| match &domain.obstacle {
        Some(o) => radial_gap(o, p) < radial_gap(container, p),
        None => false,
    };
    let boundary_vertices: Vec<usize> = {
        let mut v: Vec<usize> = next.keys().copied().collect();
        v.sort_unstable();
        v
    };
    for &v in &boundary_vertices {
        if old_index[v] < n_initial {
            continue;
        }
        let p = vertices[v];
        vertices[v] = match (&domain.obstacle, on_obstacle(p)) {
            (Some(o), true) => project(o, p),
            _ => project(container, p),
        };
    }
    for (t, tri) in triangles.iter().enumerate() {
        if orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0 {
            return Err(MeshError::Triangulation(format!("triangle {t} inverted by boundary projection")));
        }
    }

    // Walk the loops: outer first from the Γ start (vertex 0), then the
    // obstacle loop from its lowest-numbered vertex.
    let mut boundary_edges = Vec::with_capacity(next.len());
    let mut visited = HashSet::new();
    let mut starts = vec![0usize];
    if domain.obstacle.is_some() {
        if let Some(&s) = boundary_vertices.iter().find(|&&v| on_obstacle(vertices[v])) {
            starts.push(s);
        }
    }
    for start in starts {
        let mut a = start;
        loop {
            let b = *next
                .get(&a)
                .ok_or_else(|| MeshError::Triangulation(format!("boundary loop broken at {a}")))?;
            if !visited.insert(a) {
                return Err(MeshError::Triangulation("boundary loop revisits a vertex".into()));
            }
            let mid = (vertices[a] + vertices[b]) * 0.5;
            let tag = if on_obstacle(mid) {
                BoundaryTag::Obstacle
            } else if gamma.contains_angle(container.polar_angle(mid)) {
                BoundaryTag::Gamma
            } else {
                BoundaryTag::Wall
            };
            boundary_edges.push(BoundaryEdge { v: [a, b], tag });
            a = b;
            if a == start {
                break;
            }
        }
    }
    if boundary_edges.len() != next.len() {
        return Err(MeshError::Triangulation(format!(
            "expected {} boundary loops, found extra boundary edges",
            1 + domain.obstacle.is_some() as usize
        )));
    }

    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        h_target: h,
    })
}

/// Tags of the four sides of an axis-aligned rectangle.
#[derive(Clone, Copy, Debug)]
pub struct RectangleTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl RectangleTags {
    pub fn uniform(tag: BoundaryTag) -> Self {
        RectangleTags {
            bottom: tag,
            right: tag,
            top: tag,
            left: tag,
        }
    }
}

/// Structured mesh of `[x0,x1]×[y0,y1]` with `nx × ny` cells, each cut along
/// its rising diagonal.
pub fn rectangle_mesh(
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    nx: usize,
    ny: usize,
    tags: RectangleTags,
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 || !(x1 > x0) || !(y1 > y0) {
        return Err(MeshError::Invalid("degenerate rectangle".into()));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [idx(i, 0), idx(i + 1, 0)], tag: tags.bottom });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [idx(nx, j), idx(nx, j + 1)], tag: tags.right });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { v: [idx(i + 1, ny), idx(i, ny)], tag: tags.top });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { v: [idx(0, j + 1), idx(0, j)], tag: tags.left });
    }
    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        h_target: ((x1 - x0) / nx as f64).max((y1 - y0) / ny as f64),
    })
}
