use super::Mesh;
use crate::geometry::{orient, Point};

/// Bucket grid over triangle bounding boxes for point location.
#[derive(Clone, Debug)]
pub struct PointLocator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    tris: Vec<[Point; 3]>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &mesh.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = mesh.n_triangles().max(1) as f64;
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let cell = (((hi.x - lo.x) * (hi.y - lo.y)).max(extent * extent * 1e-6) / n).sqrt() * 1.5;
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let tris: Vec<[Point; 3]> = (0..mesh.n_triangles()).map(|t| mesh.triangle_points(t)).collect();
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        for (t, p) in tris.iter().enumerate() {
            let x0 = p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
            let x1 = p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
            let y0 = p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
            let y1 = p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
            for j in clampi((y0 - lo.y) / cell, ny)..=clampi((y1 - lo.y) / cell, ny) {
                for i in clampi((x0 - lo.x) / cell, nx)..=clampi((x1 - lo.x) / cell, nx) {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        PointLocator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
            tris,
        }
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        barycentric(self.tris[t], p)
    }

    fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
        )
    }

    /// Triangle containing `p` (barycentrics ≥ −tol) and its barycentrics.
    pub fn locate(&self, p: Point, tol: f64) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.cell_of(p);
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j as usize * self.nx + i as usize] {
            let b = barycentric(self.tris[t], p);
            let m = b[0].min(b[1]).min(b[2]);
            if m >= -tol && best.is_none_or(|(_, _, bm)| m > bm) {
                best = Some((t, b, m));
            }
        }
        best.map(|(t, b, _)| (t, b))
    }

    /// Like [`locate`](Self::locate), falling back to the triangle whose
    /// closest point is nearest to `p`; the barycentrics are then those of
    /// that closest point.
    pub fn locate_or_nearest(&self, p: Point) -> (usize, [f64; 3]) {
        if let Some(hit) = self.locate(p, 1e-12) {
            return hit;
        }
        let (ci, cj) = self.cell_of(p);
        let mut best: Option<(usize, Point, f64)> = None;
        let mut ring = 0isize;
        loop {
            for j in cj - ring..=cj + ring {
                for i in ci - ring..=ci + ring {
                    if (i - ci).abs() != ring && (j - cj).abs() != ring {
                        continue;
                    }
                    if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
                        continue;
                    }
                    for &t in &self.buckets[j as usize * self.nx + i as usize] {
                        let q = closest_point(self.tris[t], p);
                        let d = q.distance(p);
                        if best.is_none_or(|(bt, _, bd)| d < bd || (d == bd && t < bt)) {
                            best = Some((t, q, d));
                        }
                    }
                }
            }
            // Anything found within `ring` cells is final once the next ring
            // cannot be closer.
            if let Some((t, q, d)) = best {
                if d <= ring as f64 * self.cell {
                    return (t, barycentric(self.tris[t], q));
                }
            }
            let max_ring = self.nx.max(self.ny) as isize + ci.abs().max(cj.abs());
            if ring > max_ring {
                let (t, q, _) = best.expect("mesh has triangles");
                return (t, barycentric(self.tris[t], q));
            }
            ring += 1;
        }
    }
}

pub(crate) fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let area = orient(p[0], p[1], p[2]);
    let l0 = orient(x, p[1], p[2]) / area;
    let l1 = orient(p[0], x, p[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

fn closest_point(p: [Point; 3], x: Point) -> Point {
    let b = barycentric(p, x);
    if b.iter().all(|&v| v >= 0.0) {
        return x;
    }
    let mut best = p[0];
    let mut bd = f64::INFINITY;
    for k in 0..3 {
        let (a, c) = (p[k], p[(k + 1) % 3]);
        let (d, t) = crate::geometry::segment_distance(x, a, c);
        if d < bd {
            bd = d;
            best = a.lerp(c, t);
        }
    }
    best
}
