//! Convex-hull IoU of two palettes in Cartesian Lab by Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colorlab::Palette;
use crate::{Error, Result};

/// Inflation radius for hulls without volume, in ΔE-like Lab units.
pub const DEGENERATE_RADIUS: f64 = 1.0;
pub const DEFAULT_HULL_SAMPLES: usize = 100_000;
pub const MIN_HULL_SAMPLES: usize = 1000;
const GEOM_TOL: f64 = 1e-6;

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}
fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn segment_distance(x: V3, a: V3, b: V3) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(sub(x, a), ab) / len2).clamp(0.0, 1.0)
    };
    norm(sub(x, [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]]))
}

/// Half-space `n · x <= d`.
#[derive(Debug, Clone, Copy)]
struct Plane {
    n: V3,
    d: f64,
}

/// A convex body: a solid hull, or a lower-dimensional hull grown by
/// [`DEGENERATE_RADIUS`].
#[derive(Debug, Clone)]
pub struct HullBody {
    points: Vec<V3>,
    kind: Kind,
    lo: V3,
    hi: V3,
}

#[derive(Debug, Clone)]
enum Kind {
    Solid(Vec<Plane>),
    Point,
    Segment(V3, V3),
    /// Plane spanned by the points with unit normal, plus in-plane edges.
    Polygon { normal: V3, origin: V3, edges: Vec<Plane> },
}

impl HullBody {
    pub fn from_points(mut points: Vec<V3>) -> Self {
        assert!(!points.is_empty());
        points.sort_by(|a, b| {
            a[0].total_cmp(&b[0])
                .then(a[1].total_cmp(&b[1]))
                .then(a[2].total_cmp(&b[2]))
        });
        points.dedup();
        let n = points.len();

        // Farthest pair spans the dominant direction.
        let mut best = (0, 0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let d = norm(sub(points[j], points[i]));
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let kind = if best.2 <= GEOM_TOL {
            Kind::Point
        } else {
            let (a, b) = (points[best.0], points[best.1]);
            let dir = scale(sub(b, a), 1.0 / best.2);
            // Largest offset from the line.
            let mut far = (0, 0.0);
            for (k, p) in points.iter().enumerate() {
                let v = sub(*p, a);
                let off = norm(cross(v, dir));
                if off > far.1 {
                    far = (k, off);
                }
            }
            if far.1 <= GEOM_TOL {
                Kind::Segment(a, b)
            } else {
                let c = points[far.0];
                let normal = cross(sub(b, a), sub(c, a));
                let normal = scale(normal, 1.0 / norm(normal));
                let planar = points
                    .iter()
                    .all(|p| dot(sub(*p, a), normal).abs() <= GEOM_TOL);
                if planar {
                    Kind::Polygon {
                        normal,
                        origin: a,
                        edges: polygon_edges(&points, normal),
                    }
                } else {
                    Kind::Solid(solid_faces(&points))
                }
            }
        };
        let pad = match kind {
            Kind::Solid(_) => 0.0,
            _ => DEGENERATE_RADIUS,
        };
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k] - pad);
                hi[k] = hi[k].max(p[k] + pad);
            }
        }
        HullBody {
            points,
            kind,
            lo,
            hi,
        }
    }

    pub fn from_palette(p: &Palette) -> Self {
        HullBody::from_points(
            p.colors()
                .iter()
                .map(|c| {
                    let lab = c.to_lab();
                    [lab.l, lab.a, lab.b]
                })
                .collect(),
        )
    }

    /// Affine dimension of the hull (0 to 3).
    pub fn rank(&self) -> usize {
        match self.kind {
            Kind::Point => 0,
            Kind::Segment(..) => 1,
            Kind::Polygon { .. } => 2,
            Kind::Solid(_) => 3,
        }
    }

    pub fn contains(&self, x: V3) -> bool {
        match &self.kind {
            Kind::Solid(planes) => planes.iter().all(|p| dot(p.n, x) <= p.d),
            Kind::Point => norm(sub(x, self.points[0])) <= DEGENERATE_RADIUS,
            Kind::Segment(a, b) => segment_distance(x, *a, *b) <= DEGENERATE_RADIUS,
            Kind::Polygon {
                normal,
                origin,
                edges,
            } => {
                let h = dot(sub(x, *origin), *normal);
                if h.abs() > DEGENERATE_RADIUS {
                    return false;
                }
                let proj = sub(x, scale(*normal, h));
                if edges.iter().all(|e| dot(e.n, proj) <= e.d) {
                    return true;
                }
                let n = self.points.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    for j in i + 1..n {
                        best = best.min(segment_distance(x, self.points[i], self.points[j]));
                    }
                }
                best <= DEGENERATE_RADIUS
            }
        }
    }
}

/// Supporting planes through point triples with every point on one side.
fn solid_faces(points: &[V3]) -> Vec<Plane> {
    let n = points.len();
    let mut planes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let nv = cross(sub(points[j], points[i]), sub(points[k], points[i]));
                let len = norm(nv);
                if len <= GEOM_TOL {
                    continue;
                }
                let nv = scale(nv, 1.0 / len);
                let d = dot(nv, points[i]);
                let side: Vec<f64> = points.iter().map(|p| dot(nv, *p) - d).collect();
                if side.iter().all(|&s| s <= GEOM_TOL) {
                    planes.push(Plane { n: nv, d: d + GEOM_TOL });
                } else if side.iter().all(|&s| s >= -GEOM_TOL) {
                    planes.push(Plane {
                        n: scale(nv, -1.0),
                        d: -d + GEOM_TOL,
                    });
                }
            }
        }
    }
    planes
}

/// In-plane supporting lines of a planar point set, as 3-D half-spaces.
fn polygon_edges(points: &[V3], normal: V3) -> Vec<Plane> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let m = cross(normal, sub(points[j], points[i]));
            let len = norm(m);
            if len <= GEOM_TOL {
                continue;
            }
            let m = scale(m, 1.0 / len);
            let d = dot(m, points[i]);
            let side: Vec<f64> = points.iter().map(|p| dot(m, *p) - d).collect();
            if side.iter().all(|&s| s <= GEOM_TOL) {
                edges.push(Plane { n: m, d: d + GEOM_TOL });
            } else if side.iter().all(|&s| s >= -GEOM_TOL) {
                edges.push(Plane {
                    n: scale(m, -1.0),
                    d: -d + GEOM_TOL,
                });
            }
        }
    }
    edges
}

/// IoU of two bodies estimated from `samples` uniform draws over the
/// bounding box of their union.
pub fn body_iou(a: &HullBody, b: &HullBody, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_HULL_SAMPLES {
        return Err(Error::invalid(format!(
            "hull overlap needs at least {MIN_HULL_SAMPLES} samples, got {samples}"
        )));
    }
    let lo: V3 = std::array::from_fn(|k| a.lo[k].min(b.lo[k]));
    let hi: V3 = std::array::from_fn(|k| a.hi[k].max(b.hi[k]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..samples {
        let x: V3 = std::array::from_fn(|k| {
            let u: f64 = rng.gen();
            lo[k] + u * (hi[k] - lo[k])
        });
        let (ia, ib) = (a.contains(x), b.contains(x));
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    Ok(if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    })
}

pub fn convex_hull_overlap(p1: &Palette, p2: &Palette, samples: usize, seed: u64) -> Result<f64> {
    body_iou(&HullBody::from_palette(p1), &HullBody::from_palette(p2), samples, seed)
}
