//! Geometry helpers shared by the mesh, structure and surface builders.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

/// Unsigned angle between two vectors in [0, pi]. Zero vectors give 0.
pub fn angle_between(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (u.dot(v) / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Signed dihedral of the chain p0-p1-p2-p3 in (-pi, pi], IUPAC sign
/// convention (clockwise rotations looking from p1 to p2 are positive).
pub fn dihedral(p0: &Point3<f64>, p1: &Point3<f64>, p2: &Point3<f64>, p3: &Point3<f64>) -> f64 {
    let b0 = p0 - p1;
    let b1 = (p2 - p1).normalize();
    let b2 = p3 - p2;
    let v = b0 - b1 * b0.dot(&b1);
    let w = b2 - b1 * b2.dot(&b1);
    let x = v.dot(&w);
    let y = b1.cross(&v).dot(&w);
    y.atan2(x)
}

/// Place an atom at `length` from c, with angle a-?-c equal to `angle` at c
/// relative to b, and dihedral(a, b, c, new) equal to `torsion`. The natural
/// extension construction used to grow peptide chains from internal
/// coordinates.
pub fn place_from_internal(
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
    length: f64,
    angle: f64,
    torsion: f64,
) -> Point3<f64> {
    let bc = (c - b).normalize();
    let ab = b - a;
    let n = ab.cross(&bc).normalize();
    let m = n.cross(&bc);
    // Local displacement in the (bc, m, n) frame.
    let d = Vector3::new(
        -length * angle.cos(),
        length * angle.sin() * torsion.cos(),
        length * angle.sin() * torsion.sin(),
    );
    c + bc * d.x + m * d.y + n * d.z
}

/// Uniform hash grid over a fixed point set, for nearest-point and
/// radius queries. Ties on distance resolve to the lowest point index.
pub struct SpatialGrid {
    cell: f64,
    origin: Point3<f64>,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Point3<f64>>,
}

impl SpatialGrid {
    /// `cell` must be positive; a good default is the expected query radius.
    pub fn build(points: &[Point3<f64>], cell: f64) -> Self {
        assert!(cell > 0.0, "grid cell must be positive");
        let origin = points
            .iter()
            .fold(Point3::new(f64::MAX, f64::MAX, f64::MAX), |acc, p| {
                Point3::new(acc.x.min(p.x), acc.y.min(p.y), acc.z.min(p.z))
            });
        let origin = if points.is_empty() { Point3::origin() } else { origin };
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(&origin, cell, p)).or_default().push(i);
        }
        SpatialGrid { cell, origin, buckets, points: points.to_vec() }
    }

    fn key(origin: &Point3<f64>, cell: f64, p: &Point3<f64>) -> (i64, i64, i64) {
        (
            ((p.x - origin.x) / cell).floor() as i64,
            ((p.y - origin.y) / cell).floor() as i64,
            ((p.z - origin.z) / cell).floor() as i64,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the point closest to `q`. None when empty.
    pub fn nearest(&self, q: &Point3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (qx, qy, qz) = Self::key(&self.origin, self.cell, q);
        // Any occupied cell lies within this many shells of any query key.
        let max_shell = self
            .buckets
            .keys()
            .map(|&(x, y, z)| {
                (x - qx).abs().max((y - qy).abs()).max((z - qz).abs())
            })
            .max()
            .unwrap();
        let mut best: Option<(f64, usize)> = None;
        for shell in 0..=max_shell {
            // A point whose cell key differs by s along an axis is at least
            // (s-1)*cell away, so unvisited shells cannot beat this bound.
            if let Some((d2, _)) = best {
                if d2.sqrt() <= (shell - 1) as f64 * self.cell {
                    break;
                }
            }
            for dx in -shell..=shell {
                for dy in -shell..=shell {
                    for dz in -shell..=shell {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != shell {
                            continue;
                        }
                        if let Some(ids) = self.buckets.get(&(qx + dx, qy + dy, qz + dz)) {
                            for &i in ids {
                                let d2 = (self.points[i] - q).norm_squared();
                                let cand = (d2, i);
                                if best.map_or(true, |b| cand < b) {
                                    best = Some(cand);
                                }
                            }
                        }
                    }
                }
            }
        }
        best.map(|(d2, i)| (i, d2.sqrt()))
    }

    /// All point indices within `radius` of `q`, ascending by index.
    pub fn within(&self, q: &Point3<f64>, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let span = (radius / self.cell).ceil() as i64 + 1;
        let (qx, qy, qz) = Self::key(&self.origin, self.cell, q);
        let mut out = Vec::new();
        for dx in -span..=span {
            for dy in -span..=span {
                for dz in -span..=span {
                    if let Some(ids) = self.buckets.get(&(qx + dx, qy + dy, qz + dz)) {
                        for &i in ids {
                            if (self.points[i] - q).norm_squared() <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
