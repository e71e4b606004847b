//! Analytic shape descriptions and their closed-form boundary distance.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded open set in one or two dimensions, in domain units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Rectangle {
        ax: f64,
        ay: f64,
        bx: f64,
        by: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    /// Open `r`-neighborhood of the segment `[a, b]`.
    Stadium {
        a: [f64; 2],
        b: [f64; 2],
        r: f64,
    },
    /// Simple counterclockwise polygon; the closing edge is implicit.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    CustomMask {
        path: PathBuf,
    },
}

impl ShapeSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ShapeSpec::Interval { .. } => "interval",
            ShapeSpec::Rectangle { .. } => "rectangle",
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Stadium { .. } => "stadium",
            ShapeSpec::Polygon { .. } => "polygon",
            ShapeSpec::CustomMask { .. } => "custom-mask",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ShapeSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ShapeSpec::Interval { a, b } => {
                if !finite(&[*a, *b]) || b <= a {
                    return Err(Error::BadShape(format!("interval ({a}, {b}) has no extent")));
                }
            }
            ShapeSpec::Rectangle { ax, ay, bx, by } => {
                if !finite(&[*ax, *ay, *bx, *by]) || bx <= ax || by <= ay {
                    return Err(Error::BadShape("rectangle has no extent".into()));
                }
            }
            ShapeSpec::Disk { cx, cy, r } => {
                if !finite(&[*cx, *cy, *r]) || *r <= 0.0 {
                    return Err(Error::BadShape("disk radius must be positive".into()));
                }
            }
            ShapeSpec::Stadium { a, b, r } => {
                if !finite(&[a[0], a[1], b[0], b[1], *r]) || *r <= 0.0 {
                    return Err(Error::BadShape("stadium radius must be positive".into()));
                }
            }
            ShapeSpec::Polygon { vertices } => validate_polygon(vertices)?,
            ShapeSpec::CustomMask { .. } => {}
        }
        Ok(())
    }

    /// Axis-aligned bounding box `(min, max)`; the second coordinate is 0 in 1D.
    pub fn bounding_box(&self) -> Result<([f64; 2], [f64; 2])> {
        Ok(match self {
            ShapeSpec::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            ShapeSpec::Rectangle { ax, ay, bx, by } => ([*ax, *ay], [*bx, *by]),
            ShapeSpec::Disk { cx, cy, r } => ([cx - r, cy - r], [cx + r, cy + r]),
            ShapeSpec::Stadium { a, b, r } => {
                ([a[0].min(b[0]) - r, a[1].min(b[1]) - r], [a[0].max(b[0]) + r, a[1].max(b[1]) + r])
            }
            ShapeSpec::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
            ShapeSpec::CustomMask { .. } => return Err(Error::UnsupportedShape("custom-mask")),
        })
    }

    /// Signed distance to the boundary curve: positive inside, negative outside.
    pub fn signed_distance(&self, x: [f64; 2]) -> Result<f64> {
        Ok(match self {
            ShapeSpec::Interval { a, b } => (x[0] - a).min(b - x[0]),
            ShapeSpec::Rectangle { ax, ay, bx, by } => {
                let dx = (x[0] - ax).min(bx - x[0]);
                let dy = (x[1] - ay).min(by - x[1]);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    -(dx.min(0.0).hypot(dy.min(0.0)))
                }
            }
            ShapeSpec::Disk { cx, cy, r } => r - (x[0] - cx).hypot(x[1] - cy),
            ShapeSpec::Stadium { a, b, r } => r - point_segment_distance(x, *a, *b),
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                let d = (0..n)
                    .map(|i| point_segment_distance(x, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if point_in_polygon(x, vertices) {
                    d
                } else {
                    -d
                }
            }
            ShapeSpec::CustomMask { .. } => return Err(Error::UnsupportedShape("custom-mask")),
        })
    }

    /// Euclidean distance from an inside point to the boundary curve.
    pub fn exact_boundary_distance(&self, x: [f64; 2]) -> Result<f64> {
        let s = self.signed_distance(x)?;
        if s < 0.0 {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(s)
    }
}

pub(crate) fn point_segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ax[0] * ab[0] + ax[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (x[0] - a[0] - t * ab[0]).hypot(x[1] - a[1] - t * ab[1])
}

fn point_in_polygon(x: [f64; 2], v: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (v[i], v[j]);
        if (pi[1] > x[1]) != (pj[1] > x[1]) {
            let t = (x[1] - pi[1]) / (pj[1] - pi[1]);
            if x[0] < pi[0] + t * (pj[0] - pi[0]) {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn validate_polygon(v: &[[f64; 2]]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::BadShape("polygon needs at least three vertices".into()));
    }
    if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::BadShape("polygon vertex is not finite".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex and are skipped
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::BadShape(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    let area2: f64 = (0..n).map(|i| orient([0.0, 0.0], v[i], v[(i + 1) % n])).sum();
    if area2 <= 0.0 {
        return Err(Error::BadShape("polygon vertices must be counterclockwise".into()));
    }
    Ok(())
}
