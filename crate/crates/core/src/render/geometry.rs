//! Planar geometry behind the diagnostics: 2x2 PCA ellipses and Voronoi
//! cells obtained by clipping a box with perpendicular-bisector half-planes.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type Point = [f64; 2];

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(Error::Diagnostics(format!(
                "degenerate box {min:?}..{max:?}"
            )));
        }
        Ok(BoundingBox { min, max })
    }

    /// Smallest box covering `points`, grown by `margin` of its extent on
    /// every side. Degenerate extents fall back to a unit extent.
    pub fn covering<'a>(points: impl IntoIterator<Item = &'a Point>, margin: f64) -> Result<Self> {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        if !min[0].is_finite() {
            return Err(Error::Diagnostics("no points to bound".into()));
        }
        for a in 0..2 {
            let extent = max[a] - min[a];
            let pad = if extent > 0.0 { extent * margin } else { 0.5 };
            min[a] -= pad;
            max[a] += pad;
        }
        BoundingBox::new(min, max)
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Corners in counterclockwise order.
    pub fn polygon(&self) -> Vec<Point> {
        vec![
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub center: Point,
    /// Unit direction of the major axis.
    pub major_axis: Point,
    /// Unit direction of the minor axis, the major axis turned by +90°.
    pub minor_axis: Point,
    pub major: f64,
    pub minor: f64,
}

impl EllipseParams {
    /// Angle of the major axis in radians, measured from +x.
    pub fn angle(&self) -> f64 {
        self.major_axis[1].atan2(self.major_axis[0])
    }
}

/// Principal axes of a projected cloud: eigen-decomposition of the sample
/// covariance (denominator `N - 1`), semi-axes `scale * sqrt(eigenvalue)`.
pub fn pca_ellipse(proj: &Matrix, scale: f64) -> Result<EllipseParams> {
    if proj.cols() != 2 {
        return Err(Error::Diagnostics("cloud must be two dimensional".into()));
    }
    if proj.rows() < 3 {
        return Err(Error::Diagnostics(format!(
            "need at least 3 points for a PCA ellipse, got {}",
            proj.rows()
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Diagnostics(format!("ellipse scale must be positive, got {scale}")));
    }
    let n = proj.rows() as f64;
    let center = crate::stability::cloud_mean(proj);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for z in proj.iter_rows() {
        let (dx, dy) = (z[0] - center[0], z[1] - center[1]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (a, b, c) = (sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));

    let mean = 0.5 * (a + c);
    let spread = (0.5 * (a - c)).hypot(b);
    let (l1, l2) = (mean + spread, (mean - spread).max(0.0));

    let major_axis = if b == 0.0 {
        if a >= c {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        // Two equivalent eigenvector forms; take the better conditioned one.
        let u = [l1 - c, b];
        let v = [b, l1 - a];
        let w = if u[0].hypot(u[1]) >= v[0].hypot(v[1]) { u } else { v };
        let len = w[0].hypot(w[1]);
        [w[0] / len, w[1] / len]
    };
    let minor_axis = [-major_axis[1], major_axis[0]];
    Ok(EllipseParams {
        center,
        major_axis,
        minor_axis,
        major: scale * l1.sqrt(),
        minor: scale * l2.sqrt(),
    })
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace area, positive for counterclockwise polygons.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

/// Point-in-convex-polygon test for counterclockwise polygons. `tol` is an
/// absolute distance allowed outside each edge.
pub fn contains_point(poly: &[Point], p: Point, tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        len == 0.0 || cross(a, b, p) / len >= -tol
    })
}

/// Keeps the part of a convex polygon where `dot(normal, z) <= offset`.
pub fn clip_half_plane(poly: &[Point], normal: Point, offset: f64) -> Vec<Point> {
    let side = |p: Point| normal[0] * p[0] + normal[1] * p[1] - offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Voronoi cells of `anchors` clipped to `bounds`, counterclockwise.
pub fn voronoi_cells(anchors: &[Point], bounds: &BoundingBox) -> Result<Vec<Vec<Point>>> {
    if anchors.is_empty() {
        return Err(Error::Diagnostics("need at least one anchor".into()));
    }
    for (i, a) in anchors.iter().enumerate() {
        if anchors[..i].contains(a) {
            return Err(Error::Diagnostics(format!("duplicate anchor location {a:?}")));
        }
        if !bounds.contains(*a) {
            return Err(Error::Diagnostics(format!("anchor {a:?} lies outside the box")));
        }
    }
    Ok(anchors
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut cell = bounds.polygon();
            for (j, &b) in anchors.iter().enumerate() {
                if i == j || cell.is_empty() {
                    continue;
                }
                // |z - a|^2 <= |z - b|^2  <=>  2 (b - a).z <= |b|^2 - |a|^2
                let normal = [b[0] - a[0], b[1] - a[1]];
                let offset = 0.5 * ((b[0] * b[0] + b[1] * b[1]) - (a[0] * a[0] + a[1] * a[1]));
                cell = clip_half_plane(&cell, normal, offset);
            }
            cell
        })
        .collect())
}
