//! Planar polygons stored as closed chains of edge vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed chain of `d` edge vectors, `true edge = edge * exp(log_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeChain {
    xs: Vec<f64>,
    ys: Vec<f64>,
    log_scale: f64,
}

/// Apex `(g, h)` of a triangle rescaled so that its longest side runs from
/// `(0, 0)` to `(1, 0)` and the next-longest side ends at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleShape {
    pub g: f64,
    pub h: f64,
}

impl EdgeChain {
    /// Builds a chain from raw edge components. The components must close up:
    /// both sums vanish within `1e-9 * max |component|`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, log_scale: f64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension(format!(
                "{} x-components but {} y-components",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 3 {
            return Err(Error::Dimension(format!("need at least 3 edges, got {}", xs.len())));
        }
        if !xs.iter().chain(&ys).all(|v| v.is_finite()) || !log_scale.is_finite() {
            return Err(Error::Domain("non-finite edge component".into()));
        }
        let chain = Self { xs, ys, log_scale };
        let (sx, sy) = chain.closure_error();
        let scale = chain.max_abs_component();
        if sx.abs().max(sy.abs()) > 1e-9 * scale {
            return Err(Error::Degenerate(format!(
                "edges do not close: sums ({sx:e}, {sy:e})"
            )));
        }
        Ok(chain)
    }

    pub(crate) fn from_parts_unchecked(xs: Vec<f64>, ys: Vec<f64>, log_scale: f64) -> Self {
        Self { xs, ys, log_scale }
    }

    pub fn d(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `(sum x_j, sum y_j)` in stored units.
    pub fn closure_error(&self) -> (f64, f64) {
        (self.xs.iter().sum(), self.ys.iter().sum())
    }

    fn max_abs_component(&self) -> f64 {
        self.xs
            .iter()
            .chain(&self.ys)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Same polygon with every length multiplied by `exp(by)`.
    pub fn rescaled(&self, by: f64) -> Self {
        Self {
            log_scale: self.log_scale + by,
            ..self.clone()
        }
    }

    /// Vertices in stored units, starting at the origin:
    /// `v_0 = 0`, `v_k = e_0 + ... + e_{k-1}`.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.d());
        let (mut a, mut b) = (0.0, 0.0);
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push([a, b]);
            a += x;
            b += y;
        }
        out
    }

    /// Twice the signed area in stored units:
    /// `sum_{i<j<=d-1} (x_i y_j - x_j y_i)`.
    fn twice_area_unscaled(&self) -> f64 {
        let d = self.d();
        let (mut px, mut py) = (0.0, 0.0);
        let mut acc = 0.0;
        for j in 0..d - 1 {
            acc += px * self.ys[j] - py * self.xs[j];
            px += self.xs[j];
            py += self.ys[j];
        }
        acc
    }

    /// Signed area; positive for counterclockwise chains.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.twice_area_unscaled() * (2.0 * self.log_scale).exp()
    }

    fn max_side_unscaled(&self) -> f64 {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }

    /// Length of the longest edge.
    pub fn max_side(&self) -> f64 {
        self.max_side_unscaled() * self.log_scale.exp()
    }

    /// `ln` of the longest edge, finite even when the edge underflows.
    pub fn log_max_side(&self) -> f64 {
        self.max_side_unscaled().ln() + self.log_scale
    }

    /// `|area| / max_side^2`; independent of `log_scale`.
    pub fn flatness_ratio(&self) -> f64 {
        let m = self.max_side_unscaled();
        0.5 * self.twice_area_unscaled().abs() / (m * m)
    }

    pub fn csv_header(d: usize) -> String {
        let mut cols = vec!["step".to_string()];
        cols.extend((1..=d).map(|j| format!("x_{j}")));
        cols.extend((1..=d).map(|j| format!("y_{j}")));
        cols.push("log_scale".into());
        cols.join(",")
    }

    /// `step, x_1..x_d, y_1..y_d, log_scale`.
    pub fn to_csv_row(&self, step: usize) -> String {
        let mut fields = vec![step.to_string()];
        fields.extend(self.xs.iter().map(|v| v.to_string()));
        fields.extend(self.ys.iter().map(|v| v.to_string()));
        fields.push(self.log_scale.to_string());
        fields.join(",")
    }
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Edge chain of a convex polygon given by its vertices in cyclic order.
pub fn edges_from_vertices(vertices: &[[f64; 2]]) -> Result<EdgeChain> {
    let d = vertices.len();
    if d < 3 {
        return Err(Error::Dimension(format!("need at least 3 vertices, got {d}")));
    }
    let xs: Vec<f64> = (0..d).map(|j| vertices[(j + 1) % d][0] - vertices[j][0]).collect();
    let ys: Vec<f64> = (0..d).map(|j| vertices[(j + 1) % d][1] - vertices[j][1]).collect();
    let scale = xs.iter().chain(&ys).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("all vertices coincide".into()));
    }
    for j in 0..d {
        if xs[j] == 0.0 && ys[j] == 0.0 {
            return Err(Error::Degenerate(format!("vertices {j} and {} coincide", (j + 1) % d)));
        }
    }
    let tol = 1e-12 * scale * scale;
    let mut sign = 0.0;
    for j in 0..d {
        let k = (j + 1) % d;
        let c = cross(xs[j], ys[j], xs[k], ys[k]);
        if c.abs() <= tol {
            return Err(Error::Degenerate(format!(
                "vertices {}, {k}, {} are collinear",
                j,
                (k + 1) % d
            )));
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return Err(Error::Degenerate(format!("polygon is not convex at vertex {k}")));
        }
    }
    // Convex turning with total winding one: reject self-intersecting stars.
    let winding: f64 = (0..d)
        .map(|j| {
            let k = (j + 1) % d;
            cross(xs[j], ys[j], xs[k], ys[k]).atan2(xs[j] * xs[k] + ys[j] * ys[k])
        })
        .sum();
    if (winding.abs() - std::f64::consts::TAU).abs() > 1e-6 {
        return Err(Error::Degenerate("vertices wind more than once".into()));
    }
    EdgeChain::new(xs, ys, 0.0)
}

/// Regular `d`-gon inscribed in the unit circle, counterclockwise.
pub fn regular_polygon(d: usize) -> Result<EdgeChain> {
    let v: Vec<[f64; 2]> = (0..d)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / d as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    edges_from_vertices(&v)
}

/// Sine of the angle between the lines spanned by `x` and `y`.
pub fn angular_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", x.len(), y.len())));
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>();
    let ny = y.iter().map(|v| v * v).sum::<f64>();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Domain("angular distance of a zero vector".into()));
    }
    // Lagrange identity: |x|^2|y|^2 - (x.y)^2 = sum_{i<j} (x_i y_j - x_j y_i)^2
    let mut wedge = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let w = x[i] * y[j] - x[j] * y[i];
            wedge += w * w;
        }
    }
    let radicand = (wedge / nx / ny).clamp(0.0, 1.0);
    Ok(radicand.sqrt())
}

/// Appends `-sum(x)` so the result lies in the sum-zero hyperplane.
pub fn lift_to_d(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    out.push(-x.iter().sum::<f64>());
    out
}

/// Shape coordinates of a triangle.
///
/// Vertices are relabelled `B1, B2, B3` so that `|B1B2| >= |B3B1| >= |B2B3|`
/// (ties keep the original vertex order), then mapped by a similarity
/// (reflection allowed) to `B1 = (0,0)`, `B2 = (1,0)`, `h >= 0`.
pub fn triangle_shape(chain: &EdgeChain) -> Result<TriangleShape> {
    if chain.d() != 3 {
        return Err(Error::Dimension(format!("triangle_shape needs d = 3, got {}", chain.d())));
    }
    let v = chain.vertices();
    // Length of the side opposite each vertex.
    let opposite: Vec<f64> = (0..3)
        .map(|k| {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .collect();
    if opposite.contains(&0.0) {
        return Err(Error::Degenerate("zero-length edge".into()));
    }
    // B3 faces the longest side, B2 the middle one, B1 the shortest.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| opposite[j].total_cmp(&opposite[i]));
    let (b3, b2, b1) = (v[order[0]], v[order[1]], v[order[2]]);
    let (bx, by) = (b2[0] - b1[0], b2[1] - b1[1]);
    let (px, py) = (b3[0] - b1[0], b3[1] - b1[1]);
    let base2 = bx * bx + by * by;
    Ok(TriangleShape {
        g: (px * bx + py * by) / base2,
        h: cross(bx, by, px, py).abs() / base2,
    })
}

/// `g` from the three side lengths, for when the apex height is known
/// separately. For sorted lengths `a <= b <= c`, `g = (b^2 + c^2 - a^2) / (2 c^2)`.
pub fn shape_abscissa_from_sides(lengths: [f64; 3]) -> f64 {
    let mut l = lengths;
    l.sort_by(f64::total_cmp);
    let (a, b, c) = (l[0], l[1], l[2]);
    ((b - a) * (b + a) + c * c) / (2.0 * c * c)
}
