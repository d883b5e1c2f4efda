//! Lipschitz domains given by a closed polyline or a named radial
//! parameterization, reparameterized by arc length.

use super::{dist_point_segment, GeomError};
use crate::grid::{ComplexField, GridSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
#[cfg(test)]
use std::f64::consts::PI;

/// Named smooth boundary families, all radial graphs r(θ) around a center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveFamily {
    Circle { center_re: f64, center_im: f64, radius: f64 },
    /// r(θ) = base + amp·cos(freq·θ)
    PerturbedCircle { center_re: f64, center_im: f64, base: f64, amp: f64, freq: u32 },
    /// r(θ) = radius·(|cos θ|^power + |sin θ|^power)^(−1/power), power even.
    Superellipse { center_re: f64, center_im: f64, radius: f64, power: u32 },
}

impl CurveFamily {
    pub fn center(&self) -> Complex64 {
        match *self {
            CurveFamily::Circle { center_re, center_im, .. }
            | CurveFamily::PerturbedCircle { center_re, center_im, .. }
            | CurveFamily::Superellipse { center_re, center_im, .. } => {
                Complex64::new(center_re, center_im)
            }
        }
    }

    /// Radius and its θ-derivative.
    fn radius(&self, theta: f64) -> (f64, f64) {
        match *self {
            CurveFamily::Circle { radius, .. } => (radius, 0.0),
            CurveFamily::PerturbedCircle { base, amp, freq, .. } => {
                let f = freq as f64;
                (base + amp * (f * theta).cos(), -amp * f * (f * theta).sin())
            }
            CurveFamily::Superellipse { radius, power, .. } => {
                let p = power as f64;
                let (c, s) = (theta.cos(), theta.sin());
                let g = c.abs().powf(p) + s.abs().powf(p);
                let dg = p * (s.abs().powf(p - 1.0) * s.signum() * c
                    - c.abs().powf(p - 1.0) * c.signum() * s);
                let r = radius * g.powf(-1.0 / p);
                let dr = radius * (-1.0 / p) * g.powf(-1.0 / p - 1.0) * dg;
                (r, dr)
            }
        }
    }

    fn point(&self, theta: f64) -> Complex64 {
        let (r, _) = self.radius(theta);
        self.center() + r * Complex64::new(theta.cos(), theta.sin())
    }

    /// dz/dθ.
    fn velocity(&self, theta: f64) -> Complex64 {
        let (r, dr) = self.radius(theta);
        Complex64::new(dr, r) * Complex64::new(theta.cos(), theta.sin())
    }
}

/// Boundary description accepted by [`build_domain`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    Polyline { vertices: Vec<[f64; 2]> },
    Parametric {
        #[serde(flatten)]
        curve: CurveFamily,
        /// Resolution of the internal arc-length table.
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

fn default_samples() -> usize {
    1 << 14
}

#[derive(Debug, Clone)]
enum Boundary {
    Polyline {
        vertices: Vec<Complex64>,
        /// Cumulative arc length at each vertex, last entry = total length.
        cumlen: Vec<f64>,
    },
    Parametric {
        curve: CurveFamily,
        /// θ samples of cumulative arc length, uniform in θ over [0, 2π].
        cum: Vec<f64>,
    },
}

/// Outward unit normals sampled at uniformly spaced arc-length nodes.
#[derive(Debug, Clone)]
pub struct NormalField {
    pub nodes: Vec<Complex64>,
    pub normals: Vec<Complex64>,
    /// Arc-length step between nodes.
    pub spacing: f64,
    /// Total boundary length.
    pub length: f64,
}

impl NormalField {
    /// Total turning of the normal over one loop; 2π for a simple
    /// counterclockwise boundary.
    pub fn winding(&self) -> f64 {
        let m = self.normals.len();
        let mut total = 0.0;
        for i in 0..m {
            let a = self.normals[i];
            let b = self.normals[(i + 1) % m];
            total += (b / a).arg();
        }
        total
    }
}

/// A bounded simple domain with arc-length boundary parameterization,
/// membership test, boundary distance, and outward normal field.
#[derive(Debug, Clone)]
pub struct LipschitzDomain {
    boundary: Boundary,
    length: f64,
    area: f64,
    centroid: Complex64,
    /// Lipschitz constant estimate of the boundary graph.
    pub delta: f64,
    /// Window scale estimate paired with `delta`.
    pub window: f64,
    /// Dense boundary polyline used for distance queries.
    dense: Vec<Complex64>,
    /// Longest edge of the dense polyline (prune radius for distance
    /// queries).
    max_segment_len: f64,
    /// Lipschitz constant of the radial gap, so gap/dist_lip bounds the
    /// true boundary distance from below.
    dist_lip: f64,
    bbox: (Complex64, Complex64),
}

fn max_edge(points: &[Complex64]) -> f64 {
    let n = points.len();
    (0..n).map(|i| (points[(i + 1) % n] - points[i]).norm()).fold(0.0, f64::max)
}

fn dist_point_rect(p: Complex64, corner: Complex64, side: f64) -> f64 {
    let dx = (corner.re - p.re).max(p.re - corner.re - side).max(0.0);
    let dy = (corner.im - p.im).max(p.im - corner.im - side).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

/// Validates a boundary description and builds the domain.
pub fn build_domain(spec: &BoundarySpec) -> Result<LipschitzDomain, GeomError> {
    match spec {
        BoundarySpec::Polyline { vertices } => build_polyline(vertices),
        BoundarySpec::Parametric { curve, samples } => build_parametric(*curve, *samples),
    }
}

fn build_polyline(raw: &[[f64; 2]]) -> Result<LipschitzDomain, GeomError> {
    if raw.len() < 3 {
        return Err(GeomError::InvalidDomain("need at least 3 vertices".into()));
    }
    let mut vertices: Vec<Complex64> = raw.iter().map(|v| Complex64::new(v[0], v[1])).collect();
    let n = vertices.len();
    // Signed area fixes the orientation to counterclockwise.
    let mut area2 = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area2 += a.re * b.im - b.re * a.im;
    }
    if area2.abs() < 1e-14 {
        return Err(GeomError::InvalidDomain("degenerate polygon".into()));
    }
    if area2 < 0.0 {
        vertices.reverse();
        area2 = -area2;
    }
    if polyline_self_intersects(&vertices) {
        return Err(GeomError::InvalidDomain("edges intersect".into()));
    }
    let mut cumlen = Vec::with_capacity(n + 1);
    cumlen.push(0.0);
    for i in 0..n {
        let l = (vertices[(i + 1) % n] - vertices[i]).norm();
        if l < 1e-14 {
            return Err(GeomError::InvalidDomain("repeated vertex".into()));
        }
        cumlen.push(cumlen[i] + l);
    }
    let length = *cumlen.last().unwrap();
    let area = area2 / 2.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let cross = a.re * b.im - b.re * a.im;
        cx += (a.re + b.re) * cross;
        cy += (a.im + b.im) * cross;
    }
    let centroid = Complex64::new(cx, cy) / (6.0 * area);
    let shortest = (0..n)
        .map(|i| cumlen[i + 1] - cumlen[i])
        .fold(f64::INFINITY, f64::min);
    let dense = vertices.clone();
    let bbox = bounding_box(&vertices);
    let max_segment_len = max_edge(&dense);
    Ok(LipschitzDomain {
        boundary: Boundary::Polyline { vertices, cumlen },
        length,
        area,
        centroid,
        delta: 1.0,
        window: shortest / 4.0,
        dense,
        max_segment_len,
        dist_lip: 1.0,
        bbox,
    })
}

fn build_parametric(curve: CurveFamily, samples: usize) -> Result<LipschitzDomain, GeomError> {
    let samples = samples.max(1 << 10);
    let (rmin, max_slope, max_dr) = {
        let mut rmin = f64::INFINITY;
        let mut slope = 0.0f64;
        let mut max_dr = 0.0f64;
        for i in 0..4096 {
            let th = TAU * i as f64 / 4096.0;
            let (r, dr) = curve.radius(th);
            if r <= 0.0 {
                return Err(GeomError::InvalidDomain(format!(
                    "radius must stay positive, r({th}) = {r}"
                )));
            }
            rmin = rmin.min(r);
            slope = slope.max((dr / r).abs());
            max_dr = max_dr.max(dr.abs());
        }
        (rmin, slope, max_dr)
    };
    // Cumulative arc length on a uniform θ table; 4-point Gauss per
    // interval keeps the node placement accurate to machine precision.
    let gauss_x = [
        -0.861136311594053,
        -0.339981043584856,
        0.339981043584856,
        0.861136311594053,
    ];
    let gauss_w = [
        0.347854845137454,
        0.652145154862546,
        0.652145154862546,
        0.347854845137454,
    ];
    let dt = TAU / samples as f64;
    let mut cum = Vec::with_capacity(samples + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for i in 0..samples {
        let a = i as f64 * dt;
        let mid = a + dt / 2.0;
        let mut piece = 0.0;
        for (x, w) in gauss_x.iter().zip(gauss_w) {
            piece += w * curve.velocity(mid + x * dt / 2.0).norm();
        }
        acc += piece * dt / 2.0;
        cum.push(acc);
    }
    let length = acc;
    // Area and centroid by contour quadrature in θ.
    let mut area2i = Complex64::default();
    let mut moment = Complex64::default();
    for i in 0..samples {
        let th = (i as f64 + 0.5) * dt;
        let z = curve.point(th);
        let v = curve.velocity(th);
        area2i += z.conj() * v * dt;
        moment += z * z.conj() * v * dt;
    }
    let area = area2i.im / 2.0;
    if area <= 0.0 {
        return Err(GeomError::InvalidDomain("parameterization is not counterclockwise".into()));
    }
    let centroid = moment / (2.0 * Complex64::i()) / area;
    let dense: Vec<Complex64> = (0..4096).map(|i| curve.point(TAU * i as f64 / 4096.0)).collect();
    if polyline_self_intersects(&dense_downsample(&dense, 1024)) {
        return Err(GeomError::InvalidDomain("curve intersects itself".into()));
    }
    let bbox = bounding_box(&dense);
    let max_segment_len = max_edge(&dense);
    // Gap Lipschitz constant: |∇(ρ(arg) − r)| ≤ 1 + max|ρ'|/r, with r
    // bounded below by half the inradius for the points that matter.
    let dist_lip = 1.0 + max_dr / (rmin / 2.0);
    Ok(LipschitzDomain {
        boundary: Boundary::Parametric { curve, cum },
        length,
        area,
        centroid,
        delta: max_slope,
        window: rmin / 4.0,
        dense,
        max_segment_len,
        dist_lip,
        bbox,
    })
}

fn dense_downsample(points: &[Complex64], target: usize) -> Vec<Complex64> {
    let stride = (points.len() / target).max(1);
    points.iter().step_by(stride).copied().collect()
}

fn bounding_box(points: &[Complex64]) -> (Complex64, Complex64) {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (lo, hi)
}

fn segments_properly_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn polyline_self_intersects(vertices: &[Complex64]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in i + 1..n {
            // Skip segments sharing a vertex.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_properly_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

impl LipschitzDomain {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Complex64 {
        self.centroid
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox;
        (hi - lo).norm()
    }

    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        self.bbox
    }

    /// Boundary point at arc length `t ∈ [0, length)`.
    pub fn boundary_point(&self, t: f64) -> Complex64 {
        let t = t.rem_euclid(self.length);
        match &self.boundary {
            Boundary::Polyline { vertices, cumlen } => {
                let seg = match cumlen.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                    Ok(i) => i.min(vertices.len() - 1),
                    Err(i) => i - 1,
                };
                let a = vertices[seg];
                let b = vertices[(seg + 1) % vertices.len()];
                let u = (t - cumlen[seg]) / (cumlen[seg + 1] - cumlen[seg]);
                a + (b - a) * u
            }
            Boundary::Parametric { curve, .. } => curve.point(self.theta_at(t)),
        }
    }

    /// Unit tangent (|dz/ds| = 1) at arc length `t`; counterclockwise.
    pub fn unit_tangent(&self, t: f64) -> Complex64 {
        let t = t.rem_euclid(self.length);
        match &self.boundary {
            Boundary::Polyline { vertices, cumlen } => {
                let seg = match cumlen.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                    Ok(i) => i.min(vertices.len() - 1),
                    Err(i) => i - 1,
                };
                let a = vertices[seg];
                let b = vertices[(seg + 1) % vertices.len()];
                (b - a) / (b - a).norm()
            }
            Boundary::Parametric { curve, .. } => {
                let v = curve.velocity(self.theta_at(t));
                v / v.norm()
            }
        }
    }

    /// Outward unit normal at arc length `t` (tangent rotated by −π/2).
    pub fn outward_normal(&self, t: f64) -> Complex64 {
        -Complex64::i() * self.unit_tangent(t)
    }

    /// Inverts the arc-length table: θ with s(θ) = t.
    fn theta_at(&self, t: f64) -> f64 {
        match &self.boundary {
            Boundary::Polyline { .. } => unreachable!("polyline has no θ parameter"),
            Boundary::Parametric { curve, cum } => {
                let n = cum.len() - 1;
                let dt = TAU / n as f64;
                let i = match cum.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                    Ok(i) => i.min(n - 1),
                    Err(i) => i - 1,
                };
                let mut theta =
                    dt * (i as f64 + (t - cum[i]) / (cum[i + 1] - cum[i]).max(1e-300));
                // Newton refinement on s(θ) − t with s' = |z'(θ)|.
                for _ in 0..4 {
                    let s_here = self.arclength_at(theta, cum, dt);
                    let speed = curve.velocity(theta).norm();
                    theta -= (s_here - t) / speed;
                }
                theta
            }
        }
    }

    fn arclength_at(&self, theta: f64, cum: &[f64], dt: f64) -> f64 {
        let curve = match &self.boundary {
            Boundary::Parametric { curve, .. } => curve,
            _ => unreachable!(),
        };
        let theta = theta.rem_euclid(TAU);
        let i = ((theta / dt) as usize).min(cum.len() - 2);
        let a = i as f64 * dt;
        // 4-point Gauss on the partial interval [a, θ].
        let gauss_x = [
            -0.861136311594053,
            -0.339981043584856,
            0.339981043584856,
            0.861136311594053,
        ];
        let gauss_w = [
            0.347854845137454,
            0.652145154862546,
            0.652145154862546,
            0.347854845137454,
        ];
        let half = (theta - a) / 2.0;
        let mid = a + half;
        let mut piece = 0.0;
        for (x, w) in gauss_x.iter().zip(gauss_w) {
            piece += w * curve.velocity(mid + x * half).norm();
        }
        cum[i] + piece * half
    }

    /// Point membership (boundary excluded).
    pub fn contains(&self, z: Complex64) -> bool {
        match &self.boundary {
            Boundary::Parametric { curve, .. } => {
                let u = z - curve.center();
                let r = u.norm();
                if r == 0.0 {
                    return true;
                }
                let (rho, _) = curve.radius(u.im.atan2(u.re));
                r < rho
            }
            Boundary::Polyline { vertices, .. } => {
                // Crossing number against the horizontal ray from z.
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a.im > z.im) != (b.im > z.im) {
                        let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                        if z.re < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Unsigned distance from a point to the boundary (via the dense
    /// boundary polyline for parametric curves; exact for polylines).
    ///
    /// A node pre-pass prunes the segment refinement: a segment can only
    /// beat the best node distance if one endpoint is within a segment
    /// length of it.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let pts = &self.dense;
        let n = pts.len();
        if n <= 16 {
            let mut best = f64::INFINITY;
            for i in 0..n {
                best = best.min(dist_point_segment(z, pts[i], pts[(i + 1) % n]));
            }
            return best;
        }
        let mut node_d = Vec::with_capacity(n);
        let mut best = f64::INFINITY;
        for p in pts {
            let d = (z - p).norm();
            node_d.push(d);
            best = best.min(d);
        }
        let cutoff = best + self.max_segment_len;
        for i in 0..n {
            if node_d[i].min(node_d[(i + 1) % n]) <= cutoff {
                best = best.min(dist_point_segment(z, pts[i], pts[(i + 1) % n]));
            }
        }
        best
    }

    /// Cheap lower bound on the boundary distance; collar tests use it to
    /// skip the exact computation for cells safely away from ∂Ω.
    pub fn distance_lower_bound(&self, z: Complex64) -> f64 {
        match &self.boundary {
            Boundary::Parametric { curve, .. } => {
                let rmin = 4.0 * self.window;
                let r = (z - curve.center()).norm();
                if r < 0.75 * rmin {
                    // Every boundary point sits at radius ≥ rmin.
                    return rmin - r;
                }
                self.radial_gap(z).abs() / self.dist_lip
            }
            Boundary::Polyline { .. } => self.boundary_distance(z),
        }
    }

    /// Signed distance: positive inside, negative outside.
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        let d = self.boundary_distance(z);
        if self.contains(z) {
            d
        } else {
            -d
        }
    }

    /// Distance from an axis-parallel square (corner, side) to the boundary.
    pub fn square_boundary_distance(&self, corner: Complex64, side: f64) -> f64 {
        let pts = &self.dense;
        let n = pts.len();
        if n <= 16 {
            let mut best = f64::INFINITY;
            for i in 0..n {
                best = best.min(dist_segment_rect(pts[i], pts[(i + 1) % n], corner, side));
                if best == 0.0 {
                    break;
                }
            }
            return best;
        }
        let mut node_d = Vec::with_capacity(n);
        let mut best = f64::INFINITY;
        for p in pts {
            let d = dist_point_rect(*p, corner, side);
            node_d.push(d);
            best = best.min(d);
        }
        let cutoff = best + self.max_segment_len;
        for i in 0..n {
            if node_d[i].min(node_d[(i + 1) % n]) <= cutoff {
                best = best.min(dist_segment_rect(pts[i], pts[(i + 1) % n], corner, side));
                if best == 0.0 {
                    break;
                }
            }
        }
        best
    }

    /// True when the square (corner, side) lies inside the domain.
    pub fn contains_square(&self, corner: Complex64, side: f64) -> bool {
        let center = corner + Complex64::new(side / 2.0, side / 2.0);
        self.contains(center) && self.square_boundary_distance(corner, side) > 0.0
    }

    /// Outward normal field at `m` uniformly spaced arc-length nodes.
    ///
    /// Nodes sit at t = (i + 1/2)·length/m so polyline corners are never
    /// sampled directly.
    pub fn normal_field(&self, m: usize) -> NormalField {
        let spacing = self.length / m as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut normals = Vec::with_capacity(m);
        for i in 0..m {
            let t = (i as f64 + 0.5) * spacing;
            nodes.push(self.boundary_point(t));
            normals.push(self.outward_normal(t));
        }
        NormalField { nodes, normals, spacing, length: self.length }
    }

    /// Sharp 0/1 membership mask at cell centers.
    pub fn sharp_mask(&self, spec: GridSpec) -> ComplexField {
        let values = spec
            .iter_points()
            .map(|(_, _, z)| {
                if self.contains(z) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        ComplexField::from_values(spec, values).expect("mask is finite")
    }

    /// C² ramp mask: 1 at depth ≥ `collar` inside Ω, 0 outside Ω, quintic
    /// smoothstep in between. Avoids the O(h^{1/p}) boundary roughness of
    /// the sharp mask in solver experiments.
    pub fn mollified_mask(&self, spec: GridSpec, collar: f64) -> ComplexField {
        let min_cos = 1.0 / (1.0 + self.delta * self.delta).sqrt();
        let values = spec
            .iter_points()
            .map(|(_, _, z)| {
                let gap = self.radial_gap(z);
                if gap <= 0.0 {
                    return Complex64::default();
                }
                let depth = gap * min_cos;
                let u = (depth / collar).clamp(0.0, 1.0);
                let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
                Complex64::new(s, 0.0)
            })
            .collect();
        ComplexField::from_values(spec, values).expect("mask is finite")
    }

    /// Cheap inside-depth proxy: positive inside, comparable to the
    /// boundary distance (exact for circles).
    fn radial_gap(&self, z: Complex64) -> f64 {
        match &self.boundary {
            Boundary::Parametric { curve, .. } => {
                let u = z - curve.center();
                let r = u.norm();
                let (rho, _) = curve.radius(if r == 0.0 { 0.0 } else { u.im.atan2(u.re) });
                rho - r
            }
            Boundary::Polyline { .. } => self.signed_distance(z),
        }
    }

    /// True when the whole domain sits in the grid's central quarter, the
    /// region safe from periodization artifacts.
    pub fn fits_central_quarter(&self, spec: &GridSpec) -> bool {
        let (lo, hi) = self.bbox;
        spec.in_central_quarter(lo) && spec.in_central_quarter(hi)
    }
}

fn dist_segment_rect(a: Complex64, b: Complex64, corner: Complex64, side: f64) -> f64 {
    let x0 = corner.re;
    let y0 = corner.im;
    let x1 = x0 + side;
    let y1 = y0 + side;
    let inside = |p: Complex64| p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1;
    if inside(a) || inside(b) {
        return 0.0;
    }
    let corners = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
    ];
    for i in 0..4 {
        if segments_properly_intersect(a, b, corners[i], corners[(i + 1) % 4]) {
            return 0.0;
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        best = best.min(dist_segments(a, b, corners[i], corners[(i + 1) % 4]));
    }
    best
}

fn dist_segments(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    dist_point_segment(a, c, d)
        .min(dist_point_segment(b, c, d))
        .min(dist_point_segment(c, a, b))
        .min(dist_point_segment(d, a, b))
}
