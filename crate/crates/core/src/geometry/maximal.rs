//! Non-centered Hardy-Littlewood maximal operator on grid fields, and the
//! summation inequalities over Whitney cubes that rely on it.

use super::whitney::WhitneyCovering;
use crate::grid::{ComplexField, GridSpec};
use rayon::prelude::*;

/// Prefix sums of Re f for O(1) box sums over cell ranges.
struct IntegralImage {
    n: usize,
    prefix: Vec<f64>,
}

impl IntegralImage {
    fn new(f: &ComplexField) -> Self {
        let n = f.spec().resolution;
        let mut prefix = vec![0.0; (n + 1) * (n + 1)];
        for j in 0..n {
            let mut row = 0.0;
            for k in 0..n {
                row += f.at(j, k).re;
                prefix[(j + 1) * (n + 1) + (k + 1)] = prefix[j * (n + 1) + (k + 1)] + row;
            }
        }
        Self { n, prefix }
    }

    /// Sum of Re f over cells j0..j1 × k0..k1 (clipped).
    fn box_sum(&self, j0: i64, j1: i64, k0: i64, k1: i64) -> f64 {
        let n = self.n as i64;
        let j0 = j0.clamp(0, n) as usize;
        let j1 = j1.clamp(0, n) as usize;
        let k0 = k0.clamp(0, n) as usize;
        let k1 = k1.clamp(0, n) as usize;
        if j0 >= j1 || k0 >= k1 {
            return 0.0;
        }
        let w = self.n + 1;
        self.prefix[j1 * w + k1] - self.prefix[j0 * w + k1] - self.prefix[j1 * w + k0]
            + self.prefix[j0 * w + k0]
    }
}

/// Cell index range [j0, j1) whose centers fall in [a, b) along one axis.
fn cell_range(a: f64, b: f64, origin: f64, h: f64, n: usize) -> (i64, i64) {
    // Center of cell j is origin + h·(j − n/2).
    let n2 = (n / 2) as f64;
    let j0 = ((a - origin) / h + n2 - 0.5).ceil() as i64;
    let j1 = ((b - origin) / h + n2 - 0.5).ceil() as i64;
    (j0, j1)
}

/// Non-centered maximal function of Re f ≥ 0.
///
/// Tests axis-parallel squares at dyadic scales (cell size up to the grid
/// width) with three lattice offsets per scale per axis; the result
/// under-estimates the true supremum by at most a fixed geometric factor.
pub fn maximal(f: &ComplexField) -> ComplexField {
    let spec = f.spec();
    let n = spec.resolution;
    let h = spec.spacing();
    let img = IntegralImage::new(f);
    let scales: Vec<usize> = (0..)
        .map(|g| 1usize << g)
        .take_while(|&cells| cells <= n)
        .collect();

    let values: Vec<num_complex::Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            let z = spec.point(j, k);
            let mut best = 0.0f64;
            for &cells in &scales {
                let s = h * cells as f64;
                for ox in 0..3 {
                    let ax = (((z.re - ox as f64 * s / 3.0) / s).floor()) * s + ox as f64 * s / 3.0;
                    let (j0, j1) = cell_range(ax, ax + s, spec.center.re, h, n);
                    for oy in 0..3 {
                        let ay =
                            (((z.im - oy as f64 * s / 3.0) / s).floor()) * s + oy as f64 * s / 3.0;
                        let (k0, k1) = cell_range(ay, ay + s, spec.center.im, h, n);
                        let mean = img.box_sum(j0, j1, k0, k1) / (cells * cells) as f64;
                        best = best.max(mean);
                    }
                }
            }
            num_complex::Complex64::new(best, 0.0)
        })
        .collect();
    ComplexField::from_values(spec, values).expect("maximal function is finite")
}

/// Precomputed data for the maximal-function summation inequalities over
/// a fixed covering and density g ≥ 0.
pub struct MaximalAudit {
    /// ∫_S Re g dm per cube.
    pub cube_integrals: Vec<f64>,
    /// inf over each cube of Mg.
    pub mg_inf: Vec<f64>,
}

impl MaximalAudit {
    pub fn new(cov: &WhitneyCovering, g: &ComplexField) -> Self {
        let mg = maximal(g);
        let spec = g.spec();
        let cube_integrals = cov
            .cubes
            .iter()
            .map(|sq| integrate_over_square(g, spec, sq.corner.re, sq.corner.im, sq.side))
            .collect();
        let mg_inf = cov
            .cubes
            .iter()
            .map(|sq| min_over_square(&mg, spec, sq.corner.re, sq.corner.im, sq.side))
            .collect();
        Self { cube_integrals, mg_inf }
    }

    /// Ratio of Σ_{S: D(Q,S)>r} ∫_S g / D(Q,S)^{2+η} against inf_Q Mg / r^η.
    pub fn far_ratio(&self, cov: &WhitneyCovering, q: usize, r: f64, eta: f64) -> f64 {
        let qs = &cov.cubes[q];
        let mut lhs = 0.0;
        for (s, sq) in cov.cubes.iter().enumerate() {
            let d = super::long_distance(sq, qs);
            if d > r {
                lhs += self.cube_integrals[s] / d.powf(2.0 + eta);
            }
        }
        let rhs = self.mg_inf[q] / r.powf(eta);
        if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        }
    }

    /// Ratio of Σ_{S: D(Q,S)<r} ∫_S g / D(Q,S)^{2−η} against inf_Q Mg · r^η.
    pub fn close_ratio(&self, cov: &WhitneyCovering, q: usize, r: f64, eta: f64) -> f64 {
        let qs = &cov.cubes[q];
        let mut lhs = 0.0;
        for (s, sq) in cov.cubes.iter().enumerate() {
            let d = super::long_distance(sq, qs);
            if d < r {
                lhs += self.cube_integrals[s] / d.powf(2.0 - eta);
            }
        }
        let rhs = self.mg_inf[q] * r.powf(eta);
        if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        }
    }
}

fn integrate_over_square(f: &ComplexField, spec: GridSpec, x: f64, y: f64, side: f64) -> f64 {
    let h = spec.spacing();
    let n = spec.resolution;
    let (j0, j1) = cell_range(x, x + side, spec.center.re, h, n);
    let (k0, k1) = cell_range(y, y + side, spec.center.im, h, n);
    let mut acc = 0.0;
    for j in j0.max(0)..j1.min(n as i64) {
        for k in k0.max(0)..k1.min(n as i64) {
            acc += f.at(j as usize, k as usize).re;
        }
    }
    acc * h * h
}

fn min_over_square(f: &ComplexField, spec: GridSpec, x: f64, y: f64, side: f64) -> f64 {
    let h = spec.spacing();
    let n = spec.resolution;
    let (j0, j1) = cell_range(x, x + side, spec.center.re, h, n);
    let (k0, k1) = cell_range(y, y + side, spec.center.im, h, n);
    let mut best = f64::INFINITY;
    for j in j0.max(0)..j1.min(n as i64) {
        for k in k0.max(0)..k1.min(n as i64) {
            best = best.min(f.at(j as usize, k as usize).re);
        }
    }
    best
}

/// Convenience wrappers matching the audit entry points.
pub fn maximal_far_sum_ratio(
    audit: &MaximalAudit,
    cov: &WhitneyCovering,
    q: usize,
    r: f64,
    eta: f64,
) -> f64 {
    audit.far_ratio(cov, q, r, eta)
}

pub fn maximal_close_sum_ratio(
    audit: &MaximalAudit,
    cov: &WhitneyCovering,
    q: usize,
    r: f64,
    eta: f64,
) -> f64 {
    audit.close_ratio(cov, q, r, eta)
}
