//! Planar Lipschitz domains and the covering machinery built on them:
//! Whitney decompositions, admissible chains, shadows, the long-distance
//! metric, and the non-centered Hardy-Littlewood maximal operator.

mod domain;
mod maximal;
mod whitney;

pub use domain::{
    build_domain, BoundarySpec, CurveFamily, LipschitzDomain, NormalField,
};
pub use maximal::{maximal, maximal_close_sum_ratio, maximal_far_sum_ratio};
pub use whitney::{chain, chain_sum_ratio, shadow, whitney, Chain, Square, WhitneyCovering};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("boundary curve is self-intersecting or degenerate: {0}")]
    InvalidDomain(String),
    #[error("min_side {min_side} produced no Whitney cubes (larger than the inradius?)")]
    EmptyCover { min_side: f64 },
    #[error("whitney distance comparability cannot be satisfied: dist/side spans [{lo}, {hi}]")]
    Comparability { lo: f64, hi: f64 },
    #[error("covering is disconnected, no chain between cubes {0} and {1}")]
    NoChain(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Long distance D(A,B) = diam(A) + diam(B) + dist(A,B) between two
/// axis-parallel squares (degenerate point squares allowed).
pub fn long_distance(a: &Square, b: &Square) -> f64 {
    a.diam() + b.diam() + a.dist_to(b)
}

pub(crate) fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
