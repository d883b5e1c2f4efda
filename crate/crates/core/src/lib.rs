//! A numerical laboratory for the Beltrami equation ∂̄f = μ∂f on planar
//! Lipschitz domains.
//!
//! The crate builds the principal solution f = Ch + z through the
//! Neumann series h = Σ (μB)^k μ, where B and C are the Beurling and
//! Cauchy transforms realized as Fourier multipliers on a periodized
//! grid, and verifies at desk scale the operator identities, kernel
//! expansions, covering lemmas, and combinatorial facts the regularity
//! theory of such solutions rests on.
//!
//! Module map:
//! - [`grid`]: uniform complex grids, sampling, spectral Wirtinger calculus.
//! - [`singular_ops`]: Beurling/Cauchy transforms, the convolution kernel
//!   family, localizations, commutators, reflections.
//! - [`geometry`]: Lipschitz domains, Whitney coverings, chains, shadows,
//!   the maximal operator.
//! - [`norms`]: discrete Sobolev/Hölder/Besov estimation, approximating
//!   polynomials, inequality probes.
//! - [`beltrami`]: Neumann-series solver and principal solutions.
//! - [`identities`]: contour quadrature and high-precision identity checks.
//! - [`report`]: verification records and suite plumbing.

pub mod beltrami;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod norms;
pub mod report;
pub mod rng;
pub mod singular_ops;
pub(crate) mod spectral;
