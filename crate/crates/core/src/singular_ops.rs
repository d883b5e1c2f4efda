//! The Beurling transform and its iterates, the Cauchy transform, the
//! convolution kernel family T^γ with a principal-value quadrature
//! oracle, localizations to a domain, the multiplication commutator, and
//! the boundary reflection operator.
//!
//! The Beurling multiplier is not transcribed from a formula: it is
//! derived as the ratio of the Wirtinger symbols, so the defining
//! identity B(∂̄g) = ∂g holds exactly on every Fourier mode by
//! construction. Both B and C map the zero frequency to 0 (the
//! principal value kills constants, and the zero mode of C is not
//! well-defined on the torus), so identities involving them hold modulo
//! grid means.

use crate::geometry::LipschitzDomain;
use crate::grid::{ComplexField, GridSpec};
use crate::spectral;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpsError {
    #[error("iterate order must be ≥ 1, got {0}")]
    BadOrder(i64),
    #[error("kernel homogeneity γ₁+γ₂ = {0} < −2 is unsupported")]
    UnsupportedHomogeneity(i64),
    #[error("localization domain exceeds the grid's central quarter")]
    DomainOutsideSafeRegion,
    #[error("requested {k} singular values but the domain only has {cells} interior cells")]
    RankTooLarge { k: usize, cells: usize },
    #[error("point {0} is not a grid point")]
    NotAGridPoint(Complex64),
}

/// Fraction of |f| mass allowed outside the central quarter before a
/// support warning is emitted.
pub const SUPPORT_LEAK_THRESHOLD: f64 = 1e-6;

fn warn_on_support_leak(f: &ComplexField, what: &str) {
    let leak = f.mass_outside_central_quarter();
    if leak > SUPPORT_LEAK_THRESHOLD {
        log::warn!(
            "{what}: {:.2e} of the input mass lies outside the central quarter; \
             periodization error may exceed discretization error",
            leak
        );
    }
}

/// Beurling multiplier at one wavenumber: the ratio of the ∂ and ∂̄
/// symbols, unimodular away from zero.
#[inline]
fn beurling_symbol(kx: f64, ky: f64) -> Complex64 {
    let den = spectral::dbar_symbol(kx, ky);
    if den.norm_sqr() == 0.0 {
        Complex64::default()
    } else {
        spectral::d_symbol(kx, ky) / den
    }
}

/// Cauchy multiplier: right inverse of the ∂̄ symbol, zero mode dropped.
#[inline]
fn cauchy_symbol(kx: f64, ky: f64) -> Complex64 {
    let den = spectral::dbar_symbol(kx, ky);
    if den.norm_sqr() == 0.0 {
        Complex64::default()
    } else {
        1.0 / den
    }
}

/// Beurling transform B f as a Fourier multiplier.
pub fn beurling(f: &ComplexField) -> ComplexField {
    warn_on_support_leak(f, "beurling");
    beurling_unchecked(f, 1)
}

/// m-th iterate B^m f via the m-th multiplier power.
pub fn beurling_power(f: &ComplexField, m: i64) -> Result<ComplexField, OpsError> {
    if m < 1 {
        return Err(OpsError::BadOrder(m));
    }
    warn_on_support_leak(f, "beurling_power");
    Ok(beurling_unchecked(f, m as i32))
}

fn beurling_unchecked(f: &ComplexField, m: i32) -> ComplexField {
    let spec = f.spec();
    let out = spectral::apply_multiplier(f.values(), spec.resolution, spec.period(), |kx, ky| {
        beurling_symbol(kx, ky).powi(m)
    });
    ComplexField::from_raw(spec, out)
}

/// Conjugate multiplier iterate, the L² adjoint of B^m.
fn beurling_power_adjoint(f: &ComplexField, m: i32) -> ComplexField {
    let spec = f.spec();
    let out = spectral::apply_multiplier(f.values(), spec.resolution, spec.period(), |kx, ky| {
        beurling_symbol(kx, ky).powi(m).conj()
    });
    ComplexField::from_raw(spec, out)
}

/// Cauchy transform C f. Satisfies ∂̄(Cf) = f − mean(f) and ∂(Cf) = Bf
/// exactly in the discrete multiplier algebra.
pub fn cauchy(f: &ComplexField) -> ComplexField {
    warn_on_support_leak(f, "cauchy");
    let spec = f.spec();
    let out = spectral::apply_multiplier(f.values(), spec.resolution, spec.period(), cauchy_symbol);
    ComplexField::from_raw(spec, out)
}

fn cauchy_adjoint(f: &ComplexField) -> ComplexField {
    let spec = f.spec();
    let out = spectral::apply_multiplier(f.values(), spec.resolution, spec.period(), |kx, ky| {
        cauchy_symbol(kx, ky).conj()
    });
    ComplexField::from_raw(spec, out)
}

/// Kernel exponents γ = (γ₁, γ₂) of the convolution kernel z^{γ₁}·z̄^{γ₂}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelIndex {
    pub gamma1: i64,
    pub gamma2: i64,
}

impl KernelIndex {
    pub fn new(gamma1: i64, gamma2: i64) -> Self {
        Self { gamma1, gamma2 }
    }

    pub fn homogeneity(&self) -> i64 {
        self.gamma1 + self.gamma2
    }

    /// Kernel value u^{γ₁}·ū^{γ₂}.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        u.powi(self.gamma1 as i32) * u.conj().powi(self.gamma2 as i32)
    }
}

/// Principal-value integral of the kernel over the centered unit square,
/// nonzero only when the angular frequency γ₁−γ₂ is a multiple of 4.
///
/// For homogeneity −2 the integral is scale-invariant, so one value per γ
/// serves every cell size.
fn pv_cell_integral_unit(gamma: KernelIndex) -> f64 {
    let k = gamma.gamma1 - gamma.gamma2;
    if k.rem_euclid(4) != 0 {
        return 0.0;
    }
    // p.v.∫_cell u^γ dm = −∫₀^{2π} cos(kθ)·ln max(|cos θ|,|sin θ|) dθ,
    // integrated piecewise between the kinks at odd multiples of π/4.
    let mut acc = 0.0;
    let pieces = 8;
    let sub = 512;
    for piece in 0..pieces {
        let a = -std::f64::consts::FRAC_PI_4 + piece as f64 * std::f64::consts::FRAC_PI_4;
        let b = a + std::f64::consts::FRAC_PI_4;
        let h = (b - a) / sub as f64;
        let eval = |t: f64| {
            let m = t.cos().abs().max(t.sin().abs());
            -(m.ln()) * (k as f64 * t).cos()
        };
        let mut s = eval(a) + eval(b);
        for i in 1..sub {
            let t = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * eval(t);
        }
        acc += s * h / 3.0;
    }
    acc
}

/// Integral of the kernel over a cell of side `h` centered at the origin,
/// by 16×-refined midpoint subquadrature. Used for homogeneity > −2.
fn cell_integral_refined(gamma: KernelIndex, h: f64) -> Complex64 {
    let refine = 16;
    let sub = h / refine as f64;
    let mut acc = Complex64::default();
    for a in 0..refine {
        for b in 0..refine {
            let x = -h / 2.0 + (a as f64 + 0.5) * sub;
            let y = -h / 2.0 + (b as f64 + 0.5) * sub;
            acc += gamma.eval(Complex64::new(x, y));
        }
    }
    acc * sub * sub
}

/// Direct principal-value quadrature of T^γ f at selected grid points:
/// Σ over cells w ≠ cell(z) of (z−w)^γ f(w) h², plus the exact diagonal
/// cell contribution.
///
/// This is the slow independent oracle the multiplier operators are
/// validated against; it never touches the FFT path.
pub fn tgamma_pv(
    gamma: KernelIndex,
    f: &ComplexField,
    pts: &[Complex64],
) -> Result<Vec<Complex64>, OpsError> {
    if gamma.homogeneity() < -2 {
        return Err(OpsError::UnsupportedHomogeneity(gamma.homogeneity()));
    }
    let spec = f.spec();
    let h = spec.spacing();
    let h2 = h * h;
    let diag: Complex64 = if gamma.homogeneity() == -2 {
        Complex64::new(pv_cell_integral_unit(gamma), 0.0)
    } else {
        cell_integral_refined(gamma, h)
    };

    // Only cells carrying mass contribute; collect them once.
    let support: Vec<(Complex64, Complex64)> = spec
        .iter_points()
        .filter_map(|(j, k, w)| {
            let v = f.at(j, k);
            if v.norm_sqr() > 0.0 {
                Some((w, v))
            } else {
                None
            }
        })
        .collect();

    let mut out = Vec::with_capacity(pts.len());
    for &z in pts {
        let (j, k) = spec.nearest_cell(z);
        let zc = spec.point(j, k);
        if (zc - z).norm() > 1e-9 * h.max(1.0) {
            return Err(OpsError::NotAGridPoint(z));
        }
        let sum: Complex64 = support
            .par_iter()
            .map(|&(w, v)| {
                if (w - zc).norm_sqr() < (h * 0.5) * (h * 0.5) {
                    Complex64::default()
                } else {
                    gamma.eval(zc - w) * v
                }
            })
            .reduce(Complex64::default, |a, b| a + b);
        out.push(sum * h2 + diag * f.at(j, k));
    }
    Ok(out)
}

/// Serializable operator descriptor; domains are carried by reference
/// name and resolved against a registry at application time.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    BeurlingPower { m: i64 },
    Cauchy,
    TGamma { gamma1: i64, gamma2: i64 },
    Localized { inner: Box<OperatorSpec>, domain: String },
    Commutator { domain: String },
    Reflection { m: i64, domain: String },
    Composition { stages: Vec<OperatorSpec> },
}

/// An applicable operator on grid fields.
///
/// The empty composition acts as the identity; a commutator with a
/// constant multiplier is the zero operator.
#[derive(Clone)]
pub enum OperatorHandle<'a> {
    BeurlingPower(i64),
    Cauchy,
    TGamma(KernelIndex),
    Localized(Box<OperatorHandle<'a>>, &'a LipschitzDomain),
    Commutator(&'a ComplexField, &'a LipschitzDomain),
    Reflection(i64, &'a LipschitzDomain),
    Composition(Vec<OperatorHandle<'a>>),
}

impl<'a> OperatorHandle<'a> {
    /// Validated localization; the domain must sit in the grid's safe
    /// central quarter.
    pub fn localize(
        inner: OperatorHandle<'a>,
        dom: &'a LipschitzDomain,
        spec: &GridSpec,
    ) -> Result<OperatorHandle<'a>, OpsError> {
        if !dom.fits_central_quarter(spec) {
            return Err(OpsError::DomainOutsideSafeRegion);
        }
        Ok(OperatorHandle::Localized(Box::new(inner), dom))
    }

    pub fn apply(&self, f: &ComplexField) -> Result<ComplexField, OpsError> {
        match self {
            OperatorHandle::BeurlingPower(m) => beurling_power(f, *m),
            OperatorHandle::Cauchy => Ok(cauchy(f)),
            OperatorHandle::TGamma(gamma) => tgamma_fft(*gamma, f),
            OperatorHandle::Localized(inner, dom) => {
                let mask = dom.sharp_mask(f.spec());
                inner.apply(&mask.mul(f)).map(|g| mask.mul(&g))
            }
            OperatorHandle::Commutator(mu, dom) => commutator_apply(mu, dom, f),
            OperatorHandle::Reflection(m, dom) => reflection_apply(*m, dom, f),
            OperatorHandle::Composition(stages) => {
                let mut cur = f.clone();
                for stage in stages {
                    cur = stage.apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// L²-adjoint application (conjugate multipliers, conjugated
    /// pointwise factors, reversed compositions).
    pub fn apply_adjoint(&self, f: &ComplexField) -> Result<ComplexField, OpsError> {
        match self {
            OperatorHandle::BeurlingPower(m) => {
                if *m < 1 {
                    return Err(OpsError::BadOrder(*m));
                }
                Ok(beurling_power_adjoint(f, *m as i32))
            }
            OperatorHandle::Cauchy => Ok(cauchy_adjoint(f)),
            OperatorHandle::TGamma(gamma) => tgamma_fft_adjoint(*gamma, f),
            OperatorHandle::Localized(inner, dom) => {
                let mask = dom.sharp_mask(f.spec());
                inner.apply_adjoint(&mask.mul(f)).map(|g| mask.mul(&g))
            }
            OperatorHandle::Commutator(mu, dom) => {
                // (μ·B_Ω − B_Ω·μ)ᴴ = B_Ωᴴ·μ̄ − μ̄·B_Ωᴴ
                let mask = dom.sharp_mask(f.spec());
                let mu_conj = mu.conj();
                let b_adj_loc =
                    |g: &ComplexField| mask.mul(&beurling_power_adjoint(&mask.mul(g), 1));
                let lhs = b_adj_loc(&mu_conj.mul(f));
                let rhs = mu_conj.mul(&b_adj_loc(f));
                Ok(lhs.sub(&rhs))
            }
            OperatorHandle::Reflection(m, dom) => {
                if *m < 1 {
                    return Err(OpsError::BadOrder(*m));
                }
                let mask = dom.sharp_mask(f.spec());
                let comask = mask.map(|v| Complex64::new(1.0 - v.re, 0.0));
                let step = beurling_power_adjoint(&mask.mul(f), 1);
                let mid = comask.mul(&step);
                let back =
                    if *m == 1 { mid } else { beurling_power_adjoint(&mid, *m as i32 - 1) };
                Ok(mask.mul(&back))
            }
            OperatorHandle::Composition(stages) => {
                let mut cur = f.clone();
                for stage in stages.iter().rev() {
                    cur = stage.apply_adjoint(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// Descriptor for serialization; `domain_name` labels every domain
    /// reference in this handle.
    pub fn to_spec(&self, domain_name: &str) -> OperatorSpec {
        match self {
            OperatorHandle::BeurlingPower(m) => OperatorSpec::BeurlingPower { m: *m },
            OperatorHandle::Cauchy => OperatorSpec::Cauchy,
            OperatorHandle::TGamma(g) => OperatorSpec::TGamma { gamma1: g.gamma1, gamma2: g.gamma2 },
            OperatorHandle::Localized(inner, _) => OperatorSpec::Localized {
                inner: Box::new(inner.to_spec(domain_name)),
                domain: domain_name.to_string(),
            },
            OperatorHandle::Commutator(_, _) => {
                OperatorSpec::Commutator { domain: domain_name.to_string() }
            }
            OperatorHandle::Reflection(m, _) => {
                OperatorSpec::Reflection { m: *m, domain: domain_name.to_string() }
            }
            OperatorHandle::Composition(stages) => OperatorSpec::Composition {
                stages: stages.iter().map(|s| s.to_spec(domain_name)).collect(),
            },
        }
    }
}

/// T^γ as a periodized convolution: FFT of the sampled kernel (diagonal
/// cell replaced by its exact integral) times the FFT of f.
fn tgamma_fft(gamma: KernelIndex, f: &ComplexField) -> Result<ComplexField, OpsError> {
    if gamma.homogeneity() < -2 {
        return Err(OpsError::UnsupportedHomogeneity(gamma.homogeneity()));
    }
    let spec = f.spec();
    let n = spec.resolution;
    let h = spec.spacing();
    let diag = if gamma.homogeneity() == -2 {
        Complex64::new(pv_cell_integral_unit(gamma), 0.0)
    } else {
        cell_integral_refined(gamma, h)
    };
    // Kernel sampled with the singular cell replaced; indices wrap so the
    // kernel is centered at cell (0,0).
    let mut kernel = vec![Complex64::default(); n * n];
    for j in 0..n {
        for k in 0..n {
            let dj = spectral::bin_freq(j, n) as f64;
            let dk = spectral::bin_freq(k, n) as f64;
            kernel[j * n + k] = if dj == 0.0 && dk == 0.0 {
                diag / (h * h)
            } else {
                gamma.eval(Complex64::new(dj * h, dk * h))
            };
        }
    }
    spectral::fft2(&mut kernel, n);
    let mut hat = f.values().to_vec();
    spectral::fft2(&mut hat, n);
    for (v, k) in hat.iter_mut().zip(&kernel) {
        *v *= k * h * h;
    }
    spectral::ifft2(&mut hat, n);
    Ok(ComplexField::from_raw(spec, hat))
}

fn tgamma_fft_adjoint(gamma: KernelIndex, f: &ComplexField) -> Result<ComplexField, OpsError> {
    // Kᴴ(u) = conj(K(−u)); for K = u^{γ₁}ū^{γ₂} this is the swapped index
    // times the parity of the homogeneity.
    let swapped = KernelIndex::new(gamma.gamma2, gamma.gamma1);
    let sign = if gamma.homogeneity().rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    tgamma_fft(swapped, f).map(|g| g.scale(Complex64::new(sign, 0.0)))
}

/// Commutator [μ, B_Ω] f = μ·B_Ω f − B_Ω(μ·f).
pub fn commutator_apply(
    mu: &ComplexField,
    dom: &LipschitzDomain,
    f: &ComplexField,
) -> Result<ComplexField, OpsError> {
    let mask = dom.sharp_mask(f.spec());
    let b_loc = |g: &ComplexField| mask.mul(&beurling_unchecked(&mask.mul(g), 1));
    let lhs = mu.mul(&b_loc(f));
    let rhs = b_loc(&mu.mul(f));
    Ok(lhs.sub(&rhs))
}

/// Reflection R_m f = χ_Ω·B(χ_{Ω^c}·B^{m−1}(χ_Ω·f)), with B⁰ = identity.
pub fn reflection_apply(
    m: i64,
    dom: &LipschitzDomain,
    f: &ComplexField,
) -> Result<ComplexField, OpsError> {
    if m < 1 {
        return Err(OpsError::BadOrder(m));
    }
    let mask = dom.sharp_mask(f.spec());
    let comask = mask.map(|v| Complex64::new(1.0 - v.re, 0.0));
    let inner = mask.mul(f);
    let mid = if m == 1 { inner } else { beurling_unchecked(&inner, m as i32 - 1) };
    let outer = beurling_unchecked(&comask.mul(&mid), 1);
    Ok(mask.mul(&outer))
}

/// Randomized estimate of the top-k singular values of the operator
/// restricted to Ω (masked on both sides), via a Gaussian range sketch
/// with power iterations and a small Gram eigenproblem.
pub fn smoothing_probe(
    op: &OperatorHandle,
    dom: &LipschitzDomain,
    spec: GridSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>, OpsError> {
    let mask = dom.sharp_mask(spec);
    let cells = mask.values().iter().filter(|v| v.re > 0.5).count();
    if k > cells {
        return Err(OpsError::RankTooLarge { k, cells });
    }
    let restricted_apply = |g: &ComplexField| -> Result<ComplexField, OpsError> {
        op.apply(&mask.mul(g)).map(|out| mask.mul(&out))
    };
    let restricted_adjoint = |g: &ComplexField| -> Result<ComplexField, OpsError> {
        op.apply_adjoint(&mask.mul(g)).map(|out| mask.mul(&out))
    };

    let oversample = 8.min(cells.saturating_sub(k));
    let width = k + oversample;
    let mut rng = crate::rng::stream(seed, "smoothing-probe");
    let mut block: Vec<ComplexField> = (0..width)
        .map(|_| {
            let values = (0..spec.num_cells())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            ComplexField::from_raw(spec, values)
        })
        .collect();

    // Two rounds of AᴴA power iteration sharpen the spectrum estimate.
    for _ in 0..2 {
        let mut next = Vec::with_capacity(width);
        for g in &block {
            next.push(restricted_adjoint(&restricted_apply(g)?)?);
        }
        block = orthonormalize(next);
    }
    let images: Vec<ComplexField> = block
        .iter()
        .map(|q| restricted_apply(q))
        .collect::<Result<_, _>>()?;

    // Singular values of A on span(block) = sqrt of the Gram spectrum of
    // the image block.
    let mut gram = nalgebra::DMatrix::<Complex64>::zeros(width, width);
    for i in 0..width {
        for j in 0..width {
            gram[(i, j)] = images[i].inner(&images[j]);
        }
    }
    let eig = gram.symmetric_eigen();
    let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv.truncate(k);
    Ok(sv)
}

fn orthonormalize(mut block: Vec<ComplexField>) -> Vec<ComplexField> {
    // Modified Gram-Schmidt in the grid inner product.
    for i in 0..block.len() {
        for j in 0..i {
            let c = block[i].inner(&block[j]);
            let proj = block[j].scale(c);
            block[i] = block[i].sub(&proj);
        }
        let norm = block[i].l2_norm();
        if norm > 1e-300 {
            block[i] = block[i].scale(Complex64::new(1.0 / norm, 0.0));
        }
    }
    block
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, BoundarySpec, CurveFamily};
    use crate::grid::{make_grid, sample, wirtinger};

    fn disk(radius: f64) -> LipschitzDomain {
        build_domain(&BoundarySpec::Parametric {
            curve: CurveFamily::Circle { center_re: 0.0, center_im: 0.0, radius },
            samples: 1 << 12,
        })
        .unwrap()
    }

    fn gaussian_bump(spec: GridSpec, sigma: f64) -> ComplexField {
        sample(|z| Complex64::new((-z.norm_sqr() / (sigma * sigma)).exp(), 0.0), spec).unwrap()
    }

    #[test]
    fn beurling_of_zero_is_zero() {
        let spec = make_grid(Complex64::default(), 4.0, 64).unwrap();
        let f = ComplexField::zeros(spec);
        assert_eq!(beurling(&f).sup_norm(), 0.0);
    }

    #[test]
    fn beurling_is_an_l2_isometry_modulo_mean() {
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let f = gaussian_bump(spec, 0.4);
        let mean = f.mean();
        let centered = f.map(|v| v - mean);
        let bf = beurling(&centered);
        assert!(
            (bf.l2_norm() - centered.l2_norm()).abs() < 1e-10 * centered.l2_norm(),
            "‖Bf‖ = {}, ‖f‖ = {}",
            bf.l2_norm(),
            centered.l2_norm()
        );
    }

    #[test]
    fn beurling_defining_identity() {
        // B(∂̄g) = ∂g for a smooth compactly supported bump.
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let g = gaussian_bump(spec, 0.35);
        let (dg, dbg) = wirtinger(&g);
        let b = beurling(&dbg);
        let defect = b.sub(&dg).l2_norm();
        assert!(defect < 1e-8, "defect {defect}");
    }

    #[test]
    fn beurling_single_mode_eigenfunction() {
        let spec = make_grid(Complex64::default(), 2.0, 64).unwrap();
        let period = spec.period();
        let kx = 2.0 * std::f64::consts::PI * 3.0 / period;
        let ky = 2.0 * std::f64::consts::PI * (-2.0) / period;
        let mode = sample(|z| (Complex64::i() * (kx * z.re + ky * z.im)).exp(), spec).unwrap();
        let sym = beurling_symbol(kx, ky);
        for m in 1..=4i64 {
            let got = beurling_power(&mode, m).unwrap();
            let want = mode.scale(sym.powi(m as i32));
            assert!(got.sub(&want).sup_norm() < 1e-10);
        }
        assert!((sym.norm() - 1.0).abs() < 1e-14, "symbol must be unimodular");
    }

    #[test]
    fn beurling_power_semigroup_and_m1() {
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let f = gaussian_bump(spec, 0.4);
        let b1 = beurling_power(&f, 1).unwrap();
        assert!(b1.sub(&beurling(&f)).sup_norm() == 0.0);
        let b3 = beurling_power(&f, 3).unwrap();
        let b2then1 = beurling_power(&beurling_power(&f, 2).unwrap(), 1).unwrap();
        assert!(b3.sub(&b2then1).l2_norm() < 1e-10);
        let iterated = beurling(&beurling(&beurling(&f)));
        assert!(b3.sub(&iterated).l2_norm() < 1e-10);
        assert!(matches!(beurling_power(&f, 0), Err(OpsError::BadOrder(0))));
    }

    #[test]
    fn beurling_disk_closed_form() {
        // Bχ_D ≈ 0 inside D and −1/z² in the far exterior.
        let spec = make_grid(Complex64::default(), 4.0, 1024).unwrap();
        let chi = sample(
            |z| if z.norm() < 1.0 { Complex64::new(1.0, 0.0) } else { Complex64::default() },
            spec,
        )
        .unwrap();
        let b = beurling(&chi);
        let mut err_in = 0.0f64;
        let mut norm_out = 0.0f64;
        let mut err_out = 0.0f64;
        for (j, k, z) in spec.iter_points() {
            let r = z.norm();
            if r < 0.8 {
                err_in = err_in.max(b.at(j, k).norm());
            } else if (1.2..2.0).contains(&r) {
                let target = -1.0 / (z * z);
                err_out += (b.at(j, k) - target).norm_sqr();
                norm_out += target.norm_sqr();
            }
        }
        assert!(err_in < 5e-2, "interior sup {err_in}");
        let rel = (err_out / norm_out).sqrt();
        assert!(rel < 5e-2, "exterior relative L² error {rel}");
    }

    #[test]
    fn cauchy_identities() {
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let f = gaussian_bump(spec, 0.4);
        let cf = cauchy(&f);
        let (d, dbar) = wirtinger(&cf);
        let mean = f.mean();
        let defect_dbar = dbar.sub(&f.map(|v| v - mean)).l2_norm();
        let defect_d = d.sub(&beurling(&f)).l2_norm();
        assert!(defect_dbar < 1e-10, "∂̄C defect {defect_dbar}");
        assert!(defect_d < 1e-10, "∂C defect {defect_d}");
        assert_eq!(cauchy(&ComplexField::zeros(spec)).sup_norm(), 0.0);
    }

    #[test]
    fn cauchy_compact_support_bound() {
        let spec = make_grid(Complex64::default(), 4.0, 512).unwrap();
        let chi = sample(
            |z| if z.norm() < 1.0 { Complex64::new(1.0, 0.0) } else { Complex64::default() },
            spec,
        )
        .unwrap();
        let cf = cauchy(&chi);
        let p = 4.0;
        let h2 = spec.spacing() * spec.spacing();
        let lp = |f: &ComplexField| {
            (f.values().iter().map(|v| v.norm().powf(p)).sum::<f64>() * h2).powf(1.0 / p)
        };
        let ratio = lp(&cf) / (2.0 * lp(&chi));
        assert!(ratio <= 10.0, "‖Cf‖₄/(diam·‖f‖₄) = {ratio}");
    }

    #[test]
    fn tgamma_pv_plain_integration() {
        // γ = (0,0): the operator is plain integration of f.
        let spec = make_grid(Complex64::default(), 2.0, 32).unwrap();
        let h = spec.spacing();
        let mut f = ComplexField::zeros(spec);
        let (j, k) = spec.nearest_cell(Complex64::new(0.25, 0.25));
        let idx = spec.index(j, k);
        f.values_mut()[idx] = Complex64::new(1.0, 0.0);
        let z = spec.point(5, 7);
        let got = tgamma_pv(KernelIndex::new(0, 0), &f, &[z]).unwrap()[0];
        assert!((got - Complex64::new(h * h, 0.0)).norm() < 1e-14);
        // Off-grid points are rejected.
        assert!(matches!(
            tgamma_pv(KernelIndex::new(0, 0), &f, &[z + Complex64::new(h / 3.0, 0.0)]),
            Err(OpsError::NotAGridPoint(_))
        ));
        assert!(matches!(
            tgamma_pv(KernelIndex::new(-2, -1), &f, &[z]),
            Err(OpsError::UnsupportedHomogeneity(-3))
        ));
    }

    #[test]
    fn tgamma_pv_disk_closed_form_outside() {
        // −(1/π)·T^{(−2,0)}χ_D(2) = −1/4.
        let spec = make_grid(Complex64::default(), 4.0, 512).unwrap();
        let chi = sample(
            |z| if z.norm() < 1.0 { Complex64::new(1.0, 0.0) } else { Complex64::default() },
            spec,
        )
        .unwrap();
        let z = {
            let (j, k) = spec.nearest_cell(Complex64::new(2.0, 0.0));
            spec.point(j, k)
        };
        let t = tgamma_pv(KernelIndex::new(-2, 0), &chi, &[z]).unwrap()[0];
        let b_val = t * (-1.0 / std::f64::consts::PI);
        let target = -1.0 / (z * z);
        assert!((b_val - target).norm() < 2e-2, "got {b_val}, want {target}");
    }

    #[test]
    fn tgamma_pv_matches_fft_beurling_on_smooth_field() {
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let f = gaussian_bump(spec, 0.45);
        let b = beurling(&f);
        let mut rng = crate::rng::stream(3, "tgamma-crosscheck");
        let mut pts = Vec::new();
        while pts.len() < 20 {
            let j = rng.random_range(0..spec.resolution);
            let k = rng.random_range(0..spec.resolution);
            let z = spec.point(j, k);
            if z.norm() < 0.8 {
                pts.push((j, k, z));
            }
        }
        let grid_pts: Vec<Complex64> = pts.iter().map(|&(_, _, z)| z).collect();
        let t = tgamma_pv(KernelIndex::new(-2, 0), &f, &grid_pts).unwrap();
        let mut worst = 0.0f64;
        for (i, &(j, k, _)) in pts.iter().enumerate() {
            let oracle = t[i] * (-1.0 / std::f64::consts::PI);
            let rel = (oracle - b.at(j, k)).norm() / b.at(j, k).norm().max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst <= 3e-2, "max relative mismatch {worst}");
    }

    #[test]
    fn localize_masks_both_sides() {
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let dom = disk(0.8);
        let f = gaussian_bump(spec, 0.5);
        let ident = OperatorHandle::Composition(vec![]);
        let loc = OperatorHandle::localize(ident, &dom, &spec).unwrap();
        let got = loc.apply(&f).unwrap();
        let want = dom.sharp_mask(spec).mul(&f);
        assert!(got.sub(&want).sup_norm() < 1e-14);
        // A domain outside the safe region is rejected.
        let big = disk(1.5);
        assert!(matches!(
            OperatorHandle::localize(OperatorHandle::Cauchy, &big, &spec),
            Err(OpsError::DomainOutsideSafeRegion)
        ));
    }

    #[test]
    fn localization_breaks_the_semigroup() {
        // ‖((B²)_Ω − (B_Ω)²)χ_Ω‖ is strictly positive.
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let dom = build_domain(&BoundarySpec::Polyline {
            vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]],
        })
        .unwrap();
        let mask = dom.sharp_mask(spec);
        let b2_loc = mask.mul(&beurling_power(&mask, 2).unwrap());
        let b_loc = |g: &ComplexField| mask.mul(&beurling(&mask.mul(g)));
        let b_loc_sq = b_loc(&b_loc(&mask));
        let gap = b2_loc.sub(&b_loc_sq).l2_norm();
        assert!(gap > 1e-3, "localization gap {gap} should be strictly positive");
    }

    #[test]
    fn commutator_with_constant_vanishes() {
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let dom = disk(0.8);
        let f = gaussian_bump(spec, 0.5);
        let mu = sample(|_| Complex64::new(0.7, 0.2), spec).unwrap();
        let c = commutator_apply(&mu, &dom, &f).unwrap();
        assert!(c.sup_norm() < 1e-12, "constant commutator {}", c.sup_norm());
        let zero = commutator_apply(&mu, &dom, &ComplexField::zeros(spec)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn commutator_smooth_factorization() {
        // [μ, B]g = B(∂̄μ·Cg) − ∂μ·Cg for smooth μ. On the torus the
        // zero mode of g contributes an exact extra term −mean(g)·Bμ
        // (∂̄C inverts only the mean-free part), so the discrete identity
        // carries that correction.
        let spec = make_grid(Complex64::default(), 4.0, 512).unwrap();
        let dom = disk(0.8);
        let mu = gaussian_bump(spec, 0.5);
        let commutator_defect = |g: &ComplexField| -> f64 {
            let lhs = mu.mul(&beurling(g)).sub(&beurling(&mu.mul(g)));
            let cg = cauchy(g);
            let (dmu, dbmu) = wirtinger(&mu);
            let rhs = beurling(&dbmu.mul(&cg)).sub(&dmu.mul(&cg));
            let correction = beurling(&mu).scale(g.mean());
            lhs.sub(&rhs).add(&correction).l2_norm()
        };
        // Rough masked bump, mean far from zero.
        let g = dom.sharp_mask(spec).mul(&gaussian_bump(spec, 0.6));
        let defect = commutator_defect(&g);
        assert!(defect <= 1e-3, "masked-bump commutator defect {defect}");
        // Mean-free smooth input: the correction term vanishes and the
        // plain identity holds directly.
        let (_, g0) = wirtinger(&gaussian_bump(spec, 0.5));
        assert!(g0.mean().norm() < 1e-14);
        let defect = commutator_defect(&g0);
        assert!(defect <= 1e-4, "mean-free commutator defect {defect}");
    }

    #[test]
    fn commutator_is_bilinear_in_mu() {
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let dom = disk(0.8);
        let mu1 = gaussian_bump(spec, 0.4);
        let mu2 = gaussian_bump(spec, 0.6).scale(Complex64::new(0.0, 1.0));
        let f = gaussian_bump(spec, 0.5);
        let a = Complex64::new(1.3, -0.2);
        let sum = mu1.scale(a).add(&mu2);
        let lhs = commutator_apply(&sum, &dom, &f).unwrap();
        let rhs = commutator_apply(&mu1, &dom, &f)
            .unwrap()
            .scale(a)
            .add(&commutator_apply(&mu2, &dom, &f).unwrap());
        assert!(lhs.sub(&rhs).l2_norm() < 1e-10);
    }

    #[test]
    fn reflection_basic_cases() {
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let dom = disk(0.8);
        assert!(reflection_apply(0, &dom, &ComplexField::zeros(spec)).is_err());
        let zero = reflection_apply(2, &dom, &ComplexField::zeros(spec)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        // m = 1 on χ_Ω: the inner χ_{Ω^c}·χ_Ω pair annihilates, matching
        // the closed form Bχ_{Ω^c} = −Bχ_Ω = 0 inside a disk.
        let mask = dom.sharp_mask(spec);
        let r1 = reflection_apply(1, &dom, &mask).unwrap();
        let mut sup = 0.0f64;
        for (j, k, z) in spec.iter_points() {
            if z.norm() <= 0.7 * 0.8 {
                sup = sup.max(r1.at(j, k).norm());
            }
        }
        assert!(sup <= 5e-2, "R₁χ_Ω interior sup {sup}");
    }

    #[test]
    fn reflection_recursion_identity() {
        // (B^m)_Ω − (B_Ω)^m = R_m + B_Ω·((B^{m−1})_Ω − (B_Ω)^{m−1}).
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let dom = disk(0.8);
        let f = gaussian_bump(spec, 0.7);
        let mask = dom.sharp_mask(spec);
        let b_loc = |g: &ComplexField| mask.mul(&beurling(&mask.mul(g)));
        let a2 = |m: i64, g: &ComplexField| -> ComplexField {
            let full = mask.mul(&beurling_power(&mask.mul(g), m).unwrap());
            let mut loc = g.clone();
            for _ in 0..m {
                loc = b_loc(&loc);
            }
            full.sub(&loc)
        };
        for m in 2..=4i64 {
            let lhs = a2(m, &f);
            let rhs = reflection_apply(m, &dom, &f).unwrap().add(&b_loc(&a2(m - 1, &f)));
            let defect = lhs.sub(&rhs).l2_norm();
            assert!(defect <= 1e-8, "m={m}: recursion defect {defect}");
        }
    }

    #[test]
    fn smoothing_probe_identity_and_zero() {
        let spec = make_grid(Complex64::default(), 2.0, 64).unwrap();
        let dom = disk(0.4);
        let ident = OperatorHandle::Composition(vec![]);
        let sv = smoothing_probe(&ident, &dom, spec, 4, 17).unwrap();
        for s in &sv {
            assert!((s - 1.0).abs() <= 1e-6, "identity σ = {s}");
        }
        // Commutator with a constant μ is the zero operator.
        let mu = sample(|_| Complex64::new(0.5, 0.0), spec).unwrap();
        let zero_op = OperatorHandle::Commutator(&mu, &dom);
        let sv = smoothing_probe(&zero_op, &dom, spec, 4, 17).unwrap();
        for s in &sv {
            assert!(*s < 1e-10, "zero operator σ = {s}");
        }
        assert!(matches!(
            smoothing_probe(&ident, &dom, spec, 1 << 20, 17),
            Err(OpsError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn smoothing_probe_commutator_decays() {
        let spec = make_grid(Complex64::default(), 2.0, 64).unwrap();
        let dom = disk(0.4);
        let mu = gaussian_bump(spec, 0.3).scale(Complex64::new(0.5, 0.0));
        let op = OperatorHandle::Commutator(&mu, &dom);
        let sv = smoothing_probe(&op, &dom, spec, 8, 23).unwrap();
        assert!(sv[0] > 0.0);
        assert!(sv[7] < sv[0], "spectrum should decay: {sv:?}");
    }

    #[test]
    fn operator_spec_roundtrip() {
        let spec = OperatorSpec::Localized {
            inner: Box::new(OperatorSpec::BeurlingPower { m: 3 }),
            domain: "disk".into(),
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: OperatorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        assert!(json.contains("\"kind\""));
    }
}
