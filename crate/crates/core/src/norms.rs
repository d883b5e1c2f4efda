//! Discrete Sobolev, Hölder, and boundary Besov estimation, the
//! moment-matching approximating polynomials on cubes, and ratio probes
//! for the Poincaré and multiplicative-algebra inequalities.
//!
//! Derivatives are centered finite differences. Cells within (n+1)·h of
//! the boundary are excluded from n-th gradient sums (no one-sided
//! stencils); the excluded collar is measured and the gradient term is
//! rescaled by (|Ω|/|interior|)^{1/p} so norms stay comparable across
//! resolutions. Raw and compensated values are both reported.

use crate::geometry::{LipschitzDomain, NormalField, Square};
use crate::grid::{ComplexField, GridSpec};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no admissible interior cells: domain thinner than the difference stencil")]
    UndefinedNorm,
    #[error("cube holds {got} cells, need at least {need} for a degree-{degree} fit")]
    CubeTooSmall { got: usize, need: usize, degree: usize },
    #[error("integer smoothness s = {0} is outside the difference-seminorm range")]
    IntegerOrder(f64),
}

/// Smoothness order n and integrability p of a Sobolev space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevParams {
    pub n: usize,
    pub p: f64,
}

impl SobolevParams {
    pub fn new(n: usize, p: f64) -> Result<Self, NormError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(NormError::InvalidParameter(format!("p = {p} must be in (1, ∞)")));
        }
        Ok(Self { n, p })
    }

    /// Multiplicative-algebra hypothesis n·p > 2.
    pub fn is_algebra(&self) -> bool {
        self.n as f64 * self.p > 2.0
    }
}

/// Either a measurement over a domain or over the whole grid box.
#[derive(Clone, Copy)]
pub enum Region<'a> {
    WholeGrid,
    Domain(&'a LipschitzDomain),
}

impl Region<'_> {
    fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::WholeGrid => true,
            Region::Domain(d) => d.contains(z),
        }
    }
}

/// Discrete L^p norm (Σ |f|^p h²)^{1/p} over a region; sup norm for
/// p = ∞ (pass `f64::INFINITY`).
pub fn lp_norm(f: &ComplexField, region: Region, p: f64) -> Result<f64, NormError> {
    if !(p >= 1.0) {
        return Err(NormError::InvalidParameter(format!("p = {p} must be ≥ 1")));
    }
    let spec = f.spec();
    let h2 = spec.spacing() * spec.spacing();
    if p.is_infinite() {
        let mut sup = 0.0f64;
        for (j, k, z) in spec.iter_points() {
            if region.contains(z) {
                sup = sup.max(f.at(j, k).norm());
            }
        }
        return Ok(sup);
    }
    let mut acc = 0.0;
    for (j, k, z) in spec.iter_points() {
        if region.contains(z) {
            acc += f.at(j, k).norm().powf(p);
        }
    }
    Ok((acc * h2).powf(1.0 / p))
}

/// Centered-difference partial derivative field ∂_x^{a}∂_y^{b} f.
///
/// Valid at cells at least a+b cells from the grid edge; other cells
/// hold garbage and must be masked by the caller's admissibility test.
pub(crate) fn fd_derivative(f: &ComplexField, a: usize, b: usize) -> ComplexField {
    let spec = f.spec();
    let n = spec.resolution;
    let h = spec.spacing();
    let mut cur = f.values().to_vec();
    let mut next = vec![Complex64::default(); n * n];
    for _ in 0..a {
        for j in 0..n {
            for k in 0..n {
                let jm = if j == 0 { 0 } else { j - 1 };
                let jp = if j == n - 1 { n - 1 } else { j + 1 };
                next[j * n + k] = (cur[jp * n + k] - cur[jm * n + k]) / (2.0 * h);
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    for _ in 0..b {
        for j in 0..n {
            for k in 0..n {
                let km = if k == 0 { 0 } else { k - 1 };
                let kp = if k == n - 1 { n - 1 } else { k + 1 };
                next[j * n + k] = (cur[j * n + kp] - cur[j * n + km]) / (2.0 * h);
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    ComplexField::from_raw(spec, cur)
}

/// Breakdown of a Sobolev norm measurement.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevNorm {
    /// ‖f‖_{L^p(Ω)} + compensated gradient term.
    pub norm: f64,
    pub lp_term: f64,
    /// ‖∇ⁿf‖_{L^p} over the admissible interior, rescaled by
    /// (|Ω|/|interior|)^{1/p}.
    pub grad_term: f64,
    /// Same without the rescaling.
    pub grad_term_raw: f64,
    /// Variant equivalent norm ‖f‖_p + ‖∂_xⁿf‖_p + ‖∂_yⁿf‖_p
    /// (compensated the same way).
    pub variant: f64,
    /// Measure of the collar excluded from derivative sums.
    pub collar_measure: f64,
    pub interior_measure: f64,
    pub domain_measure: f64,
}

/// Sobolev norm ‖f‖_{L^p(Ω)} + ‖∇ⁿf‖_{L^p(Ω)} with |∇ⁿf| = Σ_{|α|=n}|D^α f|.
pub fn sobolev_norm(
    f: &ComplexField,
    dom: &LipschitzDomain,
    prm: SobolevParams,
) -> Result<SobolevNorm, NormError> {
    let spec = f.spec();
    let h = spec.spacing();
    let h2 = h * h;
    let margin = (prm.n + 1) as f64 * h;

    let mut lp_acc = 0.0;
    let mut dom_cells = 0usize;
    let mut interior = vec![false; spec.num_cells()];
    let mut interior_cells = 0usize;
    for (j, k, z) in spec.iter_points() {
        if dom.contains(z) {
            dom_cells += 1;
            lp_acc += f.at(j, k).norm().powf(prm.p);
            // Cheap bound first; the exact distance only near the collar.
            let admissible = dom.distance_lower_bound(z) > 1.5 * margin
                || dom.boundary_distance(z) > margin;
            if admissible {
                interior[spec.index(j, k)] = true;
                interior_cells += 1;
            }
        }
    }
    if dom_cells == 0 || (prm.n > 0 && interior_cells == 0) {
        return Err(NormError::UndefinedNorm);
    }
    let lp_term = (lp_acc * h2).powf(1.0 / prm.p);
    if prm.n == 0 {
        return Ok(SobolevNorm {
            norm: 2.0 * lp_term,
            lp_term,
            grad_term: lp_term,
            grad_term_raw: lp_term,
            variant: 2.0 * lp_term,
            collar_measure: 0.0,
            interior_measure: dom_cells as f64 * h2,
            domain_measure: dom_cells as f64 * h2,
        });
    }

    // All order-n partials once; |∇ⁿf| = Σ_{a+b=n} |∂_x^a ∂_y^b f|.
    let partials: Vec<ComplexField> =
        (0..=prm.n).map(|a| fd_derivative(f, a, prm.n - a)).collect();
    let mut grad_acc = 0.0;
    let mut variant_acc_x = 0.0;
    let mut variant_acc_y = 0.0;
    for idx in 0..spec.num_cells() {
        if !interior[idx] {
            continue;
        }
        let mut g = 0.0;
        for p in &partials {
            g += p.values()[idx].norm();
        }
        grad_acc += g.powf(prm.p);
        variant_acc_x += partials[prm.n].values()[idx].norm().powf(prm.p);
        variant_acc_y += partials[0].values()[idx].norm().powf(prm.p);
    }
    let domain_measure = dom_cells as f64 * h2;
    let interior_measure = interior_cells as f64 * h2;
    let compensate = (domain_measure / interior_measure).powf(1.0 / prm.p);
    let grad_term_raw = (grad_acc * h2).powf(1.0 / prm.p);
    let grad_term = grad_term_raw * compensate;
    let variant = lp_term
        + ((variant_acc_x * h2).powf(1.0 / prm.p) + (variant_acc_y * h2).powf(1.0 / prm.p))
            * compensate;
    Ok(SobolevNorm {
        norm: lp_term + grad_term,
        lp_term,
        grad_term,
        grad_term_raw,
        variant,
        collar_measure: domain_measure - interior_measure,
        interior_measure,
        domain_measure,
    })
}

/// Hölder norm ‖f‖_∞ + sup |f(x)−f(y)|/|x−y|^s over cell pairs in the
/// domain: exhaustive when the domain holds at most `EXHAUSTIVE_CELLS`
/// cells, otherwise 10⁵ seeded random pairs.
pub fn holder_norm(
    f: &ComplexField,
    dom: &LipschitzDomain,
    s: f64,
    seed: u64,
) -> Result<f64, NormError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(NormError::InvalidParameter(format!("s = {s} must be in (0, 1]")));
    }
    const EXHAUSTIVE_CELLS: usize = 100;
    let spec = f.spec();
    let cells: Vec<(usize, Complex64)> = spec
        .iter_points()
        .filter_map(|(j, k, z)| dom.contains(z).then(|| (spec.index(j, k), z)))
        .collect();
    if cells.is_empty() {
        return Err(NormError::UndefinedNorm);
    }
    let sup = cells.iter().map(|&(i, _)| f.values()[i].norm()).fold(0.0, f64::max);
    let semi = if cells.len() <= EXHAUSTIVE_CELLS * EXHAUSTIVE_CELLS {
        let mut best = 0.0f64;
        for a in 0..cells.len() {
            for b in a + 1..cells.len() {
                let (ia, za) = cells[a];
                let (ib, zb) = cells[b];
                let d = (za - zb).norm();
                best = best.max((f.values()[ia] - f.values()[ib]).norm() / d.powf(s));
            }
        }
        best
    } else {
        let mut rng = crate::rng::stream(seed, "holder-pairs");
        let mut best = 0.0f64;
        for _ in 0..100_000 {
            let a = rng.random_range(0..cells.len());
            let b = rng.random_range(0..cells.len());
            if a == b {
                continue;
            }
            let (ia, za) = cells[a];
            let (ib, zb) = cells[b];
            let d = (za - zb).norm();
            best = best.max((f.values()[ia] - f.values()[ib]).norm() / d.powf(s));
        }
        // Axis-aligned nearest pairs carry the Lipschitz extremes; always
        // include both directions so s = 1 is not under-sampled.
        let n = spec.resolution;
        let h = spec.spacing();
        let hs = h.powf(s);
        for &(ia, za) in &cells {
            for ib in [ia + 1, ia + n] {
                if ib < spec.num_cells() {
                    let zb = spec.point(ib / n, ib % n);
                    if (zb - za).norm() < 1.5 * h && dom.contains(zb) {
                        best = best.max((f.values()[ia] - f.values()[ib]).norm() / hs);
                    }
                }
            }
        }
        best
    };
    Ok(sup + semi)
}

/// Boundary Besov seminorm of a normal field through the order-M
/// difference quotient, M = ⌊s⌋+1:
/// (ΣΣ |Δ_h^M g(t)|^p / h^{1+sp} · Δh·Δt)^{1/p} over h ∈ [2δ, T/2].
///
/// Integer s is rejected: the difference seminorm is only equivalent to
/// the scale-decomposition norm for fractional orders.
pub fn besov_boundary_seminorm(nf: &NormalField, s: f64, p: f64) -> Result<f64, NormError> {
    if s <= 0.0 || (s - s.round()).abs() < 1e-12 {
        return Err(NormError::IntegerOrder(s));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(NormError::InvalidParameter(format!("p = {p} must be in [1, ∞)")));
    }
    let m_order = s.floor() as usize + 1;
    let g = &nf.normals;
    let n = g.len();
    let delta = nf.spacing;
    let hmax = (nf.length / 2.0 / delta).floor() as usize;
    let mut acc = 0.0;
    for steps in 2..=hmax {
        let h = steps as f64 * delta;
        let mut t_acc = 0.0;
        for t in 0..n {
            // Δ_h^M g(t) = Σ (−1)^{M−i} C(M,i) g(t + i·h)
            let mut diff = Complex64::default();
            let mut coeff = 1.0f64;
            for i in 0..=m_order {
                let sign = if (m_order - i) % 2 == 0 { 1.0 } else { -1.0 };
                diff += sign * coeff * g[(t + i * steps) % n];
                coeff = coeff * (m_order - i) as f64 / (i + 1) as f64;
            }
            t_acc += diff.norm().powf(p);
        }
        acc += t_acc * delta / h.powf(1.0 + s * p) * delta;
    }
    Ok(acc.powf(1.0 / p))
}

/// Approximating polynomial on a cube in Taylor-at-center form
/// Σ m_γ·(z−z_Q)^{γ₁}·(z̄−z̄_Q)^{γ₂}, degree ≤ n−1, matching the
/// discrete means of every Wirtinger derivative of order < n over Q.
#[derive(Debug, Clone)]
pub struct ApproxPolynomial {
    pub center: Complex64,
    pub degree: usize,
    /// Coefficients indexed by the multiindex list of `multiindices(degree)`.
    pub coeffs: Vec<Complex64>,
}

/// Multiindices (γ₁, γ₂) with γ₁+γ₂ ≤ deg, graded lexicographic.
pub fn multiindices(deg: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 0..=deg {
        for g1 in (0..=total).rev() {
            out.push((g1, total - g1));
        }
    }
    out
}

impl ApproxPolynomial {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let u = z - self.center;
        multiindices(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(&(a, b), &c)| c * u.powi(a as i32) * u.conj().powi(b as i32))
            .sum()
    }

    /// Samples the polynomial on a grid.
    pub fn sample(&self, spec: GridSpec) -> ComplexField {
        crate::grid::sample(|z| self.eval(z), spec).expect("polynomial is finite")
    }
}

/// Wirtinger pair (∂, ∂̄) from the real partial stencils.
fn wirtinger_pair(f: &ComplexField, order_d: usize, order_db: usize) -> ComplexField {
    // ∂^a ∂̄^b as a linear combination of ∂_x^i ∂_y^j with binomial
    // weights: ∂ = (∂_x − i∂_y)/2, ∂̄ = (∂_x + i∂_y)/2.
    let total = order_d + order_db;
    let spec = f.spec();
    let mut acc = ComplexField::zeros(spec);
    for i in 0..=order_d {
        for j in 0..=order_db {
            // Choose i x-derivatives in ∂^a and j in ∂̄^b.
            let cx = binom(order_d, i) * binom(order_db, j);
            let ys = (order_d - i) + (order_db - j);
            let xs = i + j;
            debug_assert_eq!(xs + ys, total);
            let phase = Complex64::new(0.0, -1.0).powi((order_d - i) as i32)
                * Complex64::new(0.0, 1.0).powi((order_db - j) as i32);
            let w = phase * cx / 2f64.powi(total as i32);
            let d = fd_derivative(f, xs, ys);
            acc = acc.add(&d.scale(w));
        }
    }
    acc
}

fn binom(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Fits the approximating polynomial of degree n−1 on cube `q` by
/// matching discrete derivative means; the same centered stencils are
/// applied to the basis monomials, making the fit an exact projection.
pub fn approx_poly(
    f: &ComplexField,
    q: &Square,
    n: usize,
) -> Result<ApproxPolynomial, NormError> {
    if n == 0 {
        return Err(NormError::InvalidParameter("n must be ≥ 1".into()));
    }
    let degree = n - 1;
    let spec = f.spec();
    let cells: Vec<usize> = spec
        .iter_points()
        .filter_map(|(j, k, z)| q.contains_point(z).then(|| spec.index(j, k)))
        .collect();
    let need = (n + 1) * (n + 1);
    if cells.len() < need {
        return Err(NormError::CubeTooSmall { got: cells.len(), need, degree });
    }
    let idxs = multiindices(degree);
    let dim = idxs.len();
    let center = q.center();

    // Column = discrete derivative means of one basis monomial.
    let mut a = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(dim);
    let mean_over = |g: &ComplexField| -> Vec<Complex64> {
        idxs.iter()
            .map(|&(da, db)| {
                let dg = wirtinger_pair(g, da, db);
                cells.iter().map(|&i| dg.values()[i]).sum::<Complex64>() / cells.len() as f64
            })
            .collect()
    };
    for (col, &(g1, g2)) in idxs.iter().enumerate() {
        let mono = crate::grid::sample(
            |z| {
                let u = z - center;
                u.powi(g1 as i32) * u.conj().powi(g2 as i32)
            },
            spec,
        )
        .expect("monomial is finite");
        for (row, v) in mean_over(&mono).into_iter().enumerate() {
            a[(row, col)] = v;
        }
    }
    for (row, v) in mean_over(f).into_iter().enumerate() {
        rhs[row] = v;
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| NormError::InvalidParameter(format!("moment system: {e}")))?;
    Ok(ApproxPolynomial { center, degree, coeffs: sol.iter().copied().collect() })
}

/// Outcome of a Poincaré ratio measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoincareRatio {
    /// Numerator and denominator both vanish (f was a polynomial).
    Exact,
    Value(f64),
}

/// Ratio ‖∇^j((f − P)φ)‖_{L^p(3Q)} / (ℓ(Q)^{n−j}·‖∇ⁿf‖_{L^p(3Q)}) where P
/// is the approximating polynomial on 3Q and φ an internal bump that is
/// 1 on 3Q/2 and vanishes outside 2Q.
pub fn poincare_ratio(
    f: &ComplexField,
    q: &Square,
    n: usize,
    j: usize,
    p: f64,
) -> Result<PoincareRatio, NormError> {
    if j > n {
        return Err(NormError::InvalidParameter(format!("need j ≤ n, got j={j} n={n}")));
    }
    let spec = f.spec();
    let h2 = spec.spacing() * spec.spacing();
    let q3 = q.dilate(3.0);
    let poly = approx_poly(f, &q3, n)?;
    let bump = bump_on(q, spec);
    let diff = f.sub(&poly.sample(spec)).mul(&bump);

    let cells: Vec<usize> = spec
        .iter_points()
        .filter_map(|(jj, kk, z)| q3.contains_point(z).then(|| spec.index(jj, kk)))
        .collect();
    let grad_p = |g: &ComplexField, order: usize| -> f64 {
        if order == 0 {
            let acc: f64 = cells.iter().map(|&i| g.values()[i].norm().powf(p)).sum();
            return (acc * h2).powf(1.0 / p);
        }
        let parts: Vec<ComplexField> =
            (0..=order).map(|a| fd_derivative(g, a, order - a)).collect();
        let acc: f64 = cells
            .iter()
            .map(|&i| parts.iter().map(|d| d.values()[i].norm()).sum::<f64>().powf(p))
            .sum();
        (acc * h2).powf(1.0 / p)
    };

    let numer = grad_p(&diff, j);
    let denom = q.side.powi((n - j) as i32) * grad_p(f, n);
    let scale = grad_p(f, 0).max(1e-300);
    if denom <= 1e-10 * scale {
        if numer <= 1e-8 * scale {
            return Ok(PoincareRatio::Exact);
        }
        return Ok(PoincareRatio::Value(f64::INFINITY));
    }
    Ok(PoincareRatio::Value(numer / denom))
}

/// Smooth bump: 1 on 1.5·Q, 0 outside 2·Q, C^∞ smoothstep between, with
/// |∇^i φ| ≲ ℓ(Q)^{−i}.
fn bump_on(q: &Square, spec: GridSpec) -> ComplexField {
    let c = q.center();
    let half = q.side / 2.0;
    let ramp = |u: f64| -> f64 {
        // u ≤ 1.5 → 1, u ≥ 2 → 0 in units of the half-side.
        let t = ((2.0 - u) / 0.5).clamp(0.0, 1.0);
        if t == 0.0 || t == 1.0 {
            return t;
        }
        let e = |x: f64| (-1.0 / x).exp();
        e(t) / (e(t) + e(1.0 - t))
    };
    crate::grid::sample(
        |z| {
            let u = ((z.re - c.re).abs() / half).max((z.im - c.im).abs() / half);
            Complex64::new(ramp(u), 0.0)
        },
        spec,
    )
    .expect("bump is finite")
}

/// Multiplicative-algebra ratio ‖f·g‖_{W^{n,p}} / (‖f‖·‖g‖).
pub fn algebra_ratio(
    f: &ComplexField,
    g: &ComplexField,
    dom: &LipschitzDomain,
    prm: SobolevParams,
) -> Result<f64, NormError> {
    if !prm.is_algebra() {
        return Err(NormError::InvalidParameter(format!(
            "algebra hypothesis n·p > 2 fails (n={}, p={})",
            prm.n, prm.p
        )));
    }
    let nf = sobolev_norm(f, dom, prm)?.norm;
    let ng = sobolev_norm(g, dom, prm)?.norm;
    let nfg = sobolev_norm(&f.mul(g), dom, prm)?.norm;
    Ok(nfg / (nf * ng))
}

/// Power-form ratio ‖f^m‖_{W^{n,p}} / (mⁿ·‖f‖_∞^{m−n}·‖f‖_{W^{n,p}}ⁿ),
/// for m ≥ n and p > 2.
pub fn algebra_power_ratio(
    f: &ComplexField,
    m: usize,
    dom: &LipschitzDomain,
    prm: SobolevParams,
) -> Result<f64, NormError> {
    if !prm.is_algebra() || prm.p <= 2.0 {
        return Err(NormError::InvalidParameter(format!(
            "power bound needs n·p > 2 and p > 2 (n={}, p={})",
            prm.n, prm.p
        )));
    }
    if m < prm.n {
        return Err(NormError::InvalidParameter(format!("need m ≥ n, got m={m} n={}", prm.n)));
    }
    let mut fm = f.clone();
    for _ in 1..m {
        fm = fm.mul(f);
    }
    let sup = lp_norm(f, Region::Domain(dom), f64::INFINITY)?;
    let base = sobolev_norm(f, dom, prm)?.norm;
    let numer = sobolev_norm(&fm, dom, prm)?.norm;
    let denom = (m as f64).powi(prm.n as i32) * sup.powi((m - prm.n) as i32)
        * base.powi(prm.n as i32);
    Ok(numer / denom)
}
