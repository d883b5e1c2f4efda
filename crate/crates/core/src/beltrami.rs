//! Neumann-series solution of the Beltrami equation ∂̄f = μ∂f and the
//! principal solution f = Ch + z, together with the partial-sum and
//! factorization operator identities and the contraction estimates that
//! make the series converge.
//!
//! The solver iterates h ← μ·B(h) + μ, which sums h = Σ (μB)^k μ without
//! storing powers; convergence is decided on the residual of the
//! defining equation (I − μB)h = μ. The stored derivative fields of a
//! principal solution are the analytic ones (∂̄f = h, ∂f = Bh + 1);
//! re-differentiating the sampled f spectrally reproduces them up to the
//! grid mean of h, which the torus model cannot represent.

use crate::geometry::LipschitzDomain;
use crate::grid::{sample, ComplexField, GridSpec};
use crate::norms::{sobolev_norm, SobolevParams};
use crate::singular_ops::{beurling, beurling_power, cauchy};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeltramiError {
    #[error("‖μ‖_∞ = {0} ≥ 1: the Neumann series cannot contract")]
    NotContractive(f64),
    #[error("μ has {0:.3e} of its mass outside the domain closure")]
    SupportLeak(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("need at least {need} resolutions, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error(transparent)]
    Norm(#[from] crate::norms::NormError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// A Beltrami problem: coefficient μ supported in Ω̄ with ‖μ‖_∞ < 1.
pub struct BeltramiProblem<'a> {
    pub mu: ComplexField,
    pub dom: &'a LipschitzDomain,
    /// ‖μ‖_∞ over the grid.
    pub k: f64,
    pub params: SobolevParams,
}

impl<'a> BeltramiProblem<'a> {
    pub fn new(
        mu: ComplexField,
        dom: &'a LipschitzDomain,
        params: SobolevParams,
    ) -> Result<Self, BeltramiError> {
        let k = mu.sup_norm();
        if k >= 1.0 {
            return Err(BeltramiError::NotContractive(k));
        }
        // Support check: allow a one-cell halo around Ω for mollified
        // coefficients sampled at cell centers.
        let spec = mu.spec();
        let halo = 2.0 * spec.spacing();
        let mut outside = 0.0;
        let mut total = 0.0;
        for (j, kk, z) in spec.iter_points() {
            let m = mu.at(j, kk).norm();
            total += m;
            if m > 0.0 && !dom.contains(z) && dom.boundary_distance(z) > halo {
                outside += m;
            }
        }
        if total > 0.0 && outside / total > 1e-9 {
            return Err(BeltramiError::SupportLeak(outside / total));
        }
        Ok(Self { mu, dom, k, params })
    }

    /// Distortion K = (1 + ‖μ‖_∞)/(1 − ‖μ‖_∞).
    pub fn distortion(&self) -> f64 {
        (1.0 + self.k) / (1.0 - self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

/// Per-iteration record of the Neumann series.
#[derive(Debug, Clone, Serialize)]
pub struct NeumannTrace {
    /// ‖(μB)^k μ‖_{L²} for k = 0, 1, …
    pub increment_norms: Vec<f64>,
    /// ‖(I − μB)h_k − μ‖_{L²} after each iteration.
    pub residual_norms: Vec<f64>,
    pub status: SolveStatus,
}

impl NeumannTrace {
    /// Worst increment ratio after the burn-in prefix.
    pub fn tail_ratio(&self, burn_in: usize) -> f64 {
        let inc = &self.increment_norms;
        let mut worst = 0.0f64;
        for i in burn_in.max(1)..inc.len() {
            if inc[i - 1] > 0.0 {
                worst = worst.max(inc[i] / inc[i - 1]);
            }
        }
        worst
    }
}

/// Sums the Neumann series until ‖(I − μB)h − μ‖_{L²} ≤ tol or kmax
/// iterations elapse (with a warning status).
pub fn neumann_solve(
    prob: &BeltramiProblem,
    tol: f64,
    kmax: usize,
) -> Result<(ComplexField, NeumannTrace), BeltramiError> {
    let mu = &prob.mu;
    let mut h = mu.clone();
    let mut increment_norms = vec![mu.l2_norm()];
    let mut residual_norms = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    for _ in 0..kmax {
        let next = mu.mul(&beurling(&h)).add(mu);
        let residual = next.sub(&h);
        let rnorm = residual.l2_norm();
        residual_norms.push(rnorm);
        increment_norms.push(rnorm);
        h = next;
        if rnorm <= tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    if status == SolveStatus::MaxIterations {
        log::warn!(
            "neumann_solve: residual {:.3e} > tol {tol:.3e} after {kmax} iterations",
            residual_norms.last().copied().unwrap_or(f64::NAN)
        );
    }
    // The last recorded increment equals the final residual, so trim it
    // to keep the two series aligned.
    increment_norms.pop();
    Ok((h, NeumannTrace { increment_norms, residual_norms, status }))
}

/// The principal solution assembled from a Neumann solution h.
#[derive(Debug, Clone)]
pub struct PrincipalSolution {
    pub h: ComplexField,
    /// f = Ch + z sampled on the grid.
    pub f: ComplexField,
    /// ∂̄f = h (analytic identity).
    pub dbar_f: ComplexField,
    /// ∂f = Bh + 1 (analytic identity).
    pub d_f: ComplexField,
    pub trace: NeumannTrace,
    /// ‖∂̄f − μ·∂f‖_{L²} over the grid.
    pub beltrami_residual: f64,
}

/// Builds f = Ch + z and its derivative fields, and reports the
/// Beltrami residual.
pub fn principal_solution(
    prob: &BeltramiProblem,
    h: ComplexField,
    trace: NeumannTrace,
) -> Result<PrincipalSolution, BeltramiError> {
    if h.spec() != prob.mu.spec() {
        return Err(BeltramiError::GridMismatch);
    }
    let spec = h.spec();
    let ch = cauchy(&h);
    let ident = sample(|z| z, spec)?;
    let f = ch.add(&ident);
    let one = sample(|_| Complex64::new(1.0, 0.0), spec)?;
    let d_f = beurling(&h).add(&one);
    let residual = h.sub(&prob.mu.mul(&d_f)).l2_norm();
    Ok(PrincipalSolution { dbar_f: h.clone(), h, f, d_f, trace, beltrami_residual: residual })
}

impl PrincipalSolution {
    /// Sup of |f − z| over cells at distance ≥ `margin` from the box
    /// center, a qualitative check of the far-field normalization (the
    /// torus distorts the true 1/z decay).
    pub fn far_field_deviation(&self, margin: f64) -> f64 {
        let spec = self.f.spec();
        let mut sup = 0.0f64;
        for (j, k, z) in spec.iter_points() {
            if (z - spec.center).norm() >= margin {
                sup = sup.max((self.f.at(j, k) - z).norm());
            }
        }
        sup
    }

    /// Largest |∂̄f|/|∂f| over cells where |∂f| exceeds the floor; for a
    /// valid solution this stays below ‖μ‖_∞ plus solver slack.
    pub fn quasiregularity_ratio(&self, floor: f64) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.dbar_f.values().iter().zip(self.d_f.values()) {
            if b.norm() > floor {
                worst = worst.max(a.norm() / b.norm());
            }
        }
        worst
    }
}

/// Largest L² defect of the partial-sum identity: with P_m = Σ_{k<m}
/// (μB_Ω)^k, both P_m(I_Ω − μB_Ω) and (I_Ω − μB_Ω)P_m telescope to
/// I_Ω − (μB_Ω)^m.
pub fn partial_sum_identity_defect(
    prob: &BeltramiProblem,
    m: usize,
    g: &ComplexField,
) -> Result<f64, BeltramiError> {
    let spec = g.spec();
    let mask = prob.dom.sharp_mask(spec);
    let mu_b_loc = |v: &ComplexField| prob.mu.mul(&mask.mul(&beurling(&mask.mul(v))));
    let i_loc = |v: &ComplexField| mask.mul(v);

    let p_m = |v: &ComplexField| -> ComplexField {
        let mut acc = i_loc(v);
        let mut term = i_loc(v);
        for _ in 1..m {
            term = mu_b_loc(&term);
            acc = acc.add(&term);
        }
        acc
    };
    let resolvent = |v: &ComplexField| i_loc(v).sub(&mu_b_loc(&i_loc(v)));

    // (μB_Ω)^m g, built on I_Ω g so all three routes share the masking.
    let mut power = i_loc(g);
    for _ in 0..m {
        power = mu_b_loc(&power);
    }
    let target = i_loc(g).sub(&power);

    let left = p_m(&resolvent(g));
    let right = resolvent(&p_m(g));
    let d1 = left.sub(&target).l2_norm();
    let d2 = right.sub(&target).l2_norm();
    Ok(d1.max(d2))
}

/// The three factorization terms of I_Ω − (μB_Ω)^m and the L² defect of
/// their sum:
/// A₁ = I_Ω − μ^m(B^m)_Ω, A₂ = (B^m)_Ω − (B_Ω)^m,
/// A₃ = μ^m(B_Ω)^m − (μB_Ω)^m.
pub struct FactorizationTerms {
    pub a1: ComplexField,
    pub a2: ComplexField,
    pub a3: ComplexField,
    pub defect: f64,
}

pub fn factorization_terms(
    prob: &BeltramiProblem,
    m: usize,
    g: &ComplexField,
) -> Result<FactorizationTerms, BeltramiError> {
    let spec = g.spec();
    let mask = prob.dom.sharp_mask(spec);
    let mu_pow = {
        let mut acc = sample(|_| Complex64::new(1.0, 0.0), spec)?;
        for _ in 0..m {
            acc = acc.mul(&prob.mu);
        }
        acc
    };
    let b_loc = |v: &ComplexField| mask.mul(&beurling(&mask.mul(v)));
    let mu_b_loc = |v: &ComplexField| prob.mu.mul(&b_loc(v));

    let bm_omega = mask.mul(&beurling_power(&mask.mul(g), m as i64).map_err(|e| {
        BeltramiError::Norm(crate::norms::NormError::InvalidParameter(e.to_string()))
    })?);
    let mut b_loc_m = mask.mul(g);
    for _ in 0..m {
        b_loc_m = b_loc(&b_loc_m);
    }
    let mut mu_b_loc_m = mask.mul(g);
    for _ in 0..m {
        mu_b_loc_m = mu_b_loc(&mu_b_loc_m);
    }

    let a1 = mask.mul(g).sub(&mu_pow.mul(&bm_omega));
    let a2 = bm_omega.sub(&b_loc_m);
    let a3 = mu_pow.mul(&b_loc_m).sub(&mu_b_loc_m);

    let target = mask.mul(g).sub(&mu_b_loc_m);
    let sum = a1.add(&mu_pow.mul(&a2)).add(&a3);
    let defect = sum.sub(&target).l2_norm();
    Ok(FactorizationTerms { a1, a2, a3, defect })
}

/// Operator-norm estimates of g ↦ μ^m·(B^m)_Ω g.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionEstimate {
    /// Randomized power-iteration estimate on discrete L²(Ω).
    pub l2: f64,
    /// Randomized sup of Sobolev-norm quotients.
    pub sobolev: f64,
}

/// Estimates how strongly μ^m(B^m)_Ω contracts, in L² by power iteration
/// on AᴴA and in W^{n,p} by a randomized quotient sup.
pub fn contraction_estimate(
    prob: &BeltramiProblem,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<ContractionEstimate, BeltramiError> {
    let spec = prob.mu.spec();
    let mask = prob.dom.sharp_mask(spec);
    let mu_pow = {
        let mut acc = sample(|_| Complex64::new(1.0, 0.0), spec)?;
        for _ in 0..m {
            acc = acc.mul(&prob.mu);
        }
        acc
    };
    let apply = |g: &ComplexField| -> ComplexField {
        mu_pow.mul(&mask.mul(
            &beurling_power(&mask.mul(g), m.max(1) as i64).expect("m ≥ 1"),
        ))
    };
    // Adjoint: (μ^m·mask·B^m·mask)ᴴ = mask·(B^m)ᴴ·mask·conj(μ^m).
    let apply_adjoint = |g: &ComplexField| -> ComplexField {
        let pre = mu_pow.conj().mul(g);
        let spec = pre.spec();
        let mid = crate::spectral::apply_multiplier(
            mask.mul(&pre).values(),
            spec.resolution,
            spec.period(),
            |kx, ky| {
                let den = crate::spectral::dbar_symbol(kx, ky);
                if den.norm_sqr() == 0.0 {
                    Complex64::default()
                } else {
                    (crate::spectral::d_symbol(kx, ky) / den).powi(m as i32).conj()
                }
            },
        );
        mask.mul(&ComplexField::from_raw(spec, mid))
    };

    if prob.k == 0.0 {
        return Ok(ContractionEstimate { l2: 0.0, sobolev: 0.0 });
    }

    let mut rng = crate::rng::stream(seed, "contraction");
    use rand::Rng;
    let random_field = |rng: &mut rand_chacha::ChaCha12Rng| -> ComplexField {
        let values = (0..spec.num_cells())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        mask.mul(&ComplexField::from_raw(spec, values))
    };

    // L²: power iteration on AᴴA from a random start.
    let mut v = random_field(&mut rng);
    let mut sigma = 0.0;
    for _ in 0..trials.max(5) {
        let av = apply(&v);
        sigma = av.l2_norm() / v.l2_norm().max(1e-300);
        let back = apply_adjoint(&av);
        let norm = back.l2_norm();
        if norm < 1e-300 {
            sigma = 0.0;
            break;
        }
        v = back.scale(Complex64::new(1.0 / norm, 0.0));
    }

    // W^{n,p}: randomized quotient sup over smooth probes.
    let mut sob = 0.0f64;
    for _ in 0..trials.max(5) {
        let a = 1.0 + 3.0 * rng.random::<f64>();
        let b = 1.0 + 3.0 * rng.random::<f64>();
        let probe = sample(
            |z| {
                Complex64::new(
                    (a * z.re + b * z.im).sin(),
                    (b * z.re - a * z.im).cos(),
                )
            },
            spec,
        )?;
        let masked = mask.mul(&probe);
        let image = apply(&masked);
        let ng = sobolev_norm(&masked, prob.dom, prob.params)?.norm;
        let ni = sobolev_norm(&image, prob.dom, prob.params)?.norm;
        if ng > 0.0 {
            sob = sob.max(ni / ng);
        }
    }
    Ok(ContractionEstimate { l2: sigma, sobolev: sob })
}

/// One row of a resolution-refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub resolution: usize,
    /// Gradient seminorm ‖∇ⁿh‖_{L^p(Ω)} (collar-compensated).
    pub h_grad_norm: f64,
    /// Full Sobolev norm of h at order n.
    pub h_norm: f64,
    /// Sobolev norm of f at order n+1.
    pub f_norm: f64,
    pub residual: f64,
}

/// Solves the same analytic coefficient at several resolutions and
/// reports the Sobolev norms of h (order n) and f (order n+1); bounded
/// ratios across rows signal that the discrete solutions stay in the
/// expected smoothness class, growth signals they do not.
pub fn regularity_table<F>(
    mu_fn: F,
    dom: &LipschitzDomain,
    params: SobolevParams,
    half_width: f64,
    resolutions: &[usize],
    tol: f64,
    kmax: usize,
) -> Result<Vec<RegularityRow>, BeltramiError>
where
    F: Fn(Complex64) -> Complex64,
{
    if resolutions.len() < 3 {
        return Err(BeltramiError::InsufficientData { need: 3, got: resolutions.len() });
    }
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let spec = crate::grid::make_grid(Complex64::default(), half_width, n)?;
        let mu = sample(&mu_fn, spec)?;
        let prob = BeltramiProblem::new(mu, dom, params)?;
        let (h, trace) = neumann_solve(&prob, tol, kmax)?;
        let sol = principal_solution(&prob, h, trace)?;
        let hn = sobolev_norm(&sol.h, dom, params)?;
        let fparams = SobolevParams::new(params.n + 1, params.p)?;
        let fn_ = sobolev_norm(&sol.f, dom, fparams)?;
        rows.push(RegularityRow {
            resolution: n,
            h_grad_norm: hn.grad_term,
            h_norm: hn.norm,
            f_norm: fn_.norm,
            residual: sol.beltrami_residual,
        });
    }
    Ok(rows)
}

/// Successive ratios of a table column.
pub fn successive_ratios(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.into_iter().collect();
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, BoundarySpec, CurveFamily};
    use crate::grid::make_grid;

    fn disk(radius: f64) -> LipschitzDomain {
        build_domain(&BoundarySpec::Parametric {
            curve: CurveFamily::Circle { center_re: 0.0, center_im: 0.0, radius },
            samples: 1 << 12,
        })
        .unwrap()
    }

    /// Radial C² bump of the given amplitude supported in the disk of
    /// radius `r`, flat near the center.
    fn bump_mu(amplitude: f64, r: f64) -> impl Fn(Complex64) -> Complex64 {
        move |z: Complex64| {
            let t = z.norm() / r;
            if t >= 1.0 {
                return Complex64::default();
            }
            let u = ((1.0 - t) / 0.35).clamp(0.0, 1.0);
            let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
            Complex64::new(amplitude * s, 0.0)
        }
    }

    #[test]
    fn rejects_non_contractive_mu() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 64).unwrap();
        let mu = sample(bump_mu(1.2, 0.8), spec).unwrap();
        let err = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap());
        assert!(matches!(err, Err(BeltramiError::NotContractive(_))));
    }

    #[test]
    fn rejects_mu_supported_outside_domain() {
        let dom = disk(0.5);
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let mu = sample(bump_mu(0.5, 0.9), spec).unwrap();
        assert!(matches!(
            BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()),
            Err(BeltramiError::SupportLeak(_))
        ));
    }

    #[test]
    fn zero_mu_solves_immediately() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 64).unwrap();
        let mu = ComplexField::zeros(spec);
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        assert_eq!(prob.distortion(), 1.0);
        let (h, trace) = neumann_solve(&prob, 1e-12, 50).unwrap();
        assert_eq!(h.sup_norm(), 0.0);
        assert_eq!(trace.status, SolveStatus::Converged);
        assert_eq!(trace.residual_norms.len(), 1);
        let sol = principal_solution(&prob, h, trace).unwrap();
        // f(z) = z exactly.
        let spec = sol.f.spec();
        for (j, k, z) in spec.iter_points() {
            assert!((sol.f.at(j, k) - z).norm() < 1e-12);
        }
    }

    #[test]
    fn defining_equation_holds_at_tolerance() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let mu = sample(bump_mu(0.5, 0.8), spec).unwrap();
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let (h, trace) = neumann_solve(&prob, 1e-10, 200).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        // (I − μB)h = μ, checked directly.
        let residual = h.sub(&prob.mu.mul(&beurling(&h))).sub(&prob.mu).l2_norm();
        assert!(residual <= 1e-10, "residual {residual}");
        // Geometric decay with ratio ≤ ‖μ‖_∞ + slack after burn-in.
        let ratio = trace.tail_ratio(3);
        assert!(ratio <= prob.k + 0.05, "ratio {ratio} vs k {}", prob.k);
    }

    #[test]
    fn principal_solution_fields_and_conformality() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 256).unwrap();
        let mu = sample(bump_mu(0.3, 0.8), spec).unwrap();
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let (h, trace) = neumann_solve(&prob, 1e-9, 100).unwrap();
        let sol = principal_solution(&prob, h, trace).unwrap();
        assert!(sol.beltrami_residual <= 1e-9 + 1e-12);
        // h vanishes where μ does, so f is conformal away from supp μ.
        let spec = sol.h.spec();
        for (j, k, z) in spec.iter_points() {
            if z.norm() > 1.3 {
                assert!(sol.dbar_f.at(j, k).norm() <= 1e-6);
            }
        }
        // Quasiregularity where ∂f is safely away from zero.
        let qr = sol.quasiregularity_ratio(0.1);
        assert!(qr <= prob.k + 0.05, "quasiregularity ratio {qr}");
        // Spectral re-differentiation matches modulo the mean of h.
        let (d, dbar) = crate::grid::wirtinger(&crate::singular_ops::cauchy(&sol.h));
        let mean = sol.h.mean();
        let dbar_defect = dbar.sub(&sol.h.map(|v| v - mean)).l2_norm();
        let one = sample(|_| Complex64::new(1.0, 0.0), spec).unwrap();
        let d_defect = d.add(&one).sub(&sol.d_f).l2_norm();
        assert!(dbar_defect < 1e-8, "∂̄ identity defect {dbar_defect}");
        assert!(d_defect < 1e-8, "∂ identity defect {d_defect}");
        // f − z decays toward the grid edge only qualitatively.
        assert!(sol.far_field_deviation(3.0) < sol.far_field_deviation(0.0) + 1e-12);
    }

    #[test]
    fn partial_sum_identity_is_algebraic() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let mut rng = crate::rng::stream(31, "pm-identity");
        use rand::Rng;
        let mu = sample(bump_mu(0.6, 0.8), spec)
            .unwrap()
            .map(|v| v * Complex64::from_polar(1.0, 0.7));
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let g_vals =
            (0..spec.num_cells()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let g = ComplexField::from_values(spec, g_vals).unwrap();
        // m = 1: P₁ = I_Ω, identity exact.
        assert!(partial_sum_identity_defect(&prob, 1, &g).unwrap() <= 1e-13);
        for m in 2..=6 {
            let d = partial_sum_identity_defect(&prob, m, &g).unwrap();
            assert!(d <= 1e-10, "m={m}: defect {d}");
        }
        // μ ≡ 0 degenerates to I_Ω on both sides.
        let zero_prob = BeltramiProblem::new(
            ComplexField::zeros(spec),
            &dom,
            SobolevParams::new(1, 4.0).unwrap(),
        )
        .unwrap();
        assert!(partial_sum_identity_defect(&zero_prob, 3, &g).unwrap() <= 1e-13);
    }

    #[test]
    fn factorization_telescopes() {
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let mut rng = crate::rng::stream(37, "factorization");
        use rand::Rng;
        let mu = sample(bump_mu(0.5, 0.8), spec).unwrap();
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let g_vals =
            (0..spec.num_cells()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let g = ComplexField::from_values(spec, g_vals).unwrap();
        for m in 1..=6 {
            let t = factorization_terms(&prob, m, &g).unwrap();
            assert!(t.defect <= 1e-10, "m={m}: defect {}", t.defect);
            if m == 1 {
                assert!(t.a2.sup_norm() <= 1e-12, "A₂ must vanish at m=1");
                assert!(t.a3.sup_norm() <= 1e-12, "A₃ must vanish at m=1");
            }
        }
    }

    #[test]
    fn factorization_a3_vanishes_for_constant_mu_inside() {
        // Constants commute with B_Ω modulo the shared χ_Ω bookkeeping.
        let dom = disk(0.8);
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let mask = dom.sharp_mask(spec);
        let mu = mask.scale(Complex64::new(0.4, 0.0));
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let g = sample(|z| Complex64::new((2.0 * z.re).cos(), z.im), spec).unwrap();
        let t = factorization_terms(&prob, 3, &g).unwrap();
        assert!(t.a3.l2_norm() <= 1e-10, "A₃ for constant μ: {}", t.a3.l2_norm());
    }

    #[test]
    fn contraction_estimates_fall_with_m() {
        let dom = disk(0.7);
        let spec = make_grid(Complex64::default(), 4.0, 128).unwrap();
        let mu = sample(bump_mu(0.3, 0.7), spec).unwrap();
        let prob = BeltramiProblem::new(mu, &dom, SobolevParams::new(1, 4.0).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for m in 1..=3 {
            let est = contraction_estimate(&prob, m, 6, 41).unwrap();
            // ‖B^m‖_{L²} = 1, so the masked operator obeys ‖μ^m(B^m)_Ω‖ ≤ k^m.
            assert!(est.l2 <= 0.3f64.powi(m as i32) * 1.05, "m={m}: σ {}", est.l2);
            if m >= 2 {
                assert!(est.l2 <= prev * (0.3 + 0.1), "m={m}: {} vs prev {prev}", est.l2);
            }
            prev = est.l2;
        }
        assert!(prev < 1.0);
        // μ ≡ 0 gives the zero operator.
        let zero = BeltramiProblem::new(
            ComplexField::zeros(spec),
            &dom,
            SobolevParams::new(1, 4.0).unwrap(),
        )
        .unwrap();
        let est = contraction_estimate(&zero, 2, 5, 41).unwrap();
        assert_eq!(est.l2, 0.0);
        assert_eq!(est.sobolev, 0.0);
    }

    #[test]
    fn regularity_table_zero_mu_is_resolution_independent() {
        let dom = disk(0.8);
        let rows = regularity_table(
            |_| Complex64::default(),
            &dom,
            SobolevParams::new(1, 4.0).unwrap(),
            4.0,
            &[64, 128, 256],
            1e-10,
            20,
        )
        .unwrap();
        // h-norms are exactly zero; the f-norm quadrature jitters by the
        // sharp-membership measure error, O(h^{3/2}).
        for pair in successive_ratios(rows.iter().map(|r| r.f_norm)) {
            assert!((pair - 1.0).abs() < 2e-2, "f-norm ratio {pair}");
        }
        for r in &rows {
            assert_eq!(r.h_norm, 0.0);
        }
        assert!(matches!(
            regularity_table(
                |_| Complex64::default(),
                &dom,
                SobolevParams::new(1, 4.0).unwrap(),
                4.0,
                &[64, 128],
                1e-10,
                20,
            ),
            Err(BeltramiError::InsufficientData { .. })
        ));
    }
}
