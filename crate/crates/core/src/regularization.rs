//! Choosing and applying the Tikhonov parameter on projected problems.
//!
//! Two conventions are in play. The Arnoldi/GCV path penalizes with `μ`:
//! `min ‖H̃y - βe₁‖² + μ‖y‖²`. The bidiagonalization path uses the inverted
//! weight `μ⁻¹`, so there the residual `φ(μ)` decreases as `μ` grows and is
//! bracketed by Gauss (`C_ℓ`) and Gauss–Radau (`C̃_ℓ`) rules:
//!
//! ```text
//! G_ℓ(μ)     = σ₁² e₁ᵀ (μ C Cᵀ + I)⁻² e₁
//! R_{ℓ+1}(μ) = σ₁² e₁ᵀ (μ C̃ C̃ᵀ + I)⁻² e₁
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, Result};
use crate::krylov::BidiagonalMatrices;

/// `[A; s I] y ≈ [b; 0]` solved through a thin QR factorization.
fn stacked_least_squares(a: &DMatrix<f64>, s: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    let mut k = DMatrix::zeros(m + n, n);
    k.view_mut((0, 0), (m, n)).copy_from(a);
    for i in 0..n {
        k[(m + i, i)] = s;
    }
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(b);
    let qr = k.qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-14 * scale) || scale == 0.0 {
        return Err(Error::Singular(format!(
            "{m}x{n} projected least-squares problem is rank deficient"
        )));
    }
    let qtb = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}

/// Minimizer of `‖H̃y - βe₁‖² + μ‖y‖²`.
pub fn solve_projected_tikhonov(h_tilde: &DMatrix<f64>, beta: f64, mu: f64) -> Result<DVector<f64>> {
    if !(mu >= 0.0) {
        return Err(Error::Parameter(format!("μ must be nonnegative, got {mu}")));
    }
    let mut rhs = DVector::zeros(h_tilde.nrows());
    rhs[0] = beta;
    stacked_least_squares(h_tilde, mu.sqrt(), &rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GcvVariant {
    /// Sums over the `m` singular values of `H̃` only.
    #[default]
    Truncated,
    /// Classical GCV of the `(m+1) x m` problem: the null direction of `H̃ᵀ`
    /// joins the sums with singular value zero.
    Standard,
}

impl std::str::FromStr for GcvVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncated" => Ok(GcvVariant::Truncated),
            "standard" => Ok(GcvVariant::Standard),
            other => Err(Error::Parameter(format!("unknown GCV variant {other:?}"))),
        }
    }
}

/// Spectral data of `H̃ = UΣVᵀ` needed to evaluate GCV.
#[derive(Debug, Clone, PartialEq)]
pub struct GcvContext {
    /// `σ_1 ≥ .. ≥ σ_m`.
    pub singular_values: Vec<f64>,
    /// `g̃ = β Uᵀ e₁` with the full `(m+1)`-column `U`.
    pub g_tilde: Vec<f64>,
}

impl GcvContext {
    pub fn new(singular_values: Vec<f64>, g_tilde: Vec<f64>) -> Result<Self> {
        if g_tilde.len() != singular_values.len() + 1 {
            return Err(dim_err(format!(
                "{} singular values need {} projected coefficients, got {}",
                singular_values.len(),
                singular_values.len() + 1,
                g_tilde.len()
            )));
        }
        Ok(GcvContext {
            singular_values,
            g_tilde,
        })
    }

    pub fn from_hessenberg(h_tilde: &DMatrix<f64>, beta: f64) -> Result<Self> {
        let (rows, m) = h_tilde.shape();
        if rows != m + 1 {
            return Err(dim_err(format!("expected an (m+1) x m matrix, got {rows}x{m}")));
        }
        // zero column appended so the SVD yields the full left basis
        let mut square = DMatrix::zeros(rows, rows);
        square.view_mut((0, 0), (rows, m)).copy_from(h_tilde);
        let svd = square
            .try_svd(true, false, f64::EPSILON, 0)
            .ok_or_else(|| Error::Singular("SVD of the Hessenberg matrix did not converge".into()))?;
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let singular_values = order[..m].iter().map(|&i| svd.singular_values[i]).collect();
        let g_tilde = order.iter().map(|&i| beta * u[(0, i)]).collect();
        GcvContext::new(singular_values, g_tilde)
    }

    pub fn m(&self) -> usize {
        self.singular_values.len()
    }
}

/// `Σ (g̃_i/(σ_i²+μ))² / (Σ 1/(σ_i²+μ))²` over the terms of `variant`.
pub fn gcv_value(ctx: &GcvContext, mu: f64, variant: GcvVariant) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, g) in ctx.singular_values.iter().zip(&ctx.g_tilde) {
        let d = s * s + mu;
        num += (g / d).powi(2);
        den += 1.0 / d;
    }
    if variant == GcvVariant::Standard {
        let g = ctx.g_tilde[ctx.m()];
        num += (g / mu).powi(2);
        den += 1.0 / mu;
    }
    num / (den * den)
}

/// Default search interval for the GCV minimizer.
pub const GCV_BRACKET: (f64, f64) = (1e-12, 1e2);

const GCV_GRID: usize = 200;
const GOLDEN_REL_WIDTH: f64 = 1e-6;

/// Minimizes GCV over `[mu_lo, mu_hi]` in `log μ`.
///
/// A log-spaced scan locates the best cell, golden-section search refines
/// it, and the abscissa of the smallest value ever sampled is returned.
pub fn gcv_minimize(ctx: &GcvContext, mu_lo: f64, mu_hi: f64, variant: GcvVariant) -> Result<f64> {
    if !(mu_lo > 0.0 && mu_lo < mu_hi) {
        return Err(Error::Parameter(format!("invalid GCV bracket [{mu_lo}, {mu_hi}]")));
    }
    let (lo, hi) = (mu_lo.ln(), mu_hi.ln());
    let f = |t: f64| gcv_value(ctx, t.exp(), variant);
    let mut best = (f64::INFINITY, lo);
    let consider = |t: f64, v: f64, best: &mut (f64, f64)| {
        if v < best.0 {
            *best = (v, t);
        }
    };
    let grid: Vec<f64> = (0..GCV_GRID)
        .map(|k| {
            if k == GCV_GRID - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (GCV_GRID - 1) as f64
            }
        })
        .collect();
    let mut best_k = 0;
    for (k, &t) in grid.iter().enumerate() {
        let v = f(t);
        if v < best.0 {
            best_k = k;
        }
        consider(t, v, &mut best);
    }

    let mut a = grid[best_k.saturating_sub(1)];
    let mut b = grid[(best_k + 1).min(GCV_GRID - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);
    while b - a > GOLDEN_REL_WIDTH {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            consider(x1, f1, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            consider(x2, f2, &mut best);
        }
    }
    // boundary samples are exact; interior ones come back through exp(ln μ)
    Ok(if best.1 == lo {
        mu_lo
    } else if best.1 == hi {
        mu_hi
    } else {
        best.1.exp()
    })
}

/// Bidiagonal data for the quadrature bounds on `φ(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureContext {
    pub bidiag: BidiagonalMatrices,
    /// `‖C‖_F`.
    pub sigma1: f64,
}

impl QuadratureContext {
    pub fn new(bidiag: BidiagonalMatrices, sigma1: f64) -> Result<Self> {
        if !(sigma1 > 0.0) {
            return Err(Error::Parameter(format!("σ₁ must be positive, got {sigma1}")));
        }
        Ok(QuadratureContext { bidiag, sigma1 })
    }
}

/// `(μ B Bᵀ + I)⁻¹ e₁` by Cholesky; the matrix is SPD with eigenvalues ≥ 1.
fn shifted_solve(b: &DMatrix<f64>, mu: f64) -> (nalgebra::Cholesky<f64, nalgebra::Dyn>, DVector<f64>) {
    let n = b.nrows();
    let k = b * b.transpose() * mu + DMatrix::identity(n, n);
    let chol = k.cholesky().expect("μBBᵀ + I is positive definite");
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let w = chol.solve(&e1);
    (chol, w)
}

fn check_mu(mu: f64) {
    debug_assert!(mu > 0.0, "μ must be positive, got {mu}");
}

/// Gauss rule `G_ℓ f_μ`, a lower bound on `φ(μ)`.
pub fn gauss_lower(ctx: &QuadratureContext, mu: f64) -> f64 {
    check_mu(mu);
    let (_, w) = shifted_solve(&ctx.bidiag.c, mu);
    ctx.sigma1 * ctx.sigma1 * w.norm_squared()
}

/// Gauss–Radau rule `R_{ℓ+1} f_μ`, an upper bound on `φ(μ)`.
pub fn gauss_radau_upper(ctx: &QuadratureContext, mu: f64) -> f64 {
    check_mu(mu);
    let (_, w) = shifted_solve(&ctx.bidiag.c_tilde, mu);
    ctx.sigma1 * ctx.sigma1 * w.norm_squared()
}

/// `G_ℓ f_μ` and its derivative `-2σ₁² e₁ᵀ M (μM + I)⁻³ e₁`, `M = C Cᵀ`.
fn gauss_with_derivative(ctx: &QuadratureContext, mu: f64) -> (f64, f64) {
    let c = &ctx.bidiag.c;
    let (chol, w1) = shifted_solve(c, mu);
    let w2 = chol.solve(&w1);
    let mw2 = c * (c.transpose() * &w2);
    let s2 = ctx.sigma1 * ctx.sigma1;
    (s2 * w1.norm_squared(), -2.0 * s2 * w1.dot(&mw2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Failure modes of the discrepancy root finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscrepancyRoot {
    Found(NewtonOutcome),
    /// `ε ≥ σ₁`: the residual is already below `ε` as `μ → 0⁺`.
    EpsTooLarge,
}

pub const NEWTON_MAX_ITER: usize = 100;

/// Solves `G_ℓ f_μ = ε²` by Newton's method safeguarded with bisection.
///
/// The bracket is found by doubling or halving `mu0` until `g` changes sign;
/// bisection is geometric since the root may sit many decades from `mu0`.
pub fn newton_solve_mu(ctx: &QuadratureContext, eps: f64, mu0: f64) -> Result<DiscrepancyRoot> {
    if !(eps > 0.0) || !(mu0 > 0.0) {
        return Err(Error::Parameter(format!("need ε > 0 and μ₀ > 0, got {eps} and {mu0}")));
    }
    if eps >= ctx.sigma1 {
        return Ok(DiscrepancyRoot::EpsTooLarge);
    }
    let target = eps * eps;
    let g = |mu: f64| gauss_lower(ctx, mu) - target;

    let (mut lo, mut hi) = (mu0, mu0);
    let g0 = g(mu0);
    if g0 > 0.0 {
        while g(hi) > 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Singular("no sign change of the discrepancy function".into()));
            }
        }
    } else {
        while g(lo) <= 0.0 {
            lo /= 2.0;
            if lo < f64::MIN_POSITIVE {
                return Ok(DiscrepancyRoot::EpsTooLarge);
            }
        }
    }
    if hi == lo {
        hi = lo * 2.0;
    }

    let mut mu = mu0.clamp(lo, hi);
    for it in 1..=NEWTON_MAX_ITER {
        let (value, slope) = gauss_with_derivative(ctx, mu);
        let gv = value - target;
        if gv.abs() <= 1e-10 * target {
            return Ok(DiscrepancyRoot::Found(NewtonOutcome {
                mu,
                iterations: it,
                converged: true,
            }));
        }
        if gv > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = mu - gv / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo * hi).sqrt();
        }
        let step = (next - mu).abs() / mu;
        mu = next;
        if step <= 1e-12 {
            return Ok(DiscrepancyRoot::Found(NewtonOutcome {
                mu,
                iterations: it,
                converged: true,
            }));
        }
    }
    Ok(DiscrepancyRoot::Found(NewtonOutcome {
        mu,
        iterations: NEWTON_MAX_ITER,
        converged: false,
    }))
}

/// `min ‖[μ^{1/2} C̃; I] y - [σ₁ μ^{1/2} e₁; 0]‖`.
pub fn solve_ggkb_tikhonov(bidiag: &BidiagonalMatrices, mu: f64, sigma1: f64) -> Result<DVector<f64>> {
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("μ must be positive, got {mu}")));
    }
    let s = mu.sqrt();
    let a = &bidiag.c_tilde * s;
    let mut rhs = DVector::zeros(a.nrows());
    rhs[0] = sigma1 * s;
    stacked_least_squares(&a, 1.0, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_bidiag(l: usize, seed: u64) -> BidiagonalMatrices {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho: Vec<f64> = (0..l).map(|_| rng.gen_range(0.2..2.0)).collect();
        let sigma: Vec<f64> = (0..=l).map(|_| rng.gen_range(0.2..2.0)).collect();
        BidiagonalMatrices::from_coefficients(&rho, &sigma).unwrap()
    }

    #[test]
    fn scalar_tikhonov() {
        let h = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_relative_eq!(solve_projected_tikhonov(&h, 1.0, 0.0).unwrap()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(solve_projected_tikhonov(&h, 1.0, 1.0).unwrap()[0], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn tikhonov_matches_normal_equations() {
        let h = random_matrix(6, 5, 1);
        let y = solve_projected_tikhonov(&h, 2.0, 0.3).unwrap();
        let lhs = h.transpose() * &h + DMatrix::identity(5, 5) * 0.3;
        let mut e1 = DVector::zeros(6);
        e1[0] = 2.0;
        let oracle = lhs.lu().solve(&(h.transpose() * e1)).unwrap();
        assert!((y - oracle).amax() <= 1e-12);
    }

    #[test]
    fn rank_deficient_unregularized_is_singular() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(solve_projected_tikhonov(&h, 1.0, 0.0), Err(Error::Singular(_))));
        assert!(solve_projected_tikhonov(&h, 1.0, 1e-3).is_ok());
    }

    #[test]
    fn gcv_single_term() {
        let ctx = GcvContext::new(vec![1.0], vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(gcv_value(&ctx, 1.0, GcvVariant::Truncated), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn gcv_large_mu_limit() {
        let ctx = GcvContext::new(vec![3.0, 1.0, 0.5], vec![0.7, -1.2, 0.4, 0.1]).unwrap();
        let limit = (0.49 + 1.44 + 0.16) / 9.0;
        assert_relative_eq!(gcv_value(&ctx, 1e12, GcvVariant::Truncated), limit, max_relative = 1e-9);
    }

    #[test]
    fn gcv_context_from_svd() {
        let h = random_matrix(5, 4, 2);
        let ctx = GcvContext::from_hessenberg(&h, 1.5).unwrap();
        assert!(ctx.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let norm: f64 = ctx.g_tilde.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 1.5, max_relative = 1e-13);
    }

    #[test]
    fn gcv_monotone_returns_lower_end() {
        // GCV = (μ / (2μ + σ₁²))² with σ₂ ≈ 0 and g̃ = e₁, increasing in μ
        let ctx = GcvContext::new(vec![1e3, 1e-7], vec![1.0, 0.0, 0.0]).unwrap();
        let (lo, hi) = (1e-4f64, 1.0f64);
        let grid: Vec<f64> = (0..50)
            .map(|k| gcv_value(&ctx, lo * (hi / lo).powf(k as f64 / 49.0), GcvVariant::Truncated))
            .collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(gcv_minimize(&ctx, lo, hi, GcvVariant::Truncated).unwrap(), lo);
    }

    #[test]
    fn gcv_known_minimizers() {
        // truncated form with two terms has its minimum where
        // (σ₂²+μ)/(σ₁²+σ₂²+2μ) = b²/(a²+b²)
        let ctx = GcvContext::new(vec![2.0, 1.0], vec![3f64.sqrt(), 2f64.sqrt(), 0.0]).unwrap();
        let mu = gcv_minimize(&ctx, 1e-12, 1e2, GcvVariant::Truncated).unwrap();
        assert_relative_eq!(mu, 5.0, max_relative = 1e-5);
        // standard form with one term: minimum at t = μ/(σ²+μ) = h²/g²
        let (s, g, h) = (2.0f64, 1.0f64, 0.5f64);
        let ctx = GcvContext::new(vec![s], vec![g, h]).unwrap();
        let t = h * h / (g * g);
        let expect = s * s * t / (1.0 - t);
        let mu = gcv_minimize(&ctx, 1e-12, 1e2, GcvVariant::Standard).unwrap();
        assert_relative_eq!(mu, expect, max_relative = 1e-5);
    }

    #[test]
    fn quadrature_scalar_forms() {
        let b = BidiagonalMatrices::from_coefficients(&[1.5], &[2.0, 0.0]).unwrap();
        let ctx = QuadratureContext::new(b, 2.0).unwrap();
        let mu = 0.8;
        assert_relative_eq!(gauss_lower(&ctx, mu), 4.0 / (mu * 2.25 + 1.0).powi(2), max_relative = 1e-14);
        assert_relative_eq!(gauss_radau_upper(&ctx, mu), gauss_lower(&ctx, mu), max_relative = 1e-14);
        assert_relative_eq!(gauss_lower(&ctx, 1e-14), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_matches_inverse_squared() {
        let b = random_bidiag(5, 3);
        let ctx = QuadratureContext::new(b.clone(), 1.3).unwrap();
        let k = &b.c * b.c.transpose() * 0.7 + DMatrix::identity(5, 5);
        let inv = k.try_inverse().unwrap();
        let oracle = 1.69 * (&inv * &inv)[(0, 0)];
        assert_relative_eq!(gauss_lower(&ctx, 0.7), oracle, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_monotone_and_ordered() {
        let ctx = QuadratureContext::new(random_bidiag(6, 4), 1.0).unwrap();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in 0..100 {
            let mu = 1e-3 * 10f64.powf(k as f64 * 0.06);
            let g = gauss_lower(&ctx, mu);
            let r = gauss_radau_upper(&ctx, mu);
            assert!(g <= r * (1.0 + 1e-14));
            assert!(g < prev.0 && r < prev.1);
            prev = (g, r);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let ctx = QuadratureContext::new(random_bidiag(4, 5), 1.7).unwrap();
        let mu = 0.9;
        let h = 1e-6;
        let (_, d) = gauss_with_derivative(&ctx, mu);
        let fd = (gauss_lower(&ctx, mu + h) - gauss_lower(&ctx, mu - h)) / (2.0 * h);
        assert_relative_eq!(d, fd, max_relative = 1e-6);
    }

    #[test]
    fn newton_scalar_closed_form() {
        let (rho, s1, eps) = (0.8f64, 3.0f64, 0.5f64);
        let b = BidiagonalMatrices::from_coefficients(&[rho], &[s1, 0.4]).unwrap();
        let ctx = QuadratureContext::new(b, s1).unwrap();
        let DiscrepancyRoot::Found(out) = newton_solve_mu(&ctx, eps, 1.0).unwrap() else {
            panic!("root expected")
        };
        assert!(out.converged);
        assert_relative_eq!(out.mu, (s1 / eps - 1.0) / (rho * rho), max_relative = 1e-9);
    }

    #[test]
    fn newton_recovers_planted_root() {
        let ctx = QuadratureContext::new(random_bidiag(7, 6), 2.0).unwrap();
        let eps = gauss_lower(&ctx, 0.37).sqrt();
        let DiscrepancyRoot::Found(out) = newton_solve_mu(&ctx, eps, 1.0).unwrap() else {
            panic!("root expected")
        };
        assert_relative_eq!(out.mu, 0.37, max_relative = 1e-8);
    }

    #[test]
    fn newton_rejects_large_eps() {
        let ctx = QuadratureContext::new(random_bidiag(3, 7), 2.0).unwrap();
        assert_eq!(newton_solve_mu(&ctx, 2.0, 1.0).unwrap(), DiscrepancyRoot::EpsTooLarge);
        assert_eq!(newton_solve_mu(&ctx, 5.0, 1.0).unwrap(), DiscrepancyRoot::EpsTooLarge);
    }

    #[test]
    fn ggkb_tikhonov_scalar() {
        let (rho, s1, mu) = (1.3f64, 2.0f64, 0.6f64);
        let b = BidiagonalMatrices::from_coefficients(&[rho], &[s1, 0.0]).unwrap();
        let y = solve_ggkb_tikhonov(&b, mu, s1).unwrap();
        assert_relative_eq!(y[0], s1 * mu * rho / (mu * rho * rho + 1.0), max_relative = 1e-14);
        let sig2 = 0.7;
        let b = BidiagonalMatrices::from_coefficients(&[rho], &[s1, sig2]).unwrap();
        let y = solve_ggkb_tikhonov(&b, mu, s1).unwrap();
        assert_relative_eq!(y[0], s1 * mu * rho / (mu * (rho * rho + sig2 * sig2) + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn ggkb_tikhonov_normal_equations_and_limit() {
        let b = random_bidiag(6, 8);
        let s1 = 1.1;
        let mu = 2.5;
        let y = solve_ggkb_tikhonov(&b, mu, s1).unwrap();
        let ct = &b.c_tilde;
        let lhs = ct.transpose() * ct + DMatrix::identity(6, 6) / mu;
        let mut e1 = DVector::zeros(7);
        e1[0] = s1;
        let oracle = lhs.cholesky().unwrap().solve(&(ct.transpose() * &e1));
        assert!((&y - oracle).amax() <= 1e-10);
        // μ → ∞ approaches the least-squares solution of C̃ y = σ₁ e₁
        let y_big = solve_ggkb_tikhonov(&b, 1e12, s1).unwrap();
        let ls = ct.clone().svd(true, true).solve(&e1, 1e-15).unwrap();
        assert!((y_big - ls).amax() <= 1e-8);
    }
}
