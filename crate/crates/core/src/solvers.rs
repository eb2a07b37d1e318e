//! End-to-end regularized solvers for `A *_N X = C`.
//!
//! * [`tg_gmres_tikhonov`]: restarted global GMRES; every restart solves a
//!   Tikhonov-regularized projected problem with `μ` chosen by GCV.
//! * [`ggkb_tikhonov`]: global Golub–Kahan bidiagonalization grown one step
//!   at a time until the Gauss–Radau bound certifies the discrepancy
//!   principle for the `μ` solving `G_ℓ f_μ = ε²`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::krylov::{global_arnoldi, GgkbBreakdown, GgkbDecomposition, KrylovOptions};
use crate::operators::{trailing_shape, LinearTensorOperator};
use crate::regularization::{
    gauss_lower, gauss_radau_upper, gcv_minimize, newton_solve_mu, solve_ggkb_tikhonov,
    solve_projected_tikhonov, DiscrepancyRoot, GcvContext, GcvVariant, QuadratureContext, GCV_BRACKET,
};
use crate::tensor::{fro_norm, DenseTensor, TensorStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gmres,
    Ggkb,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Gmres => "gmres",
            Method::Ggkb => "ggkb",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmres" => Ok(Method::Gmres),
            "ggkb" => Ok(Method::Ggkb),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

/// How each GMRES restart picks its Tikhonov parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuRule {
    /// Minimize GCV over `[lo, hi]`.
    Gcv { lo: f64, hi: f64 },
    /// Use the given value (zero gives plain restarted global GMRES).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Arnoldi steps between restarts.
    pub restart: usize,
    /// Maximum number of restarts.
    pub maxit: usize,
    /// Stop once `|γ_{m+1}| < tol`.
    pub tol: f64,
    pub gcv_variant: GcvVariant,
    pub reorthogonalize: bool,
    pub mu_rule: MuRule,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            restart: 10,
            maxit: 10,
            tol: 1e-6,
            gcv_variant: GcvVariant::Truncated,
            reorthogonalize: false,
            mu_rule: MuRule::Gcv {
                lo: GCV_BRACKET.0,
                hi: GCV_BRACKET.1,
            },
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 || self.maxit == 0 || !(self.tol > 0.0) {
            return Err(Error::Parameter(format!(
                "GMRES needs m ≥ 1, maxit ≥ 1 and tol > 0 (got {}, {}, {})",
                self.restart, self.maxit, self.tol
            )));
        }
        match self.mu_rule {
            MuRule::Fixed(mu) if !(mu >= 0.0) => Err(Error::Parameter(format!("fixed μ must be ≥ 0, got {mu}"))),
            MuRule::Gcv { lo, hi } if !(lo > 0.0 && lo < hi) => {
                Err(Error::Parameter(format!("invalid GCV bracket [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgkbConfig {
    /// Safety factor `η > 1` of the discrepancy principle.
    pub eta: f64,
    /// Bound `ε` on the norm of the data error.
    pub eps: f64,
    pub ell_max: usize,
    /// Steps taken before the first parameter solve.
    pub ell_start: usize,
    /// Starting guess for Newton's method.
    pub mu0: f64,
    /// Keep all `U_j` (only needed for diagnostics).
    pub keep_u_basis: bool,
    pub reorthogonalize: bool,
}

impl GgkbConfig {
    pub fn new(eps: f64) -> Self {
        GgkbConfig {
            eta: 1.1,
            eps,
            ell_max: 200,
            ell_start: 2,
            mu0: 1.0,
            keep_u_basis: false,
            reorthogonalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) {
            return Err(Error::Parameter(format!("η must exceed 1, got {}", self.eta)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("ε must be positive, got {}", self.eps)));
        }
        if self.ell_start == 0 || self.ell_max < self.ell_start || !(self.mu0 > 0.0) {
            return Err(Error::Parameter("need 1 ≤ ell_start ≤ ell_max and μ₀ > 0".into()));
        }
        Ok(())
    }
}

/// Summary of one solver run.
///
/// `residuals` holds one entry per restart (GMRES: the exact projected
/// residual norm `‖βe₁ - H̃y‖`) or per bidiagonalization size (GGKB: the
/// Gauss–Radau bound `sqrt(R_{ℓ+1} f_μ)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    /// Final regularization parameter.
    pub mu: f64,
    pub mu_history: Vec<f64>,
    /// Restarts (GMRES) or bidiagonalization steps (GGKB).
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// GMRES: `|γ_{m+1}|` per restart. GGKB: `sqrt(G_ℓ f_μ)` per step.
    pub secondary: Vec<f64>,
    pub operator_applications: usize,
    pub seconds: f64,
    pub converged: bool,
}

impl SolveReport {
    fn new(method: Method) -> Self {
        SolveReport {
            method,
            mu: f64::NAN,
            mu_history: Vec::new(),
            iterations: 0,
            residuals: Vec::new(),
            secondary: Vec::new(),
            operator_applications: 0,
            seconds: 0.0,
            converged: false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `X = Σ y_j V_j`.
pub fn form_solution(basis: &TensorStack, y: &[f64]) -> Result<DenseTensor> {
    basis.combine(y)
}

/// Residual data from the QR factorization `H̃ = Q Ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrResidual {
    /// Last component of `Qᵀ β e₁`.
    pub gamma: f64,
    /// `γ_{m+1} Q e_{m+1}`, the residual coordinates in `V_1..V_{m+1}`
    /// for the least-squares minimizer.
    pub coefficients: DVector<f64>,
    /// `‖βe₁ - H̃y‖` for the supplied `y`, equal to `|γ_{m+1}|` when `y`
    /// is the least-squares minimizer.
    pub residual_norm: f64,
}

/// Givens QR of the Hessenberg matrix applied to `βe₁`.
pub fn gmres_residual_via_qr(h_tilde: &DMatrix<f64>, beta: f64, y: &DVector<f64>) -> Result<QrResidual> {
    let (rows, m) = h_tilde.shape();
    if rows != m + 1 || y.len() != m {
        return Err(dim_err(format!(
            "need an (m+1) x m matrix and m coefficients, got {rows}x{m} and {}",
            y.len()
        )));
    }
    let mut r = h_tilde.clone();
    let mut g = DVector::zeros(rows);
    g[0] = beta;
    let mut rotations = Vec::with_capacity(m);
    for j in 0..m {
        let (a, b) = (r[(j, j)], r[(j + 1, j)]);
        let rad = a.hypot(b);
        let (c, s) = if rad == 0.0 { (1.0, 0.0) } else { (a / rad, b / rad) };
        for k in j..m {
            let (x, z) = (r[(j, k)], r[(j + 1, k)]);
            r[(j, k)] = c * x + s * z;
            r[(j + 1, k)] = -s * x + c * z;
        }
        let (x, z) = (g[j], g[j + 1]);
        g[j] = c * x + s * z;
        g[j + 1] = -s * x + c * z;
        rotations.push((c, s));
    }
    let gamma = g[m];
    // Q e_{m+1} = G_1ᵀ .. G_mᵀ e_{m+1}
    let mut q_last = DVector::zeros(rows);
    q_last[m] = 1.0;
    for (j, &(c, s)) in rotations.iter().enumerate().rev() {
        let (x, z) = (q_last[j], q_last[j + 1]);
        q_last[j] = c * x - s * z;
        q_last[j + 1] = s * x + c * z;
    }
    let mut proj = -(h_tilde * y);
    proj[0] += beta;
    Ok(QrResidual {
        gamma,
        coefficients: q_last * gamma,
        residual_norm: proj.norm(),
    })
}

fn check_system(op: &dyn LinearTensorOperator, c: &DenseTensor) -> Result<()> {
    let trailing = trailing_shape(c, op.codomain_shape())?;
    if op.domain_shape() != op.codomain_shape() {
        return Err(dim_err(format!(
            "square operator required, got {} -> {}",
            op.domain_shape(),
            op.codomain_shape()
        )));
    }
    let _ = trailing;
    Ok(())
}

/// Restarted tensor global GMRES with a Tikhonov-regularized projected
/// problem at every restart.
pub fn tg_gmres_tikhonov(
    op: &dyn LinearTensorOperator,
    c: &DenseTensor,
    x0: &DenseTensor,
    cfg: &GmresConfig,
) -> Result<(DenseTensor, SolveReport)> {
    cfg.validate()?;
    check_system(op, c)?;
    if x0.shape() != c.shape() {
        return Err(dim_err(format!(
            "initial guess of shape {} for a right-hand side of shape {}",
            x0.shape(),
            c.shape()
        )));
    }
    let clock = Instant::now();
    let opts = KrylovOptions {
        reorthogonalize: cfg.reorthogonalize,
        ..KrylovOptions::default()
    };
    let mut report = SolveReport::new(Method::Gmres);
    let mut x = x0.clone();

    while report.iterations < cfg.maxit {
        let mut r0 = c.clone();
        r0.axpy(-1.0, &op.apply(&x)?)?;
        report.operator_applications += 1;
        let beta = fro_norm(&r0);
        if beta == 0.0 {
            report.converged = true;
            report.residuals.push(0.0);
            report.secondary.push(0.0);
            report.mu_history.push(0.0);
            report.iterations += 1;
            break;
        }
        let dec = global_arnoldi(op, &r0, cfg.restart, opts)?;
        report.operator_applications += dec.steps();
        let h = dec.hessenberg();
        let mu = match cfg.mu_rule {
            MuRule::Fixed(mu) => mu,
            MuRule::Gcv { lo, hi } => {
                let ctx = GcvContext::from_hessenberg(h, beta)?;
                gcv_minimize(&ctx, lo, hi, cfg.gcv_variant)?
            }
        };
        let y = solve_projected_tikhonov(h, beta, mu)?;
        let correction = form_solution(&dec.leading_basis(), y.as_slice())?;
        x.axpy(1.0, &correction)?;
        let qr = gmres_residual_via_qr(h, beta, &y)?;
        report.iterations += 1;
        report.mu_history.push(mu);
        report.residuals.push(qr.residual_norm);
        report.secondary.push(qr.gamma.abs());
        log::debug!(
            "gmres restart {}: mu = {mu:e}, |gamma| = {:e}, residual = {:e}",
            report.iterations,
            qr.gamma.abs(),
            qr.residual_norm
        );
        if qr.gamma.abs() < cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.mu = report.mu_history.last().copied().unwrap_or(f64::NAN);
    report.seconds = clock.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Bidiagonalization-based Tikhonov solver with the discrepancy principle
/// enforced through Gauss and Gauss–Radau bounds.
pub fn ggkb_tikhonov(
    op: &dyn LinearTensorOperator,
    c: &DenseTensor,
    cfg: &GgkbConfig,
) -> Result<(DenseTensor, SolveReport)> {
    ggkb_tikhonov_with_decomposition(op, c, cfg).map(|(x, report, _)| (x, report))
}

/// Like [`ggkb_tikhonov`] but also hands back the final decomposition.
pub fn ggkb_tikhonov_with_decomposition(
    op: &dyn LinearTensorOperator,
    c: &DenseTensor,
    cfg: &GgkbConfig,
) -> Result<(DenseTensor, SolveReport, GgkbDecomposition)> {
    check_system(op, c)?;
    let clock = Instant::now();
    let opts = KrylovOptions {
        reorthogonalize: cfg.reorthogonalize,
        ..KrylovOptions::default()
    };
    let mut dec = GgkbDecomposition::start(c, cfg.keep_u_basis, opts)?;
    cfg.validate()?;
    let sigma1 = dec.sigma1();
    if cfg.eps >= sigma1 {
        return Err(Error::Infeasible {
            eps: cfg.eps,
            norm: sigma1,
        });
    }
    dec.extend(op, cfg.ell_start)?;
    let mut report = SolveReport::new(Method::Ggkb);
    let bound = (cfg.eta * cfg.eps).powi(2);

    let (mu, ctx) = loop {
        if dec.steps() == 0 {
            return Err(Error::Singular("Aᵀ C vanishes; no bidiagonal step possible".into()));
        }
        let ctx = QuadratureContext::new(dec.bidiagonal()?, sigma1)?;
        let mu = match newton_solve_mu(&ctx, cfg.eps, cfg.mu0)? {
            DiscrepancyRoot::Found(out) => {
                if !out.converged {
                    log::warn!("Newton did not converge at ℓ = {}", dec.steps());
                }
                out.mu
            }
            DiscrepancyRoot::EpsTooLarge => {
                return Err(Error::Infeasible {
                    eps: cfg.eps,
                    norm: sigma1,
                })
            }
        };
        let upper = gauss_radau_upper(&ctx, mu);
        let lower = gauss_lower(&ctx, mu);
        report.mu_history.push(mu);
        report.residuals.push(upper.sqrt());
        report.secondary.push(lower.sqrt());
        log::debug!(
            "ggkb ℓ = {}: mu = {mu:e}, G = {lower:e}, R = {upper:e}, target = {bound:e}",
            dec.steps()
        );
        if upper <= bound {
            report.converged = true;
            break (mu, ctx);
        }
        if dec.breakdown().is_some() || dec.steps() >= cfg.ell_max {
            if let Some(GgkbBreakdown::Rho { step }) = dec.breakdown() {
                log::warn!("bidiagonalization broke down at step {step}");
            }
            break (mu, ctx);
        }
        dec.extend(op, 1)?;
    };

    let y = solve_ggkb_tikhonov(&ctx.bidiag, mu, sigma1)?;
    let x = form_solution(dec.v_basis(), y.as_slice())?;
    report.mu = mu;
    report.iterations = dec.steps();
    report.operator_applications = dec.applications();
    report.seconds = clock.elapsed().as_secs_f64();
    Ok((x, report, dec))
}
