//! Global Arnoldi and global Golub–Kahan bidiagonalization under the
//! Frobenius inner product.

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};
use crate::operators::{trailing_shape, LinearTensorOperator};
use crate::tensor::{dot, fro_norm, DenseTensor, TensorStack};

/// Relative size below which a new basis coefficient counts as zero.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Run a second Gram–Schmidt pass against the stored basis.
    pub reorthogonalize: bool,
    /// A new coefficient is treated as zero when it drops below
    /// `breakdown_tol` times the norm of the operator output it came from.
    pub breakdown_tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            reorthogonalize: false,
            breakdown_tol: BREAKDOWN_TOL,
        }
    }
}

/// Result of `m` steps of the global Arnoldi process.
#[derive(Debug, Clone)]
pub struct ArnoldiDecomposition {
    basis: TensorStack,
    hessenberg: DMatrix<f64>,
    beta: f64,
    breakdown: Option<usize>,
}

impl ArnoldiDecomposition {
    /// Orthonormal slices `V_1..V_{k+1}`, or `V_1..V_k` after a breakdown at step `k`.
    pub fn basis(&self) -> &TensorStack {
        &self.basis
    }

    /// The `(k+1) x k` upper Hessenberg matrix.
    pub fn hessenberg(&self) -> &DMatrix<f64> {
        &self.hessenberg
    }

    /// Frobenius norm of the start tensor.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn steps(&self) -> usize {
        self.hessenberg.ncols()
    }

    /// Step (1-based) at which `h_{j+1,j}` vanished.
    pub fn breakdown(&self) -> Option<usize> {
        self.breakdown
    }

    /// `V_1..V_k`.
    pub fn leading_basis(&self) -> TensorStack {
        let mut b = self.basis.clone();
        b.truncate(self.steps());
        b
    }

    /// Largest slice norm of `W_k - V_{k+1} x H̃ᵀ`, with `W_k` the stack of `A V_j`.
    pub fn factorization_residual(&self, op: &dyn LinearTensorOperator) -> Result<f64> {
        let mut worst = 0.0f64;
        for j in 0..self.steps() {
            let mut r = op.apply(self.basis.slice(j))?;
            for i in 0..self.basis.len().min(j + 2) {
                r.axpy(-self.hessenberg[(i, j)], self.basis.slice(i))?;
            }
            worst = worst.max(fro_norm(&r));
        }
        Ok(worst)
    }
}

fn check_square(op: &dyn LinearTensorOperator) -> Result<()> {
    if op.domain_shape() != op.codomain_shape() {
        return Err(dim_err(format!(
            "Arnoldi needs a square operator, got {} -> {}",
            op.domain_shape(),
            op.codomain_shape()
        )));
    }
    Ok(())
}

/// Global Arnoldi process with modified Gram–Schmidt.
pub fn global_arnoldi(
    op: &dyn LinearTensorOperator,
    v0: &DenseTensor,
    m: usize,
    opts: KrylovOptions,
) -> Result<ArnoldiDecomposition> {
    check_square(op)?;
    trailing_shape(v0, op.domain_shape())?;
    if m == 0 {
        return Err(Error::Parameter("Arnoldi needs at least one step".into()));
    }
    let beta = fro_norm(v0);
    if beta == 0.0 {
        return Err(Error::InvalidStart("Arnoldi start tensor is zero"));
    }
    let mut basis = TensorStack::new(v0.shape().clone());
    basis.push(v0.scaled(1.0 / beta))?;
    let mut h = DMatrix::zeros(m + 1, m);
    let mut breakdown = None;
    let mut steps = m;

    for j in 0..m {
        let mut w = op.apply(basis.slice(j))?;
        let w_norm = fro_norm(&w);
        for i in 0..=j {
            let hij = dot(basis.slice(i).data(), w.data());
            h[(i, j)] = hij;
            w.axpy(-hij, basis.slice(i))?;
        }
        if opts.reorthogonalize {
            for i in 0..=j {
                let c = dot(basis.slice(i).data(), w.data());
                h[(i, j)] += c;
                w.axpy(-c, basis.slice(i))?;
            }
        }
        let next = fro_norm(&w);
        if next <= opts.breakdown_tol * w_norm {
            h[(j + 1, j)] = 0.0;
            breakdown = Some(j + 1);
            steps = j + 1;
            break;
        }
        h[(j + 1, j)] = next;
        w.scale_mut(1.0 / next);
        basis.push(w)?;
    }

    let hessenberg = h.view((0, 0), (steps + 1, steps)).into_owned();
    Ok(ArnoldiDecomposition {
        basis,
        hessenberg,
        beta,
        breakdown,
    })
}

/// Which coefficient vanished during bidiagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgkbBreakdown {
    /// `ρ_j = 0`: the decomposition holds `j - 1` complete steps.
    Rho { step: usize },
    /// `σ_{j+1} = 0`: step `j` is complete but `U_{j+1}` does not exist.
    Sigma { step: usize },
}

/// Left lower bidiagonal matrices `C_ℓ` and `C̃_ℓ` of a bidiagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalMatrices {
    pub c: DMatrix<f64>,
    pub c_tilde: DMatrix<f64>,
}

impl BidiagonalMatrices {
    /// From `ρ_1..ρ_ℓ` and `σ_1..σ_{ℓ+1}`.
    pub fn from_coefficients(rho: &[f64], sigma: &[f64]) -> Result<Self> {
        let l = rho.len();
        if l == 0 || sigma.len() != l + 1 {
            return Err(dim_err(format!(
                "need ℓ ≥ 1 diagonal and ℓ + 1 subdiagonal coefficients, got {} and {}",
                rho.len(),
                sigma.len()
            )));
        }
        let mut c_tilde = DMatrix::zeros(l + 1, l);
        for j in 0..l {
            c_tilde[(j, j)] = rho[j];
            c_tilde[(j + 1, j)] = sigma[j + 1];
        }
        let c = c_tilde.rows(0, l).into_owned();
        Ok(BidiagonalMatrices { c, c_tilde })
    }

    pub fn steps(&self) -> usize {
        self.c.ncols()
    }
}

/// State of a global Golub–Kahan bidiagonalization started from `C`.
#[derive(Debug, Clone)]
pub struct GgkbDecomposition {
    u: TensorStack,
    retain_u: bool,
    v_basis: TensorStack,
    rho: Vec<f64>,
    sigma: Vec<f64>,
    breakdown: Option<GgkbBreakdown>,
    opts: KrylovOptions,
    applications: usize,
}

impl GgkbDecomposition {
    /// Starts the process without taking any step.
    ///
    /// With `retain_u = false` only the newest `U_j` is kept, which halves
    /// the memory of long runs; the `U` basis is then unavailable.
    pub fn start(c: &DenseTensor, retain_u: bool, opts: KrylovOptions) -> Result<Self> {
        let sigma1 = fro_norm(c);
        if sigma1 == 0.0 {
            return Err(Error::InvalidStart("GGKB right-hand side is zero"));
        }
        let mut u = TensorStack::new(c.shape().clone());
        u.push(c.scaled(1.0 / sigma1))?;
        Ok(GgkbDecomposition {
            u,
            retain_u,
            v_basis: TensorStack::new(c.shape().clone()),
            rho: Vec::new(),
            sigma: vec![sigma1],
            breakdown: None,
            opts,
            applications: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `σ_1..σ_{ℓ+1}`.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `‖C‖_F`.
    pub fn sigma1(&self) -> f64 {
        self.sigma[0]
    }

    pub fn v_basis(&self) -> &TensorStack {
        &self.v_basis
    }

    /// `U_1..U_{ℓ+1}` when retained.
    pub fn u_basis(&self) -> Option<&TensorStack> {
        self.retain_u.then_some(&self.u)
    }

    pub fn breakdown(&self) -> Option<GgkbBreakdown> {
        self.breakdown
    }

    /// Operator and adjoint applications performed so far.
    pub fn applications(&self) -> usize {
        self.applications
    }

    pub fn bidiagonal(&self) -> Result<BidiagonalMatrices> {
        BidiagonalMatrices::from_coefficients(&self.rho, &self.sigma[..self.rho.len() + 1])
    }

    /// Runs `extra` further steps; fails if the process already broke down.
    pub fn extend(&mut self, op: &dyn LinearTensorOperator, extra: usize) -> Result<()> {
        if let Some(b) = self.breakdown {
            let step = match b {
                GgkbBreakdown::Rho { step } | GgkbBreakdown::Sigma { step } => step,
            };
            return Err(Error::Extension { step });
        }
        for _ in 0..extra {
            if !self.step(op)? {
                break;
            }
        }
        Ok(())
    }

    /// One recurrence step; returns false on breakdown.
    fn step(&mut self, op: &dyn LinearTensorOperator) -> Result<bool> {
        let j = self.rho.len() + 1;
        let u_j = self.u.last().expect("U_j always present").clone();
        let sigma_j = self.sigma[j - 1];

        let mut v = op.apply_transpose(&u_j)?;
        self.applications += 1;
        let v_ref = fro_norm(&v);
        if let Some(prev) = self.v_basis.last() {
            v.axpy(-sigma_j, prev)?;
        }
        if self.opts.reorthogonalize {
            for s in self.v_basis.slices() {
                let c = dot(s.data(), v.data());
                v.axpy(-c, s)?;
            }
        }
        let rho_j = fro_norm(&v);
        if rho_j <= self.opts.breakdown_tol * v_ref {
            self.breakdown = Some(GgkbBreakdown::Rho { step: j });
            return Ok(false);
        }
        v.scale_mut(1.0 / rho_j);

        let mut u = op.apply(&v)?;
        self.applications += 1;
        let u_ref = fro_norm(&u);
        u.axpy(-rho_j, &u_j)?;
        if self.opts.reorthogonalize && self.retain_u {
            for s in self.u.slices() {
                let c = dot(s.data(), u.data());
                u.axpy(-c, s)?;
            }
        }
        let sigma_next = fro_norm(&u);
        self.rho.push(rho_j);
        self.v_basis.push(v)?;
        if sigma_next <= self.opts.breakdown_tol * u_ref {
            self.sigma.push(0.0);
            self.breakdown = Some(GgkbBreakdown::Sigma { step: j });
            return Ok(false);
        }
        self.sigma.push(sigma_next);
        u.scale_mut(1.0 / sigma_next);
        if !self.retain_u {
            self.u.pop_front();
        }
        self.u.push(u)?;
        Ok(true)
    }

    /// Largest slice norms of `W_ℓ - U_{ℓ+1} x C̃ᵀ` and `W*_ℓ - V_ℓ x Cᵀ`.
    ///
    /// Needs the retained `U` basis.
    pub fn factorization_residuals(&self, op: &dyn LinearTensorOperator) -> Result<(f64, f64)> {
        let u = self
            .u_basis()
            .ok_or_else(|| Error::Parameter("U basis was not retained".into()))?;
        let (mut forward, mut adjoint) = (0.0f64, 0.0f64);
        for j in 0..self.steps() {
            let v_j = self.v_basis.slice(j);
            let mut r = op.apply(v_j)?;
            r.axpy(-self.rho[j], u.slice(j))?;
            if j + 1 < u.len() {
                r.axpy(-self.sigma[j + 1], u.slice(j + 1))?;
            }
            forward = forward.max(fro_norm(&r));

            let mut s = op.apply_transpose(u.slice(j))?;
            s.axpy(-self.rho[j], v_j)?;
            if j > 0 {
                s.axpy(-self.sigma[j], self.v_basis.slice(j - 1))?;
            }
            adjoint = adjoint.max(fro_norm(&s));
        }
        Ok((forward, adjoint))
    }
}

/// `ell` steps of global Golub–Kahan bidiagonalization with the `U` basis kept.
pub fn ggkb(
    op: &dyn LinearTensorOperator,
    c: &DenseTensor,
    ell: usize,
    opts: KrylovOptions,
) -> Result<GgkbDecomposition> {
    trailing_shape(c, op.codomain_shape())?;
    if ell == 0 {
        return Err(Error::Parameter("GGKB needs at least one step".into()));
    }
    let mut dec = GgkbDecomposition::start(c, true, opts)?;
    dec.extend(op, ell)?;
    Ok(dec)
}

/// Continues `dec` by `extra` steps.
pub fn extend_ggkb(
    mut dec: GgkbDecomposition,
    op: &dyn LinearTensorOperator,
    extra: usize,
) -> Result<GgkbDecomposition> {
    dec.extend(op, extra)?;
    Ok(dec)
}
