//! Linear operators `A` acting on the leading modes of a tensor.
//!
//! An operator maps tensors of shape `domain x T` to `codomain x T` for any
//! trailing shape `T` (channels, frames, ...), acting identically on every
//! trailing index. Solvers only ever see [`LinearTensorOperator`], so the
//! blur can stay matrix-free.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{dim_err, Error, Result};
use crate::tensor::{dot, einstein_product, fro_norm, transpose_split, DenseTensor, Shape};

pub trait LinearTensorOperator: Send + Sync {
    /// Leading modes of the tensors `apply` accepts.
    fn domain_shape(&self) -> &Shape;

    /// Leading modes of the tensors `apply` returns.
    fn codomain_shape(&self) -> &Shape;

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor>;

    /// Exact adjoint of [`LinearTensorOperator::apply`] under the Frobenius
    /// inner product.
    fn apply_transpose(&self, y: &DenseTensor) -> Result<DenseTensor>;

    /// Number of contracted modes in `A *_N X`.
    fn n_contract(&self) -> usize {
        self.domain_shape().order()
    }
}

/// Checks that `x` starts with the modes of `lead` and returns the trailing shape.
pub(crate) fn trailing_shape(x: &DenseTensor, lead: &Shape) -> Result<Shape> {
    let k = lead.order();
    if x.order() < k || x.dims()[..k] != *lead.dims() {
        return Err(dim_err(format!(
            "operand of shape {} does not start with the operator modes {}",
            x.shape(),
            lead
        )));
    }
    Ok(x.shape().sub(k..x.order()))
}

/// Operator given by a dense coefficient tensor of shape `codomain x domain`.
#[derive(Debug, Clone)]
pub struct ExplicitOperator {
    tensor: DenseTensor,
    transposed: DenseTensor,
    domain: Shape,
    codomain: Shape,
}

impl ExplicitOperator {
    /// Wraps `tensor`; its last `n_contract` modes form the domain.
    pub fn new(tensor: DenseTensor, n_contract: usize) -> Result<Self> {
        if n_contract == 0 || n_contract >= tensor.order() {
            return Err(dim_err(format!(
                "cannot use the last {n_contract} modes of a tensor of shape {} as the domain",
                tensor.shape()
            )));
        }
        let split = tensor.order() - n_contract;
        let codomain = tensor.shape().sub(0..split);
        let domain = tensor.shape().sub(split..tensor.order());
        let transposed = transpose_split(&tensor, split)?;
        Ok(ExplicitOperator {
            tensor,
            transposed,
            domain,
            codomain,
        })
    }

    /// Square operator `I1..IN x I1..IN`.
    pub fn square(tensor: DenseTensor) -> Result<Self> {
        let order = tensor.order();
        if !order.is_multiple_of(2) || tensor.dims()[..order / 2] != tensor.dims()[order / 2..] {
            return Err(dim_err(format!("tensor of shape {} is not square", tensor.shape())));
        }
        Self::new(tensor, order / 2)
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    /// `A(a, b, :, :)` for a fourth-order operator: the row of coefficients
    /// producing output pixel `(a, b)`, laid out as an `N x N` matrix.
    pub fn block(&self, a: usize, b: usize) -> Result<nalgebra::DMatrix<f64>> {
        if self.tensor.order() != 4 {
            return Err(dim_err("blocks are defined for fourth-order operators"));
        }
        let d = self.tensor.dims();
        if a >= d[0] || b >= d[1] {
            return Err(dim_err(format!("block ({a}, {b}) out of range")));
        }
        Ok(nalgebra::DMatrix::from_fn(d[2], d[3], |i, j| {
            self.tensor.get(&[a, b, i, j])
        }))
    }
}

impl LinearTensorOperator for ExplicitOperator {
    fn domain_shape(&self) -> &Shape {
        &self.domain
    }

    fn codomain_shape(&self) -> &Shape {
        &self.codomain
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        einstein_product(&self.tensor, x, self.domain.order())
    }

    fn apply_transpose(&self, y: &DenseTensor) -> Result<DenseTensor> {
        einstein_product(&self.transposed, y, self.codomain.order())
    }
}

#[derive(Debug, Clone)]
pub struct IdentityOperator {
    shape: Shape,
}

impl IdentityOperator {
    pub fn new(shape: Shape) -> Self {
        IdentityOperator { shape }
    }
}

impl LinearTensorOperator for IdentityOperator {
    fn domain_shape(&self) -> &Shape {
        &self.shape
    }

    fn codomain_shape(&self) -> &Shape {
        &self.shape
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        trailing_shape(x, &self.shape)?;
        Ok(x.clone())
    }

    fn apply_transpose(&self, y: &DenseTensor) -> Result<DenseTensor> {
        self.apply(y)
    }
}

/// Sparse operator on flattened leading modes (compressed rows).
#[derive(Debug, Clone)]
pub struct SparseOperator {
    domain: Shape,
    codomain: Shape,
    forward: Csr,
    backward: Csr,
}

#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(rows: usize, mut triplets: Vec<(usize, usize, f64)>) -> Csr {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            row_ptr,
            cols: triplets.iter().map(|t| t.1).collect(),
            vals: triplets.iter().map(|t| t.2).collect(),
        }
    }

    fn apply(&self, x: &[f64], trailing: usize) -> Vec<f64> {
        let rows = self.row_ptr.len() - 1;
        let mut out = vec![0.0; rows * trailing];
        out.par_chunks_mut(trailing.max(1))
            .enumerate()
            .for_each(|(r, dst)| {
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    let c = self.cols[k];
                    let v = self.vals[k];
                    for (d, s) in dst.iter_mut().zip(&x[c * trailing..(c + 1) * trailing]) {
                        *d += v * s;
                    }
                }
            });
        out
    }
}

impl SparseOperator {
    /// Builds from `(row, col, value)` entries over the flattened modes.
    /// Duplicate entries are summed.
    pub fn from_triplets(codomain: Shape, domain: Shape, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        let (rows, cols) = (codomain.numel(), domain.numel());
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(dim_err(format!("entry ({r}, {c}) outside a {rows}x{cols} operator")));
        }
        let transposed = triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        Ok(SparseOperator {
            forward: Csr::from_triplets(rows, triplets),
            backward: Csr::from_triplets(cols, transposed),
            domain,
            codomain,
        })
    }

    pub fn nnz(&self) -> usize {
        self.forward.vals.len()
    }
}

impl LinearTensorOperator for SparseOperator {
    fn domain_shape(&self) -> &Shape {
        &self.domain
    }

    fn codomain_shape(&self) -> &Shape {
        &self.codomain
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let trailing = trailing_shape(x, &self.domain)?;
        let out = self.forward.apply(x.data(), trailing.numel());
        DenseTensor::from_vec(self.codomain.concat(&trailing), out)
    }

    fn apply_transpose(&self, y: &DenseTensor) -> Result<DenseTensor> {
        let trailing = trailing_shape(y, &self.codomain)?;
        let out = self.backward.apply(y.data(), trailing.numel());
        DenseTensor::from_vec(self.domain.concat(&trailing), out)
    }
}

/// Two-dimensional point spread function with odd extents.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    /// Zero-based position of the center pixel.
    center: (usize, usize),
}

impl PsfKernel {
    /// Kernel from row-major values; `center` defaults to the middle entry.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, center: Option<(usize, usize)>) -> Result<Self> {
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) {
            return Err(Error::Parameter(format!("PSF extents must be odd, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(dim_err(format!(
                "{}x{} PSF needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let center = center.unwrap_or((rows / 2, cols / 2));
        if center.0 >= rows || center.1 >= cols {
            return Err(Error::Parameter(format!("PSF center {center:?} outside {rows}x{cols}")));
        }
        Ok(PsfKernel {
            rows,
            cols,
            values,
            center,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Zero-based entry `p[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Copy rescaled to unit sum.
    pub fn normalized(&self) -> Result<Self> {
        let s = self.sum();
        if s == 0.0 {
            return Err(Error::Parameter("cannot normalize a PSF summing to zero".into()));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= s);
        Ok(out)
    }

    /// Kernel rotated by 180 degrees, with the center mapped along.
    pub fn flipped(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        PsfKernel {
            rows: self.rows,
            cols: self.cols,
            values,
            center: (self.rows - 1 - self.center.0, self.cols - 1 - self.center.1),
        }
    }

    /// Rows of space-separated decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:.17e}", self.get(i, j))).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: {tok:?}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Format(format!(
                        "line {} has {} values, expected {c}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            values.extend(row);
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Format("empty PSF file".into()))?;
        PsfKernel::new(rows, cols, values, None)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}

/// Gaussian PSF `p_ij = exp(-((i-k)/σ)²/2 - ((j-l)/σ)²/2)`, unnormalized.
///
/// `center` is zero-based and defaults to the middle pixel.
pub fn build_gaussian_psf(size: usize, sigma: f64, center: Option<(usize, usize)>) -> Result<PsfKernel> {
    if size.is_multiple_of(2) {
        return Err(Error::Parameter(format!("PSF size must be odd, got {size}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let (k, l) = center.unwrap_or((size / 2, size / 2));
    let mut values = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let di = (i as f64 - k as f64) / sigma;
            let dj = (j as f64 - l as f64) / sigma;
            values.push((-0.5 * di * di - 0.5 * dj * dj).exp());
        }
    }
    PsfKernel::new(size, size, values, Some((k, l)))
}

/// Matrix-free blur of the two leading `N x N` modes under zero boundary
/// conditions.
///
/// Output pixel `(i, j)` is `sum_ab p[a][b] X[i + k - a][j + l - b]` with
/// `(k, l)` the kernel center; pixels outside the image count as zero.
#[derive(Debug, Clone)]
pub struct PsfBlurOperator {
    kernel: PsfKernel,
    side: usize,
    shape: Shape,
    // correlation weights of the forward map, i.e. the flipped kernel
    forward: PsfKernel,
}

impl PsfBlurOperator {
    pub fn new(kernel: PsfKernel, side: usize) -> Result<Self> {
        let shape = Shape::new(vec![side, side])?;
        let forward = kernel.flipped();
        Ok(PsfBlurOperator {
            kernel,
            side,
            shape,
            forward,
        })
    }

    pub fn kernel(&self) -> &PsfKernel {
        &self.kernel
    }

    pub fn side(&self) -> usize {
        self.side
    }
}

/// `out[i][j] = sum_ab w[a][b] x[i + a - ca][j + b - cb]`, zero outside,
/// applied to every trailing block of length `t`.
fn correlate(w: &PsfKernel, x: &[f64], n: usize, t: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let (ca, cb) = (w.center.0 as isize, w.center.1 as isize);
    let n_i = n as isize;
    out.par_chunks_mut(n * t).enumerate().for_each(|(i, row)| {
        for a in 0..w.rows {
            let si = i as isize + a as isize - ca;
            if si < 0 || si >= n_i {
                continue;
            }
            let src_row = &x[si as usize * n * t..(si as usize + 1) * n * t];
            for b in 0..w.cols {
                let wv = w.values[a * w.cols + b];
                if wv == 0.0 {
                    continue;
                }
                let shift = b as isize - cb;
                let j_lo = (-shift).max(0) as usize;
                let j_hi = (n_i - shift).min(n_i).max(0) as usize;
                if j_lo >= j_hi {
                    continue;
                }
                let src_lo = (j_lo as isize + shift) as usize;
                let dst = &mut row[j_lo * t..j_hi * t];
                let src = &src_row[src_lo * t..(src_lo + j_hi - j_lo) * t];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += wv * s;
                }
            }
        }
    });
    out
}

impl LinearTensorOperator for PsfBlurOperator {
    fn domain_shape(&self) -> &Shape {
        &self.shape
    }

    fn codomain_shape(&self) -> &Shape {
        &self.shape
    }

    fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let trailing = trailing_shape(x, &self.shape)?;
        let out = correlate(&self.forward, x.data(), self.side, trailing.numel());
        DenseTensor::from_vec(x.shape().clone(), out)
    }

    fn apply_transpose(&self, y: &DenseTensor) -> Result<DenseTensor> {
        let trailing = trailing_shape(y, &self.shape)?;
        let out = correlate(&self.kernel, y.data(), self.side, trailing.numel());
        DenseTensor::from_vec(y.shape().clone(), out)
    }
}

/// Largest image side for which the dense `N⁴` operator is materialized.
pub const MAX_EXPLICIT_SIDE: usize = 32;

/// Nonzero `(output pixel, input pixel, weight)` entries of the blur with
/// flattened pixel indices `i * n + j`.
fn psf_entries(kernel: &PsfKernel, n: usize) -> Vec<(usize, usize, f64)> {
    let (k, l) = (kernel.center.0 as isize, kernel.center.1 as isize);
    let n_i = n as isize;
    let mut entries = Vec::new();
    for i in 0..n_i {
        for j in 0..n_i {
            for a in 0..kernel.rows {
                for b in 0..kernel.cols {
                    let p = kernel.get(a, b);
                    let si = i + k - a as isize;
                    let sj = j + l - b as isize;
                    if p == 0.0 || si < 0 || sj < 0 || si >= n_i || sj >= n_i {
                        continue;
                    }
                    entries.push(((i * n_i + j) as usize, (si * n_i + sj) as usize, p));
                }
            }
        }
    }
    entries
}

/// Dense fourth-order `N x N x N x N` blur tensor.
///
/// Block `A(a, b, :, :)` holds the weights for output pixel `(a, b)`; for a
/// 3x3 kernel centered at the middle its entry `(a-1, b-1)` is `p33`, entry
/// `(a, b)` is `p22`, and so on, with out-of-image entries dropped.
pub fn psf_to_explicit(kernel: &PsfKernel, n: usize) -> Result<ExplicitOperator> {
    if n < kernel.rows.max(kernel.cols) {
        return Err(Error::Parameter(format!(
            "image side {n} is smaller than the {}x{} PSF",
            kernel.rows, kernel.cols
        )));
    }
    if n > MAX_EXPLICIT_SIDE {
        return Err(Error::Parameter(format!(
            "refusing to materialize a dense {n}^4 operator (limit {MAX_EXPLICIT_SIDE})"
        )));
    }
    let shape = Shape::new(vec![n, n, n, n])?;
    let mut t = DenseTensor::zeros(shape);
    let nn = n * n;
    for (r, c, p) in psf_entries(kernel, n) {
        t.data_mut()[r * nn + c] += p;
    }
    ExplicitOperator::new(t, 2)
}

/// Sparse form of the same blur, usable well beyond the dense limit.
pub fn psf_to_sparse(kernel: &PsfKernel, n: usize) -> Result<SparseOperator> {
    let shape = Shape::new(vec![n, n])?;
    SparseOperator::from_triplets(shape.clone(), shape, psf_entries(kernel, n))
}

/// Worst relative adjoint defect `|<AX,Y> - <X,AᵀY>| / (‖X‖‖Y‖)` over random
/// trials, with a trailing mode of extent 2.
pub fn adjoint_residual(op: &dyn LinearTensorOperator, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Parameter("adjoint_residual needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trailing = Shape::new(vec![2])?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let xs = op.domain_shape().concat(&trailing);
        let ys = op.codomain_shape().concat(&trailing);
        let x = random_tensor(xs, &mut rng);
        let y = random_tensor(ys, &mut rng);
        let lhs = dot(op.apply(&x)?.data(), y.data());
        let rhs = dot(x.data(), op.apply_transpose(&y)?.data());
        worst = worst.max((lhs - rhs).abs() / (fro_norm(&x) * fro_norm(&y)));
    }
    Ok(worst)
}

pub(crate) fn random_tensor(shape: Shape, rng: &mut ChaCha8Rng) -> DenseTensor {
    let n = shape.numel();
    let data = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    DenseTensor::from_vec(shape, data).expect("length matches shape")
}
