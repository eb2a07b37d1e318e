//! Dense multiway arrays and Einstein-product algebra.
//!
//! Every tensor stores its entries contiguously in row-major order: the
//! last index varies fastest. A tensor of shape `I1 x .. x IN x J1 x .. x JM`
//! therefore reads as an `(I1..IN) x (J1..JM)` matrix without copying, which
//! is how contractions and transposes are carried out.

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};

/// Ordered list of mode extents.
///
/// The empty shape is the order-0 (scalar) shape with a single element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(dim_err(format!("mode {pos} has zero extent")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| dim_err("element count overflows usize"))?;
        Ok(Shape(dims))
    }

    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Shape made of the modes `range`.
    pub fn sub(&self, range: std::ops::Range<usize>) -> Shape {
        Shape(self.0[range].to_vec())
    }

    pub fn concat(&self, other: &Shape) -> Shape {
        let mut dims = self.0.clone();
        dims.extend_from_slice(&other.0);
        Shape(dims)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    /// Linear offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.0.len());
        index
            .iter()
            .zip(&self.0)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// Real multiway array with an explicit shape and row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(dim_err(format!(
                "shape {shape} holds {} entries but {} were given",
                shape.numel(),
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    /// Like [`DenseTensor::from_vec`] but rejects NaN and infinite entries.
    pub fn from_vec_finite(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Self::from_vec(shape, data)
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        DenseTensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let dims = shape.dims().to_vec();
        let mut index = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(shape.numel());
        for _ in 0..shape.numel() {
            data.push(f(&index));
            for k in (0..dims.len()).rev() {
                index[k] += 1;
                if index[k] < dims[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        DenseTensor { shape, data }
    }

    /// The identity tensor `I_N` of shape `dims x dims`.
    pub fn identity(dims: &Shape) -> Self {
        let n = dims.numel();
        let mut t = DenseTensor::zeros(dims.concat(dims));
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.shape.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let k = self.shape.offset(index);
        self.data[k] = value;
    }

    /// Same data under a different shape with the same element count.
    pub fn reshape(self, shape: Shape) -> Result<Self> {
        DenseTensor::from_vec(shape, self.data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn scale_mut(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(dim_err(format!(
                "shapes {} and {} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// Frobenius inner product of two tensors of equal shape.
pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    x.check_same_shape(y)?;
    Ok(dot(&x.data, &y.data))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fro_norm(x: &DenseTensor) -> f64 {
    dot(&x.data, &x.data).sqrt()
}

/// Trace of an even-order tensor `I1..IN x I1..IN`.
pub fn trace(a: &DenseTensor) -> Result<f64> {
    let order = a.order();
    if !order.is_multiple_of(2) || a.dims()[..order / 2] != a.dims()[order / 2..] {
        return Err(dim_err(format!("trace needs a square even-order tensor, got {}", a.shape())));
    }
    let n = a.shape().sub(0..order / 2).numel();
    Ok((0..n).map(|i| a.data[i * n + i]).sum())
}

/// Einstein product `A *_n B`: contracts the last `n_contract` modes of `a`
/// with the first `n_contract` modes of `b`.
pub fn einstein_product(a: &DenseTensor, b: &DenseTensor, n_contract: usize) -> Result<DenseTensor> {
    if n_contract > a.order() || n_contract > b.order() {
        return Err(dim_err(format!(
            "cannot contract {n_contract} modes of {} with {}",
            a.shape(),
            b.shape()
        )));
    }
    let lead = a.order() - n_contract;
    for k in 0..n_contract {
        if a.dims()[lead + k] != b.dims()[k] {
            return Err(dim_err(format!(
                "mode {} of the left operand (extent {}) does not match mode {} of the right operand (extent {})",
                lead + k,
                a.dims()[lead + k],
                k,
                b.dims()[k]
            )));
        }
    }
    let rows = a.shape().sub(0..lead).numel();
    let inner_len = a.shape().sub(lead..a.order()).numel();
    let cols = b.shape().sub(n_contract..b.order()).numel();
    let shape = a.shape().sub(0..lead).concat(&b.shape().sub(n_contract..b.order()));
    let mut out = vec![0.0; rows * cols];
    matmul_row_major(&a.data, &b.data, &mut out, rows, inner_len, cols);
    DenseTensor::from_vec(shape, out)
}

/// `out += a * b` with `a: rows x inner`, `b: inner x cols`, all row-major.
pub(crate) fn matmul_row_major(a: &[f64], b: &[f64], out: &mut [f64], rows: usize, inner: usize, cols: usize) {
    for i in 0..rows {
        let out_row = &mut out[i * cols..(i + 1) * cols];
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[k * cols..(k + 1) * cols];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
}

/// Moves the modes after `split` in front of the first `split` modes.
///
/// For `A` of shape `I1..IN x J1..JM` and `split = N`, the result has shape
/// `J1..JM x I1..IN` with `b[j.., i..] = a[i.., j..]`.
pub fn transpose_split(a: &DenseTensor, split: usize) -> Result<DenseTensor> {
    if split == 0 || split >= a.order() {
        return Err(dim_err(format!(
            "split {split} must lie in 1..{} for a tensor of order {}",
            a.order(),
            a.order()
        )));
    }
    let rows = a.shape().sub(0..split).numel();
    let cols = a.shape().sub(split..a.order()).numel();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a.data[i * cols + j];
        }
    }
    let shape = a.shape().sub(split..a.order()).concat(&a.shape().sub(0..split));
    DenseTensor::from_vec(shape, out)
}

/// n-mode product `X x_n U` (mode index is zero-based).
pub fn nmode_mat_product(x: &DenseTensor, u: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
    if mode >= x.order() {
        return Err(dim_err(format!("mode {mode} out of range for {}", x.shape())));
    }
    let extent = x.dims()[mode];
    if u.ncols() != extent {
        return Err(dim_err(format!(
            "matrix has {} columns but mode {mode} has extent {extent}",
            u.ncols()
        )));
    }
    let before = x.shape().sub(0..mode).numel();
    let after = x.shape().sub(mode + 1..x.order()).numel();
    let rows = u.nrows();
    let mut dims = x.dims().to_vec();
    dims[mode] = rows;
    let mut out = vec![0.0; before * rows * after];
    for p in 0..before {
        for i in 0..extent {
            let src = &x.data[(p * extent + i) * after..(p * extent + i + 1) * after];
            for j in 0..rows {
                let uji = u[(j, i)];
                if uji == 0.0 {
                    continue;
                }
                let dst = &mut out[(p * rows + j) * after..(p * rows + j + 1) * after];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += uji * s;
                }
            }
        }
    }
    DenseTensor::from_vec(Shape::new(dims)?, out)
}

/// n-mode product with a vector; the contracted mode disappears.
pub fn nmode_vec_product(x: &DenseTensor, v: &[f64], mode: usize) -> Result<DenseTensor> {
    if mode >= x.order() {
        return Err(dim_err(format!("mode {mode} out of range for {}", x.shape())));
    }
    let extent = x.dims()[mode];
    if v.len() != extent {
        return Err(dim_err(format!(
            "vector has length {} but mode {mode} has extent {extent}",
            v.len()
        )));
    }
    let before = x.shape().sub(0..mode).numel();
    let after = x.shape().sub(mode + 1..x.order()).numel();
    let mut out = vec![0.0; before * after];
    for p in 0..before {
        let dst = &mut out[p * after..(p + 1) * after];
        for (i, &vi) in v.iter().enumerate() {
            let src = &x.data[(p * extent + i) * after..(p * extent + i + 1) * after];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += vi * s;
            }
        }
    }
    let mut dims = x.dims().to_vec();
    dims.remove(mode);
    DenseTensor::from_vec(Shape::new(dims)?, out)
}

/// Ordered collection of same-shape tensors, read as one tensor whose last
/// mode indexes the slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorStack {
    slice_shape: Shape,
    slices: Vec<DenseTensor>,
}

impl TensorStack {
    pub fn new(slice_shape: Shape) -> Self {
        TensorStack {
            slice_shape,
            slices: Vec::new(),
        }
    }

    pub fn from_slices(slices: Vec<DenseTensor>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| dim_err("a stack built from slices needs at least one slice"))?;
        let mut stack = TensorStack::new(first.shape().clone());
        for s in slices {
            stack.push(s)?;
        }
        Ok(stack)
    }

    pub fn push(&mut self, slice: DenseTensor) -> Result<()> {
        if slice.shape() != &self.slice_shape {
            return Err(dim_err(format!(
                "slice of shape {} pushed onto a stack of {} slices",
                slice.shape(),
                self.slice_shape
            )));
        }
        self.slices.push(slice);
        Ok(())
    }

    pub fn slice_shape(&self) -> &Shape {
        &self.slice_shape
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[DenseTensor] {
        &self.slices
    }

    pub fn slice(&self, j: usize) -> &DenseTensor {
        &self.slices[j]
    }

    pub fn last(&self) -> Option<&DenseTensor> {
        self.slices.last()
    }

    pub fn truncate(&mut self, len: usize) {
        self.slices.truncate(len);
    }

    pub(crate) fn pop_front(&mut self) -> Option<DenseTensor> {
        if self.slices.is_empty() {
            None
        } else {
            Some(self.slices.remove(0))
        }
    }

    /// `stack x̄ y`: the linear combination `sum_j y_j S_j`.
    pub fn combine(&self, y: &[f64]) -> Result<DenseTensor> {
        if y.len() != self.slices.len() {
            return Err(dim_err(format!(
                "coefficient vector of length {} for a stack of {} slices",
                y.len(),
                self.slices.len()
            )));
        }
        let mut out = DenseTensor::zeros(self.slice_shape.clone());
        for (s, &c) in self.slices.iter().zip(y) {
            if c != 0.0 {
                out.axpy(c, s)?;
            }
        }
        Ok(out)
    }

    /// Dense `(order + 1)`-mode tensor whose last index selects the slice.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let m = self.slices.len();
        let n = self.slice_shape.numel();
        let mut data = vec![0.0; n * m];
        for (j, s) in self.slices.iter().enumerate() {
            for (p, &v) in s.data().iter().enumerate() {
                data[p * m + j] = v;
            }
        }
        let shape = self.slice_shape.concat(&Shape::new(vec![m])?);
        DenseTensor::from_vec(shape, data)
    }

    /// Splits a dense tensor into its frontal slices along the last mode.
    pub fn from_dense(t: &DenseTensor) -> Result<Self> {
        if t.order() == 0 {
            return Err(dim_err("cannot slice an order-0 tensor"));
        }
        let m = t.dims()[t.order() - 1];
        let slice_shape = t.shape().sub(0..t.order() - 1);
        let n = slice_shape.numel();
        let mut stack = TensorStack::new(slice_shape.clone());
        for j in 0..m {
            let data = (0..n).map(|p| t.data()[p * m + j]).collect();
            stack.push(DenseTensor::from_vec(slice_shape.clone(), data)?)?;
        }
        Ok(stack)
    }
}

/// The ⊠ product of two stacks: entry `(i, j)` is `<X_i, Y_j>`.
pub fn box_product(x: &TensorStack, y: &TensorStack) -> Result<DMatrix<f64>> {
    if x.slice_shape() != y.slice_shape() {
        return Err(dim_err(format!(
            "stacks with slice shapes {} and {}",
            x.slice_shape(),
            y.slice_shape()
        )));
    }
    Ok(DMatrix::from_fn(x.len(), y.len(), |i, j| {
        dot(x.slice(i).data(), y.slice(j).data())
    }))
}

/// The ⊠ product on dense tensors: contraction over all modes but the last.
pub fn box_product_dense(x: &DenseTensor, y: &DenseTensor) -> Result<DMatrix<f64>> {
    if x.order() == 0 || x.order() != y.order() || x.dims()[..x.order() - 1] != y.dims()[..y.order() - 1] {
        return Err(dim_err(format!(
            "⊠ product of {} and {} needs equal leading modes",
            x.shape(),
            y.shape()
        )));
    }
    let m = x.dims()[x.order() - 1];
    let mp = y.dims()[y.order() - 1];
    let rows = x.len() / m;
    let mut out = DMatrix::zeros(m, mp);
    for p in 0..rows {
        let xr = &x.data()[p * m..(p + 1) * m];
        let yr = &y.data()[p * mp..(p + 1) * mp];
        for (i, &xv) in xr.iter().enumerate() {
            for (j, &yv) in yr.iter().enumerate() {
                out[(i, j)] += xv * yv;
            }
        }
    }
    Ok(out)
}
