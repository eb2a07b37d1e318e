//! Index-loop oracles and random problem generators shared by the
//! integration tests and the acceptance harness.
#![allow(dead_code)]

use einkrylov::operators::{ExplicitOperator, LinearTensorOperator};
use einkrylov::tensor::{DenseTensor, Shape, TensorStack};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

pub fn random(d: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let s = shape(d);
    let data = (0..s.numel()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    DenseTensor::from_vec(s, data).unwrap()
}

/// All multi-indices of `dims` in row-major order.
pub fn indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..d).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `(A *_N B)_{i..j..} = Σ_k a_{i..k..} b_{k..j..}` by explicit loops.
pub fn einstein_loop(a: &DenseTensor, b: &DenseTensor, n: usize) -> Vec<f64> {
    let lead = &a.dims()[..a.order() - n];
    let contracted = &a.dims()[a.order() - n..];
    let trail = &b.dims()[n..];
    let mut out = Vec::new();
    for i in indices(lead) {
        for j in indices(trail) {
            let mut s = 0.0;
            for k in indices(contracted) {
                let ai: Vec<usize> = i.iter().chain(&k).copied().collect();
                let bi: Vec<usize> = k.iter().chain(&j).copied().collect();
                s += a.get(&ai) * b.get(&bi);
            }
            out.push(s);
        }
    }
    out
}

/// `b_{j..i..} = a_{i..j..}` with the first `split` modes forming `i`.
pub fn transpose_loop(a: &DenseTensor, split: usize) -> Vec<f64> {
    let (first, second) = a.dims().split_at(split);
    let mut out = Vec::new();
    for j in indices(second) {
        for i in indices(first) {
            let ai: Vec<usize> = i.iter().chain(&j).copied().collect();
            out.push(a.get(&ai));
        }
    }
    out
}

/// `(X ×_n U)_{..r..} = Σ_i x_{..i..} u_{r i}`.
pub fn nmode_loop(x: &DenseTensor, u: &DMatrix<f64>, mode: usize) -> Vec<f64> {
    let mut dims = x.dims().to_vec();
    dims[mode] = u.nrows();
    let mut out = Vec::new();
    for idx in indices(&dims) {
        let mut s = 0.0;
        for i in 0..x.dims()[mode] {
            let mut xi = idx.clone();
            xi[mode] = i;
            s += x.get(&xi) * u[(idx[mode], i)];
        }
        out.push(s);
    }
    out
}

/// `Σ_i x_{..i..} v_i` with mode `mode` removed.
pub fn nmode_vec_loop(x: &DenseTensor, v: &[f64], mode: usize) -> Vec<f64> {
    let mut dims = x.dims().to_vec();
    dims.remove(mode);
    let mut out = Vec::new();
    for idx in indices(&dims) {
        let mut s = 0.0;
        for (i, vi) in v.iter().enumerate() {
            let mut xi = idx.clone();
            xi.insert(mode, i);
            s += x.get(&xi) * vi;
        }
        out.push(s);
    }
    out
}

/// Gram matrix of two stacks by summing over every element.
pub fn box_loop(x: &TensorStack, y: &TensorStack) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), y.len(), |i, j| {
        let (a, b) = (x.slice(i).data(), y.slice(j).data());
        let mut s = 0.0;
        for k in 0..a.len() {
            s += a[k] * b[k];
        }
        s
    })
}

pub fn random_stack(slices: usize, d: &[usize], rng: &mut ChaCha8Rng) -> TensorStack {
    TensorStack::from_slices((0..slices).map(|_| random(d, rng)).collect()).unwrap()
}

/// Random shape with at most `max_elems` elements and `order` modes.
pub fn random_dims(order: usize, max_elems: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let d: Vec<usize> = (0..order).map(|_| rng.gen_range(1..=4)).collect();
        if d.iter().product::<usize>() <= max_elems {
            return d;
        }
    }
}

/// Row-major matrix view of a square operator tensor `dims x dims`.
pub fn op_matrix(t: &DenseTensor, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, t.data())
}

pub fn to_matrix(x: &DenseTensor, rows: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, x.len() / rows, x.data())
}

/// `shift I + G / sqrt(n)` with standard normal `G`; for `shift = 3` the
/// condition number stays well below 1e3.
pub fn well_conditioned_op(d: &[usize], shift: f64, rng: &mut ChaCha8Rng) -> ExplicitOperator {
    let n: usize = d.iter().product();
    let scale = 1.0 / (n as f64).sqrt();
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            data.push(g * scale + if r == c { shift } else { 0.0 });
        }
    }
    let dims: Vec<usize> = d.iter().chain(d).copied().collect();
    ExplicitOperator::square(DenseTensor::from_vec(shape(&dims), data).unwrap()).unwrap()
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    s.max() / s.min()
}

/// Operator with geometrically decaying singular values `decay^k`, built
/// as `U diag(s) Vᵀ` from random orthogonal factors.
pub fn ill_posed_op(d: &[usize], decay: f64, rng: &mut ChaCha8Rng) -> ExplicitOperator {
    let n: usize = d.iter().product();
    let g1 = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let g2 = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = g1.qr().q();
    let v = g2.qr().q();
    let s = DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| decay.powi(k as i32)));
    let a = u * s * v.transpose();
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            data.push(a[(r, c)]);
        }
    }
    let dims: Vec<usize> = d.iter().chain(d).copied().collect();
    ExplicitOperator::square(DenseTensor::from_vec(shape(&dims), data).unwrap()).unwrap()
}

pub fn residual_norm(op: &dyn LinearTensorOperator, x: &DenseTensor, c: &DenseTensor) -> f64 {
    let ax = op.apply(x).unwrap();
    einkrylov::tensor::fro_norm(&ax.sub(c).unwrap())
}

/// `φ(μ) = ‖A X_μ - C‖²` where `X_μ` solves `(AᵀA + μ⁻¹ I) X = AᵀC`.
pub fn phi_dense(a: &DMatrix<f64>, c: &DMatrix<f64>, mu: f64) -> f64 {
    let n = a.ncols();
    let lhs = a.transpose() * a + DMatrix::identity(n, n) / mu;
    let x = lhs.lu().solve(&(a.transpose() * c)).unwrap();
    (a * x - c).norm_squared()
}

/// Classical Arnoldi with modified Gram–Schmidt on vectors.
pub fn classical_arnoldi(a: &DMatrix<f64>, v0: &DVector<f64>, m: usize) -> (Vec<DVector<f64>>, DMatrix<f64>) {
    let mut v = vec![v0 / v0.norm()];
    let mut h = DMatrix::zeros(m + 1, m);
    for j in 0..m {
        let mut w = a * &v[j];
        for i in 0..=j {
            h[(i, j)] = w.dot(&v[i]);
            w -= &v[i] * h[(i, j)];
        }
        h[(j + 1, j)] = w.norm();
        v.push(w / h[(j + 1, j)]);
    }
    (v, h)
}

/// Classical Golub–Kahan lower bidiagonalization; returns `(ρ, σ)`.
pub fn classical_golub_kahan(a: &DMatrix<f64>, c: &DVector<f64>, l: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sigma = vec![c.norm()];
    let mut u = c / sigma[0];
    let mut v_prev = DVector::zeros(a.ncols());
    let mut rho = Vec::new();
    for j in 0..l {
        let vt = a.transpose() * &u - &v_prev * sigma[j];
        let r = vt.norm();
        let v = vt / r;
        let ut = a * &v - &u * r;
        let s = ut.norm();
        rho.push(r);
        sigma.push(s);
        u = ut / s;
        v_prev = v;
    }
    (rho, sigma)
}
