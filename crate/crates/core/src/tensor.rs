//! Dense row-major `f64` tensors and the handful of kernels the layers need.
//!
//! Shapes are checked explicitly; the only broadcast is a bias vector added
//! to every row of a matrix ([`Tensor::add_row_bias`]).

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

/// Below this many multiply-adds a matmul stays on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from caller-supplied data, rejecting non-finite values.
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim("tensor", shape, &[data.len()]));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                param: "tensor input".into(),
                detail: format!("element {i} is {}", data[i]),
            });
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Internal constructor for kernel outputs whose shape is known to be right.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self::from_raw(shape.to_vec(), vec![value; n])
    }

    pub fn scalar(value: f64) -> Self {
        Self::from_raw(vec![1], vec![value])
    }

    /// Builds a 2-D tensor from nested rows. Panics on ragged input; meant for tests and fixtures.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_raw(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    /// Extent of a 2-D tensor as `(rows, cols)`.
    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::dim(op, &self.shape, &[0, 0])),
        }
    }

    /// Extent of a 3-D tensor as `(batch, len, channels)`.
    pub fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [b, l, c] => Ok((b, l, c)),
            _ => Err(Error::dim(op, &self.shape, &[0, 0, 0])),
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::dim("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(op, &self.shape, &other.shape));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_map(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Self> {
        self.zip_map(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dim("add_assign", &self.shape, &other.shape));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        matmul(self, other)
    }

    /// Adds `bias` (length `cols`) to every row of a matrix.
    pub fn add_row_bias(&self, bias: &Tensor) -> Result<Tensor> {
        let (rows, cols) = self.dims2("add_row_bias")?;
        if bias.shape != [cols] {
            return Err(Error::dim("add_row_bias", &self.shape, &bias.shape));
        }
        let mut out = self.data.clone();
        for row in out.chunks_exact_mut(cols) {
            row.iter_mut().zip(&bias.data).for_each(|(v, b)| *v += b);
        }
        Ok(Self::from_raw(vec![rows, cols], out))
    }

    /// Column sums of a matrix, i.e. the gradient of a row-broadcast bias.
    pub fn sum_rows(&self) -> Result<Tensor> {
        let (_, cols) = self.dims2("sum_rows")?;
        let mut out = vec![0.0; cols];
        for row in self.data.chunks_exact(cols) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        Ok(Self::from_raw(vec![cols], out))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (r, c) = self.dims2("transpose")?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self::from_raw(vec![c, r], out))
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
        let rows = match parts.first() {
            Some(p) => p.dims2("concat_cols")?.0,
            None => return Err(Error::arg("concat_cols needs at least one part")),
        };
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (r, c) = p.dims2("concat_cols")?;
            if r != rows {
                return Err(Error::dim("concat_cols", &parts[0].shape, &p.shape));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&p.data[i * w..(i + 1) * w]);
            }
        }
        Ok(Self::from_raw(vec![rows, total], out))
    }

    /// Inverse of [`Tensor::concat_cols`].
    pub fn split_cols(&self, widths: &[usize]) -> Result<Vec<Tensor>> {
        let (rows, cols) = self.dims2("split_cols")?;
        if widths.iter().sum::<usize>() != cols {
            return Err(Error::dim("split_cols", &self.shape, widths));
        }
        let mut parts: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(rows * w)).collect();
        for row in self.data.chunks_exact(cols) {
            let mut off = 0;
            for (part, &w) in parts.iter_mut().zip(widths) {
                part.extend_from_slice(&row[off..off + w]);
                off += w;
            }
        }
        Ok(parts.into_iter().zip(widths).map(|(d, &w)| Self::from_raw(vec![rows, w], d)).collect())
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::arg(format!("shape extents must be positive, got {shape:?}")));
    }
    Ok(())
}

/// Standard matrix product of `a[m×k]` and `b[k×n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2("matmul")?;
    let (k2, n) = b.dims2("matmul")?;
    if k != k2 {
        return Err(Error::dim("matmul", &a.shape, &b.shape));
    }
    let mut out = vec![0.0; m * n];
    let row = |(i, out_row): (usize, &mut [f64])| {
        let a_row = &a.data[i * k..(i + 1) * k];
        for (p, &aip) in a_row.iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let b_row = &b.data[p * n..(p + 1) * n];
            out_row.iter_mut().zip(b_row).for_each(|(o, &bv)| *o += aip * bv);
        }
    };
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        out.par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out.chunks_mut(n).enumerate().for_each(row);
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

/// `aᵀ · b` for `a[k×m]`, `b[k×n]`, without materializing the transpose.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = a.dims2("matmul_tn")?;
    let (k2, n) = b.dims2("matmul_tn")?;
    if k != k2 {
        return Err(Error::dim("matmul_tn", &a.shape, &b.shape));
    }
    let mut out = vec![0.0; m * n];
    let row = |(i, out_row): (usize, &mut [f64])| {
        for p in 0..k {
            let aip = a.data[p * m + i];
            if aip == 0.0 {
                continue;
            }
            let b_row = &b.data[p * n..(p + 1) * n];
            out_row.iter_mut().zip(b_row).for_each(|(o, &bv)| *o += aip * bv);
        }
    };
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        out.par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out.chunks_mut(n).enumerate().for_each(row);
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

/// Dot product with eight independent partial sums so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (a8, b8) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = a8.remainder().iter().zip(b8.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in a8.zip(b8) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `a · bᵀ` for `a[m×k]`, `b[n×k]`.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2("matmul_nt")?;
    let (n, k2) = b.dims2("matmul_nt")?;
    if k != k2 {
        return Err(Error::dim("matmul_nt", &a.shape, &b.shape));
    }
    let mut out = vec![0.0; m * n];
    let row = |(i, out_row): (usize, &mut [f64])| {
        let a_row = &a.data[i * k..(i + 1) * k];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = &b.data[j * k..(j + 1) * k];
            *o = dot(a_row, b_row);
        }
    };
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        out.par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out.chunks_mut(n).enumerate().for_each(row);
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

/// Arithmetic mean along `axis`; the axis is dropped from the shape.
///
/// Reducing a rank-1 tensor yields a one-element tensor holding the scalar.
pub fn reduce_mean(a: &Tensor, axis: usize) -> Result<Tensor> {
    if axis >= a.rank() {
        return Err(Error::arg(format!("axis {axis} out of range for rank {}", a.rank())));
    }
    let outer: usize = a.shape[..axis].iter().product();
    let extent = a.shape[axis];
    let inner: usize = a.shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for e in 0..extent {
            let src = &a.data[(o * extent + e) * inner..(o * extent + e + 1) * inner];
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
        dst.iter_mut().for_each(|d| *d /= extent as f64);
    }
    let mut shape: Vec<usize> = a.shape.iter().enumerate().filter(|&(i, _)| i != axis).map(|(_, &s)| s).collect();
    if shape.is_empty() {
        shape.push(1);
    }
    Ok(Tensor::from_raw(shape, out))
}

/// He-normal initialization: samples from `N(0, 2 / fan_in)`.
pub fn he_init(fan_in: usize, shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    if fan_in == 0 {
        return Err(Error::arg("he_init requires fan_in >= 1"));
    }
    check_shape(shape)?;
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    let n = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(rng.inner())).collect();
    Ok(Tensor::from_raw(shape.to_vec(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul() {
        let eye = Tensor::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = Tensor::from_rows(&[&[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(matmul(&eye, &b).unwrap(), b);
    }

    #[test]
    fn dot_product_matmul() {
        let a = Tensor::from_rows(&[&[1.0, 2.0]]);
        let b = Tensor::from_rows(&[&[3.0], &[4.0]]);
        assert_eq!(matmul(&a, &b).unwrap().data(), &[11.0]);
    }

    #[test]
    fn zero_matmul() {
        let z = Tensor::zeros(&[2, 2]);
        let b = Tensor::from_rows(&[&[1.0, -2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let out = matmul(&z, &b).unwrap();
        assert_eq!(out.shape(), &[2, 3]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let msg = matmul(&a, &b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let mut rng = Rng::new(3);
        let a = he_init(1, &[4, 3], &mut rng).unwrap();
        let b = he_init(1, &[4, 5], &mut rng).unwrap();
        let c = he_init(1, &[6, 3], &mut rng).unwrap();
        let tn = matmul_tn(&a, &b).unwrap();
        let tn_ref = matmul(&a.transpose().unwrap(), &b).unwrap();
        let nt = matmul_nt(&a, &c).unwrap();
        let nt_ref = matmul(&a, &c.transpose().unwrap()).unwrap();
        for (x, y) in tn.data().iter().zip(tn_ref.data()).chain(nt.data().iter().zip(nt_ref.data())) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reduce_mean_cases() {
        let a = Tensor::from_rows(&[&[1.0, 3.0], &[5.0, 7.0]]);
        assert_eq!(reduce_mean(&a, 0).unwrap().data(), &[3.0, 5.0]);
        assert_eq!(reduce_mean(&a, 1).unwrap().data(), &[2.0, 6.0]);
        let single = Tensor::new(&[1], vec![4.25]).unwrap();
        assert_eq!(reduce_mean(&single, 0).unwrap().data(), &[4.25]);
        let flat = Tensor::full(&[3, 4, 2], 1.5);
        let m = reduce_mean(&flat, 1).unwrap();
        assert_eq!(m.shape(), &[3, 2]);
        assert!(m.data().iter().all(|&v| v == 1.5));
        assert!(reduce_mean(&a, 2).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(Tensor::new(&[2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::new(&[2], vec![1.0, f64::INFINITY]).is_err());
        assert!(Tensor::new(&[3], vec![1.0, 2.0]).is_err());
        assert!(Tensor::new(&[0], vec![]).is_err());
    }

    #[test]
    fn he_init_rejects_zero_fan_in() {
        assert!(he_init(0, &[2, 2], &mut Rng::new(0)).is_err());
    }

    #[test]
    fn he_init_moments() {
        let t = he_init(2, &[1_000_000], &mut Rng::new(11)).unwrap();
        let n = t.len() as f64;
        let mean = t.sum() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn he_init_deterministic() {
        let a = he_init(7, &[5, 9], &mut Rng::new(42)).unwrap();
        let b = he_init(7, &[5, 9], &mut Rng::new(42)).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn concat_then_split_is_identity() {
        let a = Tensor::from_rows(&[&[1.0], &[2.0]]);
        let b = Tensor::from_rows(&[&[3.0, 4.0], &[5.0, 6.0]]);
        let joined = Tensor::concat_cols(&[&a, &b]).unwrap();
        assert_eq!(joined.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let parts = joined.split_cols(&[1, 2]).unwrap();
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }
}
