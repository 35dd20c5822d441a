//! Minimal dense row-major matrices.
//!
//! Every operator in this crate (basis changes, affine maps, dynamics and noise
//! maps) is a small dense matrix acting on coefficient vectors in canonical
//! multi-index order, so a plain `Vec<f64>` backing store is enough.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} to a vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(mut self, k: f64) -> Matrix {
        self.data.iter_mut().for_each(|v| *v *= k);
        self
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, keep.len(), |r, c| self.get(r, keep[c]))
    }

    /// Kronecker product `factors[0] ⊗ factors[1] ⊗ ...`.
    ///
    /// With the last factor varying fastest this matches the canonical
    /// multi-index order used for coefficient tensors.
    pub fn kron(factors: &[Matrix]) -> Matrix {
        let mut acc = Matrix::identity(1);
        for f in factors {
            acc = Matrix::from_fn(acc.rows * f.rows, acc.cols * f.cols, |r, c| {
                acc.get(r / f.rows, c / f.cols) * f.get(r % f.rows, c % f.cols)
            });
        }
        acc
    }

    /// Computes `(factors[0] ⊗ ... ⊗ factors[D-1]) · rhs` without forming the
    /// Kronecker product, by applying each factor along its tensor axis.
    pub fn kron_apply(factors: &[Matrix], rhs: &Matrix) -> Result<Matrix> {
        let in_len: usize = factors.iter().map(Matrix::cols).product();
        if in_len != rhs.rows {
            return Err(Error::Shape(format!(
                "Kronecker operator with {in_len} columns applied to {} rows",
                rhs.rows
            )));
        }
        let n = rhs.cols;
        let mut dims: Vec<usize> = factors.iter().map(Matrix::cols).collect();
        let mut data = rhs.data.clone();
        for (axis, f) in factors.iter().enumerate() {
            let outer: usize = dims[..axis].iter().product();
            let inner: usize = dims[axis + 1..].iter().product::<usize>() * n;
            let (c_in, r_out) = (f.cols, f.rows);
            let mut next = vec![0.0; outer * r_out * inner];
            for a in 0..outer {
                for r in 0..r_out {
                    let dst = &mut next[(a * r_out + r) * inner..(a * r_out + r + 1) * inner];
                    for c in 0..c_in {
                        let w = f.get(r, c);
                        if w == 0.0 {
                            continue;
                        }
                        let src = &data[(a * c_in + c) * inner..(a * c_in + c + 1) * inner];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
            dims[axis] = r_out;
            data = next;
        }
        let rows = dims.iter().product();
        Ok(Matrix { rows, cols: n, data })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_major(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn matmul_small() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(2, 1, &[1.0, -1.0]);
        assert_eq!(a.matmul(&b).unwrap().as_slice(), &[-1.0, -1.0]);
        assert!(b.matmul(&b).is_err());
    }

    #[test]
    fn kron_apply_matches_explicit_kron() {
        let a = m(3, 2, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let b = m(2, 3, &[0.2, 0.0, 1.0, -2.0, 1.5, 0.7]);
        let c = m(2, 2, &[1.0, 4.0, -0.3, 0.9]);
        let g = Matrix::from_fn(12, 3, |r, c| (r as f64 * 0.37 - c as f64).sin_free());
        let full = Matrix::kron(&[a.clone(), b.clone(), c.clone()]);
        let direct = full.matmul(&g).unwrap();
        let fast = Matrix::kron_apply(&[a, b, c], &g).unwrap();
        assert_eq!(direct.rows(), fast.rows());
        for (x, y) in direct.as_slice().iter().zip(fast.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    trait SinFree {
        fn sin_free(self) -> f64;
    }
    impl SinFree for f64 {
        // cheap deterministic scramble without libm
        fn sin_free(self) -> f64 {
            let x = self * 12.9898;
            x - (x as i64) as f64 - 0.5
        }
    }
}
