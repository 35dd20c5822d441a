//! Scalar helpers that `core` does not provide.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest per-dimension degree for which binomial tables are built.
pub const DEGREE_CAP: usize = 64;

/// `x^k` by repeated squaring.
pub fn powi(mut x: f64, mut k: usize) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= x;
        }
        x *= x;
        k >>= 1;
    }
    acc
}

/// Pascal triangle up to row `n`, stored as rows of `f64`.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<f64>>,
}

impl Binomials {
    pub fn new(n: usize) -> Result<Self> {
        if n > DEGREE_CAP {
            return Err(Error::DegreeCap(n));
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut row = vec![1.0; i + 1];
            for k in 1..i {
                row[k] = rows[i - 1][k - 1] + rows[i - 1][k];
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    /// `C(n, k)`, zero when `k > n`.
    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.rows[n][k]
        }
    }
}

/// Number of coefficients of a maximal-degree tensor: `(degree + 1)^arity`.
#[inline]
pub fn tensor_len(degree: usize, arity: usize) -> usize {
    (degree + 1).pow(arity as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_multiplication() {
        assert_eq!(powi(2.0, 0), 1.0);
        assert_eq!(powi(2.0, 10), 1024.0);
        assert_eq!(powi(-0.5, 3), -0.125);
    }

    #[test]
    fn pascal_rows() {
        let b = Binomials::new(10).unwrap();
        assert_eq!(b.get(10, 5), 252.0);
        assert_eq!(b.get(4, 0), 1.0);
        assert_eq!(b.get(4, 4), 1.0);
        assert_eq!(b.get(3, 4), 0.0);
        assert!(Binomials::new(DEGREE_CAP + 1).is_err());
    }
}
