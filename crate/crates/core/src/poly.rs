//! Multivariate polynomials over the power basis.
//!
//! Coefficients live in a dense tensor of shape `(max_degree + 1)^arity`,
//! flattened lexicographically over `(l_1, ..., l_D)` with `l_D` varying
//! fastest. Every matrix in the crate (basis change, affine transform,
//! dynamics, noise) indexes rows and columns in this same order.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::num::{powi, tensor_len};
use crate::{Error, Result};

/// Exponent vector `[l_1, ..., l_D]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|l| = sum_d l_d`.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Position of this index in a degree-`degree` tensor.
    pub fn flat(&self, degree: usize) -> usize {
        flat_index(&self.0, degree)
    }

    pub fn from_flat(flat: usize, degree: usize, arity: usize) -> Self {
        MultiIndex(unflatten(flat, degree, arity))
    }
}

/// Canonical flat position of `idx` in a tensor with per-dimension degree `degree`.
#[inline]
pub fn flat_index(idx: &[usize], degree: usize) -> usize {
    idx.iter().fold(0, |acc, &l| acc * (degree + 1) + l)
}

/// Inverse of [`flat_index`].
pub fn unflatten(mut flat: usize, degree: usize, arity: usize) -> Vec<usize> {
    let mut idx = vec![0; arity];
    for slot in idx.iter_mut().rev() {
        *slot = flat % (degree + 1);
        flat /= degree + 1;
    }
    idx
}

/// All multi-indices of a degree-`degree` tensor in canonical order.
pub fn multi_indices(degree: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..tensor_len(degree, arity)).map(move |f| unflatten(f, degree, arity))
}

/// Multi-indices kept by a cumulative-degree template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeMask {
    pub degree: usize,
    pub arity: usize,
    pub kept: BTreeSet<MultiIndex>,
}

impl DegreeMask {
    /// Flat positions of the kept indices inside the maximal-degree tensor,
    /// ascending.
    pub fn flat_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.kept.iter().map(|i| i.flat(self.degree)).collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

/// Indices with `|l| <= degree`.
pub fn cumulative_mask(degree: usize, arity: usize) -> DegreeMask {
    let kept = multi_indices(degree, arity)
        .filter(|l| l.iter().sum::<usize>() <= degree)
        .map(MultiIndex)
        .collect();
    DegreeMask { degree, arity, kept }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoly")]
pub struct MultiPoly {
    arity: usize,
    max_degree: usize,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPoly {
    arity: usize,
    max_degree: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawPoly> for MultiPoly {
    type Error = Error;

    fn try_from(raw: RawPoly) -> Result<Self> {
        MultiPoly::new(raw.arity, raw.max_degree, raw.coeffs)
    }
}

impl MultiPoly {
    pub fn new(arity: usize, max_degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ArityMismatch { expected: 1, got: 0 });
        }
        let expected = tensor_len(max_degree, arity);
        if coeffs.len() != expected {
            return Err(Error::CoeffCount { expected, got: coeffs.len() });
        }
        Ok(Self { arity, max_degree, coeffs })
    }

    pub fn zero(arity: usize, max_degree: usize) -> Self {
        Self { arity, max_degree, coeffs: vec![0.0; tensor_len(max_degree, arity)] }
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        Self { arity, max_degree: 0, coeffs: vec![c] }
    }

    /// The coordinate polynomial `x_j` (0-based `j`).
    pub fn variable(arity: usize, j: usize) -> Self {
        let mut p = Self::zero(arity, 1);
        let mut idx = vec![0; arity];
        idx[j] = 1;
        p.coeffs[flat_index(&idx, 1)] = 1.0;
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` terms.
    pub fn from_terms(arity: usize, terms: &[(&[usize], f64)]) -> Result<Self> {
        let max_degree = terms
            .iter()
            .flat_map(|(e, _)| e.iter().copied())
            .max()
            .unwrap_or(0);
        let mut p = Self::zero(arity, max_degree);
        for (e, c) in terms {
            if e.len() != arity {
                return Err(Error::ArityMismatch { expected: arity, got: e.len() });
            }
            p.coeffs[flat_index(e, max_degree)] += c;
        }
        Ok(p)
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, idx: &[usize]) -> f64 {
        if idx.iter().any(|&l| l > self.max_degree) {
            0.0
        } else {
            self.coeffs[flat_index(idx, self.max_degree)]
        }
    }

    /// Highest exponent actually carrying a non-zero coefficient.
    pub fn effective_degree(&self) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(f, _)| {
                unflatten(f, self.max_degree, self.arity).into_iter().max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: x.len() });
        }
        Ok(eval_coeffs(&self.coeffs, self.max_degree, x))
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        if other.arity != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: other.arity });
        }
        let deg = self.max_degree + other.max_degree;
        let mut out = MultiPoly::zero(self.arity, deg);
        for (fa, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ia = unflatten(fa, self.max_degree, self.arity);
            for (fb, &b) in other.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let ib = unflatten(fb, other.max_degree, self.arity);
                let pos = ia.iter().zip(&ib).fold(0, |acc, (x, y)| acc * (deg + 1) + x + y);
                out.coeffs[pos] += a * b;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.arity, 1.0);
        for _ in 0..k {
            acc = acc.mul(self).expect("same arity");
        }
        acc
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        if other.arity != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: other.arity });
        }
        let deg = self.max_degree.max(other.max_degree);
        let mut out = self.embed(deg)?;
        let o = other.embed(deg)?;
        out.coeffs.iter_mut().zip(&o.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> MultiPoly {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= k);
        out
    }

    pub fn neg(&self) -> MultiPoly {
        self.scale(-1.0)
    }

    /// Re-expresses the polynomial at a higher maximal degree, padding with zeros.
    pub fn embed(&self, degree: usize) -> Result<MultiPoly> {
        let coeffs = embed(&self.coeffs, self.max_degree, degree, self.arity)?;
        Ok(MultiPoly { arity: self.arity, max_degree: degree, coeffs })
    }
}

/// Evaluates a coefficient tensor of degree `degree` at `x`.
pub fn eval_coeffs(coeffs: &[f64], degree: usize, x: &[f64]) -> f64 {
    let arity = x.len();
    let powers: Vec<Vec<f64>> =
        x.iter().map(|&xi| (0..=degree).map(|k| powi(xi, k)).collect()).collect();
    // odometer over multi-indices in canonical order
    let mut idx = vec![0usize; arity];
    let mut total = 0.0;
    for &c in coeffs {
        if c != 0.0 {
            let mut term = c;
            for (j, &l) in idx.iter().enumerate() {
                term *= powers[j][l];
            }
            total += term;
        }
        for j in (0..arity).rev() {
            idx[j] += 1;
            if idx[j] <= degree {
                break;
            }
            idx[j] = 0;
        }
    }
    total
}

/// Zero-pads a degree-`from` coefficient tensor to degree `to`.
pub fn embed(coeffs: &[f64], from: usize, to: usize, arity: usize) -> Result<Vec<f64>> {
    if to < from {
        return Err(Error::DegreeTooLow { source_degree: from, target: to });
    }
    let expected = tensor_len(from, arity);
    if coeffs.len() != expected {
        return Err(Error::CoeffCount { expected, got: coeffs.len() });
    }
    let mut out = vec![0.0; tensor_len(to, arity)];
    for (f, &c) in coeffs.iter().enumerate() {
        out[flat_index(&unflatten(f, from, arity), to)] = c;
    }
    Ok(out)
}

/// Column positions of a degree-`from` tensor inside a degree-`to` tensor;
/// the non-zero pattern of the embedding matrix.
pub fn embedding_positions(from: usize, to: usize, arity: usize) -> Vec<usize> {
    (0..tensor_len(from, arity))
        .map(|f| flat_index(&unflatten(f, from, arity), to))
        .collect()
}
