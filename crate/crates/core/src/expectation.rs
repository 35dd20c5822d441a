//! Coefficients of the expected barrier after one step of
//! `x' = f(x) + v`.
//!
//! With `F` holding the coefficients of `prod_j f_j(x)^{i_j}` column by column
//! and `E[Γ]` the binomial moment map, the power coefficients of
//! `E[B(f(x) + v)]` are `F · E[Γ]ᵀ · b`.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::num::{powi, tensor_len, Binomials};
use crate::poly::{embedding_positions, unflatten, MultiPoly};
use crate::{Error, Result};

/// Per-dimension raw moments: `per_dim[j][k] = E[v_j^k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMoments {
    pub per_dim: Vec<Vec<f64>>,
}

impl NoiseMoments {
    pub fn new(per_dim: Vec<Vec<f64>>) -> Result<Self> {
        for table in &per_dim {
            if table.first() != Some(&1.0) {
                return Err(Error::InvalidProblem("moment tables must start with E[v^0] = 1".into()));
            }
            if table.iter().step_by(2).any(|&m| m < 0.0) {
                return Err(Error::InvalidProblem("even moments must be non-negative".into()));
            }
        }
        Ok(Self { per_dim })
    }

    /// Noise-free moments (`v = 0`).
    pub fn zero(arity: usize, kmax: usize) -> Self {
        let mut t = alloc::vec![0.0; kmax + 1];
        t[0] = 1.0;
        Self { per_dim: alloc::vec![t; arity] }
    }

    pub fn arity(&self) -> usize {
        self.per_dim.len()
    }

    /// Highest order available in every dimension.
    pub fn max_order(&self) -> usize {
        self.per_dim.iter().map(|t| t.len().saturating_sub(1)).min().unwrap_or(0)
    }

    pub fn get(&self, dim: usize, k: usize) -> f64 {
        self.per_dim[dim][k]
    }
}

/// Moments of independent centred Gaussians: zero for odd `k`,
/// `sigma^k (k - 1)!!` for even `k`.
pub fn gaussian_moments(sigma: &[f64], kmax: usize) -> Result<NoiseMoments> {
    if sigma.iter().any(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::InvalidProblem("standard deviations must be non-negative".into()));
    }
    let per_dim = sigma
        .iter()
        .map(|&s| {
            let mut t = Vec::with_capacity(kmax + 1);
            let mut double_fact = 1.0;
            for k in 0..=kmax {
                if k % 2 == 1 {
                    t.push(0.0);
                } else {
                    if k >= 2 {
                        double_fact *= (k - 1) as f64;
                    }
                    t.push(powi(s, k) * double_fact);
                }
            }
            t
        })
        .collect();
    Ok(NoiseMoments { per_dim })
}

/// System vector field, one polynomial per state dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub f: Vec<MultiPoly>,
}

impl DynamicsSpec {
    pub fn new(f: Vec<MultiPoly>) -> Result<Self> {
        let d = f.len();
        for fi in &f {
            if fi.arity() != d {
                return Err(Error::ArityMismatch { expected: d, got: fi.arity() });
            }
        }
        Ok(Self { f })
    }

    /// `f(x) = a x` in every dimension.
    pub fn linear_diagonal(arity: usize, a: f64) -> Self {
        let f = (0..arity).map(|j| MultiPoly::variable(arity, j).scale(a)).collect();
        Self { f }
    }

    pub fn arity(&self) -> usize {
        self.f.len()
    }

    /// Per-dimension degrees `n_d`.
    pub fn degrees(&self) -> Vec<usize> {
        self.f.iter().map(MultiPoly::max_degree).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.f.iter().map(|fi| fi.eval(x)).collect()
    }
}

/// Degree `p = m * sum_d n_d` of the composed polynomial.
pub fn composed_degree(dynamics: &DynamicsSpec, m: usize) -> usize {
    (m * dynamics.degrees().iter().sum::<usize>()).max(m)
}

/// One-dimensional factor of `E[Γ]`: entry `(l, i)` is `C(l, i) E[v^{l-i}]`
/// for `i <= l`.
pub fn gamma_1d(table: &[f64], m: usize) -> Result<Matrix> {
    if table.len() <= m {
        return Err(Error::MissingMoments { needed: m, available: table.len().saturating_sub(1) });
    }
    let binom = Binomials::new(m)?;
    Ok(Matrix::from_fn(m + 1, m + 1, |l, i| {
        if i <= l {
            binom.get(l, i) * table[l - i]
        } else {
            0.0
        }
    }))
}

/// Element-wise expectation of the noise matrix `Γ`, rows indexed by `l` and
/// columns by `i` in canonical order. Lower triangular with unit diagonal.
pub fn gamma_expect(moments: &NoiseMoments, m: usize, arity: usize) -> Result<Matrix> {
    if moments.arity() != arity {
        return Err(Error::ArityMismatch { expected: arity, got: moments.arity() });
    }
    let factors: Result<Vec<Matrix>> =
        moments.per_dim.iter().map(|t| gamma_1d(t, m)).collect();
    Ok(Matrix::kron(&factors?))
}

/// `F`: column `i` holds the coefficients of `prod_j f_j^{i_j}` at degree `p`.
pub fn dynamics_matrix(dynamics: &DynamicsSpec, m: usize) -> Result<Matrix> {
    let d = dynamics.arity();
    let p = composed_degree(dynamics, m);
    let powers: Vec<Vec<MultiPoly>> = dynamics
        .f
        .iter()
        .map(|fj| {
            let mut v = Vec::with_capacity(m + 1);
            v.push(MultiPoly::constant(d, 1.0));
            for k in 1..=m {
                let next = v[k - 1].mul(fj)?;
                v.push(next);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let rows = tensor_len(p, d);
    let cols = tensor_len(m, d);
    let mut out = Matrix::zeros(rows, cols);
    for c in 0..cols {
        let idx = unflatten(c, m, d);
        let mut prod = MultiPoly::constant(d, 1.0);
        for (j, &k) in idx.iter().enumerate() {
            if k > 0 {
                prod = prod.mul(&powers[j][k])?;
            }
        }
        let col = prod.embed(p).map_err(|_| {
            Error::Shape(format!("product degree {} exceeds composed degree {p}", prod.max_degree()))
        })?;
        for (r, &v) in col.coeffs().iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Coefficients (degree `p`) of `E[B(f(x) + v)]`.
pub fn expected_composition(f: &Matrix, egamma: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if egamma.rows() != b.len() || f.cols() != egamma.cols() {
        return Err(Error::Shape(format!(
            "F is {}x{}, E[Γ] is {}x{}, b has {} entries",
            f.rows(),
            f.cols(),
            egamma.rows(),
            egamma.cols(),
            b.len()
        )));
    }
    let weights = egamma.transpose().matvec(b)?;
    f.matvec(&weights)
}

/// Coefficients (degree `p`) of `E[B(f(x) + v)] - B(x)`.
pub fn martingale_gap_coeffs(
    f: &Matrix,
    egamma: &Matrix,
    b: &[f64],
    m: usize,
    p: usize,
) -> Result<Vec<f64>> {
    let mut out = expected_composition(f, egamma, b)?;
    let arity = arity_of(b.len(), m)?;
    if out.len() != tensor_len(p, arity) {
        return Err(Error::Shape(format!("F has {} rows, expected degree {p}", out.len())));
    }
    for (src, dst) in embedding_positions(m, p, arity).into_iter().enumerate() {
        out[dst] -= b[src];
    }
    Ok(out)
}

/// The linear map `F E[Γ]ᵀ - Δ` from degree-`m` to degree-`p` coefficients.
pub fn martingale_gap_matrix(f: &Matrix, egamma: &Matrix, m: usize, p: usize) -> Result<Matrix> {
    let mut g = f.matmul(&egamma.transpose())?;
    let arity = arity_of(egamma.rows(), m)?;
    if g.rows() != tensor_len(p, arity) {
        return Err(Error::Shape(format!("F has {} rows, expected degree {p}", g.rows())));
    }
    for (src, dst) in embedding_positions(m, p, arity).into_iter().enumerate() {
        g.set(dst, src, g.get(dst, src) - 1.0);
    }
    Ok(g)
}

fn arity_of(len: usize, m: usize) -> Result<usize> {
    let mut d = 0;
    let mut n = 1;
    while n < len {
        n *= m + 1;
        d += 1;
        if m == 0 {
            break;
        }
    }
    if n != len {
        return Err(Error::Shape(format!("{len} coefficients is not a degree-{m} tensor")));
    }
    Ok(d.max(1))
}
