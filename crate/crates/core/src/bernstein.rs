//! Power-to-Bernstein basis conversion and range enclosures on the unit box.
//!
//! For a degree-`m` polynomial and any `m_plus >= m`, the Bernstein
//! coefficients of degree `m_plus` bracket the range of the polynomial on
//! `[0, 1]^D`. Raising `m_plus` or subdividing the box tightens the bracket.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::num::{tensor_len, Binomials, DEGREE_CAP};
use crate::poly::MultiPoly;
use crate::regions::HyperRect;
use crate::{Error, Result};

/// One-dimensional conversion matrix of shape `(m_plus + 1) x (m + 1)`:
/// entry `(l, i)` is `C(l, i) / C(m_plus, i)` for `i <= l`.
pub fn phi_1d(m: usize, m_plus: usize) -> Result<Matrix> {
    if m_plus < m {
        return Err(Error::DegreeTooLow { source_degree: m, target: m_plus });
    }
    let binom = Binomials::new(m_plus)?;
    Ok(Matrix::from_fn(m_plus + 1, m + 1, |l, i| {
        if i <= l {
            binom.get(l, i) / binom.get(m_plus, i)
        } else {
            0.0
        }
    }))
}

/// Full conversion matrix `Φ` mapping degree-`m` power coefficients to
/// degree-`m_plus` Bernstein coefficients in `arity` variables.
pub fn phi_matrix(m: usize, m_plus: usize, arity: usize) -> Result<Matrix> {
    let f = phi_1d(m, m_plus)?;
    Ok(Matrix::kron(&vec![f; arity]))
}

/// Cache of one-dimensional conversion factors keyed by `(m, m_plus)`.
///
/// Full matrices are Kronecker products of these factors, so caching the
/// factors covers every arity.
#[derive(Debug, Default, Clone)]
pub struct PhiCache {
    factors: BTreeMap<(usize, usize), Matrix>,
}

impl PhiCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, m: usize, m_plus: usize) -> Result<&Matrix> {
        match self.factors.entry((m, m_plus)) {
            Entry::Occupied(e) => Ok(e.into_mut()),
            Entry::Vacant(e) => Ok(e.insert(phi_1d(m, m_plus)?)),
        }
    }

    pub fn matrix(&mut self, m: usize, m_plus: usize, arity: usize) -> Result<Matrix> {
        let f = self.factor(m, m_plus)?.clone();
        Ok(Matrix::kron(&vec![f; arity]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinCoeffs {
    pub degree: usize,
    pub arity: usize,
    pub beta: Vec<f64>,
}

impl BernsteinCoeffs {
    /// Value of `sum_l beta_l phi_l(x)` at `x` by direct basis evaluation.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let binom = Binomials::new(self.degree).expect("degree within cap");
        let n = self.degree;
        let basis: Vec<Vec<f64>> = x
            .iter()
            .map(|&t| {
                (0..=n)
                    .map(|l| {
                        binom.get(n, l)
                            * crate::num::powi(t, l)
                            * crate::num::powi(1.0 - t, n - l)
                    })
                    .collect()
            })
            .collect();
        self.beta
            .iter()
            .enumerate()
            .map(|(f, b)| {
                let idx = crate::poly::unflatten(f, n, self.arity);
                idx.iter().enumerate().fold(*b, |acc, (j, &l)| acc * basis[j][l])
            })
            .sum()
    }
}

/// Certified bracket of a polynomial's range on the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lower: f64,
    pub upper: f64,
    pub degree_used: usize,
    /// Worst-case slack between `lower` and the true minimum. Not computed;
    /// always `+inf`.
    pub gap_bound: f64,
}

pub fn to_bernstein(p: &MultiPoly, m_plus: usize) -> Result<BernsteinCoeffs> {
    let f = phi_1d(p.max_degree(), m_plus)?;
    let b = Matrix::from_row_major(p.coeffs().len(), 1, p.coeffs().to_vec())?;
    let beta = Matrix::kron_apply(&vec![f; p.arity()], &b)?.into_vec();
    Ok(BernsteinCoeffs { degree: m_plus, arity: p.arity(), beta })
}

/// Smallest Bernstein coefficient; never above the minimum over `[0, 1]^D`.
pub fn lower_bound(beta: &BernsteinCoeffs) -> f64 {
    beta.beta.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn upper_bound(beta: &BernsteinCoeffs) -> f64 {
    beta.beta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Range enclosure over `[0, 1]^D`, widened outward by a bound on the rounding
/// error of the coefficient conversion so it holds in floating point too.
pub fn enclosure(p: &MultiPoly, m_plus: usize) -> Result<Enclosure> {
    let beta = to_bernstein(p, m_plus)?;
    let l1: f64 = p.coeffs().iter().map(|c| c.abs()).sum();
    let ops = (p.arity() * (m_plus + 2) + 2) as f64;
    let slack = 2.0 * ops * f64::EPSILON * l1;
    Ok(Enclosure {
        lower: lower_bound(&beta) - slack,
        upper: upper_bound(&beta) + slack,
        degree_used: m_plus,
        gap_bound: f64::INFINITY,
    })
}

/// Bernstein coefficients of `p` over an arbitrary box, via the affine change
/// of argument onto `[0, 1]^D`.
pub fn bernstein_on_rect(p: &MultiPoly, rect: &HyperRect, m_plus: usize) -> Result<BernsteinCoeffs> {
    let shifted = crate::regions::affine_poly(p, rect)?;
    to_bernstein(&shifted, m_plus)
}

/// Splits `[0, 1]^arity` into `kappa^arity` equal boxes in canonical order.
pub fn subdivide_unit_box(kappa: usize, arity: usize) -> Result<Vec<HyperRect>> {
    HyperRect::unit(arity).subdivide(kappa)
}

/// Guard used by callers that build tables up to a requested degree.
pub fn check_degree(d: usize) -> Result<()> {
    if d > DEGREE_CAP {
        Err(Error::DegreeCap(d))
    } else {
        Ok(())
    }
}

/// Number of Bernstein coefficients of degree `m_plus` in `arity` variables.
pub fn coeff_count(m_plus: usize, arity: usize) -> usize {
    tensor_len(m_plus, arity)
}
