//! Axis-aligned boxes, the affine change of argument onto the unit box, and
//! the four region families a synthesis problem is built from.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::num::{powi, Binomials};
use crate::poly::MultiPoly;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRect")]
pub struct HyperRect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize)]
struct RawRect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<RawRect> for HyperRect {
    type Error = Error;

    fn try_from(raw: RawRect) -> Result<Self> {
        HyperRect::new(raw.lo, raw.hi)
    }
}

impl HyperRect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::ArityMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a.partial_cmp(b) != Some(core::cmp::Ordering::Less)) {
            return Err(Error::DegenerateRect);
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(arity: usize) -> Self {
        Self { lo: vec![0.0; arity], hi: vec![1.0; arity] }
    }

    pub fn arity(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn volume(&self) -> f64 {
        (0..self.arity()).map(|j| self.width(j)).product()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.arity()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a < *v && *v < *b)
    }

    pub fn contains_rect(&self, other: &HyperRect) -> bool {
        (0..self.arity()).all(|j| self.lo[j] <= other.lo[j] && other.hi[j] <= self.hi[j])
    }

    /// Whether the open interiors overlap.
    pub fn interiors_overlap(&self, other: &HyperRect) -> bool {
        (0..self.arity()).all(|j| self.lo[j] < other.hi[j] && other.lo[j] < self.hi[j])
    }

    pub fn intersection(&self, other: &HyperRect) -> Option<HyperRect> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        HyperRect::new(lo, hi).ok()
    }

    /// Expands every side by `margin`.
    pub fn padded(&self, margin: f64) -> HyperRect {
        HyperRect {
            lo: self.lo.iter().map(|v| v - margin).collect(),
            hi: self.hi.iter().map(|v| v + margin).collect(),
        }
    }

    /// `kappa^D` equal sub-boxes in canonical order (last dimension fastest).
    pub fn subdivide(&self, kappa: usize) -> Result<Vec<HyperRect>> {
        if kappa == 0 {
            return Err(Error::ZeroSubdivision);
        }
        if kappa == 1 {
            return Ok(vec![self.clone()]);
        }
        let d = self.arity();
        let cut = |j: usize, k: usize| {
            if k == kappa {
                self.hi[j]
            } else {
                self.lo[j] + self.width(j) * k as f64 / kappa as f64
            }
        };
        let total = kappa.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        for f in 0..total {
            let cell = crate::poly::unflatten(f, kappa - 1, d);
            let lo = cell.iter().enumerate().map(|(j, &k)| cut(j, k)).collect();
            let hi = cell.iter().enumerate().map(|(j, &k)| cut(j, k + 1)).collect();
            out.push(HyperRect { lo, hi });
        }
        Ok(out)
    }

    /// Halves at the midpoint of dimension `dim` (0-based).
    pub fn bisect(&self, dim: usize) -> (HyperRect, HyperRect) {
        let mid = 0.5 * (self.lo[dim] + self.hi[dim]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[dim] = mid;
        right.lo[dim] = mid;
        (left, right)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.arity();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| if mask >> (d - 1 - j) & 1 == 1 { self.hi[j] } else { self.lo[j] })
                    .collect()
            })
            .collect()
    }

    /// Exact bit-level key, used for fingerprints and ordering.
    pub fn key(&self) -> Vec<u64> {
        self.lo.iter().chain(&self.hi).map(|v| v.to_bits()).collect()
    }

    /// Point of the box at unit-box coordinates `u`.
    pub fn map_from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(j, &t)| self.lo[j] + self.width(j) * t).collect()
    }
}

/// One-dimensional affine factor for `x = lo + (hi - lo) u`: entry `(l, i)` is
/// `C(i, l) s^l t^(i - l)` for `i >= l`, with `s = hi - lo`, `t = lo`.
pub fn affine_1d(lo: f64, hi: f64, m: usize) -> Result<Matrix> {
    let binom = Binomials::new(m)?;
    let (s, t) = (hi - lo, lo);
    Ok(Matrix::from_fn(m + 1, m + 1, |l, i| {
        if i >= l {
            binom.get(i, l) * powi(s, l) * powi(t, i - l)
        } else {
            0.0
        }
    }))
}

/// Per-dimension factors of the affine map `T^Y` for degree `m`.
pub fn affine_factors(rect: &HyperRect, m: usize) -> Result<Vec<Matrix>> {
    (0..rect.arity()).map(|j| affine_1d(rect.lo[j], rect.hi[j], m)).collect()
}

/// `T^Y`: maps power coefficients of `a(x)` to those of `a(lo + s∘u)` in `u`,
/// so the infimum over `rect` equals the infimum of the image over `[0, 1]^D`.
pub fn affine_matrix(rect: &HyperRect, m: usize, arity: usize) -> Result<Matrix> {
    if rect.arity() != arity {
        return Err(Error::ArityMismatch { expected: arity, got: rect.arity() });
    }
    Ok(Matrix::kron(&affine_factors(rect, m)?))
}

/// Applies `T^Y` to a polynomial.
pub fn affine_poly(p: &MultiPoly, rect: &HyperRect) -> Result<MultiPoly> {
    if rect.arity() != p.arity() {
        return Err(Error::ArityMismatch { expected: p.arity(), got: rect.arity() });
    }
    let b = Matrix::from_row_major(p.coeffs().len(), 1, p.coeffs().to_vec())?;
    let out = Matrix::kron_apply(&affine_factors(rect, p.max_degree())?, &b)?;
    MultiPoly::new(p.arity(), p.max_degree(), out.into_vec())
}

/// Covers `outer` minus the union of `holes` with interior-disjoint boxes.
///
/// Each hole is removed by sweeping dimensions in index order: the slab below
/// and the slab above the hole along that dimension are emitted, then the
/// remainder is narrowed to the hole's extent and the sweep continues.
pub fn rect_cover_difference(outer: &HyperRect, holes: &[HyperRect]) -> Vec<HyperRect> {
    let mut pieces = vec![outer.clone()];
    for hole in holes {
        pieces = pieces.into_iter().flat_map(|p| difference(&p, hole)).collect();
    }
    pieces
}

fn difference(piece: &HyperRect, hole: &HyperRect) -> Vec<HyperRect> {
    if !piece.interiors_overlap(hole) {
        return vec![piece.clone()];
    }
    let mut out = Vec::new();
    let mut cur = piece.clone();
    for j in 0..piece.arity() {
        if cur.lo[j] < hole.lo[j] {
            let mut below = cur.clone();
            below.hi[j] = hole.lo[j];
            out.push(below);
            cur.lo[j] = hole.lo[j];
        }
        if cur.hi[j] > hole.hi[j] {
            let mut above = cur.clone();
            above.lo[j] = hole.hi[j];
            out.push(above);
            cur.hi[j] = hole.hi[j];
        }
    }
    out
}

/// The frame `pad(X) \ X` as boxes (same sweep as [`rect_cover_difference`]).
pub fn pad_frame(domain: &HyperRect, margin: f64) -> Result<Vec<HyperRect>> {
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::InvalidProblem("frame margin must be positive".into()));
    }
    Ok(rect_cover_difference(&domain.padded(margin), core::slice::from_ref(domain)))
}

/// Which constraint family a box belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// `B >= 0`
    Domain,
    /// `E[B(f(x) + v)] - B(x) <= gamma`
    Safe,
    /// `B >= 1`
    Unsafe,
    /// `B <= eta`
    Init,
}

impl RegionKind {
    pub const ALL: [RegionKind; 4] =
        [RegionKind::Domain, RegionKind::Safe, RegionKind::Unsafe, RegionKind::Init];
}

/// The four families `(Q, Q_s, Q_u, Q_0)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionPartition {
    pub domain: Vec<HyperRect>,
    pub safe: Vec<HyperRect>,
    #[serde(rename = "unsafe")]
    pub unsafe_: Vec<HyperRect>,
    pub init: Vec<HyperRect>,
}

impl RegionPartition {
    /// Builds the families for a box state space `x_set` with box obstacles
    /// and box initial sets. With a margin, a frame of unsafe boxes surrounds
    /// `x_set` and the padded box becomes the non-negativity domain.
    pub fn from_sets(
        x_set: &HyperRect,
        unsafe_rects: &[HyperRect],
        init_rects: &[HyperRect],
        frame_margin: Option<f64>,
    ) -> Result<Self> {
        let d = x_set.arity();
        for r in unsafe_rects.iter().chain(init_rects) {
            if r.arity() != d {
                return Err(Error::ArityMismatch { expected: d, got: r.arity() });
            }
        }
        let clipped: Vec<HyperRect> =
            unsafe_rects.iter().filter_map(|u| u.intersection(x_set)).collect();
        let mut unsafe_ = Vec::new();
        let domain = match frame_margin {
            Some(margin) => {
                unsafe_.extend(pad_frame(x_set, margin)?);
                vec![x_set.padded(margin)]
            }
            None => vec![x_set.clone()],
        };
        unsafe_.extend(clipped.iter().cloned());
        let safe = rect_cover_difference(x_set, &clipped);
        let part = RegionPartition { domain, safe, unsafe_, init: init_rects.to_vec() };
        part.validate()?;
        Ok(part)
    }

    pub fn arity(&self) -> usize {
        self.domain.first().map(HyperRect::arity).unwrap_or(0)
    }

    pub fn family(&self, kind: RegionKind) -> &[HyperRect] {
        match kind {
            RegionKind::Domain => &self.domain,
            RegionKind::Safe => &self.safe,
            RegionKind::Unsafe => &self.unsafe_,
            RegionKind::Init => &self.init,
        }
    }

    pub fn family_mut(&mut self, kind: RegionKind) -> &mut Vec<HyperRect> {
        match kind {
            RegionKind::Domain => &mut self.domain,
            RegionKind::Safe => &mut self.safe,
            RegionKind::Unsafe => &mut self.unsafe_,
            RegionKind::Init => &mut self.init,
        }
    }

    /// Every box with its family, in canonical region order.
    pub fn iter(&self) -> impl Iterator<Item = (RegionKind, &HyperRect)> {
        RegionKind::ALL
            .into_iter()
            .flat_map(move |k| self.family(k).iter().map(move |r| (k, r)))
    }

    pub fn len(&self) -> usize {
        self.domain.len() + self.safe.len() + self.unsafe_.len() + self.init.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Replaces every box by its `kappa^D` children.
    pub fn subdivide(&self, kappa: usize) -> Result<RegionPartition> {
        let split = |v: &[HyperRect]| -> Result<Vec<HyperRect>> {
            let mut out = Vec::new();
            for r in v {
                out.extend(r.subdivide(kappa)?);
            }
            Ok(out)
        };
        Ok(RegionPartition {
            domain: split(&self.domain)?,
            safe: split(&self.safe)?,
            unsafe_: split(&self.unsafe_)?,
            init: split(&self.init)?,
        })
    }

    /// Whether `x` lies in some safe box (closed).
    pub fn in_safe(&self, x: &[f64]) -> bool {
        self.safe.iter().any(|r| r.contains(x))
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.is_empty() {
            return Err(Error::InvalidProblem("empty domain family".into()));
        }
        if self.safe.is_empty() {
            return Err(Error::InvalidProblem("empty safe family".into()));
        }
        let d = self.arity();
        if self.iter().any(|(_, r)| r.arity() != d) {
            return Err(Error::InvalidProblem("mixed arities".into()));
        }
        let inside_domain =
            |r: &HyperRect| self.domain.iter().any(|dom| dom.contains_rect(r));
        if !self.safe.iter().chain(&self.unsafe_).chain(&self.init).all(inside_domain) {
            return Err(Error::InvalidProblem("box outside the domain".into()));
        }
        for s in &self.safe {
            if self.unsafe_.iter().any(|u| u.interiors_overlap(s)) {
                return Err(Error::InvalidProblem("safe and unsafe boxes overlap".into()));
            }
        }
        for i in &self.init {
            if self.unsafe_.iter().any(|u| u.interiors_overlap(i)) {
                return Err(Error::InvalidProblem("initial set meets the unsafe set".into()));
            }
            let covered: f64 =
                self.safe.iter().filter_map(|s| s.intersection(i)).map(|r| r.volume()).sum();
            if covered < i.volume() * (1.0 - 1e-9) {
                return Err(Error::InvalidProblem("initial set not inside the safe set".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(lo: &[f64], hi: &[f64]) -> HyperRect {
        HyperRect::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn rect_validation() {
        assert_eq!(HyperRect::new(vec![0.0], vec![0.0]), Err(Error::DegenerateRect));
        assert!(HyperRect::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn affine_examples() {
        let id = affine_matrix(&HyperRect::unit(2), 3, 2).unwrap();
        assert_eq!(id, Matrix::identity(16));

        let sq = MultiPoly::new(1, 2, vec![0.25, -1.0, 1.0]).unwrap();
        let t = affine_poly(&sq, &rect(&[0.5], &[1.0])).unwrap();
        assert_eq!(t.coeffs(), &[0.0, 0.0, 0.25]);
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            assert!((sq.eval(&[0.5 * u + 0.5]).unwrap() - 0.25 * u * u).abs() < 1e-15);
        }

        let x = MultiPoly::new(1, 1, vec![0.0, 1.0]).unwrap();
        let t = affine_poly(&x, &rect(&[-1.0], &[1.0])).unwrap();
        assert_eq!(t.coeffs(), &[-1.0, 2.0]);
    }

    #[test]
    fn cover_difference_examples() {
        let unit = HyperRect::unit(2);
        assert_eq!(rect_cover_difference(&unit, &[]), vec![unit.clone()]);

        let hole = rect(&[0.4, 0.4], &[0.6, 0.6]);
        let cover = rect_cover_difference(&unit, &[hole.clone()]);
        assert_eq!(cover.len(), 4);
        let area: f64 = cover.iter().map(HyperRect::volume).sum();
        assert!((area - (1.0 - 0.04)).abs() < 1e-12);
        assert_eq!(cover[0], rect(&[0.0, 0.0], &[0.4, 1.0]));
        assert_eq!(cover[1], rect(&[0.6, 0.0], &[1.0, 1.0]));

        assert!(rect_cover_difference(&unit, &[unit.clone()]).is_empty());
    }

    #[test]
    fn frame_examples() {
        let f = pad_frame(&rect(&[0.0], &[1.0]), 0.1).unwrap();
        assert_eq!(f, vec![rect(&[-0.1], &[0.0]), rect(&[1.0], &[1.1])]);

        let x = rect(&[-1.0, -0.5], &[0.5, 0.5]);
        let f = pad_frame(&x, 0.2).unwrap();
        assert_eq!(f.len(), 4);
        let area: f64 = f.iter().map(HyperRect::volume).sum();
        let padded = x.padded(0.2);
        assert!((area - (padded.volume() - x.volume())).abs() < 1e-12);
        for (i, a) in f.iter().enumerate() {
            assert!(!a.interiors_overlap(&x));
            for b in &f[i + 1..] {
                assert!(!a.interiors_overlap(b));
            }
        }
        assert!(pad_frame(&x, 0.0).is_err());
    }

    #[test]
    fn subdivide_and_bisect() {
        let r = rect(&[-1.0, 0.0], &[1.0, 2.0]);
        let kids = r.subdivide(2).unwrap();
        assert_eq!(kids[1], rect(&[-1.0, 1.0], &[0.0, 2.0]));
        let (a, b) = HyperRect::unit(2).bisect(0);
        assert_eq!(a, rect(&[0.0, 0.0], &[0.5, 1.0]));
        assert_eq!(b, rect(&[0.5, 0.0], &[1.0, 1.0]));
        assert_eq!(r.corners().len(), 4);
    }

    #[test]
    fn partition_from_sets() {
        let x = rect(&[-1.0, -0.5], &[0.5, 0.5]);
        let init = rect(&[-0.8, -0.2], &[-0.6, 0.0]);
        let p = RegionPartition::from_sets(&x, &[], &[init.clone()], Some(0.2)).unwrap();
        assert_eq!((p.domain.len(), p.safe.len(), p.unsafe_.len(), p.init.len()), (1, 1, 4, 1));

        let obstacle = rect(&[-0.7, -0.1], &[-0.5, 0.1]);
        assert!(RegionPartition::from_sets(&x, &[obstacle], &[init], Some(0.2)).is_err());
    }
}
