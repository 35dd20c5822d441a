//! Post-hoc checks of a certificate against its constraint families.
//!
//! [`sound_check`] re-derives Bernstein bounds at a tighter setting and can
//! only confirm a valid certificate. [`grid_falsify`] evaluates the barrier
//! and its expected increase pointwise and can only refute one.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::expectation::{
    composed_degree, dynamics_matrix, gamma_expect, martingale_gap_coeffs,
};
use crate::lp::{Assembler, Certificate, DegreeForm, Problem, SynthesisConfig};
use crate::num::tensor_len;
use crate::poly::{eval_coeffs, unflatten};
use crate::regions::{HyperRect, RegionKind};
use crate::Result;

pub const SOUND_TOLERANCE: f64 = 1e-6;
pub const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMethod {
    SoundBernstein,
    GridSample,
}

/// Worst slack of one constraint family. `None` when the family is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMargin {
    pub kind: RegionKind,
    pub worst_margin: Option<f64>,
    pub worst_region: Option<HyperRect>,
    /// Location of the worst sample (grid method only).
    pub worst_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub method: CheckMethod,
    pub margins: Vec<FamilyMargin>,
    pub pass: bool,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn margin(&self, kind: RegionKind) -> Option<f64> {
        self.margins.iter().find(|f| f.kind == kind).and_then(|f| f.worst_margin)
    }

    /// Families whose worst margin is below `-tolerance`.
    pub fn failing(&self) -> Vec<RegionKind> {
        self.margins
            .iter()
            .filter(|f| f.worst_margin.is_some_and(|m| m < -self.tolerance))
            .map(|f| f.kind)
            .collect()
    }
}

/// Bernstein degrees and subdivision used when re-checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub m_plus: usize,
    /// `None` means the composed degree.
    pub p_plus: Option<usize>,
    pub kappa: usize,
}

impl CheckConfig {
    /// `(m⁺ + extra, p⁺ + extra, kappa * factor)` relative to the certificate's
    /// synthesis settings.
    pub fn tighter_than(cert: &Certificate, extra_degree: usize, kappa_factor: usize) -> Self {
        let m = cert.barrier.max_degree();
        let meta = &cert.meta;
        Self {
            m_plus: meta.m_plus.max(m) + extra_degree,
            p_plus: (meta.p_plus > 0).then_some(meta.p_plus + extra_degree),
            kappa: meta.kappa.max(1) * kappa_factor.max(1),
        }
    }
}

fn fold_worst(slot: &mut FamilyMargin, margin: f64, rect: &HyperRect, point: Option<Vec<f64>>) {
    if slot.worst_margin.is_none_or(|w| margin < w) {
        slot.worst_margin = Some(margin);
        slot.worst_region = Some(rect.clone());
        slot.worst_point = point;
    }
}

fn empty_margins() -> Vec<FamilyMargin> {
    RegionKind::ALL
        .iter()
        .map(|&kind| FamilyMargin { kind, worst_margin: None, worst_region: None, worst_point: None })
        .collect()
}

/// Re-derives every Bernstein bound of the certificate over `problem`'s
/// partition, subdivided by `check.kappa`, and passes iff every margin is at
/// least `-tolerance`.
pub fn sound_check(
    cert: &Certificate,
    problem: &Problem,
    check: &CheckConfig,
    tolerance: f64,
) -> Result<VerificationReport> {
    let m = cert.barrier.max_degree();
    let p = composed_degree(&problem.dynamics, m);
    let cfg = SynthesisConfig {
        m,
        m_plus: check.m_plus.max(m),
        p_plus: Some(check.p_plus.unwrap_or(p).max(p)),
        kappa: check.kappa,
        horizon: cert.horizon,
        degree_form: DegreeForm::Maximal,
        coeff_bound: None,
    };
    let mut asm = Assembler::new(problem, &cfg)?;
    let part = problem.partition.subdivide(check.kappa)?;
    let b = cert.barrier.coeffs();
    let mut margins = empty_margins();
    for (kind, rect) in part.iter() {
        let r = asm.robustness(kind, rect, b, cert.eta, cert.gamma)?;
        let slot = margins.iter_mut().find(|f| f.kind == kind).expect("all kinds present");
        fold_worst(slot, r, rect, None);
    }
    let pass = margins.iter().all(|f| f.worst_margin.is_none_or(|w| w >= -tolerance));
    Ok(VerificationReport { method: CheckMethod::SoundBernstein, margins, pass, tolerance })
}

/// Uniform grid of `n^D` points over a box, corners included.
pub fn grid_points(rect: &HyperRect, n: usize) -> Vec<Vec<f64>> {
    let d = rect.arity();
    let n = n.max(2);
    (0..tensor_len(n - 1, d))
        .map(|f| {
            let u: Vec<f64> = unflatten(f, n - 1, d)
                .into_iter()
                .map(|k| k as f64 / (n - 1) as f64)
                .collect();
            rect.map_from_unit(&u)
        })
        .collect()
}

/// Evaluates the four constraint families on a `points_per_dim^D` grid per box.
///
/// The pass threshold is `-GRID_TOLERANCE * (1 + max |B|)` over the sampled
/// points.
pub fn grid_falsify(
    cert: &Certificate,
    problem: &Problem,
    points_per_dim: usize,
) -> Result<VerificationReport> {
    let m = cert.barrier.max_degree();
    let d = problem.arity();
    let p = composed_degree(&problem.dynamics, m);
    let f = dynamics_matrix(&problem.dynamics, m)?;
    let eg = gamma_expect(&problem.noise, m, d)?;
    let gap = martingale_gap_coeffs(&f, &eg, cert.barrier.coeffs(), m, p)?;
    let b = cert.barrier.coeffs();
    let mut margins = empty_margins();
    let mut b_max: f64 = 0.0;
    for (kind, rect) in problem.partition.iter() {
        let slot_idx = margins.iter().position(|s| s.kind == kind).expect("all kinds present");
        for x in grid_points(rect, points_per_dim) {
            let bx = eval_coeffs(b, m, &x);
            b_max = b_max.max(bx.abs());
            let margin = match kind {
                RegionKind::Domain => bx,
                RegionKind::Unsafe => bx - 1.0,
                RegionKind::Init => cert.eta - bx,
                RegionKind::Safe => cert.gamma - eval_coeffs(&gap, p, &x),
            };
            fold_worst(&mut margins[slot_idx], margin, rect, Some(x));
        }
    }
    let tolerance = GRID_TOLERANCE * (1.0 + b_max);
    let pass = margins.iter().all(|f| f.worst_margin.is_none_or(|w| w >= -tolerance));
    Ok(VerificationReport { method: CheckMethod::GridSample, margins, pass, tolerance })
}
