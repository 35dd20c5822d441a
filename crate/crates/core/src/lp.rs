//! Assembly of the barrier-synthesis linear program and certificate
//! extraction.
//!
//! Decision variables are the barrier coefficients `b` followed by `eta` and
//! `gamma`. Every box contributes one row per Bernstein coefficient:
//!
//! | family  | rows                                   |
//! |---------|----------------------------------------|
//! | domain  | `Φ T b >= 0`                           |
//! | unsafe  | `Φ T b >= 1`                           |
//! | init    | `-Φ T b + eta >= 0`                    |
//! | safe    | `-Φ_p T_p (F E[Γ]ᵀ - Δ) b + gamma >= 0` |
//!
//! and the objective is `min eta + K gamma`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bernstein::PhiCache;
use crate::expectation::{
    composed_degree, dynamics_matrix, gamma_expect, martingale_gap_matrix, DynamicsSpec,
    NoiseMoments,
};
use crate::matrix::{dot, Matrix};
use crate::num::tensor_len;
use crate::poly::{cumulative_mask, MultiPoly};
use crate::regions::{affine_1d, HyperRect, RegionKind, RegionPartition};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeForm {
    /// Every exponent up to `m` in each dimension.
    #[default]
    Maximal,
    /// Exponents with total degree at most `m`.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Barrier degree.
    pub m: usize,
    /// Bernstein degree for the domain, unsafe and init rows.
    pub m_plus: usize,
    /// Bernstein degree for the safe rows; `None` means the composed degree.
    pub p_plus: Option<usize>,
    /// Uniform subdivision factor per dimension.
    pub kappa: usize,
    /// Horizon `K` in steps.
    pub horizon: usize,
    pub degree_form: DegreeForm,
    /// Optional `|b_i| <= bound` box on barrier coefficients.
    pub coeff_bound: Option<f64>,
}

impl SynthesisConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            m_plus: m,
            p_plus: None,
            kappa: 1,
            horizon: 10,
            degree_form: DegreeForm::Maximal,
            coeff_bound: None,
        }
    }

    pub fn with_kappa(mut self, kappa: usize) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_m_plus(mut self, m_plus: usize) -> Self {
        self.m_plus = m_plus;
        self
    }

    pub fn with_p_plus(mut self, p_plus: usize) -> Self {
        self.p_plus = Some(p_plus);
        self
    }

    pub fn with_horizon(mut self, k: usize) -> Self {
        self.horizon = k;
        self
    }

    pub fn with_form(mut self, form: DegreeForm) -> Self {
        self.degree_form = form;
        self
    }
}

/// A synthesis problem: regions, dynamics and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub partition: RegionPartition,
    pub dynamics: DynamicsSpec,
    pub noise: NoiseMoments,
}

impl Problem {
    pub fn new(partition: RegionPartition, dynamics: DynamicsSpec, noise: NoiseMoments) -> Result<Self> {
        let d = partition.arity();
        if dynamics.arity() != d {
            return Err(Error::ArityMismatch { expected: d, got: dynamics.arity() });
        }
        if noise.arity() != d {
            return Err(Error::ArityMismatch { expected: d, got: noise.arity() });
        }
        partition.validate()?;
        Ok(Self { partition, dynamics, noise })
    }

    pub fn arity(&self) -> usize {
        self.partition.arity()
    }

    pub fn with_partition(&self, partition: RegionPartition) -> Problem {
        Problem { partition, dynamics: self.dynamics.clone(), noise: self.noise.clone() }
    }
}

/// Rows contributed by one box: `rows · b + eta_coeff eta + gamma_coeff gamma >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub region: HyperRect,
    pub kind: RegionKind,
    pub rows: Matrix,
    pub eta_coeff: f64,
    pub gamma_coeff: f64,
    pub rhs: f64,
}

impl ConstraintBlock {
    /// Smallest slack of the block's rows, `min(A b - L)`.
    pub fn robustness(&self, b: &[f64], eta: f64, gamma: f64) -> f64 {
        let offset = self.eta_coeff * eta + self.gamma_coeff * gamma - self.rhs;
        (0..self.rows.rows())
            .map(|r| dot(self.rows.row(r), b) + offset)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds constraint blocks for boxes of any family.
///
/// Holds the dynamics map, cached conversion factors and the variable mask,
/// so one instance serves every box of a problem.
#[derive(Debug, Clone)]
pub struct Assembler {
    arity: usize,
    m: usize,
    m_plus: usize,
    p: usize,
    p_plus: usize,
    positions: Vec<usize>,
    gap: Matrix,
    phi: PhiCache,
}

impl Assembler {
    pub fn new(problem: &Problem, cfg: &SynthesisConfig) -> Result<Self> {
        let d = problem.arity();
        let m = cfg.m;
        if cfg.m_plus < m {
            return Err(Error::DegreeTooLow { source_degree: m, target: cfg.m_plus });
        }
        let p = composed_degree(&problem.dynamics, m);
        let p_plus = cfg.p_plus.unwrap_or(p);
        if p_plus < p {
            return Err(Error::DegreeTooLow { source_degree: p, target: p_plus });
        }
        crate::bernstein::check_degree(cfg.m_plus.max(p_plus))?;
        let positions = match cfg.degree_form {
            DegreeForm::Maximal => (0..tensor_len(m, d)).collect(),
            DegreeForm::Cumulative => cumulative_mask(m, d).flat_positions(),
        };
        let f = dynamics_matrix(&problem.dynamics, m)?;
        let eg = gamma_expect(&problem.noise, m, d)?;
        let gap = martingale_gap_matrix(&f, &eg, m, p)?.select_columns(&positions);
        Ok(Self { arity: d, m, m_plus: cfg.m_plus, p, p_plus, positions, gap, phi: PhiCache::new() })
    }

    /// Barrier degree `m`.
    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn composed_degree(&self) -> usize {
        self.p
    }

    pub fn p_plus(&self) -> usize {
        self.p_plus
    }

    /// Flat positions (in the full degree-`m` tensor) of the barrier variables.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn num_barrier_vars(&self) -> usize {
        self.positions.len()
    }

    pub fn rows_for(&self, kind: RegionKind) -> usize {
        match kind {
            RegionKind::Safe => tensor_len(self.p_plus, self.arity),
            _ => tensor_len(self.m_plus, self.arity),
        }
    }

    /// Expands masked barrier variables to the full coefficient tensor.
    pub fn expand(&self, vars: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; tensor_len(self.m, self.arity)];
        for (&pos, &v) in self.positions.iter().zip(vars) {
            full[pos] = v;
        }
        full
    }

    /// Restricts a full coefficient tensor to the barrier variables.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.positions.iter().map(|&p| full[p]).collect()
    }

    /// Per-dimension factors `Φ_1 · T_1` for a box at the given degrees.
    fn factors(&mut self, rect: &HyperRect, deg: usize, deg_plus: usize) -> Result<Vec<Matrix>> {
        let phi = self.phi.factor(deg, deg_plus)?.clone();
        (0..self.arity)
            .map(|j| phi.matmul(&affine_1d(rect.lo()[j], rect.hi()[j], deg)?))
            .collect()
    }

    pub fn block(&mut self, kind: RegionKind, rect: &HyperRect) -> Result<ConstraintBlock> {
        if rect.arity() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: rect.arity() });
        }
        let (rows, eta_coeff, gamma_coeff, rhs) = match kind {
            RegionKind::Safe => {
                let f = self.factors(rect, self.p, self.p_plus)?;
                (Matrix::kron_apply(&f, &self.gap)?.scale(-1.0), 0.0, 1.0, 0.0)
            }
            _ => {
                let f = self.factors(rect, self.m, self.m_plus)?;
                let full = Matrix::kron(&f);
                let a = if self.positions.len() == full.cols() {
                    full
                } else {
                    full.select_columns(&self.positions)
                };
                match kind {
                    RegionKind::Domain => (a, 0.0, 0.0, 0.0),
                    RegionKind::Unsafe => (a, 0.0, 0.0, 1.0),
                    _ => (a.scale(-1.0), 1.0, 0.0, 0.0),
                }
            }
        };
        Ok(ConstraintBlock { region: rect.clone(), kind, rows, eta_coeff, gamma_coeff, rhs })
    }

    /// Robustness of one box under a barrier given by its masked variables.
    pub fn robustness(
        &mut self,
        kind: RegionKind,
        rect: &HyperRect,
        vars: &[f64],
        eta: f64,
        gamma: f64,
    ) -> Result<f64> {
        Ok(self.block(kind, rect)?.robustness(vars, eta, gamma))
    }

    /// Constraint count of a partition (no further subdivision).
    pub fn constraint_count(&self, partition: &RegionPartition) -> usize {
        partition.iter().map(|(k, _)| self.rows_for(k)).sum()
    }
}

/// `min cᵀw` subject to `A w >= r` and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Barrier coefficient variables come first.
    pub num_barrier_vars: usize,
    /// Flat positions of the barrier variables in the degree-`m` tensor.
    pub barrier_positions: Vec<usize>,
    pub arity: usize,
    pub m: usize,
    /// Row coefficients on the barrier variables.
    pub a: Matrix,
    pub eta_coeff: Vec<f64>,
    pub gamma_coeff: Vec<f64>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    /// `(kind, region, first row, row count)` per block, in assembly order.
    pub blocks: Vec<BlockSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpan {
    pub kind: RegionKind,
    pub region: HyperRect,
    pub start: usize,
    pub len: usize,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.num_barrier_vars + 2
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn eta_index(&self) -> usize {
        self.num_barrier_vars
    }

    pub fn gamma_index(&self) -> usize {
        self.num_barrier_vars + 1
    }

    /// Full coefficient row over all variables.
    pub fn row(&self, r: usize) -> Vec<f64> {
        let mut v = self.a.row(r).to_vec();
        v.push(self.eta_coeff[r]);
        v.push(self.gamma_coeff[r]);
        v
    }

    /// `A w - r` per row.
    pub fn slacks(&self, w: &[f64]) -> Vec<f64> {
        let nb = self.num_barrier_vars;
        let (b, eta, gamma) = (&w[..nb], w[nb], w[nb + 1]);
        (0..self.num_constraints())
            .map(|r| {
                dot(self.a.row(r), b) + self.eta_coeff[r] * eta + self.gamma_coeff[r] * gamma
                    - self.rhs[r]
            })
            .collect()
    }

    pub fn objective_value(&self, w: &[f64]) -> f64 {
        dot(&self.objective, w)
    }
}

/// Constraint count `(Q + Q_u + Q_0)(m⁺+1)^D + Q_s(p⁺+1)^D` after uniform
/// subdivision by `kappa`.
pub fn predicted_constraint_count(problem: &Problem, cfg: &SynthesisConfig) -> usize {
    let d = problem.arity();
    let part = &problem.partition;
    let per_box = cfg.kappa.pow(d as u32);
    let p_plus = cfg.p_plus.unwrap_or(composed_degree(&problem.dynamics, cfg.m));
    per_box
        * ((part.domain.len() + part.unsafe_.len() + part.init.len()) * tensor_len(cfg.m_plus, d)
            + part.safe.len() * tensor_len(p_plus, d))
}

/// Number of decision variables: barrier coefficients plus `eta`, `gamma`.
pub fn predicted_variable_count(arity: usize, cfg: &SynthesisConfig) -> usize {
    let nb = match cfg.degree_form {
        DegreeForm::Maximal => tensor_len(cfg.m, arity),
        DegreeForm::Cumulative => cumulative_mask(cfg.m, arity).len(),
    };
    nb + 2
}

pub fn assemble(problem: &Problem, cfg: &SynthesisConfig) -> Result<LinearProgram> {
    let part = &problem.partition;
    if part.domain.is_empty() || part.safe.is_empty() {
        return Err(Error::InvalidProblem("domain and safe families must be non-empty".into()));
    }
    let subdivided = part.subdivide(cfg.kappa)?;
    let mut asm = Assembler::new(problem, cfg)?;
    assemble_partition(&mut asm, &subdivided, cfg)
}

/// Assembles the LP over an already-refined partition.
pub fn assemble_partition(
    asm: &mut Assembler,
    partition: &RegionPartition,
    cfg: &SynthesisConfig,
) -> Result<LinearProgram> {
    let nb = asm.num_barrier_vars();
    let total = asm.constraint_count(partition);
    let mut data = Vec::with_capacity(total * nb);
    let mut eta_coeff = Vec::with_capacity(total);
    let mut gamma_coeff = Vec::with_capacity(total);
    let mut rhs = Vec::with_capacity(total);
    let mut blocks = Vec::with_capacity(partition.len());
    for (kind, rect) in partition.iter() {
        let blk = asm.block(kind, rect)?;
        let n = blk.rows.rows();
        blocks.push(BlockSpan { kind, region: rect.clone(), start: rhs.len(), len: n });
        data.extend_from_slice(blk.rows.as_slice());
        eta_coeff.extend(core::iter::repeat_n(blk.eta_coeff, n));
        gamma_coeff.extend(core::iter::repeat_n(blk.gamma_coeff, n));
        rhs.extend(core::iter::repeat_n(blk.rhs, n));
    }
    let mut objective = vec![0.0; nb + 2];
    objective[nb] = 1.0;
    objective[nb + 1] = cfg.horizon as f64;
    let mut lower = vec![cfg.coeff_bound.map(|b| -b); nb];
    let mut upper = vec![cfg.coeff_bound; nb];
    lower.extend([Some(0.0), Some(0.0)]);
    upper.extend([Some(1.0), Some(1.0)]);
    Ok(LinearProgram {
        num_barrier_vars: nb,
        barrier_positions: asm.positions().to_vec(),
        arity: partition.arity(),
        m: cfg.m,
        a: Matrix::from_row_major(rhs.len(), nb, data)?,
        eta_coeff,
        gamma_coeff,
        rhs,
        objective,
        lower,
        upper,
        blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Converged to reduced tolerances.
    AlmostOptimal,
    /// Stopped early with a finite iterate; only usable after repair.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

/// An LP back-end. Implementations must be deterministic for fixed settings.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

impl<S: LpSolver + ?Sized> LpSolver for &S {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        (**self).solve(lp)
    }
}

/// `max(0, 1 - (eta + K gamma))`, capped at 1.
pub fn delta_s(eta: f64, gamma: f64, horizon: usize) -> f64 {
    (1.0 - (eta + horizon as f64 * gamma)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateMeta {
    pub m: usize,
    pub m_plus: usize,
    pub p_plus: usize,
    pub kappa: usize,
    pub degree_form: DegreeForm,
    pub adaptive: bool,
    pub solver_status: String,
    pub wall_time_s: f64,
    pub num_vars: usize,
    pub num_constraints: usize,
}

/// A barrier with its bounds and the safety probability they certify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub barrier: MultiPoly,
    pub eta: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub delta_s: f64,
    #[serde(default)]
    pub meta: CertificateMeta,
}

impl Certificate {
    pub fn new(barrier: MultiPoly, eta: f64, gamma: f64, horizon: usize) -> Self {
        Self { barrier, eta, gamma, horizon, delta_s: delta_s(eta, gamma, horizon), meta: Default::default() }
    }

    /// `B ≡ 1, eta = 1, gamma = 0`: always valid, certifies nothing.
    pub fn vacuous(arity: usize, horizon: usize) -> Self {
        Self::new(MultiPoly::constant(arity, 1.0), 1.0, 0.0, horizon)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self.delta_s = delta_s(self.eta, self.gamma, horizon);
        self
    }
}

/// Result of one LP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    /// Repaired certificate; satisfies every assembled row.
    pub certificate: Certificate,
    /// The solver's iterate read as a certificate, before repair. Rows may be
    /// violated at the level of the solver tolerance.
    pub raw: Certificate,
}

/// Assembles and solves the LP over a refined partition.
pub fn synthesize_detailed<S: LpSolver>(
    problem: &Problem,
    partition: &RegionPartition,
    cfg: &SynthesisConfig,
    kappa_label: usize,
    solver: &S,
) -> Result<Synthesis> {
    let mut asm = Assembler::new(problem, cfg)?;
    let lp = assemble_partition(&mut asm, partition, cfg)?;
    let sol = solver.solve(&lp)?;
    if sol.values.len() != lp.num_vars() {
        return Err(Error::Solver(format!(
            "solver returned {} values for {} variables",
            sol.values.len(),
            lp.num_vars()
        )));
    }
    let nb = lp.num_barrier_vars;
    let mut cert = tighten(&lp, &sol.values, cfg.horizon, problem.arity(), cfg.m)?;
    cert.meta = CertificateMeta {
        m: cfg.m,
        m_plus: cfg.m_plus,
        p_plus: asm.p_plus(),
        kappa: kappa_label,
        degree_form: cfg.degree_form,
        adaptive: false,
        solver_status: match sol.status {
            SolveStatus::Optimal => "optimal".to_string(),
            SolveStatus::AlmostOptimal => "almost_optimal".to_string(),
            SolveStatus::Stalled => "stalled".to_string(),
        },
        wall_time_s: 0.0,
        num_vars: lp.num_vars(),
        num_constraints: lp.num_constraints(),
    };
    let barrier = MultiPoly::new(problem.arity(), cfg.m, asm.expand(&sol.values[..nb]))?;
    let mut raw = Certificate::new(barrier, sol.values[nb], sol.values[nb + 1], cfg.horizon);
    raw.meta = cert.meta.clone();
    Ok(Synthesis { certificate: cert, raw })
}

/// Assembles and solves the LP over a refined partition, then tightens the
/// solution into a certificate.
pub fn synthesize_partition<S: LpSolver>(
    problem: &Problem,
    partition: &RegionPartition,
    cfg: &SynthesisConfig,
    kappa_label: usize,
    solver: &S,
) -> Result<Certificate> {
    synthesize_detailed(problem, partition, cfg, kappa_label, solver).map(|s| s.certificate)
}

/// Runs assembly and solve with uniform subdivision `cfg.kappa`.
pub fn synthesize<S: LpSolver>(problem: &Problem, cfg: &SynthesisConfig, solver: &S) -> Result<Certificate> {
    if problem.partition.domain.is_empty() || problem.partition.safe.is_empty() {
        return Err(Error::InvalidProblem("domain and safe families must be non-empty".into()));
    }
    let part = problem.partition.subdivide(cfg.kappa)?;
    synthesize_partition(problem, &part, cfg, cfg.kappa, solver)
}

/// Raises the constant coefficient until every domain and unsafe row holds,
/// then returns the smallest `eta` and `gamma` the init and safe rows allow.
fn repair(lp: &LinearProgram, b: &mut [f64]) -> (f64, f64) {
    let values: Vec<f64> = (0..lp.num_constraints()).map(|r| dot(lp.a.row(r), b)).collect();
    let mut shift: f64 = 0.0;
    let mut eta: f64 = 0.0;
    let mut gamma: f64 = 0.0;
    for span in &lp.blocks {
        let rows = &values[span.start..span.start + span.len];
        match span.kind {
            RegionKind::Domain => rows.iter().for_each(|v| shift = shift.max(-v)),
            RegionKind::Unsafe => rows.iter().for_each(|v| shift = shift.max(1.0 - v)),
            _ => {}
        }
    }
    b[0] += shift;
    for span in &lp.blocks {
        let rows = &values[span.start..span.start + span.len];
        match span.kind {
            // init rows hold -Φ T b, so the barrier's coefficients are -v
            RegionKind::Init => rows.iter().for_each(|v| eta = eta.max(-v + shift)),
            RegionKind::Safe => rows.iter().for_each(|v| gamma = gamma.max(-v)),
            _ => {}
        }
    }
    // `+ 0.0` turns a negative zero into zero
    (eta + 0.0, gamma + 0.0)
}

/// Turns raw solver output into a certificate that satisfies the assembled
/// rows exactly (up to rounding in the row products).
///
/// A Bernstein shift of the constant coefficient leaves the safe rows
/// untouched, so raising it repairs domain and unsafe violations for free.
/// Interior-point iterates carry noise of the order of the solver tolerance;
/// a second candidate with those entries set to zero is repaired the same
/// way and the one certifying more wins. If neither has `eta, gamma <= 1`
/// the vacuous certificate is returned.
pub fn tighten(
    lp: &LinearProgram,
    w: &[f64],
    horizon: usize,
    arity: usize,
    m: usize,
) -> Result<Certificate> {
    let nb = lp.num_barrier_vars;
    if lp.barrier_positions.first() != Some(&0) {
        return Err(Error::Shape("constant coefficient is not a variable".into()));
    }
    let raw = w[..nb].to_vec();
    let scale = raw.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let cleaned: Vec<f64> =
        raw.iter().map(|&v| if v.abs() <= NOISE_FLOOR * scale { 0.0 } else { v }).collect();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for mut b in [raw, cleaned] {
        let (eta, gamma) = repair(lp, &mut b);
        if eta > 1.0 || gamma > 1.0 {
            continue;
        }
        let objective = |e: f64, g: f64| e + horizon as f64 * g;
        let better = best.as_ref().is_none_or(|(_, e, g)| objective(eta, gamma) <= objective(*e, *g));
        if better {
            best = Some((b, eta, gamma));
        }
    }
    let Some((b, eta, gamma)) = best else {
        return Ok(Certificate::vacuous(arity, horizon));
    };
    let mut full = vec![0.0; tensor_len(m, arity)];
    for (&pos, &v) in lp.barrier_positions.iter().zip(&b) {
        full[pos] = v;
    }
    Ok(Certificate::new(MultiPoly::new(arity, m, full)?, eta, gamma, horizon))
}

/// Relative size below which solver output is treated as zero by `tighten`.
const NOISE_FLOOR: f64 = 1e-8;
