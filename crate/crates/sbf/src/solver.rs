//! Interior-point LP back-end.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT::NonnegativeConeT,
};
use sbf_core::lp::{LinearProgram, LpSolution, LpSolver, SolveStatus};
use sbf_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClarabelSolver {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self { tol_feas: 1e-8, tol_gap: 1e-8, max_iter: 200, verbose: false }
    }
}

/// `lp` as `A x + s = b, s >= 0`: each row `a.x >= r` becomes `-a.x + s = -r`
/// and each variable bound becomes its own row.
fn conic_form(lp: &LinearProgram) -> (CscMatrix<f64>, Vec<f64>) {
    let nb = lp.num_barrier_vars;
    let nrows = lp.num_constraints();
    let n = lp.num_vars();
    let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..n {
        if let Some(lo) = lp.lower[j] {
            bounds.push((j, -1.0, -lo));
        }
        if let Some(hi) = lp.upper[j] {
            bounds.push((j, 1.0, hi));
        }
    }
    let total = nrows + bounds.len();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..n {
        for r in 0..nrows {
            let v = if j < nb {
                lp.a.get(r, j)
            } else if j == lp.eta_index() {
                lp.eta_coeff[r]
            } else {
                lp.gamma_coeff[r]
            };
            if v != 0.0 {
                rowval.push(r);
                nzval.push(-v);
            }
        }
        for (k, &(var, sign, _)) in bounds.iter().enumerate() {
            if var == j {
                rowval.push(nrows + k);
                nzval.push(sign);
            }
        }
        colptr.push(rowval.len());
    }
    let mut rhs: Vec<f64> = lp.rhs.iter().map(|r| -r).collect();
    rhs.extend(bounds.iter().map(|b| b.2));
    (CscMatrix::new(total, n, colptr, rowval, nzval), rhs)
}

impl LpSolver for ClarabelSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = lp.num_vars();
        let (a, b) = conic_form(lp);
        let p = CscMatrix::<f64>::zeros((n, n));
        let settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .tol_feas(self.tol_feas)
            .tol_gap_abs(self.tol_gap)
            .tol_gap_rel(self.tol_gap)
            .max_iter(self.max_iter)
            .build()
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let cones = [NonnegativeConeT(b.len())];
        let mut solver = DefaultSolver::new(&p, &lp.objective, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(e.to_string()))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::AlmostOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                return Err(Error::Infeasible)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                return Err(Error::Unbounded)
            }
            SolverStatus::MaxIterations | SolverStatus::InsufficientProgress
                if sol.x.iter().all(|v| v.is_finite()) =>
            {
                SolveStatus::Stalled
            }
            other => return Err(Error::Solver(format!("{other:?}"))),
        };
        Ok(LpSolution { values: sol.x.clone(), objective: lp.objective_value(&sol.x), status })
    }
}
