//! Synthesis runs as driven from the command line.

use std::time::Instant;

use sbf_core::adaptive::{refine_loop, Node, RoundRecord};
use sbf_core::lp::{
    predicted_constraint_count, predicted_variable_count, synthesize, Assembler, LpSolver,
};
use sbf_core::{Certificate, DegreeForm, RegionPartition, SynthesisConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::problem_file::ProblemFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub m: usize,
    pub m_plus: Option<usize>,
    pub p_plus: Option<usize>,
    pub kappa: usize,
    /// Overrides the problem file's horizon.
    pub horizon: Option<usize>,
    pub degree_form: DegreeForm,
    pub adaptive: bool,
    /// Constraint budget for adaptive subdivision; defaults to twice the
    /// root node's count.
    pub c_max: Option<usize>,
    pub rounds: usize,
    pub max_constraints: Option<usize>,
}

impl RunOptions {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            m_plus: None,
            p_plus: None,
            kappa: 1,
            horizon: None,
            degree_form: DegreeForm::Maximal,
            adaptive: false,
            c_max: None,
            rounds: 2,
            max_constraints: None,
        }
    }

    pub fn config(&self, pf: &ProblemFile) -> SynthesisConfig {
        let mut cfg = SynthesisConfig::new(self.m)
            .with_kappa(self.kappa)
            .with_horizon(self.horizon.unwrap_or(pf.horizon))
            .with_form(self.degree_form);
        if let Some(mp) = self.m_plus {
            cfg = cfg.with_m_plus(mp);
        }
        if let Some(pp) = self.p_plus {
            cfg = cfg.with_p_plus(pp);
        }
        cfg
    }
}

/// One row of results, as written next to the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub m: usize,
    pub m_plus: usize,
    pub p_plus: usize,
    pub kappa: usize,
    pub horizon: usize,
    pub degree_form: DegreeForm,
    pub adaptive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max: Option<usize>,
    pub eta: f64,
    pub gamma: f64,
    pub delta_s: f64,
    pub wall_time_s: f64,
    #[serde(rename = "M")]
    pub num_vars: usize,
    #[serde(rename = "C")]
    pub num_constraints: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub certificate: Certificate,
    /// Final region families when the adaptive search ran.
    pub regions: Option<RegionPartition>,
    pub rounds: Vec<RoundRecord>,
}

pub fn run_synthesis<S: LpSolver>(
    pf: &ProblemFile,
    opts: &RunOptions,
    solver: &S,
) -> CliResult<RunOutput> {
    let problem = pf.to_problem(opts.m)?;
    let cfg = opts.config(pf);
    let predicted = predicted_constraint_count(&problem, &cfg);
    if let Some(limit) = opts.max_constraints {
        if predicted > limit {
            return Err(CliError::TooLarge { predicted, limit });
        }
    }
    let start = Instant::now();
    let (mut cert, regions, rounds, c_max) = if opts.adaptive {
        let asm = Assembler::new(&problem, &cfg)?;
        let root = Node::new(problem.partition.subdivide(cfg.kappa)?);
        let c_max = opts.c_max.unwrap_or(2 * root.constraints(&asm));
        if let Some(limit) = opts.max_constraints {
            if c_max > limit {
                return Err(CliError::TooLarge { predicted: c_max, limit });
            }
        }
        let out = refine_loop(&problem, &cfg, opts.rounds, c_max, solver)?;
        (out.certificate, Some(out.node.partition), out.rounds, Some(c_max))
    } else {
        (synthesize(&problem, &cfg, solver)?, None, Vec::new(), None)
    };
    let elapsed = start.elapsed().as_secs_f64();
    cert.meta.wall_time_s = elapsed;
    let record = RunRecord {
        problem: pf.name.clone(),
        m: cfg.m,
        m_plus: cfg.m_plus,
        p_plus: cert.meta.p_plus,
        kappa: cfg.kappa,
        horizon: cfg.horizon,
        degree_form: cfg.degree_form,
        adaptive: opts.adaptive,
        c_max,
        eta: cert.eta,
        gamma: cert.gamma,
        delta_s: cert.delta_s,
        wall_time_s: elapsed,
        num_vars: predicted_variable_count(problem.arity(), &cfg),
        num_constraints: cert.meta.num_constraints,
        status: cert.meta.solver_status.clone(),
    };
    Ok(RunOutput { record, certificate: cert, regions, rounds })
}
