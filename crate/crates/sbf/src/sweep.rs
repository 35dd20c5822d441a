//! Parameter sweeps producing Table-I style CSV rows.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::ValueEnum;
use sbf_core::lp::{predicted_constraint_count, predicted_variable_count, LpSolver};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::problem_file::ProblemFile;
use crate::run::{run_synthesis, RunOptions};

pub const CSV_HEADER: [&str; 7] = ["m", "knob", "t_s", "delta_s", "M", "C", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    /// Uniform subdivision per dimension.
    Kappa,
    /// Bernstein degree of the non-negativity relaxations.
    MPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub knob: usize,
    pub t_s: Option<f64>,
    pub delta_s: Option<f64>,
    #[serde(rename = "M")]
    pub num_vars: Option<usize>,
    #[serde(rename = "C")]
    pub num_constraints: Option<usize>,
    pub status: String,
}

fn run_cell<S: LpSolver>(pf: &ProblemFile, base: &RunOptions, knob: Knob, m: usize, k: usize, solver: &S) -> SweepRow {
    let mut opts = base.clone();
    opts.m = m;
    match knob {
        Knob::Kappa => opts.kappa = k,
        Knob::MPlus => opts.m_plus = Some(k),
    }
    match run_synthesis(pf, &opts, solver) {
        Ok(out) => SweepRow {
            m,
            knob: k,
            t_s: Some(out.record.wall_time_s),
            delta_s: Some(out.record.delta_s),
            num_vars: Some(out.record.num_vars),
            num_constraints: Some(out.record.num_constraints),
            status: out.record.status,
        },
        Err(e) => {
            let sizes = pf.to_problem(m).ok().map(|p| {
                let cfg = opts.config(pf);
                (predicted_variable_count(p.arity(), &cfg), predicted_constraint_count(&p, &cfg))
            });
            SweepRow {
                m,
                knob: k,
                t_s: None,
                delta_s: None,
                num_vars: sizes.map(|s| s.0),
                num_constraints: sizes.map(|s| s.1),
                status: match e {
                    crate::error::CliError::Core(sbf_core::Error::Infeasible) => "infeasible".into(),
                    other => format!("error: {other}"),
                },
            }
        }
    }
}

/// Runs every `(m, knob)` cell; rows come back in grid order whatever
/// `jobs` is.
pub fn sweep<S: LpSolver + Sync>(
    pf: &ProblemFile,
    base: &RunOptions,
    knob: Knob,
    ms: &[usize],
    knobs: &[usize],
    jobs: usize,
    solver: &S,
) -> Vec<SweepRow> {
    let cells: Vec<(usize, usize)> =
        ms.iter().flat_map(|&m| knobs.iter().map(move |&k| (m, k))).collect();
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(cells.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(m, k)) = cells.get(i) else { break };
                let row = run_cell(pf, base, knob, m, k, solver);
                results.lock().expect("no panics while held")[i] = Some(row);
            });
        }
    });
    results.into_inner().expect("threads joined").into_iter().map(|r| r.expect("every cell ran")).collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.knob.to_string(),
            r.t_s.map(|t| format!("{t:.3}")).unwrap_or_default(),
            r.delta_s.map(|d| format!("{d:.6}")).unwrap_or_default(),
            r.num_vars.map(|v| v.to_string()).unwrap_or_default(),
            r.num_constraints.map(|v| v.to_string()).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
