//! Trajectory simulation for empirical safety estimates.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use sbf_core::{HyperRect, Problem};
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;
pub const UNIFORM_STARTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartEstimate {
    pub x0: Vec<f64>,
    pub safe: usize,
    pub trials: usize,
}

impl StartEstimate {
    pub fn frequency(&self) -> f64 {
        self.safe as f64 / self.trials as f64
    }

    /// Wilson score interval half-width at 95%.
    pub fn half_width(&self) -> f64 {
        wilson(self.safe, self.trials).1
    }
}

fn wilson(successes: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (centre, half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyEstimate {
    pub horizon: usize,
    pub trials_per_start: usize,
    /// Lowest empirical frequency over all sampled initial states.
    pub probability: f64,
    pub half_width: f64,
    pub worst_x0: Vec<f64>,
    pub starts: usize,
}

/// Initial states: uniform draws plus every corner of each init box.
pub fn initial_states(init: &[HyperRect], uniform: usize, rng: &mut StdRng) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for r in init {
        for _ in 0..uniform {
            out.push((0..r.arity()).map(|j| rng.random_range(r.lo()[j]..=r.hi()[j])).collect());
        }
        out.extend(r.corners());
    }
    out
}

/// Simulates `x_{k+1} = f(x_k) + v_k` with Gaussian `v_k` for `horizon`
/// steps from each sampled initial state and counts trajectories whose
/// states `x_0 .. x_K` all stay in the safe set.
pub fn monte_carlo_safety(
    problem: &Problem,
    sigma: &[f64],
    horizon: usize,
    trials: usize,
    seed: u64,
) -> sbf_core::Result<SafetyEstimate> {
    if trials == 0 {
        return Err(sbf_core::Error::InvalidProblem("trials must be positive".into()));
    }
    if sigma.len() != problem.arity() {
        return Err(sbf_core::Error::ArityMismatch { expected: problem.arity(), got: sigma.len() });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let noise: Vec<Normal<f64>> = sigma
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| sbf_core::Error::InvalidProblem(e.to_string())))
        .collect::<sbf_core::Result<_>>()?;
    let starts = initial_states(&problem.partition.init, UNIFORM_STARTS, &mut rng);
    let part = &problem.partition;
    let mut worst: Option<StartEstimate> = None;
    for x0 in &starts {
        let mut safe = 0;
        for _ in 0..trials {
            let mut x = x0.clone();
            let mut ok = part.in_safe(&x);
            for _ in 0..horizon {
                if !ok {
                    break;
                }
                let fx = problem.dynamics.eval(&x)?;
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = fx[j] + noise[j].sample(&mut rng);
                }
                ok = part.in_safe(&x);
            }
            safe += ok as usize;
        }
        let est = StartEstimate { x0: x0.clone(), safe, trials };
        if worst.as_ref().is_none_or(|w| est.safe < w.safe) {
            worst = Some(est);
        }
    }
    let worst = worst.ok_or_else(|| sbf_core::Error::InvalidProblem("no initial set".into()))?;
    Ok(SafetyEstimate {
        horizon,
        trials_per_start: trials,
        probability: worst.frequency(),
        half_width: worst.half_width(),
        worst_x0: worst.x0,
        starts: starts.len(),
    })
}
