//! Adaptive subdivision of the region families.
//!
//! Given a heuristic certificate, a best-first search splits the box with the
//! smallest robustness (minimum constraint slack) until the best node found
//! reaches the constraint budget. The returned node seeds a tighter LP.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::lp::{synthesize_detailed, Assembler, Certificate, LpSolver, Problem, SynthesisConfig};
use crate::regions::{HyperRect, RegionKind, RegionPartition};
use crate::{Error, Result};

/// Search node: the four families `(Q, Q_s, Q_u, Q_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub partition: RegionPartition,
}

type Fingerprint = Vec<(RegionKind, Vec<u64>)>;

impl Node {
    pub fn new(partition: RegionPartition) -> Self {
        Self { partition }
    }

    /// Sorted list of every box with its family; equal iff the nodes are equal
    /// as sets of boxes.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut v: Fingerprint = self.partition.iter().map(|(k, r)| (k, r.key())).collect();
        v.sort();
        v
    }

    pub fn locate(&self, rect: &HyperRect) -> Option<(RegionKind, usize)> {
        self.partition
            .iter()
            .filter(|(_, r)| *r == rect)
            .map(|(k, r)| {
                let idx = self.partition.family(k).iter().position(|x| x == r).expect("present");
                (k, idx)
            })
            .next()
    }

    pub fn constraints(&self, asm: &Assembler) -> usize {
        asm.constraint_count(&self.partition)
    }
}

/// Replaces `rect` by its two halves along `dim` (0-based).
pub fn split(node: &Node, rect: &HyperRect, dim: usize) -> Result<Node> {
    let (kind, idx) = node.locate(rect).ok_or(Error::RectNotFound)?;
    if dim >= rect.arity() {
        return Err(Error::ArityMismatch { expected: rect.arity(), got: dim + 1 });
    }
    let (lo, hi) = rect.bisect(dim);
    let mut out = node.clone();
    let fam = out.partition.family_mut(kind);
    fam[idx] = lo;
    fam.insert(idx + 1, hi);
    Ok(out)
}

/// Robustness `min(A^S b - L)` of a box of the given family.
pub fn robustness(
    asm: &mut Assembler,
    node: &Node,
    kind: RegionKind,
    rect: &HyperRect,
    cert: &Certificate,
) -> Result<f64> {
    if !node.partition.family(kind).contains(rect) {
        return Err(Error::KindMismatch);
    }
    rect_robustness(asm, kind, rect, cert)
}

fn rect_robustness(
    asm: &mut Assembler,
    kind: RegionKind,
    rect: &HyperRect,
    cert: &Certificate,
) -> Result<f64> {
    let full = cert.barrier.embed(asm.degree())?.into_coeffs();
    let vars = asm.restrict(&full);
    asm.robustness(kind, rect, &vars, cert.eta, cert.gamma)
}

#[derive(Debug, Clone, Copy)]
struct RobKey(f64);

impl PartialEq for RobKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for RobKey {}
impl PartialOrd for RobKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for RobKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    node: Node,
    min_robustness: f64,
    argmin: (RegionKind, usize),
    constraints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub node: Node,
    pub min_robustness: f64,
    pub constraints: usize,
    /// `min_robustness` of `best(O)` after each expansion.
    pub best_trace: Vec<f64>,
    pub nodes_encountered: usize,
}

/// Upper bound on nodes the search will evaluate.
pub const MAX_NODES: usize = 100_000;

/// Best-first subdivision search.
///
/// Nodes are ranked by `(min robustness, insertion counter)`, so among equal
/// robustness the later node ranks higher. Each step expands the best node
/// not yet expanded by splitting its minimum-robustness box along every
/// dimension; the search stops once that node's constraint count reaches
/// `c_max`, no unexpanded node is left, or [`MAX_NODES`] nodes have been
/// seen. The result is the best encountered node whose count is within
/// `c_max`.
pub fn adaptive_subdivide(
    problem: &Problem,
    cfg: &SynthesisConfig,
    root: &Node,
    heuristic: &Certificate,
    c_max: usize,
) -> Result<AdaptiveOutcome> {
    if heuristic.barrier.max_degree() > cfg.m {
        return Err(Error::Shape(alloc::format!(
            "certificate degree {} exceeds configured degree {}",
            heuristic.barrier.max_degree(),
            cfg.m
        )));
    }
    let mut asm = Assembler::new(problem, cfg)?;
    let root_count = root.constraints(&asm);
    if c_max < root_count {
        return Err(Error::BudgetTooSmall { budget: c_max, required: root_count });
    }
    let mut cache: BTreeMap<(RegionKind, Vec<u64>), f64> = BTreeMap::new();
    let mut evaluate = |asm: &mut Assembler, node: Node| -> Result<Entry> {
        let mut best: Option<(f64, (RegionKind, usize))> = None;
        for kind in RegionKind::ALL {
            for (i, r) in node.partition.family(kind).iter().enumerate() {
                let key = (kind, r.key());
                let rob = match cache.get(&key) {
                    Some(v) => *v,
                    None => {
                        let v = rect_robustness(asm, kind, r, heuristic)?;
                        cache.insert(key, v);
                        v
                    }
                };
                if best.is_none_or(|(b, _)| rob < b) {
                    best = Some((rob, (kind, i)));
                }
            }
        }
        let (min_robustness, argmin) = best.ok_or(Error::InvalidProblem("empty node".into()))?;
        let constraints = node.constraints(asm);
        Ok(Entry { node, min_robustness, argmin, constraints })
    };

    let mut entries: Vec<Entry> = Vec::new();
    let mut ranked: BTreeMap<(RobKey, usize), usize> = BTreeMap::new();
    let mut open: BTreeMap<(RobKey, usize), usize> = BTreeMap::new();
    let mut seen: BTreeSet<Fingerprint> = BTreeSet::new();
    let mut trace = Vec::new();

    seen.insert(root.fingerprint());
    let e = evaluate(&mut asm, root.clone())?;
    ranked.insert((RobKey(e.min_robustness), 0), 0);
    open.insert((RobKey(e.min_robustness), 0), 0);
    entries.push(e);

    let d = problem.arity();
    while let Some((_, &best)) = open.last_key_value() {
        if entries[best].constraints >= c_max || entries.len() >= MAX_NODES {
            break;
        }
        open.pop_last();
        let (kind, idx) = entries[best].argmin;
        let target = entries[best].node.partition.family(kind)[idx].clone();
        for dim in 0..d {
            let child = split(&entries[best].node, &target, dim)?;
            if !seen.insert(child.fingerprint()) {
                continue;
            }
            let e = evaluate(&mut asm, child)?;
            let id = entries.len();
            let key = (RobKey(e.min_robustness), id);
            ranked.insert(key, id);
            open.insert(key, id);
            entries.push(e);
        }
        let (_, &now) = ranked.last_key_value().expect("non-empty");
        trace.push(entries[now].min_robustness);
    }

    let (_, &chosen) = ranked
        .iter()
        .rev()
        .find(|(_, &i)| entries[i].constraints <= c_max)
        .expect("root is within budget");
    let nodes_encountered = entries.len();
    let e = entries.swap_remove(chosen);
    Ok(AdaptiveOutcome {
        node: e.node,
        min_robustness: e.min_robustness,
        constraints: e.constraints,
        best_trace: trace,
        nodes_encountered,
    })
}

/// Minimum robustness of every box of a node under a certificate.
pub fn node_min_robustness(
    problem: &Problem,
    cfg: &SynthesisConfig,
    node: &Node,
    cert: &Certificate,
) -> Result<f64> {
    let mut asm = Assembler::new(problem, cfg)?;
    let mut best = f64::INFINITY;
    for (kind, r) in node.partition.iter() {
        best = best.min(rect_robustness(&mut asm, kind, r, cert)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub delta_s: f64,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    /// Highest-`delta_s` certificate over all rounds.
    pub certificate: Certificate,
    /// Partition the returned certificate was synthesized on.
    pub node: Node,
    pub rounds: Vec<RoundRecord>,
}

/// Alternates synthesis and adaptive subdivision for `rounds` LP solves.
///
/// Round one solves with uniform subdivision `cfg.kappa`; if that LP fails
/// with `kappa = 1`, it is retried once with `kappa = 2`. Each later round
/// re-partitions the previous node against the previous round's solver
/// iterate and solves again on the result. The iterate serves as heuristic
/// rather than the repaired certificate because repair may fall back to the
/// constant barrier, which ranks every box equally.
pub fn refine_loop<S: LpSolver>(
    problem: &Problem,
    cfg: &SynthesisConfig,
    rounds: usize,
    c_max: usize,
    solver: &S,
) -> Result<RefineOutcome> {
    if rounds == 0 {
        return Err(Error::InvalidProblem("at least one round is required".into()));
    }
    let mut kappa = cfg.kappa;
    let mut root = problem.partition.subdivide(kappa)?;
    let mut syn = match synthesize_detailed(problem, &root, cfg, kappa, solver) {
        Ok(s) => s,
        Err(_) if kappa == 1 => {
            kappa = 2;
            root = problem.partition.subdivide(kappa)?;
            synthesize_detailed(problem, &root, cfg, kappa, solver)?
        }
        Err(e) => return Err(e),
    };
    let mut node = Node::new(root);
    let first = &syn.certificate;
    let mut history =
        alloc::vec![RoundRecord { delta_s: first.delta_s, constraints: first.meta.num_constraints }];
    let mut best = (first.clone(), node.clone());
    for _ in 1..rounds {
        let outcome = adaptive_subdivide(problem, cfg, &node, &syn.raw, c_max)?;
        node = outcome.node;
        syn = synthesize_detailed(problem, &node.partition, cfg, kappa, solver)?;
        let cert = &mut syn.certificate;
        cert.meta.adaptive = true;
        history.push(RoundRecord { delta_s: cert.delta_s, constraints: cert.meta.num_constraints });
        if cert.delta_s > best.0.delta_s {
            best = (cert.clone(), node.clone());
        }
    }
    Ok(RefineOutcome { certificate: best.0, node: best.1, rounds: history })
}
