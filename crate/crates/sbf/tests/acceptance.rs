//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use sbf::montecarlo::monte_carlo_safety;
use sbf::{ClarabelSolver, ProblemFile};
use sbf_core::adaptive::{adaptive_subdivide, refine_loop, split, Node};
use sbf_core::bernstein::{bernstein_on_rect, enclosure, lower_bound, to_bernstein};
use sbf_core::expectation::{dynamics_matrix, expected_composition, gamma_expect, gaussian_moments, DynamicsSpec};
use sbf_core::lp::{assemble, synthesize_detailed, Assembler, Certificate};
use sbf_core::poly::eval_coeffs;
use sbf_core::verify::{grid_falsify, sound_check, CheckConfig, SOUND_TOLERANCE};
use sbf_core::{HyperRect, MultiPoly, SynthesisConfig};

type Verdict = Result<String, String>;

fn fixture(name: &str) -> ProblemFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"));
    ProblemFile::load(&path).expect("bundled fixture loads")
}

fn random_poly(rng: &mut StdRng, arity: usize, degree: usize) -> MultiPoly {
    let n = (degree + 1).pow(arity as u32);
    MultiPoly::new(arity, degree, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Values of `p` on a uniform grid over the unit box with `total` points.
fn grid_extrema(p: &MultiPoly, total: usize) -> (f64, f64) {
    let per_dim = (total as f64).powf(1.0 / p.arity() as f64).round() as usize;
    let rect = HyperRect::unit(p.arity());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in sbf_core::verify::grid_points(&rect, per_dim) {
        let v = p.eval(&x).unwrap();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn enclosure_soundness() -> Verdict {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut violations = 0;
    for i in 0..200 {
        let arity = 1 + i % 2;
        let degree = rng.random_range(0..=6);
        let p = random_poly(&mut rng, arity, degree);
        let enc = enclosure(&p, degree).unwrap();
        let (lo, hi) = grid_extrema(&p, 10_000);
        if enc.lower > lo || enc.upper < hi {
            violations += 1;
        }
    }
    let t = start.elapsed().as_secs_f64();
    let detail = format!("200 polynomials, {violations} violations, {t:.2} s");
    if violations == 0 && t < 30.0 { Ok(detail) } else { Err(detail) }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn monotone_convergence() -> Verdict {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst_slope = f64::NEG_INFINITY;
    let mut exact_at_start = 0;
    let mut failures = Vec::new();
    for i in 0..20 {
        let arity = 1 + i % 2;
        let m = 2 + i % 4;
        let p = random_poly(&mut rng, arity, m);
        let (grid_min, _) = grid_extrema(&p, if arity == 1 { 100_000 } else { 1_000_000 });
        let degrees = [m, 2 * m, 4 * m, 8 * m];
        let lbs: Vec<f64> = degrees.iter().map(|&d| lower_bound(&to_bernstein(&p, d).unwrap())).collect();
        if lbs.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            failures.push(format!("poly {i}: degree elevation decreased the bound {lbs:?}"));
        }
        let by_kappa: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&k| {
                HyperRect::unit(arity)
                    .subdivide(k)
                    .unwrap()
                    .iter()
                    .map(|r| lower_bound(&bernstein_on_rect(&p, r, m).unwrap()))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        if by_kappa.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            failures.push(format!("poly {i}: subdivision decreased the bound {by_kappa:?}"));
        }
        let gaps: Vec<f64> = lbs.iter().map(|lb| grid_min - lb).collect();
        if gaps[0] <= 1e-9 {
            exact_at_start += 1;
            continue;
        }
        let xs: Vec<f64> = degrees.iter().map(|&d| (d as f64).ln()).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g.max(1e-300).ln()).collect();
        let s = slope(&xs, &ys);
        worst_slope = worst_slope.max(s);
        if s > -0.8 {
            failures.push(format!("poly {i}: gap slope {s:.3} (gaps {gaps:?})"));
        }
    }
    let detail = format!(
        "20 polynomials, worst log-log gap slope {worst_slope:.3}, {exact_at_start} exact at m+ = m"
    );
    if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) }
}

fn expectation_oracle() -> Verdict {
    let dynamics = DynamicsSpec::linear_diagonal(1, 0.5);
    let fm = dynamics_matrix(&dynamics, 2).unwrap();
    let eg = gamma_expect(&gaussian_moments(&[0.1], 2).unwrap(), 2, 1).unwrap();
    let c = expected_composition(&fm, &eg, &[0.0, 0.0, 1.0]).unwrap();
    let coeff_err = c.iter().zip([0.01, 0.0, 0.25]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if coeff_err >= 1e-12 {
        return Err(format!("E[B(0.5x + v)] for B = x^2 has coefficient error {coeff_err:e}"));
    }
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst_z: f64 = 0.0;
    for case in 0..20 {
        let arity = 1 + case % 2;
        let degree = 1 + case % 3;
        let sigma: Vec<f64> = (0..arity).map(|_| rng.random_range(0.05..0.3)).collect();
        let b = random_poly(&mut rng, arity, degree);
        let gain: Vec<f64> = (0..arity).map(|_| rng.random_range(-0.9..0.9)).collect();
        let f: Vec<MultiPoly> = (0..arity).map(|j| MultiPoly::variable(arity, j).scale(gain[j])).collect();
        let dynamics = DynamicsSpec::new(f).unwrap();
        let x: Vec<f64> = (0..arity).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fm = dynamics_matrix(&dynamics, degree).unwrap();
        let eg = gamma_expect(&gaussian_moments(&sigma, degree).unwrap(), degree, arity).unwrap();
        let exact = eval_coeffs(&expected_composition(&fm, &eg, b.coeffs()).unwrap(), degree * arity, &x);
        let normals: Vec<Normal<f64>> = sigma.iter().map(|&s| Normal::new(0.0, s).unwrap()).collect();
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut y = vec![0.0; arity];
        for _ in 0..n {
            for j in 0..arity {
                y[j] = gain[j] * x[j] + normals[j].sample(&mut rng);
            }
            let v = b.eval(&y).unwrap();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        let z = (exact - mean).abs() / se.max(1e-300);
        worst_z = worst_z.max(z);
    }
    let detail = format!("coefficient error {coeff_err:.1e}; worst Monte-Carlo deviation {worst_z:.2} standard errors over 20 cases");
    if worst_z <= 4.0 { Ok(detail) } else { Err(detail) }
}

fn lp_size_formulas() -> Verdict {
    let pf = fixture("2d-s");
    let mut checked = Vec::new();
    for (m, kappa, m_plus, p_plus) in [(4, 4, 4, 8), (6, 4, 6, 12), (8, 4, 8, 16), (6, 2, 9, 14), (3, 1, 3, 6)] {
        let prob = pf.to_problem(m).unwrap();
        let part = &prob.partition;
        let (q, qs, qu, q0) = (part.domain.len(), part.safe.len(), part.unsafe_.len(), part.init.len());
        let cfg = SynthesisConfig::new(m).with_kappa(kappa).with_m_plus(m_plus).with_p_plus(p_plus);
        let lp = assemble(&prob, &cfg).unwrap();
        let k = kappa * kappa;
        let want_m = (m + 1).pow(2) + 2;
        let want_c = (k * (q + qu + q0)) * (m_plus + 1).pow(2) + k * qs * (p_plus + 1).pow(2);
        if lp.num_vars() != want_m || lp.num_constraints() != want_c {
            return Err(format!(
                "m={m} kappa={kappa} m+={m_plus} p+={p_plus}: M={} C={}, expected {want_m}/{want_c}",
                lp.num_vars(),
                lp.num_constraints()
            ));
        }
        checked.push(format!("{want_m}/{want_c}"));
    }
    Ok(format!("M/C exact for {}", checked.join(", ")))
}

struct Synthesized {
    label: String,
    problem: ProblemFile,
    certificate: Certificate,
    seconds: f64,
}

fn synth(name: &str, m: usize, kappa: usize) -> Synthesized {
    let pf = fixture(name);
    let prob = pf.to_problem(m).unwrap();
    let cfg = SynthesisConfig::new(m).with_kappa(kappa).with_horizon(pf.horizon);
    let start = Instant::now();
    let part = prob.partition.subdivide(kappa).unwrap();
    let syn = synthesize_detailed(&prob, &part, &cfg, kappa, &ClarabelSolver::default()).unwrap();
    Synthesized {
        label: format!("{name} m={m} kappa={kappa}"),
        problem: pf,
        certificate: syn.certificate,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn table_trend(runs: &[Synthesized]) -> Verdict {
    let ds: Vec<f64> = runs.iter().map(|r| r.certificate.delta_s).collect();
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let detail = format!(
        "2d-s kappa=4: delta_s(m=4,6,8) = {:.3}, {:.3}, {:.3} (published 0.518, 0.886, 0.968); slowest solve {slowest:.1} s",
        ds[0], ds[1], ds[2]
    );
    let ok = ds[0] < ds[1] && ds[1] < ds[2] && ds[2] >= 0.9 && ds[1] >= 0.8 && slowest < 60.0;
    if ok { Ok(detail) } else { Err(detail) }
}

fn certificate_validity(runs: &[Synthesized]) -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for run in runs {
        let cert = &run.certificate;
        let prob = run.problem.to_problem(cert.barrier.max_degree()).unwrap();
        let check = CheckConfig::tighter_than(cert, 2, 2);
        let sound = sound_check(cert, &prob, &check, SOUND_TOLERANCE).unwrap();
        let grid = grid_falsify(cert, &prob, 50).unwrap();
        let sigma = run.problem.gaussian_sigma().unwrap();
        let mc = monte_carlo_safety(&prob, sigma, cert.horizon, 10_000, 11).unwrap();
        let mc_ok = mc.probability >= cert.delta_s - mc.half_width;
        ok &= sound.pass && grid.pass && mc_ok;
        lines.push(format!(
            "{} (sound {}, grid {}, P_s {:.4}±{:.4} vs delta_s {:.3})",
            run.label,
            if sound.pass { "ok" } else { "FAIL" },
            if grid.pass { "ok" } else { "FAIL" },
            mc.probability,
            mc.half_width,
            cert.delta_s
        ));
    }
    let detail = lines.join("; ");
    if ok { Ok(detail) } else { Err(detail) }
}

fn min_robustness(asm: &mut Assembler, node: &Node, cert: &Certificate) -> f64 {
    let vars = asm.restrict(&cert.barrier.embed(asm.degree()).unwrap().into_coeffs());
    node.partition
        .iter()
        .map(|(k, r)| asm.robustness(k, r, &vars, cert.eta, cert.gamma).unwrap())
        .fold(f64::INFINITY, f64::min)
}

fn exhaustive_best(asm: &mut Assembler, root: &Node, cert: &Certificate, c_max: usize) -> (f64, usize) {
    let mut seen = BTreeSet::new();
    seen.insert(root.fingerprint());
    let mut stack = vec![root.clone()];
    let mut best = f64::NEG_INFINITY;
    while let Some(node) = stack.pop() {
        best = best.max(min_robustness(asm, &node, cert));
        let rects: Vec<HyperRect> = node.partition.iter().map(|(_, r)| r.clone()).collect();
        for r in rects {
            let child = split(&node, &r, 0).unwrap();
            if child.constraints(asm) <= c_max && seen.insert(child.fingerprint()) {
                stack.push(child);
            }
        }
    }
    (best, seen.len())
}

fn adaptive_subdivision() -> Verdict {
    let pf = fixture("1d-toy");
    let m = 4;
    let prob = pf.to_problem(m).unwrap();
    let cfg = SynthesisConfig::new(m).with_horizon(pf.horizon);
    let solver = ClarabelSolver::default();
    let heuristic = synthesize_detailed(&prob, &prob.partition, &cfg, 1, &solver).unwrap().raw;
    let mut asm = Assembler::new(&prob, &cfg).unwrap();
    let root = Node::new(prob.partition.clone());
    let root_count = root.constraints(&asm);
    let mut compared = Vec::new();
    for extra in 0..=5 {
        let c_max = root_count + extra * (m + 1);
        let greedy = adaptive_subdivide(&prob, &cfg, &root, &heuristic, c_max).unwrap();
        let (best, nodes) = exhaustive_best(&mut asm, &root, &heuristic, c_max);
        if (greedy.min_robustness - best).abs() > 1e-9 || greedy.constraints > c_max {
            return Err(format!(
                "budget {c_max}: greedy min-robustness {:.3e}, exhaustive {best:.3e} over {nodes} nodes",
                greedy.min_robustness
            ));
        }
        if greedy.best_trace.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("budget {c_max}: best(O) sequence decreased"));
        }
        compared.push(nodes);
    }
    let mut refine = Vec::new();
    for (name, m, c_max) in [("1d-toy", 6, 400), ("2d-s", 4, 2000)] {
        let pf = fixture(name);
        let prob = pf.to_problem(m).unwrap();
        let cfg = SynthesisConfig::new(m).with_horizon(pf.horizon);
        let out = refine_loop(&prob, &cfg, 3, c_max, &solver).unwrap();
        let first = out.rounds[0].delta_s;
        if out.certificate.delta_s < first || out.rounds.iter().any(|r| r.constraints > c_max) {
            return Err(format!("{name}: refine_loop returned {} after first round {first}", out.certificate.delta_s));
        }
        refine.push(format!("{name} {:.3} (first round {first:.3})", out.certificate.delta_s));
    }
    Ok(format!(
        "1d-toy greedy = exhaustive for 6 budgets (up to {} nodes); refine_loop delta_s: {}",
        compared.iter().max().unwrap(),
        refine.join(", ")
    ))
}

fn run(name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match &verdict {
        Ok(d) => println!("PASS  {name}: {d}"),
        Err(d) => println!("FAIL  {name}: {d}"),
    }
    verdict.is_ok()
}

fn main() {
    let mut all = true;
    all &= run("bernstein enclosure soundness", enclosure_soundness);
    all &= run("monotone convergence", monotone_convergence);
    all &= run("expectation oracle", expectation_oracle);
    all &= run("lp size formulas", lp_size_formulas);
    let mut runs: Vec<Synthesized> = Vec::new();
    all &= run("table trend on 2d-s", || {
        runs = [4, 6, 8].iter().map(|&m| synth("2d-s", m, 4)).collect();
        table_trend(&runs)
    });
    all &= run("certificate validity", || {
        runs.push(synth("2d-h", 6, 4));
        runs.push(synth("2d-h", 8, 2));
        certificate_validity(&runs)
    });
    all &= run("adaptive subdivision", adaptive_subdivision);
    if !all {
        std::process::exit(1);
    }
}
