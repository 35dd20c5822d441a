use proptest::prelude::*;
use sbf_core::bernstein::{bernstein_on_rect, enclosure, lower_bound};
use sbf_core::expectation::{gaussian_moments, DynamicsSpec};
use sbf_core::lp::{assemble, DegreeForm, Problem, SynthesisConfig};
use sbf_core::poly::eval_coeffs;
use sbf_core::regions::{affine_poly, rect_cover_difference};
use sbf_core::{HyperRect, MultiPoly, RegionPartition};

fn poly_strategy(max_arity: usize, max_degree: usize) -> impl Strategy<Value = MultiPoly> {
    (1..=max_arity, 0..=max_degree).prop_flat_map(|(arity, degree)| {
        let n = (degree + 1).pow(arity as u32);
        prop::collection::vec(-2.0f64..2.0, n)
            .prop_map(move |c| MultiPoly::new(arity, degree, c).unwrap())
    })
}

fn rect_strategy(arity: usize) -> impl Strategy<Value = HyperRect> {
    prop::collection::vec((-2.0f64..2.0, 0.05f64..1.5), arity).prop_map(|v| {
        let lo: Vec<f64> = v.iter().map(|p| p.0).collect();
        let hi: Vec<f64> = v.iter().map(|p| p.0 + p.1).collect();
        HyperRect::new(lo, hi).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_map_evaluates_through_the_box(
        p in poly_strategy(3, 4),
        seed in prop::collection::vec(0.0f64..=1.0, 3),
        boxes in prop::collection::vec((-2.0f64..2.0, 0.05f64..1.5), 3),
    ) {
        let d = p.arity();
        let rect = HyperRect::new(
            boxes[..d].iter().map(|b| b.0).collect(),
            boxes[..d].iter().map(|b| b.0 + b.1).collect(),
        ).unwrap();
        let u = &seed[..d];
        let q = affine_poly(&p, &rect).unwrap();
        let direct = p.eval(&rect.map_from_unit(u)).unwrap();
        let mapped = q.eval(u).unwrap();
        let scale = 1.0 + direct.abs();
        prop_assert!((direct - mapped).abs() <= 1e-9 * scale * 50.0, "{direct} vs {mapped}");
    }

    #[test]
    fn enclosure_contains_sampled_values(p in poly_strategy(2, 5), extra in 0usize..6, pts in prop::collection::vec(0.0f64..=1.0, 64)) {
        let enc = enclosure(&p, p.max_degree() + extra).unwrap();
        for chunk in pts.chunks(p.arity()) {
            if chunk.len() < p.arity() { continue; }
            let v = p.eval(chunk).unwrap();
            prop_assert!(enc.lower <= v + 1e-9 && v <= enc.upper + 1e-9);
        }
    }

    #[test]
    fn degree_elevation_never_loosens(p in poly_strategy(2, 4), r in rect_strategy(2)) {
        let p = if p.arity() == 2 { p } else { MultiPoly::new(2, 1, vec![0.0, 1.0, -1.0, 0.5]).unwrap() };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..4 {
            let lb = lower_bound(&bernstein_on_rect(&p, &r, p.max_degree() + 2 * k).unwrap());
            prop_assert!(lb >= prev - 1e-9, "{lb} < {prev}");
            prev = lb;
        }
    }

    #[test]
    fn cover_difference_partitions_the_box(
        outer in rect_strategy(2),
        holes in prop::collection::vec(rect_strategy(2), 0..4),
        samples in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 200),
    ) {
        let clipped: Vec<HyperRect> = holes.iter().filter_map(|h| h.intersection(&outer)).collect();
        let pieces = rect_cover_difference(&outer, &clipped);
        for (i, a) in pieces.iter().enumerate() {
            prop_assert!(outer.contains_rect(a));
            for b in &pieces[i + 1..] {
                prop_assert!(!a.interiors_overlap(b));
            }
            for h in &clipped {
                prop_assert!(!a.interiors_overlap(h));
            }
        }
        for &(s, t) in &samples {
            let x = outer.map_from_unit(&[s, t]);
            let in_pieces = pieces.iter().any(|r| r.contains_interior(&x));
            let in_holes = clipped.iter().any(|h| h.contains(&x));
            let on_edge = pieces.iter().any(|r| r.contains(&x)) && !in_pieces;
            // interior points of the difference lie in exactly one piece
            prop_assert!(in_pieces || in_holes || on_edge);
            prop_assert!(!(in_pieces && clipped.iter().any(|h| h.contains_interior(&x))));
        }
    }
}

#[test]
fn cover_volumes_and_membership_at_scale() {
    use rand::{RngExt, SeedableRng};
    let outer = HyperRect::new(vec![-1.0, -0.5], vec![0.5, 0.5]).unwrap();
    let holes = [
        HyperRect::new(vec![-0.57, -0.17], vec![-0.53, -0.13]).unwrap(),
        HyperRect::new(vec![-0.57, -0.28], vec![-0.53, 0.32]).unwrap(),
        HyperRect::new(vec![0.1, -0.6], vec![0.3, 0.0]).unwrap(),
    ];
    let clipped: Vec<HyperRect> = holes.iter().filter_map(|h| h.intersection(&outer)).collect();
    let pieces = rect_cover_difference(&outer, &clipped);
    let piece_volume: f64 = pieces.iter().map(HyperRect::volume).sum();
    // the two obstacles overlap, so their union is [-0.57,-0.53]x[-0.28,0.32] plus the third box
    let expected = outer.volume() - 0.04 * 0.6 - 0.2 * 0.5;
    assert!((piece_volume - expected).abs() < 1e-12, "{piece_volume} vs {expected}");

    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut disagreements = 0;
    for _ in 0..100_000 {
        let x = [rng.random_range(-1.0..0.5), rng.random_range(-0.5..0.5)];
        let diff = outer.contains(&x) && !clipped.iter().any(|h| h.contains_interior(&x));
        let covered = pieces.iter().any(|r| r.contains(&x));
        disagreements += (diff != covered) as usize;
    }
    assert_eq!(disagreements, 0);
}

fn small_problem(sigma: f64) -> Problem {
    let x = HyperRect::new(vec![-1.0, -0.5], vec![0.5, 0.5]).unwrap();
    let init = HyperRect::new(vec![-0.8, -0.2], vec![-0.6, 0.0]).unwrap();
    let part = RegionPartition::from_sets(&x, &[], &[init], Some(0.2)).unwrap();
    Problem::new(part, DynamicsSpec::linear_diagonal(2, 0.5), gaussian_moments(&[sigma, sigma], 16).unwrap()).unwrap()
}

#[test]
fn size_formulas_over_a_config_grid() {
    let prob = small_problem(0.1);
    let q = prob.partition.domain.len() + prob.partition.unsafe_.len() + prob.partition.init.len();
    let qs = prob.partition.safe.len();
    for m in [2usize, 3, 4] {
        for kappa in [1usize, 2, 3] {
            for extra in [0usize, 2] {
                let cfg = SynthesisConfig::new(m).with_kappa(kappa).with_m_plus(m + extra).with_p_plus(2 * m + extra);
                let lp = assemble(&prob, &cfg).unwrap();
                let k2 = kappa * kappa;
                let c = k2 * (q * (m + extra + 1).pow(2) + qs * (2 * m + extra + 1).pow(2));
                assert_eq!(lp.num_constraints(), c);
                assert_eq!(lp.num_vars(), (m + 1).pow(2) + 2);
                let cum = assemble(&prob, &cfg.clone().with_form(DegreeForm::Cumulative)).unwrap();
                assert_eq!(cum.num_vars(), (m + 1) * (m + 2) / 2 + 2);
                assert_eq!(cum.num_constraints(), c);
            }
        }
    }
}

#[test]
fn eval_coeffs_agrees_with_poly_eval() {
    let p = MultiPoly::new(2, 2, (0..9).map(|i| i as f64 - 4.0).collect()).unwrap();
    for x in [[0.3, -0.7], [1.5, 2.0], [-1.0, 0.0]] {
        assert_eq!(eval_coeffs(p.coeffs(), 2, &x), p.eval(&x).unwrap());
    }
}
