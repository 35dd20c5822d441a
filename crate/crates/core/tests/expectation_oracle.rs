use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use sbf_core::expectation::{dynamics_matrix, expected_composition, gamma_expect, gaussian_moments, DynamicsSpec};
use sbf_core::poly::eval_coeffs;
use sbf_core::MultiPoly;

/// Compares the exact expectation with a sample mean of `B(f(x) + v)`.
fn check_case(rng: &mut rand::rngs::StdRng, arity: usize, degree: usize) -> (f64, f64, f64) {
    let sigma: Vec<f64> = (0..arity).map(|_| rng.random_range(0.05..0.3)).collect();
    let n = (degree + 1).pow(arity as u32);
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // f_j(x) = a_j x_j + c_j + e_j x_j^2 keeps the composed degree small
    let f: Vec<MultiPoly> = (0..arity)
        .map(|j| {
            let mut idx1 = vec![0; arity];
            idx1[j] = 1;
            let mut idx2 = vec![0; arity];
            idx2[j] = 2;
            let zero = vec![0; arity];
            MultiPoly::from_terms(
                arity,
                &[
                    (&idx1, rng.random_range(-0.9..0.9)),
                    (&zero, rng.random_range(-0.2..0.2)),
                    (&idx2, rng.random_range(-0.3..0.3)),
                ],
            )
            .unwrap()
        })
        .collect();
    let dynamics = DynamicsSpec::new(f).unwrap();
    let x: Vec<f64> = (0..arity).map(|_| rng.random_range(-1.0..1.0)).collect();

    let fm = dynamics_matrix(&dynamics, degree).unwrap();
    let eg = gamma_expect(&gaussian_moments(&sigma, degree).unwrap(), degree, arity).unwrap();
    let composed = expected_composition(&fm, &eg, &b).unwrap();
    let p = degree * 2 * arity;
    let exact = eval_coeffs(&composed, p, &x);

    let fx = dynamics.eval(&x).unwrap();
    let normals: Vec<Normal<f64>> = sigma.iter().map(|&s| Normal::new(0.0, s).unwrap()).collect();
    let samples = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut y = vec![0.0; arity];
    for _ in 0..samples {
        for j in 0..arity {
            y[j] = fx[j] + normals[j].sample(rng);
        }
        let v = eval_coeffs(&b, degree, &y);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    (exact, mean, (var / samples as f64).sqrt())
}

#[test]
fn expectation_matches_monte_carlo() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    for case in 0..20 {
        let arity = 1 + case % 2;
        let degree = 1 + case % 3;
        let (exact, mean, se) = check_case(&mut rng, arity, degree);
        assert!(
            (exact - mean).abs() <= 4.0 * se + 1e-12,
            "case {case}: exact {exact}, sample mean {mean}, se {se}"
        );
    }
}

#[test]
fn quadratic_under_halving_dynamics() {
    let dynamics = DynamicsSpec::linear_diagonal(1, 0.5);
    let fm = dynamics_matrix(&dynamics, 2).unwrap();
    let eg = gamma_expect(&gaussian_moments(&[0.1], 2).unwrap(), 2, 1).unwrap();
    let c = expected_composition(&fm, &eg, &[0.0, 0.0, 1.0]).unwrap();
    let want = [0.01, 0.0, 0.25];
    for (got, want) in c.iter().zip(want) {
        assert!((got - want).abs() < 1e-12);
    }
}
