mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use static_pricing::worstcase::{constraint_hyperbola, equalize_direction, phi_of_profile};
use static_pricing::{
    equal_bias_phi, BiasProfile, search_min_phi, solve_poisson_rate, solve_two_bias, TwoBiasSubproblem,
};

#[test]
fn two_bias_solver_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..500 {
        let sub = common::random_subproblem(&mut rng);
        let sol = solve_two_bias(&sub).unwrap();
        let (grid, _, _) = common::two_bias_grid(&sub, 2000).expect("feasible subproblem");
        assert!((sub.constraint(sol.r1, sol.r2) - sub.target()).abs() <= 1e-8, "case {case}: {sub:?}");
        assert!(sol.objective >= grid - 1e-9, "case {case}: {sub:?} {sol:?} grid {grid}");
        assert!(sol.objective - grid <= 1e-4, "case {case}: {sub:?} {sol:?} grid {grid}");
        if sub.discriminant() > 0.0 {
            assert_eq!(sol.r1, sol.r2, "case {case}: {sub:?}");
        }
    }
}

#[test]
fn two_bias_named_examples() {
    // q2 = q_rest = 0: every feasible point ties, and the diagonal wins ties.
    let sub = TwoBiasSubproblem::new(0.6, 0.0, 0.0, 0.15).unwrap();
    let sol = solve_two_bias(&sub).unwrap();
    assert!((sol.r1 - 0.5).abs() < 1e-12 && (sol.r2 - 0.5).abs() < 1e-12);

    let sub = TwoBiasSubproblem::new(0.3, 0.3, 0.2, 0.5).unwrap();
    let sol = solve_two_bias(&sub).unwrap();
    assert_eq!(sol.r1, sol.r2);
    let (grid, _, _) = common::two_bias_grid(&sub, 2000).unwrap();
    assert!((sol.objective - grid).abs() <= 1e-4);

    assert!(TwoBiasSubproblem::new(0.3, 0.3, 0.2, 0.2).is_err());
}

#[test]
fn subproblems_from_profiles_agree_with_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..n);
        let biases: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
        let Ok(sub) = TwoBiasSubproblem::from_profile(&biases, 0, 1, k) else { continue };
        // The current pair is feasible, so the optimum is at least its objective.
        let current = sub.objective(1.0 - biases[0], 1.0 - biases[1]);
        let sol = solve_two_bias(&sub).unwrap();
        assert!(sol.objective >= current - 1e-12);
        let (grid, _, _) = common::two_bias_grid(&sub, 2000).unwrap();
        assert!(sol.objective >= grid - 1e-9 && sol.objective - grid <= 1e-4);
    }
}

/// Finite-difference check on `y(x)` over the part of [0, 1] where
/// `y in [0, 1]`. `sign` is +1 for convex, -1 for concave.
fn check_hyperbola(a: f64, b: f64, sign: f64) -> usize {
    let h = 1e-3;
    let mut checked = 0;
    for i in 1..1000 {
        let x = i as f64 * h;
        let (y0, y1, y2) =
            (constraint_hyperbola(a, b, x - h), constraint_hyperbola(a, b, x), constraint_hyperbola(a, b, x + h));
        if ![y0, y1, y2].iter().all(|y| (0.0..=1.0).contains(y)) {
            continue;
        }
        assert!(y2 < y1 && y1 < y0, "not decreasing at x = {x}, a = {a}, b = {b}");
        assert!(sign * (y2 - 2.0 * y1 + y0) > 0.0, "wrong curvature at x = {x}, a = {a}, b = {b}");
        checked += 1;
    }
    checked
}

#[test]
fn constraint_hyperbola_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut convex, mut concave) = (0, 0);
    for _ in 0..300 {
        let sub = common::random_subproblem(&mut rng);
        let (q1, q2, t) = (sub.q1, sub.q2, sub.target());
        if q1 == q2 || q2 == 0.0 {
            continue;
        }
        // r1 r2 + a (r1 + r2) = b after dividing by q1 - q2.
        let (a, b) = (q2 / (q1 - q2), t / (q1 - q2));
        if q1 > q2 {
            convex += check_hyperbola(a, b, 1.0);
        } else {
            concave += check_hyperbola(a, b, -1.0);
        }
    }
    assert!(convex > 1000 && concave > 1000, "convex {convex}, concave {concave}");
}

#[test]
fn equal_bias_value_falls_toward_the_poisson_ratio() {
    for k in 1..=5 {
        let phi_k = solve_poisson_rate(k).phi;
        let mut ns = vec![k + 1, 2 * k, 10 * k, 100 * k];
        ns.dedup();
        let mut prev = f64::INFINITY;
        for n in ns {
            let (_, phi) = equal_bias_phi(n, k).unwrap();
            assert!(phi <= prev + 1e-12, "k = {k}, n = {n}");
            assert!(phi >= phi_k - 1e-12, "k = {k}, n = {n}: {phi} < {phi_k}");
            prev = phi;
        }
    }
    let (_, phi) = equal_bias_phi(10_000, 2).unwrap();
    assert!((phi - 0.585).abs() < 2e-3);
}

#[test]
fn degenerate_profiles_are_excluded() {
    let certain = BiasProfile::new(vec![1.0, 1.0, 0.3]).unwrap();
    assert_eq!(phi_of_profile(&certain, 2).unwrap(), 0.0);
    assert!(equal_bias_phi(2, 2).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(1..n);
        let direction: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0f64).powi(3)).collect();
        if let Some((biases, phi)) = equalize_direction(&direction, k).unwrap() {
            assert!(biases.iter().filter(|&&b| b == 1.0).count() < k);
            assert!(phi > 0.0);
        }
    }
}

#[test]
fn search_finds_equal_biases_for_four_buyers() {
    let r = search_min_phi(4, 2, 50, 1).unwrap();
    let b = r.best_biases.biases();
    assert!(b.iter().all(|x| (x - b[0]).abs() < 1e-4), "{b:?}");
    assert!(r.gap.abs() <= 1e-6, "{r:?}");
}

#[test]
fn search_respects_the_single_unit_floor() {
    let r = search_min_phi(6, 1, 20, 2).unwrap();
    assert!(r.best_phi >= 0.5 - 1e-9);
}

#[test]
fn search_value_decreases_with_more_buyers() {
    let small = search_min_phi(3, 2, 10, 3).unwrap();
    let large = search_min_phi(30, 2, 4, 3).unwrap();
    let phi_2 = solve_poisson_rate(2).phi;
    assert!(large.best_phi < small.best_phi);
    assert!(large.best_phi >= phi_2 - 1e-9);
}

#[test]
fn search_is_schedule_independent() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&search_min_phi(5, 2, 6, 11).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}
