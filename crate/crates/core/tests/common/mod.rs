//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use static_pricing::{Atom, Instance, TwoBiasSubproblem, ValueDistribution};
use statrs::function::gamma::{gamma_lr, gamma_ur};

/// PMF of a sum of Bernoullis by enumerating all `2^n` outcomes.
pub fn brute_force_pmf(biases: &[f64]) -> Vec<f64> {
    let n = biases.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut prob = 1.0;
        for (t, &b) in biases.iter().enumerate() {
            prob *= if mask >> t & 1 == 1 { b } else { 1.0 - b };
        }
        pmf[mask.count_ones() as usize] += prob;
    }
    pmf
}

/// `(delta_k, mu_k)` of Poisson(rate) from regularized incomplete gammas:
/// `Pr[X <= k-1] = Q(k, l)`, `sum_{i<k} i p_i = l Q(k-1, l)`,
/// `Pr[X >= k] = P(k, l)`.
pub fn poisson_gamma_oracle(rate: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let delta = gamma_ur(kf, rate);
    let partial = if k >= 2 { rate * gamma_ur(kf - 1.0, rate) } else { 0.0 };
    let mu = (partial + kf * gamma_lr(kf, rate)) / kf;
    (delta, mu)
}

/// Best objective of the two-bias program over `points`-point scans of
/// `r1` (solving the linear constraint for `r2`) and of `r2` (solving for
/// `r1`).
pub fn two_bias_grid(sub: &TwoBiasSubproblem, points: usize) -> Option<(f64, f64, f64)> {
    let (q1, q2, q3, target) = (sub.q1, sub.q2, sub.q_rest, sub.phi_star - sub.q_rest);
    let objective = |r1: f64, r2: f64| (q2 + q3) * (r1 + r2) + q1 * r1 * r2;
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        // r2 * (x (q1 - q2) + q2) = target - x q2
        let coef = x * (q1 - q2) + q2;
        if coef <= 0.0 {
            continue;
        }
        let y = (target - x * q2) / coef;
        if !(0.0..=1.0).contains(&y) {
            continue;
        }
        for (r1, r2) in [(x, y), (y, x)] {
            let obj = objective(r1, r2);
            if best.is_none_or(|b| obj > b.0) {
                best = Some((obj, r1, r2));
            }
        }
    }
    best
}

/// A feasible subproblem: target strictly inside `(0, q1 + q2]`.
pub fn random_subproblem(rng: &mut ChaCha8Rng) -> TwoBiasSubproblem {
    loop {
        let mut w = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        // Occasionally force the degenerate shapes.
        match rng.random_range(0..8) {
            0 => w[1] = 0.0,
            1 => w[1] = w[0],
            2 => w[2] = 0.0,
            _ => {}
        }
        let s: f64 = w.iter().sum();
        let (q1, q2, q3) = (w[0] / s, w[1] / s, w[2] / s);
        if q1 + q2 <= 1e-9 {
            continue;
        }
        let target = rng.random_range(1e-6..=1.0) * (q1 + q2);
        if let Ok(sub) = TwoBiasSubproblem::new(q1, q2, q3, q3 + target) {
            return sub;
        }
    }
}

/// Exact `E[welfare]` of the sale on a discrete instance, by enumerating
/// every value profile and every tie-break coin outcome.
pub fn exact_expected_welfare(instance: &Instance, price: f64, q: f64) -> f64 {
    let supports: Vec<Vec<Atom>> =
        instance.distributions().iter().map(|d| d.atoms()).collect();
    let order = instance.arrival_order();
    let n = instance.n();
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let values: Vec<f64> = (0..n).map(|t| supports[t][idx[t]].value).collect();
        let prob: f64 = (0..n).map(|t| supports[t][idx[t]].mass).product();
        // Walk the order; at a tie the buyer buys w.p. q.
        fn walk(order: &[usize], values: &[f64], price: f64, q: f64, left: usize) -> f64 {
            let Some((&t, rest)) = order.split_first() else { return 0.0 };
            if left == 0 {
                return 0.0;
            }
            let v = values[t];
            if v > price {
                v + walk(rest, values, price, q, left - 1)
            } else if v == price {
                q * (v + walk(rest, values, price, q, left - 1))
                    + (1.0 - q) * walk(rest, values, price, q, left)
            } else {
                walk(rest, values, price, q, left)
            }
        }
        total += prob * walk(&order, &values, price, q, instance.k());

        let mut t = 0;
        loop {
            if t == n {
                return total;
            }
            idx[t] += 1;
            if idx[t] < supports[t].len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

/// A random distribution drawn from every family.
pub fn random_distribution(rng: &mut ChaCha8Rng) -> ValueDistribution {
    match rng.random_range(0..6) {
        0 => ValueDistribution::point_mass(rng.random_range(0.1..3.0)).unwrap(),
        1 => ValueDistribution::bernoulli(rng.random_range(0.5..4.0), rng.random_range(0.05..0.9))
            .unwrap(),
        2 => {
            let lo = rng.random_range(0.0..1.0);
            ValueDistribution::uniform(lo, lo + rng.random_range(0.1..2.0)).unwrap()
        }
        3 => ValueDistribution::exponential(rng.random_range(0.5..3.0), rng.random_range(0.0..0.5))
            .unwrap(),
        4 => {
            let m = rng.random_range(1..=4);
            let mut weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= s);
            let support = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Atom { value: 0.25 * (i + 1) as f64 + rng.random_range(0.0..0.2), mass: w })
                .collect();
            // Renormalize exactly: the last mass absorbs rounding.
            ValueDistribution::discrete(renormalized(support)).unwrap()
        }
        _ => ValueDistribution::truncated_normal(rng.random_range(-0.5..2.0), rng.random_range(0.2..1.5))
            .unwrap(),
    }
}

fn renormalized(mut support: Vec<Atom>) -> Vec<Atom> {
    let head: f64 = support[..support.len() - 1].iter().map(|a| a.mass).sum();
    support.last_mut().unwrap().mass = 1.0 - head;
    support
}

/// The 30-instance Monte Carlo corpus: mixed families, `k in [1, 8]`,
/// `n in [k + 1, 40]`.
pub fn corpus() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    (0..30)
        .map(|i| {
            let k = 1 + i % 8;
            let n = rng.random_range(k + 1..=40);
            let dists = (0..n).map(|_| random_distribution(&mut rng)).collect();
            Instance::new(k, dists).unwrap()
        })
        .collect()
}

/// Small discrete instance: `n <= 6`, supports of at most 3 values.
pub fn small_discrete_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=6);
    let k = rng.random_range(1..n);
    let dists = (0..n)
        .map(|_| {
            let m = rng.random_range(1..=3);
            let support = (0..m)
                .map(|_| Atom { value: rng.random_range(0..5) as f64 * 0.5, mass: rng.random_range(0.1..1.0) })
                .collect::<Vec<_>>();
            let s: f64 = support.iter().map(|a| a.mass).sum();
            let mut support: Vec<Atom> =
                support.into_iter().map(|a| Atom { value: a.value, mass: a.mass / s }).collect();
            // Guarantee positive value mass.
            support[0].value += 0.5;
            ValueDistribution::discrete(renormalized(support)).unwrap()
        })
        .collect();
    Instance::new(k, dists).unwrap()
}
