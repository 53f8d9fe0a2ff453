//! Worst-case competitive ratio of the equalizing price.
//!
//! The worst case is a Poisson count: `phi_k = delta_k(X^l) = mu_k(X^l)`
//! where `l = lambda_k` is the rate that equalizes the two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::CountDistribution;

/// Target for `|delta_k - mu_k|` at `lambda_k`.
pub const RATE_TOLERANCE: f64 = 1e-13;
const MAX_ITERATIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub k: usize,
    #[serde(rename = "lambda_k")]
    pub lambda: f64,
    #[serde(rename = "phi_k")]
    pub phi: f64,
    /// Alaei's adaptive-policy ratio `1 - sqrt(1 / (k + 3))`.
    #[serde(rename = "alpha_k")]
    pub alpha: f64,
    /// `(1 - phi_k) * sqrt(k / ln k)`; `None` for `k = 1`.
    pub asymptotic_gap: Option<f64>,
}

/// `(delta_k, mu_k)` of Poisson(rate).
pub fn poisson_delta_mu(rate: f64, k: usize) -> (f64, f64) {
    CountDistribution::truncated_poisson(rate).delta_mu(k)
}

/// `delta_k - mu_k` of Poisson(rate); strictly decreasing in the rate.
pub fn poisson_gap(rate: f64, k: usize) -> f64 {
    let (d, m) = poisson_delta_mu(rate, k);
    d - m
}

/// Finds `lambda_k` by bisection and reports `phi_k = delta_k(X^lambda_k)`.
pub fn solve_poisson_rate(k: usize) -> RatioPoint {
    assert!(k >= 1, "supply k must be at least 1");
    let kf = k as f64;
    let mut lo = 0.0;
    let mut hi = kf + 10.0 * kf.sqrt() + 20.0;
    while poisson_gap(hi, k) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut best = (f64::INFINITY, hi);
    for _ in 0..MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let h = poisson_gap(mid, k);
        if h.abs() < best.0 {
            best = (h.abs(), mid);
        }
        if h.abs() <= RATE_TOLERANCE {
            break;
        }
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = best.1;
    let (phi, _) = poisson_delta_mu(lambda, k);
    RatioPoint { k, lambda, phi, alpha: alaei_ratio(k), asymptotic_gap: asymptotic_gap(k, phi) }
}

/// `1 - sqrt(1 / (k + 3))`.
pub fn alaei_ratio(k: usize) -> f64 {
    1.0 - (1.0 / (k as f64 + 3.0)).sqrt()
}

fn asymptotic_gap(k: usize, phi: f64) -> Option<f64> {
    (k >= 2).then(|| {
        let kf = k as f64;
        (1.0 - phi) * (kf / kf.ln()).sqrt()
    })
}

/// One [`RatioPoint`] per `k` in `k_min..=k_max`, computed in parallel.
pub fn ratio_table(k_min: usize, k_max: usize) -> Vec<RatioPoint> {
    assert!(k_min >= 1, "k_min must be at least 1");
    (k_min..=k_max).into_par_iter().map(solve_poisson_rate).collect()
}

/// Smallest `k >= 2` in the table where the adaptive baseline is at least
/// as good as the static price.
pub fn alaei_crossover(table: &[RatioPoint]) -> Option<usize> {
    table.iter().find(|r| r.k >= 2 && r.alpha >= r.phi).map(|r| r.k)
}

/// First three decimals of `x`, truncated toward zero.
pub fn three_decimals(x: f64) -> String {
    format!("{:.3}", (x * 1000.0).trunc() / 1000.0)
}

/// CSV with header `k,lambda_k,phi_k,alpha_k`.
pub fn table_to_csv(table: &[RatioPoint]) -> String {
    let mut out = String::from("k,lambda_k,phi_k,alpha_k\n");
    for r in table {
        out.push_str(&format!("{},{},{},{}\n", r.k, r.lambda, r.phi, r.alpha));
    }
    out
}
