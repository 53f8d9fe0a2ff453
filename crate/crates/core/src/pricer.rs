//! The equalizing static price.
//!
//! At price `p` with tie-break probability `q`, buyer `t` is counted in
//! `X_{p,q}` with probability `b_t = Pr[v_t > p] + q Pr[v_t = p]`. The gap
//! `g(p, q) = delta_k(X) - mu_k(X)` is non-decreasing in `p` and
//! non-increasing in `q`; the scheme posts the smallest `p` where it
//! reaches zero, randomizing at an atom when `g` jumps over zero there.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::count::{BiasProfile, CountDistribution};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::numeric::bisect_predicate;

/// Target for `|delta - mu|` at the returned price.
pub const EQUALIZE_TOLERANCE: f64 = 1e-10;
/// Width at which the price bisection stops.
pub const PRICE_BRACKET_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
/// Minimum point mass for the tie-break branch to engage.
pub const ATOM_THRESHOLD: f64 = 1e-12;
const UPPER_QUANTILE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingResult {
    pub price: f64,
    /// Probability that a buyer whose value equals the price is served.
    pub tie_break: f64,
    pub delta: f64,
    pub mu: f64,
    /// `min(delta, mu)`: the certified welfare-to-optimum ratio.
    pub guarantee: f64,
    /// Per-buyer `b_t(p, q)` in instance order.
    pub effective_biases: BiasProfile,
}

/// `b_t = strict_tail_t(p) + q * atom_t(p)` in instance order.
pub fn effective_biases(instance: &Instance, p: f64, q: f64) -> BiasProfile {
    let biases = instance
        .distributions()
        .iter()
        .map(|d| (d.strict_tail(p) + q * d.atom(p)).clamp(0.0, 1.0))
        .collect();
    BiasProfile::new(biases).expect("biases are clamped to [0, 1]")
}

/// `(delta_k, mu_k)` of the count at `(p, q)`.
///
/// Biases are sorted before the convolution so the result is bit-identical
/// under any permutation of the buyers.
pub fn evaluate_price(instance: &Instance, p: f64, q: f64) -> Result<(f64, f64)> {
    let mut biases = effective_biases(instance, p, q).into_inner();
    biases.sort_by(f64::total_cmp);
    let profile = BiasProfile::new(biases)?;
    let count = CountDistribution::poisson_binomial_capped(&profile, instance.k())?;
    Ok(count.delta_mu(instance.k()))
}

fn gap(instance: &Instance, p: f64, q: f64) -> Result<f64> {
    let (delta, mu) = evaluate_price(instance, p, q)?;
    Ok(delta - mu)
}

fn result_at(instance: &Instance, price: f64, tie_break: f64) -> Result<PricingResult> {
    let (delta, mu) = evaluate_price(instance, price, tie_break)?;
    Ok(PricingResult {
        price,
        tie_break,
        delta,
        mu,
        guarantee: delta.min(mu),
        effective_biases: effective_biases(instance, price, tie_break),
    })
}

/// Solves `delta_k(X_p) = mu_k(X_p)` for the smallest such price.
///
/// Bisection on `g(p, 1)` over `[0, hi]`, where `hi` starts at the largest
/// (1 - 1e-9)-quantile and doubles until `g(hi, 1) >= 0`. If `g` jumps
/// across zero at an atom `a`, the price is fixed at `a` and the tie-break
/// probability is bisected instead.
pub fn solve_static_price(instance: &Instance) -> Result<PricingResult> {
    // Propagate evaluation errors out of the bisection closures.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut g = |p: f64, q: f64| -> f64 {
        match gap(instance, p, q) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };

    let g_zero = g(0.0, 1.0);
    let mut hi = instance
        .distributions()
        .iter()
        .map(|d| d.quantile(UPPER_QUANTILE))
        .fold(0.0_f64, f64::max);
    if !(hi.is_finite() && hi > 0.0) {
        hi = 1.0;
    }
    let mut g_hi = g(hi, 1.0);
    let mut doublings = 0;
    while g_hi < 0.0 && doublings < MAX_ITERATIONS && hi.is_finite() {
        hi *= 2.0;
        g_hi = g(hi, 1.0);
        doublings += 1;
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if g_zero >= 0.0 || g_hi < 0.0 {
        return Err(Error::BracketNotFound { lo: 0.0, hi });
    }

    let (lo, hi) =
        bisect_predicate(0.0, hi, PRICE_BRACKET_TOLERANCE, MAX_ITERATIONS, |p| g(p, 1.0) >= 0.0);
    let g_lo = g(lo, 1.0);
    let g_hi = g(hi, 1.0);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if g_lo.abs() <= EQUALIZE_TOLERANCE {
        return result_at(instance, lo, 1.0);
    }

    if let Some((price, q)) = solve_at_atom(instance, lo, hi, &mut g) {
        if let Some(e) = failure.take() {
            return Err(e);
        }
        return result_at(instance, price, q);
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }

    // No atom in the final bracket: g is continuous here, so the bracket
    // endpoints are as close to equalized as double precision allows.
    if g_hi.abs() <= g_lo.abs() {
        result_at(instance, hi, 1.0)
    } else {
        result_at(instance, lo, 1.0)
    }
}

/// Looks for an atom in `[lo, hi]` where `g(a, 1) <= 0 <= g(a, 0)` and
/// bisects the tie-break probability there.
fn solve_at_atom<G>(instance: &Instance, lo: f64, hi: f64, g: &mut G) -> Option<(f64, f64)>
where
    G: FnMut(f64, f64) -> f64,
{
    let mut candidates: Vec<f64> = instance
        .distributions()
        .iter()
        .flat_map(|d| d.atoms())
        .map(|a| a.value)
        .filter(|&a| a >= lo && a <= hi)
        .filter(|&a| {
            instance.distributions().iter().any(|d| d.tail(a) - d.strict_tail(a) > ATOM_THRESHOLD)
        })
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    for a in candidates {
        let with_ties = g(a, 1.0);
        let without_ties = g(a, 0.0);
        if with_ties.abs() <= EQUALIZE_TOLERANCE {
            return Some((a, 1.0));
        }
        if without_ties.abs() <= EQUALIZE_TOLERANCE {
            return Some((a, 0.0));
        }
        if !(with_ties < 0.0 && without_ties > 0.0) {
            continue;
        }
        // g(a, q) is continuous and non-increasing in q.
        let (mut q_lo, mut q_hi) = (0.0, 1.0);
        let mut best = (f64::INFINITY, 0.0);
        for _ in 0..MAX_ITERATIONS {
            let mid = 0.5 * (q_lo + q_hi);
            let v = g(a, mid);
            if v.abs() < best.0 {
                best = (v.abs(), mid);
            }
            if v.abs() <= EQUALIZE_TOLERANCE || mid <= q_lo || mid >= q_hi {
                break;
            }
            if v > 0.0 {
                q_lo = mid;
            } else {
                q_hi = mid;
            }
        }
        return Some((a, best.1));
    }
    None
}

/// The certified ratio `min(delta, mu)` of a pricing result.
pub fn guarantee_lower_bound(result: &PricingResult) -> f64 {
    result.delta.min(result.mu)
}
