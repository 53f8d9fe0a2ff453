//! Numerical search for worst-case bias profiles.
//!
//! At the equalizing price only the biases `b_t = Pr[v_t >= p]` matter, so
//! the worst case is a minimization over Bernoulli profiles subject to
//! `delta_k = mu_k`. This module evaluates profiles, computes the equal-bias
//! benchmark, solves the two-bias Min-Revenue subproblem in closed form and
//! runs a multi-start local search that uses it as a descent step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::{BiasProfile, CountDistribution};
use crate::error::{Error, Result};

/// Target for `|delta - mu|` in the scalar equalizations below.
pub const EQUALIZE_TOLERANCE: f64 = 1e-13;
const MAX_ITERATIONS: usize = 400;
const MAX_SWEEPS: usize = 80;

/// `min(delta_k, mu_k)` of the Poisson binomial with these biases.
pub fn phi_of_profile(profile: &BiasProfile, k: usize) -> Result<f64> {
    let (d, m) = CountDistribution::poisson_binomial_capped(profile, k)?.delta_mu(k);
    Ok(d.min(m))
}

fn delta_mu(biases: &[f64], k: usize) -> Result<(f64, f64)> {
    let profile = BiasProfile::new(biases.to_vec())?;
    Ok(CountDistribution::poisson_binomial_capped(&profile, k)?.delta_mu(k))
}

/// Bisection on a scalar `s` in `[0, s_max]` for a profile map whose
/// `delta - mu` is non-increasing in `s`; returns the best `s` found.
fn equalize_scalar<F>(s_max: f64, k: usize, mut biases_at: F) -> Result<f64>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let (mut lo, mut hi) = (0.0, s_max);
    let mut best = (f64::INFINITY, hi);
    for _ in 0..MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let (d, m) = delta_mu(&biases_at(mid), k)?;
        let h = d - m;
        if h.abs() < best.0 {
            best = (h.abs(), mid);
        }
        if h.abs() <= EQUALIZE_TOLERANCE {
            break;
        }
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// Equal bias `b` with `delta_k(Bin(n, b)) = mu_k(Bin(n, b))` and the common
/// value `phi`.
pub fn equal_bias_phi(n: usize, k: usize) -> Result<(f64, f64)> {
    if k == 0 || n <= k {
        return Err(Error::InvalidInstance(format!(
            "need more buyers than units (n > k), got n = {n} and k = {k}"
        )));
    }
    let b = equalize_scalar(1.0, k, |b| vec![b; n])?;
    let (d, m) = delta_mu(&vec![b; n], k)?;
    Ok((b, d.min(m)))
}

/// Scales a positive direction until `delta = mu`.
///
/// Returns the equalized biases `min(1, s * d_t)` and their `phi`, or
/// `None` when `k` or more biases end up at 1 (then `delta = 0`).
pub fn equalize_direction(direction: &[f64], k: usize) -> Result<Option<(Vec<f64>, f64)>> {
    let min_d = direction.iter().copied().fold(f64::INFINITY, f64::min);
    if min_d.is_nan() || min_d <= 0.0 || direction.len() <= k {
        return Ok(None);
    }
    let scaled = |s: f64| direction.iter().map(|&d| (s * d).min(1.0)).collect::<Vec<_>>();
    let s = equalize_scalar(1.0 / min_d, k, scaled)?;
    let biases = scaled(s);
    if biases.iter().filter(|&&b| b == 1.0).count() >= k {
        return Ok(None);
    }
    let (d, m) = delta_mu(&biases, k)?;
    Ok(Some((biases, d.min(m))))
}

/// The Min-Revenue program over the biases of two buyers, all others fixed.
///
/// With `r_i = 1 - b_i` and `Xbar` the count of the other buyers:
/// `q1 = Pr[Xbar = k-1]`, `q2 = Pr[Xbar = k-2]`, `q_rest = Pr[Xbar <= k-3]`.
/// Maximize `(q2 + q_rest)(r1 + r2) + q1 r1 r2` subject to
/// `r1 r2 (q1 - q2) + (r1 + r2) q2 = phi_star - q_rest`, `(r1, r2) in [0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBiasSubproblem {
    pub q1: f64,
    pub q2: f64,
    pub q_rest: f64,
    pub phi_star: f64,
}

/// Which branch of the closed-form analysis produced the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBiasCase {
    /// `q2 = 0`: constraint `q1 r1 r2 = const`.
    NoTwoUnitMass,
    /// `q1 = q2 > 0`: linear constraint, objective ~ `r1 r2`.
    EqualOneTwoMass,
    /// `q1 < q2`: concave constraint, maximize `r1 + r2`.
    ConcaveConstraint,
    /// `q1 > q2`, positive discriminant: convex constraint, minimize `r1 + r2`.
    ConvexInterior,
    /// `q1 > q2`, negative discriminant: convex constraint, maximize `r1 + r2`.
    ConvexBoundary,
    /// Discriminant exactly zero: objective constant on the constraint.
    ZeroDiscriminant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBiasSolution {
    pub r1: f64,
    pub r2: f64,
    pub objective: f64,
    pub case: TwoBiasCase,
}

impl TwoBiasSubproblem {
    pub fn new(q1: f64, q2: f64, q_rest: f64, phi_star: f64) -> Result<Self> {
        let probs = [q1, q2, q_rest, phi_star];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || q1 + q2 + q_rest > 1.0 + 1e-12 {
            return Err(Error::InvalidBias(format!(
                "subproblem probabilities out of range: q1 = {q1}, q2 = {q2}, q_rest = {q_rest}, phi* = {phi_star}"
            )));
        }
        if phi_star - q_rest <= 0.0 {
            return Err(Error::Infeasible);
        }
        Ok(Self { q1, q2, q_rest, phi_star })
    }

    /// Builds the subproblem for buyers `i` and `j` of a profile, targeting
    /// the profile's current `delta_k`.
    pub fn from_profile(biases: &[f64], i: usize, j: usize, k: usize) -> Result<Self> {
        assert!(i != j && i < biases.len() && j < biases.len());
        let rest: Vec<f64> = biases
            .iter()
            .enumerate()
            .filter(|&(t, _)| t != i && t != j)
            .map(|(_, &b)| b)
            .collect();
        let xbar = CountDistribution::poisson_binomial_capped(&BiasProfile::new(rest)?, k)?;
        let q1 = xbar.pmf_at(k - 1);
        let q2 = if k >= 2 { xbar.pmf_at(k - 2) } else { 0.0 };
        let q_rest = if k >= 3 { (0..=k - 3).map(|x| xbar.pmf_at(x)).sum() } else { 0.0 };
        let (delta, _) = delta_mu(biases, k)?;
        Self::new(q1, q2, q_rest, delta)
    }

    /// `q2^2 - q_rest (q1 - q2)`.
    pub fn discriminant(&self) -> f64 {
        self.q2 * self.q2 - self.q_rest * (self.q1 - self.q2)
    }

    /// Left side of the constraint.
    pub fn constraint(&self, r1: f64, r2: f64) -> f64 {
        r1 * r2 * (self.q1 - self.q2) + (r1 + r2) * self.q2
    }

    /// Right side of the constraint.
    pub fn target(&self) -> f64 {
        self.phi_star - self.q_rest
    }

    pub fn objective(&self, r1: f64, r2: f64) -> f64 {
        (self.q2 + self.q_rest) * (r1 + r2) + self.q1 * r1 * r2
    }

    /// For fixed `r1` the constraint is linear in `r2`; returns that `r2`
    /// when it lies in [0, 1].
    pub fn solve_r2(&self, r1: f64) -> Option<f64> {
        let slope = r1 * (self.q1 - self.q2) + self.q2;
        let rhs = self.target() - r1 * self.q2;
        if slope > 0.0 {
            let r2 = rhs / slope;
            (-1e-12..=1.0 + 1e-12).contains(&r2).then(|| r2.clamp(0.0, 1.0))
        } else {
            None
        }
    }

    /// Root in [0, 1] of `(q1 - q2) r^2 + 2 q2 r = target`. The left side
    /// is non-decreasing on [0, 1] (its slope at 1 is `2 q1`), so there is
    /// at most one.
    fn diagonal(&self) -> Option<f64> {
        let a = self.q1 - self.q2;
        let b = self.q2;
        let c = self.target();
        let r = if a == 0.0 {
            if b == 0.0 {
                return None;
            }
            c / (2.0 * b)
        } else {
            let disc = b * b + a * c;
            if disc < 0.0 {
                return None;
            }
            // Citardauq form avoids cancellation for the root near b / a.
            let s = b + disc.sqrt();
            if s == 0.0 {
                return None;
            }
            let roots = [-s / a, c / s];
            *roots
                .iter()
                .filter(|r| (-1e-12..=1.0 + 1e-12).contains(*r))
                .min_by(|x, y| (*x - 0.5).abs().total_cmp(&(*y - 0.5).abs()))?
        };
        (-1e-12..=1.0 + 1e-12).contains(&r).then(|| r.clamp(0.0, 1.0))
    }

    fn classify(&self) -> TwoBiasCase {
        let d = self.discriminant();
        if self.q2 == 0.0 {
            TwoBiasCase::NoTwoUnitMass
        } else if self.q1 == self.q2 {
            TwoBiasCase::EqualOneTwoMass
        } else if self.q1 < self.q2 {
            TwoBiasCase::ConcaveConstraint
        } else if d > 0.0 {
            TwoBiasCase::ConvexInterior
        } else if d < 0.0 {
            TwoBiasCase::ConvexBoundary
        } else {
            TwoBiasCase::ZeroDiscriminant
        }
    }

    /// Closed-form optimum.
    ///
    /// The constraint's left side is increasing in both rates with range
    /// `[0, q1 + q2]`, so the program is feasible iff the diagonal meets the
    /// curve. A positive discriminant makes the diagonal point the unique
    /// optimum. Otherwise an optimum sits on the diagonal or on an edge
    /// `r_i in {0, 1}`, and all of those candidates are compared; ties go to
    /// the diagonal.
    pub fn solve(&self) -> Result<TwoBiasSolution> {
        let case = self.classify();
        let diag = self.diagonal().ok_or(Error::Infeasible)?;
        let on_diagonal =
            TwoBiasSolution { r1: diag, r2: diag, objective: self.objective(diag, diag), case };
        if self.discriminant() > 0.0 {
            return Ok(on_diagonal);
        }

        let mut best = on_diagonal;
        let mut consider = |r1: f64, r2: f64| {
            let obj = self.objective(r1, r2);
            if obj > best.objective + 1e-12 * best.objective.abs().max(1.0) {
                best = TwoBiasSolution { r1, r2, objective: obj, case };
            }
        };
        for edge in [0.0, 1.0] {
            if let Some(r2) = self.solve_r2(edge) {
                consider(edge, r2);
                consider(r2, edge);
            }
            if self.q1 == 0.0 && edge == 1.0 && (self.q2 - self.target()).abs() <= 1e-15 {
                // r1 = 1 satisfies the constraint for every r2.
                consider(1.0, 1.0);
            }
        }
        Ok(best)
    }
}

/// `solve_two_bias(sub)`.
pub fn solve_two_bias(sub: &TwoBiasSubproblem) -> Result<TwoBiasSolution> {
    sub.solve()
}

/// The branch `y = (b - a x) / (x + a)` of `xy + a(x + y) = b`.
pub fn constraint_hyperbola(a: f64, b: f64, x: f64) -> f64 {
    (b - a * x) / (x + a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub n: usize,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Best profile found, sorted descending.
    pub best_biases: BiasProfile,
    pub best_phi: f64,
    pub equal_bias: f64,
    pub equal_bias_phi: f64,
    /// `best_phi - equal_bias_phi`; negative would beat the equal-bias profile.
    pub gap: f64,
}

struct LocalState {
    direction: Vec<f64>,
    biases: Vec<f64>,
    phi: f64,
}

fn try_direction(direction: Vec<f64>, k: usize) -> Result<Option<LocalState>> {
    Ok(equalize_direction(&direction, k)?
        .map(|(biases, phi)| LocalState { direction, biases, phi }))
}

fn local_search(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<LocalState> {
    let mut state = loop {
        let direction: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        if let Some(s) = try_direction(direction, k)? {
            break s;
        }
    };
    let mut step = 0.5;
    for _ in 0..MAX_SWEEPS {
        let before = state.phi;

        // Pairwise re-optimization: keeps delta, lowers mu, then rescale.
        for i in 0..n {
            for j in i + 1..n {
                let sub = match TwoBiasSubproblem::from_profile(&state.biases, i, j, k) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let Ok(sol) = sub.solve() else { continue };
                let mut direction = state.biases.clone();
                direction[i] = 1.0 - sol.r1;
                direction[j] = 1.0 - sol.r2;
                if direction.iter().any(|&d| d <= 0.0) {
                    continue;
                }
                if let Some(cand) = try_direction(direction, k)? {
                    if cand.phi <= state.phi + 1e-15 {
                        state = cand;
                    }
                }
            }
        }

        // Random multiplicative coordinate moves.
        for i in 0..n {
            let z: f64 = rng.random_range(-1.0..1.0);
            let mut direction = state.direction.clone();
            direction[i] = (direction[i] * (step * z).exp()).max(1e-9);
            if let Some(cand) = try_direction(direction, k)? {
                if cand.phi < state.phi {
                    state = cand;
                }
            }
        }

        if before - state.phi <= 1e-15 {
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
    }
    Ok(state)
}

/// Multi-start local search for the profile minimizing `phi` on the
/// `delta = mu` surface. Restart `r` uses ChaCha8 stream `r` of `seed`, so
/// the result does not depend on scheduling.
pub fn search_min_phi(n: usize, k: usize, restarts: usize, seed: u64) -> Result<SearchResult> {
    let (equal_bias, equal_phi) = equal_bias_phi(n, k)?;
    let restarts = restarts.max(1);
    let found: Vec<Result<LocalState>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            local_search(n, k, &mut rng)
        })
        .collect();
    let mut best: Option<LocalState> = None;
    for s in found {
        let s = s?;
        if best.as_ref().is_none_or(|b| s.phi < b.phi) {
            best = Some(s);
        }
    }
    let best = best.expect("at least one restart");
    let mut biases = best.biases;
    biases.sort_by(|a, b| b.total_cmp(a));
    Ok(SearchResult {
        n,
        k,
        restarts,
        seed,
        best_biases: BiasProfile::new(biases)?,
        best_phi: best.phi,
        equal_bias,
        equal_bias_phi: equal_phi,
        gap: best.phi - equal_phi,
    })
}

/// `(n, b, phi)` rows of the equal-bias benchmark over an `n` grid.
pub fn equal_bias_curve(k: usize, ns: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    ns.par_iter()
        .map(|&n| equal_bias_phi(n, k).map(|(b, phi)| (n, b, phi)))
        .collect()
}
