//! Distribution of the number of buyers at or above the price.
//!
//! `X_p` is a sum of independent Bernoullis (a Poisson binomial); its
//! large-`n` limit with equal biases is Poisson. The pricing scheme only
//! looks at `X` through two statistics:
//!
//! * `delta_k(X) = Pr[X <= k - 1]`, the chance supply is left at the end;
//! * `mu_k(X) = E[min(X, k)] / k`, the expected fraction of units sold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sum_compensated, CompensatedSum};

const MASS_TOLERANCE: f64 = 1e-12;

/// Poisson tail mass left outside the stored PMF.
const RELATIVE_FLOOR: f64 = 1e-24;

pub const POISSON_TAIL_CUTOFF: f64 = 1e-14;

/// Per-buyer probabilities `b_t` of landing at or above the price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasProfile(Vec<f64>);

impl BiasProfile {
    pub fn new(biases: Vec<f64>) -> Result<Self> {
        if let Some(b) = biases.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::InvalidBias(format!("bias {b} is outside [0, 1]")));
        }
        Ok(Self(biases))
    }

    /// `n` copies of `b`.
    pub fn uniform(n: usize, b: f64) -> Result<Self> {
        Self::new(vec![b; n])
    }

    pub fn biases(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Number of biases exactly equal to 1.
    pub fn certain_count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1.0).count()
    }
}

/// An exact (or exactly truncated) count distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum CountDistribution {
    /// Full PMF over `0..=n`.
    PoissonBinomial { pmf: Vec<f64> },
    /// PMF of `min(X, cap)`: entries `0..cap` are exact, the last entry holds
    /// `Pr[X >= cap]`. Answers `delta_k` and `mu_k` for any `k <= cap`.
    Capped { pmf: Vec<f64> },
    /// Poisson(rate) restricted to `start..=start + pmf.len() - 1`; the mass
    /// above the last index is `tail_mass <= 1e-14`, the mass below `start`
    /// is below double precision.
    TruncatedPoisson { rate: f64, start: usize, pmf: Vec<f64>, tail_mass: f64 },
}

fn check_mass(pmf: &mut [f64]) -> Result<()> {
    for p in pmf.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total = sum_compensated(pmf.iter().copied());
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NumericalDegradation { total });
    }
    Ok(())
}

impl CountDistribution {
    /// Exact PMF of a sum of independent Bernoullis by the standard
    /// one-trial-at-a-time convolution. `O(n^2)` time, `O(n)` space.
    ///
    /// Each update is written as `p_i += b (p_{i-1} - p_i)`, which moves mass
    /// between bins; `p_i (1 - b) + p_{i-1} b` instead loses the rounding of
    /// `(1 - b) + b` on every trial, a drift near 1e-11 at `n = 1e5`.
    pub fn poisson_binomial(profile: &BiasProfile) -> Result<Self> {
        let n = profile.len();
        let mut pmf = vec![0.0; n + 1];
        pmf[0] = 1.0;
        for (m, &b) in profile.biases().iter().enumerate() {
            for i in (1..=m + 1).rev() {
                pmf[i] += b * (pmf[i - 1] - pmf[i]);
            }
            pmf[0] -= b * pmf[0];
        }
        check_mass(&mut pmf)?;
        Ok(Self::PoissonBinomial { pmf })
    }

    /// PMF of `min(X, cap)` in `O(n * cap)`.
    pub fn poisson_binomial_capped(profile: &BiasProfile, cap: usize) -> Result<Self> {
        assert!(cap >= 1, "cap must be at least 1");
        let mut pmf = vec![0.0; cap + 1];
        pmf[0] = 1.0;
        let mut top = 0usize;
        for &b in profile.biases() {
            // Only indices up to `top + 1` can be non-zero after this trial.
            let upper = (top + 1).min(cap);
            if upper == cap {
                // The last bin absorbs: once at `cap`, always at `cap`.
                pmf[cap] += pmf[cap - 1] * b;
            }
            for i in (1..=upper.min(cap - 1)).rev() {
                pmf[i] += b * (pmf[i - 1] - pmf[i]);
            }
            pmf[0] -= b * pmf[0];
            top = upper;
        }
        check_mass(&mut pmf)?;
        Ok(Self::Capped { pmf })
    }

    /// Poisson(rate) PMF, truncated once the remaining tail is at most 1e-14.
    ///
    /// Terms are generated by the ratio recurrence outward from the mode and
    /// normalised at the end, so there is no overflow for rates up to well
    /// past 1e4 and no `exp(-rate)` underflow.
    pub fn truncated_poisson(rate: f64) -> Self {
        assert!(rate.is_finite() && rate >= 0.0, "poisson rate must be finite and non-negative");
        if rate == 0.0 {
            return Self::TruncatedPoisson { rate, start: 0, pmf: vec![1.0], tail_mass: 0.0 };
        }
        let mode = rate.floor() as usize;
        // Terms below RELATIVE_FLOOR of the mode term are dropped; that is
        // within ~11 standard deviations, so this spread never binds.
        let spread = (40.0 * rate.sqrt() + 40.0).ceil() as usize;
        let lo = mode.saturating_sub(spread);
        let hi = mode + spread;
        let mut w = vec![0.0; hi - lo + 1];
        w[mode - lo] = 1.0;
        for i in (lo..mode).rev() {
            // p_i = p_{i+1} * (i + 1) / rate
            let next = w[i + 1 - lo];
            w[i - lo] = next * (i + 1) as f64 / rate;
            if w[i - lo] < RELATIVE_FLOOR {
                break;
            }
        }
        for i in mode + 1..=hi {
            let prev = w[i - 1 - lo];
            w[i - lo] = prev * rate / i as f64;
            if w[i - lo] < RELATIVE_FLOOR {
                break;
            }
        }
        let total = sum_compensated(w.iter().copied());
        for x in w.iter_mut() {
            *x /= total;
        }
        // Drop the negligible lower run so the stored PMF starts where mass does.
        let first = w.iter().position(|&x| x > 0.0).unwrap_or(0);
        let start = lo + first;
        // suffix[j] = mass strictly above relative index j.
        let mut end = w.len() - 1;
        let mut above = 0.0;
        while end > first {
            let with_end = above + w[end];
            if with_end > POISSON_TAIL_CUTOFF {
                break;
            }
            above = with_end;
            end -= 1;
        }
        let pmf = w[first..=end].to_vec();
        Self::TruncatedPoisson { rate, start, pmf, tail_mass: above }
    }

    /// `Pr[X = i]` (for `Capped`, the last index means `X >= cap`).
    pub fn pmf_at(&self, i: usize) -> f64 {
        match self {
            Self::PoissonBinomial { pmf } | Self::Capped { pmf } => {
                pmf.get(i).copied().unwrap_or(0.0)
            }
            Self::TruncatedPoisson { start, pmf, .. } => {
                if i < *start {
                    0.0
                } else {
                    pmf.get(i - start).copied().unwrap_or(0.0)
                }
            }
        }
    }

    /// Largest index with stored mass.
    pub fn max_index(&self) -> usize {
        match self {
            Self::PoissonBinomial { pmf } | Self::Capped { pmf } => pmf.len() - 1,
            Self::TruncatedPoisson { start, pmf, .. } => start + pmf.len() - 1,
        }
    }

    pub fn tail_mass(&self) -> f64 {
        match self {
            Self::TruncatedPoisson { tail_mass, .. } => *tail_mass,
            _ => 0.0,
        }
    }

    fn assert_within_cap(&self, k: usize) {
        assert!(k >= 1, "k must be at least 1");
        if let Self::Capped { pmf } = self {
            assert!(k < pmf.len(), "k = {k} exceeds the cap {} of this distribution", pmf.len() - 1);
        }
    }

    /// `Pr[X <= k - 1]`.
    pub fn delta(&self, k: usize) -> f64 {
        self.assert_within_cap(k);
        sum_compensated((0..k.min(self.max_index() + 1)).map(|i| self.pmf_at(i))).min(1.0)
    }

    /// `Pr[X >= k]`, summed directly rather than as `1 - delta`.
    pub fn prob_at_least(&self, k: usize) -> f64 {
        self.assert_within_cap(k);
        let mut acc = CompensatedSum::new();
        for i in k..=self.max_index() {
            acc.add(self.pmf_at(i));
        }
        acc.add(self.tail_mass());
        acc.value().min(1.0)
    }

    /// `E[min(X, k)] / k`. The Poisson tail beyond the stored PMF is counted
    /// as selling all `k` units.
    pub fn mu(&self, k: usize) -> f64 {
        self.assert_within_cap(k);
        let mut acc = CompensatedSum::new();
        let below = k.min(self.max_index() + 1);
        for i in 1..below {
            acc.add(i as f64 * self.pmf_at(i));
        }
        acc.add(k as f64 * self.prob_at_least(k));
        (acc.value() / k as f64).clamp(0.0, 1.0)
    }

    /// Both statistics at once.
    pub fn delta_mu(&self, k: usize) -> (f64, f64) {
        (self.delta(k), self.mu(k))
    }

    /// Expanded PMF over `0..=max_index` (Poisson leading zeros included).
    pub fn pmf(&self) -> Vec<f64> {
        (0..=self.max_index()).map(|i| self.pmf_at(i)).collect()
    }
}

/// `delta_k(X) = Pr[X <= k - 1]`.
pub fn delta_k(x: &CountDistribution, k: usize) -> f64 {
    x.delta(k)
}

/// `mu_k(X) = E[min(X, k)] / k`.
pub fn mu_k(x: &CountDistribution, k: usize) -> f64 {
    x.mu(k)
}

/// Total-variation distance between two count PMFs (tails included).
pub fn total_variation(a: &CountDistribution, b: &CountDistribution) -> f64 {
    let hi = a.max_index().max(b.max_index());
    let body = sum_compensated((0..=hi).map(|i| (a.pmf_at(i) - b.pmf_at(i)).abs()));
    0.5 * (body + a.tail_mass() + b.tail_mass())
}
