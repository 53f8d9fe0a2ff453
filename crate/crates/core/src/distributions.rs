//! Buyer value priors.
//!
//! Every family is supported on the non-negative reals and exposes the exact
//! statistics the pricing scheme needs: the weak tail `Pr[v >= p]`, the
//! strict tail `Pr[v > p]`, point masses, the expected excess `E[(v - p)^+]`
//! and inverse-transform sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    normal_excess, normal_pdf, normal_upper_tail, normal_upper_tail_inv, sum_compensated,
};

const MASS_TOLERANCE: f64 = 1e-12;

/// One point of a discrete prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// A buyer's value distribution.
///
/// Build through the checked constructors (or deserialize); the enum is
/// public so callers can match on the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    rename_all = "snake_case",
    deny_unknown_fields,
    try_from = "DistributionSpec"
)]
pub enum ValueDistribution {
    PointMass { value: f64 },
    /// `value` with probability `bias`, otherwise 0.
    Bernoulli { value: f64, bias: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `shift + Exp(rate)`.
    Exponential { rate: f64, shift: f64 },
    /// Sorted by value, no repeated values, masses summing to 1.
    Discrete { support: Vec<Atom> },
    /// `N(mean, stddev^2)` conditioned on being non-negative.
    TruncatedNormal { mean: f64, stddev: f64 },
}

/// Wire mirror of [`ValueDistribution`]; deserialized values are routed
/// through the checked constructors.
#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub(crate) enum DistributionSpec {
    PointMass {
        value: f64,
    },
    Bernoulli {
        value: f64,
        bias: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    Discrete {
        support: Vec<Atom>,
    },
    TruncatedNormal {
        mean: f64,
        stddev: f64,
    },
}

impl TryFrom<DistributionSpec> for ValueDistribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::PointMass { value } => Self::point_mass(value),
            DistributionSpec::Bernoulli { value, bias } => Self::bernoulli(value, bias),
            DistributionSpec::Uniform { lo, hi } => Self::uniform(lo, hi),
            DistributionSpec::Exponential { rate, shift } => Self::exponential(rate, shift),
            DistributionSpec::Discrete { support } => Self::discrete(support),
            DistributionSpec::TruncatedNormal { mean, stddev } => {
                Self::truncated_normal(mean, stddev)
            }
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and non-negative, got {x}")))
    }
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {x}")))
    }
}

impl ValueDistribution {
    pub fn point_mass(value: f64) -> Result<Self> {
        check_nonneg("value", value)?;
        Ok(Self::PointMass { value })
    }

    pub fn bernoulli(value: f64, bias: f64) -> Result<Self> {
        check_nonneg("value", value)?;
        if value == 0.0 {
            return Err(invalid("bernoulli value must be positive"));
        }
        check_prob("bias", bias)?;
        Ok(Self::Bernoulli { value, bias })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_nonneg("lo", lo)?;
        if !(hi.is_finite() && hi > lo) {
            return Err(invalid(format!("uniform needs hi > lo, got [{lo}, {hi}]")));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64, shift: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(format!("exponential rate must be positive, got {rate}")));
        }
        check_nonneg("shift", shift)?;
        Ok(Self::Exponential { rate, shift })
    }

    /// Sorts the support and merges repeated values.
    pub fn discrete(mut support: Vec<Atom>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("discrete support is empty"));
        }
        for a in &support {
            check_nonneg("support value", a.value)?;
            check_prob("support mass", a.mass)?;
        }
        support.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut merged: Vec<Atom> = Vec::with_capacity(support.len());
        for a in support {
            match merged.last_mut() {
                Some(last) if last.value == a.value => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let total = sum_compensated(merged.iter().map(|a| a.mass));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("discrete masses sum to {total}, expected 1")));
        }
        Ok(Self::Discrete { support: merged })
    }

    pub fn truncated_normal(mean: f64, stddev: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid("truncated normal mean must be finite"));
        }
        if !(stddev.is_finite() && stddev > 0.0) {
            return Err(invalid(format!("truncated normal stddev must be positive, got {stddev}")));
        }
        // Q(-mean/stddev) is the retained mass; it must not underflow.
        if normal_upper_tail(-mean / stddev) < 1e-300 {
            return Err(invalid("truncated normal has no mass above 0"));
        }
        Ok(Self::TruncatedNormal { mean, stddev })
    }

    /// Re-checks the invariants of a value that may have been built directly.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = match self {
            Self::PointMass { value } => Self::point_mass(*value)?,
            Self::Bernoulli { value, bias } => Self::bernoulli(*value, *bias)?,
            Self::Uniform { lo, hi } => Self::uniform(*lo, *hi)?,
            Self::Exponential { rate, shift } => Self::exponential(*rate, *shift)?,
            Self::Discrete { support } => Self::discrete(support.clone())?,
            Self::TruncatedNormal { mean, stddev } => Self::truncated_normal(*mean, *stddev)?,
        };
        if &rebuilt != self {
            return Err(invalid("discrete support must be sorted with distinct values"));
        }
        Ok(())
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::PointMass { .. } => "point_mass",
            Self::Bernoulli { .. } => "bernoulli",
            Self::Uniform { .. } => "uniform",
            Self::Exponential { .. } => "exponential",
            Self::Discrete { .. } => "discrete",
            Self::TruncatedNormal { .. } => "truncated_normal",
        }
    }

    /// `Pr[v > p]`.
    pub fn strict_tail(&self, p: f64) -> f64 {
        match self {
            Self::PointMass { value } => indicator(*value > p),
            Self::Bernoulli { value, bias } => {
                if p < 0.0 {
                    1.0
                } else if p < *value {
                    *bias
                } else {
                    0.0
                }
            }
            Self::Uniform { lo, hi } => {
                if p <= *lo {
                    1.0
                } else if p >= *hi {
                    0.0
                } else {
                    (hi - p) / (hi - lo)
                }
            }
            Self::Exponential { rate, shift } => {
                if p <= *shift {
                    1.0
                } else {
                    (-rate * (p - shift)).exp()
                }
            }
            Self::Discrete { support } => {
                sum_compensated(support.iter().rev().take_while(|a| a.value > p).map(|a| a.mass))
                    .min(1.0)
            }
            Self::TruncatedNormal { mean, stddev } => {
                if p <= 0.0 {
                    1.0
                } else {
                    let kept = normal_upper_tail(-mean / stddev);
                    (normal_upper_tail((p - mean) / stddev) / kept).min(1.0)
                }
            }
        }
    }

    /// `Pr[v = p]`; zero for the continuous families.
    pub fn atom(&self, p: f64) -> f64 {
        match self {
            Self::PointMass { value } => indicator(*value == p),
            Self::Bernoulli { value, bias } => {
                if p == *value {
                    *bias
                } else if p == 0.0 {
                    1.0 - bias
                } else {
                    0.0
                }
            }
            Self::Discrete { support } => support
                .binary_search_by(|a| a.value.total_cmp(&p))
                .map(|i| support[i].mass)
                .unwrap_or(0.0),
            Self::Uniform { .. } | Self::Exponential { .. } | Self::TruncatedNormal { .. } => 0.0,
        }
    }

    /// `Pr[v >= p]`, defined as `strict_tail(p) + atom(p)`.
    pub fn tail(&self, p: f64) -> f64 {
        self.strict_tail(p) + self.atom(p)
    }

    /// `E[(v - p)^+]`, in closed form per family.
    pub fn mean_above(&self, p: f64) -> f64 {
        match self {
            Self::PointMass { value } => (value - p).max(0.0),
            Self::Bernoulli { value, bias } => {
                bias * (value - p).max(0.0) + (1.0 - bias) * (-p).max(0.0)
            }
            Self::Uniform { lo, hi } => {
                if p <= *lo {
                    0.5 * (lo + hi) - p
                } else if p >= *hi {
                    0.0
                } else {
                    (hi - p) * (hi - p) / (2.0 * (hi - lo))
                }
            }
            Self::Exponential { rate, shift } => {
                if p <= *shift {
                    shift + 1.0 / rate - p
                } else {
                    (-rate * (p - shift)).exp() / rate
                }
            }
            Self::Discrete { support } => sum_compensated(
                support
                    .iter()
                    .rev()
                    .take_while(|a| a.value > p)
                    .map(|a| a.mass * (a.value - p)),
            ),
            Self::TruncatedNormal { mean, stddev } => {
                let kept = normal_upper_tail(-mean / stddev);
                if p <= 0.0 {
                    // E[v] - p with E[v] = mean + stddev * pdf(a) / Q(a), a = -mean/stddev.
                    let a = -mean / stddev;
                    mean + stddev * normal_pdf(a) / kept - p
                } else {
                    stddev * normal_excess((p - mean) / stddev) / kept
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean_above(0.0)
    }

    /// Left-continuous inverse CDF: the smallest `x` with `Pr[v <= x] >= level`.
    pub fn quantile(&self, level: f64) -> f64 {
        let level = level.clamp(0.0, 1.0);
        match self {
            Self::PointMass { value } => *value,
            Self::Bernoulli { value, bias } => {
                if level <= 1.0 - bias {
                    0.0
                } else {
                    *value
                }
            }
            Self::Uniform { lo, hi } => lo + level * (hi - lo),
            Self::Exponential { rate, shift } => {
                if level >= 1.0 {
                    f64::INFINITY
                } else {
                    shift - (-level).ln_1p() / rate
                }
            }
            Self::Discrete { support } => {
                let mut cdf = 0.0;
                for a in support {
                    cdf += a.mass;
                    if cdf >= level {
                        return a.value;
                    }
                }
                support.last().map_or(0.0, |a| a.value)
            }
            Self::TruncatedNormal { mean, stddev } => {
                self.truncated_normal_upper_quantile(*mean, *stddev, 1.0 - level)
            }
        }
    }

    /// The `x >= 0` with `Pr[v > x] = upper` for the truncated normal.
    fn truncated_normal_upper_quantile(&self, mean: f64, stddev: f64, upper: f64) -> f64 {
        if upper <= 0.0 {
            return f64::INFINITY;
        }
        let kept = normal_upper_tail(-mean / stddev);
        let t = (upper * kept).min(kept);
        (mean + stddev * normal_upper_tail_inv(t)).max(0.0)
    }

    /// Inverse-transform draw; consumes exactly one uniform from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.sample_from_uniform(u)
    }

    /// Maps a uniform `u` in [0, 1) to a draw from this prior.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        match self {
            Self::PointMass { value } => *value,
            Self::Bernoulli { value, bias } => {
                if u < *bias {
                    *value
                } else {
                    0.0
                }
            }
            Self::Uniform { lo, hi } => lo + u * (hi - lo),
            Self::Exponential { rate, shift } => shift - (-u).ln_1p() / rate,
            Self::Discrete { support } => {
                let mut cdf = 0.0;
                for a in support {
                    cdf += a.mass;
                    if u < cdf {
                        return a.value;
                    }
                }
                // Rounding left u above the accumulated mass.
                support.iter().rev().find(|a| a.mass > 0.0).map_or(0.0, |a| a.value)
            }
            Self::TruncatedNormal { mean, stddev } => {
                // 1 - u lies in (0, 1], so the upper tail target is never 0.
                self.truncated_normal_upper_quantile(*mean, *stddev, 1.0 - u)
            }
        }
    }

    /// Locations and masses of the point masses, ascending by value.
    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            Self::PointMass { value } => vec![Atom { value: *value, mass: 1.0 }],
            Self::Bernoulli { value, bias } => [
                Atom { value: 0.0, mass: 1.0 - bias },
                Atom { value: *value, mass: *bias },
            ]
            .into_iter()
            .filter(|a| a.mass > 0.0)
            .collect(),
            Self::Discrete { support } => support.iter().copied().filter(|a| a.mass > 0.0).collect(),
            Self::Uniform { .. } | Self::Exponential { .. } | Self::TruncatedNormal { .. } => {
                Vec::new()
            }
        }
    }

    pub fn is_atomless(&self) -> bool {
        self.atoms().is_empty()
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
