use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, ValueDistribution};
use crate::error::{Error, Result};

/// Supply `k` and the buyers' value priors.
///
/// The distribution list order is the default arrival order; an explicit
/// permutation may override it. Only the simulator looks at the order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct Instance {
    k: usize,
    distributions: Vec<ValueDistribution>,
    order: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceSpec {
    k: usize,
    distributions: Vec<ValueDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<usize>>,
}

impl TryFrom<InstanceSpec> for Instance {
    type Error = Error;

    fn try_from(spec: InstanceSpec) -> Result<Self> {
        let inst = Instance::new(spec.k, spec.distributions)?;
        match spec.order {
            Some(order) => inst.with_order(order),
            None => Ok(inst),
        }
    }
}

/// Syntax-only form used by [`Instance::from_json_str`], so validation
/// failures keep their own error variant instead of becoming parse errors.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    k: usize,
    distributions: Vec<DistributionSpec>,
    #[serde(default)]
    order: Option<Vec<usize>>,
}

impl From<Instance> for InstanceSpec {
    fn from(inst: Instance) -> Self {
        InstanceSpec { k: inst.k, distributions: inst.distributions, order: inst.order }
    }
}

impl Instance {
    /// Checks `k >= 1`, `n > k` and `Pr[v_t > 0] > 0` for every buyer.
    pub fn new(k: usize, distributions: Vec<ValueDistribution>) -> Result<Self> {
        let inst = Self::unchecked_supply(k, distributions)?;
        if inst.n() <= k {
            return Err(Error::InvalidInstance(format!(
                "need more buyers than units (n > k), got n = {} and k = {k}",
                inst.n()
            )));
        }
        Ok(inst)
    }

    /// Like [`Instance::new`] but allows `n <= k`.
    ///
    /// Such instances cannot be priced (price 0 is optimal) but can still be
    /// simulated.
    pub fn unchecked_supply(k: usize, distributions: Vec<ValueDistribution>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInstance("supply k must be at least 1".into()));
        }
        for (t, d) in distributions.iter().enumerate() {
            d.validate()?;
            if d.strict_tail(0.0) <= 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "buyer {t} has Pr[v > 0] = 0; every buyer needs positive mass above 0"
                )));
            }
        }
        Ok(Self { k, distributions, order: None })
    }

    /// Sets the arrival order; `order` must be a permutation of `0..n`.
    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::InvalidInstance(format!(
                "order has {} entries for {n} buyers",
                order.len()
            )));
        }
        for &t in &order {
            if t >= n || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidInstance("order is not a permutation of 0..n".into()));
            }
        }
        self.order = Some(order);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.distributions.len()
    }

    pub fn distributions(&self) -> &[ValueDistribution] {
        &self.distributions
    }

    /// Buyer indices in arrival order.
    pub fn arrival_order(&self) -> Vec<usize> {
        self.order.clone().unwrap_or_else(|| (0..self.n()).collect())
    }

    pub fn has_explicit_order(&self) -> bool {
        self.order.is_some()
    }

    /// Reorders the distribution list itself (dropping any explicit order).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let checked = self.clone().with_order(perm.to_vec())?;
        let distributions = perm.iter().map(|&t| checked.distributions[t].clone()).collect();
        Ok(Self { k: self.k, distributions, order: None })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let distributions =
            raw.distributions.into_iter().map(ValueDistribution::try_from).collect::<Result<_>>()?;
        InstanceSpec { k: raw.k, distributions, order: raw.order }.try_into()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}
