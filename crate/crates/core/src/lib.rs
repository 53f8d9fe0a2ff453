//! Static posted pricing for multi-unit prophet inequalities.
//!
//! A seller with `k` identical units faces `n > k` buyers arriving one at a
//! time with independent values. One anonymous price is posted to everyone
//! while supply lasts. The price is chosen so that the probability supply is
//! left over (`delta_k`) equals the expected fraction of units sold
//! (`mu_k`); the common value lower-bounds the welfare-to-optimum ratio for
//! every arrival order.
//!
//! Modules:
//! * [`distributions`] / [`instance`]: buyer priors and problem instances.
//! * [`count`]: Poisson binomial and Poisson count distributions.
//! * [`pricer`]: the equalizing static price, with randomized tie-breaking at atoms.
//! * [`ratio`]: the worst-case ratio `phi_k` from the Poisson fixed point.
//! * [`simulator`]: Monte Carlo welfare, revenue, utility and hindsight optimum.
//! * [`worstcase`]: numerical search over Bernoulli bias profiles.

pub mod count;
pub mod distributions;
pub mod error;
pub mod instance;
pub mod numeric;
pub mod pricer;
pub mod ratio;
pub mod simulator;
pub mod worstcase;

pub use count::{BiasProfile, CountDistribution};
pub use distributions::{Atom, ValueDistribution};
pub use error::{Error, Result};
pub use instance::Instance;
pub use pricer::{evaluate_price, guarantee_lower_bound, solve_static_price, PricingResult};
pub use ratio::{alaei_ratio, ratio_table, solve_poisson_rate, RatioPoint};
pub use simulator::{estimate, hindsight_opt, run_sale, ArrivalOrder, SimulationReport};
pub use worstcase::{equal_bias_phi, search_min_phi, solve_two_bias, SearchResult, TwoBiasSubproblem};
