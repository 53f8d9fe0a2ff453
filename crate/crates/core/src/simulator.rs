//! Monte Carlo engine for the sequential posted-price sale.
//!
//! Every trial draws all buyer values (and tie-break coins) from its own
//! ChaCha8 stream keyed by `(seed, trial)`; inside a stream buyer `t` always
//! uses words `t` (value) and `n + t` (coin). Trials are reduced in fixed
//! blocks that are merged in block order, so a report is bit-identical for
//! any thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::pricer::PricingResult;

const BLOCK: u64 = 1 << 13;

/// Outcome of one sale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SaleOutcome {
    pub welfare: f64,
    pub revenue: f64,
    pub utility: f64,
    pub units_sold: usize,
}

/// How buyers are sequenced relative to the instance's own order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalOrder {
    Given,
    Reverse,
    Random { seed: u64 },
    /// Highest mean value first.
    MeanDescending,
    MeanAscending,
}

impl ArrivalOrder {
    /// The five orders the test battery runs.
    pub fn battery(seed: u64) -> [ArrivalOrder; 5] {
        [
            ArrivalOrder::Given,
            ArrivalOrder::Reverse,
            ArrivalOrder::Random { seed },
            ArrivalOrder::MeanDescending,
            ArrivalOrder::MeanAscending,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArrivalOrder::Given => "given",
            ArrivalOrder::Reverse => "reverse",
            ArrivalOrder::Random { .. } => "random",
            ArrivalOrder::MeanDescending => "desc",
            ArrivalOrder::MeanAscending => "asc",
        }
    }

    /// Buyer indices in arrival order.
    pub fn resolve(&self, instance: &Instance) -> Vec<usize> {
        let mut order = instance.arrival_order();
        match self {
            ArrivalOrder::Given => {}
            ArrivalOrder::Reverse => order.reverse(),
            ArrivalOrder::Random { seed } => {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            }
            ArrivalOrder::MeanAscending => {
                let means: Vec<f64> = instance.distributions().iter().map(|d| d.mean()).collect();
                order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
            }
            ArrivalOrder::MeanDescending => {
                let means: Vec<f64> = instance.distributions().iter().map(|d| d.mean()).collect();
                order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
            }
        }
        order
    }
}

/// Runs the sale for one realization.
///
/// Buyer `t` purchases iff a unit is left and `v_t > p`, or `v_t = p` and
/// `coins[t] < q`.
pub fn run_sale_in_order(
    order: &[usize],
    k: usize,
    price: f64,
    tie_break: f64,
    values: &[f64],
    coins: &[f64],
) -> SaleOutcome {
    let mut out = SaleOutcome::default();
    for &t in order {
        if out.units_sold == k {
            break;
        }
        let v = values[t];
        if v > price || (v == price && coins[t] < tie_break) {
            out.units_sold += 1;
            out.welfare += v;
            out.revenue += price;
            out.utility += v - price;
        }
    }
    out
}

/// [`run_sale_in_order`] with the instance's arrival order.
pub fn run_sale(
    instance: &Instance,
    price: f64,
    tie_break: f64,
    values: &[f64],
    coins: &[f64],
) -> SaleOutcome {
    assert_eq!(values.len(), instance.n(), "one value per buyer");
    assert_eq!(coins.len(), instance.n(), "one coin per buyer");
    run_sale_in_order(&instance.arrival_order(), instance.k(), price, tie_break, values, coins)
}

/// Sum of the `k` largest values.
pub fn hindsight_opt(values: &[f64], k: usize) -> f64 {
    let mut scratch = values.to_vec();
    hindsight_opt_in_place(&mut scratch, k)
}

/// Like [`hindsight_opt`] but reorders `values`.
pub fn hindsight_opt_in_place(values: &mut [f64], k: usize) -> f64 {
    if k == 0 || values.is_empty() {
        return 0.0;
    }
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    values.iter().take(k).sum()
}

/// Running mean and second central moment, mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    fn std_error(&self) -> f64 {
        if self.n > 0.0 {
            (self.variance() / self.n).sqrt()
        } else {
            0.0
        }
    }
}

/// Co-moment of two paired quantities.
#[derive(Debug, Clone, Copy, Default)]
struct CoMoment {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    c: f64,
}

impl CoMoment {
    #[inline]
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.n;
        self.mean_y += (y - self.mean_y) / self.n;
        self.c += dx * (y - self.mean_y);
    }

    fn merge(&mut self, o: &CoMoment) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        self.mean_x += dx * o.n / n;
        self.mean_y += dy * o.n / n;
        self.c += o.c + dx * dy * self.n * o.n / n;
        self.n = n;
    }

    fn covariance(&self) -> f64 {
        if self.n > 1.0 {
            self.c / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct OrderAccumulator {
    welfare: Moments,
    revenue: Moments,
    utility: Moments,
    welfare_opt: CoMoment,
    sold_out: Moments,
    /// Trials where units sold differed from `min(X, k)`.
    unit_mismatches: u64,
}

impl OrderAccumulator {
    fn merge(&mut self, o: &OrderAccumulator) {
        self.welfare.merge(&o.welfare);
        self.revenue.merge(&o.revenue);
        self.utility.merge(&o.utility);
        self.welfare_opt.merge(&o.welfare_opt);
        self.sold_out.merge(&o.sold_out);
        self.unit_mismatches += o.unit_mismatches;
    }
}

#[derive(Debug, Clone, Default)]
struct BlockAccumulator {
    opt: Moments,
    /// `k p + sum_t (v_t - p)^+` per trial.
    opt_bound: Moments,
    orders: Vec<OrderAccumulator>,
}

impl BlockAccumulator {
    fn merge(&mut self, o: &BlockAccumulator) {
        self.opt.merge(&o.opt);
        self.opt_bound.merge(&o.opt_bound);
        for (a, b) in self.orders.iter_mut().zip(&o.orders) {
            a.merge(b);
        }
    }
}

/// Monte Carlo estimates for one arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub price: f64,
    pub tie_break: f64,
    pub order: Vec<usize>,
    pub welfare_mean: f64,
    pub revenue_mean: f64,
    pub utility_mean: f64,
    pub opt_mean: f64,
    /// `welfare_mean / opt_mean`.
    pub ratio: f64,
    pub welfare_std_error: f64,
    pub revenue_std_error: f64,
    pub utility_std_error: f64,
    pub opt_std_error: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_std_error: f64,
    /// Fraction of trials in which all `k` units were sold.
    pub sellout_rate: f64,
    pub unit_mismatches: u64,
}

/// Empirical check of the revenue/utility decomposition at a fixed price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub delta: f64,
    pub mu: f64,
    /// `k p + sum_t E[(v_t - p)^+]`.
    pub opt_upper_bound: f64,
    /// Monte Carlo mean of the per-trial bound `k p + sum_t (v_t - p)^+`.
    pub opt_upper_bound_mc: f64,
    /// `mu k p`.
    pub expected_revenue: f64,
    /// `delta * sum_t E[(v_t - p)^+]`.
    pub utility_lower_bound: f64,
    pub opt_within_bound: bool,
    pub revenue_matches: bool,
    pub utility_above_bound: bool,
    pub simulation: SimulationReport,
}

impl DecompositionReport {
    pub fn all_pass(&self) -> bool {
        self.opt_within_bound && self.revenue_matches && self.utility_above_bound
    }
}

/// Per-trial stream: ChaCha8 keyed by `seed`, stream id = trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn simulate_block(
    instance: &Instance,
    pricing: &PricingResult,
    orders: &[Vec<usize>],
    seed: u64,
    trials: std::ops::Range<u64>,
) -> BlockAccumulator {
    let n = instance.n();
    let k = instance.k();
    let price = pricing.price;
    let q = pricing.tie_break;
    let dists = instance.distributions();
    let base = ChaCha8Rng::seed_from_u64(seed);

    let mut acc = BlockAccumulator {
        orders: vec![OrderAccumulator::default(); orders.len()],
        ..Default::default()
    };
    let mut values = vec![0.0; n];
    let mut coins = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for trial in trials {
        let mut rng = base.clone();
        rng.set_stream(trial);
        for (v, d) in values.iter_mut().zip(dists) {
            *v = d.sample_from_uniform(rng.random());
        }
        for c in coins.iter_mut() {
            *c = rng.random();
        }
        scratch.copy_from_slice(&values);
        let opt = hindsight_opt_in_place(&mut scratch, k);
        let mut excess = 0.0;
        let mut demand = 0usize;
        for (t, &v) in values.iter().enumerate() {
            excess += (v - price).max(0.0);
            if v > price || (v == price && coins[t] < q) {
                demand += 1;
            }
        }
        acc.opt.push(opt);
        acc.opt_bound.push(k as f64 * price + excess);
        for (order, oacc) in orders.iter().zip(acc.orders.iter_mut()) {
            let sale = run_sale_in_order(order, k, price, q, &values, &coins);
            oacc.welfare.push(sale.welfare);
            oacc.revenue.push(sale.revenue);
            oacc.utility.push(sale.utility);
            oacc.welfare_opt.push(sale.welfare, opt);
            oacc.sold_out.push(if sale.units_sold == k { 1.0 } else { 0.0 });
            if sale.units_sold != demand.min(k) {
                oacc.unit_mismatches += 1;
            }
        }
    }
    acc
}

fn simulate(
    instance: &Instance,
    pricing: &PricingResult,
    orders: &[Vec<usize>],
    trials: u64,
    seed: u64,
) -> BlockAccumulator {
    assert!(trials >= 1, "need at least one trial");
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<BlockAccumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let range = b * BLOCK..((b + 1) * BLOCK).min(trials);
            simulate_block(instance, pricing, orders, seed, range)
        })
        .collect();
    let mut total =
        BlockAccumulator { orders: vec![OrderAccumulator::default(); orders.len()], ..Default::default() };
    for p in &parts {
        total.merge(p);
    }
    total
}

fn report(
    acc: &BlockAccumulator,
    oacc: &OrderAccumulator,
    pricing: &PricingResult,
    order: &[usize],
    trials: u64,
    seed: u64,
) -> SimulationReport {
    let w = oacc.welfare.mean;
    let o = acc.opt.mean;
    let ratio = if o > 0.0 { w / o } else { 0.0 };
    let ratio_std_error = if o > 0.0 && acc.opt.n > 0.0 {
        let var = oacc.welfare.variance() - 2.0 * ratio * oacc.welfare_opt.covariance()
            + ratio * ratio * acc.opt.variance();
        (var.max(0.0) / acc.opt.n).sqrt() / o
    } else {
        0.0
    };
    SimulationReport {
        trials,
        seed,
        price: pricing.price,
        tie_break: pricing.tie_break,
        order: order.to_vec(),
        welfare_mean: w,
        revenue_mean: oacc.revenue.mean,
        utility_mean: oacc.utility.mean,
        opt_mean: o,
        ratio,
        welfare_std_error: oacc.welfare.std_error(),
        revenue_std_error: oacc.revenue.std_error(),
        utility_std_error: oacc.utility.std_error(),
        opt_std_error: acc.opt.std_error(),
        ratio_std_error,
        sellout_rate: oacc.sold_out.mean,
        unit_mismatches: oacc.unit_mismatches,
    }
}

/// Simulates several arrival orders on shared realizations.
pub fn estimate_orders(
    instance: &Instance,
    pricing: &PricingResult,
    orders: &[Vec<usize>],
    trials: u64,
    seed: u64,
) -> Vec<SimulationReport> {
    let acc = simulate(instance, pricing, orders, trials, seed);
    orders
        .iter()
        .zip(&acc.orders)
        .map(|(order, oacc)| report(&acc, oacc, pricing, order, trials, seed))
        .collect()
}

/// Monte Carlo estimate for the instance's arrival order.
pub fn estimate(
    instance: &Instance,
    pricing: &PricingResult,
    trials: u64,
    seed: u64,
) -> SimulationReport {
    estimate_orders(instance, pricing, &[instance.arrival_order()], trials, seed).remove(0)
}

fn within(diff_allowed: f64, scale: f64) -> f64 {
    diff_allowed + 1e-9 * scale.abs().max(1.0)
}

/// Checks the three halves of the welfare decomposition at `pricing`:
/// `OPT <= k p + U(p)`, `Revenue = mu k p`, `Utility >= delta U(p)`, each at
/// four standard errors.
pub fn decomposition_check(
    instance: &Instance,
    pricing: &PricingResult,
    order: &[usize],
    trials: u64,
    seed: u64,
) -> DecompositionReport {
    let acc = simulate(instance, pricing, &[order.to_vec()], trials, seed);
    let sim = report(&acc, &acc.orders[0], pricing, order, trials, seed);
    let k = instance.k() as f64;
    let p = pricing.price;
    let excess: f64 = instance.distributions().iter().map(|d| d.mean_above(p)).sum();
    let opt_upper_bound = k * p + excess;
    let expected_revenue = pricing.mu * k * p;
    let utility_lower_bound = pricing.delta * excess;
    DecompositionReport {
        delta: pricing.delta,
        mu: pricing.mu,
        opt_upper_bound,
        opt_upper_bound_mc: acc.opt_bound.mean,
        expected_revenue,
        utility_lower_bound,
        opt_within_bound: sim.opt_mean
            <= opt_upper_bound + within(4.0 * sim.opt_std_error, opt_upper_bound),
        revenue_matches: (sim.revenue_mean - expected_revenue).abs()
            <= within(4.0 * sim.revenue_std_error, expected_revenue),
        utility_above_bound: sim.utility_mean
            >= utility_lower_bound - within(4.0 * sim.utility_std_error, utility_lower_bound),
        simulation: sim,
    }
}
