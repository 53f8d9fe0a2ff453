//! Subcommand bodies. Each returns the full output text.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use static_pricing::ratio::{alaei_crossover, table_to_csv};
use static_pricing::simulator::{decomposition_check, estimate_orders, DecompositionReport};
use static_pricing::worstcase::equal_bias_curve;
use static_pricing::{
    ratio_table, search_min_phi, solve_poisson_rate, solve_static_price, ArrivalOrder, Error,
    Instance, PricingResult, RatioPoint, SearchResult, SimulationReport,
};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                Error::InvalidDistribution(_)
                | Error::InvalidInstance(_)
                | Error::InvalidBias(_)
                | Error::Parse(_),
            ) => 2,
            CliError::Core(
                Error::BracketNotFound { .. } | Error::NumericalDegradation { .. } | Error::Infeasible,
            ) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct RatioOutput<'a> {
    schema_version: u32,
    rows: &'a [RatioPoint],
    /// Smallest k >= 2 in range with alpha_k >= phi_k.
    alaei_crossover_k: Option<usize>,
}

pub fn ratio(k_min: usize, k_max: usize, json: bool) -> Result<String> {
    if k_min < 1 {
        return Err(CliError::Usage(format!("--k-min must be at least 1, got {k_min}")));
    }
    if k_max < k_min {
        return Err(CliError::Usage(format!(
            "--k-max ({k_max}) must not be smaller than --k-min ({k_min})"
        )));
    }
    let rows = ratio_table(k_min, k_max);
    Ok(if json {
        to_json(&RatioOutput {
            schema_version: SCHEMA_VERSION,
            rows: &rows,
            alaei_crossover_k: alaei_crossover(&rows),
        })
    } else {
        table_to_csv(&rows)
    })
}

#[derive(Serialize)]
struct PriceOutput<'a> {
    schema_version: u32,
    k: usize,
    n: usize,
    #[serde(flatten)]
    pricing: &'a PricingResult,
    /// Worst-case ratio over all instances with this k.
    phi_k: f64,
}

pub fn price(path: &Path, json: bool) -> Result<String> {
    let instance = Instance::from_json_file(path)?;
    let pricing = solve_static_price(&instance)?;
    Ok(if json {
        to_json(&PriceOutput {
            schema_version: SCHEMA_VERSION,
            k: instance.k(),
            n: instance.n(),
            pricing: &pricing,
            phi_k: solve_poisson_rate(instance.k()).phi,
        })
    } else {
        format!(
            "price,tie_break,delta,mu,guarantee\n{},{},{},{},{}\n",
            pricing.price, pricing.tie_break, pricing.delta, pricing.mu, pricing.guarantee
        )
    })
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    instance: String,
    order: &'a str,
    trials: u64,
    seed: u64,
    check_decomposition: bool,
}

#[derive(Serialize)]
struct GuaranteeCheck {
    guarantee: f64,
    /// `(ratio - guarantee) / ratio_std_error`.
    margin_std_errors: f64,
    /// `ratio >= guarantee - 3 ratio_std_error`.
    holds: bool,
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    schema_version: u32,
    config: SimulateConfig<'a>,
    pricing: &'a PricingResult,
    report: &'a SimulationReport,
    guarantee_check: GuaranteeCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<&'a DecompositionReport>,
}

pub fn simulate(
    path: &Path,
    order: ArrivalOrder,
    trials: u64,
    seed: u64,
    check_decomposition: bool,
    json: bool,
) -> Result<String> {
    let instance = Instance::from_json_file(path)?;
    let pricing = solve_static_price(&instance)?;
    let arrival = order.resolve(&instance);
    let decomposition = check_decomposition
        .then(|| decomposition_check(&instance, &pricing, &arrival, trials, seed));
    let report = match &decomposition {
        Some(d) => d.simulation.clone(),
        None => estimate_orders(&instance, &pricing, &[arrival], trials, seed).remove(0),
    };
    let se = report.ratio_std_error;
    let guarantee_check = GuaranteeCheck {
        guarantee: pricing.guarantee,
        margin_std_errors: if se > 0.0 { (report.ratio - pricing.guarantee) / se } else { 0.0 },
        holds: report.ratio >= pricing.guarantee - 3.0 * se,
    };

    if json {
        return Ok(to_json(&SimulateOutput {
            schema_version: SCHEMA_VERSION,
            config: SimulateConfig {
                instance: path.display().to_string(),
                order: order.name(),
                trials,
                seed,
                check_decomposition,
            },
            pricing: &pricing,
            report: &report,
            guarantee_check,
            decomposition: decomposition.as_ref(),
        }));
    }
    let mut out = String::from(
        "order,trials,seed,price,tie_break,welfare_mean,welfare_std_error,revenue_mean,\
         revenue_std_error,utility_mean,utility_std_error,opt_mean,opt_std_error,ratio,\
         ratio_std_error,guarantee,guarantee_holds",
    );
    if decomposition.is_some() {
        out.push_str(",opt_within_bound,revenue_matches,utility_above_bound");
    }
    out.push('\n');
    let r = &report;
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        order.name(),
        r.trials,
        r.seed,
        r.price,
        r.tie_break,
        r.welfare_mean,
        r.welfare_std_error,
        r.revenue_mean,
        r.revenue_std_error,
        r.utility_mean,
        r.utility_std_error,
        r.opt_mean,
        r.opt_std_error,
        r.ratio,
        r.ratio_std_error,
        guarantee_check.guarantee,
        guarantee_check.holds
    );
    if let Some(d) = &decomposition {
        let _ = write!(out, ",{},{},{}", d.opt_within_bound, d.revenue_matches, d.utility_above_bound);
    }
    out.push('\n');
    Ok(out)
}

#[derive(Serialize)]
struct CurvePoint {
    n: usize,
    b: f64,
    phi: f64,
}

#[derive(Serialize)]
struct WorstcaseOutput<'a> {
    schema_version: u32,
    search: &'a SearchResult,
    phi_k: f64,
    equal_bias_curve: Vec<CurvePoint>,
}

/// `n` grid for the equal-bias curve: `k+1, 2k, 10k, 100k, 1000k` and `n`.
fn curve_grid(n: usize, k: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = [k + 1, 2 * k, 10 * k, 100 * k, 1000 * k, n]
        .into_iter()
        .filter(|&m| m > k)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

pub fn worstcase(n: usize, k: usize, restarts: usize, seed: u64, json: bool) -> Result<String> {
    if restarts < 1 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    if k < 1 || n <= k {
        return Err(Error::InvalidInstance(format!(
            "need more buyers than units (n > k), got n = {n} and k = {k}"
        ))
        .into());
    }
    let curve = equal_bias_curve(k, &curve_grid(n, k))?;
    if !json {
        let mut out = String::from("n,b,phi\n");
        for (m, b, phi) in curve {
            let _ = writeln!(out, "{m},{b},{phi}");
        }
        return Ok(out);
    }
    let search = search_min_phi(n, k, restarts, seed)?;
    Ok(to_json(&WorstcaseOutput {
        schema_version: SCHEMA_VERSION,
        search: &search,
        phi_k: solve_poisson_rate(k).phi,
        equal_bias_curve: curve.into_iter().map(|(n, b, phi)| CurvePoint { n, b, phi }).collect(),
    }))
}
