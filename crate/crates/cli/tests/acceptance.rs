//! Acceptance gate. Runs every criterion in sequence so the timed criteria
//! never compete for cores, prints one PASS/FAIL line each, and exits
//! nonzero if any criterion failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use static_pricing::ratio::{alaei_crossover, poisson_delta_mu, three_decimals};
use static_pricing::simulator::estimate_orders;
use static_pricing::{
    equal_bias_phi, ratio_table, search_min_phi, solve_poisson_rate, solve_static_price, solve_two_bias,
    ArrivalOrder, BiasProfile, CountDistribution, RatioPoint,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_static-pricing"))
}

fn instances() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn stdout_of(args: &[&str]) -> Vec<u8> {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let text = String::from_utf8(stdout_of(&["ratio", "--k-min", "2", "--k-max", "6"])).unwrap();
    let elapsed = start.elapsed();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == "phi_k").unwrap();
    let phi: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    let shown: Vec<String> = phi.iter().map(|&p| three_decimals(p)).collect();
    let expected = ["0.585", "0.630", "0.660", "0.682", "0.698"];
    let pass = shown == expected && elapsed < Duration::from_secs(1);
    outcome(pass, format!("phi_2..6 = {phi:.7?} -> {shown:?} in {elapsed:.2?} (budget 1 s)"))
}

fn criterion_2() -> (Outcome, Vec<RatioPoint>) {
    let start = Instant::now();
    let table = ratio_table(1, 10_000);
    let elapsed = start.elapsed();
    let (worst_k, worst) = table
        .iter()
        .map(|r| {
            let (d, m) = poisson_delta_mu(r.lambda, r.k);
            (r.k, (d - m).abs())
        })
        .fold((0, 0.0f64), |acc, x| if x.1 > acc.1 { x } else { acc });
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(30);
    (outcome(pass, format!("max |delta - mu| = {worst:.2e} at k = {worst_k}, {elapsed:.2?} (budget 30 s)")), table)
}

fn criterion_3(table: &[RatioPoint]) -> Outcome {
    let window: Vec<&RatioPoint> = table.iter().filter(|r| (2..=20).contains(&r.k)).collect();
    let margin = window.iter().map(|r| r.phi - r.alpha).fold(f64::INFINITY, f64::min);
    let crossover = alaei_crossover(table);
    let pass = window.len() == 19 && margin > 0.0;
    outcome(pass, format!("min phi - alpha over [2, 20] = {margin:.3e}; crossover k = {crossover:?}"))
}

fn criterion_4(table: &[RatioPoint]) -> Outcome {
    let gaps: Vec<f64> =
        table.iter().filter(|r| r.k >= 10).map(|r| r.asymptotic_gap.expect("defined for k >= 2")).collect();
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = gaps.len() == 9_991 && lo >= 0.3 && hi <= 3.0;
    outcome(pass, format!("(1 - phi_k) sqrt(k / ln k) in [{lo:.4}, {hi:.4}] for k in [10, 1e4]"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let biases: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let exact = CountDistribution::poisson_binomial(&BiasProfile::new(biases.clone()).unwrap()).unwrap();
        for (i, p) in common::brute_force_pmf(&biases).into_iter().enumerate() {
            worst = worst.max((exact.pmf_at(i) - p).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |pmf - enumeration| = {worst:.2e} over 200 profiles"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut failures, mut diagonal, mut worst_below, mut worst_above) = (0, 0, 0.0f64, 0.0f64);
    for _ in 0..500 {
        let sub = common::random_subproblem(&mut rng);
        let Ok(sol) = solve_two_bias(&sub) else {
            failures += 1;
            continue;
        };
        let Some((grid, _, _)) = common::two_bias_grid(&sub, 2000) else {
            failures += 1;
            continue;
        };
        worst_below = worst_below.max(grid - sol.objective);
        worst_above = worst_above.max(sol.objective - grid);
        let feasible = (sub.constraint(sol.r1, sol.r2) - sub.target()).abs() <= 1e-8;
        let unique = sub.discriminant() <= 0.0 || sol.r1 == sol.r2;
        if sub.discriminant() > 0.0 {
            diagonal += 1;
        }
        if !feasible || !unique || grid - sol.objective > 1e-9 || sol.objective - grid > 1e-4 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{failures} failures / 500; solver below grid by {worst_below:.1e}, above by {worst_above:.1e}; \
             {diagonal} cases with r1 = r2 forced"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (mut runs, mut failures, mut tightest) = (0, 0, f64::INFINITY);
    for (i, instance) in common::corpus().iter().enumerate() {
        let pricing = solve_static_price(instance).expect("corpus instance prices");
        let orders: Vec<Vec<usize>> =
            ArrivalOrder::battery(i as u64).iter().map(|o| o.resolve(instance)).collect();
        let bound = pricing.delta.min(pricing.mu);
        for report in estimate_orders(instance, &pricing, &orders, 1_000_000, 7_000 + i as u64) {
            runs += 1;
            let se = report.ratio_std_error;
            if report.ratio < bound - 3.0 * se {
                failures += 1;
            }
            if se > 0.0 {
                tightest = tightest.min((report.ratio - bound) / se);
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = runs == 150 && failures == 0 && elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!("{failures} of {runs} runs below min(delta, mu) - 3 se; tightest margin {tightest:.2} se; {elapsed:.2?} (budget 600 s)"),
    )
}

fn criterion_8() -> Outcome {
    let (mut pairs, mut worst_gap) = (0, f64::INFINITY);
    for n in 2..=8 {
        for k in 1..=4.min(n - 1) {
            let r = search_min_phi(n, k, 50, 8).expect("search runs");
            pairs += 1;
            worst_gap = worst_gap.min(r.gap);
        }
    }
    let limits = (1..=3)
        .map(|k| (equal_bias_phi(100_000, k).unwrap().1 - solve_poisson_rate(k).phi).abs())
        .collect::<Vec<f64>>();
    let pass = worst_gap >= -1e-6 && limits.iter().all(|&d| d <= 2e-3);
    let limits: Vec<String> = limits.iter().map(|d| format!("{d:.2e}")).collect();
    outcome(
        pass,
        format!("{pairs} (n, k) pairs, smallest gap {worst_gap:.2e}; |phi(1e5) - phi_k| for k = 1..3: {}", limits.join(", ")),
    )
}

fn criterion_9() -> Outcome {
    let mixed = instances().join("mixed.json");
    let mixed = mixed.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--instance", mixed, "--trials", "200000", "--seed", "9", "--check-decomposition"],
        vec!["simulate", "--instance", mixed, "--trials", "200000", "--seed", "9", "--order", "random"],
        vec!["worstcase", "--n", "6", "--k", "2", "--restarts", "8", "--seed", "9"],
        vec!["ratio", "--k-min", "1", "--k-max", "40", "--format", "json"],
    ];
    let mut mismatches = Vec::new();
    for case in &cases {
        let with = |threads: &str| {
            let mut args = case.clone();
            args.extend(["--threads", threads]);
            stdout_of(&args)
        };
        let first = with("1");
        if with("1") != first || with("3") != first {
            mismatches.push(case[0]);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{} commands x (1, 1, 3 threads); mismatches: {mismatches:?}", cases.len()),
    )
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut record = |id: usize, o: Outcome| {
        println!("criterion {id}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, o.pass));
    };
    record(1, criterion_1());
    let (c2, table) = criterion_2();
    record(2, c2);
    record(3, criterion_3(&table));
    record(4, criterion_4(&table));
    record(5, criterion_5());
    record(6, criterion_6());
    record(7, criterion_7());
    record(8, criterion_8());
    record(9, criterion_9());
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
