//! `static-pricing`: equalizing static prices, worst-case ratios and Monte
//! Carlo checks from the command line.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "static-pricing", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format. `ratio` and `figure` default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// RNG seed for simulation and search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Given,
    Reverse,
    Random,
    Desc,
    Asc,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case ratio phi_k and the adaptive baseline alpha_k per supply k.
    Ratio {
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 20)]
        k_max: usize,
    },
    /// Equalizing static price of an instance file.
    Price {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve the price, then simulate the sale.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = OrderArg::Given)]
        order: OrderArg,
        /// Also check OPT <= kp + U(p), Revenue = mu kp, Utility >= delta U(p).
        #[arg(long)]
        check_decomposition: bool,
    },
    /// Search Bernoulli profiles for the smallest ratio at (n, k).
    Worstcase {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
    /// Ratio curve for k = 1..=k_max.
    Figure {
        #[arg(long, default_value_t = 50)]
        k_max: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", common.threads)))?;
    let json = |default_json: bool| common.format.map_or(default_json, |f| f == Format::Json);

    let text = pool.install(|| match cli.command {
        Command::Ratio { k_min, k_max } => commands::ratio(k_min, k_max, json(false)),
        Command::Price { instance } => commands::price(&instance, json(true)),
        Command::Simulate { instance, order, check_decomposition } => commands::simulate(
            &instance,
            order.into_core(common.seed),
            common.trials,
            common.seed,
            check_decomposition,
            json(true),
        ),
        Command::Worstcase { n, k, restarts } => {
            commands::worstcase(n, k, restarts, common.seed, json(true))
        }
        Command::Figure { k_max } => commands::ratio(1, k_max, json(false)),
    })?;

    match common.out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl OrderArg {
    fn into_core(self, seed: u64) -> static_pricing::ArrivalOrder {
        use static_pricing::ArrivalOrder;
        match self {
            OrderArg::Given => ArrivalOrder::Given,
            OrderArg::Reverse => ArrivalOrder::Reverse,
            OrderArg::Random => ArrivalOrder::Random { seed },
            OrderArg::Desc => ArrivalOrder::MeanDescending,
            OrderArg::Asc => ArrivalOrder::MeanAscending,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
