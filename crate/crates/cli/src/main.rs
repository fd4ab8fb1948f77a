//! dispersion-lab command line: deterministic experiments over the
//! discrepancy, dispersion, exponential-sum, Poisson-cutoff, and
//! shifted-divisor machinery, with CSV/JSON artifacts and run manifests.
//!
//! Exit codes: 0 success, 2 precondition or configuration error,
//! 3 tolerance failure in a check command.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "dispersion-lab", version, about = "exact dispersion-method laboratory")]
struct Cli {
    /// Flat key-value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Directory for artifacts (<command>.json/.csv plus manifest).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for the data-parallel kernels (0 = library default).
    /// Results are independent of this value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admissible modulus window for given support scales.
    Window(commands::WindowArgs),
    /// Per-modulus discrepancies and their dyadic mean.
    Discrepancy(commands::DiscrepancyArgs),
    /// Dispersion expansion U, V, W, main terms, identities, CS ratio.
    Dispersion(commands::DispersionArgs),
    /// Complete Kloosterman sums and the Weil-bound harness.
    Kloosterman(commands::KloostermanArgs),
    /// Trilinear forms in Kloosterman fractions.
    Trilinear(commands::TrilinearArgs),
    /// Bezout reciprocity and fraction-factorization trials.
    BezoutCheck(commands::BezoutArgs),
    /// Truncated and coprime Poisson checks for the smooth cutoff.
    PoissonCheck(commands::PoissonArgs),
    /// Siegel-Walfisz defect of a sequence.
    SwCheck(commands::SwArgs),
    /// Barban-Davenport-Halberstam variance.
    Bdh(commands::BdhArgs),
    /// Divisor sums in a progression against their expected size.
    TauAp(commands::TauApArgs),
    /// Shifted-divisor corollary verifier with hyperbola split and grid.
    Titchmarsh(commands::TitchmarshArgs),
}

fn main() {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: cannot configure {} workers: {e}", cli.workers);
            std::process::exit(2);
        }
    }

    let config = match config::Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };

    let outcome = match &cli.command {
        Command::Window(args) => commands::window(args, &config, cli.out.as_deref()),
        Command::Discrepancy(args) => commands::discrepancy(args, &config, cli.out.as_deref()),
        Command::Dispersion(args) => commands::dispersion(args, &config, cli.out.as_deref()),
        Command::Kloosterman(args) => commands::kloosterman(args, &config, cli.out.as_deref()),
        Command::Trilinear(args) => commands::trilinear(args, &config, cli.out.as_deref()),
        Command::BezoutCheck(args) => commands::bezout_check(args, &config, cli.out.as_deref()),
        Command::PoissonCheck(args) => commands::poisson_check(args, &config, cli.out.as_deref()),
        Command::SwCheck(args) => commands::sw_check(args, &config, cli.out.as_deref()),
        Command::Bdh(args) => commands::bdh(args, &config, cli.out.as_deref()),
        Command::TauAp(args) => commands::tau_ap(args, &config, cli.out.as_deref()),
        Command::Titchmarsh(args) => commands::titchmarsh(args, &config, cli.out.as_deref()),
    };

    match outcome {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    }
}
