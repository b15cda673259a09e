use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qstat::error::{Error, Result};
use qstat::harness::{self, ExperimentSpec, ModelKind};

/// Query-complexity experiments: approximate selection, median, and
/// counting under exact oracle accounting, plus the degree certifier.
#[derive(Parser)]
#[command(name = "qstat", version, about)]
struct Cli {
    /// Base RNG seed; trial i uses an independent substream (seed, i).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Monte-Carlo trials per cell.
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,

    /// CSV output path; the JSON summary lands next to it with the
    /// extension "summary.json". Without it, CSV goes to stdout and the
    /// summary to stderr.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON experiment spec; replaces the subcommand entirely.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Value,
    Comparison,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Value => ModelKind::Value,
            ModelArg::Comparison => ModelKind::Comparison,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify the minimal degree of a polynomial separating two levels of
    /// the hypercube; emits a JSON certificate with the witness.
    Degree {
        #[arg(long)]
        n: u64,
        /// Level mapped to 1.
        #[arg(long)]
        l: u64,
        /// Level mapped to 0.
        #[arg(long)]
        lprime: u64,
        /// Approximation constant (default 1/3).
        #[arg(long)]
        c: Option<f64>,
        /// Give up above this degree.
        #[arg(long)]
        max_degree: Option<u32>,
    },
    /// Scaling sweeps with log-log fits: select, stages, degree:half,
    /// degree:one-zero.
    Sweep {
        #[arg(long)]
        family: String,
        /// Comma-separated sizes; each family has a default grid.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        /// Approximation constant for degree families.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Sample the counting primitive at fixed (n, t, P) and report how
    /// often the estimate lands within the error budget.
    CountPrimitive {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        p: u64,
    },
    /// Decide "at most l'" versus "at least l" ones from counting draws.
    Distinguish {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        lprime: u64,
        /// Actual number of ones; must sit at or outside the two levels.
        #[arg(long)]
        t_true: u64,
        /// Budget constant (default: the calibrated value).
        #[arg(long)]
        c: Option<f64>,
        /// Odd majority-vote repetition count.
        #[arg(long)]
        boost: Option<u64>,
    },
    /// Approximate k-th smallest selection over a value list.
    Select {
        /// Input file, one value per line.
        #[arg(long, conflicts_with = "gen")]
        input: Option<PathBuf>,
        /// Generator spec: uniform:N, dups:N:D, or sorted:N.
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        k: u64,
        /// Rank slack; the window (k - delta, k + delta) counts as success.
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Value)]
        model: ModelArg,
    },
    /// Approximate median over a value list.
    Median {
        #[arg(long, conflicts_with = "gen")]
        input: Option<PathBuf>,
        #[arg(long)]
        gen: Option<String>,
        /// Both sides of the output must hold strictly fewer than
        /// (1 + epsilon) n / 2 elements.
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Value)]
        model: ModelArg,
    },
    /// Two-phase Delta-approximate counting of ones.
    Count {
        #[arg(long, requires = "t", conflicts_with = "input")]
        n: Option<u64>,
        #[arg(long, requires = "n")]
        t: Option<u64>,
        /// Input file; nonzero lines count as ones.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        delta: u64,
    },
    /// Re-run the calibration protocols behind the shipped constants.
    Calibrate {
        /// Counter model: phase or contract.
        #[arg(long, default_value = "phase")]
        model: String,
    },
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let trials = cli.trials;
    let seed = cli.seed;
    let Some(command) = &cli.command else {
        return Err(Error::contract("pass a subcommand or --config FILE"));
    };
    Ok(match command {
        Command::Degree { n, l, lprime, c, max_degree } => ExperimentSpec::Degree {
            n: *n,
            l: *l,
            lprime: *lprime,
            c: *c,
            max_degree: *max_degree,
        },
        Command::Sweep { family, sizes, c } => ExperimentSpec::Sweep {
            family: family.clone(),
            sizes: sizes.clone(),
            c: *c,
            trials,
            seed,
        },
        Command::CountPrimitive { n, t, p } => ExperimentSpec::CountPrimitive {
            n: *n,
            t: *t,
            p: *p,
            trials,
            seed,
        },
        Command::Distinguish { n, l, lprime, t_true, c, boost } => ExperimentSpec::Distinguish {
            n: *n,
            l: *l,
            lprime: *lprime,
            t_true: *t_true,
            c: *c,
            boost: *boost,
            trials,
            seed,
        },
        Command::Select { input, gen, k, delta, model } => ExperimentSpec::Select {
            input: input.clone(),
            gen: gen.clone(),
            k: *k,
            delta: *delta,
            model: (*model).into(),
            trials,
            seed,
        },
        Command::Median { input, gen, epsilon, model } => ExperimentSpec::Median {
            input: input.clone(),
            gen: gen.clone(),
            epsilon: *epsilon,
            model: (*model).into(),
            trials,
            seed,
        },
        Command::Count { n, t, input, delta } => ExperimentSpec::Count {
            n: *n,
            t: *t,
            input: input.clone(),
            delta: *delta,
            trials,
            seed,
        },
        Command::Calibrate { model } => ExperimentSpec::Calibrate {
            model: model.clone(),
            trials,
            seed,
        },
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let spec: ExperimentSpec = if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err(Error::contract("--config and a subcommand are exclusive"));
        }
        serde_json::from_str(&std::fs::read_to_string(path)?)?
    } else {
        build_spec(cli)?
    };
    let output = harness::run(&spec)?;
    match &cli.out {
        Some(path) => harness::write_output(&output, path)?,
        None => {
            print!("{}", output.csv);
            eprintln!("{}", serde_json::to_string_pretty(&output.summary)?);
        }
    }
    Ok(output.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance predicate failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
