use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairform::metrics::GroupSet;
use fairform::selection::Algorithm;
use fairform_cli::*;

#[derive(Parser)]
#[command(name = "fairform", version, about = "Diversity-aware group formation")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic candidate pool from a JSON spec.
    Gen {
        /// Synthetic pool spec (JSON).
        spec: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select a group with one algorithm.
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_algo)]
        algo: Option<Algorithm>,
    },
    /// Evaluate a selection against a random or explicit baseline.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Selection file written by `select`.
        #[arg(long)]
        selection: PathBuf,
        /// Use this selection as the baseline group.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Compare algorithms against the random baseline across pools.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Algorithms to run, comma separated. RSA is the baseline.
        #[arg(long, value_delimiter = ',', value_parser = parse_algo)]
        algo: Vec<Algorithm>,
    },
}

#[derive(Args)]
struct Common {
    /// Candidate pool (CSV or JSON). Repeat for several pools.
    #[arg(long)]
    pool: Vec<PathBuf>,
    #[arg(long)]
    gdp: Option<PathBuf>,
    #[arg(long)]
    epscor: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    size: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `analytic` or `mc:<trials>`.
    #[arg(long)]
    baseline: Option<BaselineSpec>,
    /// Groups entering the diversity gain: 5 or 6.
    #[arg(long)]
    groups: Option<GroupSet>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl Common {
    fn apply(self, config: &mut RunConfig) {
        if !self.pool.is_empty() {
            config.pools = self.pool;
        }
        if self.gdp.is_some() {
            config.gdp = self.gdp;
        }
        if self.epscor.is_some() {
            config.epscor = self.epscor;
        }
        if let Some(n) = self.size {
            config.size = Some(n as usize);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(b) = self.baseline {
            config.baseline = b;
        }
        if let Some(g) = self.groups {
            config.groups = g;
        }
        if let Some(f) = self.format {
            config.format = f;
        }
        if self.out.is_some() {
            config.out = self.out;
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let bytes = cmd_gen(&spec, out.as_deref(), seed)?;
            emit(&bytes, out.as_deref())
        }
        Command::Select { common, algo } => {
            common.apply(&mut config);
            if let Some(a) = algo {
                config.algorithms = vec![a];
            }
            let selection = cmd_select(&config)?;
            emit(&render_selection(&selection), config.out.as_deref())
        }
        Command::Evaluate { common, selection, against } => {
            common.apply(&mut config);
            let report = cmd_evaluate(&config, &selection, against.as_deref())?;
            emit(&render_evaluation(&report, config.format), config.out.as_deref())
        }
        Command::Compare { common, algo } => {
            common.apply(&mut config);
            if !algo.is_empty() {
                config.algorithms = algo;
            }
            let report = cmd_compare(&config)?;
            emit(&render_comparison(&report, config.format), config.out.as_deref())
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_record());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail(&CliError::Usage(message.to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
