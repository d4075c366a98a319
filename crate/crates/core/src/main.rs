use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qgps::objectives::REGISTRY;
use qgps::runner::{self, BackendKind, PlantedSetup, RunConfig};
use qgps::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qgps",
    version,
    about = "Pattern search with an amplitude-amplified search step"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run GPS and write a JSONL trace.
    Run(RunArgs),
    /// Sweep Grover iterations on a planted problem: analytic vs sampled.
    DemoAmplify(DemoArgs),
    /// Compare classical and quantum search steps over many seeds.
    Compare(CompareArgs),
    /// Print the objective registry.
    ListObjectives,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Classical,
    Quantum,
}

/// Flags that override values from the config file.
#[derive(Args)]
struct Overrides {
    /// TOML config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    /// Comma separated, e.g. `3,-2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial_point: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Number of search points per iteration.
    #[arg(long)]
    search_points: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Output file.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.objective {
            cfg.objective = v.clone();
        }
        if let Some(v) = self.dimension {
            cfg.dimension = v;
        }
        if let Some(v) = &self.initial_point {
            cfg.initial_point = Some(v.clone());
        }
        if let Some(v) = self.backend {
            cfg.backend = match v {
                BackendArg::Classical => BackendKind::Classical,
                BackendArg::Quantum => BackendKind::Quantum,
            };
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.gps.max_iterations = v;
        }
        if let Some(v) = self.tolerance {
            cfg.gps.mesh_size_tolerance = v;
        }
        if let Some(v) = self.search_points {
            cfg.gps.search_points_count = v;
        }
        if let Some(v) = self.tau {
            cfg.qsearch.tau = v;
        }
        if let Some(v) = self.c {
            cfg.qsearch.c = v;
        }
        if let Some(v) = &self.output {
            cfg.output = Some(v.display().to_string());
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Use a planted problem with this many points instead of the objective.
    #[arg(long, requires = "planted_marked")]
    planted_points: Option<usize>,
    #[arg(long, requires = "planted_points")]
    planted_marked: Option<usize>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long = "n", default_value_t = 64)]
    n_points: u64,
    #[arg(long = "t", default_value_t = 1)]
    marked: u64,
    #[arg(long, default_value_t = 10)]
    j_max: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the rows as JSONL.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn output_path(cfg: &RunConfig, default: &str) -> PathBuf {
    PathBuf::from(cfg.output.as_deref().unwrap_or(default))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.overrides.load()?;
            let path = output_path(&cfg, "trace.jsonl");
            let runs = runner::run(&cfg, &path)?;
            for (seed, run) in &runs {
                println!(
                    "seed {seed}: f = {} at {:?} after {} iterations ({:?}), mesh {}, classical {}, quantum {}",
                    run.final_state.incumbent_value,
                    run.final_state.iterate,
                    run.final_state.iteration,
                    run.termination,
                    run.final_state.mesh_size,
                    run.ledger.classical_calls,
                    run.ledger.quantum_calls,
                );
            }
            println!("trace written to {}", path.display());
        }
        Command::DemoAmplify(args) => {
            let rows = runner::demo_amplify(args.n_points, args.marked, args.j_max, args.trials, args.seed)?;
            print!("{}", runner::format_amplify_table(&rows));
            if let Some(path) = args.output {
                runner::write_jsonl(&path, &rows)?;
            }
        }
        Command::Compare(args) => {
            let mut cfg = args.overrides.load()?;
            if let (Some(points), Some(marked)) = (args.planted_points, args.planted_marked) {
                cfg.planted = Some(PlantedSetup { points, marked });
            }
            let path = output_path(&cfg, "comparison.jsonl");
            let report = runner::compare(&cfg)?;
            runner::write_report(&path, &report, &cfg)?;
            print!("{}", runner::format_summary(&report.summary));
            println!("report written to {}", path.display());
        }
        Command::ListObjectives => {
            for (name, description) in REGISTRY {
                println!("{name:<20} {description}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnknownObjective { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
