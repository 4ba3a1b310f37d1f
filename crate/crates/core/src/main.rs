use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use amo::error::HarnessError;
use amo::harness::{
    emit_plot, run_one, run_sweep, write_records, write_slot_rows, ExperimentConfig, MetricsRecord, SweepParam,
    SweepPlan,
};
use amo::orchestrator::ApproachId;

#[derive(Parser)]
#[command(name = "amo", version, about = "Aerial MEC offloading, caching and trajectory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one horizon and write metrics.csv and slots.csv.
    Run {
        /// JSON with optional `scenario` and `solver` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "JC5A")]
        approach: ApproachId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock solve times (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Sweep one parameter across approaches and seeds 0..n.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; the parameter's default grid when absent.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "JC5A,LC,AO,SU,EBCC")]
        approaches: Vec<ApproachId>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Chart one metric of a sweep CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        /// acd, apr or aschr.
        #[arg(long)]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, approach, seed, out, timing } => {
            let cfg = load_config(config.as_deref())?;
            let (horizon, metrics) = run_one(&cfg.scenario, seed, approach, &cfg.solver)?;
            let row = MetricsRecord::from_metrics(approach.as_str(), "none", None, seed, &metrics, timing);
            write_records(create(&out, "metrics.csv")?, &[row])?;
            write_slot_rows(create(&out, "slots.csv")?, &horizon, timing)?;
            println!("{}", out.join("metrics.csv").display());
        }
        Command::Sweep { config, param, values, approaches, seeds, out, timing } => {
            let cfg = load_config(config.as_deref())?;
            if seeds == 0 {
                return Err(HarnessError::Usage("--seeds must be at least 1".into()));
            }
            let plan = SweepPlan {
                base: cfg.scenario,
                solver: cfg.solver,
                param,
                values: if values.is_empty() { param.default_values() } else { values },
                approaches,
                seeds: (0..seeds).collect(),
                timing,
            };
            let rows = run_sweep(&plan)?;
            let name = format!("{param}.csv");
            write_records(create(&out, &name)?, &rows)?;
            let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
            if failed > 0 {
                eprintln!("{failed} run(s) failed; see the status column");
            }
            println!("{}", out.join(name).display());
        }
        Command::Plot { input, metric, out } => {
            emit_plot(&input, &metric, &out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
