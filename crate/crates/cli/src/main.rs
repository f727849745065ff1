use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use moac_cli::config::{Formats, Mode};
use moac_cli::{emit_plots, plot_csv, run_sweep, slot_sim, write_rows, ExperimentConfig, Failure, SweepOutput};

#[derive(Parser)]
#[command(name = "moac", version, about = "Misaligned over-the-air computation experiments")]
struct Cli {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, env = "SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `output.formats`.
    #[arg(long, global = true)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    #[value(name = "csv")]
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Subcommand)]
enum Command {
    /// One packet through every estimator at the configured channel point.
    SlotSim,
    /// Sweep in the mode set by `sweep.mode`.
    Sweep,
    /// Sweep with full learning runs.
    Feel,
    /// Render figures from an existing results CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
    },
}

fn write_failures(failures: &[Failure]) {
    let mut w = csv::Writer::from_writer(std::io::stderr());
    let _ = w.write_record(["run_id", "estimator", "error"]);
    for f in failures {
        let _ = w.write_record([&f.run_id, &f.estimator, &f.error]);
    }
    let _ = w.flush();
}

fn finish(output: &SweepOutput, name: &str, dir: &Path, formats: Formats) -> anyhow::Result<ExitCode> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    write_rows(&path, &output.rows)?;
    println!("{}", path.display());
    if formats == Formats::CsvSvg {
        for svg in emit_plots(&output.rows, &path.display().to_string(), dir)? {
            println!("{}", svg.display());
        }
    }
    if output.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        write_failures(&output.failures);
        Ok(ExitCode::from(2))
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let formats = match cli.format {
        Some(FormatArg::Csv) => Formats::Csv,
        Some(FormatArg::CsvSvg) => Formats::CsvSvg,
        None => config.output.formats,
    };
    match cli.command {
        Command::SlotSim => finish(&slot_sim(&config, cli.seed), "slot_sim.csv", &dir, formats),
        Command::Sweep => {
            let out = run_sweep(&config, cli.seed, config.sweep.mode)?;
            finish(&out, "sweep.csv", &dir, formats)
        }
        Command::Feel => finish(&run_sweep(&config, cli.seed, Mode::Feel)?, "feel.csv", &dir, formats),
        Command::Plot { csv } => {
            for svg in plot_csv(&csv, &dir)? {
                println!("{}", svg.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
