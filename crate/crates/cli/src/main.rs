//! Command-line front end for the experiment harness.
//!
//! Five subcommands cover the workflow: `prepare` materializes the
//! datasets a spec declares and writes them as interchange CSV, `run`
//! executes a spec end to end and stores the result plus a rendered
//! report, `report` re-renders stored results as one table, `histogram`
//! emits ratings-per-user activity data, and `compare` runs the paired
//! significance test between two stored results.
//!
//! Specs come from `--spec <file>` or from a bundled `--preset <name>`;
//! `--seed` overrides the spec seed. Steps that load files resolve
//! relative paths against the directory named by the environment variable
//! `CROSSREC_DATA_DIR`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crossrec_core::dataset::{write_interchange, write_item_meta};
use crossrec_core::harness::{
    compare, data_dir_from_env, histogram_output, materialize, preset, preset_names,
    render_comparison, report_table, run_with_data_dir, ExperimentResult, ExperimentSpec,
    ReportFormat, DATA_DIR_ENV,
};
use crossrec_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "crossrec",
    about = "Collaborative-filtering experiments on merged adult/child rating data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize every dataset a spec declares and write interchange CSV
    Prepare {
        #[command(flatten)]
        source: SpecSource,
        /// Directory for the output files
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Execute a spec: sweeps, evaluation, stored result, rendered report
    Run {
        #[command(flatten)]
        source: SpecSource,
        /// Directory for the result and report files
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Render one table from stored result files
    Report {
        /// Result files written by `run` (<name>-result.json)
        #[arg(value_name = "RESULT", required = true)]
        results: Vec<PathBuf>,
        /// Also write the table to this directory (report.<ext>)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Emit ratings-per-user histogram data for a spec's dataset
    Histogram {
        #[command(flatten)]
        source: SpecSource,
        /// Also write the histogram to this directory (<name>-histogram.<ext>)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Paired t-test between two stored results on the same test pairs
    Compare {
        /// Left result file
        #[arg(value_name = "LEFT")]
        left: PathBuf,
        /// Right result file
        #[arg(value_name = "RIGHT")]
        right: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
}

/// Where the experiment spec comes from: a TOML file or a bundled preset.
#[derive(Args)]
struct SpecSource {
    /// Path to an experiment spec (TOML)
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Name of a bundled preset spec
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the spec seed
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

impl SpecSource {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = match (&self.spec, &self.preset) {
            (Some(path), None) => ExperimentSpec::from_path(path)?,
            (None, Some(name)) => preset(name)?,
            _ => {
                return Err(Error::Config(format!(
                    "pass exactly one of --spec <file> or --preset <name> (presets: {})",
                    preset_names().join(", ")
                )))
            }
        };
        if let Some(seed) = self.seed {
            spec = spec.with_seed(seed);
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct FormatArg {
    /// Output format
    #[arg(long, value_name = "FMT", default_value = "table", value_parser = parse_format)]
    format: ReportFormat,
}

fn parse_format(name: &str) -> std::result::Result<ReportFormat, String> {
    ReportFormat::from_name(name).ok_or_else(|| format!("unknown format '{name}', expected csv or table"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

fn prepare(source: &SpecSource, out: &Path) -> Result<()> {
    let spec = source.load()?;
    let datasets = materialize(&spec, data_dir_from_env().as_deref())?;
    fs::create_dir_all(out)?;
    for (id, ds) in &datasets {
        let ratings_path = out.join(format!("{id}.csv"));
        let mut buf = Vec::new();
        write_interchange(ds, &mut buf)?;
        fs::write(&ratings_path, &buf)?;

        let items_path = out.join(format!("{id}-items.csv"));
        let mut buf = Vec::new();
        write_item_meta(ds, &mut buf)?;
        fs::write(&items_path, &buf)?;

        let stats = ds.stats();
        println!(
            "wrote {} ({} users, {} items, {} ratings) and {}",
            ratings_path.display(),
            stats.user_count,
            stats.item_count,
            stats.rating_count,
            items_path.display()
        );
    }
    Ok(())
}

fn run_command(source: &SpecSource, out: &Path, format: ReportFormat) -> Result<()> {
    let spec = source.load()?;
    let result = run_with_data_dir(&spec, data_dir_from_env().as_deref())?;
    fs::create_dir_all(out)?;

    let result_path = out.join(format!("{}-result.json", result.name));
    write_file(&result_path, &result.to_json())?;

    let table = report_table(std::slice::from_ref(&result), format);
    let report_path = out.join(format!("{}-report.{}", result.name, format.extension()));
    write_file(&report_path, &table)?;

    eprintln!("wrote {} and {}", result_path.display(), report_path.display());
    print!("{table}");
    Ok(())
}

fn load_results(paths: &[PathBuf]) -> Result<Vec<ExperimentResult>> {
    paths
        .iter()
        .map(|path| ExperimentResult::from_json(&fs::read_to_string(path)?))
        .collect()
}

fn report(paths: &[PathBuf], out: Option<&Path>, format: ReportFormat) -> Result<()> {
    let results = load_results(paths)?;
    let table = report_table(&results, format);
    if let Some(dir) = out {
        let path = dir.join(format!("report.{}", format.extension()));
        write_file(&path, &table)?;
        eprintln!("wrote {}", path.display());
    }
    print!("{table}");
    Ok(())
}

fn histogram(source: &SpecSource, out: Option<&Path>, format: ReportFormat) -> Result<()> {
    let spec = source.load()?;
    let datasets = materialize(&spec, data_dir_from_env().as_deref())?;
    let id = spec.histogram_dataset();
    let ds = datasets
        .get(id)
        .ok_or_else(|| Error::Config(format!("spec declares no dataset '{id}'")))?;
    let text = histogram_output(ds, format);
    if let Some(dir) = out {
        let path = dir.join(format!("{}-histogram.{}", spec.name, format.extension()));
        write_file(&path, &text)?;
        eprintln!("wrote {}", path.display());
    }
    print!("{text}");
    Ok(())
}

fn compare_command(left: &Path, right: &Path, format: ReportFormat) -> Result<()> {
    let results = load_results(&[left.to_path_buf(), right.to_path_buf()])?;
    let report = compare(&results[0], &results[1])?;
    print!("{}", render_comparison(&report, format));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Prepare { source, out } => prepare(source, out),
        Command::Run { source, out, format } => run_command(source, out, format.format),
        Command::Report { results, out, format } => report(results, out.as_deref(), format.format),
        Command::Histogram { source, out, format } => {
            histogram(source, out.as_deref(), format.format)
        }
        Command::Compare { left, right, format } => compare_command(left, right, format.format),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if matches!(err, Error::Io(_)) {
                eprintln!("hint: file paths in load steps resolve against ${DATA_DIR_ENV}");
            }
            ExitCode::FAILURE
        }
    }
}
