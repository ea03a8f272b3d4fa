//! `ncg`: run, batch and report Newton-CG experiments described by TOML
//! configuration files.

mod plot;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ncg_core::harness::{run_experiment, ExperimentConfig, Prepared, RunRecord};
use ncg_core::problems::Dataset;
use ncg_core::solvers::Variant;

#[derive(Parser)]
#[command(name = "ncg", version, about = "Newton-CG with noisy function values and inexact derivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Bounded,
    Dynamic,
    FiniteSum,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Bounded => Variant::Bounded,
            VariantArg::Dynamic => Variant::Dynamic,
            VariantArg::FiniteSum => Variant::FiniteSum,
        }
    }
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the target accuracy.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the method.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let mut cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", self.config.display()))?;
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(v) = self.variant {
            cfg.variant = v.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Text,
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write its record and trace.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed; defaults to the configuration's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run every replication of a configuration.
    Batch {
        #[command(flatten)]
        config: ConfigArgs,
        /// Override the number of replications.
        #[arg(long)]
        replications: Option<usize>,
        /// First seed of the batch.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the constants and the expected hitting-time bound.
    Theory {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Summarize run records: table, CSV and SVG plots.
    Report {
        /// Run record files or directories containing `*.run.json`.
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write a synthetic logistic-regression dataset.
    Generate {
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rescale every feature row to unit norm.
        #[arg(long)]
        unit_rows: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: DataFormat,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` when an audit found violations.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, seed, out_dir } => {
            let cfg = config.load()?;
            let prepared = Prepared::new(&cfg)?;
            for w in cfg.warnings(&prepared.theory) {
                eprintln!("warning: {w}");
            }
            let seed = seed.unwrap_or(cfg.base_seed);
            let record = prepared.run(seed)?;
            fs::create_dir_all(&out_dir)?;
            write_record(&record, &out_dir)?;
            let t = &record.trace;
            println!(
                "seed {seed}: {:?} after {} iterations, final gap {:.3e}",
                t.stop_reason,
                t.records.len(),
                t.final_gap
            );
            report_violations(&record.audit)
        }
        Command::Batch { config, replications, seed, out_dir } => {
            let mut cfg = config.load()?;
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let outcome = run_experiment(&cfg)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            fs::create_dir_all(&out_dir)?;
            for rep in &outcome.replications {
                match (&rep.record, &rep.error) {
                    (Some(record), _) => write_record(record, &out_dir)?,
                    (None, Some(e)) => eprintln!("seed {}: {e}", rep.seed),
                    (None, None) => {}
                }
            }
            let summary = report::BatchSummary::from_outcome(&cfg, &outcome);
            fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            println!("{}", summary.describe());
            report_violations(&outcome.audit)
        }
        Command::Theory { config } => {
            let cfg = config.load()?;
            let prepared = Prepared::new(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&prepared.theory)?);
            println!("max_iters: {}", prepared.max_iters);
            for w in cfg.warnings(&prepared.theory) {
                eprintln!("warning: {w}");
            }
            Ok(true)
        }
        Command::Report { inputs, out_dir } => {
            if inputs.is_empty() {
                bail!("no inputs given");
            }
            let records = report::load_records(&inputs)?;
            if records.is_empty() {
                bail!("no run records found");
            }
            fs::create_dir_all(&out_dir)?;
            report::write_report(&records, &out_dir)?;
            print!("{}", report::table(&records));
            Ok(records.iter().all(|r| r.audit.is_clean()))
        }
        Command::Generate { samples, features, seed, unit_rows, format, out } => {
            if samples == 0 || features == 0 {
                bail!("samples and features must be positive");
            }
            let data = Dataset::synthetic(samples, features, seed, unit_rows);
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let w = std::io::BufWriter::new(file);
            match format {
                DataFormat::Text => data.write_text(w)?,
                DataFormat::Binary => data.write_binary(w)?,
            }
            println!("wrote {samples} samples with {features} features to {}", out.display());
            Ok(true)
        }
    }
}

fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    let stem = format!("seed-{}", record.seed);
    fs::write(dir.join(format!("{stem}.run.json")), record.to_json()?)?;
    let csv = fs::File::create(dir.join(format!("{stem}.trace.csv")))?;
    record.trace.write_csv(std::io::BufWriter::new(csv))?;
    Ok(())
}

fn report_violations(audit: &ncg_core::audit::AuditReport) -> Result<bool> {
    for v in audit.violations.iter().take(20) {
        eprintln!("audit violation: {} (seed {}, k = {}): {}", v.check, v.seed, v.k, v.detail);
    }
    if audit.violations.len() > 20 {
        eprintln!("... {} more", audit.violations.len() - 20);
    }
    Ok(audit.is_clean())
}
