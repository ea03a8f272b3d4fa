use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ncg_core::harness::{hitting_time, ExperimentConfig, ExperimentOutcome, HittingTime, RunRecord};
use serde::Serialize;

use crate::plot::{line_chart, Axis, Series};

#[derive(Serialize)]
pub struct BatchSummary {
    pub variant: String,
    pub epsilon: f64,
    pub replications: usize,
    pub max_iters: usize,
    pub mean_hitting_time: Option<f64>,
    pub std_hitting_time: Option<f64>,
    pub censored: usize,
    pub failed: usize,
    pub expected_bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub audit_violations: usize,
    pub warnings: Vec<String>,
}

impl BatchSummary {
    pub fn from_outcome(cfg: &ExperimentConfig, out: &ExperimentOutcome) -> Self {
        Self {
            variant: format!("{:?}", cfg.variant),
            epsilon: cfg.epsilon,
            replications: cfg.replications,
            max_iters: out.max_iters,
            mean_hitting_time: out.stats.mean,
            std_hitting_time: out.stats.std,
            censored: out.stats.censored_count,
            failed: out.stats.failed_count,
            expected_bound: out.theory.expected_bound,
            within_bound: out.stats.within_bound(),
            audit_violations: out.audit.violations.len(),
            warnings: out.warnings.clone(),
        }
    }

    pub fn describe(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        format!(
            "{} x{}: mean N_eps {} (std {}), bound {}, censored {}, failed {}, audit violations {}",
            self.variant,
            self.replications,
            opt(self.mean_hitting_time),
            opt(self.std_hitting_time),
            self.expected_bound.map_or("-".to_string(), |b| format!("{b:.4e}")),
            self.censored,
            self.failed,
            self.audit_violations
        )
    }
}

/// Reads run records from files and from `*.run.json` files inside
/// directories, ordered by path.
pub fn load_records(inputs: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(".run.json"))
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

fn hit_label(record: &RunRecord) -> String {
    match hitting_time(&record.trace, record.trace.epsilon) {
        HittingTime::Hit(k) => k.to_string(),
        HittingTime::Censored => "censored".to_string(),
    }
}

pub fn table(records: &[RunRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>18} {:>7} {:>9} {:>12} {:>12} {:>6}",
        "seed", "variant", "stop", "iters", "N_eps", "gap_0", "final gap", "viol"
    );
    for r in records {
        let t = &r.trace;
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>18} {:>7} {:>9} {:>12.4e} {:>12.4e} {:>6}",
            r.seed,
            format!("{:?}", t.variant),
            format!("{:?}", t.stop_reason),
            t.records.len(),
            hit_label(r),
            t.initial_gap,
            t.final_gap,
            r.audit.violations.len()
        );
    }
    out
}

pub fn write_report(records: &[RunRecord], dir: &Path) -> Result<()> {
    let mut csv = String::from("seed,variant,stop_reason,iterations,hitting_time,initial_gap,final_gap,violations\n");
    for r in records {
        let t = &r.trace;
        let _ = writeln!(
            csv,
            "{},{:?},{:?},{},{},{:e},{:e},{}",
            r.seed,
            t.variant,
            t.stop_reason,
            t.records.len(),
            hit_label(r),
            t.initial_gap,
            t.final_gap,
            r.audit.violations.len()
        );
    }
    fs::write(dir.join("summary.csv"), csv)?;

    let gaps: Vec<Series> = records
        .iter()
        .map(|r| Series {
            label: format!("seed {}", r.seed),
            points: r.trace.gaps().into_iter().enumerate().map(|(k, g)| (k as f64, g)).collect(),
        })
        .collect();
    fs::write(
        dir.join("gap.svg"),
        line_chart("Optimality gap", &gaps, Axis::linear("iteration"), Axis::log("f(x_k) - f*")),
    )?;

    let steps: Vec<Series> = records
        .iter()
        .map(|r| Series {
            label: format!("seed {}", r.seed),
            points: r.trace.records.iter().map(|rec| (rec.k as f64, rec.t)).collect(),
        })
        .collect();
    fs::write(dir.join("steplength.svg"), line_chart("Steplength", &steps, Axis::linear("iteration"), Axis::log("t_k")))?;
    Ok(())
}
