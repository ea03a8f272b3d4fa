//! Seeded Monte-Carlo batches: configuration, problem construction, runs,
//! hitting-time statistics and comparison against the expected bounds.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_trace, AuditContext, AuditMethod, AuditReport};
use crate::error::{NcgError, Result};
use crate::finite_sum::{run_finite_sum, FiniteSumRunParams, SampleSizeRule, DEFAULT_MAX_GAMMA_LOOPS};
use crate::linalg::{random_unit_vector, Vector};
use crate::oracles::{BoundedNoise, GradientEstimatorParams, HessianEstimatorParams, NoiseLaw, SubsamplingParams};
use crate::problems::{log_spaced, make_logistic, make_quadratic, Dataset, FiniteSum, LogisticProblem, Problem, QuadraticProblem};
use crate::rng::seeded;
use crate::solvers::{
    run_bounded, run_dynamic, GradientSource, HessianSource, LinesearchParams, RunOptions, StopRule, Trace, Variant,
};
use crate::theory::{expected_bound_bounded, expected_bound_dynamic, z_epsilon, TheoryConstants};

/// Used when no expected bound is available.
pub const FALLBACK_MAX_ITERS: usize = 10_000;
/// Ceiling on the bound-derived default iteration budget.
pub const MAX_DEFAULT_ITERS: usize = 10_000_000;
/// Largest censored fraction a batch may have and still be accepted.
pub const MAX_CENSORED_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSpec {
    /// `dimension` values geometrically spaced between the two endpoints.
    LogSpaced([f64; 2]),
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dimension: usize,
        spectrum: SpectrumSpec,
        #[serde(default)]
        seed: u64,
        /// Minimizer; zero when absent.
        #[serde(default)]
        shift: Option<Vec<f64>>,
    },
    /// Synthetic logistic regression data.
    Logistic {
        samples: usize,
        features: usize,
        ridge: f64,
        #[serde(default)]
        data_seed: u64,
        #[serde(default = "default_true")]
        unit_rows: bool,
    },
    /// Logistic regression on a dataset file (text or binary format).
    LogisticFile { path: PathBuf, ridge: f64 },
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Zero,
    Point { x: Vec<f64> },
    /// `x* + distance u` for a unit vector `u` drawn from `seed`.
    Offset { distance: f64, #[serde(default)] seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "default_law")]
    pub law: NoiseLaw,
    /// Absolute bound for the bounded-noise method.
    #[serde(default)]
    pub epsilon_f: f64,
    /// Relative bound for the dynamic-noise method (0 = exact values).
    #[serde(default)]
    pub theta: f64,
}

fn default_law() -> NoiseLaw {
    NoiseLaw::AdversarialSign
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { law: default_law(), epsilon_f: 0.0, theta: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsamplingSpec {
    #[serde(flatten)]
    pub params: SubsamplingParams,
    #[serde(default = "default_gamma_loops")]
    pub max_gamma_loops: usize,
    #[serde(default)]
    pub rule: SampleSizeRule,
}

fn default_gamma_loops() -> usize {
    DEFAULT_MAX_GAMMA_LOOPS
}

fn default_gradient() -> GradientSource {
    GradientSource::Exact
}

fn default_hessian() -> HessianSource {
    HessianSource::Exact
}

fn default_replications() -> usize {
    1
}

fn default_gamma() -> f64 {
    0.25
}

/// One experiment: a problem, a method with its oracles, and a batch of
/// seeds `base_seed, base_seed + 1, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub linesearch: LinesearchParams,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_gradient")]
    pub gradient: GradientSource,
    #[serde(default = "default_hessian")]
    pub hessian: HessianSource,
    #[serde(default)]
    pub subsampling: Option<SubsamplingSpec>,
    pub epsilon: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub stop_rule: StopRule,
    /// Bound on `r(eps_f)/h(t_bar)` used in the bounded-noise bound.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Worker threads for batches; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| NcgError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| NcgError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NcgError::Config(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        self.linesearch.validate()?;
        if let GradientSource::Probabilistic(g) = self.gradient {
            GradientEstimatorParams::new(g.delta_g, g.failure_mode)?;
        }
        if let HessianSource::Probabilistic(h) = self.hessian {
            HessianEstimatorParams::new(h.delta_h, h.accuracy_constant)?;
        }
        match self.variant {
            Variant::Bounded => {
                BoundedNoise::new(self.noise.epsilon_f, self.noise.law)?;
            }
            Variant::Dynamic => self.linesearch.validate_theta(self.noise.theta)?,
            Variant::FiniteSum => {
                let Some(sub) = &self.subsampling else {
                    return bad("finite_sum variant needs a [subsampling] table".into());
                };
                sub.params.validate()?;
                if matches!(self.problem, ProblemSpec::Quadratic { .. }) {
                    return bad("finite_sum variant needs a logistic problem".into());
                }
            }
        }
        Ok(())
    }

    /// Non-fatal problems with the configuration.
    pub fn warnings(&self, theory: &TheoryReport) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(thr) = theory.constants.as_ref().and_then(|c| c.epsilon_threshold) {
            if self.epsilon <= thr {
                out.push(format!("epsilon = {:e} is not above the noise threshold {thr:e}", self.epsilon));
            }
        }
        if let Some(e) = &theory.error {
            out.push(format!("theory constants unavailable: {e}"));
        }
        out
    }
}

pub enum BuiltProblem {
    Quadratic(QuadraticProblem),
    Logistic(LogisticProblem),
}

impl BuiltProblem {
    pub fn as_problem(&self) -> &dyn Problem {
        match self {
            BuiltProblem::Quadratic(p) => p,
            BuiltProblem::Logistic(p) => p,
        }
    }

    pub fn as_finite_sum(&self) -> Option<&dyn FiniteSum> {
        match self {
            BuiltProblem::Quadratic(_) => None,
            BuiltProblem::Logistic(p) => Some(p),
        }
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem> {
    match spec {
        ProblemSpec::Quadratic { dimension, spectrum, seed, shift } => {
            let values = match spectrum {
                SpectrumSpec::LogSpaced([lo, hi]) => log_spaced(*lo, *hi, *dimension),
                SpectrumSpec::Values(v) => v.clone(),
            };
            let shift = match shift {
                Some(s) => Vector::from_column_slice(s),
                None => Vector::zeros(*dimension),
            };
            Ok(BuiltProblem::Quadratic(make_quadratic(*dimension, &values, shift, *seed)?))
        }
        ProblemSpec::Logistic { samples, features, ridge, data_seed, unit_rows } => {
            let d = Dataset::synthetic(*samples, *features, *data_seed, *unit_rows);
            Ok(BuiltProblem::Logistic(make_logistic(&d.features, &d.labels, *ridge)?))
        }
        ProblemSpec::LogisticFile { path, ridge } => {
            let d = Dataset::load(path)?;
            Ok(BuiltProblem::Logistic(make_logistic(&d.features, &d.labels, *ridge)?))
        }
    }
}

pub fn starting_point(spec: &StartSpec, problem: &dyn Problem) -> Result<Vector> {
    let n = problem.dim();
    match spec {
        StartSpec::Zero => Ok(Vector::zeros(n)),
        StartSpec::Point { x } => {
            if x.len() != n {
                return Err(NcgError::DimensionMismatch { expected: n, got: x.len() });
            }
            Ok(Vector::from_column_slice(x))
        }
        StartSpec::Offset { distance, seed } => {
            let center = problem.minimizer().ok_or(NcgError::MissingReference)?;
            Ok(center + random_unit_vector(&mut seeded(*seed), n) * *distance)
        }
    }
}

/// Theory constants and the expected hitting-time bound for a
/// configuration, as far as they are defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub constants: Option<TheoryConstants>,
    pub initial_gap: f64,
    pub z_epsilon: f64,
    pub expected_bound: Option<f64>,
    pub error: Option<String>,
}

fn gradient_failure_probability(src: &GradientSource) -> f64 {
    match src {
        GradientSource::Exact => 0.0,
        GradientSource::Probabilistic(p) => p.delta_g,
    }
}

pub fn theory_report(config: &ExperimentConfig, problem: &dyn Problem, x0: &Vector) -> Result<TheoryReport> {
    let ls = &config.linesearch;
    let bounds = problem.bounds();
    let f_star = problem.min_value().ok_or(NcgError::MissingReference)?;
    let initial_gap = crate::problems::gap_from_value(problem.value(x0), f_star)?;
    let z_eps = z_epsilon(initial_gap, config.epsilon);
    let delta_g = gradient_failure_probability(&config.gradient);
    let computed: Result<(TheoryConstants, Option<f64>)> = match config.variant {
        Variant::Bounded => TheoryConstants::bounded(
            ls.c,
            ls.eta_bar,
            ls.t_max,
            bounds,
            config.noise.epsilon_f,
            config.epsilon,
            config.gamma,
        )
        .and_then(|c| {
            let b = expected_bound_bounded(delta_g, config.gamma, c.m, z_eps, ls.tau, c.t_bar, ls.t0)?;
            Ok((c, Some(b)))
        }),
        Variant::Dynamic => TheoryConstants::dynamic(ls.c, config.noise.theta, ls.eta_bar, ls.t_max, bounds).and_then(|c| {
            let b = expected_bound_dynamic(delta_g, c.m, z_eps, ls.tau, c.t_bar, ls.t0)?;
            Ok((c, Some(b)))
        }),
        Variant::FiniteSum => {
            TheoryConstants::dynamic(ls.c, 0.0, ls.eta_bar, ls.t_max, bounds).map(|c| (c, None))
        }
    };
    Ok(match computed {
        Ok((c, b)) => TheoryReport { constants: Some(c), initial_gap, z_epsilon: z_eps, expected_bound: b, error: None },
        Err(e) => TheoryReport {
            constants: None,
            initial_gap,
            z_epsilon: z_eps,
            expected_bound: None,
            error: Some(e.to_string()),
        },
    })
}

fn default_max_iters(theory: &TheoryReport) -> usize {
    match theory.expected_bound {
        Some(b) if b.is_finite() && b > 0.0 => ((10.0 * b).ceil() as usize).clamp(1, MAX_DEFAULT_ITERS),
        _ => FALLBACK_MAX_ITERS,
    }
}

/// Everything needed to reproduce and interpret one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub min_value: f64,
    pub minimizer: Option<Vec<f64>>,
    pub theory: TheoryReport,
    pub trace: Trace,
    pub audit: AuditReport,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A configuration with its problem built and constants evaluated, ready to
/// run any number of seeds.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: BuiltProblem,
    pub x0: Vector,
    pub theory: TheoryReport,
    pub max_iters: usize,
    pub audit: AuditContext,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = build_problem(&config.problem)?;
        let p = problem.as_problem();
        let x0 = starting_point(&config.start, p)?;
        let theory = theory_report(config, p, &x0)?;
        let max_iters = config.max_iters.unwrap_or_else(|| default_max_iters(&theory));
        let method = match config.variant {
            Variant::Bounded => AuditMethod::Bounded { epsilon_f: config.noise.epsilon_f },
            Variant::Dynamic => AuditMethod::Dynamic { theta: config.noise.theta },
            Variant::FiniteSum => AuditMethod::FiniteSum {
                population: problem.as_finite_sum().map(|f| f.num_components()).unwrap_or(0),
            },
        };
        let audit = AuditContext {
            method,
            ls: config.linesearch,
            bounds: p.bounds(),
            f_scale: p.min_value().unwrap_or(0.0).abs(),
        };
        Ok(Self { config: config.clone(), problem, x0, theory, max_iters, audit })
    }

    pub fn run_trace(&self, seed: u64) -> Result<Trace> {
        let cfg = &self.config;
        let opts = RunOptions {
            x0: self.x0.clone(),
            epsilon: cfg.epsilon,
            max_iters: self.max_iters,
            seed,
            stop_rule: cfg.stop_rule,
        };
        let p = self.problem.as_problem();
        match cfg.variant {
            Variant::Bounded => {
                let noise = BoundedNoise::new(cfg.noise.epsilon_f, cfg.noise.law)?;
                run_bounded(p, noise, cfg.gradient, cfg.hessian, &cfg.linesearch, &opts)
            }
            Variant::Dynamic => {
                run_dynamic(p, cfg.noise.theta, cfg.noise.law, cfg.gradient, cfg.hessian, &cfg.linesearch, &opts)
            }
            Variant::FiniteSum => {
                let fsp = self
                    .problem
                    .as_finite_sum()
                    .ok_or_else(|| NcgError::Config("finite_sum variant needs a finite-sum problem".into()))?;
                let sub = cfg.subsampling.as_ref().ok_or_else(|| NcgError::Config("missing [subsampling]".into()))?;
                let params = FiniteSumRunParams {
                    ls: cfg.linesearch,
                    sub: sub.params,
                    max_gamma_loops: sub.max_gamma_loops,
                    sampling: sub.rule,
                };
                run_finite_sum(fsp, &params, &opts)
            }
        }
    }

    pub fn run(&self, seed: u64) -> Result<RunRecord> {
        let trace = self.run_trace(seed)?;
        let audit = audit_trace(&trace, &self.audit);
        let p = self.problem.as_problem();
        Ok(RunRecord {
            config: self.config.clone(),
            seed,
            min_value: p.min_value().unwrap_or(f64::NAN),
            minimizer: p.minimizer().map(|v| v.iter().copied().collect()),
            theory: self.theory.clone(),
            trace,
            audit,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingTime {
    Hit(usize),
    Censored,
}

/// First iteration index whose gap is at most `epsilon`.
pub fn hitting_time(trace: &Trace, epsilon: f64) -> HittingTime {
    hitting_time_of_gaps(&trace.gaps(), epsilon)
}

pub fn hitting_time_of_gaps(gaps: &[f64], epsilon: f64) -> HittingTime {
    match gaps.iter().position(|g| *g <= epsilon) {
        Some(k) => HittingTime::Hit(k),
        None => HittingTime::Censored,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeStats {
    pub samples: Vec<HittingTime>,
    /// Mean over uncensored samples.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub censored_count: usize,
    /// Replications that ended in an error instead of a trace.
    pub failed_count: usize,
    pub theoretical_bound: Option<f64>,
}

impl HittingTimeStats {
    pub fn from_samples(samples: Vec<HittingTime>, failed_count: usize, theoretical_bound: Option<f64>) -> Self {
        let hits: Vec<f64> = samples
            .iter()
            .filter_map(|s| match s {
                HittingTime::Hit(k) => Some(*k as f64),
                HittingTime::Censored => None,
            })
            .collect();
        let censored_count = samples.len() - hits.len();
        let (mean, std) = if hits.is_empty() {
            (None, None)
        } else {
            let m = hits.iter().sum::<f64>() / hits.len() as f64;
            let var = if hits.len() > 1 {
                hits.iter().map(|h| (h - m).powi(2)).sum::<f64>() / (hits.len() - 1) as f64
            } else {
                0.0
            };
            (Some(m), Some(var.sqrt()))
        };
        Self { samples, mean, std, censored_count, failed_count, theoretical_bound }
    }

    pub fn censored_fraction(&self) -> f64 {
        let total = self.samples.len() + self.failed_count;
        if total == 0 {
            0.0
        } else {
            (self.censored_count + self.failed_count) as f64 / total as f64
        }
    }

    /// `bound - mean`, positive when the empirical mean respects the bound.
    pub fn margin(&self) -> Option<f64> {
        Some(self.theoretical_bound? - self.mean?)
    }

    pub fn within_bound(&self) -> Option<bool> {
        self.margin().map(|m| m >= 0.0)
    }
}

/// `z_k = log(gap_0 / gap_k)` along a trace, with the cap
/// `Z_eps = log(gap_0 / eps)` that every `z_k` before the hitting time stays
/// under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZTrajectory {
    /// `None` where a gap is zero.
    pub z: Vec<Option<f64>>,
    pub z_epsilon: f64,
    pub bounded_before_hit: bool,
}

pub fn z_trajectory(trace: &Trace) -> ZTrajectory {
    let gaps = trace.gaps();
    let g0 = gaps[0];
    let z: Vec<Option<f64>> =
        gaps.iter().map(|g| if *g > 0.0 && g0 > 0.0 { Some((g0 / g).ln()) } else { None }).collect();
    let z_eps = z_epsilon(g0, trace.epsilon);
    let hit = hitting_time_of_gaps(&gaps, trace.epsilon);
    let before = match hit {
        HittingTime::Hit(k) => k,
        HittingTime::Censored => gaps.len(),
    };
    let bounded_before_hit = z[..before].iter().all(|v| v.is_some_and(|v| v <= z_eps));
    ZTrajectory { z, z_epsilon: z_eps, bounded_before_hit }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub seed: u64,
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub theory: TheoryReport,
    pub max_iters: usize,
    pub stats: HittingTimeStats,
    pub audit: AuditReport,
    pub warnings: Vec<String>,
    pub replications: Vec<ReplicationOutcome>,
}

impl ExperimentOutcome {
    pub fn censoring_acceptable(&self) -> bool {
        self.stats.censored_fraction() <= MAX_CENSORED_FRACTION
    }

    pub fn traces(&self) -> impl Iterator<Item = &Trace> {
        self.replications.iter().filter_map(|r| r.record.as_ref().map(|r| &r.trace))
    }
}

/// Runs `replications` seeds concurrently. Results are ordered by seed, so
/// the outcome does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let prepared = Prepared::new(config)?;
    let seeds: Vec<u64> = (0..config.replications as u64).map(|i| config.base_seed.wrapping_add(i)).collect();
    let work = || -> Vec<ReplicationOutcome> {
        seeds
            .par_iter()
            .map(|&seed| match prepared.run(seed) {
                Ok(rec) => ReplicationOutcome { seed, record: Some(rec), error: None },
                Err(e) => ReplicationOutcome { seed, record: None, error: Some(e.to_string()) },
            })
            .collect()
    };
    let replications = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| NcgError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut audit = AuditReport::default();
    let mut samples = Vec::new();
    let mut failed = 0;
    for r in &replications {
        match &r.record {
            Some(rec) => {
                audit.merge(rec.audit.clone());
                samples.push(hitting_time(&rec.trace, config.epsilon));
            }
            None => failed += 1,
        }
    }
    let stats = HittingTimeStats::from_samples(samples, failed, prepared.theory.expected_bound);
    Ok(ExperimentOutcome {
        warnings: config.warnings(&prepared.theory),
        theory: prepared.theory.clone(),
        max_iters: prepared.max_iters,
        stats,
        audit,
        replications,
    })
}
