//! Batches of independent runs, their summaries and comparisons against a
//! baseline variant.

pub mod report;
pub mod stats;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsConfig, TraceRow};
use crate::linalg::Matrix;
use crate::objectives::{random_rotation, Objective, ObjectiveError, Problem};
use crate::rng::{RngStream, StreamPurpose};
use crate::strategy::{self, EsParams, FailureReason, RunOptions, StrategyError, Variant, DEFAULT_BUDGET_PER_DIM};

pub use stats::{
    median_fe, rank_sum_exact, rank_sum_normal, rank_sum_test, relative_performance, success_performance, MedianFe,
    Outcome, SuccessPerformance,
};

pub const DEFAULT_RUNS: usize = 21;
pub const DEFAULT_DIMS: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            BenchError::Usage(_)
                | BenchError::Strategy(
                    StrategyError::DimensionTooSmall(_)
                        | StrategyError::BudgetTooSmall { .. }
                        | StrategyError::UnknownVariant(_)
                )
                | BenchError::Objective(_)
        )
    }
}

/// Whether problems are run as given, rotated, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RotationMode {
    #[default]
    None,
    Rotated,
    Both,
}

impl RotationMode {
    pub fn flags(self) -> &'static [bool] {
        match self {
            RotationMode::None => &[false],
            RotationMode::Rotated => &[true],
            RotationMode::Both => &[false, true],
        }
    }
}

impl std::str::FromStr for RotationMode {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(RotationMode::None),
            "rotated" => Ok(RotationMode::Rotated),
            "both" => Ok(RotationMode::Both),
            other => Err(BenchError::Usage(format!(
                "unknown rotation mode '{other}' (expected none, rotated or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub variants: Vec<Variant>,
    pub problems: Vec<Problem>,
    pub dims: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    /// Evaluation budget per run; `None` means `100000·n`.
    pub budget: Option<u64>,
    pub rotation: RotationMode,
    pub diagnostics: Option<DiagnosticsConfig>,
}

impl BatchConfig {
    pub fn new(variants: Vec<Variant>, problems: Vec<Problem>, dims: Vec<usize>, runs: usize, base_seed: u64) -> Self {
        BatchConfig {
            variants,
            problems,
            dims,
            runs,
            base_seed,
            budget: None,
            rotation: RotationMode::None,
            diagnostics: None,
        }
    }

    pub fn budget_for(&self, n: usize) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET_PER_DIM * n as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub problem: Problem,
    pub dim: usize,
    pub rotated: bool,
    pub seed: u64,
    pub run_index: u64,
    /// Seed of the run's sampling stream, derived from `(seed, run_index)`.
    pub stream_seed: u64,
    pub budget: u64,
    pub evaluations: u64,
    pub success: bool,
    pub best_f: f64,
    pub final_sigma: f64,
    pub failure: Option<FailureReason>,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRow>>,
}

impl RunRecord {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            evaluations: self.evaluations,
            success: self.success,
            budget: self.budget,
        }
    }

    /// File stem used for this run's trace.
    pub fn tag(&self) -> String {
        format!(
            "{}_{}_{}{}_run{:02}",
            self.variant,
            self.problem,
            self.dim,
            if self.rotated { "_rot" } else { "" },
            self.run_index
        )
    }

    fn sort_key(&self) -> (Variant, Problem, usize, bool, u64) {
        (self.variant, self.problem, self.dim, self.rotated, self.run_index)
    }
}

/// The rotation used for `(problem, dim)` under `base_seed`; shared by all
/// runs and variants of a batch.
pub fn rotation_for(problem: Problem, dim: usize, base_seed: u64) -> Result<Matrix, BenchError> {
    let key = (Problem::ALL.iter().position(|p| *p == problem).unwrap_or(0) as u64) << 32 | dim as u64;
    let mut rng = RngStream::derive(base_seed, key, StreamPurpose::Rotation);
    Ok(random_rotation(dim, &mut rng).map_err(ObjectiveError::from)?)
}

/// Runs one configuration cell.
pub fn run_single(
    variant: Variant,
    problem: Problem,
    dim: usize,
    rotation: Option<&Matrix>,
    base_seed: u64,
    run_index: u64,
    options: &RunOptions,
) -> Result<RunRecord, BenchError> {
    let params = EsParams::default_params(dim)?;
    let mut obj = Objective::new(problem, dim)?;
    if let Some(r) = rotation {
        obj = obj.with_rotation(r.clone())?;
    }
    let start = Instant::now();
    let res = strategy::run(variant, &mut obj, &params, base_seed, run_index, options)?;
    Ok(RunRecord {
        variant,
        problem,
        dim,
        rotated: rotation.is_some(),
        seed: base_seed,
        run_index,
        stream_seed: RngStream::derive(base_seed, run_index, StreamPurpose::Sampling).seed(),
        budget: options.budget,
        evaluations: res.evaluations,
        success: res.success,
        best_f: res.best_f,
        final_sigma: res.final_sigma,
        failure: res.failure,
        wall_time: start.elapsed(),
        trace: res.trace,
    })
}

/// One record per (variant, problem, dim, rotation, run index), sorted.
/// Run `i` draws its initial mean from stream `(base_seed, i)`, so every
/// variant starts from the same point.
pub fn run_batch(config: &BatchConfig) -> Result<Vec<RunRecord>, BenchError> {
    if config.runs == 0 {
        return Err(BenchError::Usage("runs must be at least 1".into()));
    }
    for &dim in &config.dims {
        EsParams::default_params(dim)?;
        for &problem in &config.problems {
            Objective::new(problem, dim)?;
        }
    }

    let mut rotations = BTreeMap::new();
    if config.rotation != RotationMode::None {
        for &problem in &config.problems {
            for &dim in &config.dims {
                rotations.insert((problem, dim), rotation_for(problem, dim, config.base_seed)?);
            }
        }
    }

    let mut jobs = Vec::new();
    for &variant in &config.variants {
        for &problem in &config.problems {
            for &dim in &config.dims {
                for &rotated in config.rotation.flags() {
                    for run_index in 0..config.runs as u64 {
                        jobs.push((variant, problem, dim, rotated, run_index));
                    }
                }
            }
        }
    }

    let mut records = jobs
        .into_par_iter()
        .map(|(variant, problem, dim, rotated, run_index)| {
            let mut options = RunOptions::with_budget(config.budget_for(dim));
            options.diagnostics = config.diagnostics.clone();
            let rotation = rotated.then(|| &rotations[&(problem, dim)]);
            run_single(variant, problem, dim, rotation, config.base_seed, run_index, &options)
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(RunRecord::sort_key);
    Ok(records)
}

/// Aggregate of one (variant, problem, dim, rotation) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub variant: Variant,
    pub problem: Problem,
    pub dim: usize,
    pub rotated: bool,
    pub runs: usize,
    pub successes: usize,
    pub median_fe: f64,
    pub median_censored: bool,
    pub mean_fe_success: Option<f64>,
    pub success_rate: f64,
    pub sp: Option<f64>,
    /// Cost used for comparisons: SP on Rosenbrock, median FE elsewhere.
    pub fe: Option<f64>,
    pub beta: Option<f64>,
    pub p_value: Option<f64>,
}

/// Cost measure compared across variants for a problem.
pub fn comparison_fe(problem: Problem, median: &MedianFe, sp: &SuccessPerformance) -> Option<f64> {
    match problem {
        Problem::Rosenbrock => sp.sp,
        _ => Some(median.value),
    }
}

pub fn summarize(records: &[RunRecord], baseline: Option<Variant>) -> Result<Vec<Summary>, BenchError> {
    let mut groups: BTreeMap<(Variant, Problem, usize, bool), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.variant, r.problem, r.dim, r.rotated))
            .or_default()
            .push(r);
    }

    let mut out = Vec::with_capacity(groups.len());
    for (&(variant, problem, dim, rotated), runs) in &groups {
        let outcomes: Vec<Outcome> = runs.iter().map(|r| r.outcome()).collect();
        let median = median_fe(&outcomes)?;
        let sp = success_performance(&outcomes)?;
        out.push(Summary {
            variant,
            problem,
            dim,
            rotated,
            runs: runs.len(),
            successes: runs.iter().filter(|r| r.success).count(),
            median_fe: median.value,
            median_censored: median.censored,
            mean_fe_success: sp.mean_success_fe,
            success_rate: sp.success_rate,
            sp: sp.sp,
            fe: comparison_fe(problem, &median, &sp),
            beta: None,
            p_value: None,
        });
    }

    if let Some(base) = baseline {
        let reference: BTreeMap<_, _> = out
            .iter()
            .filter(|s| s.variant == base)
            .map(|s| ((s.problem, s.dim, s.rotated), s.fe))
            .collect();
        for s in out.iter_mut() {
            let key = (s.problem, s.dim, s.rotated);
            let Some(base_fe) = reference.get(&key) else { continue };
            s.beta = match (s.fe, base_fe) {
                (Some(fe), Some(b)) => relative_performance(fe, *b).ok(),
                _ => None,
            };
            let charged = |v: Variant| -> Vec<f64> {
                groups[&(v, s.problem, s.dim, s.rotated)]
                    .iter()
                    .map(|r| r.outcome().charged())
                    .collect()
            };
            s.p_value = Some(rank_sum_test(&charged(s.variant), &charged(base))?);
        }
    }
    Ok(out)
}

/// Index of the run whose charged cost is the (lower) median; ties go to
/// the lowest run index.
pub fn median_run_index(records: &[&RunRecord]) -> Option<usize> {
    if records.is_empty() {
        return None;
    }
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&a, &b| {
        records[a]
            .outcome()
            .charged()
            .total_cmp(&records[b].outcome().charged())
            .then(records[a].run_index.cmp(&records[b].run_index))
    });
    Some(idx[(records.len() - 1) / 2])
}
