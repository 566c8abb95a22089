//! The (μ/μ_w, λ) evolution strategy with cumulative step-size adaptation
//! and four interchangeable mutation-matrix updates:
//!
//! * `mma`: `A ← (1 - c1/2) A + (c1/2) p vᵀ`, where the v-path accumulates the
//!   untransformed steps and stands in for `A⁻¹p`.
//! * `ecma`: the exact rank-one Cholesky coefficients, but driven by `v`.
//! * `cholesky`: Cholesky CMA-ES, carrying `A⁻¹` to form `u = A⁻¹p`.
//! * `cma1`: rank-one CMA-ES on the covariance matrix itself, with a full
//!   eigendecomposition every generation. Only meant as a reference.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsConfig, GenerationView, TraceRow, Tracer};
use crate::linalg::{symmetric_eigen, LinalgError, Matrix, Vector};
use crate::objectives::{Objective, ObjectiveError};
use crate::rng::{RngError, RngStream, StreamPurpose};

/// Squared path norms below this drop the rank-one term of the exact updates.
pub const DEGENERATE_NORM_SQ: f64 = 1e-20;
pub const SIGMA_MIN: f64 = 1e-300;
pub const SIGMA_MAX: f64 = 1e100;
/// Initial step size: a third of the initialization box width.
pub const DEFAULT_SIGMA0: f64 = 20.0 / 3.0;
pub const DEFAULT_INIT_BOUNDS: (f64, f64) = (-10.0, 10.0);
/// Default evaluation budget per dimension.
pub const DEFAULT_BUDGET_PER_DIM: u64 = 100_000;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("budget {budget} is smaller than one generation ({lambda} evaluations)")]
    BudgetTooSmall { budget: u64, lambda: usize },
    #[error("unknown variant '{0}' (expected mma, ecma, cholesky or cma1)")]
    UnknownVariant(String),
    #[error("initial mean has dimension {found}, expected {expected}")]
    MeanDimension { expected: usize, found: usize },
    #[error("initial step size must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Rng(#[from] RngError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Mma,
    Ecma,
    Cholesky,
    Cma1,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Mma, Variant::Ecma, Variant::Cholesky, Variant::Cma1];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mma => "mma",
            Variant::Ecma => "ecma",
            Variant::Cholesky => "cholesky",
            Variant::Cma1 => "cma1",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = StrategyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| StrategyError::UnknownVariant(s.to_string()))
    }
}

/// Strategy constants. All variants share the same settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsParams {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    /// Cumulation rate of the p- and v-paths.
    pub c: f64,
    /// Learning rate of the mutation matrix.
    pub c1: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    /// `E‖N(0, I)‖`.
    pub chi_n: f64,
}

/// Log-rank recombination weights, decreasing and summing to one.
pub fn recombination_weights(mu: usize) -> Vec<f64> {
    let ln_mu1 = ((mu + 1) as f64).ln();
    let denom = mu as f64 * ln_mu1 - (1..=mu).map(|j| (j as f64).ln()).sum::<f64>();
    (1..=mu).map(|i| (ln_mu1 - (i as f64).ln()) / denom).collect()
}

pub fn effective_mass(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Series approximation of `E‖N(0, I_n)‖`.
pub fn chi_expectation(n: usize) -> f64 {
    let n = n as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}

impl EsParams {
    /// Default settings for dimension `n`.
    pub fn default_params(n: usize) -> Result<Self, StrategyError> {
        if n < 2 {
            return Err(StrategyError::DimensionTooSmall(n));
        }
        let lambda = 4 + (3.0 * (n as f64).ln()).floor() as usize;
        Self::with_population(n, lambda)
    }

    /// Defaults with an explicit population size (`μ = ⌊λ/2⌋`).
    pub fn with_population(n: usize, lambda: usize) -> Result<Self, StrategyError> {
        if n < 2 {
            return Err(StrategyError::DimensionTooSmall(n));
        }
        if lambda < 2 {
            return Err(StrategyError::PopulationTooSmall(lambda));
        }
        let mu = lambda / 2;
        let weights = recombination_weights(mu);
        let mu_eff = effective_mass(&weights);
        let nf = n as f64;
        let c_sigma = mu_eff.sqrt() / (nf.sqrt() + mu_eff.sqrt());
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        Ok(EsParams {
            n,
            lambda,
            mu,
            weights,
            mu_eff,
            c: 4.0 / (nf + 4.0),
            c1: 2.0 / (nf + 2f64.sqrt()).powi(2),
            c_sigma,
            d_sigma,
            chi_n: chi_expectation(n),
        })
    }

    pub fn with_path_rate(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_matrix_rate(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }
}

/// Why a run stopped before reaching its target or budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NonFiniteFitness,
    NonFiniteState,
    SigmaOutOfRange,
    Decomposition,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::NonFiniteFitness => "non_finite_fitness",
            FailureReason::NonFiniteState => "non_finite_state",
            FailureReason::SigmaOutOfRange => "sigma_out_of_range",
            FailureReason::Decomposition => "decomposition",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EsState {
    pub mean: Vector,
    pub sigma: f64,
    /// Mutation matrix; `C = A Aᵀ`.
    pub a: Matrix,
    /// Tracked inverse of `A` (Cholesky variant only).
    pub a_inv: Option<Matrix>,
    /// Explicit covariance (reference variant only).
    pub covariance: Option<Matrix>,
    pub p: Vector,
    pub v: Vector,
    pub s: Vector,
    pub generation: u64,
    pub best_f: f64,
    pub best_x: Vector,
    pub failure: Option<FailureReason>,
}

impl EsState {
    pub fn initial(variant: Variant, mean: Vector, sigma: f64) -> Self {
        let n = mean.len();
        EsState {
            best_x: mean.clone(),
            mean,
            sigma,
            a: Matrix::identity(n),
            a_inv: (variant == Variant::Cholesky).then(|| Matrix::identity(n)),
            covariance: (variant == Variant::Cma1).then(|| Matrix::identity(n)),
            p: Vector::zeros(n),
            v: Vector::zeros(n),
            s: Vector::zeros(n),
            generation: 0,
            best_f: f64::INFINITY,
            failure: None,
        }
    }
}

/// One sampled generation. `order` ranks the samples by fitness.
#[derive(Debug, Clone)]
pub struct Population {
    pub z: Vec<Vector>,
    pub y: Vec<Vector>,
    pub x: Vec<Vector>,
    pub f: Vec<f64>,
    pub order: Vec<usize>,
}

impl Population {
    /// Stable ascending sort of `f`; ties keep sampling order.
    pub fn rank(&mut self) {
        let f = &self.f;
        self.order = (0..f.len()).collect();
        self.order.sort_by(|&i, &j| f[i].total_cmp(&f[j]));
    }
}

#[derive(Debug, Clone)]
pub struct Recombination {
    pub mean: Vector,
    pub y_w: Vector,
    pub z_w: Vector,
}

/// Weighted recombination of the `μ` best samples.
pub fn recombine(pop: &Population, params: &EsParams) -> Recombination {
    let n = pop.x[0].len();
    let mut mean = Vector::zeros(n);
    let mut y_w = Vector::zeros(n);
    let mut z_w = Vector::zeros(n);
    for (w, &idx) in params.weights.iter().zip(&pop.order) {
        mean.axpy(*w, &pop.x[idx]);
        y_w.axpy(*w, &pop.y[idx]);
        z_w.axpy(*w, &pop.z[idx]);
    }
    Recombination { mean, y_w, z_w }
}

/// Cumulation step shared by the p-, v- and s-paths.
fn cumulate(path: &Vector, rate: f64, mu_eff: f64, step: &Vector) -> Vector {
    let keep = 1.0 - rate;
    let gain = (rate * (2.0 - rate)).sqrt() * mu_eff.sqrt();
    Vector::from(
        path.iter()
            .zip(step.iter())
            .map(|(p, d)| keep * p + gain * d)
            .collect::<Vec<_>>(),
    )
}

/// New p- and v-paths from the weighted steps `y_w` and `z_w = A⁻¹y_w`.
pub fn update_paths(p: &Vector, v: &Vector, params: &EsParams, y_w: &Vector, z_w: &Vector) -> (Vector, Vector) {
    (
        cumulate(p, params.c, params.mu_eff, y_w),
        cumulate(v, params.c, params.mu_eff, z_w),
    )
}

/// `√(1-c1)/‖v‖² · (√(1 + c1/(1-c1)·‖v‖²) - 1)`, evaluated without the
/// cancellation of the literal form. Tends to `c1 / (2√(1-c1))` at 0.
pub fn rank_one_coefficient(c1: f64, norm_sq: f64) -> f64 {
    let k = c1 / (1.0 - c1);
    (1.0 - c1).sqrt() * k / ((1.0 + k * norm_sq).sqrt() + 1.0)
}

/// Coefficient of the inverse-factor update,
/// `1/(√(1-c1)‖u‖²) · (1/√(1 + c1/(1-c1)·‖u‖²) - 1)`.
pub fn inverse_rank_one_coefficient(c1: f64, norm_sq: f64) -> f64 {
    let k = c1 / (1.0 - c1);
    let r = (1.0 + k * norm_sq).sqrt();
    -k / ((1.0 - c1).sqrt() * r * (1.0 + r))
}

pub fn mma_update_in_place(a: &mut Matrix, c1: f64, p: &Vector, v: &Vector) {
    a.scale_add_outer(1.0 - 0.5 * c1, 0.5 * c1, p, v);
}

pub fn ecma_update_in_place(a: &mut Matrix, c1: f64, p: &Vector, v: &Vector) {
    let norm_sq = v.norm_sq();
    let keep = (1.0 - c1).sqrt();
    if norm_sq < DEGENERATE_NORM_SQ {
        a.scale_add_outer(keep, 0.0, p, v);
    } else {
        a.scale_add_outer(keep, rank_one_coefficient(c1, norm_sq), p, v);
    }
}

/// Updates `A` and `A⁻¹` together; returns `u = A⁻¹p` computed with the old inverse.
pub fn cholesky_update_in_place(a: &mut Matrix, a_inv: &mut Matrix, c1: f64, p: &Vector) -> Vector {
    let n = p.len();
    let mut u = Vector::zeros(n);
    a_inv.mat_vec_into(p, &mut u);
    let norm_sq = u.norm_sq();
    let keep = (1.0 - c1).sqrt();
    if norm_sq < DEGENERATE_NORM_SQ {
        a.scale_add_outer(keep, 0.0, p, &u);
        a_inv.scale_add_outer(1.0 / keep, 0.0, &u, &u);
        return u;
    }
    // uᵀ A⁻¹ with the pre-update inverse
    let ut_ainv = a_inv.vec_mat(&u);
    a.scale_add_outer(keep, rank_one_coefficient(c1, norm_sq), p, &u);
    a_inv.scale_add_outer(1.0 / keep, inverse_rank_one_coefficient(c1, norm_sq), &u, &ut_ainv);
    u
}

pub fn mma_update(a: &Matrix, params: &EsParams, p: &Vector, v: &Vector) -> Matrix {
    let mut out = a.clone();
    mma_update_in_place(&mut out, params.c1, p, v);
    out
}

pub fn ecma_update(a: &Matrix, params: &EsParams, p: &Vector, v: &Vector) -> Matrix {
    let mut out = a.clone();
    ecma_update_in_place(&mut out, params.c1, p, v);
    out
}

pub fn cholesky_update(a: &Matrix, a_inv: &Matrix, params: &EsParams, p: &Vector) -> (Matrix, Matrix) {
    let mut a_new = a.clone();
    let mut a_inv_new = a_inv.clone();
    cholesky_update_in_place(&mut a_new, &mut a_inv_new, params.c1, p);
    (a_new, a_inv_new)
}

/// `C ← (1 - c1) C + c1 p pᵀ`
pub fn reference_cma1_update(c: &Matrix, params: &EsParams, p: &Vector) -> Matrix {
    let mut out = c.clone();
    out.scale_add_outer(1.0 - params.c1, params.c1, p, p);
    out
}

/// Symmetric square root `B D Bᵀ` of a covariance matrix.
pub fn covariance_sqrt(c: &Matrix) -> Result<Matrix, LinalgError> {
    let eig = symmetric_eigen(c)?;
    let n = c.rows();
    let b = &eig.eigenvectors;
    let d: Vec<f64> = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
    if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(LinalgError::Singular {
            column: n - 1,
            pivot: eig.eigenvalues[n - 1],
        });
    }
    let mut bd = b.clone();
    for i in 0..n {
        for (j, dj) in d.iter().enumerate() {
            bd[(i, j)] *= dj;
        }
    }
    bd.matmul(&b.transpose())
}

/// Cumulative step-size adaptation.
pub fn csa_update(s: &Vector, sigma: f64, params: &EsParams, z_w: &Vector) -> (Vector, f64) {
    let s_new = cumulate(s, params.c_sigma, params.mu_eff, z_w);
    let sigma_new = sigma * ((params.c_sigma / params.d_sigma) * (s_new.norm() / params.chi_n - 1.0)).exp();
    (s_new, sigma_new)
}

/// A single optimizer instance: sample with [`EvolutionStrategy::sample`],
/// then feed the ranked population to [`EvolutionStrategy::tell`].
#[derive(Debug, Clone)]
pub struct EvolutionStrategy {
    variant: Variant,
    params: EsParams,
    state: EsState,
}

impl EvolutionStrategy {
    pub fn new(variant: Variant, params: EsParams, mean: Vector, sigma: f64) -> Result<Self, StrategyError> {
        if mean.len() != params.n {
            return Err(StrategyError::MeanDimension {
                expected: params.n,
                found: mean.len(),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(StrategyError::InvalidSigma(sigma));
        }
        Ok(EvolutionStrategy {
            variant,
            state: EsState::initial(variant, mean, sigma),
            params,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn params(&self) -> &EsParams {
        &self.params
    }

    pub fn state(&self) -> &EsState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut EsState {
        &mut self.state
    }

    pub fn failed(&self) -> bool {
        self.state.failure.is_some()
    }

    /// Draws `λ` candidates `x = m + σ A z`, evaluates and ranks them.
    pub fn sample(&mut self, rng: &mut RngStream, obj: &mut Objective) -> Result<Population, StrategyError> {
        let n = self.params.n;
        let lambda = self.params.lambda;
        let mut pop = Population {
            z: Vec::with_capacity(lambda),
            y: Vec::with_capacity(lambda),
            x: Vec::with_capacity(lambda),
            f: Vec::with_capacity(lambda),
            order: Vec::new(),
        };
        let state = &mut self.state;
        for _ in 0..lambda {
            let z = rng.standard_normal_vector(n);
            let mut y = Vector::zeros(n);
            state.a.mat_vec_into(&z, &mut y);
            let x = Vector::from(
                state
                    .mean
                    .iter()
                    .zip(y.iter())
                    .map(|(m, yi)| m + state.sigma * yi)
                    .collect::<Vec<_>>(),
            );
            let f = obj.evaluate(&x)?;
            if !f.is_finite() {
                state.failure.get_or_insert(FailureReason::NonFiniteFitness);
            } else if f < state.best_f {
                state.best_f = f;
                state.best_x = x.clone();
            }
            pop.z.push(z);
            pop.y.push(y);
            pop.x.push(x);
            pop.f.push(f);
        }
        pop.rank();
        Ok(pop)
    }

    /// Applies recombination, path cumulation, the matrix update and CSA
    /// using `pop.order` as the selection.
    pub fn tell(&mut self, pop: &Population) -> Recombination {
        let rec = recombine(pop, &self.params);
        let params = &self.params;
        let state = &mut self.state;

        let (p, v) = update_paths(&state.p, &state.v, params, &rec.y_w, &rec.z_w);
        state.p = p;
        state.v = v;

        match self.variant {
            Variant::Mma => mma_update_in_place(&mut state.a, params.c1, &state.p, &state.v),
            Variant::Ecma => ecma_update_in_place(&mut state.a, params.c1, &state.p, &state.v),
            Variant::Cholesky => {
                let a_inv = state.a_inv.as_mut().expect("cholesky state carries A⁻¹");
                cholesky_update_in_place(&mut state.a, a_inv, params.c1, &state.p);
            }
            Variant::Cma1 => {
                let c = state.covariance.as_mut().expect("cma1 state carries C");
                c.scale_add_outer(1.0 - params.c1, params.c1, &state.p, &state.p);
                match covariance_sqrt(c) {
                    Ok(a) => state.a = a,
                    Err(_) => {
                        state.failure.get_or_insert(FailureReason::Decomposition);
                    }
                }
            }
        }

        let (s, sigma) = csa_update(&state.s, state.sigma, params, &rec.z_w);
        state.s = s;
        state.sigma = sigma;
        state.mean = rec.mean.clone();
        state.generation += 1;

        if !(SIGMA_MIN..=SIGMA_MAX).contains(&state.sigma) || !state.sigma.is_finite() {
            state.failure.get_or_insert(FailureReason::SigmaOutOfRange);
        }
        if !(state.mean.is_finite() && state.a.is_finite() && state.p.is_finite() && state.s.is_finite()) {
            state.failure.get_or_insert(FailureReason::NonFiniteState);
        }
        rec
    }
}

/// Knobs of a single run beyond the strategy constants.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub budget: u64,
    pub sigma0: f64,
    pub init_bounds: (f64, f64),
    /// Overrides the uniformly drawn initial mean.
    pub initial_mean: Option<Vector>,
    pub diagnostics: Option<DiagnosticsConfig>,
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        RunOptions {
            budget,
            sigma0: DEFAULT_SIGMA0,
            init_bounds: DEFAULT_INIT_BOUNDS,
            initial_mean: None,
            diagnostics: None,
        }
    }

    pub fn for_dim(n: usize) -> Self {
        Self::with_budget(DEFAULT_BUDGET_PER_DIM * n as u64)
    }

    pub fn traced(mut self, config: DiagnosticsConfig) -> Self {
        self.diagnostics = Some(config);
        self
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub variant: Variant,
    pub evaluations: u64,
    pub generations: u64,
    pub success: bool,
    pub best_f: f64,
    pub best_x: Vector,
    pub final_sigma: f64,
    pub final_mean: Vector,
    pub failure: Option<FailureReason>,
    pub trace: Option<Vec<TraceRow>>,
}

/// Draws the initial mean uniformly from the initialization box.
pub fn initial_mean(n: usize, base_seed: u64, run_index: u64, bounds: (f64, f64)) -> Result<Vector, RngError> {
    RngStream::derive(base_seed, run_index, StreamPurpose::Init).uniform_vector(n, bounds.0, bounds.1)
}

/// Runs one variant until the target is hit, the budget (rounded down to
/// whole generations) is spent, or the run fails.
pub fn run(
    variant: Variant,
    obj: &mut Objective,
    params: &EsParams,
    base_seed: u64,
    run_index: u64,
    options: &RunOptions,
) -> Result<RunResult, StrategyError> {
    let lambda = params.lambda as u64;
    if options.budget < lambda {
        return Err(StrategyError::BudgetTooSmall {
            budget: options.budget,
            lambda: params.lambda,
        });
    }
    let mean0 = match &options.initial_mean {
        Some(m) => m.clone(),
        None => initial_mean(params.n, base_seed, run_index, options.init_bounds)?,
    };
    let mut sampler = RngStream::derive(base_seed, run_index, StreamPurpose::Sampling);
    let mut es = EvolutionStrategy::new(variant, params.clone(), mean0, options.sigma0)?;
    let mut tracer = options
        .diagnostics
        .as_ref()
        .map(|cfg| Tracer::new(cfg.clone(), params.n));
    let start_evals = obj.eval_count();
    let mut success = false;

    while obj.eval_count() - start_evals + lambda <= options.budget {
        let pop = es.sample(&mut sampler, obj)?;
        let evaluations = obj.eval_count() - start_evals;
        if obj.is_solved(es.state.best_f) {
            success = true;
            if let Some(t) = tracer.as_mut() {
                t.push_final(es.state.generation + 1, evaluations, es.state.best_f, es.state.sigma);
            }
            break;
        }
        if es.failed() {
            break;
        }
        let a_prev = tracer
            .as_ref()
            .filter(|t| t.wants_previous_matrix(es.state.generation + 1))
            .map(|_| es.state.a.clone());
        let mean_prev = es.state.mean.clone();
        let rec = es.tell(&pop);
        if let Some(t) = tracer.as_mut() {
            let st = &es.state;
            t.observe(&GenerationView {
                generation: st.generation,
                evaluations,
                best_f: st.best_f,
                sigma: st.sigma,
                c1: params.c1,
                a_prev: a_prev.as_ref(),
                a_new: &st.a,
                p: &st.p,
                v: &st.v,
                z_w: &rec.z_w,
                mean_prev: &mean_prev,
                mean_new: &st.mean,
            });
        }
        if es.failed() {
            break;
        }
    }

    let st = es.state;
    Ok(RunResult {
        variant,
        evaluations: obj.eval_count() - start_evals,
        generations: (obj.eval_count() - start_evals) / lambda,
        success,
        best_f: st.best_f,
        best_x: st.best_x,
        final_sigma: st.sigma,
        final_mean: st.mean,
        failure: st.failure,
        trace: tracer.map(Tracer::into_rows),
    })
}

/// Wall-clock seconds per generation of `variant` on `obj`, averaged over
/// `generations` sample/tell cycles.
pub fn time_per_generation(
    variant: Variant,
    obj: &mut Objective,
    params: &EsParams,
    seed: u64,
    generations: usize,
) -> Result<f64, StrategyError> {
    let mean0 = initial_mean(params.n, seed, 0, DEFAULT_INIT_BOUNDS)?;
    let mut es = EvolutionStrategy::new(variant, params.clone(), mean0, DEFAULT_SIGMA0)?;
    let mut rng = RngStream::derive(seed, 0, StreamPurpose::Sampling);
    let start = Instant::now();
    for _ in 0..generations {
        let pop = es.sample(&mut rng, obj)?;
        es.tell(&pop);
    }
    Ok(start.elapsed().as_secs_f64() / generations as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Problem;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn default_params_examples() {
        let p = EsParams::default_params(10).unwrap();
        assert_eq!((p.lambda, p.mu), (10, 5));
        let p = EsParams::default_params(32).unwrap();
        assert!(rel(p.c1, 1.7913e-3) < 1e-4);
        assert!(matches!(
            EsParams::default_params(1),
            Err(StrategyError::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn weights_examples() {
        let w = recombination_weights(2);
        assert!((w[0] - 0.7304227103091852).abs() < 1e-15);
        assert!((w[1] - 0.26957728969081496).abs() < 1e-15);
        assert!((effective_mass(&w) - 1.649649838880741).abs() < 1e-12);
        assert_eq!(recombination_weights(1), vec![1.0]);
        assert_eq!(effective_mass(&[1.0]), 1.0);
    }

    #[test]
    fn params_invariants() {
        for n in [2, 3, 5, 10, 32, 64, 256] {
            let p = EsParams::default_params(n).unwrap();
            assert_eq!(p.weights.len(), p.mu);
            assert!(p.weights.windows(2).all(|w| w[0] >= w[1]));
            assert!(p.weights.iter().all(|&w| w > 0.0));
            assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p.mu_eff - 1.0 / p.weights.iter().map(|w| w * w).sum::<f64>()).abs() < 1e-12);
            assert!(p.d_sigma >= 1.0);
            // stationarity of the cumulation coefficients
            for c in [p.c, p.c_sigma] {
                assert!(((1.0 - c).powi(2) + c * (2.0 - c) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!(
            "bfgs".parse::<Variant>(),
            Err(StrategyError::UnknownVariant(_))
        ));
    }

    fn toy_population(xs: &[[f64; 2]]) -> Population {
        let v: Vec<Vector> = xs.iter().map(|x| Vector::from(x.to_vec())).collect();
        let mut pop = Population {
            z: v.clone(),
            y: v.clone(),
            x: v,
            f: (0..xs.len()).map(|i| i as f64).collect(),
            order: vec![],
        };
        pop.rank();
        pop
    }

    #[test]
    fn recombine_examples() {
        let params = EsParams::with_population(2, 4).unwrap();
        assert_eq!(params.mu, 2);
        let pop = toy_population(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [9.0, 9.0]]);
        let rec = recombine(&pop, &params);
        assert!((rec.mean[0] - 0.26957728969081496).abs() < 1e-15);
        assert!((rec.mean[1] - 0.26957728969081496).abs() < 1e-15);

        let same = toy_population(&[[2.5, -1.0]; 4]);
        let rec = recombine(&same, &params);
        assert!((rec.mean[0] - 2.5).abs() < 1e-15 && (rec.mean[1] + 1.0).abs() < 1e-15);

        let single = EsParams::with_population(2, 2).unwrap();
        assert_eq!(single.mu, 1);
        let pop = toy_population(&[[3.0, 4.0], [0.0, 0.0]]);
        assert_eq!(recombine(&pop, &single).mean.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn ranking_is_stable() {
        let mut pop = toy_population(&[[0.0, 0.0]; 4]);
        pop.f = vec![2.0, 1.0, 1.0, 0.5];
        pop.rank();
        assert_eq!(pop.order, vec![3, 1, 2, 0]);
    }

    #[test]
    fn path_examples() {
        let params = EsParams::default_params(4).unwrap();
        let p = Vector::from(vec![1.0, -2.0, 0.5, 3.0]);
        let v = Vector::from(vec![0.3, 0.1, -0.7, 2.0]);
        let zero = Vector::zeros(4);
        let (p1, v1) = update_paths(&p, &v, &params, &zero, &zero);
        assert_eq!(p1, p.scaled(1.0 - params.c));
        assert_eq!(v1, v.scaled(1.0 - params.c));
    }

    #[test]
    fn mma_examples() {
        let params = EsParams::default_params(4).unwrap().with_matrix_rate(0.02);
        let a = Matrix::identity(4);
        let zero = Vector::zeros(4);
        assert_eq!(mma_update(&a, &params, &zero, &zero), a.scaled(0.99));
        let e1 = Vector::basis(4, 0);
        let a1 = mma_update(&a, &params, &e1, &e1);
        assert_eq!(a1, Matrix::from_diag(&[1.0, 0.99, 0.99, 0.99]));
    }

    #[test]
    fn ecma_and_cholesky_zero_paths() {
        let params = EsParams::default_params(3).unwrap();
        let a = Matrix::from_rows(&[[2.0, 0.1, 0.0], [0.0, 1.0, 0.3], [0.5, 0.0, 1.5]]);
        let keep = (1.0 - params.c1).sqrt();
        let zero = Vector::zeros(3);
        let some_p = Vector::from(vec![1.0, 2.0, 3.0]);
        assert_eq!(ecma_update(&a, &params, &some_p, &zero), a.scaled(keep));

        let a_inv = crate::linalg::Lu::factor(&a).unwrap();
        let mut inv = Matrix::zeros(3, 3);
        for j in 0..3 {
            let col = a_inv.solve(Vector::basis(3, j).as_slice()).unwrap();
            for i in 0..3 {
                inv[(i, j)] = col[i];
            }
        }
        let (a1, inv1) = cholesky_update(&a, &inv, &params, &zero);
        assert_eq!(a1, a.scaled(keep));
        assert!(inv1.max_abs_diff(&inv.scaled(1.0 / keep)) < 1e-15);
    }

    #[test]
    fn coefficient_limits_and_values() {
        let c1 = 0.5;
        assert!((rank_one_coefficient(c1, 0.0) - c1 / (2.0 * (1.0 - c1).sqrt())).abs() < 1e-16);
        assert!((rank_one_coefficient(0.5, 4.0) - 0.21850801222441057).abs() < 1e-15);
        let c1 = 2.0 / (32.0 + 2f64.sqrt()).powi(2);
        assert!(rel(rank_one_coefficient(c1, 32.0), 8.839388007744746e-4) < 1e-12);
    }

    #[test]
    fn cma1_examples() {
        let params = EsParams::default_params(3).unwrap();
        let c = Matrix::identity(3);
        assert_eq!(
            reference_cma1_update(&c, &params, &Vector::zeros(3)),
            c.scaled(1.0 - params.c1)
        );
        let c1 = reference_cma1_update(&c, &params, &Vector::basis(3, 0));
        let want = Matrix::from_diag(&[1.0, 1.0 - params.c1, 1.0 - params.c1]);
        assert!(c1.max_abs_diff(&want) < 1e-16);
    }

    #[test]
    fn csa_examples() {
        let params = EsParams::default_params(6).unwrap();
        let zero = Vector::zeros(6);
        let (s, sigma) = csa_update(&zero, 2.0, &params, &zero);
        assert_eq!(s, zero);
        assert!(rel(sigma, 2.0 * (-params.c_sigma / params.d_sigma).exp()) < 1e-15);

        // a path already at the neutral length stays neutral under z_w = 0
        let scale = params.chi_n / (1.0 - params.c_sigma);
        let s0 = Vector::basis(6, 2).scaled(scale);
        let (s1, sigma) = csa_update(&s0, 3.0, &params, &zero);
        assert!((s1.norm() - params.chi_n).abs() < 1e-14);
        assert!(rel(sigma, 3.0) < 1e-14);
    }

    #[test]
    fn sample_identity_transform() {
        let params = EsParams::default_params(3).unwrap();
        let mut es = EvolutionStrategy::new(Variant::Mma, params, Vector::zeros(3), 1.0).unwrap();
        let mut obj = Objective::new(Problem::Sphere, 3).unwrap();
        let pop = es.sample(&mut RngStream::new(4), &mut obj).unwrap();
        for i in 0..pop.x.len() {
            assert_eq!(pop.x[i], pop.z[i]);
            assert_eq!(pop.f[i], pop.z[i].norm_sq());
        }
        assert_eq!(obj.eval_count(), es.params().lambda as u64);
        let best = pop.f[pop.order[0]];
        assert_eq!(es.state().best_f, best);
    }

    #[test]
    fn sample_diagonal_transform() {
        let params = EsParams::default_params(2).unwrap();
        let mut es = EvolutionStrategy::new(Variant::Mma, params, Vector::zeros(2), 1.0).unwrap();
        es.state_mut().a = Matrix::from_diag(&[2.0, 1.0]);
        let mut obj = Objective::new(Problem::Sphere, 2).unwrap();
        let pop = es.sample(&mut RngStream::new(9), &mut obj).unwrap();
        for (x, z) in pop.x.iter().zip(&pop.z) {
            assert_eq!(x.as_slice(), &[2.0 * z[0], z[1]]);
        }
    }

    #[test]
    fn budget_exhaustion_rounds_to_generations() {
        let params = EsParams::default_params(10).unwrap();
        let lambda = params.lambda as u64;
        let mut obj = Objective::new(Problem::Ellipsoid, 10).unwrap();
        let res = run(
            Variant::Mma,
            &mut obj,
            &params,
            1,
            0,
            &RunOptions::with_budget(3 * lambda + 4),
        )
        .unwrap();
        assert!(!res.success);
        assert_eq!(res.evaluations, 3 * lambda);
        assert_eq!(res.generations, 3);

        let err = run(
            Variant::Mma,
            &mut obj,
            &params,
            1,
            0,
            &RunOptions::with_budget(lambda - 1),
        );
        assert!(matches!(err, Err(StrategyError::BudgetTooSmall { .. })));
    }

    #[test]
    fn sphere_is_solved_by_every_variant() {
        for variant in Variant::ALL {
            let params = EsParams::default_params(6).unwrap();
            let mut obj = Objective::new(Problem::Sphere, 6).unwrap();
            let res = run(variant, &mut obj, &params, 5, 0, &RunOptions::for_dim(6)).unwrap();
            assert!(res.success, "{variant}: {res:?}");
            assert!(res.best_f <= 1e-10);
            assert_eq!(res.failure, None);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let params = EsParams::default_params(5).unwrap();
        let go = || {
            let mut obj = Objective::new(Problem::Rosenbrock, 5).unwrap();
            run(Variant::Ecma, &mut obj, &params, 77, 3, &RunOptions::for_dim(5)).unwrap()
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn parabolic_ridge_reaches_its_target() {
        let params = EsParams::default_params(8).unwrap();
        let mut obj = Objective::new(Problem::ParabolicRidge, 8).unwrap();
        let res = run(Variant::Mma, &mut obj, &params, 2, 0, &RunOptions::for_dim(8)).unwrap();
        assert!(res.success, "{res:?}");
        assert!(res.best_f <= -1e10);
    }
}
