//! Per-generation quantities used to study the v-path approximation and the
//! shape learned by the mutation matrix.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{symmetric_eigen, Lu, Matrix, Vector};
use crate::strategy::rank_one_coefficient;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("undefined for a zero vector")]
    ZeroVector,
    #[error("matrix is singular")]
    Singular,
    #[error("eigendecomposition failed")]
    Eigen,
    #[error("unknown diagnostic '{0}' (expected alpha, bgap, eigen, ortho)")]
    UnknownDiagnostic(String),
}

/// `α = 1 - cos∠(v, u)`, in `[0, 2]`.
pub fn alpha_similarity(v: &Vector, u: &Vector) -> Result<f64, DiagnosticsError> {
    Ok(1.0 - cosine(v, u)?)
}

/// The exact rank-one coefficient `b` for a path of squared norm `v_norm_sq`.
pub fn b_coefficient(c1: f64, v_norm_sq: f64) -> f64 {
    rank_one_coefficient(c1, v_norm_sq)
}

/// `|b - c1/2|`, the gap between the exact coefficient and the one used by MMA.
pub fn b_gap(c1: f64, v_norm_sq: f64) -> f64 {
    (b_coefficient(c1, v_norm_sq) - 0.5 * c1).abs()
}

fn cosine(a: &Vector, b: &Vector) -> Result<f64, DiagnosticsError> {
    let na = a.norm();
    let nb = b.norm();
    if !(na > 0.0 && nb > 0.0) {
        return Err(DiagnosticsError::ZeroVector);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine between consecutive weighted steps.
pub fn consecutive_orthogonality(z_prev: &Vector, z_next: &Vector) -> Result<f64, DiagnosticsError> {
    cosine(z_prev, z_next)
}

/// Normalized conjugacy of two consecutive mean shifts under `C = A Aᵀ`:
/// the cosine between `A⁻¹(m_prev - m_prev2)` and `A⁻¹(m_curr - m_prev)`.
pub fn conjugacy(m_prev2: &Vector, m_prev: &Vector, m_curr: &Vector, a: &Matrix) -> Result<f64, DiagnosticsError> {
    let lu = Lu::factor(a).map_err(|_| DiagnosticsError::Singular)?;
    conjugacy_with(m_prev2, m_prev, m_curr, &lu)
}

fn conjugacy_with(m_prev2: &Vector, m_prev: &Vector, m_curr: &Vector, lu: &Lu) -> Result<f64, DiagnosticsError> {
    let d1 = m_prev.sub(m_prev2);
    let d2 = m_curr.sub(m_prev);
    let w1 = lu.solve(&d1).map_err(|_| DiagnosticsError::Singular)?;
    let w2 = lu.solve(&d2).map_err(|_| DiagnosticsError::Singular)?;
    cosine(&w1, &w2)
}

/// Square roots of the eigenvalues of `A Aᵀ`, descending.
pub fn eigen_trace(a: &Matrix) -> Result<Vector, DiagnosticsError> {
    let eig = symmetric_eigen(&a.gram()).map_err(|_| DiagnosticsError::Eigen)?;
    Ok(Vector::from(
        eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect::<Vec<_>>(),
    ))
}

/// Which diagnostics to record, and how often to record the O(n³) ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub alpha: bool,
    pub b_gap: bool,
    pub eigen: bool,
    pub ortho: bool,
    /// Stride for alpha, conjugacy and eigenvalues. `None` picks 1 for
    /// `n ≤ 64` and 10 above.
    pub every: Option<usize>,
}

impl DiagnosticsConfig {
    /// Basic trace columns only.
    pub fn basic() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        DiagnosticsConfig {
            alpha: true,
            b_gap: true,
            eigen: true,
            ortho: true,
            every: None,
        }
    }

    pub fn stride(&self, n: usize) -> usize {
        self.every.unwrap_or(if n <= 64 { 1 } else { 10 }).max(1)
    }
}

impl FromStr for DiagnosticsConfig {
    type Err = DiagnosticsError;

    /// Comma-separated list drawn from `alpha,bgap,eigen,ortho`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cfg = DiagnosticsConfig::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "alpha" => cfg.alpha = true,
                "bgap" => cfg.b_gap = true,
                "eigen" => cfg.eigen = true,
                "ortho" => cfg.ortho = true,
                "all" => cfg = DiagnosticsConfig::all(),
                other => return Err(DiagnosticsError::UnknownDiagnostic(other.to_string())),
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: u64,
    pub evaluations: u64,
    pub best_f: f64,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub b_gap: Option<f64>,
    pub z_dot: Option<f64>,
    pub conj: Option<f64>,
    pub eigen: Option<Vec<f64>>,
}

/// Snapshot handed to the tracer after each completed generation `t → t+1`.
pub struct GenerationView<'a> {
    pub generation: u64,
    pub evaluations: u64,
    pub best_f: f64,
    pub sigma: f64,
    pub c1: f64,
    /// `A_t`, present on generations that sample alpha or conjugacy.
    pub a_prev: Option<&'a Matrix>,
    pub a_new: &'a Matrix,
    pub p: &'a Vector,
    pub v: &'a Vector,
    pub z_w: &'a Vector,
    pub mean_prev: &'a Vector,
    pub mean_new: &'a Vector,
}

/// Accumulates trace rows for one run. Reads snapshots only.
#[derive(Debug, Clone)]
pub struct Tracer {
    config: DiagnosticsConfig,
    stride: usize,
    rows: Vec<TraceRow>,
    prev_z: Option<Vector>,
    prev2_mean: Option<Vector>,
}

impl Tracer {
    pub fn new(config: DiagnosticsConfig, n: usize) -> Self {
        Tracer {
            stride: config.stride(n),
            config,
            rows: Vec::new(),
            prev_z: None,
            prev2_mean: None,
        }
    }

    pub fn config(&self) -> &DiagnosticsConfig {
        &self.config
    }

    fn sampled(&self, generation: u64) -> bool {
        generation.is_multiple_of(self.stride as u64)
    }

    /// Whether generation `generation` needs a copy of `A_t`.
    pub fn wants_previous_matrix(&self, generation: u64) -> bool {
        (self.config.alpha || self.config.ortho) && self.sampled(generation)
    }

    pub fn observe(&mut self, view: &GenerationView<'_>) {
        let sampled = self.sampled(view.generation);
        let cfg = &self.config;

        let alpha = match (cfg.alpha && sampled, view.a_prev) {
            (true, Some(a)) => Lu::factor(a)
                .ok()
                .and_then(|lu| lu.solve(view.p).ok())
                .and_then(|u| alpha_similarity(view.v, &u).ok()),
            _ => None,
        };
        let b_gap = cfg.b_gap.then(|| b_gap(view.c1, view.v.norm_sq()));
        let z_dot = if cfg.ortho {
            self.prev_z
                .as_ref()
                .and_then(|z| consecutive_orthogonality(z, view.z_w).ok())
        } else {
            None
        };
        let conj = match (cfg.ortho && sampled, view.a_prev, self.prev2_mean.as_ref()) {
            (true, Some(a), Some(m2)) => conjugacy(m2, view.mean_prev, view.mean_new, a).ok(),
            _ => None,
        };
        let eigen = if cfg.eigen && sampled {
            eigen_trace(view.a_new).ok().map(Vector::into_vec)
        } else {
            None
        };

        self.rows.push(TraceRow {
            generation: view.generation,
            evaluations: view.evaluations,
            best_f: view.best_f,
            sigma: view.sigma,
            alpha,
            b_gap,
            z_dot,
            conj,
            eigen,
        });
        if cfg.ortho {
            self.prev_z = Some(view.z_w.clone());
            self.prev2_mean = Some(view.mean_prev.clone());
        }
    }

    /// Closing row for a generation that hit the target before any update.
    pub fn push_final(&mut self, generation: u64, evaluations: u64, best_f: f64, sigma: f64) {
        self.rows.push(TraceRow {
            generation,
            evaluations,
            best_f,
            sigma,
            alpha: None,
            b_gap: None,
            z_dot: None,
            conj: None,
            eigen: None,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<TraceRow> {
        self.rows
    }
}

/// Median of the finite values, `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Per-generation median of a trace column across several runs; generation
/// `g` only counts runs that reached it.
pub fn per_generation_median(traces: &[&[TraceRow]], column: impl Fn(&TraceRow) -> Option<f64>) -> Vec<(u64, f64)> {
    let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..longest)
        .filter_map(|i| {
            let generation = traces.iter().find_map(|t| t.get(i)).map(|r| r.generation)?;
            median(traces.iter().filter_map(|t| t.get(i)).filter_map(&column)).map(|m| (generation, m))
        })
        .collect()
}
