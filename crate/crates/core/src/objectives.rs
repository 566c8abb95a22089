//! The benchmark problems, their success targets and the rotated /
//! translated wrappers `f(R(x - x*))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{gram_schmidt_rotation, LinalgError, Matrix, Vector};
use crate::rng::RngStream;

/// Orthogonality tolerance accepted for a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("{problem} expects dimension {expected}, got a point of dimension {found}")]
    DimensionMismatch {
        problem: Problem,
        expected: usize,
        found: usize,
    },
    #[error("{problem} requires n >= {min}, got n = {n}")]
    DimensionTooSmall { problem: Problem, min: usize, n: usize },
    #[error("rotation matrix is not orthogonal: max|RᵀR - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },
    #[error("rotation matrix has shape {rows}x{cols}, expected {n}x{n}")]
    RotationShape { rows: usize, cols: usize, n: usize },
    #[error("unknown problem '{0}' (expected one of sp, cig, ctb, ell, tab, tx, dp, sch, ros, pr)")]
    UnknownProblem(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Problem {
    /// `Σ x_i²`
    Sphere,
    /// `x_1² + 10⁶ Σ_{i≥2} x_i²`
    Cigar,
    /// `x_1² + 10⁴ Σ_{i=2}^{n-1} x_i² + 10⁶ x_n²`
    CigarTablet,
    /// `Σ 10^{6(i-1)/(n-1)} x_i²`
    Ellipsoid,
    /// `10⁶ x_1² + Σ_{i≥2} x_i²`
    Tablet,
    /// `Σ_{i≤⌊n/2⌋} x_i² + 10⁶ Σ_{i>⌊n/2⌋} x_i²`
    TwoAxes,
    /// `Σ |x_i|^{2 + 4(i-1)/(n-1)}`
    DifferentPowers,
    /// `Σ_{i=1}^{n} (Σ_{j=1}^{i-1} x_j)²`
    Schwefel,
    /// `Σ_{i<n} 100(x_{i+1} - x_i²)² + (x_i - 1)²`
    Rosenbrock,
    /// `-x_1 + 100 Σ_{i≥2} x_i²`
    ParabolicRidge,
}

impl Problem {
    pub const ALL: [Problem; 10] = [
        Problem::Sphere,
        Problem::Cigar,
        Problem::CigarTablet,
        Problem::Ellipsoid,
        Problem::Tablet,
        Problem::TwoAxes,
        Problem::DifferentPowers,
        Problem::Schwefel,
        Problem::Rosenbrock,
        Problem::ParabolicRidge,
    ];

    /// Short name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Problem::Sphere => "sp",
            Problem::Cigar => "cig",
            Problem::CigarTablet => "ctb",
            Problem::Ellipsoid => "ell",
            Problem::Tablet => "tab",
            Problem::TwoAxes => "tx",
            Problem::DifferentPowers => "dp",
            Problem::Schwefel => "sch",
            Problem::Rosenbrock => "ros",
            Problem::ParabolicRidge => "pr",
        }
    }

    pub fn target(self) -> f64 {
        match self {
            Problem::ParabolicRidge => -1e10,
            _ => 1e-10,
        }
    }

    pub fn min_dim(self) -> usize {
        match self {
            Problem::CigarTablet
            | Problem::Ellipsoid
            | Problem::TwoAxes
            | Problem::DifferentPowers
            | Problem::Rosenbrock => 2,
            _ => 1,
        }
    }

    /// A point where the function attains 0, if it is bounded below.
    pub fn minimizer(self, n: usize) -> Option<Vector> {
        match self {
            Problem::ParabolicRidge => None,
            Problem::Rosenbrock => Some(Vector::from(vec![1.0; n])),
            _ => Some(Vector::zeros(n)),
        }
    }

    /// Per-coordinate constants: Ellipsoid weights or DifferentPowers exponents.
    fn coefficients(self, n: usize) -> Vec<f64> {
        let ratio = |i: usize| i as f64 / (n - 1) as f64;
        match self {
            Problem::Ellipsoid => (0..n).map(|i| 10f64.powf(6.0 * ratio(i))).collect(),
            Problem::DifferentPowers => (0..n).map(|i| 2.0 + 4.0 * ratio(i)).collect(),
            _ => Vec::new(),
        }
    }

    fn value(self, x: &[f64], coef: &[f64]) -> f64 {
        let n = x.len();
        let sq = |xs: &[f64]| xs.iter().map(|v| v * v).sum::<f64>();
        match self {
            Problem::Sphere => sq(x),
            Problem::Cigar => x[0] * x[0] + 1e6 * sq(&x[1..]),
            Problem::CigarTablet => x[0] * x[0] + 1e4 * sq(&x[1..n - 1]) + 1e6 * x[n - 1] * x[n - 1],
            Problem::Ellipsoid => x.iter().zip(coef).map(|(v, w)| w * v * v).sum(),
            Problem::Tablet => 1e6 * x[0] * x[0] + sq(&x[1..]),
            Problem::TwoAxes => {
                let h = n / 2;
                sq(&x[..h]) + 1e6 * sq(&x[h..])
            }
            Problem::DifferentPowers => x.iter().zip(coef).map(|(v, e)| v.abs().powf(*e)).sum(),
            Problem::Schwefel => {
                let mut prefix = 0.0;
                let mut total = 0.0;
                for v in &x[..n.saturating_sub(1)] {
                    prefix += v;
                    total += prefix * prefix;
                }
                total
            }
            Problem::Rosenbrock => x
                .windows(2)
                .map(|w| {
                    let a = w[1] - w[0] * w[0];
                    let b = w[0] - 1.0;
                    100.0 * a * a + b * b
                })
                .sum(),
            Problem::ParabolicRidge => -x[0] + 100.0 * sq(&x[1..]),
        }
    }
}

impl TryFrom<String> for Problem {
    type Error = ObjectiveError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Problem> for String {
    fn from(p: Problem) -> String {
        p.to_string()
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = ObjectiveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ObjectiveError::UnknownProblem(s.to_string()))
    }
}

/// Draws a Gaussian matrix and orthonormalizes it.
pub fn random_rotation(n: usize, rng: &mut RngStream) -> Result<Matrix, LinalgError> {
    let g = Matrix::from_row_major(n, n, rng.standard_normal_vector(n * n).into_vec())?;
    gram_schmidt_rotation(&g)
}

/// A benchmark function instance that counts its evaluations.
#[derive(Debug, Clone)]
pub struct Objective {
    problem: Problem,
    dim: usize,
    target: f64,
    rotation: Option<Matrix>,
    shift: Option<Vector>,
    coef: Vec<f64>,
    scratch: Vec<f64>,
    rotated: Vec<f64>,
    eval_count: u64,
    saw_non_finite: bool,
}

impl Objective {
    pub fn new(problem: Problem, dim: usize) -> Result<Self, ObjectiveError> {
        if dim < problem.min_dim() {
            return Err(ObjectiveError::DimensionTooSmall {
                problem,
                min: problem.min_dim(),
                n: dim,
            });
        }
        Ok(Objective {
            problem,
            dim,
            target: problem.target(),
            rotation: None,
            shift: None,
            coef: problem.coefficients(dim),
            scratch: vec![0.0; dim],
            rotated: vec![0.0; dim],
            eval_count: 0,
            saw_non_finite: false,
        })
    }

    /// Evaluates `f(R x)` from now on.
    pub fn with_rotation(mut self, rotation: Matrix) -> Result<Self, ObjectiveError> {
        if rotation.rows() != self.dim || rotation.cols() != self.dim {
            return Err(ObjectiveError::RotationShape {
                rows: rotation.rows(),
                cols: rotation.cols(),
                n: self.dim,
            });
        }
        let rtr = rotation.transpose().matmul(&rotation)?;
        let deviation = rtr.max_abs_diff(&Matrix::identity(self.dim));
        if !(deviation <= ROTATION_TOL) {
            return Err(ObjectiveError::NotOrthogonal { deviation });
        }
        self.rotation = Some(rotation);
        Ok(self)
    }

    /// Moves the optimum to `optimum`: evaluates `f(x - optimum)`.
    pub fn with_shift(mut self, optimum: Vector) -> Result<Self, ObjectiveError> {
        self.check_dim(optimum.len())?;
        self.shift = Some(optimum);
        Ok(self)
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn rotation(&self) -> Option<&Matrix> {
        self.rotation.as_ref()
    }

    pub fn shift(&self) -> Option<&Vector> {
        self.shift.as_ref()
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    /// True once any evaluation saw a non-finite input or value.
    pub fn saw_non_finite(&self) -> bool {
        self.saw_non_finite
    }

    fn check_dim(&self, found: usize) -> Result<(), ObjectiveError> {
        if found == self.dim {
            Ok(())
        } else {
            Err(ObjectiveError::DimensionMismatch {
                problem: self.problem,
                expected: self.dim,
                found,
            })
        }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x.len())?;
        self.eval_count += 1;
        if x.iter().any(|v| !v.is_finite()) {
            self.saw_non_finite = true;
            return Ok(f64::INFINITY);
        }
        let mut point: &[f64] = x;
        if let Some(shift) = &self.shift {
            for ((s, xi), oi) in self.scratch.iter_mut().zip(x).zip(shift.iter()) {
                *s = xi - oi;
            }
            point = &self.scratch;
        }
        if let Some(r) = &self.rotation {
            r.mat_vec_into(point, &mut self.rotated);
            point = &self.rotated;
        }
        let value = self.problem.value(point, &self.coef);
        if value.is_nan() {
            self.saw_non_finite = true;
            return Ok(f64::INFINITY);
        }
        Ok(value)
    }

    pub fn is_solved(&self, best_f: f64) -> bool {
        best_f <= self.target
    }
}
