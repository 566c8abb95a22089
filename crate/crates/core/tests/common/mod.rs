//! Straightforward re-implementations used as oracles, on plain nested vectors.
#![allow(dead_code)]

use mmaes::linalg::{Matrix, Vector};
use mmaes::rng::RngStream;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn from_dense(d: &Dense) -> Matrix {
    Matrix::from_rows(d)
}

pub fn random_vector(rng: &mut RngStream, n: usize, scale: f64) -> Vector {
    Vector::from((0..n).map(|_| scale * rng.standard_normal()).collect::<Vec<_>>())
}

/// `I + G/√n` with Gaussian `G`; well conditioned with high probability.
pub fn random_matrix(rng: &mut RngStream, n: usize) -> Matrix {
    let s = 1.0 / (n as f64).sqrt();
    let rows: Dense = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } + 0.5 * s * rng.standard_normal())
                .collect()
        })
        .collect();
    from_dense(&rows)
}

pub fn frob(d: &Dense) -> f64 {
    d.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frob_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y) * (x - y)))
        .sum::<f64>()
        .sqrt()
}

pub fn rel_matrix(actual: &Matrix, expected: &Dense) -> f64 {
    frob_diff(&to_dense(actual), expected) / frob(expected)
}

pub fn rel_vector(actual: &[f64], expected: &[f64]) -> f64 {
    let diff: f64 = actual
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = expected.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for j in 0..m {
        for i in 0..n {
            let mut acc = 0.0;
            for k in (0..b.len()).rev() {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_vec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Gauss–Jordan inverse with full row swaps.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut aug: Dense = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot_row = aug[col].clone();
                    for (x, p) in aug[r].iter_mut().zip(&pivot_row) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `A ← (1 − c1/2) A + (c1/2) p vᵀ`
pub fn naive_mma(a: &Dense, c1: f64, p: &[f64], v: &[f64]) -> Dense {
    let mut out = a.clone();
    for i in 0..a.len() {
        for j in 0..a.len() {
            out[i][j] = (1.0 - c1 / 2.0) * a[i][j] + (c1 / 2.0) * p[i] * v[j];
        }
    }
    out
}

/// Literal coefficient `√(1−c1)/‖v‖² (√(1 + c1/(1−c1) ‖v‖²) − 1)`.
pub fn literal_b(c1: f64, vsq: f64) -> f64 {
    (1.0 - c1).sqrt() / vsq * ((1.0 + c1 / (1.0 - c1) * vsq).sqrt() - 1.0)
}

pub fn naive_ecma(a: &Dense, c1: f64, p: &[f64], v: &[f64]) -> Dense {
    let b = literal_b(c1, norm_sq(v));
    let mut out = a.clone();
    for i in 0..a.len() {
        for j in 0..a.len() {
            out[i][j] = (1.0 - c1).sqrt() * a[i][j] + b * p[i] * v[j];
        }
    }
    out
}

/// Returns `(A', A⁻¹')` from the literal forward and inverse formulas.
pub fn naive_cholesky(a: &Dense, a_inv: &Dense, c1: f64, p: &[f64]) -> (Dense, Dense) {
    let n = a.len();
    let u = mat_vec(a_inv, p);
    let usq = norm_sq(&u);
    let b = literal_b(c1, usq);
    let binv = 1.0 / ((1.0 - c1).sqrt() * usq) * (1.0 / (1.0 + c1 / (1.0 - c1) * usq).sqrt() - 1.0);
    let ut_ainv: Vec<f64> = (0..n).map(|j| (0..n).map(|k| u[k] * a_inv[k][j]).sum()).collect();
    let mut a_new = a.clone();
    let mut inv_new = a_inv.clone();
    for i in 0..n {
        for j in 0..n {
            a_new[i][j] = (1.0 - c1).sqrt() * a[i][j] + b * p[i] * u[j];
            inv_new[i][j] = a_inv[i][j] / (1.0 - c1).sqrt() + binv * u[i] * ut_ainv[j];
        }
    }
    (a_new, inv_new)
}

pub fn naive_path(path: &[f64], c: f64, mu_eff: f64, step: &[f64]) -> Vec<f64> {
    path.iter()
        .zip(step)
        .map(|(q, d)| (1.0 - c) * q + (c * (2.0 - c)).sqrt() * mu_eff.sqrt() * d)
        .collect()
}

pub fn naive_csa(
    s: &[f64],
    sigma: f64,
    c_sigma: f64,
    d_sigma: f64,
    mu_eff: f64,
    chi_n: f64,
    z_w: &[f64],
) -> (Vec<f64>, f64) {
    let s_new = naive_path(s, c_sigma, mu_eff, z_w);
    let norm = norm_sq(&s_new).sqrt();
    (s_new.clone(), sigma * (c_sigma / d_sigma * (norm / chi_n - 1.0)).exp())
}

/// Two-sided rank-sum p-value by enumerating every split of the pooled
/// midranks: share of splits whose rank sum is at least as far from its
/// mean as the observed one.
pub fn brute_force_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let ranks: Vec<f64> = pooled
        .iter()
        .map(|x| {
            let less = pooled.iter().filter(|y| *y < x).count() as f64;
            let equal = pooled.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let na = a.len();
    let observed: f64 = ranks[..na].iter().sum();
    let mean = na as f64 * (n as f64 + 1.0) / 2.0;
    let dev = (observed - mean).abs();
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (w - mean).abs() >= dev - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}
