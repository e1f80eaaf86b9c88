//! Gaussian-kernel one-class novelty detector (nu formulation).
//!
//! The dual problem
//!
//! ```text
//! minimize  1/2 sum_ij a_i a_j K(x_i, x_j)
//! subject to 0 <= a_i <= 1 / (nu n),  sum_i a_i = 1
//! ```
//!
//! is solved by two-variable (SMO) updates with second-order working-set
//! selection. The decision value of `x` is `sum_i a_i K(x, x_i) - rho`;
//! negative values are outliers.

use rayon::prelude::*;
use serde::Serialize;

use super::{PredictedClass, Prediction};
use crate::error::{Error, Result};

/// Default stopping tolerance on the maximal KKT violation.
pub const DEFAULT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneClassModel {
    pub(crate) support_vectors: Vec<Vec<f64>>,
    pub(crate) alphas: Vec<f64>,
    pub(crate) rho: f64,
    pub(crate) gamma: f64,
    pub(crate) nu: f64,
    pub(crate) feature_dim: usize,
}

pub(crate) fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

impl OneClassModel {
    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature vector of length {}, model expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, &a)| a * rbf(self.gamma, x, sv))
            .sum::<f64>()
            - self.rho)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.decision(x)?;
        Ok(Prediction {
            class: if score < 0.0 {
                PredictedClass::Outlier
            } else {
                PredictedClass::Real
            },
            score,
        })
    }
}

/// Solver output including per-training-point quantities.
#[derive(Debug, Clone)]
pub struct OneClassFit {
    pub model: OneClassModel,
    /// Dual variables of every training point, in input order.
    pub alphas: Vec<f64>,
    /// Decision values of every training point.
    pub decisions: Vec<f64>,
    /// Upper bound on each dual variable, `1 / (nu n)`.
    pub upper_bound: f64,
    pub iterations: usize,
}

impl OneClassFit {
    /// Fraction of training points with a negative decision value.
    pub fn training_outlier_fraction(&self) -> f64 {
        self.decisions.iter().filter(|&&d| d < 0.0).count() as f64 / self.decisions.len() as f64
    }

    /// Largest violation of the optimality conditions
    /// `a = 0 => f >= 0` and `a = C => f <= 0`.
    pub fn kkt_residual(&self) -> f64 {
        let eps = self.upper_bound * 1e-12;
        self.alphas
            .iter()
            .zip(&self.decisions)
            .map(|(&a, &f)| {
                if a <= eps {
                    (-f).max(0.0)
                } else if a >= self.upper_bound - eps {
                    f.max(0.0)
                } else {
                    f.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

fn validate(x: &[Vec<f64>], nu: f64, gamma: f64) -> Result<usize> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "nu {nu} outside (0, 1]"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!(
            "gamma {gamma} must be positive"
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidHyperparameter(format!(
            "one-class training needs at least 2 samples, got {}",
            x.len()
        )));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch("ragged feature matrix".into()));
    }
    Ok(dim)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major `rows.len() x cols.len()` matrix of squared distances.
fn cross_distances(rows: &[Vec<f64>], cols: &[Vec<f64>]) -> Vec<f64> {
    let n = cols.len();
    let mut d = vec![0.0; rows.len() * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = squared_distance(&rows[i], &cols[j]);
        }
    });
    d
}

/// Row-major squared distances among `x`, computed once per pair.
fn pairwise_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in i + 1..n {
            row[j] = squared_distance(&x[i], &x[j]);
        }
    });
    for i in 0..n {
        for j in 0..i {
            d[i * n + j] = d[j * n + i];
        }
    }
    d
}

pub fn train_oneclass(x: &[Vec<f64>], nu: f64, gamma: f64) -> Result<OneClassModel> {
    Ok(fit_oneclass(x, nu, gamma, DEFAULT_TOLERANCE)?.model)
}

pub fn fit_oneclass(x: &[Vec<f64>], nu: f64, gamma: f64, tolerance: f64) -> Result<OneClassFit> {
    let dim = validate(x, nu, gamma)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidHyperparameter(format!(
            "tolerance {tolerance}"
        )));
    }
    solve(x, &pairwise_distances(x), dim, nu, gamma, tolerance)
}

fn solve(
    x: &[Vec<f64>],
    sq: &[f64],
    dim: usize,
    nu: f64,
    gamma: f64,
    tolerance: f64,
) -> Result<OneClassFit> {
    let n = x.len();
    let c = 1.0 / (nu * n as f64);
    let k: Vec<f64> = sq.par_iter().map(|d| (-gamma * d).exp()).collect();
    let kij = |i: usize, j: usize| k[i * n + j];

    // Feasible start: the first floor(nu n) points at the bound, remainder on the next.
    let mut alpha = vec![0.0; n];
    let full = ((nu * n as f64).floor() as usize).min(n);
    alpha[..full].fill(c);
    if full < n {
        alpha[full] = (1.0 - full as f64 * c).max(0.0);
    }

    let mut grad = vec![0.0; n];
    for (j, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            for (g, kv) in grad.iter_mut().zip(&k[j * n..(j + 1) * n]) {
                *g += a * kv;
            }
        }
    }

    let max_iter = 10_000_000usize.max(100 * n);
    let mut iterations = 0;
    while iterations < max_iter {
        // i: may grow, smallest gradient. j: may shrink, chosen by second-order gain.
        let mut i = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if alpha[t] < c && grad[t] < g_min {
                g_min = grad[t];
                i = t;
            }
            if alpha[t] > 0.0 {
                g_max = g_max.max(grad[t]);
            }
        }
        if i == usize::MAX || g_max - g_min < tolerance {
            break;
        }

        let mut j = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for t in 0..n {
            if alpha[t] > 0.0 && grad[t] > g_min {
                let b = grad[t] - g_min;
                let eta = (kij(i, i) + kij(t, t) - 2.0 * kij(i, t)).max(1e-12);
                let gain = b * b / eta;
                if gain > best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }

        let eta = (kij(i, i) + kij(j, j) - 2.0 * kij(i, j)).max(1e-12);
        let delta = ((grad[j] - grad[i]) / eta).min(c - alpha[i]).min(alpha[j]);
        alpha[i] += delta;
        alpha[j] -= delta;
        // Snap to bounds so the active sets are exact.
        if c - alpha[i] < c * 1e-12 {
            alpha[i] = c;
        }
        if alpha[j] < c * 1e-12 {
            alpha[j] = 0.0;
        }
        let (row_i, row_j) = (&k[i * n..(i + 1) * n], &k[j * n..(j + 1) * n]);
        for t in 0..n {
            grad[t] += delta * (row_i[t] - row_j[t]);
        }
        iterations += 1;
    }

    // Fresh gradient, free of accumulated update drift.
    let grad: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|t| {
            alpha
                .iter()
                .zip(&k[t * n..(t + 1) * n])
                .map(|(a, kv)| a * kv)
                .sum()
        })
        .collect();

    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| grad[t])
        .collect();
    let rho = if free.is_empty() {
        let upper = (0..n)
            .filter(|&t| alpha[t] < c)
            .map(|t| grad[t])
            .fold(f64::INFINITY, f64::min);
        let lower = (0..n)
            .filter(|&t| alpha[t] > 0.0)
            .map(|t| grad[t])
            .fold(f64::NEG_INFINITY, f64::max);
        match (upper.is_finite(), lower.is_finite()) {
            (true, true) => 0.5 * (upper + lower),
            (true, false) => upper,
            _ => lower,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };

    let decisions: Vec<f64> = grad.iter().map(|g| g - rho).collect();
    let (support_vectors, alphas): (Vec<Vec<f64>>, Vec<f64>) = x
        .iter()
        .zip(&alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|(row, &a)| (row.clone(), a))
        .unzip();

    Ok(OneClassFit {
        model: OneClassModel {
            support_vectors,
            alphas,
            rho,
            gamma,
            nu,
            feature_dim: dim,
        },
        alphas: alpha,
        decisions,
        upper_bound: c,
        iterations,
    })
}

/// Chooses the kernel width whose held-out inlier rate is closest to
/// `1 - nu` from above; ties go to the smaller gamma. When no grid value
/// reaches `1 - nu`, the one with the highest inlier rate is returned.
///
/// The last `ceil(holdout_fraction * n)` rows of `x` are held out, so callers
/// should shuffle beforehand.
pub fn grid_search_gamma(
    x: &[Vec<f64>],
    nu: f64,
    grid: &[f64],
    holdout_fraction: f64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidHyperparameter("empty gamma grid".into()));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "holdout fraction {holdout_fraction} outside (0, 1)"
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidHyperparameter(
            "gamma search needs at least 3 samples".into(),
        ));
    }
    let holdout = ((holdout_fraction * n as f64).ceil() as usize).clamp(1, n - 2);
    let (train, held) = x.split_at(n - holdout);

    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let target = 1.0 - nu;
    let mut above: Option<(f64, f64)> = None;
    let mut fallback: Option<(f64, f64)> = None;
    let dim = validate(train, nu, sorted[0])?;
    let train_sq = pairwise_distances(train);
    let held_sq = cross_distances(held, train);
    for &gamma in &sorted {
        validate(train, nu, gamma)?;
        let fit = solve(train, &train_sq, dim, nu, gamma, DEFAULT_TOLERANCE)?;
        let rho = fit.model.rho;
        let inliers = held_sq
            .par_chunks(train.len())
            .filter(|row| {
                let f: f64 = row
                    .iter()
                    .zip(&fit.alphas)
                    .filter(|(_, &a)| a > 0.0)
                    .map(|(d, a)| a * (-gamma * d).exp())
                    .sum();
                f - rho >= 0.0
            })
            .count();
        let rate = inliers as f64 / held.len() as f64;
        if rate >= target && above.is_none_or(|(_, r)| rate < r) {
            above = Some((gamma, rate));
        }
        if fallback.is_none_or(|(_, r)| rate > r) {
            fallback = Some((gamma, rate));
        }
    }
    Ok(above
        .or(fallback)
        .map(|(g, _)| g)
        .expect("grid is nonempty"))
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn power_of_two_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}
