use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::label::Label;

/// Fisher linear discriminant restricted to a subset of feature columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FldLearner {
    pub(crate) subspace: Vec<usize>,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: f64,
}

impl FldLearner {
    pub(crate) fn from_parts(subspace: Vec<usize>, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if subspace.is_empty() || subspace.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} subspace indices, {} weights",
                subspace.len(),
                weights.len()
            )));
        }
        if subspace.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidHyperparameter(
                "subspace indices must be strictly increasing".into(),
            ));
        }
        if !weights.iter().chain([&bias]).all(|v| v.is_finite()) {
            return Err(Error::InvalidHyperparameter(
                "non-finite FLD weights".into(),
            ));
        }
        Ok(Self {
            subspace,
            weights,
            bias,
        })
    }

    pub fn subspace(&self) -> &[usize] {
        &self.subspace
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Signed projection; positive means generated.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.subspace
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| w * x[i])
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.score(x) > 0.0 {
            Label::Dng
        } else {
            Label::Real
        }
    }
}

/// Trains one discriminant on the `subspace` columns of `x`.
///
/// `w = (S_w + eps I)^-1 (mu_dng - mu_real)` with `eps = 1e-6 tr(S_w) / k`;
/// the threshold sits halfway between the projected class means.
pub fn train_fld(x: &[Vec<f64>], y: &[Label], subspace: &[usize]) -> Result<FldLearner> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} labels",
            x.len(),
            y.len()
        )));
    }
    if subspace.is_empty() {
        return Err(Error::InvalidHyperparameter("empty subspace".into()));
    }
    if let Some(&bad) = subspace
        .iter()
        .find(|&&i| x.iter().any(|row| i >= row.len()))
    {
        return Err(Error::DimensionMismatch(format!(
            "subspace index {bad} exceeds the feature dimension"
        )));
    }
    let k = subspace.len();

    let mut class_rows: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in y.iter().enumerate() {
        class_rows[label as usize].push(i);
    }
    if class_rows.iter().any(|rows| rows.is_empty()) {
        return Err(Error::SingleClassInput);
    }

    let mut means = [DVector::zeros(k), DVector::zeros(k)];
    let mut scatter = DMatrix::<f64>::zeros(k, k);
    for (mean, rows) in means.iter_mut().zip(&class_rows) {
        let block = DMatrix::from_fn(rows.len(), k, |r, c| x[rows[r]][subspace[c]]);
        *mean = block.row_mean().transpose();
        let centered = DMatrix::from_fn(rows.len(), k, |r, c| block[(r, c)] - mean[c]);
        scatter.gemm_tr(1.0, &centered, &centered, 1.0);
    }

    let mut ridge = (1e-6 * scatter.trace() / k as f64).max(f64::EPSILON);
    let diff = &means[1] - &means[0];
    let weights = loop {
        let mut regularized = scatter.clone();
        for i in 0..k {
            regularized[(i, i)] += ridge;
        }
        if let Some(chol) = regularized.cholesky() {
            break chol.solve(&diff);
        }
        ridge *= 10.0;
    };
    let midpoint = (&means[0] + &means[1]) * 0.5;
    let bias = -weights.dot(&midpoint);

    FldLearner::from_parts(subspace.to_vec(), weights.iter().copied().collect(), bias)
}
