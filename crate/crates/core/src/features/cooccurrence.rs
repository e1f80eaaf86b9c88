use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residual::CodePlane;

/// Step between consecutive samples of a co-occurrence chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Offset {
    pub dx: usize,
    pub dy: usize,
}

impl Offset {
    /// Chains running down a column.
    pub const DOWN: Offset = Offset { dx: 0, dy: 1 };
    /// Chains running along a row.
    pub const RIGHT: Offset = Offset { dx: 1, dy: 0 };

    pub fn new(dx: usize, dy: usize) -> Result<Self> {
        if dx == 0 && dy == 0 {
            return Err(Error::InvalidHyperparameter("zero offset".into()));
        }
        Ok(Self { dx, dy })
    }
}

/// Normalized joint frequencies of `order` consecutive codes, stored densely
/// with the first code most significant (lexicographic tuple order).
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    levels: usize,
    order: usize,
    probs: Vec<f64>,
}

impl CooccurrenceMatrix {
    pub fn from_probs(levels: usize, order: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != bin_count(levels, order) {
            return Err(Error::DimensionMismatch(format!(
                "{} bins for levels={levels}, order={order}",
                probs.len()
            )));
        }
        Ok(Self {
            levels,
            order,
            probs,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Frequency of the tuple `codes`.
    pub fn get(&self, codes: &[usize]) -> f64 {
        self.probs[tuple_index(codes, self.levels)]
    }

    /// Element-wise mean of matrices of identical shape.
    pub fn mean(matrices: &[CooccurrenceMatrix]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidHyperparameter("mean of zero matrices".into()))?;
        let mut probs = vec![0.0; first.probs.len()];
        for m in matrices {
            if (m.levels, m.order) != (first.levels, first.order) {
                return Err(Error::DimensionMismatch(
                    "co-occurrence matrices of different shapes".into(),
                ));
            }
            for (acc, &p) in probs.iter_mut().zip(&m.probs) {
                *acc += p;
            }
        }
        let n = matrices.len() as f64;
        probs.iter_mut().for_each(|p| *p /= n);
        Ok(Self {
            levels: first.levels,
            order: first.order,
            probs,
        })
    }
}

pub fn bin_count(levels: usize, order: usize) -> usize {
    levels.pow(order as u32)
}

/// Number of entries left after merging each tuple with its reversal.
pub fn merged_len(levels: usize, order: usize) -> usize {
    let palindromes = levels.pow(order.div_ceil(2) as u32);
    (bin_count(levels, order) + palindromes) / 2
}

fn tuple_index(codes: &[usize], levels: usize) -> usize {
    codes.iter().fold(0, |acc, &c| acc * levels + c)
}

/// Counts every chain of `order` codes spaced by `offset` that fits inside
/// the plane and normalizes by the number of chains.
pub fn cooccurrence(plane: &CodePlane, order: usize, offset: Offset) -> Result<CooccurrenceMatrix> {
    if order < 1 {
        return Err(Error::InvalidHyperparameter("co-occurrence order 0".into()));
    }
    let span_x = (order - 1) * offset.dx;
    let span_y = (order - 1) * offset.dy;
    let (w, h) = (plane.width(), plane.height());
    if span_x >= w || span_y >= h {
        return Err(Error::PlaneTooSmall {
            width: w,
            height: h,
            order,
            dx: offset.dx,
            dy: offset.dy,
        });
    }

    let levels = plane.levels();
    let codes = plane.codes();
    let stride = offset.dy * w + offset.dx;
    let mut counts = vec![0u64; bin_count(levels, order)];
    for y in 0..h - span_y {
        let base = y * w;
        for x in 0..w - span_x {
            let start = base + x;
            let mut idx = 0;
            for k in 0..order {
                idx = idx * levels + codes[start + k * stride] as usize;
            }
            counts[idx] += 1;
        }
    }

    let total = ((w - span_x) * (h - span_y)) as f64;
    Ok(CooccurrenceMatrix {
        levels,
        order,
        probs: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Folds each bin into its reversed-tuple partner.
///
/// Entries follow lexicographic order of the smaller tuple of each pair;
/// palindromic tuples pass through unchanged.
pub fn symmetric_merge(m: &CooccurrenceMatrix) -> Vec<f64> {
    let (levels, order) = (m.levels, m.order);
    let mut out = Vec::with_capacity(merged_len(levels, order));
    let mut tuple = vec![0usize; order];
    let mut reversed = vec![0usize; order];
    for idx in 0..m.probs.len() {
        let mut rest = idx;
        for slot in tuple.iter_mut().rev() {
            *slot = rest % levels;
            rest /= levels;
        }
        reversed.copy_from_slice(&tuple);
        reversed.reverse();
        if tuple < reversed {
            out.push(m.probs[idx] + m.probs[tuple_index(&reversed, levels)]);
        } else if tuple == reversed {
            out.push(m.probs[idx]);
        }
    }
    out
}
