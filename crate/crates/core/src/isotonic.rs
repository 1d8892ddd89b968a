//! Weighted isotonic regression by pool-adjacent-violators.
//!
//! Points sharing a rank are pooled into a single point before PAV runs, so
//! tied predictions always receive the same fitted value. The fit is a
//! right-continuous step function of the rank: between two blocks it keeps
//! the value of the lower block, and it is constant beyond either end.

use serde::{Deserialize, Serialize};

use crate::edf::TestSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    left_edges: Vec<f64>,
    right_edges: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl IsotonicFit {
    /// Right edges (largest rank) of the blocks; strictly increasing.
    pub fn breakpoints(&self) -> &[f64] {
        &self.right_edges
    }

    /// Left edges (smallest rank) of the blocks.
    pub fn left_edges(&self) -> &[f64] {
        &self.left_edges
    }

    pub fn block_values(&self) -> &[f64] {
        &self.values
    }

    pub fn block_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_blocks(&self) -> usize {
        self.values.len()
    }

    /// Index of the block whose step covers rank `m`.
    pub fn block_index(&self, m: f64) -> usize {
        self.left_edges.partition_point(|&l| l <= m).saturating_sub(1)
    }

    /// Fitted value at rank `m`.
    pub fn predict(&self, m: f64) -> f64 {
        self.values[self.block_index(m)]
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    sum_w: f64,
    sum_wy: f64,
    left: f64,
    right: f64,
}

impl Block {
    #[inline]
    fn mean(&self) -> f64 {
        self.sum_wy / self.sum_w
    }
}

/// Incremental PAV over points fed in non-decreasing rank order.
#[derive(Debug, Default, Clone)]
pub(crate) struct PavBuilder {
    stack: Vec<Block>,
    pending: Option<Block>,
}

impl PavBuilder {
    pub(crate) fn with_capacity(cap: usize) -> Self {
        PavBuilder {
            stack: Vec::with_capacity(cap),
            pending: None,
        }
    }

    pub(crate) fn clear(&mut self) {
        self.stack.clear();
        self.pending = None;
    }

    #[inline]
    pub(crate) fn push(&mut self, rank: f64, y: f64, w: f64) {
        match &mut self.pending {
            Some(p) if p.right == rank => {
                p.sum_w += w;
                p.sum_wy += w * y;
            }
            _ => {
                debug_assert!(self.pending.is_none_or(|p| p.right < rank), "ranks must be sorted");
                self.flush();
                self.pending = Some(Block {
                    sum_w: w,
                    sum_wy: w * y,
                    left: rank,
                    right: rank,
                });
            }
        }
    }

    #[inline]
    fn flush(&mut self) {
        let Some(mut cur) = self.pending.take() else {
            return;
        };
        while let Some(prev) = self.stack.last() {
            if prev.mean() > cur.mean() {
                cur = Block {
                    sum_w: prev.sum_w + cur.sum_w,
                    sum_wy: prev.sum_wy + cur.sum_wy,
                    left: prev.left,
                    right: cur.right,
                };
                self.stack.pop();
            } else {
                break;
            }
        }
        self.stack.push(cur);
    }

    /// Flushes the last pending point; call before reading blocks.
    pub(crate) fn finish(&mut self) {
        self.flush();
    }

    pub(crate) fn n_blocks(&self) -> usize {
        self.stack.len()
    }

    #[inline]
    pub(crate) fn block_left(&self, k: usize) -> f64 {
        self.stack[k].left
    }

    #[inline]
    pub(crate) fn block_value(&self, k: usize) -> f64 {
        self.stack[k].mean()
    }

    pub(crate) fn to_fit(&mut self) -> IsotonicFit {
        self.finish();
        IsotonicFit {
            left_edges: self.stack.iter().map(|b| b.left).collect(),
            right_edges: self.stack.iter().map(|b| b.right).collect(),
            values: self.stack.iter().map(Block::mean).collect(),
            weights: self.stack.iter().map(|b| b.sum_w).collect(),
        }
    }
}

fn validate(y: &[f64], v: &[f64], ranks: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    for len in [v.len(), ranks.len()] {
        if len != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                found: len,
            });
        }
    }
    for (index, &w) in v.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::NonpositiveWeight { index, value: w });
        }
    }
    if y.iter().chain(ranks).any(|x| !x.is_finite()) {
        return Err(Error::InvalidSample("non-finite response or rank".into()));
    }
    Ok(())
}

/// Indices of `ranks` in ascending order.
pub(crate) fn rank_order(ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_unstable_by(|&a, &b| ranks[a].total_cmp(&ranks[b]));
    order
}

/// Least-squares fit of `y` (weights `v`) that is non-decreasing in `ranks`.
pub fn pav_fit(y: &[f64], v: &[f64], ranks: &[f64]) -> Result<IsotonicFit> {
    validate(y, v, ranks)?;
    let order = rank_order(ranks);
    let mut pav = PavBuilder::with_capacity(y.len());
    for &i in &order {
        pav.push(ranks[i], y[i], v[i]);
    }
    Ok(pav.to_fit())
}

/// Isotonic recalibration of the predicted means: the PAV fit of the
/// responses ranked by `mu_hat`, evaluated at each `mu_hat`.
pub fn recalibrate(sample: &TestSample) -> Result<Vec<f64>> {
    let fit = pav_fit(sample.y(), sample.weights(), sample.mu_hat())?;
    Ok(sample.mu_hat().iter().map(|&m| fit.predict(m)).collect())
}
