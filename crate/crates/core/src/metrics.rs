//! Edge-recovery accuracy and squared coupling error.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pair_count, pairs, IsingModel};

/// Default numerical zero for deciding whether an estimated pair is an edge.
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-8;

/// Canonical pairs `(i, j)`, `i < j`, with `|θ_ij| > eps`.
pub fn support_threshold(model: &IsingModel, eps: f64) -> BTreeSet<(usize, usize)> {
    pairs(model.p())
        .filter(|&(i, j)| model.coupling(i, j).abs() > eps)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

fn same_size(truth: &IsingModel, estimate: &IsingModel) -> Result<()> {
    if truth.p() != estimate.p() {
        return Err(Error::Dimension(format!(
            "truth has p = {}, estimate has p = {}",
            truth.p(),
            estimate.p()
        )));
    }
    Ok(())
}

pub fn accuracy(truth: &IsingModel, estimate: &IsingModel, eps: f64) -> Result<(ConfusionCounts, f64)> {
    same_size(truth, estimate)?;
    let true_edges = support_threshold(truth, eps);
    let found = support_threshold(estimate, eps);
    let mut c = ConfusionCounts::default();
    for pair in pairs(truth.p()) {
        match (true_edges.contains(&pair), found.contains(&pair)) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    debug_assert_eq!(c.total(), pair_count(truth.p()));
    Ok((c, c.accuracy()))
}

/// `Σ_{i<j} (θ_ij - θ̂_ij)²`.
pub fn err(truth: &IsingModel, estimate: &IsingModel) -> Result<f64> {
    same_size(truth, estimate)?;
    Ok(pairs(truth.p())
        .map(|(i, j)| {
            let d = truth.coupling(i, j) - estimate.coupling(i, j);
            d * d
        })
        .sum())
}

/// Output of the `evaluate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub err: f64,
    pub eps: f64,
}

pub fn evaluate(truth: &IsingModel, estimate: &IsingModel, eps: f64) -> Result<Evaluation> {
    let (counts, accuracy) = accuracy(truth, estimate, eps)?;
    Ok(Evaluation {
        counts,
        accuracy,
        err: err(truth, estimate)?,
        eps,
    })
}
