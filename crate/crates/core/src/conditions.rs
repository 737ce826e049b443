//! Exact Fisher information of the node-wise and stacked log-conditionals,
//! and the dependency / incoherence / minimum-signal conditions evaluated on
//! it. Expectations are taken by enumerating all `2^p` states, so this is for
//! small models only.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_distribution, logistic, pair_count, pair_index, pairs, state_of, IsingModel};

/// Largest `p` accepted by [`fisher_blocks`].
pub const MAX_CONDITION_NODES: usize = 12;

/// Eigenvalues at or below this are treated as zero when inverting `Q₁`.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Logistic problem of one node (0-based index).
    Node(usize),
    /// Stacked problem over all nodes with one parameter per pair.
    Global,
}

/// Expected negative Hessian of the log-conditional at the true couplings,
/// as a dense row-major matrix.
///
/// Node scope: indexed by the other nodes in increasing order. Global scope:
/// indexed by canonical pairs, averaged over the `p` stacked conditionals.
pub fn fisher_matrix(model: &IsingModel, scope: Scope) -> Result<(usize, Vec<f64>)> {
    let p = model.p();
    if p > MAX_CONDITION_NODES {
        return Err(Error::Capacity {
            p,
            max: MAX_CONDITION_NODES,
        });
    }
    if let Scope::Node(r) = scope {
        if r >= p {
            return Err(Error::NodeOutOfRange { index: r, p });
        }
    }
    let dist = enumerate_distribution(model)?;
    let dim = match scope {
        Scope::Node(_) => p - 1,
        Scope::Global => pair_count(p),
    };
    let mut q = vec![0.0; dim * dim];
    let mut a = vec![0.0; dim];

    let mut accumulate = |r: usize, x: &[i8], weight: f64, q: &mut [f64]| {
        let s = logistic(2.0 * model.local_field(r, x));
        let w = weight * s * (1.0 - s);
        a.fill(0.0);
        for l in (0..p).filter(|&l| l != r) {
            let k = match scope {
                Scope::Node(_) => l - usize::from(l > r),
                Scope::Global => pair_index(p, r.min(l), r.max(l)),
            };
            a[k] = 2.0 * f64::from(x[l]);
        }
        for i in 0..dim {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                q[i * dim + j] += w * a[i] * a[j];
            }
        }
    };

    for (k, &prob) in dist.probs().iter().enumerate() {
        let x = state_of(p, k);
        match scope {
            Scope::Node(r) => accumulate(r, &x, prob, &mut q),
            Scope::Global => {
                for r in 0..p {
                    accumulate(r, &x, prob / p as f64, &mut q);
                }
            }
        }
    }
    Ok((dim, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `λ_min(Q₁) > 0`.
    pub dependency: bool,
    /// `‖Q₂ Q₁⁻¹‖_∞ < 1`; false when undefined.
    pub incoherence: bool,
    /// `θ_min >= (10 / C_min) sqrt(d) λ`; absent without a λ.
    pub min_signal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `"node"` or `"global"`.
    pub scope: String,
    /// 1-based node for node scope.
    pub node: Option<usize>,
    /// Labels of the matrix coordinates, 1-based (`"3"` or `"1-3"`).
    pub coordinates: Vec<String>,
    /// Indices into `coordinates` of the active set.
    pub active: Vec<usize>,
    pub fisher: Vec<Vec<f64>>,
    /// `λ_min(Q₁)`; with an empty active set, the smallest eigenvalue of the
    /// whole matrix.
    pub c_min: f64,
    /// `‖Q₂ Q₁⁻¹‖_∞` (max absolute row sum); `None` when `Q₁` is singular.
    pub incoherence: Option<f64>,
    /// Smallest active `|θ|`; `None` when nothing is active.
    pub theta_min: Option<f64>,
    pub degree: usize,
    pub lambda: Option<f64>,
    /// Largest λ satisfying the minimum-signal condition.
    pub lambda_max_signal: Option<f64>,
    pub satisfied: ConditionFlags,
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub fn fisher_blocks(model: &IsingModel, scope: Scope, lambda: Option<f64>) -> Result<ConditionReport> {
    if let Some(l) = lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and nonnegative, got {l}")));
        }
    }
    let p = model.p();
    let (dim, q) = fisher_matrix(model, scope)?;

    let (coordinates, couplings): (Vec<String>, Vec<f64>) = match scope {
        Scope::Node(r) => (0..p)
            .filter(|&l| l != r)
            .map(|l| ((l + 1).to_string(), model.coupling(l, r)))
            .unzip(),
        Scope::Global => pairs(p)
            .map(|(i, j)| (format!("{}-{}", i + 1, j + 1), model.coupling(i, j)))
            .unzip(),
    };
    let active: Vec<usize> = (0..dim).filter(|&k| couplings[k] != 0.0).collect();
    let inactive: Vec<usize> = (0..dim).filter(|&k| couplings[k] == 0.0).collect();
    let d = active.len();

    let full = DMatrix::from_row_slice(dim, dim, &q);
    let q1 = full.select_rows(&active).select_columns(&active);
    let q2 = full.select_rows(&inactive).select_columns(&active);

    let c_min = if d == 0 { min_eigenvalue(&full) } else { min_eigenvalue(&q1) };
    let incoherence = if d == 0 {
        Some(0.0)
    } else if c_min > SINGULAR_TOL {
        q1.clone().cholesky().map(|chol| {
            let prod = &q2 * chol.inverse();
            prod.row_iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
    } else {
        None
    };
    let theta_min = active.iter().map(|&k| couplings[k].abs()).reduce(f64::min);

    let lambda_max_signal = theta_min
        .filter(|_| c_min > 0.0)
        .map(|t| t * c_min / (10.0 * (d as f64).sqrt()));
    let min_signal = lambda.map(|l| match theta_min {
        None => true,
        Some(t) => c_min > 0.0 && t >= 10.0 / c_min * (d as f64).sqrt() * l,
    });

    let (scope_name, node) = match scope {
        Scope::Node(r) => ("node", Some(r + 1)),
        Scope::Global => ("global", None),
    };
    Ok(ConditionReport {
        scope: scope_name.to_string(),
        node,
        coordinates,
        active,
        fisher: q.chunks(dim.max(1)).map(<[f64]>::to_vec).collect(),
        c_min,
        incoherence,
        theta_min,
        degree: d,
        lambda,
        lambda_max_signal,
        satisfied: ConditionFlags {
            dependency: c_min > 0.0,
            incoherence: incoherence.is_some_and(|v| v < 1.0),
            min_signal,
        },
    })
}

impl ConditionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
