//! Node-wise logistic estimation with min/max symmetrization, and the global
//! logistic estimator that fits one shared coefficient per pair.
//!
//! Every design column carries the factor 2 of the conditional
//! `P(X_r = +1 | rest) = logistic(2 Σ θ_lr x_l)`, so fitted coefficients are
//! directly the couplings of the joint model.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pair_count, pairs, Dataset, EdgeVector, IsingModel, ModelDocument};
use crate::solver::{solve, FitResult, FitSummary, LogisticProblem};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodId {
    /// Node-wise fits, keep the smaller of the two estimates per pair.
    #[serde(rename = "NLm", alias = "nlm", alias = "N-L-m")]
    NLm,
    /// Node-wise fits, keep the larger of the two estimates per pair.
    #[serde(rename = "NLM", alias = "nlM", alias = "N-L-M")]
    NLM,
    /// Global logistic fit.
    #[serde(rename = "GL", alias = "gl", alias = "G-L")]
    GL,
}

impl MethodId {
    pub const ALL: [MethodId; 3] = [MethodId::NLm, MethodId::NLM, MethodId::GL];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::NLm => "NLm",
            MethodId::NLM => "NLM",
            MethodId::GL => "GL",
        }
    }

    pub fn is_nodewise(self) -> bool {
        !matches!(self, MethodId::GL)
    }

    /// Penalty weight used when none is given.
    pub fn default_lambda(self, p: usize, n: usize) -> f64 {
        if self.is_nodewise() {
            nodewise_lambda(p, n)
        } else {
            global_lambda(p, n)
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    /// Case matters: `nlm` is the minimum rule and `nlM` the maximum rule.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nlm" | "NLm" | "N-L-m" => Ok(MethodId::NLm),
            "nlM" | "NLM" | "N-L-M" => Ok(MethodId::NLM),
            "gl" | "GL" | "G-L" => Ok(MethodId::GL),
            other => Err(Error::Config(format!(
                "unknown method {other:?}, expected one of nlm, nlM, gl"
            ))),
        }
    }
}

/// `sqrt(log(p - 1) / n)`.
pub fn nodewise_lambda(p: usize, n: usize) -> f64 {
    ((p as f64 - 1.0).ln() / n as f64).sqrt()
}

/// `sqrt(log(p(p - 1) / 2) / (p n))`.
pub fn global_lambda(p: usize, n: usize) -> f64 {
    ((pair_count(p) as f64).ln() / (p as f64 * n as f64)).sqrt()
}

/// Raw node-wise estimate: column `r` of `theta_hat` holds the coefficients
/// from regressing node `r` on the others. Generally not symmetric.
#[derive(Debug, Clone)]
pub struct NodewiseRaw {
    p: usize,
    theta_hat: Vec<f64>,
    pub fits: Vec<FitSummary>,
}

impl NodewiseRaw {
    /// Wraps a row-major `p x p` matrix; the diagonal must be zero.
    pub fn from_dense(p: usize, theta_hat: Vec<f64>) -> Result<Self> {
        if theta_hat.len() != p * p {
            return Err(Error::Dimension(format!("expected {} entries, got {}", p * p, theta_hat.len())));
        }
        if (0..p).any(|i| theta_hat[i * p + i] != 0.0) {
            return Err(Error::InvalidModel("raw estimate has a nonzero diagonal".into()));
        }
        Ok(NodewiseRaw {
            p,
            theta_hat,
            fits: Vec::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Entry `(i, j)`: coefficient of node `i` in the fit for node `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta_hat[i * self.p + j]
    }

    pub fn as_dense(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

/// Logistic problem for node `r`: response column `r`, covariates
/// `2 x_l` for `l != r` in node order.
pub fn node_problem(data: &Dataset, r: usize, lambda: f64) -> Result<LogisticProblem> {
    let (n, p) = (data.n(), data.p());
    if r >= p {
        return Err(Error::NodeOutOfRange { index: r, p });
    }
    let mut col_ptr = Vec::with_capacity(p);
    let mut row_idx = Vec::with_capacity(n * (p - 1));
    let mut values = Vec::with_capacity(n * (p - 1));
    col_ptr.push(0);
    for l in (0..p).filter(|&l| l != r) {
        for i in 0..n {
            row_idx.push(i);
            values.push(2.0 * f64::from(data.get(i, l)));
        }
        col_ptr.push(values.len());
    }
    let design = CscMatrix::from_parts(n, p - 1, col_ptr, row_idx, values)?;
    let response = data.column(r).into_iter().map(f64::from).collect();
    LogisticProblem::new(design, response, lambda)
}

/// One ℓ1-penalized logistic regression per node; `lambdas[r]` weights the
/// penalty of node `r`.
pub fn fit_nodewise(data: &Dataset, lambdas: &[f64]) -> Result<NodewiseRaw> {
    let p = data.p();
    if data.n() == 0 {
        return Err(Error::Empty("dataset has no rows".into()));
    }
    if lambdas.len() != p {
        return Err(Error::Dimension(format!("{} lambdas for {p} nodes", lambdas.len())));
    }
    let fits: Vec<FitResult> = (0..p)
        .into_par_iter()
        .map(|r| solve(&node_problem(data, r, lambdas[r])?, None))
        .collect::<Result<_>>()?;

    let mut theta_hat = vec![0.0; p * p];
    for (r, fit) in fits.iter().enumerate() {
        for (k, l) in (0..p).filter(|&l| l != r).enumerate() {
            theta_hat[l * p + r] = fit.beta[k];
        }
    }
    Ok(NodewiseRaw {
        p,
        theta_hat,
        fits: fits.iter().map(FitSummary::from).collect(),
    })
}

fn symmetrize(raw: &NodewiseRaw, keep_upper: impl Fn(f64, f64) -> bool) -> IsingModel {
    let mut m = IsingModel::zeros(raw.p).expect("raw estimate has p >= 2");
    for (i, j) in pairs(raw.p) {
        let (upper, lower) = (raw.get(i, j), raw.get(j, i));
        let v = if keep_upper(upper.abs(), lower.abs()) { upper } else { lower };
        m.set_coupling(i, j, v).expect("finite coupling");
    }
    m
}

/// Per pair, keeps whichever of `θ̂_ij`, `θ̂_ji` has the smaller magnitude
/// (ties keep `θ̂_ij`, `i < j`).
pub fn symmetrize_min(raw: &NodewiseRaw) -> IsingModel {
    symmetrize(raw, |upper, lower| upper <= lower)
}

/// Per pair, keeps whichever of `θ̂_ij`, `θ̂_ji` has the larger magnitude
/// (ties keep `θ̂_ij`, `i < j`).
pub fn symmetrize_max(raw: &NodewiseRaw) -> IsingModel {
    symmetrize(raw, |upper, lower| upper >= lower)
}

/// Stacked design of the global problem.
///
/// Block `r` (rows `r n .. (r + 1) n`) regresses node `r` on the rest. In the
/// column of pair `(i, j)` it holds `2 x_j` when `r == i`, `2 x_i` when
/// `r == j`, and zero otherwise. The response stacks the data columns in node
/// order.
pub fn build_global_design(data: &Dataset) -> Result<(CscMatrix, Vec<f64>)> {
    let (n, p) = (data.n(), data.p());
    if n == 0 {
        return Err(Error::Empty("dataset has no rows".into()));
    }
    let q = pair_count(p);
    let columns: Vec<Vec<f64>> = (0..p).map(|r| data.column(r).into_iter().map(f64::from).collect()).collect();

    let mut col_ptr = Vec::with_capacity(q + 1);
    let mut row_idx = Vec::with_capacity(2 * n * q);
    let mut values = Vec::with_capacity(2 * n * q);
    col_ptr.push(0);
    for (i, j) in pairs(p) {
        for (obs, &v) in columns[j].iter().enumerate() {
            row_idx.push(i * n + obs);
            values.push(2.0 * v);
        }
        for (obs, &v) in columns[i].iter().enumerate() {
            row_idx.push(j * n + obs);
            values.push(2.0 * v);
        }
        col_ptr.push(values.len());
    }
    let design = CscMatrix::from_parts(n * p, q, col_ptr, row_idx, values)?;
    let response = columns.concat();
    Ok((design, response))
}

pub fn global_problem(data: &Dataset, lambda: f64) -> Result<LogisticProblem> {
    let (design, response) = build_global_design(data)?;
    LogisticProblem::new(design, response, lambda)
}

/// Global logistic fit: returns the symmetric estimate and the solver result
/// (whose `beta` is the canonical edge vector).
pub fn fit_global(data: &Dataset, lambda: f64) -> Result<(IsingModel, FitResult)> {
    let fit = solve(&global_problem(data, lambda)?, None)?;
    let model = EdgeVector::new(data.p(), fit.beta.clone())?.unpack()?;
    Ok((model, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    /// Penalty weight per solved problem (one per node for node-wise methods).
    pub lambda: Vec<f64>,
    /// Iterations summed over all solved problems.
    pub iterations: usize,
    pub converged: bool,
    pub max_kkt_residual: f64,
    pub fits: Vec<FitSummary>,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub method: MethodId,
    pub model: IsingModel,
    pub diagnostics: EstimateDiagnostics,
}

fn diagnostics(lambda: Vec<f64>, fits: Vec<FitSummary>) -> EstimateDiagnostics {
    EstimateDiagnostics {
        lambda,
        iterations: fits.iter().map(|f| f.iterations).sum(),
        converged: fits.iter().all(|f| f.converged),
        max_kkt_residual: fits.iter().map(|f| f.kkt_residual).fold(0.0, f64::max),
        fits,
    }
}

/// Fits `method` with the default penalty for the data size, or `lambda`
/// when given.
pub fn estimate(data: &Dataset, method: MethodId, lambda: Option<f64>) -> Result<Estimate> {
    let (n, p) = (data.n(), data.p());
    let lambda = lambda.unwrap_or_else(|| method.default_lambda(p, n));
    match method {
        MethodId::NLm | MethodId::NLM => {
            let lambdas = vec![lambda; p];
            let raw = fit_nodewise(data, &lambdas)?;
            let model = if method == MethodId::NLm {
                symmetrize_min(&raw)
            } else {
                symmetrize_max(&raw)
            };
            Ok(Estimate {
                method,
                model,
                diagnostics: diagnostics(lambdas, raw.fits),
            })
        }
        MethodId::GL => {
            let (model, fit) = fit_global(data, lambda)?;
            Ok(Estimate {
                method,
                model,
                diagnostics: diagnostics(vec![lambda], vec![FitSummary::from(&fit)]),
            })
        }
    }
}

/// Model schema plus a method tag and solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateDocument {
    #[serde(flatten)]
    pub model: ModelDocument,
    pub method: MethodId,
    pub diagnostics: EstimateDiagnostics,
}

impl Estimate {
    pub fn to_json(&self) -> String {
        let doc = EstimateDocument {
            model: ModelDocument::from(&self.model),
            method: self.method,
            diagnostics: self.diagnostics.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("estimate serializes")
    }

    /// Zeroes every coupling with magnitude at or below `eps`.
    pub fn threshold(&mut self, eps: f64) {
        for (i, j) in pairs(self.model.p()) {
            if self.model.coupling(i, j).abs() <= eps {
                self.model.set_coupling(i, j, 0.0).expect("zero is finite");
            }
        }
    }
}
