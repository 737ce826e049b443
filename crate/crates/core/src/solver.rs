//! Intercept-free ℓ1-penalized logistic regression with `±1` responses:
//!
//! ```text
//! minimize  (1/m) Σ_i log(1 + exp(-y_i a_i'β)) + λ ‖β‖₁
//! ```
//!
//! solved by monotone accelerated proximal gradient (FISTA with a
//! backtracking step and function-value restart).

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone)]
pub struct LogisticProblem {
    design: CscMatrix,
    response: Vec<f64>,
    lambda: f64,
}

impl LogisticProblem {
    pub fn new(design: CscMatrix, response: Vec<f64>, lambda: f64) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "design is {}x{}, need at least 1x1",
                design.nrows(),
                design.ncols()
            )));
        }
        if response.len() != design.nrows() {
            return Err(Error::Dimension(format!(
                "response has {} entries, design has {} rows",
                response.len(),
                design.nrows()
            )));
        }
        if response.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidData("responses must be -1 or +1".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        Ok(LogisticProblem {
            design,
            response,
            lambda,
        })
    }

    pub fn design(&self) -> &CscMatrix {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_rows(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.design.ncols()
    }

    /// Same data with a different penalty weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        LogisticProblem::new(self.design.clone(), self.response.clone(), lambda)
    }

    /// Smooth loss plus `λ‖β‖₁`.
    pub fn objective(&self, beta: &[f64]) -> Result<f64> {
        let (loss, _) = loss_and_gradient(self, beta)?;
        Ok(loss + self.lambda * l1_norm(beta))
    }
}

/// `log(1 + exp(-t))` without overflow.
fn softplus_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(t))`.
fn sigmoid_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Scratch buffers reused across solver iterations.
struct Workspace {
    margins: Vec<f64>,
    weights: Vec<f64>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        Workspace {
            margins: vec![0.0; m],
            weights: vec![0.0; m],
        }
    }

    /// Loss at `beta`; leaves `margins = A beta`.
    fn loss(&mut self, problem: &LogisticProblem, beta: &[f64]) -> f64 {
        problem.design.mul_vec(beta, &mut self.margins);
        let total: f64 = self
            .margins
            .iter()
            .zip(&problem.response)
            .map(|(&z, &y)| softplus_neg(y * z))
            .sum();
        total / problem.n_rows() as f64
    }

    /// Gradient from the margins of the last `loss` call.
    fn gradient(&mut self, problem: &LogisticProblem, grad: &mut [f64]) {
        let inv_m = 1.0 / problem.n_rows() as f64;
        for ((w, &z), &y) in self.weights.iter_mut().zip(&self.margins).zip(&problem.response) {
            *w = -y * sigmoid_neg(y * z) * inv_m;
        }
        problem.design.tr_mul_vec(&self.weights, grad);
    }
}

/// Smooth loss `(1/m) Σ log(1 + exp(-y_i a_i'β))` and its gradient.
pub fn loss_and_gradient(problem: &LogisticProblem, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if beta.len() != problem.n_params() {
        return Err(Error::Dimension(format!(
            "beta has {} entries, problem has {} parameters",
            beta.len(),
            problem.n_params()
        )));
    }
    let mut ws = Workspace::new(problem.n_rows());
    let loss = ws.loss(problem, beta);
    let mut grad = vec![0.0; beta.len()];
    ws.gradient(problem, &mut grad);
    Ok((loss, grad))
}

/// Largest violation of the ℓ1 stationarity conditions: `|g_j + λ sign(β_j)|`
/// on the support, `max(|g_j| - λ, 0)` off it.
pub fn kkt_residual(gradient: &[f64], beta: &[f64], lambda: f64) -> f64 {
    gradient
        .iter()
        .zip(beta)
        .map(|(&g, &b)| {
            if b != 0.0 {
                (g + lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    /// Stop after this many consecutive iterations without any decrease of
    /// the objective.
    pub stall_iterations: usize,
    /// Keep the objective value after every iteration in
    /// [`FitResult::history`].
    pub track_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 50_000,
            kkt_tolerance: 1e-6,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            stall_iterations: 200,
            track_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    /// `kkt_residual <= kkt_tolerance` at exit.
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Solver diagnostics without the coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            iterations: f.iterations,
            objective: f.objective,
            kkt_residual: f.kkt_residual,
            converged: f.converged,
        }
    }
}

pub fn solve(problem: &LogisticProblem, init: Option<&[f64]>) -> Result<FitResult> {
    solve_with(problem, init, &SolverOptions::default())
}

pub fn solve_with(
    problem: &LogisticProblem,
    init: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<FitResult> {
    let q = problem.n_params();
    let lambda = problem.lambda;
    let mut x = match init {
        Some(b) if b.len() != q => {
            return Err(Error::Dimension(format!(
                "initial point has {} entries, problem has {q} parameters",
                b.len()
            )))
        }
        Some(b) => b.to_vec(),
        None => vec![0.0; q],
    };

    let mut ws = Workspace::new(problem.n_rows());
    let mut grad_x = vec![0.0; q];
    let mut loss_x = ws.loss(problem, &x);
    ws.gradient(problem, &mut grad_x);
    let mut obj_x = loss_x + lambda * l1_norm(&x);
    let mut kkt = kkt_residual(&grad_x, &x, lambda);

    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut loss_y = loss_x;
    let mut grad_y = grad_x.clone();
    let mut from_x = true;
    let mut z = vec![0.0; q];
    let mut momentum = 1.0f64;
    let mut step = opts.initial_step;
    let mut history = Vec::new();
    let mut stalled = 0;
    let mut iterations = 0;

    while kkt > opts.kkt_tolerance && iterations < opts.max_iterations && stalled < opts.stall_iterations {
        iterations += 1;

        let loss_z = loop {
            for j in 0..q {
                z[j] = soft_threshold(y[j] - step * grad_y[j], step * lambda);
            }
            let loss_z = ws.loss(problem, &z);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..q {
                let d = z[j] - y[j];
                lin += grad_y[j] * d;
                sq += d * d;
            }
            let bound = loss_y + lin + sq / (2.0 * step);
            if loss_z <= bound + 1e-12 * loss_y.abs().max(1.0) || step < 1e-20 {
                break loss_z;
            }
            step *= opts.backtrack_factor;
        };
        let obj_z = loss_z + lambda * l1_norm(&z);

        if obj_z < obj_x {
            stalled = 0;
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            momentum = next_momentum;
            std::mem::swap(&mut x_prev, &mut x);
            x.copy_from_slice(&z);
            loss_x = loss_z;
            ws.gradient(problem, &mut grad_x);
            obj_x = obj_z;
            kkt = kkt_residual(&grad_x, &x, lambda);
            // y = x + ((t - 1) / t_next) (x - x_prev)
            for j in 0..q {
                y[j] = x[j] + beta * (x[j] - x_prev[j]);
            }
            from_x = beta == 0.0;
        } else if from_x {
            // A plain proximal step from the iterate made no progress:
            // numerical floor reached.
            stalled = opts.stall_iterations;
        } else {
            // Momentum overshot; restart from the current iterate.
            stalled += 1;
            momentum = 1.0;
            y.copy_from_slice(&x);
            from_x = true;
        }

        if from_x {
            loss_y = loss_x;
            grad_y.copy_from_slice(&grad_x);
        } else {
            loss_y = ws.loss(problem, &y);
            ws.gradient(problem, &mut grad_y);
        }
        if opts.track_objective {
            history.push(obj_x);
        }
    }

    Ok(FitResult {
        beta: x,
        iterations,
        objective: obj_x,
        kkt_residual: kkt,
        converged: kkt <= opts.kkt_tolerance,
        history,
    })
}
