//! Oracles shared by the integration tests. Nothing here calls into the
//! solver; losses and gradients are recomputed from dense row-major data.

#![allow(dead_code)]

use isinglearn::sparse::CscMatrix;
use isinglearn::LogisticProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct DenseProblem {
    pub m: usize,
    pub q: usize,
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl DenseProblem {
    pub fn to_problem(&self) -> LogisticProblem {
        let design = CscMatrix::from_dense(self.m, self.q, &self.a).unwrap();
        LogisticProblem::new(design, self.y.clone(), self.lambda).unwrap()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.q..(i + 1) * self.q]
    }

    pub fn loss(&self, beta: &[f64]) -> f64 {
        (0..self.m)
            .map(|i| {
                let t: f64 = self.y[i] * self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
                // log(1 + e^{-t})
                if t > 0.0 {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            })
            .sum::<f64>()
            / self.m as f64
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        self.loss(beta) + self.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.q];
        for i in 0..self.m {
            let t: f64 = self.y[i] * self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            let s = 1.0 / (1.0 + t.exp());
            for (gj, aij) in g.iter_mut().zip(self.row(i)) {
                *gj -= self.y[i] * s * aij / self.m as f64;
            }
        }
        g
    }

    pub fn hessian(&self, beta: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut h = vec![0.0; q * q];
        for i in 0..self.m {
            let t: f64 = self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            let s = 1.0 / (1.0 + (-t).exp());
            let w = s * (1.0 - s) / self.m as f64;
            let r = self.row(i);
            for j in 0..q {
                for k in 0..q {
                    h[j * q + k] += w * r[j] * r[k];
                }
            }
        }
        h
    }

    /// Max violation of the ℓ1 optimality conditions, computed from scratch.
    pub fn kkt_violation(&self, beta: &[f64]) -> f64 {
        let g = self.gradient(beta);
        g.iter()
            .zip(beta)
            .map(|(&gj, &bj)| {
                if bj > 0.0 {
                    (gj + self.lambda).abs()
                } else if bj < 0.0 {
                    (gj - self.lambda).abs()
                } else {
                    (gj.abs() - self.lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Random design with a mix of Gaussian, `±2` and zero entries; responses
/// drawn from a logistic model so the data is not separable.
pub fn random_problem(seed: u64, m: usize, q: usize, lambda: f64) -> DenseProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0) / (q as f64).sqrt()).collect();
    let mut a = Vec::with_capacity(m * q);
    for _ in 0..m * q {
        let u: f64 = rng.gen();
        a.push(if u < 0.2 {
            0.0
        } else if u < 0.6 {
            if rng.gen_bool(0.5) { 2.0 } else { -2.0 }
        } else {
            // Box–Muller
            let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        });
    }
    let y = (0..m)
        .map(|i| {
            let t: f64 = a[i * q..(i + 1) * q].iter().zip(&truth).map(|(x, b)| x * b).sum();
            let prob = 1.0 / (1.0 + (-t).exp());
            if rng.gen::<f64>() < prob { 1.0 } else { -1.0 }
        })
        .collect();
    DenseProblem { m, q, a, y, lambda }
}

/// `‖∇loss(0)‖_∞`, the smallest λ with an all-zero solution.
pub fn lambda_max(p: &DenseProblem) -> f64 {
    p.gradient(&vec![0.0; p.q]).iter().fold(0.0, |a, g| a.max(g.abs()))
}

/// Central finite differences of the smooth loss.
pub fn finite_difference_gradient(p: &DenseProblem, beta: &[f64], h: f64) -> Vec<f64> {
    (0..p.q)
        .map(|j| {
            let mut plus = beta.to_vec();
            let mut minus = beta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            (p.loss(&plus) - p.loss(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Unregularized logistic fit by damped Newton steps with a Gaussian
/// elimination solve.
pub fn newton_fit(p: &DenseProblem) -> Vec<f64> {
    let q = p.q;
    let mut beta = vec![0.0; q];
    for _ in 0..200 {
        let g = p.gradient(&beta);
        if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-13 {
            break;
        }
        let h = p.hessian(&beta);
        let dir = solve_linear(q, h, g.iter().map(|v| -v).collect());
        let f0 = p.loss(&beta);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
            if p.loss(&cand) <= f0 || t < 1e-12 {
                beta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    beta
}

fn solve_linear(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x
}

/// Minimum of the ℓ1-penalized objective over `[-half_width, half_width]^q`
/// (q ≤ 3) by repeatedly zooming a uniform grid around the best point.
pub fn grid_search(p: &DenseProblem, half_width: f64) -> (Vec<f64>, f64) {
    let q = p.q;
    assert!(q <= 3);
    let pts = 41usize;
    let mut center = vec![0.0; q];
    let mut radius = half_width;
    let mut best = (center.clone(), p.objective(&center));
    for _ in 0..60 {
        let spacing = 2.0 * radius / (pts - 1) as f64;
        let total = pts.pow(q as u32);
        for idx in 0..total {
            let mut k = idx;
            let cand: Vec<f64> = (0..q)
                .map(|d| {
                    let g = k % pts;
                    k /= pts;
                    center[d] - radius + g as f64 * spacing
                })
                .collect();
            let f = p.objective(&cand);
            if f < best.1 {
                best = (cand, f);
            }
        }
        center = best.0.clone();
        radius = 2.0 * spacing;
        if radius < 1e-9 {
            break;
        }
    }
    best
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    num / den
}

/// Empirical state frequencies of a dataset, indexed like the enumerated
/// distribution.
pub fn state_frequencies(data: &isinglearn::Dataset) -> Vec<f64> {
    let mut counts = vec![0usize; 1 << data.p()];
    for row in data.rows() {
        counts[isinglearn::StateDistribution::index_of(row)] += 1;
    }
    counts.iter().map(|&c| c as f64 / data.n() as f64).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Monte-Carlo estimate of the Fisher matrix of node `r` (or of the stacked
/// problem when `r` is `None`) from samples, written out from the logistic
/// variance `s(1 - s)` with covariates `2 x_l`.
pub fn monte_carlo_fisher(model: &isinglearn::IsingModel, data: &isinglearn::Dataset, r: Option<usize>) -> Vec<f64> {
    let p = model.p();
    let dim = match r {
        Some(_) => p - 1,
        None => p * (p - 1) / 2,
    };
    let mut q = vec![0.0; dim * dim];
    let nodes: Vec<usize> = match r {
        Some(r) => vec![r],
        None => (0..p).collect(),
    };
    let weight = 1.0 / (data.n() * nodes.len()) as f64;
    for x in data.rows() {
        for &node in &nodes {
            let field: f64 = (0..p).filter(|&l| l != node).map(|l| model.coupling(l, node) * f64::from(x[l])).sum();
            let s = 1.0 / (1.0 + (-2.0 * field).exp());
            let mut a = vec![0.0; dim];
            for l in (0..p).filter(|&l| l != node) {
                let k = match r {
                    Some(_) => if l < node { l } else { l - 1 },
                    None => {
                        let (i, j) = (node.min(l), node.max(l));
                        i * p - i * (i + 1) / 2 + (j - i - 1)
                    }
                };
                a[k] = 2.0 * f64::from(x[l]);
            }
            for i in 0..dim {
                for j in 0..dim {
                    q[i * dim + j] += weight * s * (1.0 - s) * a[i] * a[j];
                }
            }
        }
    }
    q
}
