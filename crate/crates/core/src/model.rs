//! Ising models with zero external field, edge-vector packing, and exact
//! computations on enumerable state spaces.
//!
//! Spins are stored as `i8` values in `{-1, +1}`. Node indices are 0-based in
//! the library and 1-based in every serialized format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `p` for which the full `2^p` state space is materialized.
pub const MAX_ENUMERATION_NODES: usize = 20;

/// Largest `p` accepted from a serialized model or dataset.
pub const MAX_NODES: usize = 2048;

/// Number of canonical pairs `(i, j)`, `i < j`, over `p` nodes.
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j`, in the canonical order
/// `(0,1), (0,2), ..., (0,p-1), (1,2), ..., (p-2,p-1)`.
pub fn pair_index(p: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < p);
    i * p - i * (i + 1) / 2 + (j - i - 1)
}

/// Iterator over canonical pairs in order.
pub fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| (i, j)))
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_spin(v: i8) -> bool {
    v == 1 || v == -1
}

/// Symmetric, zero-diagonal coupling matrix over `p >= 2` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    p: usize,
    theta: Vec<f64>,
}

impl IsingModel {
    pub fn zeros(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidModel(format!("need p >= 2, got {p}")));
        }
        Ok(IsingModel {
            p,
            theta: vec![0.0; p * p],
        })
    }

    /// Builds a model from a dense row-major matrix, checking symmetry and the
    /// zero diagonal exactly.
    pub fn from_dense(p: usize, theta: Vec<f64>) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidModel(format!("need p >= 2, got {p}")));
        }
        if theta.len() != p * p {
            return Err(Error::Dimension(format!(
                "expected {} matrix entries, got {}",
                p * p,
                theta.len()
            )));
        }
        for i in 0..p {
            if theta[i * p + i] != 0.0 {
                return Err(Error::InvalidModel(format!("nonzero diagonal at node {}", i + 1)));
            }
            for j in i + 1..p {
                let (a, b) = (theta[i * p + j], theta[j * p + i]);
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "non-finite coupling at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if a != b {
                    return Err(Error::InvalidModel(format!(
                        "asymmetric couplings at ({}, {}): {a} vs {b}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(IsingModel { p, theta })
    }

    pub fn from_edges(p: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = Self::zeros(p)?;
        for &(i, j, v) in edges {
            m.set_coupling(i, j, v)?;
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.p + j]
    }

    /// Sets `theta[i][j] = theta[j][i] = value`.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let p = self.p;
        if i >= p || j >= p {
            return Err(Error::NodeOutOfRange { index: i.max(j), p });
        }
        if i == j {
            return Err(Error::InvalidModel(format!("self-coupling at node {}", i + 1)));
        }
        if !value.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite coupling {value}")));
        }
        self.theta[i * p + j] = value;
        self.theta[j * p + i] = value;
        Ok(())
    }

    /// Row `r` of the coupling matrix.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.theta[r * self.p..(r + 1) * self.p]
    }

    pub fn as_dense(&self) -> &[f64] {
        &self.theta
    }

    /// Neighbours of node `r` (nonzero entries of row `r`).
    pub fn neighbors(&self, r: usize) -> Vec<usize> {
        (0..self.p).filter(|&l| l != r && self.coupling(r, l) != 0.0).collect()
    }

    pub fn degree(&self, r: usize) -> usize {
        self.neighbors(r).len()
    }

    /// Number of nonzero canonical pairs.
    pub fn edge_count(&self) -> usize {
        pairs(self.p).filter(|&(i, j)| self.coupling(i, j) != 0.0).count()
    }

    /// `x' Theta x / 2`, equal to the sum of `theta_ij x_i x_j` over `i < j`.
    pub fn energy(&self, x: &[i8]) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        for i in 0..p {
            let xi = f64::from(x[i]);
            let row = self.row(i);
            let mut s = 0.0;
            for j in i + 1..p {
                s += row[j] * f64::from(x[j]);
            }
            e += xi * s;
        }
        e
    }

    /// Local field `sum_{l != r} theta_lr x_l`.
    pub fn local_field(&self, r: usize, x: &[i8]) -> f64 {
        self.row(r)
            .iter()
            .zip(x)
            .enumerate()
            .filter(|&(l, _)| l != r)
            .map(|(_, (t, &v))| t * f64::from(v))
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from(self)).expect("model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        doc.into_model()
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_reader(reader)?;
        doc.into_model()
    }
}

/// `p(p-1)/2` upper off-diagonal couplings in canonical pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    p: usize,
    values: Vec<f64>,
}

impl EdgeVector {
    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidModel(format!("need p >= 2, got {p}")));
        }
        if values.len() != pair_count(p) {
            return Err(Error::Dimension(format!(
                "edge vector for p = {p} needs {} values, got {}",
                pair_count(p),
                values.len()
            )));
        }
        Ok(EdgeVector { p, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Inverse of [`pack_edges`].
    pub fn unpack(&self) -> Result<IsingModel> {
        let mut m = IsingModel::zeros(self.p)?;
        for ((i, j), &v) in pairs(self.p).zip(&self.values) {
            m.set_coupling(i, j, v)?;
        }
        Ok(m)
    }
}

pub fn pack_edges(model: &IsingModel) -> EdgeVector {
    let values = pairs(model.p).map(|(i, j)| model.coupling(i, j)).collect();
    EdgeVector { p: model.p, values }
}

/// Serialized form: `{"p": int, "edges": [[i, j, theta_ij], ...]}`, 1-based
/// `i < j`, absent pairs zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub p: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&IsingModel> for ModelDocument {
    fn from(m: &IsingModel) -> Self {
        let edges = pairs(m.p)
            .filter_map(|(i, j)| {
                let v = m.coupling(i, j);
                (v != 0.0).then_some((i + 1, j + 1, v))
            })
            .collect();
        ModelDocument { p: m.p, edges }
    }
}

impl ModelDocument {
    pub fn into_model(self) -> Result<IsingModel> {
        let p = self.p;
        if !(2..=MAX_NODES).contains(&p) {
            return Err(Error::InvalidModel(format!("p = {p} outside [2, {MAX_NODES}]")));
        }
        let mut m = IsingModel::zeros(p)?;
        let mut seen = vec![false; pair_count(p)];
        for (i, j, v) in self.edges {
            if i < 1 || j > p || i >= j {
                return Err(Error::InvalidModel(format!(
                    "edge ({i}, {j}) is not a 1-based pair with i < j <= {p}"
                )));
            }
            let k = pair_index(p, i - 1, j - 1);
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidModel(format!("duplicate edge ({i}, {j})")));
            }
            m.set_coupling(i - 1, j - 1, v)?;
        }
        Ok(m)
    }
}

/// `n x p` matrix of `±1` observations, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<i8>,
}

impl Dataset {
    pub fn new(n: usize, p: usize, x: Vec<i8>) -> Result<Self> {
        if x.len() != n * p {
            return Err(Error::Dimension(format!(
                "dataset {n}x{p} needs {} entries, got {}",
                n * p,
                x.len()
            )));
        }
        if let Some(pos) = x.iter().position(|&v| !check_spin(v)) {
            return Err(Error::InvalidData(format!(
                "entry at row {}, column {} is {}, expected -1 or +1",
                pos / p + 1,
                pos % p + 1,
                x[pos]
            )));
        }
        Ok(Dataset { n, p, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.x.chunks_exact(self.p.max(1))
    }

    pub fn get(&self, i: usize, r: usize) -> i8 {
        self.x[i * self.p + r]
    }

    pub fn column(&self, r: usize) -> Vec<i8> {
        self.rows().map(|row| row[r]).collect()
    }

    /// Writes the CSV layout: header `X1,...,Xp`, then one row of `±1` per
    /// observation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.p).map(|k| format!("X{k}")))?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| if *v > 0 { "1" } else { "-1" }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let p = header.len();
        if !(2..=MAX_NODES).contains(&p) {
            return Err(Error::InvalidData(format!("{p} columns, need 2..={MAX_NODES}")));
        }
        for (k, name) in header.iter().enumerate() {
            if name.trim() != format!("X{}", k + 1) {
                return Err(Error::InvalidData(format!(
                    "column {} is named {name:?}, expected \"X{}\"",
                    k + 1,
                    k + 1
                )));
            }
        }
        let mut x = Vec::new();
        let mut n = 0;
        for record in r.records() {
            let record = record?;
            if record.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {} has {} fields, expected {p}",
                    n + 1,
                    record.len()
                )));
            }
            for field in record.iter() {
                let v = match field.trim() {
                    "1" | "+1" => 1,
                    "-1" => -1,
                    other => {
                        return Err(Error::InvalidData(format!(
                            "row {}: {other:?} is not -1 or +1",
                            n + 1
                        )))
                    }
                };
                x.push(v);
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        Dataset::new(n, p, x)
    }
}

/// Exact distribution over all `2^p` states.
///
/// State `k` sets `x[b] = +1` when bit `b` of `k` is one, else `-1`.
#[derive(Debug, Clone)]
pub struct StateDistribution {
    p: usize,
    probs: Vec<f64>,
    log_z: f64,
}

impl StateDistribution {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn state(&self, k: usize) -> Vec<i8> {
        state_of(self.p, k)
    }

    /// Index of a `±1` vector under the state ordering.
    pub fn index_of(x: &[i8]) -> usize {
        x.iter()
            .enumerate()
            .filter(|&(_, &v)| v > 0)
            .fold(0, |k, (b, _)| k | (1 << b))
    }
}

pub fn state_of(p: usize, k: usize) -> Vec<i8> {
    (0..p).map(|b| if (k >> b) & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn enumerate_distribution(model: &IsingModel) -> Result<StateDistribution> {
    let p = model.p;
    if p > MAX_ENUMERATION_NODES {
        return Err(Error::Capacity {
            p,
            max: MAX_ENUMERATION_NODES,
        });
    }
    let energies: Vec<f64> = (0..1usize << p)
        .map(|k| model.energy(&state_of(p, k)))
        .collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = energies.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for q in &mut probs {
        *q /= total;
    }
    Ok(StateDistribution {
        p,
        probs,
        log_z: max + total.ln(),
    })
}

/// `P(X_r = +1 | x_{-r}) = logistic(2 sum_{l != r} theta_lr x_l)`; slot `r` of
/// `x_rest` is ignored.
pub fn conditional_prob_plus(model: &IsingModel, r: usize, x_rest: &[i8]) -> Result<f64> {
    let p = model.p;
    if r >= p {
        return Err(Error::NodeOutOfRange { index: r, p });
    }
    if x_rest.len() != p {
        return Err(Error::Dimension(format!(
            "state has {} entries, model has {p} nodes",
            x_rest.len()
        )));
    }
    if let Some(l) = (0..p).find(|&l| l != r && !check_spin(x_rest[l])) {
        return Err(Error::InvalidData(format!(
            "entry {} is {}, expected -1 or +1",
            l + 1,
            x_rest[l]
        )));
    }
    Ok(logistic(2.0 * model.local_field(r, x_rest)))
}

/// `x' Theta x / 2 - log Z`.
pub fn joint_log_prob(model: &IsingModel, x: &[i8], log_z: f64) -> Result<f64> {
    if x.len() != model.p {
        return Err(Error::Dimension(format!(
            "state has {} entries, model has {} nodes",
            x.len(),
            model.p
        )));
    }
    Ok(model.energy(x) - log_z)
}
