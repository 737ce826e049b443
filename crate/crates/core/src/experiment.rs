//! Synthetic experiments: mixed-coupling ground truths, sampling, fitting
//! every requested method, and per-replicate records.
//!
//! Every random stage draws from its own seed, derived from the master seed
//! and the stage coordinates by [`child_seed`], so records do not depend on
//! the order in which replicates run.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, MethodId};
use crate::metrics::{accuracy, err, DEFAULT_SUPPORT_EPS};
use crate::model::{pair_count, pairs, IsingModel, MAX_NODES};
use crate::sampling::{rng_from_seed, sample, GibbsConfig, SamplerKind};

pub const STAGE_MODEL: u64 = 1;
pub const STAGE_DATA: u64 = 2;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one stage of one replicate: SplitMix64 folded over
/// `(master, p, n, replicate, stage)`.
pub fn child_seed(master: u64, p: usize, n: usize, replicate: usize, stage: u64) -> u64 {
    [p as u64, n as u64, replicate as u64, stage]
        .into_iter()
        .fold(splitmix64(master), |h, v| splitmix64(h ^ v))
}

/// Ground truth with exactly `round(density * p(p-1)/2)` active pairs chosen
/// uniformly without replacement, each `±magnitude` with equal probability.
pub fn generate_mixed_coupling(p: usize, density: f64, magnitude: f64, seed: u64) -> Result<IsingModel> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Config(format!("density must be in (0, 1], got {density}")));
    }
    if !magnitude.is_finite() || magnitude == 0.0 {
        return Err(Error::Config(format!("coupling magnitude must be finite and nonzero, got {magnitude}")));
    }
    let total = pair_count(p);
    let active = (density * total as f64).round() as usize;
    if active == 0 {
        return Err(Error::Config(format!(
            "density {density} selects no pairs out of {total}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut chosen = sample_indices(&mut rng, total, active).into_vec();
    chosen.sort_unstable();
    let all: Vec<(usize, usize)> = pairs(p).collect();
    let mut model = IsingModel::zeros(p)?;
    for k in chosen {
        let (i, j) = all[k];
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        model.set_coupling(i, j, sign * magnitude)?;
    }
    Ok(model)
}

fn default_magnitude() -> f64 {
    0.5
}

fn default_replicates() -> usize {
    20
}

fn default_methods() -> Vec<MethodId> {
    MethodId::ALL.to_vec()
}

fn default_eps() -> f64 {
    DEFAULT_SUPPORT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    /// Fraction of the `p(p-1)/2` pairs that carry an edge.
    pub density: f64,
    #[serde(default = "default_magnitude")]
    pub coupling_magnitude: f64,
    pub n_list: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodId>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub sampler: SamplerKind,
    /// Burn-in and thinning for Gibbs runs; the seed field is ignored.
    #[serde(default)]
    pub gibbs: GibbsConfig,
    /// One λ for every method instead of the size-dependent defaults.
    #[serde(default)]
    pub lambda_override: Option<f64>,
    /// Seed of the shared ground truth; derived from `master_seed` if absent.
    #[serde(default)]
    pub model_seed: Option<u64>,
    /// Draw a new ground truth for every replicate.
    #[serde(default)]
    pub fresh_model: bool,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Fill `wall_time_seconds`; otherwise it is written as 0 so that output
    /// is reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_reader(reader)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(2..=MAX_NODES).contains(&self.p) {
            return bad(format!("p must be in [2, {MAX_NODES}], got {}", self.p));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density must be in (0, 1], got {}", self.density));
        }
        if !self.coupling_magnitude.is_finite() || self.coupling_magnitude == 0.0 {
            return bad(format!("coupling_magnitude must be finite and nonzero, got {}", self.coupling_magnitude));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be nonempty with positive sample sizes".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods contains duplicates".into());
        }
        if let Some(l) = self.lambda_override {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda_override must be finite and nonnegative, got {l}"));
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and nonnegative, got {}", self.eps));
        }
        if (self.density * pair_count(self.p) as f64).round() == 0.0 {
            return bad(format!("density {} selects no pairs for p = {}", self.density, self.p));
        }
        self.gibbs.validate()
    }

    pub fn record_count(&self) -> usize {
        self.n_list.len() * self.replicates * self.methods.len()
    }

    pub fn model_seed_for(&self, n: usize, replicate: usize) -> u64 {
        if self.fresh_model {
            child_seed(self.master_seed, self.p, n, replicate, STAGE_MODEL)
        } else {
            self.model_seed
                .unwrap_or_else(|| child_seed(self.master_seed, self.p, 0, 0, STAGE_MODEL))
        }
    }

    pub fn data_seed_for(&self, n: usize, replicate: usize) -> u64 {
        child_seed(self.master_seed, self.p, n, replicate, STAGE_DATA)
    }

    /// λ actually used by `method` at sample size `n`.
    pub fn lambda_for(&self, method: MethodId, n: usize) -> f64 {
        self.lambda_override
            .unwrap_or_else(|| method.default_lambda(self.p, n))
    }
}

pub const RECORD_HEADER: [&str; 10] = [
    "method",
    "p",
    "n",
    "replicate",
    "seed",
    "accuracy",
    "err",
    "solver_iterations",
    "converged",
    "wall_time_seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub method: MethodId,
    pub p: usize,
    pub n: usize,
    pub replicate: usize,
    /// Seed of the sampled dataset.
    pub seed: u64,
    pub accuracy: f64,
    pub err: f64,
    pub solver_iterations: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

fn run_replicate(config: &ExperimentConfig, n: usize, replicate: usize) -> Result<Vec<ExperimentRecord>> {
    let truth = generate_mixed_coupling(
        config.p,
        config.density,
        config.coupling_magnitude,
        config.model_seed_for(n, replicate),
    )?;
    let seed = config.data_seed_for(n, replicate);
    let data = sample(&truth, n, config.sampler, &config.gibbs, seed)?;

    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let est = estimate(&data, method, Some(config.lambda_for(method, n)))?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok(ExperimentRecord {
                method,
                p: config.p,
                n,
                replicate,
                seed,
                accuracy: accuracy(&truth, &est.model, config.eps)?.1,
                err: err(&truth, &est.model)?,
                solver_iterations: est.diagnostics.iterations,
                converged: est.diagnostics.converged,
                wall_time_seconds: if config.record_wall_time { elapsed } else { 0.0 },
            })
        })
        .collect()
}

/// Runs every `(n, replicate)` cell, in parallel, and returns records ordered
/// by `n_list` position, then replicate, then the configured method order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |rep| (n, rep)))
        .collect();
    let per_cell: Vec<Vec<ExperimentRecord>> = cells
        .par_iter()
        .map(|&(n, rep)| run_replicate(config, n, rep))
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

pub fn write_records<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::InvalidData(format!(
            "records header is {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            RECORD_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (k, row) in r.deserialize::<ExperimentRecord>().enumerate() {
        let rec = row?;
        if !(0.0..=1.0).contains(&rec.accuracy) || rec.err.is_nan() || rec.err < 0.0 {
            return Err(Error::InvalidData(format!(
                "record {}: accuracy {} or err {} out of range",
                k + 1,
                rec.accuracy,
                rec.err
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `q (len - 1)` (inclusive rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        Stats {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: MethodId,
    pub p: usize,
    pub n: usize,
    pub count: usize,
    pub accuracy: Stats,
    pub err: Stats,
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "method",
    "p",
    "n",
    "count",
    "accuracy_mean",
    "accuracy_median",
    "accuracy_q1",
    "accuracy_q3",
    "accuracy_iqr",
    "err_mean",
    "err_median",
    "err_q1",
    "err_q3",
    "err_iqr",
];

/// Per-(method, p, n) statistics, sorted by p, n, then method.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(usize, usize, MethodId), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.p, r.n, r.method)).or_default();
        g.0.push(r.accuracy);
        g.1.push(r.err);
    }
    Ok(groups
        .into_iter()
        .map(|((p, n, method), (acc, err))| SummaryRow {
            method,
            p,
            n,
            count: acc.len(),
            accuracy: Stats::of(&acc),
            err: Stats::of(&err),
        })
        .collect())
}

pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let a = r.accuracy;
        let e = r.err;
        let mut fields = vec![r.method.to_string(), r.p.to_string(), r.n.to_string(), r.count.to_string()];
        fields.extend(
            [a.mean, a.median, a.q1, a.q3, a.iqr, e.mean, e.median, e.q1, e.q3, e.iqr]
                .iter()
                .map(f64::to_string),
        );
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
