//! Exact (inverse-CDF) and Gibbs samplers.
//!
//! All randomness comes from [`rng_from_seed`], a ChaCha8 stream whose output
//! does not depend on the platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_distribution, logistic, state_of, Dataset, IsingModel};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    /// Sweeps discarded before the first retained sample.
    pub burn_in: usize,
    /// Sweeps between consecutive retained samples.
    pub thinning: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in: 1000,
            thinning: 10,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Config("gibbs thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n` i.i.d. draws from the exact distribution by inverse CDF.
pub fn sample_exact(model: &IsingModel, n: usize, seed: u64) -> Result<Dataset> {
    let dist = enumerate_distribution(model)?;
    let p = model.p();
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &q in dist.probs() {
        acc += q;
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(last);
        x.extend(state_of(p, k));
    }
    Dataset::new(n, p, x)
}

/// Systematic-scan Gibbs sampler. Each sweep updates `x_1, ..., x_p` in
/// order, always conditioning on the freshest values; after `burn_in` sweeps
/// one state is retained every `thinning` sweeps.
pub fn sample_gibbs(model: &IsingModel, n: usize, config: &GibbsConfig) -> Result<Dataset> {
    config.validate()?;
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let p = model.p();
    let mut rng = rng_from_seed(config.seed);
    let mut state: Vec<i8> = (0..p).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();

    let sweep = |state: &mut [i8], rng: &mut SeededRng| {
        for r in 0..p {
            let prob = logistic(2.0 * model.local_field(r, state));
            state[r] = if rng.gen::<f64>() < prob { 1 } else { -1 };
        }
    };

    for _ in 0..config.burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        for _ in 0..config.thinning {
            sweep(&mut state, &mut rng);
        }
        x.extend_from_slice(&state);
    }
    Dataset::new(n, p, x)
}

/// Which sampler to use for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Exact when `p` fits the enumeration limit, Gibbs otherwise.
    #[default]
    Auto,
    Exact,
    Gibbs,
}

impl SamplerKind {
    pub fn resolve(self, p: usize) -> SamplerKind {
        match self {
            SamplerKind::Auto if p <= crate::model::MAX_ENUMERATION_NODES => SamplerKind::Exact,
            SamplerKind::Auto => SamplerKind::Gibbs,
            other => other,
        }
    }
}

pub fn sample(
    model: &IsingModel,
    n: usize,
    kind: SamplerKind,
    gibbs: &GibbsConfig,
    seed: u64,
) -> Result<Dataset> {
    match kind.resolve(model.p()) {
        SamplerKind::Exact => sample_exact(model, n, seed),
        _ => sample_gibbs(model, n, &GibbsConfig { seed, ..*gibbs }),
    }
}
