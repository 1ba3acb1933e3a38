//! Pairwise ranking optimization: sample hypothesis pairs, keep the most
//! metric-separated ones, and fit a logistic ranker on feature differences.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{
    add_scaled_features, decode_all, feat_diff, pool_metric, PoolEntry, StatsCache, System,
    TuneMetric, TuneOutcome, TunePool,
};
use crate::corpus::Corpus;
use crate::errors::{Error, Result};
use crate::features::{FeatureVec, WeightVec};
use crate::util::derive_seed;

#[derive(Clone, Debug)]
pub struct ProConfig {
    pub metric: TuneMetric,
    /// pairs sampled per sentence (Γ)
    pub candidates: usize,
    /// pairs kept per sentence (Ξ)
    pub kept: usize,
    /// minimum |metric difference| for a pair to count (α)
    pub min_diff: f64,
    /// interpolation weight of the new vector against the previous one (ψ)
    pub psi: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub k_best: usize,
    pub seed: u64,
}

impl Default for ProConfig {
    fn default() -> Self {
        ProConfig {
            metric: TuneMetric::m2(),
            candidates: 5000,
            kept: 50,
            min_diff: 0.05,
            psi: 0.1,
            steps: 100,
            learning_rate: 0.1,
            max_iterations: 10,
            k_best: 100,
            seed: 1,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One ranker update from the current pool. Returns the interpolated
/// weights and whether any pair survived the filters; with no survivors the
/// previous weights come back unchanged.
pub fn pro_update(
    pool: &[Vec<PoolEntry>],
    config: &ProConfig,
    prev: &WeightVec,
    rng: &mut ChaCha8Rng,
) -> Result<(WeightVec, bool)> {
    if config.kept > config.candidates {
        return Err(Error::config("kept pairs must not exceed sampled pairs"));
    }
    // (better feats − worse feats) per kept pair
    let mut examples: Vec<FeatureVec> = Vec::new();
    for sent in pool {
        if sent.len() < 2 {
            continue;
        }
        let metrics: Vec<f64> = sent
            .iter()
            .map(|e| e.stats.sentence_metric(&config.metric))
            .collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for _ in 0..config.candidates {
            let i = rng.gen_range(0..sent.len());
            let j = rng.gen_range(0..sent.len());
            let diff = metrics[i] - metrics[j];
            if diff.abs() > config.min_diff {
                pairs.push((diff.abs(), if diff > 0.0 { i } else { j }, if diff > 0.0 { j } else { i }));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        pairs.truncate(config.kept);
        for (_, better, worse) in pairs {
            examples.push(feat_diff(&sent[better].feats, &sent[worse].feats));
        }
    }
    if examples.is_empty() {
        return Ok((prev.clone(), false));
    }

    // full-batch gradient descent on the logistic loss from zero weights
    let mut w = WeightVec::zeros();
    let scale = 1.0 / examples.len() as f64;
    for _ in 0..config.steps {
        let mut grad = WeightVec::zeros();
        for x in &examples {
            let g = sigmoid(-w.dot(x));
            add_scaled_features(&mut grad, x, g * scale);
        }
        w = w.plus_scaled(&grad, config.learning_rate);
    }
    Ok((prev.interpolate(&w, config.psi), true))
}

/// Iterative PRO: decode, merge the pool, update the ranker, repeat until
/// the pool stops growing or `max_iterations` rounds have run.
pub fn pro<S: System + ?Sized>(
    system: &S,
    dev: &Corpus,
    init: &WeightVec,
    config: &ProConfig,
) -> Result<TuneOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::config("pro needs at least one iteration"));
    }
    let metric = &config.metric;
    let mut cache = StatsCache::default();
    let mut pool = TunePool::new(dev.sentences.len());
    let mut w = init.clone();
    let mut log = String::new();
    for iter in 0..config.max_iterations {
        let nbests = decode_all(system, dev, &w, config.k_best)?;
        let grew = pool.merge(dev, &nbests, metric, &mut cache)?;
        if iter > 0 && !grew {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "pro", iter as u64, 0));
        let (next, updated) = pro_update(&pool.entries, config, &w, &mut rng)?;
        w = next;
        let cur = pool_metric(&pool, metric, &w);
        log.push_str(&format!("{iter}\t{cur:.4}\t{}\n", pool.size()));
        if !updated {
            log.push_str("warning: no hypothesis pair passed the metric-difference threshold\n");
            break;
        }
    }
    let dev_metric = pool_metric(&pool, metric, &w);
    Ok(TuneOutcome {
        weights: w,
        dev_metric,
        log,
    })
}
