//! Batch Mira: online large-margin updates between hope and fear
//! hypotheses, with the metric computed against a decaying background
//! corpus so sentence-level updates see a corpus-like objective.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{
    add_scaled_features, decode_all, feat_diff, pool_metric, squared_norm, StatsCache, System,
    TuneMetric, TuneOutcome, TunePool,
};
use crate::corpus::Corpus;
use crate::errors::{Error, Result};
use crate::metric::prf_real;
use crate::features::WeightVec;
use crate::util::derive_seed;

#[derive(Clone, Debug)]
pub struct MiraConfig {
    pub metric: TuneMetric,
    /// background decay per update, in (0, 1]
    pub decay: f64,
    /// background tracks the model-best hypothesis instead of hope
    pub model_bg: bool,
    /// step-size cap C
    pub c: f64,
    pub epochs: usize,
    pub k_best: usize,
    pub seed: u64,
}

impl Default for MiraConfig {
    fn default() -> Self {
        MiraConfig {
            metric: TuneMetric::m2(),
            decay: 0.999,
            model_bg: true,
            c: 0.01,
            epochs: 5,
            k_best: 100,
            seed: 1,
        }
    }
}

/// Exponentially decayed sum of real-valued sufficient statistics:
/// B ← decay · (B + s) per update, so n constant updates of s give
/// s·(d + d² + … + dⁿ) with fixed point d·s/(1−d).
#[derive(Clone, Debug)]
pub struct Background {
    decay: f64,
    acc: Vec<f64>,
}

impl Background {
    pub fn new(decay: f64, dim: usize) -> Self {
        Background {
            decay,
            acc: vec![0.0; dim],
        }
    }

    pub fn update(&mut self, stats: &[f64]) {
        for (b, s) in self.acc.iter_mut().zip(stats) {
            *b = self.decay * (*b + s);
        }
    }

    pub fn smoothed(&self, stats: &[f64]) -> Vec<f64> {
        self.acc.iter().zip(stats).map(|(b, s)| b + s).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.acc
    }
}

/// Corpus metric over real-valued statistic totals, mirroring the integer
/// formulas.
pub fn bg_metric(metric: &TuneMetric, v: &[f64]) -> f64 {
    match metric {
        TuneMetric::M2(cfg) => prf_real(v[0], v[1], v[2], cfg.beta).2,
        TuneMetric::Bleu => {
            let (matched, rest) = v.split_at(4);
            let (total, lens) = rest.split_at(4);
            let (hyp_len, ref_len) = (lens[0], lens[1]);
            let mut log_sum = 0.0;
            let mut used = 0;
            for k in 0..4 {
                if total[k] <= 0.0 {
                    continue;
                }
                if matched[k] <= 0.0 {
                    return 0.0;
                }
                log_sum += (matched[k] / total[k]).ln();
                used += 1;
            }
            if used == 0 {
                return if hyp_len == ref_len { 1.0 } else { 0.0 };
            }
            let bp = if hyp_len <= 0.0 {
                return if ref_len <= 0.0 { 1.0 } else { 0.0 };
            } else if hyp_len < ref_len {
                (1.0 - ref_len / hyp_len).exp()
            } else {
                1.0
            };
            bp * (log_sum / f64::from(used)).exp()
        }
    }
}

fn stat_dim(metric: &TuneMetric) -> usize {
    match metric {
        TuneMetric::M2(_) => 3,
        TuneMetric::Bleu => 10,
    }
}

/// Online Mira over the dev set: per sentence pick hope (max model+metric)
/// and fear (max model−metric), make a capped hinge update when the margin
/// is violated, and feed the background. Returns the average of the weight
/// vector over all sentence visits.
pub fn mira<S: System + ?Sized>(
    system: &S,
    dev: &Corpus,
    init: &WeightVec,
    config: &MiraConfig,
) -> Result<TuneOutcome> {
    if !(config.decay > 0.0 && config.decay <= 1.0) {
        return Err(Error::config("decay must lie in (0, 1]"));
    }
    if config.epochs == 0 {
        return Err(Error::config("mira needs at least one epoch"));
    }
    let metric = &config.metric;
    let mut cache = StatsCache::default();
    let mut pool = TunePool::new(dev.sentences.len());
    let mut bg = Background::new(config.decay, stat_dim(metric));
    let mut w = init.clone();
    let mut w_sum = WeightVec::zeros();
    let mut visits = 0u64;
    let mut log = String::new();

    for epoch in 0..config.epochs {
        let nbests = decode_all(system, dev, &w, config.k_best)?;
        pool.merge(dev, &nbests, metric, &mut cache)?;
        let mut order: Vec<usize> = (0..pool.entries.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "mira", epoch as u64, 0));
        order.shuffle(&mut rng);
        for sid in order {
            let sent = &pool.entries[sid];
            if sent.is_empty() {
                continue;
            }
            let scores: Vec<f64> = sent.iter().map(|e| w.dot(&e.feats)).collect();
            let metrics: Vec<f64> = sent
                .iter()
                .map(|e| bg_metric(metric, &bg.smoothed(&e.stats.as_f64())))
                .collect();
            let argmax = |value: &dyn Fn(usize) -> f64| {
                let mut best = 0;
                for i in 1..sent.len() {
                    if value(i) > value(best) {
                        best = i;
                    }
                }
                best
            };
            let hope = argmax(&|i| scores[i] + metrics[i]);
            let fear = argmax(&|i| scores[i] - metrics[i]);
            let loss = (metrics[hope] - metrics[fear]) - (scores[hope] - scores[fear]);
            if loss > 0.0 {
                let delta = feat_diff(&sent[hope].feats, &sent[fear].feats);
                let norm = squared_norm(&delta);
                if norm > 0.0 {
                    add_scaled_features(&mut w, &delta, config.c.min(loss / norm));
                }
            }
            let bg_pick = if config.model_bg { argmax(&|i| scores[i]) } else { hope };
            bg.update(&sent[bg_pick].stats.as_f64());
            w_sum = w_sum.plus_scaled(&w, 1.0);
            visits += 1;
        }
        let cur = pool_metric(&pool, metric, &w);
        log.push_str(&format!("{epoch}\t{cur:.4}\t{}\n", pool.size()));
    }

    let weights = if visits == 0 {
        init.clone()
    } else {
        WeightVec::zeros().plus_scaled(&w_sum, 1.0 / visits as f64)
    };
    let dev_metric = pool_metric(&pool, metric, &weights);
    Ok(TuneOutcome {
        weights,
        dev_metric,
        log,
    })
}
