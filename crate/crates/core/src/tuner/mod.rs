//! Log-linear weight tuning toward a corpus metric.
//!
//! Three optimizers share one loop shape: decode the dev set into a growing
//! n-best pool, score every new hypothesis once, adjust the weights, repeat.
//! [`mert`] does exact line search over upper envelopes, [`pro`] trains a
//! pairwise ranker, [`mira`] makes online large-margin updates against a
//! decaying background corpus. [`crossfold_tune`] orchestrates folds and
//! repetitions and averages the resulting weight vectors.

mod crossfold;
mod mert;
mod mira;
mod pro;

pub use crossfold::{crossfold_tune, CrossfoldOutcome, Optimizer, RunRecord, TuningPlan, VarianceSummary};
pub use mert::{mert, mert_line_search, MertConfig};
pub use mira::{bg_metric, mira, Background, MiraConfig};
pub use pro::{pro, pro_update, ProConfig};

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::corpus::{apply_edits, AnnotatedSentence, Corpus, Token};
use crate::decoder::Candidate;
use crate::errors::{Error, Result};
use crate::features::{FeatureVec, WeightVec, NUM_DENSE};
use crate::metric::{
    bleu_sentence_stats, choose_annotator, corpus_bleu, max_match_sentence, prf, sentence_bleu,
    BleuStats, MetricConfig, Stats3,
};

/// Anything that can decode a sentence into a scored n-best list. Tuning
/// only needs this one entry point, so tests can substitute fixtures for
/// the real decoder.
pub trait System: Sync {
    fn decode_nbest(&self, src: &[Token], weights: &WeightVec, k: usize) -> Result<Vec<Candidate>>;
}

impl System for crate::decoder::GecSystem {
    fn decode_nbest(&self, src: &[Token], weights: &WeightVec, k: usize) -> Result<Vec<Candidate>> {
        self.decode(src, weights, k)
    }
}

impl<S: System + ?Sized> System for &S {
    fn decode_nbest(&self, src: &[Token], weights: &WeightVec, k: usize) -> Result<Vec<Candidate>> {
        (**self).decode_nbest(src, weights, k)
    }
}

/// Objective to tune toward.
#[derive(Clone, Debug)]
pub enum TuneMetric {
    M2(MetricConfig),
    Bleu,
}

impl TuneMetric {
    pub fn m2() -> Self {
        TuneMetric::M2(MetricConfig::default())
    }
}

/// Per-(sentence, hypothesis) sufficient statistics for the tuning metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SentStats {
    M2(Stats3),
    Bleu(BleuStats),
}

impl SentStats {
    /// Raw sentence-level metric of this hypothesis alone.
    pub fn sentence_metric(&self, metric: &TuneMetric) -> f64 {
        match (self, metric) {
            (SentStats::M2(s), TuneMetric::M2(cfg)) => prf(*s, cfg.beta).2,
            (SentStats::Bleu(s), TuneMetric::Bleu) => sentence_bleu(s, 0.1),
            _ => unreachable!("stats are always built by the metric that consumes them"),
        }
    }

    /// Flatten to reals, for background smoothing.
    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            SentStats::M2(s) => vec![s.correct as f64, s.proposed as f64, s.gold as f64],
            SentStats::Bleu(s) => {
                let mut v = Vec::with_capacity(10);
                v.extend(s.matched.iter().map(|&x| x as f64));
                v.extend(s.total.iter().map(|&x| x as f64));
                v.push(s.hyp_len as f64);
                v.push(s.ref_len as f64);
                v
            }
        }
    }
}

/// Running corpus totals of [`SentStats`].
#[derive(Clone, Copy, Debug)]
pub enum StatsTotal {
    M2(Stats3),
    Bleu(BleuStats),
}

impl StatsTotal {
    pub fn zero(metric: &TuneMetric) -> Self {
        match metric {
            TuneMetric::M2(_) => StatsTotal::M2(Stats3::default()),
            TuneMetric::Bleu => StatsTotal::Bleu(BleuStats::default()),
        }
    }

    pub fn add(&mut self, s: &SentStats) {
        match (self, s) {
            (StatsTotal::M2(t), SentStats::M2(s)) => *t += *s,
            (StatsTotal::Bleu(t), SentStats::Bleu(s)) => *t += *s,
            _ => unreachable!("mixed stat kinds"),
        }
    }

    pub fn sub(&mut self, s: &SentStats) {
        match (self, s) {
            (StatsTotal::M2(t), SentStats::M2(s)) => *t -= *s,
            (StatsTotal::Bleu(t), SentStats::Bleu(s)) => *t -= *s,
            _ => unreachable!("mixed stat kinds"),
        }
    }

    /// Corpus metric of the accumulated totals.
    pub fn metric(&self, metric: &TuneMetric) -> f64 {
        match (self, metric) {
            (StatsTotal::M2(t), TuneMetric::M2(cfg)) => prf(*t, cfg.beta).2,
            (StatsTotal::Bleu(t), TuneMetric::Bleu) => corpus_bleu(t),
            _ => unreachable!("mixed stat kinds"),
        }
    }
}

/// Reference text of an annotated sentence: the lowest-numbered annotator's
/// edits applied to the source.
pub fn reference(sent: &AnnotatedSentence) -> Vec<Token> {
    match sent.gold.iter().next() {
        Some((_, edits)) => apply_edits(&sent.source, edits),
        None => sent.source.clone(),
    }
}

/// Memo table for hypothesis statistics, keyed by (sentence index, surface).
/// `computed` counts actual metric evaluations, so tests can assert that
/// rescoring never happens.
#[derive(Default)]
pub struct StatsCache {
    map: HashMap<(usize, Vec<Token>), SentStats>,
    pub computed: usize,
}

impl StatsCache {
    pub fn get(
        &mut self,
        sid: usize,
        hyp: &[Token],
        sent: &AnnotatedSentence,
        metric: &TuneMetric,
    ) -> SentStats {
        if let Some(s) = self.map.get(&(sid, hyp.to_vec())) {
            return *s;
        }
        self.computed += 1;
        let stats = match metric {
            TuneMetric::M2(cfg) => {
                let per: Vec<Stats3> = if sent.gold.is_empty() {
                    vec![max_match_sentence(&sent.source, hyp, &[], cfg)]
                } else {
                    sent.gold
                        .values()
                        .map(|edits| max_match_sentence(&sent.source, hyp, edits, cfg))
                        .collect()
                };
                let pick = choose_annotator(&per, Stats3::default(), cfg);
                SentStats::M2(per[pick])
            }
            TuneMetric::Bleu => SentStats::Bleu(bleu_sentence_stats(hyp, &reference(sent))),
        };
        self.map.insert((sid, hyp.to_vec()), stats);
        stats
    }
}

/// Statistics for every hypothesis of every dev sentence.
pub fn hyp_stats(
    dev: &Corpus,
    nbests: &[Vec<Candidate>],
    metric: &TuneMetric,
    cache: &mut StatsCache,
) -> Result<Vec<Vec<SentStats>>> {
    if dev.sentences.len() != nbests.len() {
        return Err(Error::invalid(format!(
            "{} dev sentences but {} n-best lists",
            dev.sentences.len(),
            nbests.len()
        )));
    }
    Ok(dev
        .sentences
        .iter()
        .zip(nbests)
        .enumerate()
        .map(|(sid, (sent, cands))| {
            cands
                .iter()
                .map(|c| cache.get(sid, &c.tokens, sent, metric))
                .collect()
        })
        .collect())
}

/// One pooled hypothesis.
#[derive(Clone, Debug)]
pub struct PoolEntry {
    pub tokens: Vec<Token>,
    pub feats: FeatureVec,
    pub stats: SentStats,
}

/// Accumulated n-best pool, deduplicated by surface per sentence.
pub struct TunePool {
    pub entries: Vec<Vec<PoolEntry>>,
    seen: Vec<HashSet<Vec<Token>>>,
}

impl TunePool {
    pub fn new(sentences: usize) -> Self {
        TunePool {
            entries: vec![Vec::new(); sentences],
            seen: vec![HashSet::new(); sentences],
        }
    }

    /// Fold a decode round into the pool; returns whether anything new
    /// arrived.
    pub fn merge(
        &mut self,
        dev: &Corpus,
        nbests: &[Vec<Candidate>],
        metric: &TuneMetric,
        cache: &mut StatsCache,
    ) -> Result<bool> {
        if nbests.len() != self.entries.len() || dev.sentences.len() != self.entries.len() {
            return Err(Error::invalid("n-best lists are misaligned with the pool"));
        }
        let mut grew = false;
        for (sid, cands) in nbests.iter().enumerate() {
            for c in cands {
                if self.seen[sid].insert(c.tokens.clone()) {
                    let stats = cache.get(sid, &c.tokens, &dev.sentences[sid], metric);
                    self.entries[sid].push(PoolEntry {
                        tokens: c.tokens.clone(),
                        feats: c.feats.clone(),
                        stats,
                    });
                    grew = true;
                }
            }
        }
        Ok(grew)
    }

    pub fn size(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }
}

/// Decode the whole dev set, parallel over sentences.
pub fn decode_all<S: System + ?Sized>(
    system: &S,
    dev: &Corpus,
    weights: &WeightVec,
    k: usize,
) -> Result<Vec<Vec<Candidate>>> {
    dev.sentences
        .par_iter()
        .map(|s| system.decode_nbest(&s.source, weights, k))
        .collect()
}

/// Corpus metric of the pool under `weights`: per sentence the best-scoring
/// hypothesis (ties to the earlier pool entry), stats summed, metric of the
/// sum.
pub fn pool_metric(pool: &TunePool, metric: &TuneMetric, weights: &WeightVec) -> f64 {
    let mut total = StatsTotal::zero(metric);
    for sent in &pool.entries {
        let Some(first) = sent.first() else { continue };
        let mut best = (weights.dot(&first.feats), &first.stats);
        for e in &sent[1..] {
            let score = weights.dot(&e.feats);
            if score > best.0 {
                best = (score, &e.stats);
            }
        }
        total.add(best.1);
    }
    total.metric(metric)
}

/// What an optimizer hands back: final weights, their dev metric, and the
/// per-iteration log (`iter<TAB>metric<TAB>pool_size` lines).
#[derive(Clone, Debug)]
pub struct TuneOutcome {
    pub weights: WeightVec,
    pub dev_metric: f64,
    pub log: String,
}

/// Weight centroid: L1-normalize each run's dense block, then average per
/// coordinate; sparse weights average unnormalized, absent names counting
/// as zero.
pub fn average_weights(runs: &[WeightVec]) -> Result<WeightVec> {
    if runs.is_empty() {
        return Err(Error::invalid("cannot average zero weight vectors"));
    }
    let n = runs.len() as f64;
    let mut out = WeightVec::zeros();
    for run in runs {
        let normed = run.l1_normalized_dense();
        for i in 0..NUM_DENSE {
            out.dense[i] += normed.dense[i] / n;
        }
        for (name, v) in &run.sparse {
            *out.sparse.entry(name.clone()).or_insert(0.0) += v / n;
        }
    }
    Ok(out)
}

/// a − b over the union of sparse names.
pub(crate) fn feat_diff(a: &FeatureVec, b: &FeatureVec) -> FeatureVec {
    let mut out = a.clone();
    for i in 0..NUM_DENSE {
        out.dense[i] -= b.dense[i];
    }
    for (name, v) in &b.sparse {
        *out.sparse.entry(name.clone()).or_insert(0.0) -= v;
    }
    out
}

pub(crate) fn add_scaled_features(w: &mut WeightVec, x: &FeatureVec, c: f64) {
    for i in 0..NUM_DENSE {
        w.dense[i] += c * x.dense[i];
    }
    for (name, v) in &x.sparse {
        *w.sparse.entry(name.clone()).or_insert(0.0) += c * v;
    }
}

pub(crate) fn squared_norm(x: &FeatureVec) -> f64 {
    x.dense.iter().map(|v| v * v).sum::<f64>()
        + x.sparse.values().map(|v| v * v).sum::<f64>()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::features::DenseFeature;

    /// Fixed n-best lists keyed by source surface; ignores weights and k.
    pub struct FixedSystem {
        map: HashMap<Vec<Token>, Vec<Candidate>>,
    }

    impl FixedSystem {
        pub fn new(rows: Vec<(&str, Vec<Candidate>)>) -> Self {
            let map = rows
                .into_iter()
                .map(|(src, nbest)| (crate::corpus::tokens(src), nbest))
                .collect();
            FixedSystem { map }
        }
    }

    impl System for FixedSystem {
        fn decode_nbest(
            &self,
            src: &[Token],
            _weights: &WeightVec,
            _k: usize,
        ) -> Result<Vec<Candidate>> {
            self.map
                .get(src)
                .cloned()
                .ok_or_else(|| Error::invalid("unknown test sentence"))
        }
    }

    /// Candidate with a single distinguishing dense feature value.
    pub fn cand(tokens: &str, f: DenseFeature, v: f64) -> Candidate {
        let mut feats = FeatureVec::default();
        feats.set(f, v);
        Candidate {
            tokens: crate::corpus::tokens(tokens),
            feats,
            score: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokens, Edit};
    use crate::features::DenseFeature;

    fn dev_one_edit() -> Corpus {
        // source "a b c", gold fixes b -> x
        let mut sent = AnnotatedSentence::new(tokens("a b c"));
        sent.gold
            .insert(0, vec![Edit::new(1, 2, tokens("x"))]);
        Corpus::new(vec![sent])
    }

    fn cand(surface: &str) -> Candidate {
        Candidate {
            tokens: tokens(surface),
            feats: FeatureVec::default(),
            score: 0.0,
        }
    }

    #[test]
    fn hyp_stats_source_copy_and_full_correction() {
        let dev = dev_one_edit();
        let mut cache = StatsCache::default();
        let stats = hyp_stats(
            &dev,
            &[vec![cand("a b c"), cand("a x c")]],
            &TuneMetric::m2(),
            &mut cache,
        )
        .unwrap();
        assert_eq!(stats[0][0], SentStats::M2(Stats3::new(0, 0, 1)));
        assert_eq!(stats[0][1], SentStats::M2(Stats3::new(1, 1, 1)));
    }

    #[test]
    fn hyp_stats_rejects_misalignment() {
        let dev = dev_one_edit();
        let mut cache = StatsCache::default();
        assert!(hyp_stats(&dev, &[], &TuneMetric::m2(), &mut cache).is_err());
    }

    #[test]
    fn cache_computes_once_per_surface() {
        let dev = dev_one_edit();
        let mut cache = StatsCache::default();
        let nbests = vec![vec![cand("a b c"), cand("a x c"), cand("a b c")]];
        hyp_stats(&dev, &nbests, &TuneMetric::m2(), &mut cache).unwrap();
        assert_eq!(cache.computed, 2);
        hyp_stats(&dev, &nbests, &TuneMetric::m2(), &mut cache).unwrap();
        assert_eq!(cache.computed, 2);
    }

    #[test]
    fn pool_merge_deduplicates_and_reports_growth() {
        let dev = dev_one_edit();
        let mut cache = StatsCache::default();
        let mut pool = TunePool::new(1);
        assert!(pool
            .merge(&dev, &[vec![cand("a b c")]], &TuneMetric::m2(), &mut cache)
            .unwrap());
        assert!(!pool
            .merge(&dev, &[vec![cand("a b c")]], &TuneMetric::m2(), &mut cache)
            .unwrap());
        assert!(pool
            .merge(&dev, &[vec![cand("a x c")]], &TuneMetric::m2(), &mut cache)
            .unwrap());
        assert_eq!(pool.size(), 2);
    }

    #[test]
    fn reference_applies_lowest_annotator() {
        let mut sent = AnnotatedSentence::new(tokens("a b"));
        sent.gold.insert(2, vec![Edit::new(0, 1, tokens("z"))]);
        sent.gold.insert(1, vec![Edit::new(0, 1, tokens("y"))]);
        assert_eq!(reference(&sent), tokens("y b"));
    }

    #[test]
    fn average_weights_normalizes_then_means() {
        let mut a = WeightVec::zeros();
        a.set(DenseFeature::PhiFwd, 2.0);
        let mut b = WeightVec::zeros();
        b.set(DenseFeature::LexFwd, 2.0);
        let avg = average_weights(&[a.clone(), b.clone()]).unwrap();
        assert!((avg.get(DenseFeature::PhiFwd) - 0.5).abs() < 1e-12);
        assert!((avg.get(DenseFeature::LexFwd) - 0.5).abs() < 1e-12);

        // permutation invariance
        let swapped = average_weights(&[b, a]).unwrap();
        assert_eq!(avg, swapped);
    }

    #[test]
    fn average_weights_sparse_zero_fill() {
        let mut a = WeightVec::zeros();
        a.set(DenseFeature::Lm, 1.0);
        a.sparse.insert("E0~del(x)".into(), 1.0);
        let b = WeightVec::zeros();
        let avg = average_weights(&[a, b]).unwrap();
        assert!((avg.sparse_weight("E0~del(x)") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn average_weights_idempotent_on_singletons() {
        let mut a = WeightVec::zeros();
        a.set(DenseFeature::Lm, 4.0);
        a.set(DenseFeature::Ld, -4.0);
        let once = average_weights(std::slice::from_ref(&a)).unwrap();
        let twice = average_weights(std::slice::from_ref(&once)).unwrap();
        assert_eq!(once, twice);
        assert!(average_weights(&[]).is_err());
    }

    #[test]
    fn pool_metric_prefers_earlier_entry_on_ties() {
        let dev = dev_one_edit();
        let mut cache = StatsCache::default();
        let mut pool = TunePool::new(1);
        pool.merge(
            &dev,
            &[vec![cand("a x c"), cand("a b c")]],
            &TuneMetric::m2(),
            &mut cache,
        )
        .unwrap();
        // identical (zero) features: the first entry, the correction, wins
        let m = pool_metric(&pool, &TuneMetric::m2(), &WeightVec::zeros());
        assert!((m - 1.0).abs() < 1e-12);
    }
}
