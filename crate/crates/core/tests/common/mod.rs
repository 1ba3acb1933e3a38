//! Independent oracles and instance generators shared by the integration
//! suites. Everything here recomputes results by brute force, avoiding the
//! library's own search code paths wherever the library result is under
//! test.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use gectune::corpus::{apply_edits, Corpus, Edit, Token};
use gectune::decoder::{build_options, DecoderConfig, GecSystem, Models};
use gectune::editops::{op_sequence, OpAlphabet};
use gectune::features::{DenseFeature, FeatureToggles, WeightVec};
use gectune::metric::{candidate_lattice, MetricConfig, Stats3};
use gectune::ngram::NGramModel;
use gectune::phrasetable::train_table;
use gectune::synth;
use gectune::tuner::{
    decode_all, hyp_stats, PoolEntry, StatsCache, StatsTotal, TuneMetric,
};

pub fn tok(s: &str) -> Token {
    Token::new(s).unwrap()
}

pub fn toks(ws: &[&str]) -> Vec<Token> {
    ws.iter().map(|w| tok(w)).collect()
}

/// Brute-force MaxMatch: enumerate every lattice path and classify its
/// edges against gold directly, tracking the one piece of path state (a
/// gold insertion may be claimed only once per source position).
pub fn m2_brute_force(
    src: &[Token],
    hyp: &[Token],
    gold: &[Edit],
    config: &MetricConfig,
) -> Stats3 {
    let lattice = candidate_lattice(src, hyp, config.max_unchanged);
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); lattice.nodes];
    for (i, e) in lattice.edges.iter().enumerate() {
        out_edges[e.from].push(i);
    }
    let sink = lattice.nodes - 1;
    let mut best: Option<(u64, u64)> = None;
    // (node, matched, proposed, insertion-used flag)
    let mut stack = vec![(0usize, 0u64, 0u64, false)];
    while let Some((node, matched, proposed, flag)) = stack.pop() {
        if node == sink {
            let cand = (matched, proposed);
            let better = match best {
                None => true,
                Some((bm, bp)) => cand.0 > bm || (cand.0 == bm && cand.1 < bp),
            };
            if better {
                best = Some(cand);
            }
            continue;
        }
        for &ei in &out_edges[node] {
            let e = &lattice.edges[ei];
            let mut m = matched;
            let mut p = proposed;
            let mut f = flag;
            if let Some(edit) = &e.edit {
                p += 1;
                if gold.iter().any(|g| g.same_correction(edit)) {
                    if edit.is_insertion() {
                        if !f {
                            m += 1;
                            f = true;
                        }
                    } else {
                        m += 1;
                    }
                }
            }
            if lattice.src_pos[e.to] > lattice.src_pos[e.from] {
                f = false;
            }
            stack.push((e.to, m, p, f));
        }
    }
    let (matched, proposed) = best.expect("lattice always has a path");
    Stats3::new(matched, proposed, gold.len() as u64)
}

const VOCAB: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

pub fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> Vec<Token> {
    (0..len)
        .map(|_| tok(VOCAB[rng.gen_range(0..VOCAB.len())]))
        .collect()
}

pub fn random_sent(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<Token> {
    let len = rng.gen_range(lo..=hi);
    random_tokens(rng, len)
}

/// Random M² instance: a source, up to three non-overlapping gold edits,
/// and a hypothesis built by applying a random subset of them and then
/// corrupting the result a little.
pub fn random_m2_instance(rng: &mut ChaCha8Rng) -> (Vec<Token>, Vec<Token>, Vec<Edit>) {
    let src_len = rng.gen_range(0..=8);
    let src = random_tokens(rng, src_len);
    let mut gold: Vec<Edit> = Vec::new();
    let mut pos = 0usize;
    for _ in 0..rng.gen_range(0..=3) {
        if pos > src.len() {
            break;
        }
        let start = rng.gen_range(pos..=src.len());
        let end = (start + rng.gen_range(0..=2)).min(src.len());
        let repl_len = rng.gen_range(0..=2);
        let repl = random_tokens(rng, repl_len);
        if end == start && repl.is_empty() {
            continue;
        }
        gold.push(Edit::new(start, end, repl));
        // leave a gap so zero-width edits cannot collide
        pos = end + 1;
        if gold.len() == 3 {
            break;
        }
    }
    let applied: Vec<Edit> = gold
        .iter()
        .filter(|_| rng.gen_bool(0.6))
        .cloned()
        .collect();
    let mut hyp = apply_edits(&src, &applied);
    for _ in 0..rng.gen_range(0..=2) {
        if hyp.is_empty() {
            break;
        }
        let i = rng.gen_range(0..hyp.len());
        match rng.gen_range(0..3) {
            0 => hyp[i] = tok(VOCAB[rng.gen_range(0..VOCAB.len())]),
            1 => {
                hyp.remove(i);
            }
            _ => hyp.insert(i, tok(VOCAB[rng.gen_range(0..VOCAB.len())])),
        }
    }
    (src, hyp, gold)
}

/// All derivations of the options in `per_start`, as (surface, score).
/// Stateful models are scored over the fully assembled derivation via
/// `score_seq`, independent of the decoder's incremental bookkeeping.
pub fn enumerate_derivations(
    sentence_len: usize,
    per_start: &[Vec<gectune::decoder::TranslationOption>],
    models: &Models,
    weights: &WeightVec,
    config: &DecoderConfig,
) -> Vec<(Vec<Token>, f64)> {
    use gectune::features::DenseFeature;
    fn rec(
        pos: usize,
        n: usize,
        per_start: &[Vec<gectune::decoder::TranslationOption>],
        acc_tgt: &mut Vec<Token>,
        acc_ops: &mut Vec<Token>,
        acc_feats: &mut gectune::features::FeatureVec,
        out: &mut Vec<(Vec<Token>, Vec<Token>, gectune::features::FeatureVec)>,
    ) {
        if pos == n {
            out.push((acc_tgt.clone(), acc_ops.clone(), acc_feats.clone()));
            return;
        }
        for opt in &per_start[pos] {
            let tgt_len = opt.tgt.len();
            let ops_len = opt.ops.len();
            acc_tgt.extend(opt.tgt.iter().cloned());
            acc_ops.extend(opt.ops.iter().cloned());
            let before = acc_feats.clone();
            *acc_feats += &opt.feats;
            rec(opt.span.1, n, per_start, acc_tgt, acc_ops, acc_feats, out);
            acc_tgt.truncate(acc_tgt.len() - tgt_len);
            acc_ops.truncate(acc_ops.len() - ops_len);
            *acc_feats = before;
        }
    }
    let mut raw = Vec::new();
    rec(
        0,
        sentence_len,
        per_start,
        &mut Vec::new(),
        &mut Vec::new(),
        &mut gectune::features::FeatureVec::default(),
        &mut raw,
    );
    let t = config.toggles;
    raw.into_iter()
        .map(|(tgt, ops, mut feats)| {
            if t.enabled(DenseFeature::Lm) {
                feats.set(DenseFeature::Lm, models.lm.unwrap().score_seq(&tgt));
            }
            if t.enabled(DenseFeature::ClassLm) {
                let classes = models.classmap.unwrap().project(&tgt);
                feats.set(
                    DenseFeature::ClassLm,
                    models.class_lm.unwrap().score_seq(&classes),
                );
            }
            if t.enabled(DenseFeature::Osm) {
                feats.set(DenseFeature::Osm, models.osm.unwrap().score_seq(&ops));
            }
            let score = weights.dot(&feats);
            (tgt, score)
        })
        .collect()
}

/// Exact line-search oracle: evaluate the pooled corpus metric on a dense γ
/// grid spanning every pairwise crossing point, returning (best γ, metric).
/// Cells are sampled at their midpoints so a probe never lands exactly on
/// an argmax breakpoint (a measure-zero tie the interval-based search never
/// returns). Per-sentence argmax ties go to the earlier pool entry, as in
/// the library.
pub fn grid_line_search(
    pool: &[Vec<PoolEntry>],
    metric: &TuneMetric,
    weights: &WeightVec,
    direction: &WeightVec,
    step: f64,
) -> (f64, f64) {
    let lines: Vec<Vec<(f64, f64)>> = pool
        .iter()
        .map(|sent| {
            sent.iter()
                .map(|e| (weights.dot(&e.feats), direction.dot(&e.feats)))
                .collect()
        })
        .collect();
    // grid range from brute-force pairwise crossings
    let mut reach = 1.0f64;
    for sent in &lines {
        for i in 0..sent.len() {
            for j in (i + 1)..sent.len() {
                let (ai, bi) = sent[i];
                let (aj, bj) = sent[j];
                if bi != bj {
                    reach = reach.max(((ai - aj) / (bj - bi)).abs() + 1.0);
                }
            }
        }
    }
    let metric_at = |g: f64| -> f64 {
        let mut total = StatsTotal::zero(metric);
        for (sid, sent) in lines.iter().enumerate() {
            if sent.is_empty() {
                continue;
            }
            let mut best = 0;
            for i in 1..sent.len() {
                if sent[i].0 + g * sent[i].1 > sent[best].0 + g * sent[best].1 {
                    best = i;
                }
            }
            total.add(&pool[sid][best].stats);
        }
        total.metric(metric)
    };
    let steps = (2.0 * reach / step).ceil() as i64;
    let mut best = (f64::NEG_INFINITY, 0.0f64);
    for k in 0..steps {
        let g = -reach + (k as f64 + 0.5) * step;
        let m = metric_at(g);
        if m > best.0 || (m == best.0 && g.abs() < best.1.abs()) {
            best = (m, g);
        }
    }
    (best.1, best.0)
}

/// Center of the grid cell that contains `gamma`, for the same grid that
/// [`grid_line_search`] scans.
pub fn grid_cell_center(pool_reach_gamma: f64, reach: f64, step: f64) -> f64 {
    let k = ((pool_reach_gamma + reach) / step - 0.5).round();
    -reach + (k + 0.5) * step
}

/// The crossing-derived grid half-range used by [`grid_line_search`].
pub fn grid_reach(pool: &[Vec<PoolEntry>], weights: &WeightVec, direction: &WeightVec) -> f64 {
    let mut reach = 1.0f64;
    for sent in pool {
        let lines: Vec<(f64, f64)> = sent
            .iter()
            .map(|e| (weights.dot(&e.feats), direction.dot(&e.feats)))
            .collect();
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let (ai, bi) = lines[i];
                let (aj, bj) = lines[j];
                if bi != bj {
                    reach = reach.max(((ai - aj) / (bj - bi)).abs() + 1.0);
                }
            }
        }
    }
    reach
}

/// Evaluate the pooled corpus metric at one γ, with the same tie rule.
pub fn pool_metric_at(
    pool: &[Vec<PoolEntry>],
    metric: &TuneMetric,
    weights: &WeightVec,
    direction: &WeightVec,
    gamma: f64,
) -> f64 {
    let mut total = StatsTotal::zero(metric);
    for sent in pool {
        if sent.is_empty() {
            continue;
        }
        let mut best = 0;
        let score = |e: &PoolEntry| weights.dot(&e.feats) + gamma * direction.dot(&e.feats);
        for i in 1..sent.len() {
            if score(&sent[i]) > score(&sent[best]) {
                best = i;
            }
        }
        total.add(&sent[best].stats);
    }
    total.metric(metric)
}

/// Build per-start options for a random tiny decoding instance.
pub fn random_decoder_options(
    sentence: &[Token],
    models: &Models,
    config: &DecoderConfig,
) -> Vec<Vec<gectune::decoder::TranslationOption>> {
    build_options(sentence, models, config).expect("valid random instance")
}

/// Train a full correction system from an annotated corpus: phrase table
/// and language model always, class LM and operation-sequence model only
/// when the toggles ask for them.
pub fn build_gec_system(
    train: &Corpus,
    toggles: FeatureToggles,
    beam: usize,
    k_best: usize,
) -> GecSystem {
    let pairs = train.pairs();
    let (_, _, table) = train_table(&pairs, 3, 3).expect("trainable corpus");
    let corrected: Vec<Vec<Token>> = pairs.iter().map(|(_, t)| t.clone()).collect();
    let lm = toggles
        .enabled(DenseFeature::Lm)
        .then(|| NGramModel::train(&corrected, 3, None).expect("lm"));
    let (class_lm, classmap) = if toggles.enabled(DenseFeature::ClassLm) {
        let cm = synth::class_map();
        let projected: Vec<Vec<Token>> = corrected.iter().map(|s| cm.project(s)).collect();
        (
            Some(NGramModel::train(&projected, 3, None).expect("class lm")),
            Some(cm),
        )
    } else {
        (None, None)
    };
    let osm = toggles.enabled(DenseFeature::Osm).then(|| {
        let seqs: Vec<Vec<Token>> = pairs
            .iter()
            .map(|(s, t)| {
                op_sequence(s, t, OpAlphabet::Plain)
                    .iter()
                    .map(|o| tok(o))
                    .collect()
            })
            .collect();
        NGramModel::train(&seqs, 3, None).expect("osm")
    });
    GecSystem {
        table,
        lm,
        class_lm,
        osm,
        classmap,
        config: DecoderConfig {
            beam,
            k_best,
            toggles,
            ..DecoderConfig::default()
        },
    }
}

/// Corpus M² of a system's 1-best output under the given weights.
pub fn corpus_m2(system: &GecSystem, corpus: &Corpus, weights: &WeightVec) -> f64 {
    let metric = TuneMetric::m2();
    let nbests = decode_all(system, corpus, weights, 1).expect("decode");
    let mut cache = StatsCache::default();
    let stats = hyp_stats(corpus, &nbests, &metric, &mut cache).expect("stats");
    let mut total = StatsTotal::zero(&metric);
    for sent in &stats {
        total.add(&sent[0]);
    }
    total.metric(&metric)
}
