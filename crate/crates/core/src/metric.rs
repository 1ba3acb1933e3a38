//! Correction metrics: the MaxMatch (M2) edit F-score and BLEU.
//!
//! M2 scores a hypothesis against gold edits by building an edit lattice
//! over the Levenshtein alignment between source and hypothesis and picking
//! the path through it that matches as many gold edits as possible,
//! breaking ties in favour of fewer proposed edits. Precision counts the
//! edits on that path, so the scorer always gives the hypothesis the most
//! charitable reading the alignment allows.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use crate::corpus::{Corpus, Edit, Token};
use crate::editops::{lev_align, AlignOp};
use crate::errors::{Error, Result};

/// Sufficient statistics of the edit F-score: matched, proposed and gold
/// edit counts. Summable across sentences.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Stats3 {
    pub correct: u64,
    pub proposed: u64,
    pub gold: u64,
}

impl Stats3 {
    pub fn new(correct: u64, proposed: u64, gold: u64) -> Self {
        Stats3 {
            correct,
            proposed,
            gold,
        }
    }
}

impl Add for Stats3 {
    type Output = Stats3;
    fn add(self, rhs: Stats3) -> Stats3 {
        Stats3 {
            correct: self.correct + rhs.correct,
            proposed: self.proposed + rhs.proposed,
            gold: self.gold + rhs.gold,
        }
    }
}

impl AddAssign for Stats3 {
    fn add_assign(&mut self, rhs: Stats3) {
        *self = *self + rhs;
    }
}

impl Sub for Stats3 {
    type Output = Stats3;
    fn sub(self, rhs: Stats3) -> Stats3 {
        Stats3 {
            correct: self.correct - rhs.correct,
            proposed: self.proposed - rhs.proposed,
            gold: self.gold - rhs.gold,
        }
    }
}

impl SubAssign for Stats3 {
    fn sub_assign(&mut self, rhs: Stats3) {
        *self = *self - rhs;
    }
}

/// How the scorer picks an annotator for multi-annotator sentences.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum AnnotatorMode {
    /// Best sentence-level F per sentence in isolation.
    #[default]
    PerSentence,
    /// Best cumulative F given the running corpus totals, in sentence order.
    Cumulative,
}

#[derive(Clone, Copy, Debug)]
pub struct MetricConfig {
    pub beta: f64,
    pub max_unchanged: usize,
    pub annotator_mode: AnnotatorMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            beta: 0.5,
            max_unchanged: 2,
            annotator_mode: AnnotatorMode::PerSentence,
        }
    }
}

/// F over real-valued precision and recall. Zero when both are zero.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * p * r / denom
}

/// Precision, recall and F from real-valued counts. Empty proposals give
/// precision 1, empty gold gives recall 1.
pub fn prf_real(correct: f64, proposed: f64, gold: f64, beta: f64) -> (f64, f64, f64) {
    let p = if proposed == 0.0 { 1.0 } else { correct / proposed };
    let r = if gold == 0.0 { 1.0 } else { correct / gold };
    (p, r, f_beta(p, r, beta))
}

/// Precision, recall and F from edit statistics.
pub fn prf(stats: Stats3, beta: f64) -> (f64, f64, f64) {
    prf_real(
        stats.correct as f64,
        stats.proposed as f64,
        stats.gold as f64,
        beta,
    )
}

/// One edge of the edit lattice. `edit: None` is a traversal over a matched
/// token; `Some` proposes the carried edit.
#[derive(Clone, Debug)]
pub struct LatticeEdge {
    pub from: usize,
    pub to: usize,
    pub edit: Option<Edit>,
}

/// Edit lattice over a source/hypothesis alignment. Nodes are positions
/// between alignment operations; every source-to-sink path applies a set of
/// non-overlapping edits that rewrite the source into the hypothesis.
#[derive(Clone, Debug)]
pub struct EditLattice {
    pub nodes: usize,
    pub edges: Vec<LatticeEdge>,
    /// Source-token position at each node.
    pub src_pos: Vec<usize>,
}

/// Build the candidate edit lattice for a hypothesis.
///
/// Base edges mirror the alignment operations; additional edges merge
/// consecutive operations into larger span edits as long as they begin and
/// end with a non-match and contain at most `max_unchanged` matches inside.
pub fn candidate_lattice(src: &[Token], hyp: &[Token], max_unchanged: usize) -> EditLattice {
    let (_, path) = lev_align(src, hyp);
    let len = path.len();
    let mut src_pos = Vec::with_capacity(len + 1);
    let mut pos = 0;
    src_pos.push(0);
    for op in &path {
        pos += op.src_width();
        src_pos.push(pos);
    }

    let replacement_of = |window: &[AlignOp]| -> Vec<Token> {
        let mut repl = Vec::new();
        for op in window {
            match *op {
                AlignOp::Match { tgt, .. }
                | AlignOp::Subst { tgt, .. }
                | AlignOp::Ins { tgt, .. } => repl.push(hyp[tgt].clone()),
                AlignOp::Del { .. } => {}
            }
        }
        repl
    };

    let mut edges = Vec::new();
    for (t, op) in path.iter().enumerate() {
        let edit = if op.is_match() {
            None
        } else {
            Some(Edit::new(
                src_pos[t],
                src_pos[t + 1],
                replacement_of(std::slice::from_ref(op)),
            ))
        };
        edges.push(LatticeEdge {
            from: t,
            to: t + 1,
            edit,
        });
    }
    for u in 0..len {
        if path[u].is_match() {
            continue;
        }
        let mut matches_inside = 0;
        for v in (u + 2)..=len {
            // op v-2 became interior once v moved past it
            if v - 2 > u && path[v - 2].is_match() {
                matches_inside += 1;
                if matches_inside > max_unchanged {
                    break;
                }
            }
            if path[v - 1].is_match() {
                continue;
            }
            let window = &path[u..v];
            edges.push(LatticeEdge {
                from: u,
                to: v,
                edit: Some(Edit::new(src_pos[u], src_pos[v], replacement_of(window))),
            });
        }
    }
    EditLattice {
        nodes: len + 1,
        edges,
        src_pos,
    }
}

/// Score one hypothesis against one gold edit set: the lattice path with the
/// most gold matches, ties broken by fewer proposed edits.
pub fn max_match_sentence(
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

    // Edge classification against gold. A gold edit can match at most once
    // per path; the only repeatable case is a zero-width edge, guarded by a
    // "gold insertion at this source point already used" flag in the DP.
    #[derive(Clone, Copy, PartialEq)]
    enum Hit {
        None,
        Span,
        Insertion,
    }
    let hit: Vec<Hit> = lattice
        .edges
        .iter()
        .map(|e| match &e.edit {
            None => Hit::None,
            Some(edit) => {
                if gold.iter().any(|g| g.same_correction(edit)) {
                    if edit.is_insertion() {
                        Hit::Insertion
                    } else {
                        Hit::Span
                    }
                } else {
                    Hit::None
                }
            }
        })
        .collect();

    // dp[node][flag] = (max matched, min proposed) from node to sink
    const WORST: (i64, i64) = (i64::MIN, i64::MAX);
    let mut dp = vec![[WORST; 2]; lattice.nodes];
    dp[lattice.nodes - 1] = [(0, 0), (0, 0)];
    for t in (0..lattice.nodes - 1).rev() {
        for flag in 0..2 {
            let mut best = WORST;
            for &ei in &out_edges[t] {
                let e = &lattice.edges[ei];
                let proposed = e.edit.is_some() as i64;
                let (gain, next_flag) = match hit[ei] {
                    Hit::None => (0, flag != 0),
                    Hit::Span => (1, flag != 0),
                    Hit::Insertion => {
                        if flag != 0 {
                            (0, true)
                        } else {
                            (1, true)
                        }
                    }
                };
                let advanced = lattice.src_pos[e.to] > lattice.src_pos[e.from];
                let nf = if advanced { false } else { next_flag };
                let (m, p) = dp[e.to][nf as usize];
                let cand = (m + gain, p + proposed);
                if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                    best = cand;
                }
            }
            dp[t][flag] = best;
        }
    }

    let (matched, proposed) = dp[0][0];
    Stats3::new(matched as u64, proposed as u64, gold.len() as u64)
}

/// Pick the annotator index that maximizes F, either of the candidate alone
/// or of `running + candidate`. Ties go to the lower index.
pub fn choose_annotator(per_annotator: &[Stats3], running: Stats3, config: &MetricConfig) -> usize {
    let mut best = 0;
    let mut best_f = f64::MIN;
    for (i, &stats) in per_annotator.iter().enumerate() {
        let eval = match config.annotator_mode {
            AnnotatorMode::PerSentence => stats,
            AnnotatorMode::Cumulative => running + stats,
        };
        let (_, _, f) = prf(eval, config.beta);
        if f > best_f {
            best_f = f;
            best = i;
        }
    }
    best
}

/// Per-sentence outcome inside an [`M2Report`].
#[derive(Clone, Copy, Debug)]
pub struct SentenceScore {
    pub stats: Stats3,
    pub annotator: u32,
}

#[derive(Clone, Debug)]
pub struct M2Report {
    pub beta: f64,
    pub totals: Stats3,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub per_sentence: Vec<SentenceScore>,
}

impl M2Report {
    /// The three-line report format.
    pub fn render(&self) -> String {
        format!(
            "Precision : {:.4}\nRecall : {:.4}\nF_{} : {:.4}\n",
            self.precision, self.recall, self.beta, self.f
        )
    }

    /// Per-sentence TSV: `idx correct proposed gold annotator`.
    pub fn render_per_sentence(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.per_sentence.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                i, s.stats.correct, s.stats.proposed, s.stats.gold, s.annotator
            ));
        }
        out
    }
}

/// Score a hypothesis corpus against gold annotations.
pub fn corpus_m2(corpus: &Corpus, hyps: &[Vec<Token>], config: &MetricConfig) -> Result<M2Report> {
    if corpus.len() != hyps.len() {
        return Err(Error::invalid(format!(
            "corpus has {} sentences but {} hypotheses were supplied",
            corpus.len(),
            hyps.len()
        )));
    }
    let mut running = Stats3::default();
    let mut per_sentence = Vec::with_capacity(hyps.len());
    for (sent, hyp) in corpus.sentences.iter().zip(hyps) {
        let annotators: Vec<(u32, &[Edit])> = if sent.gold.is_empty() {
            vec![(0, &[][..])]
        } else {
            sent.gold.iter().map(|(&id, e)| (id, e.as_slice())).collect()
        };
        let stats: Vec<Stats3> = annotators
            .iter()
            .map(|(_, gold)| max_match_sentence(&sent.source, hyp, gold, config))
            .collect();
        let pick = choose_annotator(&stats, running, config);
        running += stats[pick];
        per_sentence.push(SentenceScore {
            stats: stats[pick],
            annotator: annotators[pick].0,
        });
    }
    let (precision, recall, f) = prf(running, config.beta);
    Ok(M2Report {
        beta: config.beta,
        totals: running,
        precision,
        recall,
        f,
        per_sentence,
    })
}

pub const BLEU_ORDER: usize = 4;

/// Per-sentence BLEU sufficient statistics, summable to corpus level.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct BleuStats {
    pub matched: [u64; BLEU_ORDER],
    pub total: [u64; BLEU_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl Add for BleuStats {
    type Output = BleuStats;
    fn add(self, rhs: BleuStats) -> BleuStats {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: BleuStats) {
        for k in 0..BLEU_ORDER {
            self.matched[k] += rhs.matched[k];
            self.total[k] += rhs.total[k];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

impl SubAssign for BleuStats {
    fn sub_assign(&mut self, rhs: BleuStats) {
        for k in 0..BLEU_ORDER {
            self.matched[k] -= rhs.matched[k];
            self.total[k] -= rhs.total[k];
        }
        self.hyp_len -= rhs.hyp_len;
        self.ref_len -= rhs.ref_len;
    }
}

/// Clipped n-gram match statistics for one sentence pair.
pub fn bleu_sentence_stats(hyp: &[Token], refr: &[Token]) -> BleuStats {
    let mut stats = BleuStats {
        hyp_len: hyp.len() as u64,
        ref_len: refr.len() as u64,
        ..BleuStats::default()
    };
    for k in 1..=BLEU_ORDER {
        if hyp.len() < k {
            break;
        }
        let mut ref_counts: HashMap<&[Token], u64> = HashMap::new();
        if refr.len() >= k {
            for w in refr.windows(k) {
                *ref_counts.entry(w).or_insert(0) += 1;
            }
        }
        let mut hyp_counts: HashMap<&[Token], u64> = HashMap::new();
        for w in hyp.windows(k) {
            *hyp_counts.entry(w).or_insert(0) += 1;
        }
        stats.total[k - 1] = (hyp.len() + 1 - k) as u64;
        stats.matched[k - 1] = hyp_counts
            .iter()
            .map(|(w, &c)| c.min(ref_counts.get(w).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

fn brevity_penalty(stats: &BleuStats) -> f64 {
    if stats.hyp_len == 0 {
        return if stats.ref_len == 0 { 1.0 } else { 0.0 };
    }
    if stats.hyp_len >= stats.ref_len {
        1.0
    } else {
        (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
    }
}

/// Unsmoothed corpus BLEU. Orders with no n-grams at all are skipped, so
/// very short corpora are still scored over the orders they support.
pub fn corpus_bleu(stats: &BleuStats) -> f64 {
    let mut log_sum = 0.0;
    let mut used = 0;
    for k in 0..BLEU_ORDER {
        if stats.total[k] == 0 {
            continue;
        }
        if stats.matched[k] == 0 {
            return 0.0;
        }
        log_sum += (stats.matched[k] as f64 / stats.total[k] as f64).ln();
        used += 1;
    }
    if used == 0 {
        return if stats.hyp_len == stats.ref_len { 1.0 } else { 0.0 };
    }
    brevity_penalty(stats) * (log_sum / used as f64).exp()
}

/// Sentence BLEU with additive smoothing on the higher-order precisions.
/// The unigram precision stays unsmoothed so a hypothesis sharing nothing
/// with the reference still scores zero.
pub fn sentence_bleu(stats: &BleuStats, eps: f64) -> f64 {
    let mut log_sum = 0.0;
    let mut used = 0;
    for k in 0..BLEU_ORDER {
        if stats.total[k] == 0 {
            continue;
        }
        let p = if k == 0 {
            stats.matched[0] as f64 / stats.total[0] as f64
        } else {
            (stats.matched[k] as f64 + eps) / (stats.total[k] as f64 + eps)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
        used += 1;
    }
    if used == 0 {
        return if stats.hyp_len == stats.ref_len { 1.0 } else { 0.0 };
    }
    brevity_penalty(stats) * (log_sum / used as f64).exp()
}

/// Corpus BLEU over aligned hypothesis/reference lists, plus the
/// per-sentence statistics.
pub fn bleu(hyps: &[Vec<Token>], refs: &[Vec<Token>]) -> Result<(f64, Vec<BleuStats>)> {
    if hyps.len() != refs.len() {
        return Err(Error::invalid(format!(
            "{} hypotheses against {} references",
            hyps.len(),
            refs.len()
        )));
    }
    let per: Vec<BleuStats> = hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| bleu_sentence_stats(h, r))
        .collect();
    let mut total = BleuStats::default();
    for s in &per {
        total += *s;
    }
    Ok((corpus_bleu(&total), per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens;

    #[test]
    fn f_beta_known_points() {
        assert!((f_beta(0.5, 0.5, 0.5) - 0.5).abs() < 1e-12);
        assert_eq!(f_beta(0.0, 0.0, 0.5), 0.0);
        assert_eq!(f_beta(1.0, 0.0, 0.5), 0.0);
    }

    #[test]
    fn prf_empty_conventions() {
        assert_eq!(prf(Stats3::new(0, 0, 5), 0.5), (1.0, 0.0, 0.0));
        let (p, r, f) = prf(Stats3::new(0, 3, 0), 0.5);
        assert_eq!((p, r), (0.0, 1.0));
        assert_eq!(f, 0.0);
        assert_eq!(prf(Stats3::new(0, 0, 0), 0.5), (1.0, 1.0, 1.0));
    }

    #[test]
    fn stats_sum() {
        let s = Stats3::new(1, 2, 2) + Stats3::new(1, 2, 2);
        assert_eq!(s, Stats3::new(2, 4, 4));
        let (p, r, f) = prf(s, 0.5);
        assert!((p - 0.5).abs() < 1e-12);
        assert!((r - 0.5).abs() < 1e-12);
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lattice_merges_run_into_single_edit() {
        let lat = candidate_lattice(&tokens("a lot of"), &tokens("many"), 2);
        let target = Edit::new(0, 3, tokens("many"));
        assert!(lat
            .edges
            .iter()
            .any(|e| e.edit.as_ref().is_some_and(|ed| ed.same_correction(&target))));
    }

    #[test]
    fn lattice_single_subst() {
        let lat = candidate_lattice(&tokens("He go"), &tokens("He goes"), 2);
        let edits: Vec<&Edit> = lat.edges.iter().filter_map(|e| e.edit.as_ref()).collect();
        assert_eq!(edits.len(), 1);
        assert!(edits[0].same_correction(&Edit::new(1, 2, tokens("goes"))));
    }

    #[test]
    fn max_match_multi_token_gold() {
        let gold = [Edit::new(0, 3, tokens("many"))];
        let stats = max_match_sentence(
            &tokens("a lot of people"),
            &tokens("many people"),
            &gold,
            &MetricConfig::default(),
        );
        assert_eq!(stats, Stats3::new(1, 1, 1));
    }

    #[test]
    fn max_match_identity_hypothesis() {
        let gold = [Edit::new(0, 1, tokens("x"))];
        let stats = max_match_sentence(
            &tokens("a b"),
            &tokens("a b"),
            &gold,
            &MetricConfig::default(),
        );
        assert_eq!(stats, Stats3::new(0, 0, 1));
    }

    #[test]
    fn max_match_respects_window_limit() {
        // gold spans three matches; with max_unchanged 2 the merge is allowed
        // only because just two matches are interior
        let gold = [Edit::new(0, 4, tokens("x b c y"))];
        let cfg = MetricConfig::default();
        let stats = max_match_sentence(&tokens("a b c d"), &tokens("x b c y"), &gold, &cfg);
        assert_eq!(stats, Stats3::new(1, 1, 1));
        let tight = MetricConfig {
            max_unchanged: 1,
            ..cfg
        };
        let stats = max_match_sentence(&tokens("a b c d"), &tokens("x b c y"), &gold, &tight);
        assert_eq!(stats, Stats3::new(0, 2, 1));
    }

    #[test]
    fn annotator_choice_prefers_higher_f() {
        let a = Stats3::new(0, 1, 1);
        let b = Stats3::new(1, 1, 1);
        let cfg = MetricConfig::default();
        assert_eq!(choose_annotator(&[a, b], Stats3::default(), &cfg), 1);
        // tie goes to the lower index
        assert_eq!(choose_annotator(&[b, b], Stats3::default(), &cfg), 0);
    }

    #[test]
    fn cumulative_mode_uses_running_totals() {
        let cfg = MetricConfig {
            annotator_mode: AnnotatorMode::Cumulative,
            ..MetricConfig::default()
        };
        let running = Stats3::new(10, 10, 30);
        // alone, b wins on sentence F; with the precision-heavy running
        // totals, a (which proposes nothing) keeps cumulative F higher
        let a = Stats3::new(0, 0, 3);
        let b = Stats3::new(1, 9, 3);
        assert_eq!(choose_annotator(&[b, a], running, &cfg), 1);
    }

    #[test]
    fn corpus_report_identity_all_sentences() {
        let m2 = concat!(
            "S a b\n",
            "A 0 1|||T|||x|||REQUIRED|||-NONE-|||0\n",
            "\n",
            "S c d\n",
            "\n"
        );
        let corpus = crate::corpus::parse_m2(m2).unwrap();
        let hyps = vec![tokens("a b"), tokens("c d")];
        let report = corpus_m2(&corpus, &hyps, &MetricConfig::default()).unwrap();
        assert_eq!(report.totals, Stats3::new(0, 0, 1));
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 0.0);
        assert_eq!(report.f, 0.0);
        assert!(report.render().starts_with("Precision : 1.0000\n"));
        assert!(report.render().contains("F_0.5 : 0.0000"));
    }

    #[test]
    fn report_counts_mismatch() {
        let corpus = crate::corpus::parse_m2("S a\n\n").unwrap();
        assert!(corpus_m2(&corpus, &[], &MetricConfig::default()).is_err());
    }

    #[test]
    fn bleu_identity_is_one() {
        let hyps = vec![tokens("a b c d e")];
        let (score, _) = bleu(&hyps, &hyps.clone()).unwrap();
        assert_eq!(score, 1.0);
    }

    #[test]
    fn bleu_disjoint_is_zero() {
        let (score, _) = bleu(&[tokens("x y z w")], &[tokens("a b c d")]).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn bleu_smoothing_rescues_missing_fourgram() {
        let stats = bleu_sentence_stats(&tokens("a b c d"), &tokens("a b c e"));
        assert_eq!(stats.matched, [3, 2, 1, 0]);
        assert_eq!(stats.total, [4, 3, 2, 1]);
        assert_eq!(corpus_bleu(&stats), 0.0);
        assert!(sentence_bleu(&stats, 0.1) > 0.0);
    }

    #[test]
    fn bleu_brevity_penalty_applies() {
        let stats = bleu_sentence_stats(&tokens("a b"), &tokens("a b c d"));
        // p1 = 2/2, p2 = 1/1, orders 3 and 4 unsupported; lengths 2 vs 4
        let got = corpus_bleu(&stats);
        assert!((got - (-1.0f64).exp()).abs() < 1e-12, "{got}");
    }
}
