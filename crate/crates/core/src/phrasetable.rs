//! Translation-model training: IBM Model 1 expectation-maximization,
//! Viterbi alignment with grow-diag-final symmetrization, consistent
//! phrase-pair extraction and maximum-likelihood phrase scoring.
//!
//! Correction corpora are near-diagonal (source and target are mostly the
//! same sentence), so Model 1 alignment is enough; no distortion model is
//! trained anywhere in the pipeline.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::corpus::Token;
use crate::errors::{Error, Result};
use crate::util::{fmt7, quantize7};

/// Artificial source-side token that absorbs target words with no good
/// lexical anchor.
pub const NULL: &str = "NULL";

/// Lexical translation table t(tgt | src).
#[derive(Clone, Debug, PartialEq)]
pub struct LexTable {
    t: BTreeMap<Token, BTreeMap<Token, f64>>,
}

impl LexTable {
    /// Assemble a table from explicit (src, tgt, prob) rows.
    pub fn from_rows(rows: impl IntoIterator<Item = (Token, Token, f64)>) -> Self {
        let mut t: BTreeMap<Token, BTreeMap<Token, f64>> = BTreeMap::new();
        for (s, w, p) in rows {
            t.entry(s).or_default().insert(w, p);
        }
        LexTable { t }
    }

    pub fn prob(&self, src: &Token, tgt: &Token) -> f64 {
        self.t
            .get(src)
            .and_then(|row| row.get(tgt))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn null_prob(&self, tgt: &Token) -> f64 {
        self.prob(&Token::new(NULL).unwrap(), tgt)
    }

    /// Rows as (src, tgt, prob) triples in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&Token, &Token, f64)> {
        self.t
            .iter()
            .flat_map(|(s, row)| row.iter().map(move |(t, &p)| (s, t, p)))
    }
}

fn with_null(src: &[Token]) -> Vec<Token> {
    let mut v = Vec::with_capacity(src.len() + 1);
    v.push(Token::new(NULL).unwrap());
    v.extend_from_slice(src);
    v
}

/// Train t(tgt | src) with Model 1 EM. The source side of every pair gets a
/// `NULL` token prepended. Initialization is uniform over the target words
/// each source word co-occurs with, so `iters = 0` returns that uniform
/// table unchanged.
pub fn model1_train(pairs: &[(Vec<Token>, Vec<Token>)], iters: usize) -> Result<LexTable> {
    if pairs.is_empty() {
        return Err(Error::invalid("cannot train an alignment model on an empty corpus"));
    }
    let mut candidates: BTreeMap<Token, BTreeSet<Token>> = BTreeMap::new();
    for (src, tgt) in pairs {
        for s in with_null(src) {
            let row = candidates.entry(s).or_default();
            for t in tgt {
                row.insert(t.clone());
            }
        }
    }
    let mut table: BTreeMap<Token, BTreeMap<Token, f64>> = BTreeMap::new();
    for (s, row) in &candidates {
        if row.is_empty() {
            continue;
        }
        let p = 1.0 / row.len() as f64;
        table.insert(s.clone(), row.iter().map(|t| (t.clone(), p)).collect());
    }

    for _ in 0..iters {
        // per-pair expected counts, merged in corpus order so the result
        // does not depend on thread scheduling
        let partials: Vec<BTreeMap<(Token, Token), f64>> = pairs
            .par_iter()
            .map(|(src, tgt)| {
                let src = with_null(src);
                let mut local: BTreeMap<(Token, Token), f64> = BTreeMap::new();
                for t in tgt {
                    let denom: f64 = src.iter().map(|s| table[s][t]).sum();
                    for s in &src {
                        *local.entry((s.clone(), t.clone())).or_insert(0.0) +=
                            table[s][t] / denom;
                    }
                }
                local
            })
            .collect();
        let mut counts: BTreeMap<Token, BTreeMap<Token, f64>> = BTreeMap::new();
        for local in partials {
            for ((s, t), c) in local {
                *counts.entry(s).or_default().entry(t).or_insert(0.0) += c;
            }
        }
        for (s, row) in &mut counts {
            let total: f64 = row.values().sum();
            for c in row.values_mut() {
                *c /= total;
            }
            table.insert(s.clone(), std::mem::take(row));
        }
    }
    Ok(LexTable { t: table })
}

/// Model 1 corpus log-likelihood (natural log), including the uniform
/// length factor. Non-decreasing over EM iterations.
pub fn corpus_log_likelihood(pairs: &[(Vec<Token>, Vec<Token>)], lex: &LexTable) -> f64 {
    let mut ll = 0.0;
    for (src, tgt) in pairs {
        let src = with_null(src);
        for t in tgt {
            let p: f64 = src.iter().map(|s| lex.prob(s, t)).sum();
            ll += (p / src.len() as f64).ln();
        }
    }
    ll
}

/// Viterbi Model 1 alignment: for each target word, the best source
/// position, or `None` for NULL. Ties go to the leftmost source position;
/// NULL wins only when strictly better than every real position.
pub fn viterbi_align(src: &[Token], tgt: &[Token], lex: &LexTable) -> Vec<Option<usize>> {
    let null = Token::new(NULL).unwrap();
    tgt.iter()
        .map(|t| {
            let mut best = 0;
            let mut best_p = f64::NEG_INFINITY;
            for (i, s) in src.iter().enumerate() {
                let p = lex.prob(s, t);
                if p > best_p {
                    best_p = p;
                    best = i;
                }
            }
            if src.is_empty() || lex.prob(&null, t) > best_p {
                None
            } else {
                Some(best)
            }
        })
        .collect()
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Symmetrize two directional Viterbi alignments with grow-diag-final.
///
/// `fwd` is t(tgt|src) trained on (src, tgt); `rev` is t(src|tgt) trained
/// on the swapped corpus. Points are (source position, target position).
pub fn sym_align(
    src: &[Token],
    tgt: &[Token],
    fwd: &LexTable,
    rev: &LexTable,
) -> BTreeSet<(usize, usize)> {
    let a_fwd: BTreeSet<(usize, usize)> = viterbi_align(src, tgt, fwd)
        .into_iter()
        .enumerate()
        .filter_map(|(j, i)| i.map(|i| (i, j)))
        .collect();
    let a_rev: BTreeSet<(usize, usize)> = viterbi_align(tgt, src, rev)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let union: BTreeSet<(usize, usize)> = a_fwd.union(&a_rev).cloned().collect();
    let mut a: BTreeSet<(usize, usize)> = a_fwd.intersection(&a_rev).cloned().collect();
    let mut src_cov: BTreeSet<usize> = a.iter().map(|&(i, _)| i).collect();
    let mut tgt_cov: BTreeSet<usize> = a.iter().map(|&(_, j)| j).collect();

    // grow: repeatedly admit union points adjacent (8-neighborhood) to the
    // current alignment whenever one of their words is still unaligned
    loop {
        let mut added = false;
        for (i, j) in a.clone() {
            for (di, dj) in NEIGHBORS {
                let ni = i as isize + di;
                let nj = j as isize + dj;
                if ni < 0 || nj < 0 {
                    continue;
                }
                let p = (ni as usize, nj as usize);
                if !union.contains(&p) || a.contains(&p) {
                    continue;
                }
                if !src_cov.contains(&p.0) || !tgt_cov.contains(&p.1) {
                    a.insert(p);
                    src_cov.insert(p.0);
                    tgt_cov.insert(p.1);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    // final: sweep the directional alignments, forward first
    for points in [&a_fwd, &a_rev] {
        for &(i, j) in points.iter() {
            if !src_cov.contains(&i) || !tgt_cov.contains(&j) {
                a.insert((i, j));
                src_cov.insert(i);
                tgt_cov.insert(j);
            }
        }
    }
    a
}

/// A phrase pair extracted from one aligned sentence pair. Spans are
/// half-open over the sentence; alignment points are phrase-local.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedPhrase {
    pub src_span: (usize, usize),
    pub tgt_span: (usize, usize),
    pub src: Vec<Token>,
    pub tgt: Vec<Token>,
    pub alignment: Vec<(u16, u16)>,
}

/// Whether the box (src_span × tgt_span) is consistent with the alignment:
/// no point may pair a word inside the box with one outside it, and at
/// least one point must lie inside.
pub fn is_consistent(
    align: &BTreeSet<(usize, usize)>,
    src_span: (usize, usize),
    tgt_span: (usize, usize),
) -> bool {
    let mut inside = false;
    for &(i, j) in align {
        let src_in = i >= src_span.0 && i < src_span.1;
        let tgt_in = j >= tgt_span.0 && j < tgt_span.1;
        if src_in != tgt_in {
            return false;
        }
        inside |= src_in;
    }
    inside
}

/// Enumerate all alignment-consistent phrase pairs with both sides at most
/// `max_len` tokens, extending target spans across unaligned boundary
/// words.
pub fn extract_phrases(
    src: &[Token],
    tgt: &[Token],
    align: &BTreeSet<(usize, usize)>,
    max_len: usize,
) -> Vec<ExtractedPhrase> {
    let tgt_aligned: BTreeSet<usize> = align.iter().map(|&(_, j)| j).collect();
    let mut out = Vec::new();
    for i1 in 0..src.len() {
        for i2 in (i1 + 1)..=src.len().min(i1 + max_len) {
            let cols: Vec<usize> = align
                .iter()
                .filter(|&&(i, _)| i >= i1 && i < i2)
                .map(|&(_, j)| j)
                .collect();
            let (Some(&j1), Some(&j2)) = (cols.iter().min(), cols.iter().max()) else {
                continue;
            };
            let (j1, j2) = (j1, j2 + 1);
            if !is_consistent(align, (i1, i2), (j1, j2)) {
                continue;
            }
            // grow the target span over unaligned boundary words
            let mut lo = j1;
            loop {
                let mut hi = j2;
                loop {
                    if hi - lo <= max_len {
                        let alignment: Vec<(u16, u16)> = align
                            .iter()
                            .filter(|&&(i, j)| i >= i1 && i < i2 && j >= lo && j < hi)
                            .map(|&(i, j)| ((i - i1) as u16, (j - lo) as u16))
                            .collect();
                        out.push(ExtractedPhrase {
                            src_span: (i1, i2),
                            tgt_span: (lo, hi),
                            src: src[i1..i2].to_vec(),
                            tgt: tgt[lo..hi].to_vec(),
                            alignment,
                        });
                    }
                    if hi >= tgt.len() || tgt_aligned.contains(&hi) {
                        break;
                    }
                    hi += 1;
                }
                if lo == 0 || tgt_aligned.contains(&(lo - 1)) {
                    break;
                }
                lo -= 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
struct PairStat {
    count: u64,
    alignments: BTreeMap<Vec<(u16, u16)>, u64>,
}

/// Multiset of extracted phrase pairs accumulated over a corpus.
#[derive(Clone, Debug, Default)]
pub struct PhraseCounts {
    counts: BTreeMap<(Vec<Token>, Vec<Token>), PairStat>,
}

impl PhraseCounts {
    pub fn add(&mut self, phrase: &ExtractedPhrase) {
        let stat = self
            .counts
            .entry((phrase.src.clone(), phrase.tgt.clone()))
            .or_default();
        stat.count += 1;
        *stat.alignments.entry(phrase.alignment.clone()).or_insert(0) += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn joint(&self, src: &[Token], tgt: &[Token]) -> u64 {
        self.counts
            .get(&(src.to_vec(), tgt.to_vec()))
            .map(|s| s.count)
            .unwrap_or(0)
    }
}

/// One target option for a source phrase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseEntry {
    pub tgt: Vec<Token>,
    pub phi_fwd: f64,
    pub lex_fwd: f64,
    pub phi_bwd: f64,
    pub lex_bwd: f64,
    /// most frequent internal alignment, ties to the lexicographically
    /// smallest point list
    pub alignment: Vec<(u16, u16)>,
    pub c_src: u64,
    pub c_tgt: u64,
    pub c_joint: u64,
}

/// Phrase table indexed by source phrase; per source, entries are sorted by
/// phi_fwd descending, then target ascending.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhraseTable {
    pub max_len: usize,
    entries: BTreeMap<Vec<Token>, Vec<PhraseEntry>>,
}

impl PhraseTable {
    pub fn lookup(&self, src: &[Token]) -> Option<&[PhraseEntry]> {
        self.entries.get(src).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Token>, &PhraseEntry)> {
        self.entries
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |e| (s, e)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn lex_weight_fwd(
    src: &[Token],
    tgt: &[Token],
    alignment: &[(u16, u16)],
    lex: &LexTable,
) -> f64 {
    let mut w = 1.0;
    for (j, t) in tgt.iter().enumerate() {
        let srcs: Vec<usize> = alignment
            .iter()
            .filter(|&&(_, aj)| aj as usize == j)
            .map(|&(ai, _)| ai as usize)
            .collect();
        if srcs.is_empty() {
            w *= lex.null_prob(t);
        } else {
            let sum: f64 = srcs.iter().map(|&i| lex.prob(&src[i], t)).sum();
            w *= sum / srcs.len() as f64;
        }
    }
    w
}

/// Score a phrase-pair multiset into a table. When lexical tables are
/// supplied, lexical weights use the stored internal alignment with NULL
/// probabilities for unaligned words; otherwise both weights are 1.
pub fn build_table(
    counts: &PhraseCounts,
    lex: Option<(&LexTable, &LexTable)>,
    max_len: usize,
) -> Result<PhraseTable> {
    if counts.is_empty() {
        return Err(Error::invalid("no phrase pairs were extracted"));
    }
    let mut c_src: BTreeMap<&[Token], u64> = BTreeMap::new();
    let mut c_tgt: BTreeMap<&[Token], u64> = BTreeMap::new();
    for ((s, t), stat) in &counts.counts {
        *c_src.entry(s).or_insert(0) += stat.count;
        *c_tgt.entry(t).or_insert(0) += stat.count;
    }
    let mut entries: BTreeMap<Vec<Token>, Vec<PhraseEntry>> = BTreeMap::new();
    for ((s, t), stat) in &counts.counts {
        let mut best_align: &Vec<(u16, u16)> = stat.alignments.keys().next().unwrap();
        let mut best_n = 0;
        for (a, &n) in &stat.alignments {
            if n > best_n {
                best_n = n;
                best_align = a;
            }
        }
        let (cs, ct) = (c_src[s.as_slice()], c_tgt[t.as_slice()]);
        let (lex_fwd, lex_bwd) = match lex {
            None => (1.0, 1.0),
            Some((fwd, rev)) => {
                let swapped: Vec<(u16, u16)> =
                    best_align.iter().map(|&(i, j)| (j, i)).collect();
                (
                    quantize7(lex_weight_fwd(s, t, best_align, fwd)),
                    quantize7(lex_weight_fwd(t, s, &swapped, rev)),
                )
            }
        };
        entries.entry(s.clone()).or_default().push(PhraseEntry {
            tgt: t.clone(),
            phi_fwd: quantize7(stat.count as f64 / cs as f64),
            lex_fwd,
            phi_bwd: quantize7(stat.count as f64 / ct as f64),
            lex_bwd,
            alignment: best_align.clone(),
            c_src: cs,
            c_tgt: ct,
            c_joint: stat.count,
        });
    }
    for v in entries.values_mut() {
        v.sort_by(|a, b| {
            b.phi_fwd
                .total_cmp(&a.phi_fwd)
                .then_with(|| a.tgt.cmp(&b.tgt))
        });
    }
    Ok(PhraseTable { max_len, entries })
}

/// End-to-end table training: Model 1 in both directions, grow-diag-final
/// symmetrization, extraction and scoring.
pub fn train_table(
    pairs: &[(Vec<Token>, Vec<Token>)],
    iters: usize,
    max_len: usize,
) -> Result<(LexTable, LexTable, PhraseTable)> {
    let fwd = model1_train(pairs, iters)?;
    let swapped: Vec<(Vec<Token>, Vec<Token>)> = pairs
        .iter()
        .map(|(s, t)| (t.clone(), s.clone()))
        .collect();
    let rev = model1_train(&swapped, iters)?;
    let mut counts = PhraseCounts::default();
    for (src, tgt) in pairs {
        let align = sym_align(src, tgt, &fwd, &rev);
        for p in extract_phrases(src, tgt, &align, max_len) {
            counts.add(&p);
        }
    }
    let table = build_table(&counts, Some((&fwd, &rev)), max_len)?;
    Ok((fwd, rev, table))
}

impl PhraseTable {
    /// One line per entry:
    /// `src ||| tgt ||| phi_fwd lex_fwd phi_bwd lex_bwd ||| i-j … ||| c_src c_tgt c_joint`
    pub fn save(&self) -> String {
        let mut out = String::new();
        for (src, e) in self.iter() {
            let src_s: Vec<&str> = src.iter().map(|t| t.as_ref()).collect();
            let tgt_s: Vec<&str> = e.tgt.iter().map(|t| t.as_ref()).collect();
            let align: Vec<String> = e
                .alignment
                .iter()
                .map(|(i, j)| format!("{i}-{j}"))
                .collect();
            out.push_str(&format!(
                "{} ||| {} ||| {} {} {} {} ||| {} ||| {} {} {}\n",
                src_s.join(" "),
                tgt_s.join(" "),
                fmt7(e.phi_fwd),
                fmt7(e.lex_fwd),
                fmt7(e.phi_bwd),
                fmt7(e.lex_bwd),
                align.join(" "),
                e.c_src,
                e.c_tgt,
                e.c_joint
            ));
        }
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::parse("phrase table", line, msg);
        let mut entries: BTreeMap<Vec<Token>, Vec<PhraseEntry>> = BTreeMap::new();
        let mut max_len = 0;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(" ||| ").collect();
            if fields.len() != 5 {
                return Err(err(i + 1, "expected 5 ||| fields"));
            }
            let parse_phrase = |f: &str| -> Result<Vec<Token>> {
                let toks: Result<Vec<Token>> = f.split_whitespace().map(Token::new).collect();
                let toks = toks.map_err(|e| err(i + 1, &e.to_string()))?;
                if toks.is_empty() {
                    return Err(err(i + 1, "empty phrase"));
                }
                Ok(toks)
            };
            let src = parse_phrase(fields[0])?;
            let tgt = parse_phrase(fields[1])?;
            let scores: Vec<f64> = fields[2]
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(i + 1, "bad score field"))?;
            if scores.len() != 4 {
                return Err(err(i + 1, "expected 4 scores"));
            }
            let mut alignment = Vec::new();
            for p in fields[3].split_whitespace() {
                let (a, b) = p
                    .split_once('-')
                    .ok_or_else(|| err(i + 1, "alignment point must be i-j"))?;
                let a: u16 = a.parse().map_err(|_| err(i + 1, "bad alignment point"))?;
                let b: u16 = b.parse().map_err(|_| err(i + 1, "bad alignment point"))?;
                alignment.push((a, b));
            }
            let cnts: Vec<u64> = fields[4]
                .split_whitespace()
                .map(|s| s.parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(i + 1, "bad count field"))?;
            if cnts.len() != 3 {
                return Err(err(i + 1, "expected 3 counts"));
            }
            max_len = max_len.max(src.len()).max(tgt.len());
            entries.entry(src).or_default().push(PhraseEntry {
                tgt,
                phi_fwd: scores[0],
                lex_fwd: scores[1],
                phi_bwd: scores[2],
                lex_bwd: scores[3],
                alignment,
                c_src: cnts[0],
                c_tgt: cnts[1],
                c_joint: cnts[2],
            });
        }
        for v in entries.values_mut() {
            v.sort_by(|a, b| {
                b.phi_fwd
                    .total_cmp(&a.phi_fwd)
                    .then_with(|| a.tgt.cmp(&b.tgt))
            });
        }
        Ok(PhraseTable { max_len, entries })
    }
}
