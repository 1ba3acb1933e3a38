//! Error-annotated corpora in the CoNLL m2 format.
//!
//! An m2 file is a sequence of blocks separated by blank lines. Each block
//! holds one tokenized source sentence (`S` line) followed by zero or more
//! annotation lines of the form
//!
//! ```text
//! A <start> <end>|||<type>|||<replacement>|||REQUIRED|||-NONE-|||<annotator>
//! ```
//!
//! Spans index source tokens, `start == end` marks an insertion point and an
//! empty replacement marks a deletion. The special span `-1 -1` (`noop`)
//! records an annotator who left the sentence unchanged.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::errors::{Error, Result};

/// A single surface token. Non-empty and free of whitespace.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        if s.is_empty() {
            return Err(Error::invalid("empty token"));
        }
        if s.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("token {s:?} contains whitespace")));
        }
        Ok(Token(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<&str> for Token {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Split a pre-tokenized line on whitespace. Infallible because
/// `split_whitespace` never yields empty or spaced pieces.
pub fn tokens(line: &str) -> Vec<Token> {
    line.split_whitespace().map(|t| Token(t.to_string())).collect()
}

/// Render a token sequence as a single space-joined line.
pub fn detok(toks: &[Token]) -> String {
    let strs: Vec<&str> = toks.iter().map(Token::as_str).collect();
    strs.join(" ")
}

/// One correction: replace source tokens `start..end` with `replacement`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<Token>,
    pub etype: Option<String>,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: Vec<Token>) -> Self {
        Edit {
            start,
            end,
            replacement,
            etype: None,
        }
    }

    pub fn with_type(mut self, etype: impl Into<String>) -> Self {
        self.etype = Some(etype.into());
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    /// Span/replacement identity, ignoring the error type label. This is the
    /// equality the metric uses when matching system edits against gold.
    pub fn same_correction(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }
}

/// A source sentence with per-annotator gold edit sets, keyed by annotator id.
#[derive(Clone, PartialEq, Debug)]
pub struct AnnotatedSentence {
    pub source: Vec<Token>,
    pub gold: BTreeMap<u32, Vec<Edit>>,
}

impl AnnotatedSentence {
    pub fn new(source: Vec<Token>) -> Self {
        AnnotatedSentence {
            source,
            gold: BTreeMap::new(),
        }
    }

    /// Validate spans against the source and the sortedness / non-overlap
    /// requirement within each annotator set.
    pub fn validate(&self) -> Result<()> {
        let n = self.source.len();
        for (ann, edits) in &self.gold {
            for e in edits {
                if e.start > e.end || e.end > n {
                    return Err(Error::invalid(format!(
                        "annotator {ann}: edit span {}..{} out of bounds for {n} tokens",
                        e.start, e.end
                    )));
                }
            }
            for w in edits.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let ordered = a.end <= b.start && (a.start, a.end) != (b.start, b.end);
                if !ordered {
                    return Err(Error::invalid(format!(
                        "annotator {ann}: edits {}..{} and {}..{} overlap or are unsorted",
                        a.start, a.end, b.start, b.end
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tokens covered by the given annotator's edit spans. Insertions cover
    /// nothing. An absent annotator covers nothing.
    pub fn covered_tokens(&self, annotator: u32) -> usize {
        self.gold
            .get(&annotator)
            .map(|edits| edits.iter().map(|e| e.end - e.start).sum())
            .unwrap_or(0)
    }

    /// Apply an annotator's edits to the source, yielding the corrected side.
    /// Falls back to the source itself when the annotator is absent.
    pub fn corrected(&self, annotator: u32) -> Vec<Token> {
        match self.gold.get(&annotator) {
            Some(edits) => apply_edits(&self.source, edits),
            None => self.source.clone(),
        }
    }

    /// The lowest annotator id, if any annotator is present.
    pub fn first_annotator(&self) -> Option<u32> {
        self.gold.keys().next().copied()
    }
}

/// Apply non-overlapping sorted edits to a token sequence.
pub fn apply_edits(src: &[Token], edits: &[Edit]) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(src.len());
    let mut cursor = 0;
    for e in edits {
        debug_assert!(e.start >= cursor && e.end <= src.len());
        out.extend_from_slice(&src[cursor..e.start]);
        out.extend_from_slice(&e.replacement);
        cursor = e.end;
    }
    out.extend_from_slice(&src[cursor..]);
    out
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Corpus {
    pub sentences: Vec<AnnotatedSentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<AnnotatedSentence>) -> Self {
        Corpus { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Parallel (source, corrected) pairs using each sentence's lowest
    /// annotator id.
    pub fn pairs(&self) -> Vec<(Vec<Token>, Vec<Token>)> {
        self.sentences
            .iter()
            .map(|s| {
                let ann = s.first_annotator().unwrap_or(0);
                (s.source.clone(), s.corrected(ann))
            })
            .collect()
    }
}

const NOOP_TYPE: &str = "noop";
const NONE_FIELD: &str = "-NONE-";

/// Parse an m2 stream.
pub fn parse_m2(text: &str) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut current: Option<AnnotatedSentence> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            if let Some(sent) = current.take() {
                sent.validate()
                    .map_err(|e| Error::parse("m2", lineno, e.to_string()))?;
                sentences.push(sent);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("S ").or(if line == "S" { Some("") } else { None }) {
            if let Some(sent) = current.take() {
                sent.validate()
                    .map_err(|e| Error::parse("m2", lineno, e.to_string()))?;
                sentences.push(sent);
            }
            current = Some(AnnotatedSentence::new(tokens(rest)));
        } else if let Some(rest) = line.strip_prefix("A ") {
            let sent = current
                .as_mut()
                .ok_or_else(|| Error::parse("m2", lineno, "A line before any S line"))?;
            let fields: Vec<&str> = rest.split("|||").collect();
            if fields.len() != 6 {
                return Err(Error::parse(
                    "m2",
                    lineno,
                    format!("expected 6 |||-separated fields, got {}", fields.len()),
                ));
            }
            let mut span = fields[0].split_whitespace();
            let (start_s, end_s) = match (span.next(), span.next(), span.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::parse("m2", lineno, "span must be two integers"));
                }
            };
            let annotator: u32 = fields[5]
                .trim()
                .parse()
                .map_err(|_| Error::parse("m2", lineno, format!("bad annotator id {:?}", fields[5])))?;
            if start_s == "-1" && end_s == "-1" {
                // noop: register the annotator with an empty edit set
                sent.gold.entry(annotator).or_default();
                continue;
            }
            let start: usize = start_s
                .parse()
                .map_err(|_| Error::parse("m2", lineno, format!("bad span start {start_s:?}")))?;
            let end: usize = end_s
                .parse()
                .map_err(|_| Error::parse("m2", lineno, format!("bad span end {end_s:?}")))?;
            let replacement = tokens(fields[2]);
            let edit = Edit {
                start,
                end,
                replacement,
                etype: Some(fields[1].to_string()),
            };
            sent.gold.entry(annotator).or_default().push(edit);
        } else {
            return Err(Error::parse(
                "m2",
                lineno,
                format!("line must start with 'S ' or 'A ': {line:?}"),
            ));
        }
    }
    if let Some(sent) = current.take() {
        let last = text.lines().count();
        sent.validate()
            .map_err(|e| Error::parse("m2", last, e.to_string()))?;
        sentences.push(sent);
    }
    Ok(Corpus::new(sentences))
}

/// Write a corpus in canonical m2 form: one block per sentence, annotators in
/// ascending id order, each block followed by a blank line.
pub fn write_m2(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sent in &corpus.sentences {
        out.push_str("S ");
        out.push_str(&detok(&sent.source));
        out.push('\n');
        for (ann, edits) in &sent.gold {
            if edits.is_empty() {
                out.push_str(&format!(
                    "A -1 -1|||{NOOP_TYPE}|||{NONE_FIELD}|||REQUIRED|||{NONE_FIELD}|||{ann}\n"
                ));
                continue;
            }
            for e in edits {
                let etype = e.etype.as_deref().unwrap_or("UNK");
                out.push_str(&format!(
                    "A {} {}|||{}|||{}|||REQUIRED|||{NONE_FIELD}|||{}\n",
                    e.start,
                    e.end,
                    etype,
                    detok(&e.replacement),
                    ann
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Token-level error rate: fraction of source tokens covered by the selected
/// annotator's edit spans.
pub fn error_rate(corpus: &Corpus, annotator: u32) -> Result<f64> {
    let total: usize = corpus.sentences.iter().map(|s| s.source.len()).sum();
    if total == 0 {
        return Err(Error::invalid("error rate undefined on an empty corpus"));
    }
    let covered: usize = corpus
        .sentences
        .iter()
        .map(|s| s.covered_tokens(annotator))
        .sum();
    Ok(covered as f64 / total as f64)
}

/// Result of [`adapt_error_rate`].
#[derive(Clone, Debug)]
pub struct AdaptedCorpus {
    pub corpus: Corpus,
    pub rate: f64,
    /// False when the target rate is not achievable; `corpus` then holds the
    /// best (highest-rate) subset found.
    pub reached: bool,
}

/// Greedily drop sentences until the corpus error rate reaches `target`.
///
/// Each step removes the sentence whose removal maximally increases the
/// rate, preferring longer sentences and then lower indices on ties. Stops
/// as soon as the rate is at or above target, or when no removal can raise
/// it further.
pub fn adapt_error_rate(corpus: &Corpus, annotator: u32, target: f64) -> Result<AdaptedCorpus> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::config(format!("target rate {target} outside [0,1]")));
    }
    let mut kept: Vec<(usize, usize, usize)> = corpus
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.covered_tokens(annotator), s.source.len()))
        .collect();
    let mut covered: usize = kept.iter().map(|&(_, c, _)| c).sum();
    let mut total: usize = kept.iter().map(|&(_, _, t)| t).sum();
    if total == 0 {
        return Err(Error::invalid("cannot adapt an empty corpus"));
    }

    let rate = |c: usize, t: usize| c as f64 / t as f64;
    let mut current = rate(covered, total);

    while current < target && kept.len() > 1 {
        // best removal: maximize new rate, tie-break on longer sentence,
        // then lower original index
        let mut best: Option<(f64, usize, usize, usize)> = None; // (rate, len, pos, idx)
        for (pos, &(idx, c, t)) in kept.iter().enumerate() {
            if t == total {
                continue; // removal would empty the corpus
            }
            let r = rate(covered - c, total - t);
            let better = match best {
                None => true,
                Some((br, bl, _, bi)) => r > br || (r == br && (t > bl || (t == bl && idx < bi))),
            };
            if better {
                best = Some((r, t, pos, idx));
            }
        }
        match best {
            Some((r, _, pos, _)) if r > current => {
                let (_, c, t) = kept.remove(pos);
                covered -= c;
                total -= t;
                current = r;
            }
            _ => break,
        }
    }

    let keep_set: Vec<usize> = kept.iter().map(|&(i, _, _)| i).collect();
    let subset = Corpus::new(
        keep_set
            .iter()
            .map(|&i| corpus.sentences[i].clone())
            .collect(),
    );
    Ok(AdaptedCorpus {
        corpus: subset,
        rate: current,
        reached: current >= target,
    })
}

/// Split a corpus into `k` folds: seeded shuffle, then round-robin
/// assignment. Fold sizes differ by at most one.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Corpus>> {
    if k < 2 {
        return Err(Error::config(format!("fold count {k} must be at least 2")));
    }
    if k > corpus.len() {
        return Err(Error::config(format!(
            "fold count {k} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds: Vec<Corpus> = (0..k).map(|_| Corpus::default()).collect();
    for (pos, &idx) in order.iter().enumerate() {
        folds[pos % k].sentences.push(corpus.sentences[idx].clone());
    }
    Ok(folds)
}
