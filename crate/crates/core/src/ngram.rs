//! Interpolated Witten-Bell backoff n-gram models with ARPA text I/O.
//!
//! The same machinery serves three alphabets: surface words, word classes
//! (via [`ClassMap`] projection) and edit-operation symbols. Log base 10
//! throughout, per the ARPA convention. All stored values are rounded to
//! seven significant digits at estimation time so that saving and loading
//! a model reproduces it bit for bit.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Token;
use crate::errors::{Error, Result};
use crate::util::{fmt7, quantize7};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    logp: f64,
    bow: Option<f64>,
}

/// Backoff n-gram model over tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    pub order: usize,
    /// entries[k-1] holds the k-gram section, sorted lexicographically
    entries: Vec<BTreeMap<Vec<Token>, Entry>>,
}

fn padded(tokens: &[Token]) -> Vec<Token> {
    let mut s = Vec::with_capacity(tokens.len() + 2);
    s.push(Token::new(BOS).unwrap());
    s.extend_from_slice(tokens);
    s.push(Token::new(EOS).unwrap());
    s
}

impl NGramModel {
    /// Train an interpolated Witten-Bell model.
    ///
    /// Counts are the k-grams of each `<s> … </s>`-padded sentence whose
    /// last token is not `<s>`. `prune_threshold`, if set, drops count rows
    /// of order ≥ 3 with count ≤ the threshold before estimation; prefix
    /// closure survives because a prefix never has a smaller count than its
    /// extension.
    pub fn train(corpus: &[Vec<Token>], order: usize, prune_threshold: Option<u64>) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid("cannot train a language model on an empty corpus"));
        }
        if order == 0 {
            return Err(Error::invalid("language model order must be at least 1"));
        }

        let mut counts: Vec<BTreeMap<Vec<Token>, u64>> = vec![BTreeMap::new(); order];
        for sent in corpus {
            let padded = padded(sent);
            for k in 1..=order {
                if padded.len() < k {
                    continue;
                }
                for w in padded.windows(k) {
                    if w[k - 1].as_ref() == BOS {
                        continue;
                    }
                    *counts[k - 1].entry(w.to_vec()).or_insert(0) += 1;
                }
            }
        }
        if let Some(c) = prune_threshold {
            for level in counts.iter_mut().skip(2) {
                level.retain(|_, n| *n > c);
            }
        }

        // history statistics per level: continuation mass and distinct
        // continuation count of each (k-1)-gram context
        let mut hist: Vec<HashMap<Vec<Token>, (u64, u64)>> = vec![HashMap::new(); order];
        for k in 2..=order {
            for (gram, &c) in &counts[k - 1] {
                let h = hist[k - 1]
                    .entry(gram[..k - 1].to_vec())
                    .or_insert((0, 0));
                h.0 += c;
                h.1 += 1;
            }
        }

        let mut entries: Vec<BTreeMap<Vec<Token>, Entry>> = vec![BTreeMap::new(); order];

        // unigram level: p(w) = c(w)/(C+T), p(<unk>) = T/(C+T)
        let c_total: u64 = counts[0].values().sum();
        let types = counts[0].len() as u64;
        let denom = (c_total + types) as f64;
        let mut uni_prob: HashMap<Vec<Token>, f64> = HashMap::new();
        for (gram, &c) in &counts[0] {
            uni_prob.insert(gram.clone(), c as f64 / denom);
        }
        let unk = vec![Token::new(UNK).unwrap()];
        uni_prob.insert(unk.clone(), types as f64 / denom);
        for (gram, p) in &uni_prob {
            entries[0].insert(
                gram.clone(),
                Entry {
                    logp: quantize7(p.log10()),
                    bow: None,
                },
            );
        }
        // <s> is never predicted, only conditioned on; it carries a
        // placeholder probability so its backoff weight has a row to live on
        entries[0].insert(
            vec![Token::new(BOS).unwrap()],
            Entry {
                logp: -99.0,
                bow: None,
            },
        );

        // interpolated higher orders:
        // p(w|h) = (c(hw) + N1+(h)·p(w|h')) / (c(h) + N1+(h))
        let mut prev_prob = uni_prob;
        for k in 2..=order {
            let mut level_prob: HashMap<Vec<Token>, f64> = HashMap::new();
            for (gram, &c) in &counts[k - 1] {
                let (ch, n1) = hist[k - 1][&gram[..k - 1]];
                let lower = backoff_prob(&prev_prob, &gram[1..], &unk[0]);
                let p = (c as f64 + n1 as f64 * lower) / (ch + n1) as f64;
                level_prob.insert(gram.clone(), p);
            }
            for (gram, p) in &level_prob {
                entries[k - 1].insert(
                    gram.clone(),
                    Entry {
                        logp: quantize7(p.log10()),
                        bow: None,
                    },
                );
            }
            // bow(h) = N1+(h) / (c(h) + N1+(h)) on the rows of level k-1
            for (h, &(ch, n1)) in &hist[k - 1] {
                let bow = quantize7((n1 as f64 / (ch + n1) as f64).log10());
                let e = entries[k - 2].get_mut(h).unwrap_or_else(|| {
                    panic!("history {h:?} missing from level {}", k - 1)
                });
                e.bow = Some(bow);
            }
            prev_prob = level_prob;
        }

        Ok(NGramModel { order, entries })
    }

    /// Conditional log10 probability of `w` after `ctx` via the standard
    /// backoff recursion. OOV tokens are mapped to `<unk>`.
    pub fn logp_cond(&self, ctx: &[Token], w: &Token) -> f64 {
        let w = self.map_unk(w);
        let start = ctx.len().saturating_sub(self.order - 1);
        let ctx: Vec<Token> = ctx[start..].iter().map(|t| self.map_unk(t)).collect();
        self.backoff_logp(&ctx, &w)
    }

    fn map_unk(&self, t: &Token) -> Token {
        if self.entries[0].contains_key(std::slice::from_ref(t)) {
            t.clone()
        } else {
            Token::new(UNK).unwrap()
        }
    }

    fn backoff_logp(&self, ctx: &[Token], w: &Token) -> f64 {
        let mut gram = ctx.to_vec();
        gram.push(w.clone());
        if let Some(e) = self.entries.get(gram.len() - 1).and_then(|m| m.get(&gram)) {
            return e.logp;
        }
        if ctx.is_empty() {
            // w is in-vocabulary by construction, so this is unreachable
            // unless the model was built without a <unk> row
            return self.entries[0]
                .get(&vec![Token::new(UNK).unwrap()])
                .map(|e| e.logp)
                .unwrap_or(f64::NEG_INFINITY);
        }
        let bow = self
            .entries
            .get(ctx.len() - 1)
            .and_then(|m| m.get(ctx))
            .and_then(|e| e.bow)
            .unwrap_or(0.0);
        bow + self.backoff_logp(&ctx[1..], w)
    }

    /// Total log10 probability of a sentence padded with `<s> … </s>`.
    pub fn score_seq(&self, tokens: &[Token]) -> f64 {
        let padded = padded(tokens);
        let mut total = 0.0;
        for i in 1..padded.len() {
            total += self.logp_cond(&padded[..i], &padded[i]);
        }
        total
    }

    /// Whether a surface token is in the model vocabulary.
    pub fn in_vocab(&self, t: &Token) -> bool {
        self.entries[0].contains_key(std::slice::from_ref(t))
    }

    /// All unigram-level tokens (including sentinels).
    pub fn vocab(&self) -> impl Iterator<Item = &Token> {
        self.entries[0].keys().map(|g| &g[0])
    }

    /// ARPA text rendering: sorted sections, seven-significant-digit values.
    pub fn save_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for k in 1..=self.order {
            out.push_str(&format!("ngram {}={}\n", k, self.entries[k - 1].len()));
        }
        for k in 1..=self.order {
            out.push_str(&format!("\n\\{k}-grams:\n"));
            for (gram, e) in &self.entries[k - 1] {
                out.push_str(&fmt7(e.logp));
                out.push('\t');
                let words: Vec<&str> = gram.iter().map(|t| t.as_ref()).collect();
                out.push_str(&words.join(" "));
                if let Some(b) = e.bow {
                    out.push('\t');
                    out.push_str(&fmt7(b));
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Parse ARPA text. Errors carry 1-based line numbers.
    pub fn load_arpa(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::parse("ARPA", line, msg);
        let mut lines = text.lines().enumerate().peekable();

        let mut data_at = None;
        for (i, line) in lines.by_ref() {
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == "\\data\\" {
                data_at = Some(i);
                break;
            }
            return Err(err(i + 1, "expected \\data\\ header"));
        }
        let data_at = data_at.ok_or_else(|| err(1, "missing \\data\\ header"))?;

        let mut declared: Vec<usize> = Vec::new();
        loop {
            let &(i, line) = lines
                .peek()
                .ok_or_else(|| err(data_at + 1, "unterminated \\data\\ section"))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                lines.next();
                continue;
            }
            if trimmed.starts_with('\\') {
                break;
            }
            let rest = trimmed
                .strip_prefix("ngram ")
                .ok_or_else(|| err(i + 1, "expected `ngram k=N`"))?;
            let (k, n) = rest
                .split_once('=')
                .ok_or_else(|| err(i + 1, "expected `ngram k=N`"))?;
            let k: usize = k.trim().parse().map_err(|_| err(i + 1, "bad ngram order"))?;
            let n: usize = n.trim().parse().map_err(|_| err(i + 1, "bad ngram count"))?;
            if k != declared.len() + 1 {
                return Err(err(i + 1, "ngram orders must be consecutive from 1"));
            }
            declared.push(n);
            lines.next();
        }
        if declared.is_empty() {
            return Err(err(data_at + 1, "\\data\\ section declares no ngram orders"));
        }

        let order = declared.len();
        let mut entries: Vec<BTreeMap<Vec<Token>, Entry>> = vec![BTreeMap::new(); order];
        let mut seen_end = false;
        while let Some((i, line)) = lines.next() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed == "\\end\\" {
                seen_end = true;
                break;
            }
            let section = trimmed
                .strip_prefix('\\')
                .and_then(|s| s.strip_suffix("-grams:"))
                .ok_or_else(|| err(i + 1, "expected a \\k-grams: section header"))?;
            let k: usize = section
                .parse()
                .map_err(|_| err(i + 1, "bad section order"))?;
            if k == 0 || k > order {
                return Err(err(i + 1, "section order not declared in \\data\\"));
            }
            loop {
                let &(j, body) = match lines.peek() {
                    Some(p) => p,
                    None => break,
                };
                let t = body.trim();
                if t.is_empty() {
                    lines.next();
                    continue;
                }
                if t.starts_with('\\') {
                    break;
                }
                lines.next();
                let fields: Vec<&str> = t.split_whitespace().collect();
                let (has_bow, expect) = if fields.len() == k + 2 {
                    (true, k + 2)
                } else {
                    (false, k + 1)
                };
                if fields.len() != expect {
                    return Err(err(j + 1, &format!("expected {} fields for a {k}-gram row", k + 1)));
                }
                let logp: f64 = fields[0]
                    .parse()
                    .map_err(|_| err(j + 1, "bad log probability"))?;
                let bow = if has_bow {
                    Some(
                        fields[k + 1]
                            .parse()
                            .map_err(|_| err(j + 1, "bad backoff weight"))?,
                    )
                } else {
                    None
                };
                let mut gram = Vec::with_capacity(k);
                for f in &fields[1..=k] {
                    gram.push(Token::new(*f).map_err(|e| err(j + 1, &e.to_string()))?);
                }
                if entries[k - 1].insert(gram, Entry { logp, bow }).is_some() {
                    return Err(err(j + 1, "duplicate ngram row"));
                }
            }
        }
        if !seen_end {
            return Err(err(text.lines().count(), "missing \\end\\ marker"));
        }
        for (k, &n) in declared.iter().enumerate() {
            if entries[k].len() != n {
                return Err(err(
                    data_at + 1,
                    &format!(
                        "\\data\\ declares {} {}-grams but {} were listed",
                        n,
                        k + 1,
                        entries[k].len()
                    ),
                ));
            }
        }
        Ok(NGramModel { order, entries })
    }
}

fn backoff_prob(level: &HashMap<Vec<Token>, f64>, gram: &[Token], unk: &Token) -> f64 {
    // lower-order interpolation term during training; the suffix of any
    // surviving count row is itself a surviving count row, so only the
    // unigram level can miss, and there only for <unk>
    if let Some(&p) = level.get(gram) {
        return p;
    }
    assert_eq!(gram.len(), 1, "suffix of a counted gram must be counted");
    level[&vec![unk.clone()]]
}

/// Word-to-class projection with a catch-all class for unmapped words.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassMap {
    map: HashMap<Token, Token>,
}

pub const UNK_CLASS: &str = "CUNK";

impl ClassMap {
    pub fn new(map: HashMap<Token, Token>) -> Self {
        ClassMap { map }
    }

    pub fn class_of(&self, word: &Token) -> Token {
        self.map
            .get(word)
            .cloned()
            .unwrap_or_else(|| Token::new(UNK_CLASS).unwrap())
    }

    pub fn project(&self, tokens: &[Token]) -> Vec<Token> {
        tokens.iter().map(|t| self.class_of(t)).collect()
    }

    /// Parse `word<TAB>class` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, class) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("class map", i + 1, "expected `word<TAB>class`"))?;
            let word =
                Token::new(word.trim()).map_err(|e| Error::parse("class map", i + 1, &e.to_string()))?;
            let class = Token::new(class.trim())
                .map_err(|e| Error::parse("class map", i + 1, &e.to_string()))?;
            map.insert(word, class);
        }
        Ok(ClassMap { map })
    }

    pub fn render(&self) -> String {
        let sorted: BTreeMap<&Token, &Token> = self.map.iter().collect();
        let mut out = String::new();
        for (w, c) in sorted {
            out.push_str(&format!("{w}\t{c}\n"));
        }
        out
    }
}

/// Moore-Lewis cross-entropy data selection.
///
/// Scores each sentence by the difference in per-token cross-entropy under
/// an in-domain and a general model (token count includes `</s>`), and
/// keeps the sentences scoring strictly below zero. Returns the scores and
/// the kept indices.
pub fn moore_lewis(
    corpus: &[Vec<Token>],
    lm_in: &NGramModel,
    lm_gen: &NGramModel,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if lm_in.order != lm_gen.order {
        return Err(Error::invalid(format!(
            "model orders differ: {} vs {}",
            lm_in.order, lm_gen.order
        )));
    }
    let mut scores = Vec::with_capacity(corpus.len());
    let mut kept = Vec::new();
    for (i, sent) in corpus.iter().enumerate() {
        let n = (sent.len() + 1) as f64;
        let h_in = -lm_in.score_seq(sent) / n;
        let h_gen = -lm_gen.score_seq(sent) / n;
        let score = h_in - h_gen;
        scores.push(score);
        if score < 0.0 {
            kept.push(i);
        }
    }
    Ok((scores, kept))
}
