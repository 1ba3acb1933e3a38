//! Monotone phrase-based beam decoder.
//!
//! Stacks are indexed by covered source prefix length; every extension
//! appends a target phrase for the next uncovered span, so no reordering is
//! possible. Hypotheses sharing a recombination state (the language-model,
//! class-LM and edit-operation-model contexts) are merged into one node;
//! losing extensions are kept as arcs so the n-best list can walk them.
//!
//! Scoring is log-linear. Stateless feature values (translation scores,
//! edit counts, penalties, sparse edit features) are attached to
//! translation options up front; LM scores accumulate during search.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use crate::corpus::Token;
use crate::editops::{atomic_edits, edit_op_counts, op_sequence, AlignOp, OpAlphabet};
use crate::errors::{Error, Result};
use crate::features::{DenseFeature, FeatureToggles, FeatureVec, WeightVec};
use crate::ngram::{ClassMap, NGramModel, BOS, EOS};
use crate::phrasetable::PhraseTable;

/// Sparse edit-feature families: edit tokens as words (E0) or classes (E1),
/// optionally with one source word of context on each side, itself rendered
/// as words (C10) or classes (C11).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SparseFamily {
    E0,
    E1,
    E0C10,
    E1C11,
    E0C11,
}

impl SparseFamily {
    pub const ALL: [SparseFamily; 5] = [
        SparseFamily::E0,
        SparseFamily::E1,
        SparseFamily::E0C10,
        SparseFamily::E1C11,
        SparseFamily::E0C11,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SparseFamily::E0 => "E0",
            SparseFamily::E1 => "E1",
            SparseFamily::E0C10 => "E0C10",
            SparseFamily::E1C11 => "E1C11",
            SparseFamily::E0C11 => "E0C11",
        }
    }

    pub fn from_name(name: &str) -> Option<SparseFamily> {
        SparseFamily::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Render edit tokens through the class map.
    fn edit_classes(self) -> bool {
        matches!(self, SparseFamily::E1 | SparseFamily::E1C11)
    }

    /// Context emission: None for the contextless families, otherwise
    /// whether context tokens go through the class map.
    fn context_classes(self) -> Option<bool> {
        match self {
            SparseFamily::E0 | SparseFamily::E1 => None,
            SparseFamily::E0C10 => Some(false),
            SparseFamily::E1C11 | SparseFamily::E0C11 => Some(true),
        }
    }

    /// Tag used for the contextless atoms this family emits.
    fn base(self) -> &'static str {
        if self.edit_classes() {
            "E1"
        } else {
            "E0"
        }
    }

    pub fn needs_classmap(self) -> bool {
        self.edit_classes() || self.context_classes() == Some(true)
    }
}

fn project(t: &Token, classes: bool, classmap: Option<&ClassMap>) -> Token {
    // boundary sentinels are never class-projected
    if !classes || t.as_ref() == BOS || t.as_ref() == EOS {
        t.clone()
    } else {
        classmap.expect("validated upstream").class_of(t)
    }
}

/// Sparse edit features of one phrase pair.
///
/// `left` and `right` are the sentence tokens adjacent to the source span
/// (`<s>`/`</s>` at the edges). Insertions take their left context from the
/// target side; at the phrase edge the caller's left token stands in.
pub fn sparse_features(
    src_phrase: &[Token],
    tgt_phrase: &[Token],
    left: &Token,
    right: &Token,
    family: SparseFamily,
    classmap: Option<&ClassMap>,
) -> Result<BTreeMap<String, f64>> {
    if family.needs_classmap() && classmap.is_none() {
        return Err(Error::config(format!(
            "sparse family {} requires a class map",
            family.name()
        )));
    }
    let ec = family.edit_classes();
    let ep = |t: &Token| project(t, ec, classmap);
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let mut bump = |name: String| *out.entry(name).or_insert(0.0) += 1.0;

    for atom in atomic_edits(src_phrase, tgt_phrase) {
        let core = match atom {
            AlignOp::Subst { src, tgt } => {
                format!("subst({},{})", ep(&src_phrase[src]), ep(&tgt_phrase[tgt]))
            }
            AlignOp::Ins { tgt, .. } => format!("insert({})", ep(&tgt_phrase[tgt])),
            AlignOp::Del { src } => format!("del({})", ep(&src_phrase[src])),
            AlignOp::Match { .. } => unreachable!("atomic_edits filters matches"),
        };
        bump(format!("{}~{}", family.base(), core));

        let Some(cc) = family.context_classes() else {
            continue;
        };
        let cp = |t: &Token| project(t, cc, classmap);
        let (lt, rt) = match atom {
            AlignOp::Subst { src, .. } | AlignOp::Del { src } => {
                let lt = if src > 0 { &src_phrase[src - 1] } else { left };
                let rt = if src + 1 < src_phrase.len() {
                    &src_phrase[src + 1]
                } else {
                    right
                };
                (lt, rt)
            }
            AlignOp::Ins { src, tgt } => {
                let lt = if tgt > 0 { &tgt_phrase[tgt - 1] } else { left };
                let rt = if src < src_phrase.len() {
                    &src_phrase[src]
                } else {
                    right
                };
                (lt, rt)
            }
            AlignOp::Match { .. } => unreachable!(),
        };
        let (lt, rt) = (cp(lt), cp(rt));
        bump(format!("{}~{}_{}", family.name(), lt, core));
        bump(format!("{}~{}_{}", family.name(), core, rt));
        bump(format!("{}~{}_{}_{}", family.name(), lt, core, rt));
    }
    Ok(out)
}

/// One way to cover a source span.
#[derive(Clone, Debug)]
pub struct TranslationOption {
    pub span: (usize, usize),
    pub tgt: Vec<Token>,
    /// stateless features, already masked by the toggle set
    pub feats: FeatureVec,
    /// edit-operation symbols for the operation-sequence model
    pub ops: Vec<Token>,
}

#[derive(Clone, Debug)]
pub struct DecoderConfig {
    pub beam: usize,
    pub k_best: usize,
    /// monotone decoding only; anything but 0 is rejected
    pub distortion_limit: usize,
    pub toggles: FeatureToggles,
    pub sparse: Option<SparseFamily>,
    pub osm_alphabet: OpAlphabet,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam: 100,
            k_best: 1,
            distortion_limit: 0,
            toggles: FeatureToggles::default(),
            sparse: None,
            osm_alphabet: OpAlphabet::Plain,
        }
    }
}

/// Shared immutable models for decoding.
#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub table: &'a PhraseTable,
    pub lm: Option<&'a NGramModel>,
    pub class_lm: Option<&'a NGramModel>,
    pub osm: Option<&'a NGramModel>,
    pub classmap: Option<&'a ClassMap>,
}

fn validate(models: &Models, config: &DecoderConfig) -> Result<()> {
    if config.distortion_limit != 0 {
        return Err(Error::config("distortion limit must be 0"));
    }
    if config.beam == 0 {
        return Err(Error::config("beam must be at least 1"));
    }
    let t = config.toggles;
    if t.enabled(DenseFeature::Lm) && models.lm.is_none() {
        return Err(Error::config("lm feature enabled but no language model supplied"));
    }
    if t.enabled(DenseFeature::ClassLm) && (models.class_lm.is_none() || models.classmap.is_none())
    {
        return Err(Error::config(
            "class_lm feature enabled but class model or class map missing",
        ));
    }
    if t.enabled(DenseFeature::Osm) && models.osm.is_none() {
        return Err(Error::config("osm feature enabled but no operation model supplied"));
    }
    if let Some(fam) = config.sparse {
        if fam.needs_classmap() && models.classmap.is_none() {
            return Err(Error::config(format!(
                "sparse family {} requires a class map",
                fam.name()
            )));
        }
    }
    Ok(())
}

/// Build the translation options for every source span: all table entries,
/// plus a copy-through option for each single-token span the table does not
/// know (so unknown words pass through unchanged). Options are grouped by
/// span start.
pub fn build_options(
    sentence: &[Token],
    models: &Models,
    config: &DecoderConfig,
) -> Result<Vec<Vec<TranslationOption>>> {
    validate(models, config)?;
    let bos = Token::new(BOS).unwrap();
    let eos = Token::new(EOS).unwrap();
    let n = sentence.len();
    let mut per_start: Vec<Vec<TranslationOption>> = vec![Vec::new(); n];
    for start in 0..n {
        let max_end = n.min(start + models.table.max_len.max(1));
        for end in (start + 1)..=max_end {
            let phrase = &sentence[start..end];
            let left = if start > 0 { &sentence[start - 1] } else { &bos };
            let right = if end < n { &sentence[end] } else { &eos };
            let mut add = |tgt: &[Token], tm: Option<[f64; 4]>| -> Result<()> {
                let mut feats = FeatureVec::default();
                if let Some([pf, lf, pb, lb]) = tm {
                    feats.set(DenseFeature::PhiFwd, pf.log10());
                    feats.set(DenseFeature::LexFwd, lf.log10());
                    feats.set(DenseFeature::PhiBwd, pb.log10());
                    feats.set(DenseFeature::LexBwd, lb.log10());
                }
                let counts = edit_op_counts(phrase, tgt);
                feats.set(DenseFeature::Ld, counts.ld as f64);
                feats.set(DenseFeature::D, counts.del as f64);
                feats.set(DenseFeature::I, counts.ins as f64);
                feats.set(DenseFeature::S, counts.sub as f64);
                feats.set(DenseFeature::WordPenalty, tgt.len() as f64);
                feats.set(DenseFeature::PhrasePenalty, 1.0);
                let mut feats = feats.masked(config.toggles);
                if let Some(fam) = config.sparse {
                    feats.sparse =
                        sparse_features(phrase, tgt, left, right, fam, models.classmap)?;
                }
                let ops = if config.toggles.enabled(DenseFeature::Osm) {
                    op_sequence(phrase, tgt, config.osm_alphabet)
                        .iter()
                        .map(|s| Token::new(s).unwrap())
                        .collect()
                } else {
                    Vec::new()
                };
                per_start[start].push(TranslationOption {
                    span: (start, end),
                    tgt: tgt.to_vec(),
                    feats,
                    ops,
                });
                Ok(())
            };
            match models.table.lookup(phrase) {
                Some(entries) => {
                    for e in entries {
                        add(&e.tgt, Some([e.phi_fwd, e.lex_fwd, e.phi_bwd, e.lex_bwd]))?;
                    }
                }
                None => {
                    if end - start == 1 {
                        add(phrase, None)?;
                    }
                }
            }
        }
    }
    Ok(per_start)
}

/// A decoded hypothesis: surface, accumulated features and model score.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub tokens: Vec<Token>,
    pub feats: FeatureVec,
    pub score: f64,
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
struct RecombState {
    lm: Vec<Token>,
    class: Vec<Token>,
    osm: Vec<Token>,
}

struct Edge {
    prev: usize,
    tgt: Vec<Token>,
    delta: FeatureVec,
    /// dot(weights, delta)
    delta_score: f64,
}

struct Node {
    state: RecombState,
    /// best model score from the start to this node
    best: f64,
    edges: Vec<Edge>,
}

fn truncate_ctx(ctx: &mut Vec<Token>, order: usize) {
    let keep = order.saturating_sub(1);
    if ctx.len() > keep {
        ctx.drain(..ctx.len() - keep);
    }
}

/// Score `words` against the model, extending `ctx` in place.
fn score_words(lm: &NGramModel, ctx: &mut Vec<Token>, words: &[Token]) -> f64 {
    let mut total = 0.0;
    for w in words {
        total += lm.logp_cond(ctx, w);
        ctx.push(w.clone());
        truncate_ctx(ctx, lm.order);
    }
    total
}

struct QueueItem {
    priority: f64,
    counter: u64,
    node: usize,
    acc: f64,
    /// backward trail: None = a goal edge index, Some = (node, edge index)
    trail: Vec<(Option<usize>, usize)>,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority && self.counter == other.counter
    }
}
impl Eq for QueueItem {}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.counter.cmp(&self.counter))
    }
}

/// Decode one sentence, returning up to `config.k_best` candidates in
/// strictly descending score order with pairwise distinct surfaces.
pub fn decode(
    sentence: &[Token],
    models: &Models,
    weights: &WeightVec,
    config: &DecoderConfig,
) -> Result<Vec<Candidate>> {
    let per_start = build_options(sentence, models, config)?;
    let n = sentence.len();
    let t = config.toggles;
    let bos = Token::new(BOS).unwrap();
    let eos = Token::new(EOS).unwrap();

    let mut init = RecombState::default();
    if t.enabled(DenseFeature::Lm) {
        init.lm = vec![bos.clone()];
        truncate_ctx(&mut init.lm, models.lm.unwrap().order);
    }
    if t.enabled(DenseFeature::ClassLm) {
        init.class = vec![bos.clone()];
        truncate_ctx(&mut init.class, models.class_lm.unwrap().order);
    }
    if t.enabled(DenseFeature::Osm) {
        init.osm = vec![bos.clone()];
        truncate_ctx(&mut init.osm, models.osm.unwrap().order);
    }

    let mut nodes: Vec<Node> = vec![Node {
        state: init,
        best: 0.0,
        edges: Vec::new(),
    }];
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    stacks[0].push(0);
    let mut goal_edges: Vec<Edge> = Vec::new();

    for cov in 0..=n {
        let mut stack = std::mem::take(&mut stacks[cov]);
        stack.sort_by(|&a, &b| nodes[b].best.total_cmp(&nodes[a].best).then(a.cmp(&b)));
        stack.truncate(config.beam);

        if cov == n {
            for &id in &stack {
                let mut delta = FeatureVec::default();
                if t.enabled(DenseFeature::Lm) {
                    let mut ctx = nodes[id].state.lm.clone();
                    delta.set(
                        DenseFeature::Lm,
                        score_words(models.lm.unwrap(), &mut ctx, std::slice::from_ref(&eos)),
                    );
                }
                if t.enabled(DenseFeature::ClassLm) {
                    let mut ctx = nodes[id].state.class.clone();
                    delta.set(
                        DenseFeature::ClassLm,
                        score_words(
                            models.class_lm.unwrap(),
                            &mut ctx,
                            std::slice::from_ref(&eos),
                        ),
                    );
                }
                if t.enabled(DenseFeature::Osm) {
                    let mut ctx = nodes[id].state.osm.clone();
                    delta.set(
                        DenseFeature::Osm,
                        score_words(models.osm.unwrap(), &mut ctx, std::slice::from_ref(&eos)),
                    );
                }
                let ds = weights.dot(&delta);
                goal_edges.push(Edge {
                    prev: id,
                    tgt: Vec::new(),
                    delta,
                    delta_score: ds,
                });
            }
            break;
        }

        let mut by_state: HashMap<(usize, RecombState), usize> = HashMap::new();
        for &id in &stack {
            for opt in &per_start[cov] {
                let mut delta = opt.feats.clone();
                let mut state = nodes[id].state.clone();
                if t.enabled(DenseFeature::Lm) {
                    delta.set(
                        DenseFeature::Lm,
                        score_words(models.lm.unwrap(), &mut state.lm, &opt.tgt),
                    );
                }
                if t.enabled(DenseFeature::ClassLm) {
                    let classes = models.classmap.unwrap().project(&opt.tgt);
                    delta.set(
                        DenseFeature::ClassLm,
                        score_words(models.class_lm.unwrap(), &mut state.class, &classes),
                    );
                }
                if t.enabled(DenseFeature::Osm) {
                    delta.set(
                        DenseFeature::Osm,
                        score_words(models.osm.unwrap(), &mut state.osm, &opt.ops),
                    );
                }
                let ds = weights.dot(&delta);
                let score = nodes[id].best + ds;
                let end = opt.span.1;
                let target = *by_state
                    .entry((end, state.clone()))
                    .or_insert_with(|| {
                        nodes.push(Node {
                            state,
                            best: f64::NEG_INFINITY,
                            edges: Vec::new(),
                        });
                        stacks[end].push(nodes.len() - 1);
                        nodes.len() - 1
                    });
                nodes[target].best = nodes[target].best.max(score);
                nodes[target].edges.push(Edge {
                    prev: id,
                    tgt: opt.tgt.clone(),
                    delta,
                    delta_score: ds,
                });
            }
        }
    }

    // lazy best-first n-best over the arcs, deduplicated by surface
    let mut heap: BinaryHeap<QueueItem> = BinaryHeap::new();
    let mut counter = 0u64;
    for (gi, ge) in goal_edges.iter().enumerate() {
        heap.push(QueueItem {
            priority: ge.delta_score + nodes[ge.prev].best,
            counter,
            node: ge.prev,
            acc: ge.delta_score,
            trail: vec![(None, gi)],
        });
        counter += 1;
    }
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen: HashSet<Vec<Token>> = HashSet::new();
    while let Some(item) = heap.pop() {
        if out.len() >= config.k_best {
            break;
        }
        if item.node == 0 {
            let mut feats = FeatureVec::default();
            let mut tokens: Vec<Token> = Vec::new();
            for (node, ei) in item.trail.iter().rev() {
                let edge = match node {
                    None => &goal_edges[*ei],
                    Some(nid) => &nodes[*nid].edges[*ei],
                };
                tokens.extend(edge.tgt.iter().cloned());
                feats += &edge.delta;
            }
            let recomputed = weights.dot(&feats);
            assert!(
                (item.acc - recomputed).abs() <= 1e-9,
                "score drift: {} vs {}",
                item.acc,
                recomputed
            );
            if seen.insert(tokens.clone()) {
                out.push(Candidate {
                    tokens,
                    feats,
                    score: item.acc,
                });
            }
            continue;
        }
        for (ei, edge) in nodes[item.node].edges.iter().enumerate() {
            let acc = item.acc + edge.delta_score;
            let mut trail = item.trail.clone();
            trail.push((Some(item.node), ei));
            heap.push(QueueItem {
                priority: acc + nodes[edge.prev].best,
                counter,
                node: edge.prev,
                acc,
                trail,
            });
            counter += 1;
        }
    }
    Ok(out)
}

/// Owned bundle of everything one correction system needs to decode.
pub struct GecSystem {
    pub table: PhraseTable,
    pub lm: Option<NGramModel>,
    pub class_lm: Option<NGramModel>,
    pub osm: Option<NGramModel>,
    pub classmap: Option<ClassMap>,
    pub config: DecoderConfig,
}

impl GecSystem {
    pub fn models(&self) -> Models<'_> {
        Models {
            table: &self.table,
            lm: self.lm.as_ref(),
            class_lm: self.class_lm.as_ref(),
            osm: self.osm.as_ref(),
            classmap: self.classmap.as_ref(),
        }
    }

    pub fn decode(
        &self,
        src: &[Token],
        weights: &WeightVec,
        k: usize,
    ) -> Result<Vec<Candidate>> {
        let config = DecoderConfig {
            k_best: k,
            ..self.config.clone()
        };
        decode(src, &self.models(), weights, &config)
    }
}

/// N-best text block: `sid ||| tokens ||| name= v … ||| score` per line,
/// dense slots first in canonical order, then sparse features.
pub fn render_nbest(sid: usize, cands: &[Candidate]) -> String {
    let mut out = String::new();
    for c in cands {
        let toks: Vec<&str> = c.tokens.iter().map(|t| t.as_ref()).collect();
        let mut fields: Vec<String> = DenseFeature::ALL
            .iter()
            .map(|f| format!("{}= {}", f.name(), c.feats.get(*f)))
            .collect();
        for (name, v) in &c.feats.sparse {
            fields.push(format!("{name}= {v}"));
        }
        out.push_str(&format!(
            "{} ||| {} ||| {} ||| {}\n",
            sid,
            toks.join(" "),
            fields.join(" "),
            c.score
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens;
    use crate::phrasetable::{build_table, ExtractedPhrase, PhraseCounts};

    fn tok(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    fn toy_table(entries: &[(&str, &str, u64)]) -> PhraseTable {
        let mut counts = PhraseCounts::default();
        for &(src, tgt, c) in entries {
            let p = ExtractedPhrase {
                src_span: (0, 1),
                tgt_span: (0, 1),
                src: tokens(src),
                tgt: tokens(tgt),
                alignment: vec![(0, 0)],
            };
            for _ in 0..c {
                counts.add(&p);
            }
        }
        build_table(&counts, None, 7).unwrap()
    }

    fn lm_on(lines: &[&str], order: usize) -> NGramModel {
        let corpus: Vec<Vec<Token>> = lines.iter().map(|l| tokens(l)).collect();
        NGramModel::train(&corpus, order, None).unwrap()
    }

    fn vanilla_cfg() -> DecoderConfig {
        DecoderConfig {
            toggles: FeatureToggles::vanilla(),
            ..DecoderConfig::default()
        }
    }

    #[test]
    fn sparse_identity_pair_empty() {
        let m = sparse_features(
            &tokens("a b"),
            &tokens("a b"),
            &tok(BOS),
            &tok(EOS),
            SparseFamily::E0,
            None,
        )
        .unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn sparse_simple_subst_with_context() {
        let m = sparse_features(
            &tokens("He go home"),
            &tokens("He goes home"),
            &tok(BOS),
            &tok(EOS),
            SparseFamily::E0C10,
            None,
        )
        .unwrap();
        let expect = [
            "E0~subst(go,goes)",
            "E0C10~He_subst(go,goes)",
            "E0C10~subst(go,goes)_home",
            "E0C10~He_subst(go,goes)_home",
        ];
        assert_eq!(m.len(), expect.len());
        for name in expect {
            assert_eq!(m.get(name), Some(&1.0), "{name} missing in {m:?}");
        }
    }

    #[test]
    fn sparse_class_family_requires_map() {
        assert!(sparse_features(
            &tokens("a"),
            &tokens("b"),
            &tok(BOS),
            &tok(EOS),
            SparseFamily::E1,
            None
        )
        .is_err());
        let cm = ClassMap::parse("a\tC1\nb\tC2\n").unwrap();
        let m = sparse_features(
            &tokens("a"),
            &tokens("b"),
            &tok(BOS),
            &tok(EOS),
            SparseFamily::E1,
            Some(&cm),
        )
        .unwrap();
        assert_eq!(m.get("E1~subst(C1,C2)"), Some(&1.0));
    }

    #[test]
    fn options_carry_edit_counts() {
        let table = toy_table(&[("a supermarket .", "at a supermarket", 1)]);
        let models = Models {
            table: &table,
            lm: None,
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let cfg = DecoderConfig {
            toggles: FeatureToggles::with_edit_ops().without(DenseFeature::Lm),
            ..DecoderConfig::default()
        };
        let opts = build_options(&tokens("a supermarket ."), &models, &cfg).unwrap();
        let o = opts[0]
            .iter()
            .find(|o| o.span == (0, 3) && o.tgt == tokens("at a supermarket"))
            .unwrap();
        assert_eq!(o.feats.get(DenseFeature::Ld), 2.0);
        assert_eq!(o.feats.get(DenseFeature::D), 1.0);
        assert_eq!(o.feats.get(DenseFeature::I), 1.0);
        assert_eq!(o.feats.get(DenseFeature::S), 0.0);
    }

    #[test]
    fn options_ld_is_dis_sum() {
        let table = toy_table(&[("go", "goes", 2), ("go", "going to", 1), ("a b", "b", 1)]);
        let models = Models {
            table: &table,
            lm: None,
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let cfg = DecoderConfig {
            toggles: FeatureToggles::with_edit_ops().without(DenseFeature::Lm),
            ..DecoderConfig::default()
        };
        for opts in build_options(&tokens("a b go"), &models, &cfg).unwrap() {
            for o in opts {
                let ld = o.feats.get(DenseFeature::Ld);
                let dis = o.feats.get(DenseFeature::D)
                    + o.feats.get(DenseFeature::I)
                    + o.feats.get(DenseFeature::S);
                assert_eq!(ld, dis);
            }
        }
    }

    #[test]
    fn oov_copy_through() {
        let table = PhraseTable::default();
        let models = Models {
            table: &table,
            lm: Some(&lm_on(&["a b"], 2)),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let opts = build_options(&tokens("zxqv"), &models, &vanilla_cfg()).unwrap();
        assert_eq!(opts[0].len(), 1);
        assert_eq!(opts[0][0].tgt, tokens("zxqv"));
        assert_eq!(opts[0][0].feats.get(DenseFeature::PhiFwd), 0.0);

        let best = decode(&tokens("x y z"), &models, &WeightVec::uniform(FeatureToggles::vanilla()), &vanilla_cfg())
            .unwrap();
        assert_eq!(best[0].tokens, tokens("x y z"));
    }

    #[test]
    fn decode_prefers_lm_supported_correction() {
        let table = toy_table(&[("go", "goes", 1), ("go", "go", 1)]);
        let lm = lm_on(&["He goes home", "She goes home"], 3);
        let models = Models {
            table: &table,
            lm: Some(&lm),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let w = WeightVec::uniform(FeatureToggles::vanilla());
        let best = decode(&tokens("He go home"), &models, &w, &vanilla_cfg()).unwrap();
        assert_eq!(best[0].tokens, tokens("He goes home"));
    }

    #[test]
    fn empty_sentence_single_empty_hypothesis() {
        let table = PhraseTable::default();
        let lm = lm_on(&["a"], 2);
        let models = Models {
            table: &table,
            lm: Some(&lm),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let cfg = DecoderConfig {
            k_best: 5,
            ..vanilla_cfg()
        };
        let out = decode(&[], &models, &WeightVec::uniform(FeatureToggles::vanilla()), &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].tokens.is_empty());
        assert!(out[0].feats.get(DenseFeature::Lm) < 0.0);
    }

    #[test]
    fn nbest_sorted_distinct_and_consistent_with_top1() {
        let table = toy_table(&[("go", "goes", 2), ("go", "go", 1), ("He", "He", 1), ("He", "She", 1)]);
        let lm = lm_on(&["He goes home", "She go home"], 2);
        let models = Models {
            table: &table,
            lm: Some(&lm),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let w = WeightVec::uniform(FeatureToggles::vanilla());
        let cfg = DecoderConfig {
            k_best: 5,
            ..vanilla_cfg()
        };
        let nbest = decode(&tokens("He go home"), &models, &w, &cfg).unwrap();
        assert!(nbest.len() >= 2);
        for pair in nbest.windows(2) {
            assert!(pair[0].score >= pair[1].score);
        }
        let surfaces: HashSet<Vec<Token>> = nbest.iter().map(|c| c.tokens.clone()).collect();
        assert_eq!(surfaces.len(), nbest.len());
        let top1 = decode(&tokens("He go home"), &models, &w, &vanilla_cfg()).unwrap();
        assert_eq!(top1[0].tokens, nbest[0].tokens);
        assert!((top1[0].score - nbest[0].score).abs() < 1e-12);
    }

    #[test]
    fn disabled_feature_weight_has_no_effect() {
        let table = toy_table(&[("go", "goes", 1), ("go", "go", 1)]);
        let lm = lm_on(&["He goes home"], 2);
        let models = Models {
            table: &table,
            lm: Some(&lm),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let cfg = vanilla_cfg();
        let w1 = WeightVec::uniform(FeatureToggles::vanilla());
        let mut w2 = w1.clone();
        w2.set(DenseFeature::Ld, 50.0);
        w2.sparse.insert("E0~subst(go,goes)".into(), -50.0);
        let a = decode(&tokens("He go home"), &models, &w1, &cfg).unwrap();
        let b = decode(&tokens("He go home"), &models, &w2, &cfg).unwrap();
        assert_eq!(a[0].tokens, b[0].tokens);
        assert!((a[0].score - b[0].score).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance_of_argmax() {
        let table = toy_table(&[("go", "goes", 2), ("go", "go", 1)]);
        let lm = lm_on(&["He goes home", "He go home"], 2);
        let models = Models {
            table: &table,
            lm: Some(&lm),
            class_lm: None,
            osm: None,
            classmap: None,
        };
        let mut w = WeightVec::uniform(FeatureToggles::vanilla());
        w.set(DenseFeature::Lm, 0.7);
        let scaled = w.plus_scaled(&w, 2.5); // 3.5 * w
        let a = decode(&tokens("He go home"), &models, &w, &vanilla_cfg()).unwrap();
        let b = decode(&tokens("He go home"), &models, &scaled, &vanilla_cfg()).unwrap();
        assert_eq!(a[0].tokens, b[0].tokens);
    }

    #[test]
    fn nbest_render_format() {
        let c = Candidate {
            tokens: tokens("a b"),
            feats: FeatureVec::default(),
            score: -1.5,
        };
        let line = render_nbest(3, &[c]);
        assert!(line.starts_with("3 ||| a b ||| phi_fwd= 0 "));
        assert!(line.trim_end().ends_with("||| -1.5"));
    }
}
