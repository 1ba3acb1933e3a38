//! Synthetic learner-corpus generator.
//!
//! Produces annotated sentences from a tiny template grammar and plants
//! rule-based article and verb-agreement errors, recording the gold edits
//! that undo them. Deterministic for a fixed seed, so experiments and
//! end-to-end tests can rebuild identical corpora.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSentence, Corpus, Edit, Token};
use crate::ngram::ClassMap;

const NOUNS: [(&str, &str); 10] = [
    ("cat", "cats"),
    ("dog", "dogs"),
    ("child", "children"),
    ("problem", "problems"),
    ("student", "students"),
    ("teacher", "teachers"),
    ("book", "books"),
    ("car", "cars"),
    ("house", "houses"),
    ("river", "rivers"),
];

const VERBS: [(&str, &str); 6] = [
    ("sees", "see"),
    ("likes", "like"),
    ("finds", "find"),
    ("takes", "take"),
    ("watches", "watch"),
    ("follows", "follow"),
];

const ADJS: [&str; 6] = ["small", "big", "red", "old", "new", "quick"];
const ADVS: [&str; 4] = ["today", "often", "there", "quietly"];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Number {
    Sg,
    Pl,
}

/// Error-planting site attached to a clean token.
#[derive(Clone, Debug)]
enum Site {
    Plain,
    /// an article; substitution and deletion errors apply
    Article(Number),
    /// a bare plural noun; a spurious article may be inserted before it
    BareNoun,
    /// a verb; the disagreeing form may be substituted
    Verb { other: Token },
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub sentences: usize,
    /// per-site probability of an article error
    pub article_error: f64,
    /// per-site probability of a verb-agreement error
    pub verb_error: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 2000,
            article_error: 0.3,
            verb_error: 0.3,
            seed: 1,
        }
    }
}

fn tok(s: &str) -> Token {
    Token::new(s).unwrap()
}

fn noun_phrase(rng: &mut ChaCha8Rng, out: &mut Vec<(Token, Site)>) -> Number {
    let number = if rng.gen_bool(0.5) { Number::Sg } else { Number::Pl };
    let (sg, pl) = NOUNS[rng.gen_range(0..NOUNS.len())];
    let bare = match number {
        Number::Sg => {
            let det = if rng.gen_bool(0.5) { "a" } else { "the" };
            out.push((tok(det), Site::Article(Number::Sg)));
            false
        }
        Number::Pl => {
            if rng.gen_bool(0.5) {
                out.push((tok("the"), Site::Article(Number::Pl)));
                false
            } else {
                true
            }
        }
    };
    if rng.gen_bool(0.4) {
        out.push((tok(ADJS[rng.gen_range(0..ADJS.len())]), Site::Plain));
    }
    let noun = match number {
        Number::Sg => sg,
        Number::Pl => pl,
    };
    let site = if bare { Site::BareNoun } else { Site::Plain };
    out.push((tok(noun), site));
    number
}

fn clean_sentence(rng: &mut ChaCha8Rng) -> Vec<(Token, Site)> {
    let mut out = Vec::new();
    let subject = noun_phrase(rng, &mut out);
    let (sg, pl) = VERBS[rng.gen_range(0..VERBS.len())];
    let (form, other) = match subject {
        Number::Sg => (sg, pl),
        Number::Pl => (pl, sg),
    };
    out.push((tok(form), Site::Verb { other: tok(other) }));
    noun_phrase(rng, &mut out);
    if rng.gen_bool(0.3) {
        out.push((tok(ADVS[rng.gen_range(0..ADVS.len())]), Site::Plain));
    }
    out.push((tok("."), Site::Plain));
    out
}

/// Corrupt one clean sentence, returning the errorful source and the gold
/// edits (annotator 0) that restore the clean text.
fn corrupt(
    rng: &mut ChaCha8Rng,
    clean: Vec<(Token, Site)>,
    cfg: &SynthConfig,
) -> AnnotatedSentence {
    let mut src: Vec<Token> = Vec::new();
    let mut edits: Vec<Edit> = Vec::new();
    for (t, site) in clean {
        match site {
            Site::Article(number) if rng.gen_bool(cfg.article_error) => {
                if rng.gen_bool(0.5) {
                    let wrong = match (number, t.as_ref()) {
                        (Number::Sg, "a") => "the",
                        _ => "a",
                    };
                    edits.push(
                        Edit::new(src.len(), src.len() + 1, vec![t]).with_type("ArtOrDet"),
                    );
                    src.push(tok(wrong));
                } else {
                    edits.push(Edit::new(src.len(), src.len(), vec![t]).with_type("ArtOrDet"));
                }
            }
            Site::BareNoun if rng.gen_bool(cfg.article_error) => {
                let spurious = if rng.gen_bool(0.5) { "a" } else { "the" };
                edits.push(Edit::new(src.len(), src.len() + 1, Vec::new()).with_type("ArtOrDet"));
                src.push(tok(spurious));
                src.push(t);
            }
            Site::Verb { other } if rng.gen_bool(cfg.verb_error) => {
                edits.push(Edit::new(src.len(), src.len() + 1, vec![t]).with_type("SVA"));
                src.push(other);
            }
            _ => src.push(t),
        }
    }
    let mut sent = AnnotatedSentence::new(src);
    sent.gold.insert(0, edits);
    sent
}

/// Generate a seeded annotated corpus.
pub fn generate(cfg: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sentences = (0..cfg.sentences)
        .map(|_| {
            let clean = clean_sentence(&mut rng);
            corrupt(&mut rng, clean, cfg)
        })
        .collect();
    Corpus::new(sentences)
}

/// Word classes for the generator's vocabulary, keyed by syntactic category
/// and number.
pub fn class_map() -> ClassMap {
    let mut rows = String::new();
    for (sg, pl) in NOUNS {
        rows.push_str(&format!("{sg}\tNSG\n{pl}\tNPL\n"));
    }
    for (sg, pl) in VERBS {
        rows.push_str(&format!("{sg}\tVSG\n{pl}\tVPL\n"));
    }
    for a in ADJS {
        rows.push_str(&format!("{a}\tADJ\n"));
    }
    for a in ADVS {
        rows.push_str(&format!("{a}\tADV\n"));
    }
    rows.push_str("a\tDET\nthe\tDET\n.\tPUNC\n");
    ClassMap::parse(&rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::apply_edits;

    #[test]
    fn deterministic_for_seed() {
        let cfg = SynthConfig {
            sentences: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.sentences.len(), 50);
        for (x, y) in a.sentences.iter().zip(&b.sentences) {
            assert_eq!(x.source, y.source);
            assert_eq!(x.gold, y.gold);
        }
    }

    #[test]
    fn gold_edits_restore_clean_text() {
        let cfg = SynthConfig {
            sentences: 200,
            ..SynthConfig::default()
        };
        let corpus = generate(&cfg);
        let classes = class_map();
        let mut corrected_any = 0usize;
        for sent in &corpus.sentences {
            let edits = &sent.gold[&0];
            let fixed = apply_edits(&sent.source, edits);
            // every clean token is in the generator vocabulary
            for t in &fixed {
                assert_ne!(classes.class_of(t).as_ref(), "CUNK", "unknown word {t:?}");
            }
            assert_eq!(*fixed.last().unwrap(), Token::new(".").unwrap());
            if !edits.is_empty() {
                corrected_any += 1;
            }
        }
        // with two to four sites per sentence at rate 0.3 most draws differ
        assert!(corrected_any > 50, "only {corrected_any} corrupted sentences");
    }

    #[test]
    fn error_sites_cover_all_three_edit_shapes() {
        let cfg = SynthConfig {
            sentences: 300,
            ..SynthConfig::default()
        };
        let corpus = generate(&cfg);
        let mut subst = 0;
        let mut ins = 0;
        let mut del = 0;
        for sent in &corpus.sentences {
            for e in &sent.gold[&0] {
                if e.start == e.end {
                    ins += 1;
                } else if e.replacement.is_empty() {
                    del += 1;
                } else {
                    subst += 1;
                }
            }
        }
        assert!(subst > 0 && ins > 0 && del > 0, "{subst}/{ins}/{del}");
    }
}
