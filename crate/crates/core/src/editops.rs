//! Token-level Levenshtein alignment and edit extraction.
//!
//! Alignments use unit costs for substitution, insertion and deletion. Among
//! all minimum-cost alignments the one with the most MATCH operations is
//! chosen, and remaining ties are broken by walking the alignment left to
//! right preferring MATCH, then SUBST, then DEL, then INS. This makes the
//! decomposition of the distance into per-operation counts deterministic and
//! keeps equal tokens aligned to each other whenever the distance allows it.

use crate::corpus::{Edit, Token};

/// One step of an alignment path. Indices refer to the full input sequences;
/// for insertions `src` is the insertion point (number of source tokens
/// consumed so far).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AlignOp {
    Match { src: usize, tgt: usize },
    Subst { src: usize, tgt: usize },
    Ins { src: usize, tgt: usize },
    Del { src: usize },
}

impl AlignOp {
    pub fn is_match(&self) -> bool {
        matches!(self, AlignOp::Match { .. })
    }

    /// Number of source tokens this op consumes (0 or 1).
    pub fn src_width(&self) -> usize {
        match self {
            AlignOp::Match { .. } | AlignOp::Subst { .. } | AlignOp::Del { .. } => 1,
            AlignOp::Ins { .. } => 0,
        }
    }
}

/// Per-operation decomposition of an edit distance.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct EditCounts {
    pub ld: usize,
    pub del: usize,
    pub ins: usize,
    pub sub: usize,
}

/// Symbol alphabet for [`op_sequence`].
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum OpAlphabet {
    /// Four symbols: `M`, `S`, `I`, `D`.
    #[default]
    Plain,
    /// `M` plus operation symbols carrying a token: `S_x` and `I_x` with the
    /// target token, `D_x` with the deleted source token.
    Lexicalized,
}

/// Align `src` to `tgt`, returning the edit distance and the alignment path.
pub fn lev_align<S: AsRef<str>, T: AsRef<str>>(src: &[S], tgt: &[T]) -> (usize, Vec<AlignOp>) {
    let n = src.len();
    let m = tgt.len();
    // Suffix DP over (cost, matches): minimize cost, then maximize matches.
    let mut cost = vec![vec![0u32; m + 1]; n + 1];
    let mut hits = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            if i == n {
                cost[i][j] = (m - j) as u32;
                continue;
            }
            if j == m {
                cost[i][j] = (n - i) as u32;
                continue;
            }
            let eq = src[i].as_ref() == tgt[j].as_ref();
            let mut best = if eq {
                (cost[i + 1][j + 1], hits[i + 1][j + 1] + 1)
            } else {
                (cost[i + 1][j + 1] + 1, hits[i + 1][j + 1])
            };
            for cand in [
                (cost[i + 1][j] + 1, hits[i + 1][j]),
                (cost[i][j + 1] + 1, hits[i][j + 1]),
            ] {
                if cand.0 < best.0 || (cand.0 == best.0 && cand.1 > best.1) {
                    best = cand;
                }
            }
            cost[i][j] = best.0;
            hits[i][j] = best.1;
        }
    }

    let mut path = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let want = (cost[i][j], hits[i][j]);
        if i < n && j < m && src[i].as_ref() == tgt[j].as_ref() && want == (cost[i + 1][j + 1], hits[i + 1][j + 1] + 1)
        {
            path.push(AlignOp::Match { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n
            && j < m
            && src[i].as_ref() != tgt[j].as_ref()
            && want == (cost[i + 1][j + 1] + 1, hits[i + 1][j + 1])
        {
            path.push(AlignOp::Subst { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n && want == (cost[i + 1][j] + 1, hits[i + 1][j]) {
            path.push(AlignOp::Del { src: i });
            i += 1;
        } else {
            debug_assert!(j < m && want == (cost[i][j + 1] + 1, hits[i][j + 1]));
            path.push(AlignOp::Ins { src: i, tgt: j });
            j += 1;
        }
    }
    (cost[0][0] as usize, path)
}

/// Edit distance plus its deletion/insertion/substitution decomposition.
pub fn edit_op_counts<S: AsRef<str>, T: AsRef<str>>(src: &[S], tgt: &[T]) -> EditCounts {
    let (ld, path) = lev_align(src, tgt);
    let mut counts = EditCounts {
        ld,
        ..EditCounts::default()
    };
    for op in &path {
        match op {
            AlignOp::Match { .. } => {}
            AlignOp::Subst { .. } => counts.sub += 1,
            AlignOp::Ins { .. } => counts.ins += 1,
            AlignOp::Del { .. } => counts.del += 1,
        }
    }
    debug_assert_eq!(counts.ld, counts.del + counts.ins + counts.sub);
    counts
}

/// Collapse an alignment into span edits.
///
/// Each edit holds exactly one source-consuming operation (SUBST or DEL),
/// with any immediately following insertions folded into its replacement; a
/// run of insertions not preceded by an edit forms a zero-width edit of its
/// own. Matches close the current edit.
pub fn extract_edits(src: &[Token], tgt: &[Token]) -> Vec<Edit> {
    let (_, path) = lev_align(src, tgt);
    let mut edits: Vec<Edit> = Vec::new();
    let mut open: Option<Edit> = None;
    for op in &path {
        match *op {
            AlignOp::Match { .. } => {
                if let Some(e) = open.take() {
                    edits.push(e);
                }
            }
            AlignOp::Subst { src: i, tgt: j } => {
                if let Some(e) = open.take() {
                    edits.push(e);
                }
                open = Some(Edit::new(i, i + 1, vec![tgt[j].clone()]));
            }
            AlignOp::Del { src: i } => {
                if let Some(e) = open.take() {
                    edits.push(e);
                }
                open = Some(Edit::new(i, i + 1, vec![]));
            }
            AlignOp::Ins { src: i, tgt: j } => match open.as_mut() {
                Some(e) => e.replacement.push(tgt[j].clone()),
                None => open = Some(Edit::new(i, i, vec![tgt[j].clone()])),
            },
        }
    }
    if let Some(e) = open.take() {
        edits.push(e);
    }
    edits
}

/// The non-MATCH operations of the alignment, in path order.
pub fn atomic_edits<S: AsRef<str>, T: AsRef<str>>(src: &[S], tgt: &[T]) -> Vec<AlignOp> {
    lev_align(src, tgt)
        .1
        .into_iter()
        .filter(|op| !op.is_match())
        .collect()
}

/// Render the alignment as a symbol sequence suitable for n-gram modeling.
pub fn op_sequence<S: AsRef<str>, T: AsRef<str>>(
    src: &[S],
    tgt: &[T],
    alphabet: OpAlphabet,
) -> Vec<String> {
    lev_align(src, tgt)
        .1
        .iter()
        .map(|op| match (alphabet, op) {
            (_, AlignOp::Match { .. }) => "M".to_string(),
            (OpAlphabet::Plain, AlignOp::Subst { .. }) => "S".to_string(),
            (OpAlphabet::Plain, AlignOp::Ins { .. }) => "I".to_string(),
            (OpAlphabet::Plain, AlignOp::Del { .. }) => "D".to_string(),
            (OpAlphabet::Lexicalized, AlignOp::Subst { tgt: j, .. }) => {
                format!("S_{}", tgt[*j].as_ref())
            }
            (OpAlphabet::Lexicalized, AlignOp::Ins { tgt: j, .. }) => {
                format!("I_{}", tgt[*j].as_ref())
            }
            (OpAlphabet::Lexicalized, AlignOp::Del { src: i }) => {
                format!("D_{}", src[*i].as_ref())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens;

    fn counts(src: &str, tgt: &str) -> EditCounts {
        edit_op_counts(&tokens(src), &tokens(tgt))
    }

    #[test]
    fn distance_decomposition_rows() {
        let rows = [
            ("a short time .", "short term only .", 3, 1, 1, 1),
            ("a situation", "into a situation", 1, 0, 1, 0),
            ("a supermarket .", "a supermarket .", 0, 0, 0, 0),
            ("a supermarket .", "at a supermarket", 2, 1, 1, 0),
            ("able", "unable", 1, 0, 0, 1),
        ];
        for (src, tgt, ld, d, i, s) in rows {
            let c = counts(src, tgt);
            assert_eq!((c.ld, c.del, c.ins, c.sub), (ld, d, i, s), "{src} -> {tgt}");
        }
    }

    #[test]
    fn empty_source_is_pure_insertion() {
        let c = edit_op_counts::<&str, _>(&[], &tokens("x y"));
        assert_eq!((c.ld, c.del, c.ins, c.sub), (2, 0, 2, 0));
    }

    #[test]
    fn plain_op_sequence() {
        let ops = op_sequence(&tokens("a short time ."), &tokens("short term only ."), OpAlphabet::Plain);
        assert_eq!(ops, vec!["D", "M", "S", "I", "M"]);
    }

    #[test]
    fn lexicalized_op_sequence() {
        let ops = op_sequence(&tokens("able"), &tokens("unable"), OpAlphabet::Lexicalized);
        assert_eq!(ops, vec!["S_unable"]);
        let ops = op_sequence(&tokens("a b"), &tokens("b c"), OpAlphabet::Lexicalized);
        assert_eq!(ops, vec!["D_a", "M", "I_c"]);
    }

    #[test]
    fn extract_single_substitution() {
        let edits = extract_edits(&tokens("a cat"), &tokens("the cat"));
        assert_eq!(edits, vec![Edit::new(0, 1, tokens("the"))]);
    }

    #[test]
    fn extract_identity_is_empty() {
        assert!(extract_edits(&tokens("same text"), &tokens("same text")).is_empty());
    }

    #[test]
    fn extract_folds_insertion_into_preceding_edit() {
        let edits = extract_edits(
            &tokens("Then a new problem comes out ."),
            &tokens("Hence , a new problem surfaces ."),
        );
        assert_eq!(
            edits,
            vec![
                Edit::new(0, 1, tokens("Hence ,")),
                Edit::new(4, 5, tokens("surfaces")),
                Edit::new(5, 6, vec![]),
            ]
        );
    }

    #[test]
    fn atomic_edits_keep_path_order() {
        let atoms = atomic_edits(
            &tokens("Then a new problem comes out ."),
            &tokens("Hence , a new problem surfaces ."),
        );
        assert_eq!(
            atoms,
            vec![
                AlignOp::Subst { src: 0, tgt: 0 },
                AlignOp::Ins { src: 1, tgt: 1 },
                AlignOp::Subst { src: 4, tgt: 5 },
                AlignOp::Del { src: 5 },
            ]
        );
    }

    #[test]
    fn applying_extracted_edits_reproduces_target() {
        let cases = [
            ("a short time .", "short term only ."),
            ("a supermarket .", "at a supermarket"),
            ("", "x y"),
            ("a b c", ""),
            ("a lot of people", "many people"),
        ];
        for (s, t) in cases {
            let src = tokens(s);
            let tgt = tokens(t);
            let edits = extract_edits(&src, &tgt);
            assert_eq!(crate::corpus::apply_edits(&src, &edits), tgt, "{s} -> {t}");
        }
    }

    #[test]
    fn deletion_minus_insertion_matches_length_difference() {
        let c = counts("a b c d e", "b x");
        assert_eq!(
            c.del as isize - c.ins as isize,
            5 - 2,
        );
    }
}
