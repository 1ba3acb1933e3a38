//! Log-linear feature and weight vectors.
//!
//! Dense features live in a fixed-order array of named slots; sparse
//! features are an open-ended name → value map. A weight absent for a
//! sparse feature reads as zero, so feature and weight vectors never have
//! to agree on a sparse vocabulary.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use crate::errors::{Error, Result};

pub const NUM_DENSE: usize = 13;

/// The dense feature slots in canonical (file and report) order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DenseFeature {
    PhiFwd,
    LexFwd,
    PhiBwd,
    LexBwd,
    Lm,
    ClassLm,
    Osm,
    Ld,
    D,
    I,
    S,
    WordPenalty,
    PhrasePenalty,
}

impl DenseFeature {
    pub const ALL: [DenseFeature; NUM_DENSE] = [
        DenseFeature::PhiFwd,
        DenseFeature::LexFwd,
        DenseFeature::PhiBwd,
        DenseFeature::LexBwd,
        DenseFeature::Lm,
        DenseFeature::ClassLm,
        DenseFeature::Osm,
        DenseFeature::Ld,
        DenseFeature::D,
        DenseFeature::I,
        DenseFeature::S,
        DenseFeature::WordPenalty,
        DenseFeature::PhrasePenalty,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DenseFeature::PhiFwd => "phi_fwd",
            DenseFeature::LexFwd => "lex_fwd",
            DenseFeature::PhiBwd => "phi_bwd",
            DenseFeature::LexBwd => "lex_bwd",
            DenseFeature::Lm => "lm",
            DenseFeature::ClassLm => "class_lm",
            DenseFeature::Osm => "osm",
            DenseFeature::Ld => "ld",
            DenseFeature::D => "d",
            DenseFeature::I => "i",
            DenseFeature::S => "s",
            DenseFeature::WordPenalty => "word_penalty",
            DenseFeature::PhrasePenalty => "phrase_penalty",
        }
    }

    pub fn from_name(name: &str) -> Option<DenseFeature> {
        DenseFeature::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Bitmask of enabled dense features.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FeatureToggles(u16);

impl FeatureToggles {
    pub fn none() -> Self {
        FeatureToggles(0)
    }

    pub fn all() -> Self {
        FeatureToggles((1 << NUM_DENSE) - 1)
    }

    /// Translation scores, word LM and the two penalties.
    pub fn vanilla() -> Self {
        FeatureToggles::none()
            .with(DenseFeature::PhiFwd)
            .with(DenseFeature::LexFwd)
            .with(DenseFeature::PhiBwd)
            .with(DenseFeature::LexBwd)
            .with(DenseFeature::Lm)
            .with(DenseFeature::WordPenalty)
            .with(DenseFeature::PhrasePenalty)
    }

    /// Vanilla plus the edit-distance feature.
    pub fn with_edit_distance() -> Self {
        FeatureToggles::vanilla().with(DenseFeature::Ld)
    }

    /// Edit distance plus the per-operation deletion/insertion/substitution
    /// counts.
    pub fn with_edit_ops() -> Self {
        FeatureToggles::with_edit_distance()
            .with(DenseFeature::D)
            .with(DenseFeature::I)
            .with(DenseFeature::S)
    }

    pub fn with(self, f: DenseFeature) -> Self {
        FeatureToggles(self.0 | (1 << f.index()))
    }

    pub fn without(self, f: DenseFeature) -> Self {
        FeatureToggles(self.0 & !(1 << f.index()))
    }

    pub fn enabled(self, f: DenseFeature) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = DenseFeature> {
        DenseFeature::ALL.into_iter().filter(move |f| self.enabled(*f))
    }
}

impl Default for FeatureToggles {
    fn default() -> Self {
        FeatureToggles::all()
    }
}

/// Accumulated feature values of a hypothesis or option.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVec {
    pub dense: [f64; NUM_DENSE],
    pub sparse: BTreeMap<String, f64>,
}

impl FeatureVec {
    pub fn get(&self, f: DenseFeature) -> f64 {
        self.dense[f.index()]
    }

    pub fn set(&mut self, f: DenseFeature, v: f64) {
        self.dense[f.index()] = v;
    }

    pub fn bump_sparse(&mut self, name: &str, v: f64) {
        *self.sparse.entry(name.to_string()).or_insert(0.0) += v;
    }

    /// Copy with disabled dense slots zeroed.
    pub fn masked(&self, toggles: FeatureToggles) -> FeatureVec {
        let mut out = self.clone();
        for f in DenseFeature::ALL {
            if !toggles.enabled(f) {
                out.dense[f.index()] = 0.0;
            }
        }
        out
    }
}

impl AddAssign<&FeatureVec> for FeatureVec {
    fn add_assign(&mut self, rhs: &FeatureVec) {
        for k in 0..NUM_DENSE {
            self.dense[k] += rhs.dense[k];
        }
        for (name, v) in &rhs.sparse {
            *self.sparse.entry(name.clone()).or_insert(0.0) += v;
        }
    }
}

/// Log-linear weights over the same layout as [`FeatureVec`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightVec {
    pub dense: [f64; NUM_DENSE],
    pub sparse: BTreeMap<String, f64>,
}

impl WeightVec {
    pub fn zeros() -> Self {
        WeightVec::default()
    }

    /// Weight 1 on every enabled dense slot, nothing sparse.
    pub fn uniform(toggles: FeatureToggles) -> Self {
        let mut w = WeightVec::default();
        for f in toggles.iter() {
            w.dense[f.index()] = 1.0;
        }
        w
    }

    pub fn get(&self, f: DenseFeature) -> f64 {
        self.dense[f.index()]
    }

    pub fn set(&mut self, f: DenseFeature, v: f64) {
        self.dense[f.index()] = v;
    }

    pub fn sparse_weight(&self, name: &str) -> f64 {
        self.sparse.get(name).copied().unwrap_or(0.0)
    }

    pub fn dot(&self, f: &FeatureVec) -> f64 {
        let mut total = 0.0;
        for k in 0..NUM_DENSE {
            total += self.dense[k] * f.dense[k];
        }
        for (name, v) in &f.sparse {
            total += self.sparse_weight(name) * v;
        }
        total
    }

    /// `self + gamma * dir` over both blocks.
    pub fn plus_scaled(&self, dir: &WeightVec, gamma: f64) -> WeightVec {
        let mut out = self.clone();
        for k in 0..NUM_DENSE {
            out.dense[k] += gamma * dir.dense[k];
        }
        for (name, v) in &dir.sparse {
            *out.sparse.entry(name.clone()).or_insert(0.0) += gamma * v;
        }
        out
    }

    /// `psi * new + (1 - psi) * self` over both blocks.
    pub fn interpolate(&self, new: &WeightVec, psi: f64) -> WeightVec {
        let mut out = WeightVec::default();
        for k in 0..NUM_DENSE {
            out.dense[k] = psi * new.dense[k] + (1.0 - psi) * self.dense[k];
        }
        let names: std::collections::BTreeSet<&String> =
            self.sparse.keys().chain(new.sparse.keys()).collect();
        for name in names {
            let v = psi * new.sparse_weight(name) + (1.0 - psi) * self.sparse_weight(name);
            out.sparse.insert(name.clone(), v);
        }
        out
    }

    /// Dense block divided by its L1 norm; unchanged when the norm is zero.
    /// The sparse block is left alone.
    pub fn l1_normalized_dense(&self) -> WeightVec {
        let norm: f64 = self.dense.iter().map(|v| v.abs()).sum();
        if norm == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for v in &mut out.dense {
            *v /= norm;
        }
        out
    }

    /// `name<TAB>value` lines: the 13 dense slots in canonical order, then
    /// sparse names sorted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in DenseFeature::ALL {
            out.push_str(&format!("{}\t{}\n", f.name(), self.dense[f.index()]));
        }
        for (name, v) in &self.sparse {
            out.push_str(&format!("{name}\t{v}\n"));
        }
        out
    }

    /// Parse a weights file. Names that are not dense slots are sparse
    /// weights. Duplicate names are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut w = WeightVec::default();
        let mut seen_dense = [false; NUM_DENSE];
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("weights", i + 1, "expected `name<TAB>value`"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse("weights", i + 1, "bad weight value"))?;
            if !value.is_finite() {
                return Err(Error::parse("weights", i + 1, "weight must be finite"));
            }
            match DenseFeature::from_name(name) {
                Some(f) => {
                    if seen_dense[f.index()] {
                        return Err(Error::parse("weights", i + 1, "duplicate weight name"));
                    }
                    seen_dense[f.index()] = true;
                    w.dense[f.index()] = value;
                }
                None => {
                    if w.sparse.insert(name.to_string(), value).is_some() {
                        return Err(Error::parse("weights", i + 1, "duplicate weight name"));
                    }
                }
            }
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in DenseFeature::ALL {
            assert_eq!(DenseFeature::from_name(f.name()), Some(f));
        }
        assert_eq!(DenseFeature::from_name("nope"), None);
    }

    #[test]
    fn toggle_presets_nest() {
        let v = FeatureToggles::vanilla();
        assert!(v.enabled(DenseFeature::Lm));
        assert!(!v.enabled(DenseFeature::Ld));
        let ld = FeatureToggles::with_edit_distance();
        assert!(ld.enabled(DenseFeature::Ld) && !ld.enabled(DenseFeature::D));
        let dis = FeatureToggles::with_edit_ops();
        for f in [DenseFeature::Ld, DenseFeature::D, DenseFeature::I, DenseFeature::S] {
            assert!(dis.enabled(f));
        }
        assert!(!dis.enabled(DenseFeature::ClassLm));
        assert_eq!(FeatureToggles::all().iter().count(), NUM_DENSE);
    }

    #[test]
    fn dot_with_sparse_zero_fill() {
        let mut f = FeatureVec::default();
        f.set(DenseFeature::Ld, 2.0);
        f.bump_sparse("subst(a,b)", 1.0);
        f.bump_sparse("unweighted", 3.0);
        let mut w = WeightVec::zeros();
        w.set(DenseFeature::Ld, -0.5);
        w.sparse.insert("subst(a,b)".into(), 2.0);
        assert_eq!(w.dot(&f), -1.0 + 2.0);
    }

    #[test]
    fn masked_zeroes_disabled_slots() {
        let mut f = FeatureVec::default();
        f.set(DenseFeature::Ld, 3.0);
        f.set(DenseFeature::Lm, -1.0);
        let m = f.masked(FeatureToggles::vanilla());
        assert_eq!(m.get(DenseFeature::Ld), 0.0);
        assert_eq!(m.get(DenseFeature::Lm), -1.0);
    }

    #[test]
    fn weights_file_round_trip() {
        let mut w = WeightVec::uniform(FeatureToggles::with_edit_ops());
        w.set(DenseFeature::Lm, 0.33);
        w.sparse.insert("E0~subst(a,b)".into(), -0.125);
        let text = w.render();
        let parsed = WeightVec::parse(&text).unwrap();
        assert_eq!(parsed, w);
        assert_eq!(parsed.render(), text);
    }

    #[test]
    fn weights_parse_errors() {
        assert!(WeightVec::parse("lm 0.5\n").is_err());
        assert!(WeightVec::parse("lm\tx\n").is_err());
        assert!(WeightVec::parse("lm\t1\nlm\t2\n").is_err());
        assert!(WeightVec::parse("lm\tinf\n").is_err());
    }

    #[test]
    fn interpolate_edges() {
        let a = WeightVec::uniform(FeatureToggles::vanilla());
        let mut b = WeightVec::zeros();
        b.set(DenseFeature::Lm, 4.0);
        b.sparse.insert("x".into(), 2.0);
        let keep = a.interpolate(&b, 0.0);
        assert_eq!(keep.dense, a.dense);
        assert_eq!(keep.sparse_weight("x"), 0.0);
        let take = a.interpolate(&b, 1.0);
        assert_eq!(take.get(DenseFeature::Lm), 4.0);
        assert_eq!(take.sparse_weight("x"), 2.0);
        let mid = a.interpolate(&b, 0.5);
        assert_eq!(mid.get(DenseFeature::Lm), 2.5);
        assert_eq!(mid.get(DenseFeature::PhiFwd), 0.5);
    }

    #[test]
    fn l1_normalization() {
        let mut w = WeightVec::zeros();
        w.set(DenseFeature::Lm, 2.0);
        w.set(DenseFeature::Ld, -2.0);
        let n = w.l1_normalized_dense();
        assert_eq!(n.get(DenseFeature::Lm), 0.5);
        assert_eq!(n.get(DenseFeature::Ld), -0.5);
        assert_eq!(WeightVec::zeros().l1_normalized_dense(), WeightVec::zeros());
    }

    #[test]
    fn plus_scaled_both_blocks() {
        let mut w = WeightVec::zeros();
        w.set(DenseFeature::Lm, 1.0);
        let mut d = WeightVec::zeros();
        d.set(DenseFeature::Lm, 2.0);
        d.sparse.insert("x".into(), 1.0);
        let out = w.plus_scaled(&d, 0.25);
        assert_eq!(out.get(DenseFeature::Lm), 1.5);
        assert_eq!(out.sparse_weight("x"), 0.25);
    }
}
