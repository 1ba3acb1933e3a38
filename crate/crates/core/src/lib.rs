//! Grammatical error correction as monotone phrase-based translation.
//!
//! The crate covers the full desk-scale pipeline: parallel error-corpus
//! handling in the CoNLL m2 format, token-level edit alignment, the
//! MaxMatch (M2) correction metric and BLEU, backoff n-gram language
//! models, translation model estimation from parallel data, a monotone
//! beam decoder with dense and sparse edit features, and weight tuning
//! (MERT, PRO, Mira) with cross-fold averaging.
//!
//! All floating point model artifacts round-trip exactly through their
//! text formats, and every random choice is driven by explicit seeds, so
//! a pipeline run is reproducible byte for byte.

pub mod corpus;
pub mod decoder;
pub mod editops;
pub mod errors;
pub mod features;
pub mod metric;
pub mod ngram;
pub mod phrasetable;
pub mod synth;
pub mod tuner;
pub mod util;

pub use errors::{Error, Result};
