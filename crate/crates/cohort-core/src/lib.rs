//! Batch cohort selection from clinical notes: record parsing, lightweight
//! clinical text processing, 13 criterion evaluators, model-driven lexicon
//! curation, and a challenge-compatible scoring harness.

pub mod criteria;
pub mod embeddings;
pub mod iels;
pub mod lexicon;
pub mod mlcore;
pub mod record;
pub mod resources;
pub mod scoring;
pub mod synth;
pub mod temporal;
pub mod textproc;
