//! Estimation and analysis of linear/incremental/deep mappings between word
//! forms (boundary-marked letter n-grams) and distributional semantic
//! vectors, together with the productivity analytics built on top of them:
//! held-out accuracy, centroid/cue correlation structure, compound
//! composition, and diachronic type/token statistics.

// Link the system BLAS/LAPACK backend.
extern crate blas_src;

pub mod centroid;
pub mod compound;
pub mod config;
pub mod corpus;
pub mod deep;
pub mod diachronic;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod form;
pub mod linalg;
pub mod mapping;
pub mod report;
pub mod synth;

pub use corpus::{
    assemble_dataset, load_embeddings, load_lexicon, save_embeddings, Dataset, EmbeddingTable,
    JoinKey, LexiconSchema, Role, WordEntry,
};
pub use error::{Error, Result};
pub use eval::{accuracy_report, production_accuracy, rank_target, AccuracyReport};
pub use form::{
    build_form_matrix, coverage_split, extract_ngrams, CueIndex, FormMatrix, SplitPolicy,
};
pub use mapping::{
    solve_endstate, solve_endstate_sparse, train_frequency_informed, Direction, LinearMapping,
    Method,
};

/// Derive a stage-specific seed from the experiment root seed, so that every
/// random stream is reproducible yet distinct per stage.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded with the root.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ root.rotate_left(17);
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
