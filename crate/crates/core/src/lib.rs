//! Discovery of dataset-compressing molecular substructures from SMILES
//! corpora, scored by an exact minimum-message-length objective; count
//! fingerprints over the discovered codebook; and a ridge-regression
//! benchmark harness for comparing fingerprint representations.
//!
//! The pipeline, end to end:
//!
//! 1. [`lexer`] segments each SMILES line into symbols.
//! 2. [`search`] greedily adopts the substring whose replacement by a fresh
//!    meta-symbol most shortens the three-part message of [`codelength`],
//!    keeping only candidates that pass the [`validity`] filter.
//! 3. [`fingerprint`](mod@fingerprint) turns molecules into count vectors
//!    over the final [`codebook`].
//! 4. [`eval`] benchmarks those vectors with ridge regression under repeated
//!    splits, with Wilcoxon/Benjamini-Hochberg comparisons across datasets.
//!
//! Data-parallel sections (candidate scoring, batch fingerprinting, benchmark
//! repeats) run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to sequential iteration without it. Results are
//! identical either way.

pub mod codebook;
pub mod codelength;
pub mod corpus;
pub mod eval;
pub mod fingerprint;
pub mod io;
pub mod lexer;
mod par;
pub mod search;
pub mod synth;
pub mod validity;

pub use codebook::{Codebook, CodebookEntry, EntryId};
pub use codelength::{
    log_star, part1, part2, part3, substring_cost, total_length, LogStarMode, MessageLength,
    SymbolTable, VocabItem, VocabularyCounts,
};
pub use fingerprint::{fingerprint, fingerprint_corpus, Fingerprint, MatchMode};
pub use lexer::{render, tokenize, LexError, Token, TokenKind, TokenStream};
pub use par::with_thread_limit;
pub use search::{
    fgcompress, fgcompress_with_observer, Candidate, CompressionOutcome, IterationTrace,
    SearchConfig, SearchError, SearchState, TraceRow,
};
pub use validity::{is_valid_substring, ValidityRule, ValidityVerdict};
