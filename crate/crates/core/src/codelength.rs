//! Exact three-part message length of a (codebook, corpus) state, in bits.
//!
//! * `part1` — transmitting the codebook substrings themselves: a log-star
//!   length code per entry plus an optimal code for each constituent symbol
//!   under the frozen symbol table.
//! * `part2` — the MML87 multinomial cost of the vocabulary probabilities
//!   together with the observed item counts.
//! * `part3` — the log2 multinomial coefficient selecting the concrete
//!   sequence among all orderings with those counts.
//!
//! All logarithms are base 2. Nothing here ever emits an actual bitstream;
//! only lengths are computed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::codebook::{Codebook, EntryId};
use crate::lexer::{Token, TokenStream};

/// Normalizer of the universal prefix code for positive integers,
/// `log2(c0) + log2 n + log2 log2 n + ...` over the positive terms.
pub const LOG_STAR_NORMALIZER: f64 = 2.865_064;

/// Two readings of `log*`: the universal-code series with its normalizer, or
/// plain `log2 n` which reproduces hand-worked arithmetic like
/// `log*(4) = 2`. Both are exposed; the series form is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogStarMode {
    #[default]
    Rissanen,
    Simple,
}

impl std::fmt::Display for LogStarMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogStarMode::Rissanen => f.write_str("rissanen"),
            LogStarMode::Simple => f.write_str("simple"),
        }
    }
}

impl std::str::FromStr for LogStarMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rissanen" => Ok(LogStarMode::Rissanen),
            "simple" => Ok(LogStarMode::Simple),
            other => Err(format!("unknown log-star mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodelengthError {
    #[error("log* is undefined for {0}")]
    DomainError(u64),
    #[error("symbol {0:?} is not in the symbol table")]
    UnknownSymbol(String),
    #[error("probabilities must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("probabilities sum to {0}, expected 1")]
    UnnormalizedProbabilities(f64),
    #[error("vocabulary is empty")]
    DegenerateVocabulary,
}

/// `log*(n)` in bits.
pub fn log_star(n: u64, mode: LogStarMode) -> Result<f64, CodelengthError> {
    if n < 1 {
        return Err(CodelengthError::DomainError(n));
    }
    Ok(match mode {
        LogStarMode::Simple => (n as f64).log2(),
        LogStarMode::Rissanen => {
            let mut bits = LOG_STAR_NORMALIZER.log2();
            let mut term = (n as f64).log2();
            while term > 0.0 {
                bits += term;
                term = term.log2();
            }
            bits
        }
    })
}

/// Length code for a transmitted integer that may be zero (the codebook
/// size): zero is clamped to one, which costs nothing beyond the normalizer.
pub(crate) fn size_code_bits(n: u64, mode: LogStarMode) -> f64 {
    log_star(n.max(1), mode).expect("clamped to >= 1")
}

/// Frozen map from primitive symbol text to its probability, fixed once from
/// the raw corpus. Replacement passes never touch it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    probs: BTreeMap<String, f64>,
}

impl SymbolTable {
    pub fn from_probs(probs: BTreeMap<String, f64>) -> Result<Self, CodelengthError> {
        for &p in probs.values() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CodelengthError::InvalidProbability(p));
            }
        }
        let sum: f64 = probs.values().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CodelengthError::UnnormalizedProbabilities(sum));
        }
        Ok(SymbolTable { probs })
    }

    /// Relative frequencies of the observed symbol counts.
    pub fn from_token_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<Self, CodelengthError> {
        let counts: BTreeMap<String, u64> = counts.into_iter().collect();
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(CodelengthError::DegenerateVocabulary);
        }
        let probs = counts
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(s, c)| (s, c as f64 / total as f64))
            .collect();
        Ok(SymbolTable { probs })
    }

    pub fn from_streams(streams: &[TokenStream]) -> Result<Self, CodelengthError> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for stream in streams {
            for token in &stream.tokens {
                *counts.entry(token.text.clone()).or_insert(0) += 1;
            }
        }
        SymbolTable::from_token_counts(counts)
    }

    pub fn prob(&self, symbol: &str) -> Option<f64> {
        self.probs.get(symbol).copied()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(s, &p)| (s.as_str(), p))
    }
}

/// One item of the vocabulary covering the compressed corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum VocabItem {
    Symbol(String),
    Entry(EntryId),
}

/// Occurrence counts of vocabulary items; zero-count items are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VocabularyCounts {
    counts: BTreeMap<VocabItem, u64>,
    total: u64,
}

impl VocabularyCounts {
    pub fn from_counts(counts: impl IntoIterator<Item = (VocabItem, u64)>) -> Self {
        let counts: BTreeMap<VocabItem, u64> =
            counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total = counts.values().sum();
        VocabularyCounts { counts, total }
    }

    /// Total number of items in the corpus.
    pub fn n(&self) -> u64 {
        self.total
    }

    /// Number of distinct items.
    pub fn m(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn counts(&self) -> impl Iterator<Item = (&VocabItem, u64)> {
        self.counts.iter().map(|(item, &c)| (item, c))
    }
}

/// The (P1, P2, P3, total) bit-length breakdown of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageLength {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub total: f64,
}

impl MessageLength {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Self {
        MessageLength {
            p1,
            p2,
            p3,
            total: p1 + p2 + p3,
        }
    }
}

pub(crate) fn lg2_gamma(x: f64) -> f64 {
    ln_gamma(x) / std::f64::consts::LN_2
}

/// MML87 multinomial length from the aggregates `(N, M, sum_m lg2 G(s_m+1))`.
/// A vocabulary of at most one item has no free parameters and costs nothing.
pub(crate) fn p2_from_aggregates(n: u64, m: u64, sum_lg2_gamma_counts: f64) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    lg2_gamma((n + m) as f64) - lg2_gamma(m as f64) - sum_lg2_gamma_counts
        + 0.5 * ((m - 1) as f64 * std::f64::consts::PI).log2()
        - 0.4
}

/// Log2 multinomial coefficient from the same aggregates.
pub(crate) fn p3_from_aggregates(n: u64, sum_lg2_gamma_counts: f64) -> f64 {
    lg2_gamma((n + 1) as f64) - sum_lg2_gamma_counts
}

fn sum_lg2_gamma(counts: impl Iterator<Item = u64>) -> f64 {
    counts.map(|c| lg2_gamma((c + 1) as f64)).sum()
}

/// Cost of transmitting one codebook substring: a length code plus an optimal
/// code for every constituent symbol.
pub fn substring_cost(
    tokens: &[Token],
    table: &SymbolTable,
    mode: LogStarMode,
) -> Result<f64, CodelengthError> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for token in tokens {
        if token.meta_id.is_some() {
            return Err(CodelengthError::UnknownSymbol(token.text.clone()));
        }
        *counts.entry(token.text.as_str()).or_insert(0) += 1;
    }
    let mut bits = log_star(tokens.len() as u64, mode)?;
    for (symbol, count) in counts {
        let p = table
            .prob(symbol)
            .ok_or_else(|| CodelengthError::UnknownSymbol(symbol.to_owned()))?;
        bits += count as f64 * -p.log2();
    }
    Ok(bits)
}

/// Codebook transmission cost: the size code plus every entry's substring
/// cost over its primitive expansion.
pub fn part1(
    codebook: &Codebook,
    table: &SymbolTable,
    mode: LogStarMode,
) -> Result<f64, CodelengthError> {
    let mut bits = size_code_bits(codebook.len() as u64, mode);
    for entry in codebook.entries() {
        bits += substring_cost(&entry.expanded, table, mode)?;
    }
    Ok(bits)
}

/// MML87 multinomial cost of probabilities plus counts.
pub fn part2(vc: &VocabularyCounts) -> Result<f64, CodelengthError> {
    if vc.m() == 0 {
        return Err(CodelengthError::DegenerateVocabulary);
    }
    Ok(p2_from_aggregates(
        vc.n(),
        vc.m(),
        sum_lg2_gamma(vc.counts().map(|(_, c)| c)),
    ))
}

/// Sequence-selection cost, `log2 N! / prod_m s_m!`.
pub fn part3(vc: &VocabularyCounts) -> f64 {
    p3_from_aggregates(vc.n(), sum_lg2_gamma(vc.counts().map(|(_, c)| c)))
}

/// Full message length of a (codebook, corpus-counts) state.
pub fn total_length(
    codebook: &Codebook,
    corpus_counts: &VocabularyCounts,
    table: &SymbolTable,
    mode: LogStarMode,
) -> Result<MessageLength, CodelengthError> {
    let p1 = part1(codebook, table, mode)?;
    let p2 = part2(corpus_counts)?;
    let p3 = part3(corpus_counts);
    Ok(MessageLength::new(p1, p2, p3))
}
