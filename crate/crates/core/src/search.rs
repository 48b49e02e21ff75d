//! The greedy discovery loop: enumerate substring candidates over the
//! current (compressed) corpus, score each one exactly by the total message
//! length it would yield if adopted, adopt the best strictly-improving one,
//! and repeat until nothing improves.
//!
//! Scoring is a pure function of an immutable state snapshot, so candidates
//! are scored by a data-parallel map; the winner is selected by a total-order
//! argmin, which makes traces independent of thread count. Mutation happens
//! only between scoring passes, on one thread.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::{Codebook, CodebookEntry, EntryId};
use crate::codelength::{
    lg2_gamma, log_star, p2_from_aggregates, p3_from_aggregates, size_code_bits, LogStarMode,
    MessageLength, SymbolTable, VocabItem, VocabularyCounts,
};
use crate::corpus::{CorpusError, PrimId, Sym, TokenCorpus};
use crate::lexer::Token;
use crate::par::{map_chunks, map_collect, map_collect_owned, with_thread_limit};
use crate::validity::verdict_for;

/// Knobs of one compression run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Longest candidate window, in tokens of the current corpus alphabet.
    /// Discovered entries can exceed this in expanded length because windows
    /// may span earlier meta-symbols.
    pub max_len: usize,
    pub max_iters: usize,
    /// Candidates occurring fewer times are never enumerated; 1 disables the
    /// pruning (useful when comparing against exhaustive oracles).
    pub min_count: u64,
    pub logstar_mode: LogStarMode,
    /// Reserved for seeded extensions; the search itself is deterministic.
    pub seed: u64,
    /// Worker-pool cap; `None` uses the ambient pool.
    pub threads: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_len: 8,
            max_iters: 500,
            min_count: 2,
            logstar_mode: LogStarMode::default(),
            seed: 0,
            threads: None,
        }
    }
}

impl SearchConfig {
    /// Defaults tuned for small corpora: longer windows, same loop.
    pub fn small_dataset() -> Self {
        SearchConfig {
            max_len: 15,
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_len < 2 {
            return Err(SearchError::InvalidConfig(format!(
                "max_len must be at least 2, got {}",
                self.max_len
            )));
        }
        if self.max_iters < 1 {
            return Err(SearchError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.min_count < 1 {
            return Err(SearchError::InvalidConfig("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("candidate occurrence count changed since scoring: expected {expected}, found {found}")]
    StateMismatch { expected: u64, found: u64 },
}

/// A deduplicated window over the current corpus alphabet, together with its
/// leftmost non-overlapping occurrence count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub(crate) syms: Vec<Sym>,
    pub(crate) expanded: Vec<PrimId>,
    count: u64,
}

impl Candidate {
    /// Occurrences under leftmost non-overlapping matching, corpus-wide.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Window length over the current corpus alphabet.
    pub fn token_len(&self) -> usize {
        self.syms.len()
    }

    /// Length of the primitive expansion.
    pub fn expanded_len(&self) -> usize {
        self.expanded.len()
    }
}

#[derive(Debug, Clone)]
struct EntryState {
    id: u32,
    expanded: Vec<PrimId>,
    surface: Vec<Sym>,
    iteration: u32,
    count: u64,
    delta_bits: f64,
    cstring_bits: f64,
    expanded_smiles: String,
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u32,
    pub expanded_smiles: String,
    pub count: u64,
    pub total_before: f64,
    pub total_after: f64,
    pub delta_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub initial: MessageLength,
    pub final_total: MessageLength,
    pub rows: Vec<TraceRow>,
}

impl IterationTrace {
    pub fn write_tsv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "iteration\texpanded_smiles\tcount\ttotal_bits_before\ttotal_bits_after\tdelta_bits"
        )?;
        for row in &self.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                row.iteration,
                row.expanded_smiles,
                row.count,
                row.total_before,
                row.total_after,
                row.delta_bits
            )?;
        }
        Ok(())
    }
}

pub struct CompressionOutcome {
    pub codebook: Codebook,
    pub trace: IterationTrace,
    /// The frozen symbol table of the raw corpus, for persistence and for
    /// recomputing codelengths under the same conventions.
    pub symbol_table: SymbolTable,
}

/// Mutable search state over one corpus: the compressed streams, the live
/// codebook, and the aggregates the incremental scorer works from.
#[derive(Clone)]
pub struct SearchState {
    corpus: TokenCorpus,
    entries: Vec<EntryState>,
    entry_slot: HashMap<u32, usize>,
    next_id: u32,
    applied: u32,
    config: SearchConfig,
    /// Occurrence count per vocabulary item in the compressed corpus.
    /// Ordered map: every float summation over it happens in one fixed order,
    /// which keeps traces byte-identical across runs and thread counts.
    counts: BTreeMap<Sym, u64>,
    n_total: u64,
    sum_lg: f64,
    p1_entries: f64,
    current: MessageLength,
}

impl SearchState {
    pub fn new(smiles: &[String], config: &SearchConfig) -> Result<Self, SearchError> {
        config.validate()?;
        let corpus = TokenCorpus::from_smiles(smiles)?;
        let mut state = SearchState {
            corpus,
            entries: Vec::new(),
            entry_slot: HashMap::new(),
            next_id: 0,
            applied: 0,
            config: config.clone(),
            counts: BTreeMap::new(),
            n_total: 0,
            sum_lg: 0.0,
            p1_entries: 0.0,
            current: MessageLength::new(0.0, 0.0, 0.0),
        };
        state.refresh_aggregates();
        Ok(state)
    }

    /// Rebuild every aggregate from the streams. Called once per adoption so
    /// incremental float error can never accumulate across iterations.
    fn refresh_aggregates(&mut self) {
        let mut counts: BTreeMap<Sym, u64> = BTreeMap::new();
        for stream in &self.corpus.streams {
            for &sym in stream {
                *counts.entry(sym).or_insert(0) += 1;
            }
        }
        self.n_total = counts.values().sum();
        self.sum_lg = counts.values().map(|&c| lg2_gamma((c + 1) as f64)).sum();
        self.counts = counts;
        self.p1_entries = self.entries.iter().map(|e| e.cstring_bits).sum();
        self.current = self.state_length(
            self.entries.len() as u64,
            self.p1_entries,
            self.n_total,
            self.counts.len() as u64,
            self.sum_lg,
        );
    }

    fn state_length(&self, h: u64, p1_entries: f64, n: u64, m: u64, sum_lg: f64) -> MessageLength {
        let p1 = size_code_bits(h, self.config.logstar_mode) + p1_entries;
        let p2 = p2_from_aggregates(n, m, sum_lg);
        let p3 = p3_from_aggregates(n, sum_lg);
        MessageLength::new(p1, p2, p3)
    }

    /// Substring transmission cost of a primitive sequence under the frozen
    /// symbol table.
    fn cstring_bits(&self, expanded: &[PrimId]) -> f64 {
        let mut per_symbol: BTreeMap<PrimId, u64> = BTreeMap::new();
        for &id in expanded {
            *per_symbol.entry(id).or_insert(0) += 1;
        }
        let mut bits = log_star(expanded.len() as u64, self.config.logstar_mode)
            .expect("expansions are non-empty");
        for (id, c) in per_symbol {
            bits += c as f64 * self.corpus.neg_log2[id as usize];
        }
        bits
    }

    fn expand(&self, syms: &[Sym]) -> Vec<PrimId> {
        let mut out = Vec::with_capacity(syms.len());
        for &sym in syms {
            match sym {
                Sym::Prim(p) => out.push(p),
                Sym::Meta(id) => {
                    let slot = self.entry_slot[&id];
                    out.extend_from_slice(&self.entries[slot].expanded);
                }
            }
        }
        out
    }

    fn expanded_text(&self, expanded: &[PrimId]) -> String {
        expanded
            .iter()
            .map(|&id| self.corpus.alphabet.token(id).text.as_str())
            .collect()
    }

    fn cmp_expanded_text(&self, a: &[PrimId], b: &[PrimId]) -> Ordering {
        let a_bytes = a
            .iter()
            .flat_map(|&id| self.corpus.alphabet.token(id).text.bytes());
        let b_bytes = b
            .iter()
            .flat_map(|&id| self.corpus.alphabet.token(id).text.bytes());
        a_bytes.cmp(b_bytes)
    }

    // ---- observers ----------------------------------------------------

    pub fn total(&self) -> MessageLength {
        self.current
    }

    pub fn iterations_applied(&self) -> u32 {
        self.applied
    }

    pub fn molecule_count(&self) -> usize {
        self.corpus.molecule_count()
    }

    pub fn original_molecule(&self, index: usize) -> &str {
        self.corpus.original(index)
    }

    pub fn symbol_table(&self) -> &SymbolTable {
        self.corpus.table()
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// The compressed stream of one molecule as tokens; meta-symbols carry
    /// their entry id.
    pub fn compressed_molecule(&self, index: usize) -> Vec<Token> {
        self.corpus.streams[index]
            .iter()
            .map(|&sym| match sym {
                Sym::Prim(p) => self.corpus.alphabet.token(p).clone(),
                Sym::Meta(id) => Token::meta(EntryId(id)),
            })
            .collect()
    }

    /// Fully expanded primitive SMILES of one compressed stream; equal to the
    /// original molecule at every iteration.
    pub fn render_molecule(&self, index: usize) -> String {
        let mut out = String::new();
        for &sym in &self.corpus.streams[index] {
            match sym {
                Sym::Prim(p) => out.push_str(&self.corpus.alphabet.token(p).text),
                Sym::Meta(id) => {
                    let slot = self.entry_slot[&id];
                    out.push_str(&self.entries[slot].expanded_smiles);
                }
            }
        }
        out
    }

    pub fn candidate_smiles(&self, candidate: &Candidate) -> String {
        self.expanded_text(&candidate.expanded)
    }

    /// Materialize the public codebook view, in adoption order.
    pub fn codebook(&self) -> Codebook {
        let mut cb = Codebook::new();
        for e in &self.entries {
            let expanded = e
                .expanded
                .iter()
                .map(|&id| self.corpus.alphabet.token(id).clone())
                .collect();
            let surface = e
                .surface
                .iter()
                .map(|&sym| match sym {
                    Sym::Prim(p) => self.corpus.alphabet.token(p).clone(),
                    Sym::Meta(id) => Token::meta(EntryId(id)),
                })
                .collect();
            cb.push(CodebookEntry::new(
                EntryId(e.id),
                expanded,
                surface,
                e.iteration,
                e.count,
                e.delta_bits,
            ))
            .expect("live expansions are pairwise distinct");
        }
        cb
    }

    /// Vocabulary counts of the current compressed corpus, in public form.
    pub fn vocabulary_counts(&self) -> VocabularyCounts {
        VocabularyCounts::from_counts(self.counts.iter().map(|(&sym, &c)| {
            let item = match sym {
                Sym::Prim(p) => VocabItem::Symbol(self.corpus.alphabet.token(p).text.clone()),
                Sym::Meta(id) => VocabItem::Entry(EntryId(id)),
            };
            (item, c)
        }))
    }

    // ---- the three loop operations -------------------------------------

    /// Every deduplicated window of length `2..=max_len`, counted leftmost
    /// non-overlapping per molecule, pruned by `min_count`, filtered for
    /// validity on the expanded form, and excluded when the expansion
    /// duplicates a live entry. Output is sorted by window content, so the
    /// order is reproducible.
    pub fn enumerate_candidates(&self) -> Vec<Candidate> {
        let max_len = self.config.max_len;

        struct Acc {
            count: u64,
            cursor_mol: usize,
            next_free: usize,
        }

        let count_chunk = |streams: &[Vec<Sym>]| {
            let mut acc: HashMap<&[Sym], Acc> = HashMap::new();
            for (mol, stream) in streams.iter().enumerate() {
                for start in 0..stream.len() {
                    let limit = max_len.min(stream.len() - start);
                    for len in 2..=limit {
                        let window = &stream[start..start + len];
                        let slot = acc.entry(window).or_insert(Acc {
                            count: 0,
                            cursor_mol: usize::MAX,
                            next_free: 0,
                        });
                        if slot.cursor_mol == mol && start < slot.next_free {
                            continue;
                        }
                        slot.count += 1;
                        slot.cursor_mol = mol;
                        slot.next_free = start + len;
                    }
                }
            }
            acc.into_iter()
                .map(|(w, a)| (w.to_vec(), a.count))
                .collect::<Vec<_>>()
        };

        let mut merged: HashMap<Vec<Sym>, u64> = HashMap::new();
        for local in map_chunks(&self.corpus.streams, 256, count_chunk) {
            for (window, count) in local {
                *merged.entry(window).or_insert(0) += count;
            }
        }

        let mut windows: Vec<(Vec<Sym>, u64)> = merged
            .into_iter()
            .filter(|&(_, count)| count >= self.config.min_count)
            .collect();
        windows.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let live: HashSet<&[PrimId]> = self.entries.iter().map(|e| e.expanded.as_slice()).collect();
        let candidates = map_collect_owned(windows, |(syms, count)| {
            let expanded = self.expand(&syms);
            if live.contains(expanded.as_slice()) {
                return None;
            }
            let tokens: Vec<&Token> = expanded
                .iter()
                .map(|&id| self.corpus.alphabet.token(id))
                .collect();
            if !verdict_for(&tokens).valid {
                return None;
            }
            Some(Candidate {
                syms,
                expanded,
                count,
            })
        });
        candidates.into_iter().flatten().collect()
    }

    /// Total message length of the hypothetical state in which all counted
    /// occurrences of the candidate are replaced by one fresh meta-symbol,
    /// the entry is appended, embedded entry counts are reduced, and
    /// zero-count entries are dropped. The real state is untouched.
    pub fn score_candidate(&self, candidate: &Candidate) -> MessageLength {
        let k = candidate.count;
        let window_len = candidate.syms.len() as u64;
        let n = self.n_total - k * (window_len - 1);

        let mut multiplicity: BTreeMap<Sym, u64> = BTreeMap::new();
        for &sym in &candidate.syms {
            *multiplicity.entry(sym).or_insert(0) += 1;
        }

        let mut m = self.counts.len() as u64;
        let mut sum_lg = self.sum_lg;
        let mut p1_entries = self.p1_entries;
        let mut h = self.entries.len() as u64;
        for (&sym, &mu) in &multiplicity {
            let have = self.counts.get(&sym).copied().unwrap_or(0);
            debug_assert!(have >= k * mu, "scored candidate is stale");
            let left = have.saturating_sub(k * mu);
            sum_lg -= lg2_gamma((have + 1) as f64);
            if left == 0 {
                m -= 1;
                if let Sym::Meta(id) = sym {
                    let slot = self.entry_slot[&id];
                    p1_entries -= self.entries[slot].cstring_bits;
                    h -= 1;
                }
            } else {
                sum_lg += lg2_gamma((left + 1) as f64);
            }
        }

        // The fresh meta-symbol and its codebook entry.
        m += 1;
        sum_lg += lg2_gamma((k + 1) as f64);
        h += 1;
        p1_entries += self.cstring_bits(&candidate.expanded);

        self.state_length(h, p1_entries, n, m, sum_lg)
    }

    /// Execute the replacement a candidate was scored for. Fails without
    /// mutating anything if the corpus no longer matches the scoring-time
    /// occurrence count.
    pub fn apply_candidate(&mut self, candidate: &Candidate) -> Result<EntryId, SearchError> {
        let found: u64 = self
            .corpus
            .streams
            .iter()
            .map(|s| count_nonoverlap(s, &candidate.syms))
            .sum();
        if found != candidate.count {
            return Err(SearchError::StateMismatch {
                expected: candidate.count,
                found,
            });
        }

        let id = self.next_id;
        self.next_id += 1;
        self.applied += 1;
        let before = self.current;

        for stream in &mut self.corpus.streams {
            replace_nonoverlap(stream, &candidate.syms, Sym::Meta(id));
        }

        // Recount, then drop entries whose meta-symbol disappeared.
        let mut counts: BTreeMap<Sym, u64> = BTreeMap::new();
        for stream in &self.corpus.streams {
            for &sym in stream {
                *counts.entry(sym).or_insert(0) += 1;
            }
        }
        for entry in &mut self.entries {
            entry.count = counts.get(&Sym::Meta(entry.id)).copied().unwrap_or(0);
        }
        self.entries.retain(|e| e.count > 0);

        let cstring_bits = self.cstring_bits(&candidate.expanded);
        let expanded_smiles = self.expanded_text(&candidate.expanded);
        self.entries.push(EntryState {
            id,
            expanded: candidate.expanded.clone(),
            surface: candidate.syms.clone(),
            iteration: self.applied,
            count: candidate.count,
            delta_bits: 0.0,
            cstring_bits,
            expanded_smiles,
        });
        self.entry_slot = self
            .entries
            .iter()
            .enumerate()
            .map(|(slot, e)| (e.id, slot))
            .collect();

        // Sampled losslessness check, kept on in release builds; the full
        // scan lives in audit() and runs under debug assertions.
        let n = self.corpus.molecule_count();
        for index in [0, n / 3, 2 * n / 3, n - 1] {
            let rendered = self.render_molecule(index);
            assert_eq!(
                rendered,
                self.corpus.original(index),
                "molecule {index} no longer re-expands to its original form"
            );
        }

        self.refresh_aggregates();
        let slot = self.entry_slot[&id];
        self.entries[slot].delta_bits = before.total - self.current.total;
        Ok(EntryId(id))
    }

    /// Full consistency scan: stored counts equal a fresh rescan, live entry
    /// counts are positive and match, and every stream re-expands to its
    /// original molecule.
    pub fn audit(&self) -> Result<(), String> {
        let mut fresh: BTreeMap<Sym, u64> = BTreeMap::new();
        for stream in &self.corpus.streams {
            for &sym in stream {
                *fresh.entry(sym).or_insert(0) += 1;
            }
        }
        if fresh != self.counts {
            return Err("vocabulary counts diverge from a fresh rescan".into());
        }
        for entry in &self.entries {
            let seen = fresh.get(&Sym::Meta(entry.id)).copied().unwrap_or(0);
            if entry.count == 0 || seen != entry.count {
                return Err(format!(
                    "entry {} stores count {} but occurs {} times",
                    entry.id, entry.count, seen
                ));
            }
        }
        for index in 0..self.corpus.molecule_count() {
            let rendered = self.render_molecule(index);
            if rendered != self.corpus.original(index) {
                return Err(format!(
                    "molecule {index} re-expands to {rendered:?}, expected {:?}",
                    self.corpus.original(index)
                ));
            }
        }
        let n: u64 = fresh.values().sum();
        if n != self.n_total {
            return Err("token total diverges".into());
        }
        Ok(())
    }
}

/// Score every candidate against one state snapshot: an order-preserving
/// parallel map (sequential without the `parallel` feature).
pub fn score_all(state: &SearchState, candidates: &[Candidate]) -> Vec<MessageLength> {
    map_collect(candidates, |c| state.score_candidate(c))
}

fn count_nonoverlap(stream: &[Sym], pattern: &[Sym]) -> u64 {
    let mut i = 0;
    let mut hits = 0;
    while i + pattern.len() <= stream.len() {
        if stream[i..i + pattern.len()] == *pattern {
            hits += 1;
            i += pattern.len();
        } else {
            i += 1;
        }
    }
    hits
}

fn replace_nonoverlap(stream: &mut Vec<Sym>, pattern: &[Sym], replacement: Sym) {
    let mut out = Vec::with_capacity(stream.len());
    let mut i = 0;
    while i < stream.len() {
        if i + pattern.len() <= stream.len() && stream[i..i + pattern.len()] == *pattern {
            out.push(replacement);
            i += pattern.len();
        } else {
            out.push(stream[i]);
            i += 1;
        }
    }
    *stream = out;
}

/// Index of the best candidate under the deterministic total order:
/// projected total, then expanded length, then expanded text, then window
/// content. Distinct candidates never compare equal, so the argmin does not
/// depend on evaluation or reduction order.
fn best_candidate(
    state: &SearchState,
    candidates: &[Candidate],
    scores: &[MessageLength],
) -> Option<usize> {
    (0..candidates.len()).min_by(|&a, &b| {
        scores[a]
            .total
            .total_cmp(&scores[b].total)
            .then_with(|| candidates[a].expanded.len().cmp(&candidates[b].expanded.len()))
            .then_with(|| state.cmp_expanded_text(&candidates[a].expanded, &candidates[b].expanded))
            .then_with(|| candidates[a].syms.cmp(&candidates[b].syms))
    })
}

/// Best-scoring candidate of the current state together with its projected
/// length, if any candidate exists. The selection rule is the same total
/// order the main loop uses.
pub fn best_move(state: &SearchState) -> Option<(Candidate, MessageLength)> {
    let candidates = state.enumerate_candidates();
    let scores = score_all(state, &candidates);
    best_candidate(state, &candidates, &scores).map(|i| (candidates[i].clone(), scores[i]))
}

/// Run the greedy loop to quiescence (or `max_iters`) and return the final
/// codebook with a per-iteration trace.
pub fn fgcompress(
    smiles: &[String],
    config: &SearchConfig,
) -> Result<CompressionOutcome, SearchError> {
    fgcompress_with_observer(smiles, config, |_, _| {})
}

/// Same as [`fgcompress`], invoking `observe` after every adoption with the
/// updated state. Useful for asserting per-step invariants.
pub fn fgcompress_with_observer<F>(
    smiles: &[String],
    config: &SearchConfig,
    mut observe: F,
) -> Result<CompressionOutcome, SearchError>
where
    F: FnMut(&SearchState, &TraceRow) + Send,
{
    config.validate()?;
    with_thread_limit(config.threads, move || {
        let mut state = SearchState::new(smiles, config)?;
        let initial = state.total();
        let mut rows = Vec::new();
        for _ in 0..config.max_iters {
            let candidates = state.enumerate_candidates();
            if candidates.is_empty() {
                break;
            }
            let scores = score_all(&state, &candidates);
            let best = best_candidate(&state, &candidates, &scores)
                .expect("candidate list is non-empty");
            let before = state.total();
            if scores[best].total >= before.total {
                break;
            }
            let expanded_smiles = state.candidate_smiles(&candidates[best]);
            let count = candidates[best].count();
            state.apply_candidate(&candidates[best])?;
            let after = state.total();
            debug_assert!(after.total < before.total, "accepted step must improve");
            debug_assert_eq!(state.audit(), Ok(()));
            let row = TraceRow {
                iteration: state.iterations_applied(),
                expanded_smiles,
                count,
                total_before: before.total,
                total_after: after.total,
                delta_bits: before.total - after.total,
            };
            observe(&state, &row);
            rows.push(row);
        }
        Ok(CompressionOutcome {
            codebook: state.codebook(),
            symbol_table: state.symbol_table().clone(),
            trace: IterationTrace {
                initial,
                final_total: state.total(),
                rows,
            },
        })
    })
}
