//! The discovered dictionary: an ordered set of substructure entries, which
//! doubles as the multinomial hypothesis scored by the codelength module.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{render, Token, TokenKind};

/// Identifier of a codebook entry, stable across removals.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct EntryId(pub u32);

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One discovered substructure.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub id: EntryId,
    /// Primitive-token expansion; this is what the entry stands for.
    pub expanded: Vec<Token>,
    /// Token sequence over the corpus alphabet at adoption time; may contain
    /// meta-symbols for earlier entries.
    pub surface: Vec<Token>,
    /// Iteration at which the entry was adopted.
    pub iteration: u32,
    /// Occurrences of the entry's meta-symbol in the compressed corpus.
    pub count: u64,
    /// Total-length reduction achieved at adoption, in bits.
    pub delta_bits: f64,
    expanded_smiles: String,
}

impl CodebookEntry {
    pub fn new(
        id: EntryId,
        expanded: Vec<Token>,
        surface: Vec<Token>,
        iteration: u32,
        count: u64,
        delta_bits: f64,
    ) -> Self {
        debug_assert!(expanded.iter().all(|t| t.kind != TokenKind::MetaSymbol));
        let expanded_smiles = render(&expanded, None).expect("expansion is primitive");
        CodebookEntry {
            id,
            expanded,
            surface,
            iteration,
            count,
            delta_bits,
            expanded_smiles,
        }
    }

    pub fn expanded_smiles(&self) -> &str {
        &self.expanded_smiles
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodebookError {
    #[error("an entry expanding to {0:?} already exists")]
    DuplicateExpansion(String),
}

/// Ordered list of entries (by adoption iteration) with set semantics on the
/// expanded form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Codebook {
    entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn new() -> Self {
        Codebook::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CodebookEntry] {
        &self.entries
    }

    pub fn get(&self, id: EntryId) -> Option<&CodebookEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Position of an entry in adoption order; this is the fingerprint index.
    pub fn position(&self, id: EntryId) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn push(&mut self, entry: CodebookEntry) -> Result<(), CodebookError> {
        if self
            .entries
            .iter()
            .any(|e| e.expanded_smiles == entry.expanded_smiles)
        {
            return Err(CodebookError::DuplicateExpansion(entry.expanded_smiles));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn remove(&mut self, id: EntryId) -> Option<CodebookEntry> {
        let pos = self.position(id)?;
        Some(self.entries.remove(pos))
    }
}
