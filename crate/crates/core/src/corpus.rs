//! Interned corpus representation used by the search loop.
//!
//! The dataset lives as per-molecule streams of small symbol ids rather than
//! owned tokens, so window hashing and replacement stay cheap. Fully
//! expanding every stream against the codebook reproduces the original input
//! corpus at every iteration.

use std::collections::HashMap;

use thiserror::Error;

use crate::codelength::{CodelengthError, SymbolTable};
use crate::lexer::{tokenize, LexError, Token};

/// Index into the primitive-token alphabet.
pub(crate) type PrimId = u32;

/// One position of a compressed stream: a primitive symbol or a codebook
/// meta-symbol (by entry id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Sym {
    Prim(PrimId),
    Meta(u32),
}

/// Interner for primitive tokens; ids are assigned in first-appearance order
/// over the input, which keeps every downstream ordering deterministic.
#[derive(Debug, Clone, Default)]
pub(crate) struct Alphabet {
    tokens: Vec<Token>,
    by_text: HashMap<String, PrimId>,
}

impl Alphabet {
    pub(crate) fn intern(&mut self, token: &Token) -> PrimId {
        if let Some(&id) = self.by_text.get(&token.text) {
            return id;
        }
        let id = self.tokens.len() as PrimId;
        self.tokens.push(token.clone());
        self.by_text.insert(token.text.clone(), id);
        id
    }

    pub(crate) fn token(&self, id: PrimId) -> &Token {
        &self.tokens[id as usize]
    }

    pub(crate) fn len(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("molecule {index}: {source}")]
    Lex { index: usize, source: LexError },
    #[error("corpus is empty")]
    Empty,
    #[error(transparent)]
    Codelength(#[from] CodelengthError),
}

/// The dataset as interned token streams, mutated by replacement passes.
#[derive(Debug, Clone)]
pub struct TokenCorpus {
    pub(crate) originals: Vec<String>,
    pub(crate) streams: Vec<Vec<Sym>>,
    pub(crate) alphabet: Alphabet,
    table: SymbolTable,
    /// `-log2 P(s)` per primitive id, mirroring `table`.
    pub(crate) neg_log2: Vec<f64>,
}

impl TokenCorpus {
    pub fn from_smiles(smiles: &[String]) -> Result<Self, CorpusError> {
        if smiles.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut alphabet = Alphabet::default();
        let mut streams = Vec::with_capacity(smiles.len());
        let mut counts: HashMap<PrimId, u64> = HashMap::new();
        for (index, line) in smiles.iter().enumerate() {
            let stream = tokenize(line).map_err(|source| CorpusError::Lex { index, source })?;
            let syms: Vec<Sym> = stream
                .tokens
                .iter()
                .map(|t| {
                    let id = alphabet.intern(t);
                    *counts.entry(id).or_insert(0) += 1;
                    Sym::Prim(id)
                })
                .collect();
            streams.push(syms);
        }
        let table = SymbolTable::from_token_counts(
            counts
                .iter()
                .map(|(&id, &c)| (alphabet.token(id).text.clone(), c)),
        )?;
        let neg_log2 = (0..alphabet.len() as PrimId)
            .map(|id| {
                let p = table
                    .prob(&alphabet.token(id).text)
                    .expect("table built from this alphabet");
                -p.log2()
            })
            .collect();
        Ok(TokenCorpus {
            originals: smiles.to_vec(),
            streams,
            alphabet,
            table,
            neg_log2,
        })
    }

    pub fn molecule_count(&self) -> usize {
        self.streams.len()
    }

    pub fn original(&self, index: usize) -> &str {
        &self.originals[index]
    }

    /// Frozen symbol probabilities of the raw corpus.
    pub fn table(&self) -> &SymbolTable {
        &self.table
    }
}
