//! Corpus ingestion and versioned codebook persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codebook::{Codebook, CodebookEntry, CodebookError, EntryId};
use crate::codelength::{CodelengthError, LogStarMode, SymbolTable};
use crate::lexer::{tokenize, LexError};

pub const CODEBOOK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("codebook format version {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("codebook checksum mismatch; file was edited or truncated")]
    ChecksumMismatch,
    #[error("no usable line in corpus")]
    AllLinesInvalid,
    #[error("entry {id}: {source}")]
    BadEntry { id: u32, source: LexError },
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Codelength(#[from] CodelengthError),
}

/// A loaded corpus: trimmed unique molecules in input order, plus what was
/// dropped on the way.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub molecules: Vec<String>,
    pub duplicates_removed: usize,
    /// `(1-based line, error)` for lines that fail to lex.
    pub skipped: Vec<(usize, LexError)>,
}

/// Read one SMILES per line: trim, drop empties, skip-and-log lines that do
/// not lex, drop exact duplicate strings.
pub fn load_corpus(path: &Path) -> Result<LoadedCorpus, PersistError> {
    let text = fs::read_to_string(path)?;
    let mut molecules = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates_removed = 0;
    let mut skipped = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Err(err) = tokenize(line) {
            log::warn!("line {}: skipping unreadable SMILES: {err}", lineno + 1);
            skipped.push((lineno + 1, err));
            continue;
        }
        if !seen.insert(line.to_owned()) {
            duplicates_removed += 1;
            continue;
        }
        molecules.push(line.to_owned());
    }
    if duplicates_removed > 0 {
        log::info!("removed {duplicates_removed} duplicate line(s)");
    }
    if molecules.is_empty() {
        return Err(PersistError::AllLinesInvalid);
    }
    Ok(LoadedCorpus {
        molecules,
        duplicates_removed,
        skipped,
    })
}

/// Content hash of a corpus (molecule list after dedup), used to tie a
/// codebook file to its provenance.
pub fn corpus_fingerprint(molecules: &[String]) -> String {
    let mut hasher = Sha256::new();
    for line in molecules {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex_digest(hasher)
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub id: u32,
    pub expanded_smiles: String,
    pub iteration: u32,
    pub count: u64,
    pub delta_bits: f64,
}

/// On-disk codebook: everything needed to fingerprint new molecules and to
/// recompute codelengths under the same conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookFile {
    pub format_version: u32,
    pub logstar_mode: LogStarMode,
    pub symbol_table: BTreeMap<String, f64>,
    pub entries: Vec<EntryRecord>,
    pub corpus_fingerprint: String,
    pub checksum: String,
}

impl CodebookFile {
    fn payload_checksum(&self) -> String {
        let mut copy = self.clone();
        copy.checksum = String::new();
        let payload = serde_json::to_string(&copy).expect("codebook file serializes");
        let mut hasher = Sha256::new();
        hasher.update(payload.as_bytes());
        hex_digest(hasher)
    }
}

pub fn save_codebook(
    codebook: &Codebook,
    table: &SymbolTable,
    logstar_mode: LogStarMode,
    corpus_fingerprint: &str,
    path: &Path,
) -> Result<(), PersistError> {
    let mut file = CodebookFile {
        format_version: CODEBOOK_FORMAT_VERSION,
        logstar_mode,
        symbol_table: table.iter().map(|(s, p)| (s.to_owned(), p)).collect(),
        entries: codebook
            .entries()
            .iter()
            .map(|e| EntryRecord {
                id: e.id.0,
                expanded_smiles: e.expanded_smiles().to_owned(),
                iteration: e.iteration,
                count: e.count,
                delta_bits: e.delta_bits,
            })
            .collect(),
        corpus_fingerprint: corpus_fingerprint.to_owned(),
        checksum: String::new(),
    };
    file.checksum = file.payload_checksum();
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// A reloaded codebook with its context.
#[derive(Debug)]
pub struct LoadedCodebook {
    pub codebook: Codebook,
    pub table: SymbolTable,
    pub logstar_mode: LogStarMode,
    pub corpus_fingerprint: String,
    pub file: CodebookFile,
}

pub fn load_codebook(path: &Path) -> Result<LoadedCodebook, PersistError> {
    let text = fs::read_to_string(path)?;
    let file: CodebookFile = serde_json::from_str(&text)?;
    if file.format_version != CODEBOOK_FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: file.format_version,
            expected: CODEBOOK_FORMAT_VERSION,
        });
    }
    if file.payload_checksum() != file.checksum {
        return Err(PersistError::ChecksumMismatch);
    }
    let table = SymbolTable::from_probs(file.symbol_table.clone())?;
    let mut codebook = Codebook::new();
    for record in &file.entries {
        let tokens = tokenize(&record.expanded_smiles)
            .map_err(|source| PersistError::BadEntry {
                id: record.id,
                source,
            })?
            .tokens;
        // Surfaces are not persisted; a reloaded entry presents its primitive
        // expansion as its surface.
        codebook.push(CodebookEntry::new(
            EntryId(record.id),
            tokens.clone(),
            tokens,
            record.iteration,
            record.count,
            record.delta_bits,
        ))?;
    }
    Ok(LoadedCodebook {
        codebook,
        table,
        logstar_mode: file.logstar_mode,
        corpus_fingerprint: file.corpus_fingerprint.clone(),
        file,
    })
}
