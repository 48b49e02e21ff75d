//! Count fingerprints over a discovered codebook: one integer per entry, in
//! adoption order. A lossy representation by construction — substructure
//! counts carry no connectivity.

use std::io::{self, Write};

use crate::codebook::Codebook;
use crate::lexer::{tokenize, LexError, Token};
use crate::par::map_collect;

/// How occurrences are counted inside one molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Every window position that matches counts ("CC" occurs twice in
    /// "CCC"). The default: a feature map has no replacement-coherence
    /// constraint to honor.
    Overlapping,
    /// Leftmost non-overlapping matching, for ablations against the
    /// compression semantics.
    NonOverlapping,
}

/// Fixed-length integer count vector; index `i` is the entry with the i-th
/// smallest adoption iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    counts: Vec<u64>,
}

impl Fingerprint {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

fn count_matches(haystack: &[Token], needle: &[Token], mode: MatchMode) -> u64 {
    if needle.is_empty() || needle.len() > haystack.len() {
        return 0;
    }
    let mut hits = 0;
    let mut i = 0;
    while i + needle.len() <= haystack.len() {
        if haystack[i..i + needle.len()] == *needle {
            hits += 1;
            i += match mode {
                MatchMode::Overlapping => 1,
                MatchMode::NonOverlapping => needle.len(),
            };
        } else {
            i += 1;
        }
    }
    hits
}

/// Count vector of one molecule against every codebook entry. Matching is
/// over token sequences, so `C` never matches inside `Cl`.
pub fn fingerprint(
    smiles: &str,
    codebook: &Codebook,
    mode: MatchMode,
) -> Result<Fingerprint, LexError> {
    let stream = tokenize(smiles)?;
    let counts = codebook
        .entries()
        .iter()
        .map(|entry| count_matches(&stream.tokens, &entry.expanded, mode))
        .collect();
    Ok(Fingerprint { counts })
}

/// Batch fingerprints with per-row failures collected rather than fatal.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintBatch {
    /// One row per successfully lexed molecule, in input order.
    pub fingerprints: Vec<Fingerprint>,
    /// `(input row, error)` for molecules that failed to lex; 0-based rows.
    pub skipped: Vec<(usize, LexError)>,
}

/// Order-preserving batch map over a corpus.
pub fn fingerprint_corpus(
    smiles: &[String],
    codebook: &Codebook,
    mode: MatchMode,
) -> FingerprintBatch {
    let rows = map_collect(smiles, |line| fingerprint(line, codebook, mode));
    let mut fingerprints = Vec::with_capacity(rows.len());
    let mut skipped = Vec::new();
    for (index, row) in rows.into_iter().enumerate() {
        match row {
            Ok(fp) => fingerprints.push(fp),
            Err(err) => skipped.push((index, err)),
        }
    }
    FingerprintBatch {
        fingerprints,
        skipped,
    }
}

/// CSV output: quoted header cells `"index:expanded_smiles"`, one row of
/// integer cells per molecule, LF line endings.
pub fn write_fingerprint_csv<W: Write>(
    w: &mut W,
    codebook: &Codebook,
    fingerprints: &[Fingerprint],
) -> io::Result<()> {
    let header: Vec<String> = codebook
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| format!("\"{}:{}\"", i, e.expanded_smiles().replace('"', "\"\"")))
        .collect();
    w.write_all(header.join(",").as_bytes())?;
    w.write_all(b"\n")?;
    for fp in fingerprints {
        debug_assert_eq!(fp.len(), codebook.len());
        let row: Vec<String> = fp.counts().iter().map(|c| c.to_string()).collect();
        w.write_all(row.join(",").as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{CodebookEntry, EntryId};

    fn codebook(patterns: &[&str]) -> Codebook {
        let mut cb = Codebook::new();
        for (i, p) in patterns.iter().enumerate() {
            let tokens = tokenize(p).unwrap().tokens;
            cb.push(CodebookEntry::new(
                EntryId(i as u32),
                tokens.clone(),
                tokens,
                i as u32 + 1,
                1,
                0.0,
            ))
            .unwrap();
        }
        cb
    }

    #[test]
    fn no_match_is_zero() {
        let cb = codebook(&["C(=O)N"]);
        let fp = fingerprint("CC", &cb, MatchMode::Overlapping).unwrap();
        assert_eq!(fp.counts(), [0]);
    }

    #[test]
    fn two_disjoint_occurrences() {
        let cb = codebook(&["C(=O)"]);
        let fp = fingerprint("CC(=O)NC(=O)C", &cb, MatchMode::Overlapping).unwrap();
        assert_eq!(fp.counts(), [2]);
    }

    #[test]
    fn overlapping_windows_both_count() {
        let cb = codebook(&["CC"]);
        let fp = fingerprint("CCC", &cb, MatchMode::Overlapping).unwrap();
        assert_eq!(fp.counts(), [2]);
        let fp = fingerprint("CCC", &cb, MatchMode::NonOverlapping).unwrap();
        assert_eq!(fp.counts(), [1]);
    }

    #[test]
    fn token_matching_never_splits_symbols() {
        let cb = codebook(&["C"]);
        let fp = fingerprint("ClC", &cb, MatchMode::Overlapping).unwrap();
        assert_eq!(fp.counts(), [1]);
    }

    #[test]
    fn batch_matches_single_calls_and_reports_failures() {
        let cb = codebook(&["CC", "O"]);
        let corpus = vec!["CCO".to_owned(), "C@@".to_owned(), "OCC".to_owned()];
        let batch = fingerprint_corpus(&corpus, &cb, MatchMode::Overlapping);
        assert_eq!(batch.fingerprints.len(), 2);
        assert_eq!(batch.skipped.len(), 1);
        assert_eq!(batch.skipped[0].0, 1);
        assert_eq!(
            batch.fingerprints[0],
            fingerprint("CCO", &cb, MatchMode::Overlapping).unwrap()
        );
        assert_eq!(
            batch.fingerprints[1],
            fingerprint("OCC", &cb, MatchMode::Overlapping).unwrap()
        );
    }

    #[test]
    fn empty_corpus_gives_empty_batch() {
        let cb = codebook(&["CC"]);
        let batch = fingerprint_corpus(&[], &cb, MatchMode::Overlapping);
        assert!(batch.fingerprints.is_empty());
        assert!(batch.skipped.is_empty());
    }

    #[test]
    fn permuting_molecules_permutes_rows() {
        let cb = codebook(&["CC", "C(=O)", "c1ccccc1"]);
        let corpus = vec![
            "CCC(=O)N".to_owned(),
            "c1ccccc1CC".to_owned(),
            "OC(=O)C(=O)O".to_owned(),
        ];
        let forward = fingerprint_corpus(&corpus, &cb, MatchMode::Overlapping);
        let reversed: Vec<String> = corpus.iter().rev().cloned().collect();
        let backward = fingerprint_corpus(&reversed, &cb, MatchMode::Overlapping);
        let mut flipped = backward.fingerprints.clone();
        flipped.reverse();
        assert_eq!(forward.fingerprints, flipped);
    }

    #[test]
    fn csv_shape() {
        let cb = codebook(&["CC", "C(=O)N"]);
        let corpus = vec!["CCC".to_owned(), "CC(=O)N".to_owned()];
        let batch = fingerprint_corpus(&corpus, &cb, MatchMode::Overlapping);
        let mut out = Vec::new();
        write_fingerprint_csv(&mut out, &cb, &batch.fingerprints).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "\"0:CC\",\"1:C(=O)N\"\n2,0\n1,1\n");
    }
}
