//! Deterministic synthetic corpora for tests and benchmarks: random atom
//! noise, noise with planted motifs at a controlled token density, and
//! corpora composed from a fragment pool.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lexer::tokenize;

/// Atom vocabulary used for noise; single tokens only, so noise never forms
/// branches or rings by itself.
pub const NOISE_ATOMS: [&str; 10] = ["C", "N", "O", "S", "F", "c", "n", "o", "Cl", "Br"];

/// A random run of atoms, `len` tokens long.
pub fn noise_fragment<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| *NOISE_ATOMS.choose(rng).expect("non-empty alphabet"))
        .collect()
}

/// A corpus of molecules that each embed known motifs a random number of
/// times, in shuffled piece order, separated by atom noise.
pub struct PlantedCorpus {
    pub molecules: Vec<String>,
    /// `motif_counts[i][j]` = copies of motif j planted in molecule i.
    pub motif_counts: Vec<Vec<u64>>,
    /// Fraction of corpus tokens that belong to planted motif copies.
    pub motif_token_density: f64,
}

/// Build `n` molecules over `motifs`, planting between `copies.0` and
/// `copies.1` copies of each motif per molecule and `noise_tokens` noise
/// atoms around the pieces.
pub fn planted_corpus<R: Rng>(
    rng: &mut R,
    n: usize,
    motifs: &[&str],
    copies: (u64, u64),
    noise_tokens: (usize, usize),
) -> PlantedCorpus {
    let motif_lens: Vec<usize> = motifs
        .iter()
        .map(|m| tokenize(m).expect("motifs must lex").tokens.len())
        .collect();
    let mut molecules = Vec::with_capacity(n);
    let mut motif_counts = Vec::with_capacity(n);
    let mut motif_tokens = 0usize;
    let mut total_tokens = 0usize;
    for _ in 0..n {
        let mut pieces: Vec<String> = Vec::new();
        let mut counts = vec![0u64; motifs.len()];
        for (j, motif) in motifs.iter().enumerate() {
            let k = rng.gen_range(copies.0..=copies.1);
            counts[j] = k;
            for _ in 0..k {
                pieces.push((*motif).to_owned());
                motif_tokens += motif_lens[j];
            }
        }
        let noise_budget = rng.gen_range(noise_tokens.0..=noise_tokens.1);
        let mut spent = 0;
        while spent < noise_budget {
            let chunk = rng.gen_range(1..=3.min(noise_budget - spent).max(1));
            pieces.push(noise_fragment(rng, chunk));
            spent += chunk;
        }
        pieces.shuffle(rng);
        let molecule: String = pieces.concat();
        total_tokens += tokenize(&molecule).expect("pieces lex").tokens.len();
        molecules.push(molecule);
        motif_counts.push(counts);
    }
    PlantedCorpus {
        molecules,
        motif_counts,
        motif_token_density: motif_tokens as f64 / total_tokens.max(1) as f64,
    }
}

/// Molecules assembled by concatenating `pieces.0..=pieces.1` fragments from
/// a pool, joined by single linker atoms. Fragments that do not lex are the
/// caller's bug.
pub fn compose_corpus<R: Rng>(
    rng: &mut R,
    n: usize,
    fragments: &[String],
    pieces: (usize, usize),
) -> Vec<String> {
    let linkers = ["C", "N", "O", "c"];
    (0..n)
        .map(|_| {
            let count = rng.gen_range(pieces.0..=pieces.1);
            let mut molecule = String::new();
            for i in 0..count {
                if i > 0 {
                    molecule.push_str(linkers.choose(rng).unwrap());
                }
                molecule.push_str(fragments.choose(rng).expect("non-empty pool"));
            }
            if molecule.is_empty() {
                molecule.push('C');
            }
            molecule
        })
        .collect()
}

/// Fully random token soup built from atoms, bonds, balanced branches and
/// paired ring digits; always lexes, used for property tests.
pub fn random_molecule<R: Rng>(rng: &mut R, tokens: usize) -> String {
    let mut out = String::new();
    let mut emitted = 0;
    let mut open_branches = 0usize;
    let mut open_ring: Option<u8> = None;
    while emitted < tokens {
        match rng.gen_range(0..10) {
            0 if open_branches > 0 => {
                out.push(')');
                open_branches -= 1;
            }
            1 if emitted + 2 < tokens => {
                out.push('(');
                open_branches += 1;
                out.push_str(NOISE_ATOMS.choose(rng).unwrap());
                emitted += 1;
            }
            2 => {
                out.push_str(["=", "#", "-", "/", "\\"].choose(rng).unwrap());
                out.push_str(NOISE_ATOMS.choose(rng).unwrap());
                emitted += 1;
            }
            3 => {
                out.push_str(["[C@@H]", "[C@H]", "[nH]", "[N+]", "[O-]"].choose(rng).unwrap());
            }
            4 => match open_ring.take() {
                Some(d) => out.push((b'0' + d) as char),
                None => {
                    let d = rng.gen_range(1..=9u8);
                    out.push_str(NOISE_ATOMS.choose(rng).unwrap());
                    out.push((b'0' + d) as char);
                    open_ring = Some(d);
                    emitted += 1;
                }
            },
            _ => {
                out.push_str(NOISE_ATOMS.choose(rng).unwrap());
            }
        }
        emitted += 1;
    }
    for _ in 0..open_branches {
        out.push(')');
    }
    if let Some(d) = open_ring {
        out.push((b'0' + d) as char);
    }
    out
}
