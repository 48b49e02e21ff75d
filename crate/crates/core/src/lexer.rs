//! SMILES lexing: segments a SMILES line into the symbol sequence that every
//! downstream count and codelength is defined over.
//!
//! The token grammar is fixed and deliberately small:
//!
//! * organic-subset atoms `B C N O P S F I` with maximal munch for the
//!   two-letter halogens `Cl` and `Br`
//! * aromatic atoms `b c n o p s`
//! * a whole bracket atom `[...]` (isotope, stereo marks, charge and explicit
//!   hydrogens stay inside the single token)
//! * bond characters `- = # / \ :`
//! * ring closures: one digit, or `%nn` with exactly two digits
//! * `(`, `)` and `.`
//!
//! Anything else (wildcards, reaction arrows, a bare `@`) is a hard
//! [`LexError`] carrying the byte offset; malformed corpus lines are never
//! silently skipped at this layer.

use std::fmt;

use thiserror::Error;

use crate::codebook::{Codebook, EntryId};

/// Lexical category of a [`Token`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Atom,
    BracketAtom,
    Bond,
    RingClosure,
    OpenParen,
    CloseParen,
    Dot,
    /// Stands for a codebook entry; never produced by the lexer.
    MetaSymbol,
}

/// One SMILES symbol, or one codebook meta-symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Present iff `kind == MetaSymbol`.
    pub meta_id: Option<EntryId>,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        debug_assert!(kind != TokenKind::MetaSymbol);
        Token {
            kind,
            text: text.into(),
            meta_id: None,
        }
    }

    /// A meta-symbol token. The text is a display placeholder; rendering goes
    /// through the codebook, never through this text.
    pub fn meta(id: EntryId) -> Self {
        Token {
            kind: TokenKind::MetaSymbol,
            text: format!("<{}>", id.0),
            meta_id: Some(id),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self.kind, TokenKind::Atom | TokenKind::BracketAtom)
    }

    /// Numeric ring-bond label for a ring-closure token (`"3"` -> 3,
    /// `"%12"` -> 12).
    pub fn ring_label(&self) -> Option<u16> {
        if self.kind != TokenKind::RingClosure {
            return None;
        }
        self.text.trim_start_matches('%').parse().ok()
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A lexed SMILES string. Concatenating the token texts reproduces `source`
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unexpected character {found:?} at byte {offset}")]
    UnexpectedChar { offset: usize, found: char },
    #[error("unterminated bracket atom starting at byte {offset}")]
    UnterminatedBracket { offset: usize },
    #[error("empty bracket atom at byte {offset}")]
    EmptyBracket { offset: usize },
    #[error("'%' ring closure at byte {offset} needs two digits")]
    BadPercentClosure { offset: usize },
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("meta-symbol {0:?} not present in the codebook")]
    UnknownMetaSymbol(EntryId),
}

/// Tokenize a SMILES string under the fixed grammar. Maximal munch and the
/// single-token bracket rule make the segmentation unique.
pub fn tokenize(smiles: &str) -> Result<TokenStream, LexError> {
    if smiles.is_empty() {
        return Err(LexError::Empty);
    }
    let bytes = smiles.as_bytes();
    let mut tokens = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let (token, len) = next_token(smiles, bytes, i)?;
        tokens.push(token);
        i += len;
    }
    Ok(TokenStream {
        tokens,
        source: smiles.to_owned(),
    })
}

fn next_token(src: &str, bytes: &[u8], i: usize) -> Result<(Token, usize), LexError> {
    let b = bytes[i];
    let tok = |kind, len: usize| Ok((Token::new(kind, &src[i..i + len]), len));
    match b {
        b'C' if bytes.get(i + 1) == Some(&b'l') => tok(TokenKind::Atom, 2),
        b'B' if bytes.get(i + 1) == Some(&b'r') => tok(TokenKind::Atom, 2),
        b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => tok(TokenKind::Atom, 1),
        b'b' | b'c' | b'n' | b'o' | b'p' | b's' => tok(TokenKind::Atom, 1),
        b'[' => {
            let close = bytes[i + 1..]
                .iter()
                .position(|&c| c == b']')
                .map(|off| i + 1 + off)
                .ok_or(LexError::UnterminatedBracket { offset: i })?;
            if close == i + 1 {
                return Err(LexError::EmptyBracket { offset: i });
            }
            tok(TokenKind::BracketAtom, close - i + 1)
        }
        b'-' | b'=' | b'#' | b'/' | b'\\' | b':' => tok(TokenKind::Bond, 1),
        b'0'..=b'9' => tok(TokenKind::RingClosure, 1),
        b'%' => {
            let two_digits = bytes.get(i + 1).is_some_and(u8::is_ascii_digit)
                && bytes.get(i + 2).is_some_and(u8::is_ascii_digit);
            if !two_digits {
                return Err(LexError::BadPercentClosure { offset: i });
            }
            tok(TokenKind::RingClosure, 3)
        }
        b'(' => tok(TokenKind::OpenParen, 1),
        b')' => tok(TokenKind::CloseParen, 1),
        b'.' => tok(TokenKind::Dot, 1),
        _ => Err(LexError::UnexpectedChar {
            offset: i,
            found: src[i..].chars().next().unwrap(),
        }),
    }
}

/// Render a token sequence back to a primitive SMILES string, expanding any
/// meta-symbols through `codebook`. Inverse of [`tokenize`] on meta-free
/// input.
pub fn render(tokens: &[Token], codebook: Option<&Codebook>) -> Result<String, RenderError> {
    let mut out = String::new();
    for token in tokens {
        match token.meta_id {
            None => out.push_str(&token.text),
            Some(id) => {
                let entry = codebook
                    .and_then(|cb| cb.get(id))
                    .ok_or(RenderError::UnknownMetaSymbol(id))?;
                // Entries store their expansion in primitive form, so one
                // level of lookup fully flattens nested discoveries.
                out.push_str(entry.expanded_smiles());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s)
            .unwrap()
            .tokens
            .iter()
            .map(|t| t.text.clone())
            .collect()
    }

    #[test]
    fn organic_atoms() {
        assert_eq!(texts("CCO"), ["C", "C", "O"]);
    }

    #[test]
    fn two_letter_halogens_maximal_munch() {
        assert_eq!(
            texts("Clc1ccccc1"),
            ["Cl", "c", "1", "c", "c", "c", "c", "c", "1"]
        );
        assert_eq!(texts("BrB"), ["Br", "B"]);
    }

    #[test]
    fn bracket_atom_is_one_token() {
        assert_eq!(texts("[C@@H](O)"), ["[C@@H]", "(", "O", ")"]);
    }

    #[test]
    fn percent_ring_closure() {
        assert_eq!(texts("C%12CC%12"), ["C", "%12", "C", "C", "%12"]);
    }

    #[test]
    fn bonds_and_dot() {
        assert_eq!(texts("C=C#N.C/C\\C:C-C"), [
            "C", "=", "C", "#", "N", ".", "C", "/", "C", "\\", "C", ":", "C", "-", "C"
        ]);
    }

    #[test]
    fn bare_stereo_mark_is_rejected() {
        assert_eq!(
            tokenize("C@C"),
            Err(LexError::UnexpectedChar {
                offset: 1,
                found: '@'
            })
        );
    }

    #[test]
    fn wildcard_is_rejected() {
        assert!(matches!(
            tokenize("C*"),
            Err(LexError::UnexpectedChar { offset: 1, .. })
        ));
    }

    #[test]
    fn unterminated_bracket() {
        assert_eq!(
            tokenize("C[NH2"),
            Err(LexError::UnterminatedBracket { offset: 1 })
        );
    }

    #[test]
    fn percent_needs_two_digits() {
        assert_eq!(
            tokenize("C%1C"),
            Err(LexError::BadPercentClosure { offset: 1 })
        );
    }

    #[test]
    fn render_is_identity_without_metas() {
        let stream = tokenize("C(=O)N").unwrap();
        assert_eq!(render(&stream.tokens, None).unwrap(), "C(=O)N");
    }

    #[test]
    fn ring_labels() {
        let stream = tokenize("C1CC%12").unwrap();
        assert_eq!(stream.tokens[1].ring_label(), Some(1));
        assert_eq!(stream.tokens[4].ring_label(), Some(12));
        assert_eq!(stream.tokens[0].ring_label(), None);
    }

    mod properties {
        use super::*;
        use crate::synth::random_molecule;
        use proptest::prelude::*;
        use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

        proptest! {
            #[test]
            fn render_inverts_tokenize(seed in any::<u64>(), len in 1usize..40) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let molecule = random_molecule(&mut rng, len);
                let stream = tokenize(&molecule).unwrap();
                prop_assert!(stream.tokens.iter().all(|t| !t.text.is_empty()));
                prop_assert_eq!(render(&stream.tokens, None).unwrap(), molecule);
            }

            #[test]
            fn tokenization_is_stable_under_retokenize(seed in any::<u64>(), len in 1usize..30) {
                // Segmenting a rendered stream again yields the same tokens:
                // there is only one segmentation of any accepted string.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let molecule = random_molecule(&mut rng, len);
                let first = tokenize(&molecule).unwrap();
                let again = tokenize(&first.source).unwrap();
                prop_assert_eq!(first.tokens, again.tokens);
            }
        }
    }
}
