//! The filter that decides whether a token sequence is eligible for the
//! codebook. Verdicts depend only on the fully expanded text of the
//! candidate, never on surrounding context.

use crate::codebook::Codebook;
use crate::lexer::{Token, TokenKind};

/// Which rule a rejected substring violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidityRule {
    UnmatchedParen,
    /// Unreachable for lexed input (a bracket atom is a single token), kept
    /// so manually built token sequences still get a precise verdict.
    UnmatchedBracket,
    DanglingBond,
    UnpairedRingDigit,
    ContainsDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub violated_rule: Option<ValidityRule>,
}

impl ValidityVerdict {
    fn ok() -> Self {
        ValidityVerdict {
            valid: true,
            violated_rule: None,
        }
    }

    fn violation(rule: ValidityRule) -> Self {
        ValidityVerdict {
            valid: false,
            violated_rule: Some(rule),
        }
    }
}

/// Decide whether a token sequence is a valid substring. Meta-symbols are
/// permitted; they are expanded through `codebook` before checking, so a
/// candidate passes iff its primitive expansion passes.
///
/// The rules, applied to the expanded sequence:
///
/// 1. parentheses match and nest properly;
/// 2. every bond token has an atom immediately before or after it;
/// 3. every ring-closure label occurs an even number of times (labels may
///    legitimately pair up twice inside one substring);
/// 4. no `.` token.
pub fn is_valid_substring(tokens: &[Token], codebook: Option<&Codebook>) -> ValidityVerdict {
    let mut expanded: Vec<&Token> = Vec::with_capacity(tokens.len());
    for token in tokens {
        match token.meta_id {
            None => expanded.push(token),
            Some(id) => {
                let entry = codebook.and_then(|cb| cb.get(id));
                match entry {
                    // An unresolvable meta-symbol cannot stand for anything
                    // checkable; treat it like an opaque non-atom.
                    None => expanded.push(token),
                    Some(e) => expanded.extend(e.expanded.iter()),
                }
            }
        }
    }
    verdict_for(&expanded)
}

pub(crate) fn verdict_for(tokens: &[&Token]) -> ValidityVerdict {
    if tokens.iter().any(|t| t.kind == TokenKind::Dot) {
        return ValidityVerdict::violation(ValidityRule::ContainsDot);
    }

    let mut depth: i64 = 0;
    for t in tokens {
        match t.kind {
            TokenKind::OpenParen => depth += 1,
            TokenKind::CloseParen => {
                depth -= 1;
                if depth < 0 {
                    return ValidityVerdict::violation(ValidityRule::UnmatchedParen);
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return ValidityVerdict::violation(ValidityRule::UnmatchedParen);
    }

    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Bond {
            continue;
        }
        let before = i.checked_sub(1).map(|j| tokens[j].is_atom()).unwrap_or(false);
        let after = tokens.get(i + 1).map(|n| n.is_atom()).unwrap_or(false);
        if !before && !after {
            return ValidityVerdict::violation(ValidityRule::DanglingBond);
        }
    }

    let mut parity = [false; 100];
    for t in tokens {
        if let Some(label) = t.ring_label() {
            parity[label as usize] = !parity[label as usize];
        }
    }
    if parity.iter().any(|&odd| odd) {
        return ValidityVerdict::violation(ValidityRule::UnpairedRingDigit);
    }

    ValidityVerdict::ok()
}
