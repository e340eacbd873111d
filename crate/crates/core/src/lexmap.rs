//! Vocabulary entries to terminals, and valid sets to vocabulary masks.
//!
//! An entry is classified, in order of priority, as an exact grammar
//! literal, a layout marker (`"\n"`, `<newline>`, `<indent>`, `<dedent>`,
//! `</s>`, `<eos>`), a `NUMBER`, a `STRING` or a `NAME`. Anything else is
//! unclassifiable and never allowed. F-string pieces are never produced
//! from vocabulary entries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::Symbol;
use crate::lexer::{is_name, scan_number, scan_string, DEDENT, INDENT, NAME, NEWLINE, NUMBER, STRING};
use crate::pda::{Pda, SymbolId, ValidSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TerminalClass {
    Terminal(Symbol),
    Unclassifiable,
}

/// Classifies vocabulary entries against a fixed literal set.
#[derive(Debug, Clone)]
pub struct Classifier {
    literals: BTreeSet<String>,
    end_marker: String,
}

impl Classifier {
    pub fn new(literals: impl IntoIterator<Item = String>, end_marker: &str) -> Self {
        Classifier { literals: literals.into_iter().collect(), end_marker: end_marker.to_string() }
    }

    pub fn for_pda(pda: &Pda) -> Self {
        Classifier::new(pda.literals().map(str::to_string), &pda.symbol(pda.end_marker()).name)
    }

    pub fn classify(&self, text: &str) -> TerminalClass {
        if self.literals.contains(text) {
            return TerminalClass::Terminal(Symbol::literal(text));
        }
        let token = match text {
            "\n" | "<newline>" => NEWLINE,
            "<indent>" => INDENT,
            "<dedent>" => DEDENT,
            "</s>" | "<eos>" => self.end_marker.as_str(),
            _ => {
                let chars: Vec<char> = text.chars().collect();
                if scan_number(&chars) == Some(chars.len()) {
                    NUMBER
                } else if scan_string(&chars) == Some(chars.len()) {
                    STRING
                } else if is_name(&chars) {
                    NAME
                } else {
                    return TerminalClass::Unclassifiable;
                }
            }
        };
        TerminalClass::Terminal(Symbol::token(token))
    }
}

/// A vocabulary with each entry's terminal resolved once.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    terminal_of: Vec<Option<SymbolId>>,
    by_terminal: BTreeMap<SymbolId, Vec<usize>>,
}

impl Vocabulary {
    /// Entries whose class is not a terminal of `pda` are permanently masked.
    pub fn new(pda: &Pda, entries: Vec<String>) -> Self {
        let classifier = Classifier::for_pda(pda);
        let terminal_of: Vec<Option<SymbolId>> = entries
            .iter()
            .map(|e| match classifier.classify(e) {
                TerminalClass::Terminal(sym) => pda.id_of(&sym),
                TerminalClass::Unclassifiable => None,
            })
            .collect();
        let mut by_terminal: BTreeMap<SymbolId, Vec<usize>> = BTreeMap::new();
        for (i, t) in terminal_of.iter().enumerate() {
            if let Some(t) = t {
                by_terminal.entry(*t).or_default().push(i);
            }
        }
        Vocabulary { entries, terminal_of, by_terminal }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &str {
        &self.entries[index]
    }

    pub fn terminal_of(&self, index: usize) -> Option<SymbolId> {
        self.terminal_of[index]
    }

    /// Vocabulary indices that map to `terminal`, ascending.
    pub fn indices_of(&self, terminal: SymbolId) -> &[usize] {
        self.by_terminal.get(&terminal).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabMask {
    pub allowed: Vec<bool>,
    /// Terminal of each allowed entry; `None` where masked.
    pub terminal_of: Vec<Option<SymbolId>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask payload truncated")]
    Truncated,
    #[error("mask payload has {0} trailing bytes")]
    Trailing(usize),
}

/// JSON debug form of a mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskJson {
    pub allowed: Vec<usize>,
    pub size: usize,
}

pub fn build_mask(v: &ValidSet, vocab: &Vocabulary) -> VocabMask {
    let terminal_of: Vec<Option<SymbolId>> =
        vocab.terminal_of.iter().map(|t| t.filter(|&t| v.contains(t))).collect();
    VocabMask { allowed: terminal_of.iter().map(Option::is_some).collect(), terminal_of }
}

impl VocabMask {
    pub fn count(&self) -> usize {
        self.allowed.iter().filter(|&&a| a).count()
    }

    pub fn allowed_indices(&self) -> Vec<usize> {
        self.allowed.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect()
    }

    /// Wire form: bit count as little-endian `u32`, then the bits packed
    /// least significant first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.allowed.len();
        let mut out = Vec::with_capacity(4 + n.div_ceil(8));
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.resize(4 + n.div_ceil(8), 0);
        for (i, _) in self.allowed.iter().enumerate().filter(|(_, &a)| a) {
            out[4 + i / 8] |= 1 << (i % 8);
        }
        out
    }

    pub fn to_json(&self) -> MaskJson {
        MaskJson { allowed: self.allowed_indices(), size: self.allowed.len() }
    }
}

/// Decodes the wire form into one flag per vocabulary entry.
pub fn decode_mask(bytes: &[u8]) -> Result<Vec<bool>, MaskError> {
    let header: [u8; 4] = bytes.get(..4).ok_or(MaskError::Truncated)?.try_into().expect("four bytes");
    let n = u32::from_le_bytes(header) as usize;
    let body = &bytes[4..];
    let need = n.div_ceil(8);
    if body.len() < need {
        return Err(MaskError::Truncated);
    }
    if body.len() > need {
        return Err(MaskError::Trailing(body.len() - need));
    }
    Ok((0..n).map(|i| body[i / 8] >> (i % 8) & 1 == 1).collect())
}
