//! Brute-force language enumeration by leftmost derivation.
//!
//! Deliberately independent of the automaton: sentential forms are expanded
//! breadth-first at their leftmost non-terminal and pruned once their
//! shortest possible yield exceeds the bound.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::EvalError;
use crate::grammar::{analyze, Grammar, Symbol};

/// Largest sentence length the enumerator accepts.
pub const MAX_ENUMERATION_LEN: usize = 12;

/// Cap on distinct sentential forms visited.
pub const FORM_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumeratedLanguage {
    pub sentences: BTreeSet<Vec<Symbol>>,
    pub bound: usize,
}

/// File form: each symbol as written in a grammar (`'lit'` or `NAME`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumeratedLanguageJson {
    pub start: String,
    pub bound: usize,
    pub count: usize,
    pub sentences: Vec<Vec<String>>,
}

impl EnumeratedLanguage {
    pub fn to_json(&self, start: &str) -> EnumeratedLanguageJson {
        EnumeratedLanguageJson {
            start: start.to_string(),
            bound: self.bound,
            count: self.sentences.len(),
            sentences: self.sentences.iter().map(|s| s.iter().map(Symbol::to_string).collect()).collect(),
        }
    }
}

/// Every sentence of `g` with at most `max_len` terminals.
pub fn enumerate_language(g: &Grammar, max_len: usize) -> Result<EnumeratedLanguage, EvalError> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(EvalError::BoundTooLarge { max_len, limit: MAX_ENUMERATION_LEN });
    }
    let report = analyze(g);
    if report.is_left_recursive() {
        return Err(EvalError::LeftRecursive(report.left_recursive_cycles));
    }

    let shortest = shortest_yields(g);
    let bound_of = |form: &[Symbol]| -> usize {
        form.iter()
            .map(|s| if s.is_terminal() { 1 } else { shortest.get(s.name.as_str()).copied().unwrap_or(usize::MAX) })
            .fold(0usize, usize::saturating_add)
    };

    let mut sentences = BTreeSet::new();
    let start = vec![Symbol::nonterminal(g.start())];
    let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
    let mut queue: VecDeque<Vec<Symbol>> = VecDeque::new();
    if bound_of(&start) <= max_len {
        seen.insert(start.clone());
        queue.push_back(start);
    }
    while let Some(form) = queue.pop_front() {
        let Some(at) = form.iter().position(|s| !s.is_terminal()) else {
            sentences.insert(form);
            continue;
        };
        for p in g.productions_of(&form[at].name) {
            let mut next = Vec::with_capacity(form.len() + p.rhs.len());
            next.extend_from_slice(&form[..at]);
            next.extend(p.rhs.iter().cloned());
            next.extend_from_slice(&form[at + 1..]);
            if bound_of(&next) > max_len || seen.contains(&next) {
                continue;
            }
            if seen.len() >= FORM_BUDGET {
                return Err(EvalError::FormBudget(FORM_BUDGET));
            }
            seen.insert(next.clone());
            queue.push_back(next);
        }
    }
    Ok(EnumeratedLanguage { sentences, bound: max_len })
}

fn shortest_yields(g: &Grammar) -> HashMap<&str, usize> {
    let mut best: HashMap<&str, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for p in g.productions() {
            let len = p.rhs.iter().try_fold(0usize, |acc, s| {
                if s.is_terminal() {
                    Some(acc + 1)
                } else {
                    best.get(s.name.as_str()).map(|n| acc + n)
                }
            });
            if let Some(len) = len {
                if best.get(p.lhs.as_str()).map_or(true, |&b| len < b) {
                    best.insert(&p.lhs, len);
                    changed = true;
                }
            }
        }
        if !changed {
            return best;
        }
    }
}
