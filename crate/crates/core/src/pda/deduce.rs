//! Epsilon closure and valid-set computation.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::stack::{Frame, NO_ORIGIN};
use super::{ConfigSet, Configuration, Pda, StateId, SymbolId};
use crate::grammar::SymbolKind;

pub const DEFAULT_CLOSURE_BUDGET: usize = 100_000;

const CHAIN_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeductionError {
    #[error("closure budget of {budget} expansions exceeded; deepest chain: {}", .chain.join(" -> "))]
    BudgetExceeded { budget: usize, chain: Vec<String> },
}

/// Successors reachable by consuming one terminal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidEntry {
    pub successors: ConfigSet,
    /// Non-terminals whose productions pushed the consumed terminal. These
    /// are the predicted states used for joint scoring.
    pub origins: BTreeSet<StateId>,
}

impl ValidEntry {
    /// Fewest terminals still needed after this one to empty a successor's
    /// stack.
    pub fn min_completion(&self) -> u32 {
        self.successors.iter().map(|c| c.stack.min_completion()).min().unwrap_or(0)
    }
}

/// The valid next terminals of a frontier, with their successors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidSet {
    entries: BTreeMap<SymbolId, ValidEntry>,
    can_accept: bool,
}

/// Terminal names of a valid set split by kind, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidSetSummary {
    pub syntax_strings: Vec<String>,
    pub token_types: Vec<String>,
    pub can_accept: bool,
}

impl ValidSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, terminal: SymbolId) -> bool {
        self.entries.contains_key(&terminal)
    }

    pub fn get(&self, terminal: SymbolId) -> Option<&ValidEntry> {
        self.entries.get(&terminal)
    }

    /// Terminals in id order.
    pub fn terminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &ValidEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    /// True when the closure held an empty-stack configuration.
    pub fn can_accept(&self) -> bool {
        self.can_accept
    }

    pub fn summary(&self, pda: &Pda) -> ValidSetSummary {
        let mut out = ValidSetSummary {
            syntax_strings: Vec::new(),
            token_types: Vec::new(),
            can_accept: self.can_accept,
        };
        for t in self.terminals() {
            let sym = pda.symbol(t);
            match sym.kind {
                SymbolKind::TokenType => out.token_types.push(sym.name.clone()),
                _ => out.syntax_strings.push(sym.name.clone()),
            }
        }
        out
    }
}

impl Pda {
    /// All configurations reachable from `c` by ε-moves whose stack top is a
    /// terminal, plus those with an empty stack.
    pub fn closure(&self, c: &ConfigSet) -> Result<ConfigSet, DeductionError> {
        let mut out = ConfigSet::new();
        let mut seen: HashSet<Configuration> = HashSet::new();
        let mut queue: VecDeque<Configuration> = c.iter().cloned().collect();
        let mut expanded = 0usize;
        let mut deepest: Option<Configuration> = None;

        while let Some(cfg) = queue.pop_front() {
            let top = match cfg.stack.top() {
                Some(top) if !self.is_terminal(top) => top,
                _ => {
                    out.insert(cfg);
                    continue;
                }
            };
            if seen.contains(&cfg) {
                continue;
            }
            expanded += 1;
            if expanded > self.closure_budget() {
                let worst = deepest.as_ref().unwrap_or(&cfg);
                return Err(DeductionError::BudgetExceeded {
                    budget: self.closure_budget(),
                    chain: self.nonterminal_chain(worst),
                });
            }
            if deepest.as_ref().map_or(true, |d| d.stack.len() < cfg.stack.len()) {
                deepest = Some(cfg.clone());
            }

            let rest = cfg.stack.pop();
            let origin = self.state_of(top).map_or(NO_ORIGIN, |s| s.0);
            for rhs in self.expansions(top) {
                let stack = rhs.iter().rev().fold(rest.clone(), |st, &s| {
                    let origin = if self.is_terminal(s) { origin } else { NO_ORIGIN };
                    st.push(Frame { symbol: s, origin }, self.min_yield(s))
                });
                queue.push_back(Configuration { state: cfg.state, stack });
            }
            seen.insert(cfg);
        }
        Ok(out)
    }

    /// Terminals consumable from `c`, each with its post-pop successors.
    pub fn valid_set(&self, c: &ConfigSet) -> Result<ValidSet, DeductionError> {
        let closed = self.closure(c)?;
        let mut v = ValidSet::default();
        for cfg in &closed {
            let Some(frame) = cfg.stack.top_frame() else {
                v.can_accept = true;
                continue;
            };
            let entry = v.entries.entry(frame.symbol).or_default();
            entry.successors.insert(Configuration { state: cfg.state, stack: cfg.stack.pop() });
            entry.origins.insert(if frame.origin == NO_ORIGIN { cfg.state } else { StateId(frame.origin) });
        }
        Ok(v)
    }

    fn nonterminal_chain(&self, cfg: &Configuration) -> Vec<String> {
        cfg.stack
            .iter()
            .filter(|&s| !self.is_terminal(s))
            .take(CHAIN_LIMIT)
            .map(|s| self.symbol(s).name.clone())
            .collect()
    }
}
