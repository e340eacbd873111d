//! The scorer contract and the built-in scorers.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::grammar::Symbol;
use crate::pda::Token;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer returned {got} weights for {expected} candidates")]
    WeightCount { expected: usize, got: usize },
    #[error("scorer returned an invalid weight {0}")]
    InvalidWeight(f64),
    #[error("replay script has no token at position {0}")]
    ScriptExhausted(usize),
    #[error("replayed terminal {terminal} at position {position} is not among the candidates")]
    NotInCandidates { position: usize, terminal: Symbol },
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("n-gram corpus is empty")]
    EmptyCorpus,
    #[error("external scorer: {0}")]
    External(String),
    #[error("external scorer I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Source of preferences over candidate tokens.
///
/// The decoder calls [`score_tokens`](Scorer::score_tokens) first and then
/// [`score_states`](Scorer::score_states) for the same prefix.
pub trait Scorer {
    /// One finite, non-negative weight per candidate. All zeros is allowed.
    fn score_tokens(&mut self, prefix: &[Token], candidates: &[Token]) -> Result<Vec<f64>, ScorerError>;

    /// Optional weights over automaton states, keyed by non-terminal name.
    fn score_states(&mut self, _prefix: &[Token]) -> Result<Option<BTreeMap<String, f64>>, ScorerError> {
        Ok(None)
    }

    /// Surface text to attach when `terminal` is chosen after `prefix`.
    fn surface(&mut self, _prefix: &[Token], _terminal: &Symbol) -> Option<String> {
        None
    }
}

/// Equal weight for every candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl Scorer for Uniform {
    fn score_tokens(&mut self, _prefix: &[Token], candidates: &[Token]) -> Result<Vec<f64>, ScorerError> {
        Ok(vec![1.0; candidates.len()])
    }
}

/// Replays a fixed token script.
#[derive(Debug, Clone)]
pub struct Replay {
    script: Vec<Token>,
}

impl Replay {
    pub fn new(script: Vec<Token>) -> Self {
        Replay { script }
    }

    fn scripted(&self, position: usize) -> Result<&Token, ScorerError> {
        self.script.get(position).ok_or(ScorerError::ScriptExhausted(position))
    }
}

impl Scorer for Replay {
    fn score_tokens(&mut self, prefix: &[Token], candidates: &[Token]) -> Result<Vec<f64>, ScorerError> {
        let want = self.scripted(prefix.len())?;
        let weights: Vec<f64> =
            candidates.iter().map(|c| if c.terminal == want.terminal { 1.0 } else { 0.0 }).collect();
        if weights.iter().all(|&w| w == 0.0) {
            return Err(ScorerError::NotInCandidates { position: prefix.len(), terminal: want.terminal.clone() });
        }
        Ok(weights)
    }

    fn surface(&mut self, prefix: &[Token], terminal: &Symbol) -> Option<String> {
        self.script.get(prefix.len()).filter(|t| &t.terminal == terminal).map(|t| t.surface.clone())
    }
}

/// Add-one smoothed n-gram counts over terminals.
#[derive(Debug, Clone)]
pub struct Ngram {
    order: usize,
    counts: HashMap<(Vec<Option<Symbol>>, Symbol), u64>,
    surfaces: HashMap<Symbol, String>,
}

impl Ngram {
    pub fn train(order: usize, corpus: &[Vec<Token>]) -> Result<Self, ScorerError> {
        if order == 0 {
            return Err(ScorerError::ZeroOrder);
        }
        if corpus.iter().all(Vec::is_empty) {
            return Err(ScorerError::EmptyCorpus);
        }
        let mut counts = HashMap::new();
        let mut surface_counts: HashMap<Symbol, BTreeMap<String, u64>> = HashMap::new();
        for stream in corpus {
            for i in 0..stream.len() {
                let ctx = Self::context_of(order, &stream[..i]);
                *counts.entry((ctx, stream[i].terminal.clone())).or_insert(0) += 1;
                *surface_counts
                    .entry(stream[i].terminal.clone())
                    .or_default()
                    .entry(stream[i].surface.clone())
                    .or_insert(0) += 1;
            }
        }
        // Most frequent surface; the BTreeMap makes ties go to the smallest.
        let surfaces = surface_counts
            .into_iter()
            .map(|(t, by)| {
                let best = by.iter().fold(None::<(&String, u64)>, |best, (s, &n)| match best {
                    Some((_, m)) if m >= n => best,
                    _ => Some((s, n)),
                });
                (t, best.expect("non-empty").0.clone())
            })
            .collect();
        Ok(Ngram { order, counts, surfaces })
    }

    fn context_of(order: usize, prefix: &[Token]) -> Vec<Option<Symbol>> {
        let n = order - 1;
        let have = prefix.len().min(n);
        let mut ctx = vec![None; n - have];
        ctx.extend(prefix[prefix.len() - have..].iter().map(|t| Some(t.terminal.clone())));
        ctx
    }
}

impl Scorer for Ngram {
    fn score_tokens(&mut self, prefix: &[Token], candidates: &[Token]) -> Result<Vec<f64>, ScorerError> {
        let ctx = Self::context_of(self.order, prefix);
        let mut key = (ctx, Symbol::literal(""));
        Ok(candidates
            .iter()
            .map(|c| {
                key.1 = c.terminal.clone();
                (self.counts.get(&key).copied().unwrap_or(0) + 1) as f64
            })
            .collect())
    }

    fn surface(&mut self, _prefix: &[Token], terminal: &Symbol) -> Option<String> {
        self.surfaces.get(terminal).cloned()
    }
}
