//! The pushdown automaton built from a grammar, and deduction over it.
//!
//! States are the grammar's non-terminals, the input alphabet is its
//! terminals and the stack alphabet is both. Transitions come from two rule
//! classes only:
//!
//! * `δ(s, N, ε) = {(s, β) | N → β}` for every non-terminal `N`;
//! * `δ(s, T, T) = {(s, ε)}` for every terminal `T`.
//!
//! Neither class changes the state, so the transition table is the same for
//! every state. `β` is pushed so that its first symbol ends up on top.

mod codec;
mod deduce;
mod session;
mod stack;

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexSet;

use crate::grammar::{analyze, Grammar, GrammarError, Symbol, SymbolKind};

pub use codec::CodecError;
pub use deduce::{DeductionError, ValidEntry, ValidSet, ValidSetSummary, DEFAULT_CLOSURE_BUDGET};
pub use session::{recognize, Recognition, Session, SessionError, Status, Token};
pub use stack::{Stack, StateId, SymbolId};

use stack::{Frame, NO_ORIGIN};

/// Yield assigned to symbols that derive no terminal string.
const UNPRODUCTIVE: u32 = u32::MAX / 4;

/// A (state, stack) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: StateId,
    pub stack: Stack,
}

/// A deduplicated set of configurations in insertion order. Terminal stack
/// entries also carry the rule that pushed them, so two configurations with
/// the same symbols but different origins are kept apart.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigSet(IndexSet<Configuration>);

impl ConfigSet {
    pub fn new() -> Self {
        ConfigSet(IndexSet::new())
    }

    /// Returns false when the configuration was already present.
    pub fn insert(&mut self, c: Configuration) -> bool {
        self.0.insert(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.0.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Configuration> {
        self.0.iter()
    }
}

impl FromIterator<Configuration> for ConfigSet {
    fn from_iter<I: IntoIterator<Item = Configuration>>(iter: I) -> Self {
        ConfigSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ConfigSet {
    type Item = &'a Configuration;
    type IntoIter = indexmap::set::Iter<'a, Configuration>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One element of `δ(s, top, input)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub next_state: StateId,
    /// Symbols to push, in grammar order; the first ends on top.
    pub push: Vec<SymbolId>,
}

/// A row of the state-independent transition table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaRow {
    pub stack_top: SymbolId,
    /// `None` is ε.
    pub input: Option<SymbolId>,
    pub pushes: Vec<Vec<SymbolId>>,
}

/// The compiled automaton `(S, Σ, Γ, s0, g0, A, δ)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pda {
    /// Terminals sorted by (kind, name), then non-terminals sorted by name.
    symbols: Vec<Symbol>,
    num_terminals: u32,
    start: SymbolId,
    accept: Vec<SymbolId>,
    /// Right-hand sides per non-terminal, in grammar order.
    expansions: Vec<Vec<Vec<SymbolId>>>,
    min_yield: Vec<u32>,
    index: HashMap<Symbol, SymbolId>,
    closure_budget: usize,
}

/// Compiles a desugared grammar. Grammars that never mention their end
/// marker are first augmented with `start__eof: start ENDMARKER`.
pub fn compile(g: &Grammar) -> Result<Pda, GrammarError> {
    let report = analyze(g);
    if report.is_left_recursive() {
        return Err(GrammarError::LeftRecursion(report.left_recursive_cycles));
    }
    let g = g.augmented();

    let mut terminals: BTreeSet<Symbol> = g.terminals();
    terminals.extend(g.token_types().iter().map(|t| Symbol::token(t.clone())));
    let nonterminals: BTreeSet<&str> = g.nonterminals().into_iter().collect();

    let mut symbols: Vec<Symbol> = terminals.into_iter().collect();
    let num_terminals = symbols.len() as u32;
    symbols.extend(nonterminals.iter().map(|n| Symbol::nonterminal(*n)));

    let mut expansions = vec![Vec::new(); nonterminals.len()];
    let index: HashMap<Symbol, SymbolId> =
        symbols.iter().enumerate().map(|(i, s)| (s.clone(), SymbolId(i as u32))).collect();
    for p in g.productions() {
        let lhs = index[&Symbol::nonterminal(p.lhs.clone())];
        let rhs = p.rhs.iter().map(|s| index[s]).collect();
        expansions[(lhs.0 - num_terminals) as usize].push(rhs);
    }

    let start = index[&Symbol::nonterminal(g.start())];
    let accept = vec![index[&Symbol::token(g.end_marker())]];
    Ok(Pda::assemble(symbols, num_terminals, start, accept, expansions))
}

impl Pda {
    fn assemble(
        symbols: Vec<Symbol>,
        num_terminals: u32,
        start: SymbolId,
        accept: Vec<SymbolId>,
        expansions: Vec<Vec<Vec<SymbolId>>>,
    ) -> Pda {
        let index = symbols.iter().enumerate().map(|(i, s)| (s.clone(), SymbolId(i as u32))).collect();
        let mut pda = Pda {
            symbols,
            num_terminals,
            start,
            accept,
            expansions,
            min_yield: Vec::new(),
            index,
            closure_budget: DEFAULT_CLOSURE_BUDGET,
        };
        pda.min_yield = pda.compute_min_yield();
        pda
    }

    fn compute_min_yield(&self) -> Vec<u32> {
        let mut y: Vec<u32> = (0..self.symbols.len() as u32)
            .map(|i| if i < self.num_terminals { 1 } else { UNPRODUCTIVE })
            .collect();
        loop {
            let mut changed = false;
            for (i, rhss) in self.expansions.iter().enumerate() {
                let nt = i + self.num_terminals as usize;
                for rhs in rhss {
                    let total = rhs
                        .iter()
                        .fold(0u32, |acc, s| acc.saturating_add(y[s.0 as usize]))
                        .min(UNPRODUCTIVE);
                    if total < y[nt] {
                        y[nt] = total;
                        changed = true;
                    }
                }
            }
            if !changed {
                return y;
            }
        }
    }

    /// Caps the number of ε-expansions a single closure may perform.
    pub fn with_closure_budget(mut self, budget: usize) -> Self {
        self.closure_budget = budget;
        self
    }

    pub fn closure_budget(&self) -> usize {
        self.closure_budget
    }

    /// `S`: one state per non-terminal.
    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.expansions.len() as u32).map(StateId)
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.symbols[(state.0 + self.num_terminals) as usize].name
    }

    pub fn state_of(&self, nonterminal: SymbolId) -> Option<StateId> {
        (nonterminal.0 >= self.num_terminals && (nonterminal.0 as usize) < self.symbols.len())
            .then(|| StateId(nonterminal.0 - self.num_terminals))
    }

    /// `Σ`, sorted by (kind, name).
    pub fn input_alphabet(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.num_terminals).map(SymbolId)
    }

    /// `Γ = Σ ∪ S`.
    pub fn stack_alphabet(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.symbols.len() as u32).map(SymbolId)
    }

    pub fn start_state(&self) -> StateId {
        self.state_of(self.start).expect("start symbol is a non-terminal")
    }

    pub fn start_stack_symbol(&self) -> SymbolId {
        self.start
    }

    /// `A`: the end-marker terminal(s).
    pub fn accept_set(&self) -> &[SymbolId] {
        &self.accept
    }

    pub fn end_marker(&self) -> SymbolId {
        self.accept[0]
    }

    pub fn is_accepting(&self, terminal: SymbolId) -> bool {
        self.accept.contains(&terminal)
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    pub fn is_terminal(&self, id: SymbolId) -> bool {
        id.0 < self.num_terminals
    }

    pub fn id_of(&self, symbol: &Symbol) -> Option<SymbolId> {
        self.index.get(symbol).copied()
    }

    /// Looks a terminal up by its wire name: a token-type if `Σ` has one of
    /// that name, otherwise a syntax-string.
    pub fn resolve_terminal(&self, name: &str) -> Symbol {
        let tt = Symbol::token(name);
        if self.index.contains_key(&tt) {
            tt
        } else {
            Symbol::literal(name)
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = &str> {
        self.terminals_of_kind(SymbolKind::SyntaxString)
    }

    pub fn token_types(&self) -> impl Iterator<Item = &str> {
        self.terminals_of_kind(SymbolKind::TokenType)
    }

    fn terminals_of_kind(&self, kind: SymbolKind) -> impl Iterator<Item = &str> {
        self.symbols[..self.num_terminals as usize]
            .iter()
            .filter(move |s| s.kind == kind)
            .map(|s| s.name.as_str())
    }

    /// Productions of a non-terminal as symbol ids (empty for terminals).
    pub fn expansions(&self, symbol: SymbolId) -> &[Vec<SymbolId>] {
        match self.state_of(symbol) {
            Some(state) => &self.expansions[state.0 as usize],
            None => &[],
        }
    }

    /// Minimum number of terminals derivable from `symbol`.
    pub fn min_yield(&self, symbol: SymbolId) -> u32 {
        self.min_yield[symbol.0 as usize]
    }

    /// `δ(state, top, input)`; `input = None` is ε.
    pub fn delta(&self, state: StateId, top: SymbolId, input: Option<SymbolId>) -> Vec<Transition> {
        match input {
            None => self
                .expansions(top)
                .iter()
                .map(|rhs| Transition { next_state: state, push: rhs.clone() })
                .collect(),
            Some(i) if i == top && self.is_terminal(top) => {
                vec![Transition { next_state: state, push: Vec::new() }]
            }
            Some(_) => Vec::new(),
        }
    }

    /// Every non-empty row of the table, ordered by (stack top, input) with
    /// ε after all terminals.
    pub fn delta_rows(&self) -> Vec<DeltaRow> {
        let mut rows: Vec<DeltaRow> = self
            .input_alphabet()
            .map(|t| DeltaRow { stack_top: t, input: Some(t), pushes: vec![Vec::new()] })
            .collect();
        for (i, rhss) in self.expansions.iter().enumerate() {
            if !rhss.is_empty() {
                rows.push(DeltaRow {
                    stack_top: SymbolId(i as u32 + self.num_terminals),
                    input: None,
                    pushes: rhss.clone(),
                });
            }
        }
        rows
    }

    /// The start configuration `(s0, [g0])`.
    pub fn initial_configuration(&self) -> Configuration {
        Configuration { state: self.start_state(), stack: self.stack_of(&[self.start]) }
    }

    pub fn initial(&self) -> ConfigSet {
        std::iter::once(self.initial_configuration()).collect()
    }

    /// Builds a stack from symbols listed bottom first.
    pub fn stack_of(&self, bottom_to_top: &[SymbolId]) -> Stack {
        bottom_to_top.iter().fold(Stack::new(), |st, &s| {
            st.push(Frame { symbol: s, origin: NO_ORIGIN }, self.min_yield(s))
        })
    }

    pub fn configuration(&self, state: StateId, bottom_to_top: &[SymbolId]) -> Configuration {
        Configuration { state, stack: self.stack_of(bottom_to_top) }
    }

    /// Non-terminal names from the top of `stack`, for diagnostics.
    pub fn describe_stack(&self, stack: &Stack) -> Vec<String> {
        stack.iter().map(|s| self.symbol(s).to_string()).collect()
    }
}
