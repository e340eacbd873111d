//! Grammar-constrained decoding.
//!
//! A context-free grammar is compiled into a pushdown automaton whose
//! frontier yields, at every position, the set of terminals that can still
//! lead to a complete sentence. The decoder intersects a scorer's
//! preferences with that set so every finished sequence is grammatical.

pub mod decode;
pub mod eval;
pub mod grammar;
pub mod lexer;
pub mod lexmap;
pub mod pda;

pub use grammar::{analyze, parse_grammar, Grammar, GrammarError, GrammarReport, Production, Symbol, SymbolKind};
pub use pda::{
    compile, recognize, CodecError, ConfigSet, Configuration, DeductionError, Pda, Recognition, Session,
    SessionError, Stack, StateId, Status, SymbolId, Token, ValidEntry, ValidSet,
};

/// Grammars shipped with the crate.
pub mod grammars {
    /// The full Python 3 grammar.
    pub const PYTHON3: &str = include_str!("../../../grammars/python3.gram");
    /// A small Python subset: statements, blocks, expressions.
    pub const MINI_PYTHON: &str = include_str!("../../../grammars/mini_python.gram");
}
