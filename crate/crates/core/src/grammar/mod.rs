//! Grammar ingestion.
//!
//! Grammar files are line-oriented EBNF (`name: body`). [`parse_grammar`]
//! reads one, [`desugar`] rewrites every EBNF operator into fresh helper
//! non-terminals, and [`analyze`] reports the structural properties the
//! automaton relies on (nullability, left recursion, determinism).

mod analyze;
mod desugar;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analyze::{analyze, DeterminismViolation, GrammarReport};
pub use desugar::desugar;
pub use parse::{parse_ebnf, parse_grammar, EbnfGrammar, Expr, Pos, RuleDef};

/// Default name of the end-of-input token-type.
pub const DEFAULT_END_MARKER: &str = "ENDMARKER";

/// Suffix of the start rule added by [`Grammar::augmented`].
pub const EOF_SUFFIX: &str = "__eof";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymbolKind {
    NonTerminal,
    SyntaxString,
    TokenType,
}

/// A grammar symbol: a non-terminal, a quoted syntax-string, or a token-type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub name: String,
}

impl Symbol {
    pub fn nonterminal(name: impl Into<String>) -> Self {
        Symbol { kind: SymbolKind::NonTerminal, name: name.into() }
    }

    pub fn literal(text: impl Into<String>) -> Self {
        Symbol { kind: SymbolKind::SyntaxString, name: text.into() }
    }

    pub fn token(name: impl Into<String>) -> Self {
        Symbol { kind: SymbolKind::TokenType, name: name.into() }
    }

    pub fn is_terminal(&self) -> bool {
        self.kind != SymbolKind::NonTerminal
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SymbolKind::SyntaxString => {
                f.write_str("'")?;
                for c in self.name.chars() {
                    if c == '\'' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("'")
            }
            _ => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: String,
    /// Empty for an ε-production.
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Symbol>) -> Self {
        Production { lhs: lhs.into(), rhs }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undefined symbol `{name}` at {line}:{col}")]
    UndefinedSymbol { name: String, line: usize, col: usize },
    #[error("non-terminal `{name}` defined twice (lines {first_line} and {line})")]
    DuplicateRule { name: String, first_line: usize, line: usize },
    #[error("`{0}` is declared both as a rule and as a token-type")]
    SymbolConflict(String),
    #[error("helper name `{0}` collides with a user non-terminal")]
    HelperCollision(String),
    #[error("start symbol `{0}` has no productions")]
    UnknownStart(String),
    #[error("production for `{lhs}` uses undeclared symbol {symbol}")]
    Undeclared { lhs: String, symbol: String },
    #[error("empty syntax-string in production for `{0}`")]
    EmptyLiteral(String),
    #[error("grammar is left-recursive: {}", format_cycles(.0))]
    LeftRecursion(Vec<Vec<String>>),
}

fn format_cycles(cycles: &[Vec<String>]) -> String {
    cycles.iter().map(|c| format!("[{}]", c.join(", "))).collect::<Vec<_>>().join(", ")
}

/// A desugared context-free grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    productions: Vec<Production>,
    start: String,
    token_types: Vec<String>,
    end_marker: String,
}

impl Grammar {
    /// Builds and validates a plain grammar. The end marker is added to the
    /// token-type list if it is missing.
    pub fn new(
        productions: Vec<Production>,
        start: impl Into<String>,
        token_types: Vec<String>,
        end_marker: impl Into<String>,
    ) -> Result<Self, GrammarError> {
        let start = start.into();
        let end_marker = end_marker.into();
        let mut token_types = token_types;
        if !token_types.contains(&end_marker) {
            token_types.push(end_marker.clone());
        }
        let grammar = Grammar { productions, start, token_types, end_marker };
        grammar.validate()?;
        Ok(grammar)
    }

    fn validate(&self) -> Result<(), GrammarError> {
        let defined: BTreeSet<&str> = self.productions.iter().map(|p| p.lhs.as_str()).collect();
        if !defined.contains(self.start.as_str()) {
            return Err(GrammarError::UnknownStart(self.start.clone()));
        }
        for tt in &self.token_types {
            if defined.contains(tt.as_str()) {
                return Err(GrammarError::SymbolConflict(tt.clone()));
            }
        }
        for p in &self.productions {
            for s in &p.rhs {
                let ok = match s.kind {
                    SymbolKind::NonTerminal => defined.contains(s.name.as_str()),
                    SymbolKind::TokenType => self.token_types.contains(&s.name),
                    SymbolKind::SyntaxString => {
                        if s.name.is_empty() {
                            return Err(GrammarError::EmptyLiteral(p.lhs.clone()));
                        }
                        true
                    }
                };
                if !ok {
                    return Err(GrammarError::Undeclared {
                        lhs: p.lhs.clone(),
                        symbol: s.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn token_types(&self) -> &[String] {
        &self.token_types
    }

    pub fn end_marker(&self) -> &str {
        &self.end_marker
    }

    /// Non-terminals in order of first definition.
    pub fn nonterminals(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.productions
            .iter()
            .map(|p| p.lhs.as_str())
            .filter(|n| seen.insert(*n))
            .collect()
    }

    pub fn productions_of<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Production> + 'a {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }

    /// Terminals referenced by at least one production.
    pub fn terminals(&self) -> BTreeSet<Symbol> {
        self.productions
            .iter()
            .flat_map(|p| p.rhs.iter())
            .filter(|s| s.is_terminal())
            .cloned()
            .collect()
    }

    pub fn literals(&self) -> BTreeSet<String> {
        self.terminals()
            .into_iter()
            .filter(|s| s.kind == SymbolKind::SyntaxString)
            .map(|s| s.name)
            .collect()
    }

    /// Same productions, different start symbol.
    pub fn with_start(&self, start: &str) -> Result<Grammar, GrammarError> {
        let mut g = self.clone();
        g.start = start.to_string();
        g.validate()?;
        Ok(g)
    }

    /// Whether a production reachable from the start symbol mentions the
    /// end marker.
    pub fn references_end_marker(&self) -> bool {
        let end = Symbol::token(self.end_marker.clone());
        let mut reached: BTreeSet<&str> = BTreeSet::from([self.start.as_str()]);
        let mut todo = vec![self.start.as_str()];
        while let Some(nt) = todo.pop() {
            for p in self.productions_of(nt) {
                for s in &p.rhs {
                    if *s == end {
                        return true;
                    }
                    if s.kind == SymbolKind::NonTerminal && reached.insert(&s.name) {
                        todo.push(&s.name);
                    }
                }
            }
        }
        false
    }

    /// Returns the grammar unchanged when it already mentions its end
    /// marker; otherwise adds `<start>__eof: <start> ENDMARKER` and makes it
    /// the start symbol.
    pub fn augmented(&self) -> Grammar {
        if self.references_end_marker() {
            return self.clone();
        }
        let mut g = self.clone();
        let mut name = format!("{}{}", self.start, EOF_SUFFIX);
        while g.productions.iter().any(|p| p.lhs == name) {
            name.push('_');
        }
        g.productions.push(Production::new(
            name.clone(),
            vec![Symbol::nonterminal(self.start.clone()), Symbol::token(self.end_marker.clone())],
        ));
        g.start = name;
        g
    }
}

/// Prints the grammar in the grammar-file format, one alternative per line.
impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "%start {}", self.start)?;
        writeln!(f, "%endmarker {}", self.end_marker)?;
        writeln!(f, "%tokentypes {}", self.token_types.join(" "))?;
        for nt in self.nonterminals() {
            write!(f, "{nt}:")?;
            for (i, p) in self.productions_of(nt).enumerate() {
                let sep = if i == 0 { " " } else { "\n    | " };
                f.write_str(sep)?;
                if p.rhs.is_empty() {
                    f.write_str("%empty")?;
                }
                for (j, s) in p.rhs.iter().enumerate() {
                    if j > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{s}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_marker_is_always_declared() {
        let g = Grammar::new(
            vec![Production::new("S", vec![Symbol::literal("a")])],
            "S",
            vec![],
            DEFAULT_END_MARKER,
        )
        .unwrap();
        assert_eq!(g.token_types(), ["ENDMARKER"]);
    }

    #[test]
    fn augmentation_adds_eof_rule_once() {
        let g = parse_grammar("S: 'a'").unwrap();
        let aug = g.augmented();
        assert_eq!(aug.start(), "S__eof");
        assert_eq!(
            aug.productions_of("S__eof").next().unwrap().rhs,
            vec![Symbol::nonterminal("S"), Symbol::token("ENDMARKER")]
        );
        assert_eq!(aug.augmented(), aug);
    }

    #[test]
    fn display_reparses_to_same_grammar() {
        let g = parse_grammar("%tokentypes NUM\nS: 'a' ['b'] | ('c' | NUM)* S").unwrap();
        let again = parse_grammar(&g.to_string()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn literal_display_escapes_quotes() {
        assert_eq!(Symbol::literal("'").to_string(), r"'\''");
    }
}
