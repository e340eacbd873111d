#![allow(dead_code)]

use std::path::PathBuf;

use pdadecode::{compile, grammars, parse_grammar, Grammar, Pda, Symbol, Token};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_grammar(name: &str) -> Grammar {
    let text = std::fs::read_to_string(fixtures().join("grammars").join(format!("{name}.gram"))).unwrap();
    parse_grammar(&text).unwrap()
}

/// Fixture grammars the automaton must agree with the enumerator on.
pub const ORACLE_GRAMMARS: &[&str] = &[
    "single",
    "rightrec",
    "parens",
    "optional",
    "star",
    "group",
    "plus",
    "nullable_chain",
    "ambiguous",
    "expr",
    "dangling_else",
    "import",
    "palindrome",
    "list",
];

pub fn mini() -> Grammar {
    parse_grammar(grammars::MINI_PYTHON).unwrap()
}

pub fn mini_pda() -> Pda {
    compile(&mini()).unwrap()
}

pub fn python3_pda() -> Pda {
    compile(&parse_grammar(grammars::PYTHON3).unwrap()).unwrap()
}

pub fn lit(s: &str) -> Token {
    Token::new(Symbol::literal(s), s)
}

pub fn tt(name: &str, surface: &str) -> Token {
    Token::new(Symbol::token(name), surface)
}

/// `import numpy as np` followed by the line and stream ends.
pub fn import_stream() -> Vec<Token> {
    vec![lit("import"), tt("NAME", "numpy"), lit("as"), tt("NAME", "np"), tt("NEWLINE", ""), tt("ENDMARKER", "")]
}

pub fn terminals(tokens: &[Token]) -> Vec<Symbol> {
    tokens.iter().map(|t| t.terminal.clone()).collect()
}
