//! Inputs shared by the benchmarks in `benches/`.

use std::path::PathBuf;

use pdadecode::lexer::{lex, LexToken};
use pdadecode::{compile, grammars, parse_grammar, Pda, Token};

pub fn python3() -> Pda {
    compile(&parse_grammar(grammars::PYTHON3).expect("bundled grammar parses")).expect("bundled grammar compiles")
}

pub fn mini() -> Pda {
    compile(&parse_grammar(grammars::MINI_PYTHON).expect("bundled grammar parses")).expect("bundled grammar compiles")
}

/// Reads a file under the repository's `fixtures/` directory.
pub fn fixture(rel: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The Python 3 fixture programs, lexed and concatenated per file.
pub fn python3_streams(pda: &Pda) -> Vec<Vec<Token>> {
    ["classes.py", "comprehensions.py", "control.py"]
        .iter()
        .map(|f| lex(pda, &fixture(&format!("python3/{f}"))).expect("fixture lexes").iter().map(LexToken::to_token).collect())
        .collect()
}
