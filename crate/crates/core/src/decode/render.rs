//! Token streams back to source text.
//!
//! Surfaces are joined with single spaces, `NEWLINE` ends a line, and each
//! open `INDENT` adds four spaces to the lines that follow. Tokens with an
//! empty surface (the end marker among them) contribute nothing, and the
//! pieces of an f-string are joined without spaces.
//!
//! A `NEWLINE` with nothing before it on its line renders as an empty line,
//! which does not survive re-lexing.

use thiserror::Error;

use crate::grammar::{Symbol, SymbolKind};
use crate::lexer::{DEDENT, FSTRING_END, FSTRING_START, FSTRING_STRING, INDENT, NAME, NEWLINE, NUMBER, STRING};
use crate::pda::Token;

pub const INDENT_WIDTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("DEDENT at position {0} has no matching INDENT")]
    UnbalancedDedent(usize),
}

pub fn render(tokens: &[Token]) -> Result<String, RenderError> {
    let mut out = String::new();
    let mut line = String::new();
    let mut level = 0usize;
    let mut line_level = 0usize;
    let mut prev: Option<&Symbol> = None;

    for (i, t) in tokens.iter().enumerate() {
        let sym = &t.terminal;
        if sym.kind == SymbolKind::TokenType {
            match sym.name.as_str() {
                NEWLINE => {
                    flush(&mut out, &line, line_level);
                    out.push('\n');
                    line.clear();
                    prev = None;
                    continue;
                }
                INDENT => {
                    level += 1;
                    continue;
                }
                DEDENT => {
                    level = level.checked_sub(1).ok_or(RenderError::UnbalancedDedent(i))?;
                    continue;
                }
                _ => {}
            }
        }
        if t.surface.is_empty() {
            continue;
        }
        if line.is_empty() {
            line_level = level;
        } else if !glued(prev, sym) {
            line.push(' ');
        }
        line.push_str(&t.surface);
        prev = Some(sym);
    }
    flush(&mut out, &line, line_level);
    Ok(out)
}

fn flush(out: &mut String, line: &str, level: usize) {
    if !line.is_empty() {
        out.extend(std::iter::repeat(' ').take(level * INDENT_WIDTH));
        out.push_str(line);
    }
}

fn glued(prev: Option<&Symbol>, next: &Symbol) -> bool {
    let is = |s: &Symbol, names: &[&str]| s.kind == SymbolKind::TokenType && names.contains(&s.name.as_str());
    prev.is_some_and(|p| is(p, &[FSTRING_START, FSTRING_STRING])) && is(next, &[FSTRING_STRING, FSTRING_END])
}

/// Surface used when a scorer supplies none for `terminal`.
pub fn placeholder(terminal: &Symbol) -> String {
    match terminal.kind {
        SymbolKind::TokenType => match terminal.name.as_str() {
            NAME => "x",
            NUMBER => "0",
            STRING => "''",
            FSTRING_START => "f'",
            FSTRING_STRING => "s",
            FSTRING_END => "'",
            _ => "",
        }
        .to_string(),
        _ => terminal.name.clone(),
    }
}
