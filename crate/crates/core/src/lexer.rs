//! Source text to terminal stream, with Python-style indentation.
//!
//! Physical lines are grouped into logical lines; open brackets and a
//! trailing backslash join lines. At the start of each logical line the
//! indentation width is compared with a stack of open levels to emit
//! `INDENT`/`DEDENT`. Blank and comment-only lines produce nothing. The
//! stream ends with `NEWLINE` (if the last line lacked one), the pending
//! `DEDENT`s and the end marker, unless the source stops in the middle of a
//! logical line (inside brackets or after a line continuation). Such a
//! source is incomplete and its stream is left open.
//!
//! F-strings are opaque: `FSTRING_START` (prefix and quote), one
//! `FSTRING_STRING` holding the raw interior when it is non-empty, and
//! `FSTRING_END` (the quote).

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{Grammar, Symbol, DEFAULT_END_MARKER};
use crate::pda::{Pda, Token};

/// Columns per tab stop.
pub const TAB_SIZE: usize = 8;

pub const NAME: &str = "NAME";
pub const NUMBER: &str = "NUMBER";
pub const STRING: &str = "STRING";
pub const NEWLINE: &str = "NEWLINE";
pub const INDENT: &str = "INDENT";
pub const DEDENT: &str = "DEDENT";
pub const FSTRING_START: &str = "FSTRING_START";
pub const FSTRING_STRING: &str = "FSTRING_STRING";
pub const FSTRING_END: &str = "FSTRING_END";

/// Operators recognised regardless of the grammar, so that a stray
/// operator shows up as a terminal mismatch instead of a lexing error.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "<>", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "&", "|", "^", "~", "<", ">", "(",
    ")", "[", "]", "{", "}", ",", ":", ";", ".", "=", "@", "!",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexToken {
    pub terminal: Symbol,
    pub surface: String,
    pub line: usize,
    pub col: usize,
}

impl LexToken {
    pub fn to_token(&self) -> Token {
        Token::new(self.terminal.clone(), self.surface.clone())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexError {
    #[error("unindent does not match any outer indentation level at {line}:{col}")]
    InconsistentDedent { line: usize, col: usize },
    #[error("unterminated string starting at {line}:{col}")]
    UnterminatedString { line: usize, col: usize },
    #[error("inconsistent use of tabs and spaces in indentation on line {line}")]
    TabError { line: usize },
    #[error("unexpected character {ch:?} at {line}:{col}")]
    UnexpectedChar { ch: char, line: usize, col: usize },
}

/// Lexer configured with a grammar's keywords and operators.
#[derive(Debug, Clone)]
pub struct Lexer {
    literals: BTreeSet<String>,
    /// Longest first.
    operators: Vec<String>,
    end_marker: String,
    fstrings: bool,
}

impl Lexer {
    pub fn new(literals: impl IntoIterator<Item = String>, end_marker: &str, fstrings: bool) -> Self {
        let literals: BTreeSet<String> = literals.into_iter().collect();
        let mut operators: BTreeSet<String> = OPERATORS.iter().map(|s| s.to_string()).collect();
        operators.extend(literals.iter().filter(|l| !l.starts_with(is_name_start)).cloned());
        let mut operators: Vec<String> = operators.into_iter().collect();
        operators.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Lexer { literals, operators, end_marker: end_marker.to_string(), fstrings }
    }

    pub fn for_pda(pda: &Pda) -> Self {
        let fstrings = pda.token_types().any(|t| t == FSTRING_START);
        let end = pda.symbol(pda.end_marker()).name.clone();
        Lexer::new(pda.literals().map(str::to_string), &end, fstrings)
    }

    pub fn for_grammar(g: &Grammar) -> Self {
        let fstrings = g.token_types().iter().any(|t| t == FSTRING_START);
        Lexer::new(g.literals(), g.end_marker(), fstrings)
    }

    pub fn lex(&self, source: &str) -> Result<Vec<LexToken>, LexError> {
        let text: Vec<char> = source.replace("\r\n", "\n").replace('\r', "\n").chars().collect();
        let mut st = State { lexer: self, text: &text, pos: 0, line: 1, col: 1, out: Vec::new() };
        st.run()?;
        Ok(st.out)
    }
}

impl Default for Lexer {
    /// A lexer with no keywords.
    fn default() -> Self {
        Lexer::new(std::iter::empty(), DEFAULT_END_MARKER, true)
    }
}

/// Lexes with the keywords and operators of `pda`'s grammar.
pub fn lex(pda: &Pda, source: &str) -> Result<Vec<LexToken>, LexError> {
    Lexer::for_pda(pda).lex(source)
}

struct State<'a> {
    lexer: &'a Lexer,
    text: &'a [char],
    pos: usize,
    line: usize,
    col: usize,
    out: Vec<LexToken>,
}

impl State<'_> {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.text.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn emit(&mut self, terminal: Symbol, surface: String, line: usize, col: usize) {
        self.out.push(LexToken { terminal, surface, line, col });
    }

    fn emit_token_type(&mut self, name: &str, surface: String, line: usize, col: usize) {
        self.emit(Symbol::token(name), surface, line, col);
    }

    fn run(&mut self) -> Result<(), LexError> {
        // Indentation levels as (tab stop 8 width, tab stop 1 width).
        let mut indents: Vec<(usize, usize)> = vec![(0, 0)];
        let mut depth = 0usize;
        let mut line_has_tokens = false;
        let mut at_line_start = true;
        let mut continued = false;

        loop {
            if at_line_start && depth == 0 {
                let (width, alt) = self.measure_indent();
                match self.peek(0) {
                    None => break,
                    Some('#') | Some('\n') => {
                        self.skip_to_line_end();
                        if self.bump().is_none() {
                            break;
                        }
                        at_line_start = true;
                        continue;
                    }
                    _ => {}
                }
                let (line, col) = (self.line, self.col);
                let &(top, top_alt) = indents.last().expect("base level");
                if width > top {
                    if alt <= top_alt {
                        return Err(LexError::TabError { line });
                    }
                    indents.push((width, alt));
                    self.emit_token_type(INDENT, String::new(), line, col);
                } else {
                    while width < indents.last().expect("base level").0 {
                        indents.pop();
                        self.emit_token_type(DEDENT, String::new(), line, col);
                    }
                    let &(top, top_alt) = indents.last().expect("base level");
                    if width != top {
                        return Err(LexError::InconsistentDedent { line, col });
                    }
                    if alt != top_alt {
                        return Err(LexError::TabError { line });
                    }
                }
            }
            at_line_start = false;

            let Some(c) = self.peek(0) else { break };
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\x0c' => {
                    self.bump();
                }
                '#' => self.skip_to_line_end(),
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                    continued = true;
                }
                '\n' => {
                    if depth == 0 && line_has_tokens {
                        self.emit_token_type(NEWLINE, String::new(), line, col);
                        line_has_tokens = false;
                    }
                    self.bump();
                    at_line_start = depth == 0;
                }
                _ => {
                    self.token(&mut depth)?;
                    line_has_tokens = true;
                    continued = false;
                }
            }
        }

        if depth > 0 || continued {
            return Ok(());
        }

        let (line, col) = (self.line, self.col);
        if line_has_tokens {
            self.emit_token_type(NEWLINE, String::new(), line, col);
        }
        for _ in 1..indents.len() {
            self.emit_token_type(DEDENT, String::new(), line, col);
        }
        let end = self.lexer.end_marker.clone();
        self.emit_token_type(&end, String::new(), line, col);
        Ok(())
    }

    /// Consumes leading whitespace, returning its width with tab stops of
    /// `TAB_SIZE` and of 1.
    fn measure_indent(&mut self) -> (usize, usize) {
        let (mut width, mut alt) = (0, 0);
        loop {
            match self.peek(0) {
                Some(' ') => {
                    width += 1;
                    alt += 1;
                }
                Some('\t') => {
                    width = (width / TAB_SIZE + 1) * TAB_SIZE;
                    alt += 1;
                }
                Some('\x0c') => {
                    width = 0;
                    alt = 0;
                }
                _ => return (width, alt),
            }
            self.bump();
        }
    }

    fn skip_to_line_end(&mut self) {
        while !matches!(self.peek(0), None | Some('\n')) {
            self.bump();
        }
    }

    fn token(&mut self, depth: &mut usize) -> Result<(), LexError> {
        let (line, col) = (self.line, self.col);
        let c = self.peek(0).expect("caller checked");
        let rest = &self.text[self.pos..];

        if is_name_start(c) {
            let n = rest.iter().take_while(|&&c| is_name_char(c)).count();
            if matches!(rest.get(n), Some('\'' | '"')) && n <= 2 {
                let prefix: String = rest[..n].iter().collect::<String>().to_ascii_lowercase();
                if is_string_prefix(&prefix) {
                    return self.string(n, prefix.contains('f'));
                }
            }
            let word: String = rest[..n].iter().collect();
            self.advance(n);
            let terminal =
                if self.lexer.literals.contains(&word) { Symbol::literal(word.clone()) } else { Symbol::token(NAME) };
            self.emit(terminal, word, line, col);
            return Ok(());
        }
        if c == '\'' || c == '"' {
            return self.string(0, false);
        }
        if let Some(n) = scan_number(rest) {
            let text: String = rest[..n].iter().collect();
            self.advance(n);
            self.emit_token_type(NUMBER, text, line, col);
            return Ok(());
        }
        let matched = self.lexer.operators.iter().find(|op| {
            let mut chars = op.chars();
            rest.len() >= op.chars().count() && rest.iter().all(|&r| chars.next().map_or(true, |o| o == r))
        });
        if let Some(op) = matched {
            let op = op.clone();
            match op.as_str() {
                "(" | "[" | "{" => *depth += 1,
                ")" | "]" | "}" => *depth = depth.saturating_sub(1),
                _ => {}
            }
            self.advance(op.chars().count());
            self.emit(Symbol::literal(op.clone()), op, line, col);
            return Ok(());
        }
        Err(LexError::UnexpectedChar { ch: c, line, col })
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    /// Lexes a string whose prefix is `prefix_len` characters long.
    fn string(&mut self, prefix_len: usize, is_fstring: bool) -> Result<(), LexError> {
        let (line, col) = (self.line, self.col);
        let rest = &self.text[self.pos..];
        let quote = rest[prefix_len];
        let triple = rest.get(prefix_len + 1) == Some(&quote) && rest.get(prefix_len + 2) == Some(&quote);
        let qlen = if triple { 3 } else { 1 };
        let body_start = prefix_len + qlen;
        let body_len = scan_string_body(&rest[body_start..], quote, triple)
            .ok_or(LexError::UnterminatedString { line, col })?;
        let total = body_start + body_len + qlen;
        let text: String = rest[..total].iter().collect();

        if !(is_fstring && self.lexer.fstrings) {
            self.advance(total);
            self.emit_token_type(STRING, text, line, col);
            return Ok(());
        }
        let chars: Vec<char> = text.chars().collect();
        let start: String = chars[..body_start].iter().collect();
        let body: String = chars[body_start..body_start + body_len].iter().collect();
        let end: String = chars[body_start + body_len..].iter().collect();
        self.advance(body_start);
        self.emit_token_type(FSTRING_START, start, line, col);
        let (bl, bc) = (self.line, self.col);
        self.advance(body_len);
        if !body.is_empty() {
            self.emit_token_type(FSTRING_STRING, body, bl, bc);
        }
        let (el, ec) = (self.line, self.col);
        self.advance(qlen);
        self.emit_token_type(FSTRING_END, end, el, ec);
        Ok(())
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_string_prefix(p: &str) -> bool {
    matches!(p, "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf")
}

/// Length of the body of a string after its opening quote, up to (not
/// including) the closing quote. `None` if the string never closes.
fn scan_string_body(s: &[char], quote: char, triple: bool) -> Option<usize> {
    let mut i = 0;
    while i < s.len() {
        match s[i] {
            '\\' => i += 2,
            '\n' if !triple => return None,
            c if c == quote => {
                if !triple {
                    return Some(i);
                }
                if s.get(i + 1) == Some(&quote) && s.get(i + 2) == Some(&quote) {
                    return Some(i);
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    None
}

/// Length of the numeric literal at the start of `s`, if any: decimal,
/// hex, octal and binary integers, floats with exponent, imaginary suffix.
pub(crate) fn scan_number(s: &[char]) -> Option<usize> {
    let digits = |from: usize, ok: fn(char) -> bool| -> usize {
        let mut i = from;
        while i < s.len() && (ok(s[i]) || (s[i] == '_' && i > from && s.get(i + 1).is_some_and(|&c| ok(c)))) {
            i += 1;
        }
        i - from
    };
    let dec = |c: char| c.is_ascii_digit();
    let first = *s.first()?;
    if first == '0' && matches!(s.get(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
        let ok: fn(char) -> bool = match s[1] {
            'x' | 'X' => |c| c.is_ascii_hexdigit(),
            'o' | 'O' => |c| ('0'..='7').contains(&c),
            _ => |c| c == '0' || c == '1',
        };
        let n = digits(2, ok);
        return (n > 0).then_some(2 + n);
    }
    let mut i = digits(0, dec);
    if s.get(i) == Some(&'.') {
        let frac = digits(i + 1, dec);
        if i == 0 && frac == 0 {
            return None;
        }
        i += 1 + frac;
    } else if i == 0 {
        return None;
    }
    if matches!(s.get(i), Some('e' | 'E')) {
        let sign = usize::from(matches!(s.get(i + 1), Some('+' | '-')));
        let exp = digits(i + 1 + sign, dec);
        if exp > 0 {
            i += 1 + sign + exp;
        }
    }
    if matches!(s.get(i), Some('j' | 'J')) {
        i += 1;
    }
    Some(i)
}

/// Length of a complete string literal (with optional non-f prefix) at the
/// start of `s`.
pub(crate) fn scan_string(s: &[char]) -> Option<usize> {
    let n = s.iter().take_while(|&&c| is_name_char(c)).count();
    let prefix: String = s[..n].iter().collect::<String>().to_ascii_lowercase();
    if n > 0 && (!is_string_prefix(&prefix) || prefix.contains('f')) {
        return None;
    }
    let quote = *s.get(n).filter(|&&c| c == '\'' || c == '"')?;
    let triple = s.get(n + 1) == Some(&quote) && s.get(n + 2) == Some(&quote);
    let qlen = if triple { 3 } else { 1 };
    let body = scan_string_body(&s[n + qlen..], quote, triple)?;
    Some(n + qlen + body + qlen)
}

pub(crate) fn is_name(s: &[char]) -> bool {
    s.first().is_some_and(|&c| is_name_start(c)) && s.iter().all(|&c| is_name_char(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexer() -> Lexer {
        Lexer::new(["import", "as", "if", ":", "="].map(String::from), "ENDMARKER", true)
    }

    fn names(src: &str) -> Vec<String> {
        lexer().lex(src).unwrap().iter().map(|t| t.terminal.name.clone()).collect()
    }

    #[test]
    fn import_line() {
        let toks = lexer().lex("import numpy as np\n").unwrap();
        let got: Vec<(&str, &str)> = toks.iter().map(|t| (t.terminal.name.as_str(), t.surface.as_str())).collect();
        assert_eq!(
            got,
            [("import", "import"), ("NAME", "numpy"), ("as", "as"), ("NAME", "np"), ("NEWLINE", ""), ("ENDMARKER", "")]
        );
        assert_eq!((toks[3].line, toks[3].col), (1, 17));
    }

    #[test]
    fn empty_source() {
        assert_eq!(names(""), ["ENDMARKER"]);
        assert_eq!(names("\n\n# only a comment\n"), ["ENDMARKER"]);
    }

    #[test]
    fn indentation_block() {
        assert_eq!(
            names("if x:\n  y\n"),
            ["if", "NAME", ":", "NEWLINE", "INDENT", "NAME", "NEWLINE", "DEDENT", "ENDMARKER"]
        );
    }

    #[test]
    fn missing_final_newline_and_open_blocks() {
        assert_eq!(
            names("if x:\n  if y:\n    z"),
            ["if", "NAME", ":", "NEWLINE", "INDENT", "if", "NAME", ":", "NEWLINE", "INDENT", "NAME", "NEWLINE", "DEDENT", "DEDENT", "ENDMARKER"]
        );
    }

    #[test]
    fn brackets_and_backslash_join_lines() {
        assert_eq!(names("x = (1,\n   2)\n"), ["NAME", "=", "(", "NUMBER", ",", "NUMBER", ")", "NEWLINE", "ENDMARKER"]);
        assert_eq!(names("x = \\\n  1\n"), ["NAME", "=", "NUMBER", "NEWLINE", "ENDMARKER"]);
    }

    #[test]
    fn unfinished_logical_line_leaves_stream_open() {
        assert_eq!(names("x = (1 +\n"), ["NAME", "=", "(", "NUMBER", "+"]);
        assert_eq!(names("x = 1 + \\\n"), ["NAME", "=", "NUMBER", "+"]);
    }

    #[test]
    fn blank_and_comment_lines_inside_blocks() {
        assert_eq!(
            names("if x:\n\n    # c\n    y  # tail\n"),
            ["if", "NAME", ":", "NEWLINE", "INDENT", "NAME", "NEWLINE", "DEDENT", "ENDMARKER"]
        );
    }

    #[test]
    fn inconsistent_dedent() {
        let err = lexer().lex("if x:\n    y\n  z\n").unwrap_err();
        assert_eq!(err, LexError::InconsistentDedent { line: 3, col: 3 });
    }

    #[test]
    fn tabs_must_be_consistent() {
        assert_eq!(names("if x:\n\ty\n"), names("if x:\n        y\n"));
        let err = lexer().lex("if x:\n\ty\n        z\n").unwrap_err();
        assert_eq!(err, LexError::TabError { line: 3 });
    }

    #[test]
    fn strings() {
        let toks = lexer().lex("x = 'a\\'b' + r\"c\" + '''d\ne'''\n").unwrap();
        let strings: Vec<&str> =
            toks.iter().filter(|t| t.terminal.name == STRING).map(|t| t.surface.as_str()).collect();
        assert_eq!(strings, ["'a\\'b'", "r\"c\"", "'''d\ne'''"]);
        assert_eq!(lexer().lex("x = 'abc\n").unwrap_err(), LexError::UnterminatedString { line: 1, col: 5 });
    }

    #[test]
    fn fstrings_are_opaque() {
        let toks = lexer().lex("f'a{b}' f\"\"\n").unwrap();
        let got: Vec<(&str, &str)> = toks.iter().map(|t| (t.terminal.name.as_str(), t.surface.as_str())).collect();
        assert_eq!(
            got,
            [
                ("FSTRING_START", "f'"),
                ("FSTRING_STRING", "a{b}"),
                ("FSTRING_END", "'"),
                ("FSTRING_START", "f\""),
                ("FSTRING_END", "\""),
                ("NEWLINE", ""),
                ("ENDMARKER", "")
            ]
        );
        let plain = Lexer::new(std::iter::empty(), "ENDMARKER", false);
        assert_eq!(plain.lex("f'x'").unwrap()[0].terminal, Symbol::token(STRING));
    }

    #[test]
    fn numbers() {
        for (src, n) in [("3.14", 4), ("1_000", 5), ("0x1F", 4), ("1e-3", 4), (".5j", 3), ("7.", 2), ("1e", 1)] {
            let chars: Vec<char> = src.chars().collect();
            assert_eq!(scan_number(&chars), Some(n), "{src}");
        }
        assert_eq!(scan_number(&['.']), None);
        assert_eq!(scan_number(&['0', 'x']), None);
    }

    #[test]
    fn longest_operator_wins() {
        let toks = lexer().lex("a **= b != c\n").unwrap();
        let ops: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(ops, ["a", "**=", "b", "!=", "c", "", ""]);
    }

    #[test]
    fn unexpected_character() {
        assert_eq!(lexer().lex("a $ b").unwrap_err(), LexError::UnexpectedChar { ch: '$', line: 1, col: 3 });
    }
}
