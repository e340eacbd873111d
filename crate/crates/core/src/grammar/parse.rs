//! Reader for the grammar-file format.
//!
//! ```text
//! # comment
//! %start file_input
//! %endmarker ENDMARKER
//! %tokentypes NAME NUMBER NEWLINE ENDMARKER
//! file_input: stmt* ENDMARKER
//! stmt: NAME ['=' NAME] NEWLINE | %empty
//! ```
//!
//! Rules may continue over several lines; a new rule begins wherever a name
//! is followed by `:`.

use super::{desugar, Grammar, GrammarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Right-hand side of a rule before desugaring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// `%empty`
    Empty,
    /// A bare name: rule or token-type, resolved during desugaring.
    Name(String, Pos),
    /// A quoted syntax-string.
    Literal(String, Pos),
    Seq(Vec<Expr>),
    Alt(Vec<Expr>),
    /// `( ... )`
    Group(Box<Expr>),
    /// `[ ... ]`
    Optional(Box<Expr>),
    /// postfix `*`
    Star(Box<Expr>),
    /// postfix `+`
    Plus(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDef {
    pub name: String,
    pub body: Expr,
    pub pos: Pos,
}

/// A parsed grammar file, EBNF operators intact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EbnfGrammar {
    pub rules: Vec<RuleDef>,
    pub start: Option<String>,
    pub end_marker: Option<String>,
    pub token_types: Option<Vec<String>>,
}

impl From<&Grammar> for EbnfGrammar {
    fn from(g: &Grammar) -> Self {
        let rules = g
            .nonterminals()
            .into_iter()
            .map(|nt| {
                let alts: Vec<Expr> = g
                    .productions_of(nt)
                    .map(|p| {
                        if p.rhs.is_empty() {
                            return Expr::Empty;
                        }
                        Expr::Seq(
                            p.rhs
                                .iter()
                                .map(|s| match s.kind {
                                    super::SymbolKind::SyntaxString => {
                                        Expr::Literal(s.name.clone(), Pos::default())
                                    }
                                    _ => Expr::Name(s.name.clone(), Pos::default()),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                RuleDef { name: nt.to_string(), body: Expr::Alt(alts), pos: Pos::default() }
            })
            .collect();
        EbnfGrammar {
            rules,
            start: Some(g.start().to_string()),
            end_marker: Some(g.end_marker().to_string()),
            token_types: Some(g.token_types().to_vec()),
        }
    }
}

/// Parses and desugars grammar-file text.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    desugar(&parse_ebnf(text)?)
}

/// Parses grammar-file text without desugaring.
pub fn parse_ebnf(text: &str) -> Result<EbnfGrammar, GrammarError> {
    let tokens = tokenize(text)?;
    Parser { tokens, pos: 0 }.grammar()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Literal(String),
    Directive(String),
    Colon,
    Bar,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Star,
    Plus,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: Pos,
}

fn syntax(pos: Pos, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line: pos.line, col: pos.col, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, GrammarError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: lineno + 1, col: i + 1 };
            let single = match c {
                ':' => Some(Tok::Colon),
                '|' => Some(Tok::Bar),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                '*' => Some(Tok::Star),
                '+' => Some(Tok::Plus),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Spanned { tok, pos });
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '\'' || c == '"' {
                let mut lit = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return Err(syntax(pos, "unterminated syntax-string")),
                        Some('\\') => match chars.get(j + 1) {
                            Some(&e) => {
                                lit.push(e);
                                j += 2;
                            }
                            None => return Err(syntax(pos, "unterminated syntax-string")),
                        },
                        Some(&q) if q == c => break,
                        Some(&other) => {
                            lit.push(other);
                            j += 1;
                        }
                    }
                }
                if lit.is_empty() {
                    return Err(syntax(pos, "empty syntax-string"));
                }
                out.push(Spanned { tok: Tok::Literal(lit), pos });
                i = j + 1;
                continue;
            }
            if c == '%' || c.is_ascii_alphabetic() || c == '_' {
                let start = if c == '%' { i + 1 } else { i };
                let mut j = start;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                if c == '%' {
                    if word.is_empty() {
                        return Err(syntax(pos, "expected directive name after `%`"));
                    }
                    out.push(Spanned { tok: Tok::Directive(word), pos });
                } else {
                    out.push(Spanned { tok: Tok::Ident(word), pos });
                }
                i = j;
                continue;
            }
            return Err(syntax(pos, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|s| &s.tok)
    }

    fn end_pos(&self) -> Pos {
        self.tokens.last().map(|s| Pos { line: s.pos.line, col: s.pos.col + 1 }).unwrap_or(Pos {
            line: 1,
            col: 1,
        })
    }

    fn here(&self) -> Pos {
        self.peek().map(|s| s.pos).unwrap_or_else(|| self.end_pos())
    }

    fn at_rule_start(&self) -> bool {
        matches!(
            (self.tokens.get(self.pos).map(|s| &s.tok), self.tokens.get(self.pos + 1).map(|s| &s.tok)),
            (Some(Tok::Ident(_)), Some(Tok::Colon))
        )
    }

    fn grammar(mut self) -> Result<EbnfGrammar, GrammarError> {
        let mut g = EbnfGrammar::default();
        while let Some(next) = self.peek().cloned() {
            match next.tok {
                Tok::Directive(ref d) => {
                    self.pos += 1;
                    self.directive(d, next.pos, &mut g)?;
                }
                Tok::Ident(ref name) if self.at_rule_start() => {
                    self.pos += 2;
                    let body = self.alternation()?;
                    g.rules.push(RuleDef { name: name.clone(), body, pos: next.pos });
                }
                _ => return Err(syntax(next.pos, "expected a rule definition `name: ...`")),
            }
        }
        Ok(g)
    }

    /// Names following a directive on the same line.
    fn line_args(&mut self, line: usize) -> Vec<String> {
        let mut args = Vec::new();
        while let Some(Spanned { tok: Tok::Ident(name), pos }) = self.peek() {
            if pos.line != line {
                break;
            }
            args.push(name.clone());
            self.pos += 1;
        }
        args
    }

    fn directive(&mut self, name: &str, pos: Pos, g: &mut EbnfGrammar) -> Result<(), GrammarError> {
        let args = self.line_args(pos.line);
        match name {
            "start" | "endmarker" => {
                let [arg] = args.as_slice() else {
                    return Err(syntax(pos, format!("%{name} takes exactly one name")));
                };
                if name == "start" {
                    g.start = Some(arg.clone());
                } else {
                    g.end_marker = Some(arg.clone());
                }
            }
            "tokentypes" => g.token_types.get_or_insert_with(Vec::new).extend(args),
            "empty" => return Err(syntax(pos, "%empty outside a rule body")),
            other => return Err(syntax(pos, format!("unknown directive %{other}"))),
        }
        Ok(())
    }

    fn alternation(&mut self) -> Result<Expr, GrammarError> {
        let mut alts = vec![self.sequence()?];
        while self.peek_tok() == Some(&Tok::Bar) {
            self.pos += 1;
            alts.push(self.sequence()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Expr::Alt(alts) })
    }

    fn starts_item(&self) -> bool {
        match self.peek_tok() {
            Some(Tok::Ident(_)) => !self.at_rule_start(),
            Some(Tok::Literal(_) | Tok::LParen | Tok::LBracket) => true,
            Some(Tok::Directive(d)) => d == "empty",
            _ => false,
        }
    }

    fn sequence(&mut self) -> Result<Expr, GrammarError> {
        let mut items = Vec::new();
        while self.starts_item() {
            items.push(self.item()?);
        }
        match items.len() {
            0 => Err(syntax(self.here(), "empty alternative (write %empty for ε)")),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Expr::Seq(items)),
        }
    }

    fn item(&mut self) -> Result<Expr, GrammarError> {
        let mut expr = self.atom()?;
        match self.peek_tok() {
            Some(Tok::Star) => {
                self.pos += 1;
                expr = Expr::Star(Box::new(expr));
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                expr = Expr::Plus(Box::new(expr));
            }
            _ => {}
        }
        if matches!(self.peek_tok(), Some(Tok::Star | Tok::Plus)) {
            return Err(syntax(self.here(), "repeated postfix operator"));
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<Expr, GrammarError> {
        let Some(Spanned { tok, pos }) = self.peek().cloned() else {
            return Err(syntax(self.end_pos(), "unexpected end of grammar"));
        };
        self.pos += 1;
        match tok {
            Tok::Ident(name) => Ok(Expr::Name(name, pos)),
            Tok::Literal(text) => Ok(Expr::Literal(text, pos)),
            Tok::Directive(d) if d == "empty" => Ok(Expr::Empty),
            Tok::LParen => {
                let inner = self.alternation()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Group(Box::new(inner)))
            }
            Tok::LBracket => {
                let inner = self.alternation()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::Optional(Box::new(inner)))
            }
            other => Err(syntax(pos, format!("unexpected {other:?}"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GrammarError> {
        if self.peek_tok() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.here(), format!("expected {what}")))
        }
    }
}
