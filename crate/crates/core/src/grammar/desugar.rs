//! EBNF to plain productions.
//!
//! Each operator becomes a fresh non-terminal named after the rule it
//! appears in, numbered per rule and per kind in pre-order:
//!
//! | construct      | helper        | productions                            |
//! |----------------|---------------|----------------------------------------|
//! | `( a \| b )`   | `lhs__grpN`   | `H: a`, `H: b`                         |
//! | `[ a ]`        | `lhs__optN`   | `H: a`, `H: ε`                         |
//! | `x*`           | `lhs__repN`   | `H: x H`, `H: ε`                       |
//! | `x+`           | `lhs__repN`   | `H: x T` with `T = lhs__rep(N+1)` a `x*` |
//!
//! A rule's own productions come first, followed by its helpers in the order
//! they were created, so the output is stable across runs.

use std::collections::{BTreeMap, BTreeSet};

use super::parse::{EbnfGrammar, Expr, Pos};
use super::{Grammar, GrammarError, Production, Symbol, DEFAULT_END_MARKER};

pub fn desugar(ebnf: &EbnfGrammar) -> Result<Grammar, GrammarError> {
    let mut first_line: BTreeMap<&str, usize> = BTreeMap::new();
    for rule in &ebnf.rules {
        if let Some(&line) = first_line.get(rule.name.as_str()) {
            return Err(GrammarError::DuplicateRule {
                name: rule.name.clone(),
                first_line: line,
                line: rule.pos.line,
            });
        }
        first_line.insert(&rule.name, rule.pos.line);
    }
    let Some(first_rule) = ebnf.rules.first() else {
        return Err(GrammarError::Syntax { line: 1, col: 1, message: "grammar has no rules".into() });
    };

    let end_marker = ebnf.end_marker.clone().unwrap_or_else(|| DEFAULT_END_MARKER.to_string());
    let mut token_types: Vec<String> = Vec::new();
    for tt in ebnf.token_types.iter().flatten() {
        if !token_types.contains(tt) {
            token_types.push(tt.clone());
        }
    }
    if !token_types.contains(&end_marker) {
        token_types.push(end_marker.clone());
    }
    for tt in &token_types {
        if first_line.contains_key(tt.as_str()) {
            return Err(GrammarError::SymbolConflict(tt.clone()));
        }
    }

    let rule_names: BTreeSet<&str> = first_line.keys().copied().collect();
    let token_set: BTreeSet<&str> = token_types.iter().map(String::as_str).collect();
    let mut productions = Vec::new();
    for rule in &ebnf.rules {
        let mut lowering = Lowering {
            lhs: &rule.name,
            rule_names: &rule_names,
            token_types: &token_set,
            counters: [0; 3],
            helpers: Vec::new(),
        };
        let own = lowering.alternatives(&rule.body)?;
        productions.extend(own.into_iter().map(|rhs| Production::new(rule.name.clone(), rhs)));
        for (name, alts) in lowering.helpers {
            productions.extend(alts.into_iter().map(|rhs| Production::new(name.clone(), rhs)));
        }
    }

    let start = ebnf.start.clone().unwrap_or_else(|| first_rule.name.clone());
    Grammar::new(productions, start, token_types, end_marker)
}

#[derive(Clone, Copy)]
enum HelperKind {
    Opt = 0,
    Rep = 1,
    Grp = 2,
}

struct Lowering<'a> {
    lhs: &'a str,
    rule_names: &'a BTreeSet<&'a str>,
    token_types: &'a BTreeSet<&'a str>,
    counters: [usize; 3],
    helpers: Vec<(String, Vec<Vec<Symbol>>)>,
}

impl Lowering<'_> {
    fn fresh(&mut self, kind: HelperKind) -> Result<usize, GrammarError> {
        let n = self.counters[kind as usize];
        self.counters[kind as usize] += 1;
        let tag = match kind {
            HelperKind::Opt => "opt",
            HelperKind::Rep => "rep",
            HelperKind::Grp => "grp",
        };
        let name = format!("{}__{}{}", self.lhs, tag, n);
        if self.rule_names.contains(name.as_str()) {
            return Err(GrammarError::HelperCollision(name));
        }
        self.helpers.push((name, Vec::new()));
        Ok(self.helpers.len() - 1)
    }

    fn alternatives(&mut self, body: &Expr) -> Result<Vec<Vec<Symbol>>, GrammarError> {
        match body {
            Expr::Alt(alts) => alts.iter().map(|a| self.sequence(a)).collect(),
            other => Ok(vec![self.sequence(other)?]),
        }
    }

    fn sequence(&mut self, expr: &Expr) -> Result<Vec<Symbol>, GrammarError> {
        match expr {
            Expr::Seq(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    if let Some(sym) = self.item(item)? {
                        out.push(sym);
                    }
                }
                Ok(out)
            }
            other => Ok(self.item(other)?.into_iter().collect()),
        }
    }

    /// Lowers one sequence element to a single symbol (`None` for `%empty`).
    fn item(&mut self, expr: &Expr) -> Result<Option<Symbol>, GrammarError> {
        let sym = match expr {
            Expr::Empty => return Ok(None),
            Expr::Name(name, pos) => self.resolve(name, *pos)?,
            Expr::Literal(text, _) => Symbol::literal(text.clone()),
            Expr::Seq(_) | Expr::Alt(_) => self.helper(HelperKind::Grp, expr, false)?,
            Expr::Group(inner) => self.helper(HelperKind::Grp, inner, false)?,
            Expr::Optional(inner) => self.helper(HelperKind::Opt, inner, true)?,
            Expr::Star(inner) => {
                let slot = self.fresh(HelperKind::Rep)?;
                let name = self.helpers[slot].0.clone();
                let operand = self.item(inner)?;
                let head = Symbol::nonterminal(name);
                self.helpers[slot].1 = vec![operand.into_iter().chain([head.clone()]).collect(), vec![]];
                head
            }
            Expr::Plus(inner) => {
                let slot = self.fresh(HelperKind::Rep)?;
                let tail_slot = self.fresh(HelperKind::Rep)?;
                let operand = self.item(inner)?;
                let head = Symbol::nonterminal(self.helpers[slot].0.clone());
                let tail = Symbol::nonterminal(self.helpers[tail_slot].0.clone());
                self.helpers[slot].1 = vec![operand.iter().cloned().chain([tail.clone()]).collect()];
                self.helpers[tail_slot].1 = vec![operand.into_iter().chain([tail]).collect(), vec![]];
                head
            }
        };
        Ok(Some(sym))
    }

    fn helper(&mut self, kind: HelperKind, body: &Expr, nullable: bool) -> Result<Symbol, GrammarError> {
        let slot = self.fresh(kind)?;
        let mut alts = self.alternatives(body)?;
        if nullable {
            alts.push(Vec::new());
        }
        self.helpers[slot].1 = alts;
        Ok(Symbol::nonterminal(self.helpers[slot].0.clone()))
    }

    fn resolve(&self, name: &str, pos: Pos) -> Result<Symbol, GrammarError> {
        if self.rule_names.contains(name) {
            Ok(Symbol::nonterminal(name))
        } else if self.token_types.contains(name) {
            Ok(Symbol::token(name))
        } else {
            Err(GrammarError::UndefinedSymbol { name: name.to_string(), line: pos.line, col: pos.col })
        }
    }
}
