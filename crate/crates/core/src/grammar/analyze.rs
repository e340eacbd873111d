use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;

use super::{Grammar, Symbol, SymbolKind};

/// A stack-top non-terminal whose productions share a first terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterminismViolation {
    pub stack_top: String,
    pub shared_first: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrammarReport {
    /// Strongly connected components of the left-corner relation, each
    /// listed in definition order.
    pub left_recursive_cycles: Vec<Vec<String>>,
    pub nullable: BTreeSet<String>,
    /// Advisory only: true when no violation was found.
    pub is_deterministic_candidate: bool,
    pub determinism_violations: Vec<DeterminismViolation>,
    /// Non-terminals that derive no terminal string.
    pub unproductive: Vec<String>,
}

impl GrammarReport {
    pub fn is_left_recursive(&self) -> bool {
        !self.left_recursive_cycles.is_empty()
    }
}

pub fn analyze(g: &Grammar) -> GrammarReport {
    let order: BTreeMap<&str, usize> =
        g.nonterminals().into_iter().enumerate().map(|(i, n)| (n, i)).collect();
    let nullable = nullable_set(g);

    // N is a left corner of itself through X1..Xk when X1..X(k-1) are nullable.
    let mut corners: DiGraphMap<&str, ()> = DiGraphMap::new();
    for nt in order.keys() {
        corners.add_node(nt);
    }
    for p in g.productions() {
        for s in &p.rhs {
            match s.kind {
                SymbolKind::NonTerminal => {
                    corners.add_edge(p.lhs.as_str(), s.name.as_str(), ());
                    if !nullable.contains(s.name.as_str()) {
                        break;
                    }
                }
                _ => break,
            }
        }
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&corners)
        .into_iter()
        .filter(|scc| scc.len() > 1 || corners.contains_edge(scc[0], scc[0]))
        .map(|mut scc| {
            scc.sort_by_key(|n| order[n]);
            scc.into_iter().map(str::to_string).collect()
        })
        .collect();
    cycles.sort_by_key(|c| order[c[0].as_str()]);

    let first = first_sets(g, &nullable);
    let mut violations = Vec::new();
    for nt in g.nonterminals() {
        let firsts: Vec<BTreeSet<&Symbol>> =
            g.productions_of(nt).map(|p| first_of_seq(&p.rhs, &first, &nullable)).collect();
        let mut shared = BTreeSet::new();
        for i in 0..firsts.len() {
            for j in i + 1..firsts.len() {
                shared.extend(firsts[i].intersection(&firsts[j]).map(|s| s.to_string()));
            }
        }
        if !shared.is_empty() {
            violations.push(DeterminismViolation {
                stack_top: nt.to_string(),
                shared_first: shared.into_iter().collect(),
            });
        }
    }

    let productive = productive_set(g);
    let unproductive = g
        .nonterminals()
        .into_iter()
        .filter(|n| !productive.contains(n))
        .map(str::to_string)
        .collect();

    GrammarReport {
        left_recursive_cycles: cycles,
        nullable: nullable.into_iter().map(str::to_string).collect(),
        is_deterministic_candidate: violations.is_empty(),
        determinism_violations: violations,
        unproductive,
    }
}

pub(crate) fn nullable_set(g: &Grammar) -> BTreeSet<&str> {
    let mut nullable = BTreeSet::new();
    loop {
        let before = nullable.len();
        for p in g.productions() {
            if p.rhs.iter().all(|s| s.kind == SymbolKind::NonTerminal && nullable.contains(s.name.as_str())) {
                nullable.insert(p.lhs.as_str());
            }
        }
        if nullable.len() == before {
            return nullable;
        }
    }
}

fn productive_set(g: &Grammar) -> BTreeSet<&str> {
    let mut productive = BTreeSet::new();
    loop {
        let before = productive.len();
        for p in g.productions() {
            if p.rhs.iter().all(|s| s.is_terminal() || productive.contains(s.name.as_str())) {
                productive.insert(p.lhs.as_str());
            }
        }
        if productive.len() == before {
            return productive;
        }
    }
}

fn first_sets<'g>(g: &'g Grammar, nullable: &BTreeSet<&str>) -> BTreeMap<&'g str, BTreeSet<&'g Symbol>> {
    let mut first: BTreeMap<&str, BTreeSet<&Symbol>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for p in g.productions() {
            let add = first_of_seq(&p.rhs, &first, nullable);
            let entry = first.entry(p.lhs.as_str()).or_default();
            for s in add {
                changed |= entry.insert(s);
            }
        }
        if !changed {
            return first;
        }
    }
}

fn first_of_seq<'g>(
    seq: &'g [Symbol],
    first: &BTreeMap<&str, BTreeSet<&'g Symbol>>,
    nullable: &BTreeSet<&str>,
) -> BTreeSet<&'g Symbol> {
    let mut out = BTreeSet::new();
    for s in seq {
        if s.is_terminal() {
            out.insert(s);
            break;
        }
        if let Some(f) = first.get(s.name.as_str()) {
            out.extend(f.iter().copied());
        }
        if !nullable.contains(s.name.as_str()) {
            break;
        }
    }
    out
}
