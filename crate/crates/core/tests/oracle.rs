//! The automaton against the derivation-based enumerator.

mod common;

use std::collections::BTreeSet;

use common::{fixture_grammar, mini, ORACLE_GRAMMARS};
use pdadecode::eval::{accepted_sentences, enumerate_language};
use pdadecode::{compile, recognize, Grammar, Pda, Session, Symbol, Token};
use proptest::prelude::*;

const K: usize = 8;
const MAX_PREFIX: usize = 6;

fn oracle_grammars() -> Vec<(String, Grammar)> {
    let mut out: Vec<(String, Grammar)> =
        ORACLE_GRAMMARS.iter().map(|n| (n.to_string(), fixture_grammar(n))).collect();
    for start in ["import_stmt", "dotted_as_names", "params"] {
        out.push((format!("mini:{start}"), mini().with_start(start).unwrap()));
    }
    out
}

fn tokens(seq: &[Symbol]) -> Vec<Token> {
    seq.iter().map(|s| Token::new(s.clone(), s.name.clone())).collect()
}

/// Terminals that extend `prefix` towards some sentence of `lang`.
fn extensions(lang: &BTreeSet<Vec<Symbol>>, prefix: &[Symbol]) -> BTreeSet<Symbol> {
    lang.iter().filter(|s| s.len() > prefix.len() && s.starts_with(prefix)).map(|s| s[prefix.len()].clone()).collect()
}

/// Terminals the automaton offers after `prefix` that can still finish
/// within the bound.
fn bounded_valid(pda: &Pda, prefix: &[Symbol]) -> BTreeSet<Symbol> {
    let mut session = Session::new(pda);
    for t in tokens(prefix) {
        session.step(t).unwrap();
    }
    let valid = session.valid_set().unwrap();
    valid
        .iter()
        .filter(|(_, e)| prefix.len() + 1 + e.min_completion() as usize <= K)
        .map(|(t, _)| pda.symbol(t).clone())
        .collect()
}

#[test]
fn accepted_set_equals_enumeration() {
    for (name, g) in oracle_grammars() {
        let pda = compile(&g).unwrap();
        let lang = enumerate_language(&g.augmented(), K).unwrap().sentences;
        assert!(!lang.is_empty(), "{name}: empty language");
        let accepted = accepted_sentences(&pda, K).unwrap();
        assert_eq!(accepted, lang, "{name}");
        for s in &lang {
            assert!(recognize(&pda, &tokens(s)).unwrap().is_accepted(), "{name}: {s:?}");
        }
    }
}

#[test]
fn valid_sets_equal_prefix_extensions() {
    for (name, g) in oracle_grammars() {
        let pda = compile(&g).unwrap();
        let lang = enumerate_language(&g.augmented(), K).unwrap().sentences;
        let prefixes: BTreeSet<&[Symbol]> =
            lang.iter().flat_map(|s| (0..=s.len().min(MAX_PREFIX)).map(move |i| &s[..i])).collect();
        for p in prefixes {
            assert_eq!(bounded_valid(&pda, p), extensions(&lang, p), "{name}: prefix {p:?}");
        }
    }
}

#[test]
fn left_recursion_is_rejected() {
    assert!(compile(&fixture_grammar("left_recursive")).is_err());
}

fn alphabet(g: &Grammar) -> Vec<Symbol> {
    g.augmented().terminals().into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Random terminal strings are accepted exactly when the enumerator
    /// derives them.
    #[test]
    fn random_strings_agree(which in 0..ORACLE_GRAMMARS.len(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..=K)) {
        let g = fixture_grammar(ORACLE_GRAMMARS[which]);
        let sigma = alphabet(&g);
        let seq: Vec<Symbol> = picks.iter().map(|i| sigma[i.index(sigma.len())].clone()).collect();
        let lang = enumerate_language(&g.augmented(), K).unwrap().sentences;
        let pda = compile(&g).unwrap();
        prop_assert_eq!(recognize(&pda, &tokens(&seq)).unwrap().is_accepted(), lang.contains(&seq));
    }

    /// Sentences with a random terminal swapped in stay in agreement too,
    /// which exercises near misses more often than uniform strings do.
    #[test]
    fn mutated_sentences_agree(which in 0..ORACLE_GRAMMARS.len(), pick in any::<prop::sample::Index>(), at in any::<prop::sample::Index>(), sym in any::<prop::sample::Index>()) {
        let g = fixture_grammar(ORACLE_GRAMMARS[which]);
        let sigma = alphabet(&g);
        let lang: Vec<Vec<Symbol>> = enumerate_language(&g.augmented(), K).unwrap().sentences.into_iter().collect();
        let mut seq = lang[pick.index(lang.len())].clone();
        if !seq.is_empty() {
            let i = at.index(seq.len());
            seq[i] = sigma[sym.index(sigma.len())].clone();
        }
        let pda = compile(&g).unwrap();
        prop_assert_eq!(recognize(&pda, &tokens(&seq)).unwrap().is_accepted(), lang.contains(&seq));
    }
}
