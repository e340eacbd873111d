//! Invariants of deduction along random walks, and of vocabulary masks.

mod common;

use std::collections::BTreeSet;

use common::{mini_pda, python3_pda};
use pdadecode::lexmap::{build_mask, decode_mask, Vocabulary};
use pdadecode::{ConfigSet, Pda, Session, Status, SymbolId, Token};
use proptest::prelude::*;

/// Follows `picks` through valid sets, stopping at acceptance or when
/// nothing is left, and hands each visited frontier to `check`.
fn walk(pda: &Pda, picks: &[prop::sample::Index], mut check: impl FnMut(&Session<'_>, &ConfigSet)) {
    let mut session = Session::new(pda);
    for pick in picks {
        let closed = pda.closure(session.current()).unwrap();
        check(&session, &closed);
        let valid: Vec<SymbolId> = session.valid_set().unwrap().terminals().collect();
        if valid.is_empty() || !session.is_active() {
            break;
        }
        let t = valid[pick.index(valid.len())];
        session.step(Token::new(pda.symbol(t).clone(), "")).unwrap();
        if *session.status() == Status::Accepted {
            break;
        }
    }
}

fn pdas() -> [Pda; 2] {
    [mini_pda(), python3_pda()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..40)) {
        for pda in &pdas() {
            walk(pda, &picks, |_, closed| {
                assert_eq!(&pda.closure(closed).unwrap(), closed);
            });
        }
    }

    /// Valid terminals are exactly the terminal stack tops of the closure,
    /// each successor is such a configuration with its top popped, and no
    /// successor set outgrows the closure it came from.
    #[test]
    fn valid_sets_come_from_closure_tops(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..40)) {
        for pda in &pdas() {
            walk(pda, &picks, |session, closed| {
                let valid = pda.valid_set(session.current()).unwrap();
                let tops: BTreeSet<SymbolId> = closed.iter().filter_map(|c| c.stack.top()).collect();
                assert_eq!(valid.terminals().collect::<BTreeSet<_>>(), tops);
                assert!(tops.iter().all(|&t| pda.is_terminal(t)));
                assert_eq!(valid.can_accept(), closed.iter().any(|c| c.stack.is_empty()));
                let popped: BTreeSet<(SymbolId, Vec<SymbolId>)> = closed
                    .iter()
                    .filter_map(|c| {
                        let mut s = c.stack.symbols();
                        let top = s.pop()?;
                        Some((top, s))
                    })
                    .collect();
                for (t, entry) in valid.iter() {
                    assert!(entry.successors.len() <= closed.len());
                    for succ in &entry.successors {
                        assert!(popped.contains(&(t, succ.stack.symbols())));
                    }
                }
            });
        }
    }

    /// A terminal outside the valid set fails the session and leaves the
    /// frontier untouched.
    #[test]
    fn invalid_steps_leave_the_frontier(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..30), bad in any::<prop::sample::Index>()) {
        let pda = mini_pda();
        walk(&pda, &picks, |session, _| {
            let mut probe = session.clone();
            let valid: BTreeSet<SymbolId> = probe.valid_set().unwrap().terminals().collect();
            let outside: Vec<SymbolId> = pda.input_alphabet().filter(|t| !valid.contains(t)).collect();
            if outside.is_empty() || !probe.is_active() {
                return;
            }
            let t = outside[bad.index(outside.len())];
            let before = probe.current().clone();
            let status = probe.step(Token::new(pda.symbol(t).clone(), "")).unwrap().clone();
            assert!(matches!(status, Status::FailedTsm { .. }));
            assert_eq!(probe.current(), &before);
            assert_eq!(probe.consumed().len(), session.consumed().len());
        });
    }

    /// An allowed mask entry always steps; a masked entry with a terminal
    /// never does. The packed form decodes to the same flags.
    #[test]
    fn masks_agree_with_steps(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..30), vocab in prop::collection::vec(vocab_entry(), 1..60)) {
        let pda = mini_pda();
        let vocabulary = Vocabulary::new(&pda, vocab);
        walk(&pda, &picks, |session, _| {
            let mut probe = session.clone();
            let mask = build_mask(probe.valid_set().unwrap(), &vocabulary);
            assert_eq!(decode_mask(&mask.to_bytes()).unwrap(), mask.allowed);
            for i in 0..vocabulary.len() {
                let Some(t) = vocabulary.terminal_of(i) else {
                    assert!(!mask.allowed[i]);
                    continue;
                };
                let mut s = probe.clone();
                let status = s.step(Token::new(pda.symbol(t).clone(), vocabulary.entry(i))).unwrap().clone();
                assert_eq!(mask.allowed[i], !matches!(status, Status::FailedTsm { .. }), "{}", vocabulary.entry(i));
            }
        });
    }
}

fn vocab_entry() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec![
            "import", "as", "from", "if", "else", "def", "(", ")", ":", "=", "+", ",", ".", "\n", "<indent>",
            "<dedent>", "</s>", "pass", "return",
        ])
        .prop_map(String::from),
        "[a-z_][a-z0-9_]{0,6}",
        "[0-9]{1,4}",
        "'[a-z ]{0,4}'",
        "[@$?!]{1,2}",
    ]
}
