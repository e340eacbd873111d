//! Grammar-constrained generation.
//!
//! Every step computes the valid set of the hypothesis' session, turns it
//! into candidate tokens, asks the scorer for weights, optionally mixes in
//! the weight of each candidate's predicted state, and picks greedily, by
//! beam or by sampling. Generation stops once the end marker is consumed
//! with an empty stack.
//!
//! With `budget_aware` set, a candidate is only offered if a complete
//! sentence is still reachable within `max_steps` after taking it, so
//! generation always ends accepted whenever the grammar allows it.

mod external;
mod render;
mod scorer;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lexmap::Vocabulary;
use crate::pda::{DeductionError, Pda, Session, SessionError, Status, SymbolId, Token, ValidEntry};

pub use external::ExternalScorer;
pub use render::{placeholder, render, RenderError, INDENT_WIDTH};
pub use scorer::{Ngram, Replay, Scorer, ScorerError, Uniform};

pub const DEFAULT_MAX_STEPS: usize = 512;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no vocabulary entry matches any valid terminal at step {0}")]
    NoCandidates(usize),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Deduction(#[from] DeductionError),
}

impl From<SessionError> for DecodeError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Deduction(d) => DecodeError::Deduction(d),
            SessionError::NotActive(s) => DecodeError::InvalidConfig(format!("stepped a finished session ({s:?})")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Greedy,
    Beam(usize),
    /// Draw each token in proportion to its weight.
    Sample,
}

#[derive(Debug, Clone)]
pub enum CandidateSource {
    /// One candidate per valid terminal.
    Terminals,
    /// Every vocabulary entry whose terminal is valid.
    Vocabulary(Vocabulary),
}

#[derive(Debug, Clone)]
pub struct DecodeConfig {
    pub alpha: f64,
    pub mode: Mode,
    pub max_steps: usize,
    pub seed: u64,
    pub candidates: CandidateSource,
    pub budget_aware: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            alpha: 0.0,
            mode: Mode::Greedy,
            max_steps: DEFAULT_MAX_STEPS,
            seed: 0,
            candidates: CandidateSource::Terminals,
            budget_aware: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub valid_set_size: usize,
    pub chosen: String,
    pub base_weight: f64,
    pub joint_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub tokens: Vec<Token>,
    pub accepted: bool,
    pub steps: usize,
    pub log: Vec<StepLog>,
    /// Sum of log joint weights along the chosen path.
    pub score: f64,
}

/// `(base + alpha * state) / (1 + alpha)`, element-wise.
pub fn joint_combine(base: &[f64], state_weight_of: &[f64], alpha: f64) -> Result<Vec<f64>, DecodeError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DecodeError::InvalidAlpha(alpha));
    }
    if base.len() != state_weight_of.len() {
        return Err(DecodeError::InvalidConfig("base and state weights differ in length".into()));
    }
    Ok(base.iter().zip(state_weight_of).map(|(b, s)| (b + alpha * s) / (1.0 + alpha)).collect())
}

/// Scales weights to sum to one; all zeros become uniform.
pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        weights.iter().map(|w| w / sum).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

struct Candidate {
    token: Token,
    base: f64,
    joint: f64,
}

#[derive(Clone)]
struct Hypothesis<'p> {
    session: Session<'p>,
    log: Vec<StepLog>,
    score: f64,
}

pub fn generate(pda: &Pda, scorer: &mut dyn Scorer, cfg: &DecodeConfig) -> Result<DecodeResult, DecodeError> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(DecodeError::InvalidAlpha(cfg.alpha));
    }
    if cfg.max_steps == 0 {
        return Err(DecodeError::InvalidConfig("max_steps must be positive".into()));
    }
    let width = match cfg.mode {
        Mode::Beam(0) => return Err(DecodeError::InvalidConfig("beam width must be positive".into())),
        Mode::Beam(w) => w,
        Mode::Greedy | Mode::Sample => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut active = vec![Hypothesis { session: Session::new(pda), log: Vec::new(), score: 0.0 }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for step in 0..cfg.max_steps {
        let remaining = cfg.max_steps - step;
        // (hypothesis, candidate, ranking score, tie-break key)
        let mut pool: Vec<(usize, Candidate, f64, u64)> = Vec::new();
        for (hi, h) in active.iter_mut().enumerate() {
            let (size, cands) = candidates(pda, scorer, cfg, &mut h.session, remaining)?;
            h.log.push(StepLog { valid_set_size: size, chosen: String::new(), base_weight: 0.0, joint_weight: 0.0 });
            if cfg.mode == Mode::Sample {
                let dist = WeightedIndex::new(cands.iter().map(|c| c.joint))
                    .unwrap_or_else(|_| WeightedIndex::new(vec![1.0; cands.len()]).expect("non-empty"));
                let pick = dist.sample(&mut rng);
                let c = cands.into_iter().nth(pick).expect("index in range");
                pool.push((hi, c, 0.0, 0));
            } else {
                for c in cands {
                    let key = rng.next_u64();
                    let score = h.score + c.joint.ln();
                    pool.push((hi, c, score, key));
                }
            }
        }
        pool.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap_or(Ordering::Equal)
                .then_with(|| b.1.joint.partial_cmp(&a.1.joint).unwrap_or(Ordering::Equal))
                .then_with(|| b.3.cmp(&a.3))
        });
        pool.truncate(width);

        // A hypothesis is moved on its last use and cloned only when the
        // beam branches it.
        let mut uses = vec![0usize; active.len()];
        for (hi, ..) in &pool {
            uses[*hi] += 1;
        }
        let mut slots: Vec<Option<Hypothesis>> = active.into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(pool.len());
        for (hi, c, _, _) in pool {
            uses[hi] -= 1;
            let mut h = if uses[hi] == 0 {
                slots[hi].take().expect("taken on last use only")
            } else {
                slots[hi].clone().expect("still present")
            };
            let entry = h.log.last_mut().expect("pushed above");
            entry.chosen = c.token.terminal.name.clone();
            entry.base_weight = c.base;
            entry.joint_weight = c.joint;
            h.score += c.joint.ln();
            match h.session.step(c.token)? {
                Status::Accepted => finished.push(h),
                Status::Active => next.push(h),
                Status::FailedTsm { terminal, .. } => {
                    unreachable!("candidate {terminal} came from the valid set")
                }
            }
        }
        active = next;
        let best_finished = finished.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        let best_active = active.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        if active.is_empty() || best_finished >= best_active {
            break;
        }
    }

    let (h, accepted) = match best(finished) {
        Some(h) => (h, true),
        None => (best(active).expect("beam never empties without finishing"), false),
    };
    let tokens = h.session.consumed().to_vec();
    Ok(DecodeResult { steps: tokens.len(), tokens, accepted, log: h.log, score: h.score })
}

fn best<'p>(hs: Vec<Hypothesis<'p>>) -> Option<Hypothesis<'p>> {
    hs.into_iter().reduce(|a, b| if b.score > a.score { b } else { a })
}

/// Candidates for the next token of `session` and the valid-set size.
fn candidates(
    pda: &Pda,
    scorer: &mut dyn Scorer,
    cfg: &DecodeConfig,
    session: &mut Session<'_>,
    remaining: usize,
) -> Result<(usize, Vec<Candidate>), DecodeError> {
    let valid = session.valid_set()?.clone();
    let prefix = session.consumed();
    let all: Vec<(SymbolId, &ValidEntry)> = valid.iter().collect();
    let within_budget: Vec<(SymbolId, &ValidEntry)> = if cfg.budget_aware {
        all.iter().copied().filter(|(_, e)| (e.min_completion() as usize) < remaining).collect()
    } else {
        Vec::new()
    };

    let mut pick = |terms: &[(SymbolId, &ValidEntry)]| -> Vec<(Token, usize)> {
        let mut out = Vec::new();
        for (ti, (t, _)) in terms.iter().enumerate() {
            let sym = pda.symbol(*t);
            match &cfg.candidates {
                CandidateSource::Terminals => {
                    let surface = scorer.surface(prefix, sym).unwrap_or_else(|| placeholder(sym));
                    out.push((Token::new(sym.clone(), surface), ti));
                }
                CandidateSource::Vocabulary(vocab) => {
                    for &i in vocab.indices_of(*t) {
                        out.push((Token::new(sym.clone(), vocab.entry(i)), ti));
                    }
                }
            }
        }
        out
    };
    let (terms, tokens) = match pick(&within_budget) {
        found if !found.is_empty() => (&within_budget, found),
        _ => (&all, pick(&all)),
    };
    if tokens.is_empty() {
        return Err(DecodeError::NoCandidates(prefix.len()));
    }

    let toks: Vec<Token> = tokens.iter().map(|(t, _)| t.clone()).collect();
    let raw = scorer.score_tokens(prefix, &toks)?;
    if raw.len() != toks.len() {
        return Err(ScorerError::WeightCount { expected: toks.len(), got: raw.len() }.into());
    }
    if let Some(&bad) = raw.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(ScorerError::InvalidWeight(bad).into());
    }
    let base = normalize(&raw);

    let mut joint = base.clone();
    if cfg.alpha > 0.0 {
        if let Some(states) = scorer.score_states(prefix)? {
            let state_w = state_weights(pda, &states, tokens.iter().map(|(_, ti)| terms[*ti].1))?;
            joint = joint_combine(&base, &state_w, cfg.alpha)?;
        }
    }
    let cands = toks
        .into_iter()
        .zip(base)
        .zip(joint)
        .map(|((token, base), joint)| Candidate { token, base, joint })
        .collect();
    Ok((valid.len(), cands))
}

/// Normalized weight of each candidate's predicted state; the maximum when
/// a terminal was pushed by several rules.
fn state_weights<'e>(
    pda: &Pda,
    states: &BTreeMap<String, f64>,
    entries: impl Iterator<Item = &'e ValidEntry>,
) -> Result<Vec<f64>, DecodeError> {
    if let Some(&bad) = states.values().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(ScorerError::InvalidWeight(bad).into());
    }
    let total: f64 = states.values().sum();
    Ok(entries
        .map(|e| {
            if total <= 0.0 {
                return 0.0;
            }
            e.origins
                .iter()
                .map(|&s| states.get(pda.state_name(s)).copied().unwrap_or(0.0) / total)
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Samples terminals from the whole input alphabet with no grammar
/// constraint until the end marker is drawn or `max_steps` is reached.
pub fn generate_unconstrained(
    pda: &Pda,
    scorer: &mut dyn Scorer,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<Token>, DecodeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Token> = Vec::new();
    while out.len() < max_steps {
        let toks: Vec<Token> = pda
            .input_alphabet()
            .map(|t| {
                let sym = pda.symbol(t);
                let surface = scorer.surface(&out, sym).unwrap_or_else(|| placeholder(sym));
                Token::new(sym.clone(), surface)
            })
            .collect();
        let weights = normalize(&scorer.score_tokens(&out, &toks)?);
        let dist = WeightedIndex::new(&weights).map_err(|e| DecodeError::InvalidConfig(e.to_string()))?;
        let token = toks[dist.sample(&mut rng)].clone();
        let done = pda.id_of(&token.terminal).is_some_and(|t| pda.is_accepting(t));
        out.push(token);
        if done {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, Symbol};
    use crate::pda::{compile, recognize};

    fn pda(text: &str) -> Pda {
        compile(&parse_grammar(text).unwrap()).unwrap()
    }

    #[test]
    fn joint_rule_cases() {
        assert_eq!(joint_combine(&[0.3, 0.7], &[0.9, 0.1], 0.0).unwrap(), [0.3, 0.7]);
        assert!((joint_combine(&[0.6], &[0.8], 1.0).unwrap()[0] - 0.7).abs() < 1e-12);
        assert_eq!(joint_combine(&[0.5, 0.5], &[1.0, 1.0], 1.0).unwrap(), [0.75, 0.75]);
        assert!(matches!(joint_combine(&[1.0], &[1.0], 1.5), Err(DecodeError::InvalidAlpha(_))));
    }

    #[test]
    fn single_path_grammar() {
        let p = pda("S: 'a'");
        let r = generate(&p, &mut Uniform, &DecodeConfig::default()).unwrap();
        let names: Vec<&str> = r.tokens.iter().map(|t| t.terminal.name.as_str()).collect();
        assert_eq!(names, ["a", "ENDMARKER"]);
        assert!(r.accepted);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn budget_forces_termination() {
        let p = pda("S: 'a' S | 'b'");
        for seed in 0..20 {
            let cfg = DecodeConfig { max_steps: 5, seed, mode: Mode::Sample, ..DecodeConfig::default() };
            let r = generate(&p, &mut Uniform, &cfg).unwrap();
            assert!(r.accepted && r.steps <= 5);
            assert!(recognize(&p, &r.tokens).unwrap().is_accepted());
        }
    }

    #[test]
    fn exhausted_steps_are_not_accepted() {
        let p = pda("S: 'a' 'b' 'c'");
        let cfg = DecodeConfig { max_steps: 2, ..DecodeConfig::default() };
        let r = generate(&p, &mut Uniform, &cfg).unwrap();
        assert!(!r.accepted);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn beam_of_one_matches_greedy() {
        let p = pda("S: A S | %empty\nA: 'x' | 'y' | 'z' 'w'");
        for seed in 0..10 {
            let g = DecodeConfig { seed, max_steps: 12, ..DecodeConfig::default() };
            let b = DecodeConfig { mode: Mode::Beam(1), ..g.clone() };
            assert_eq!(generate(&p, &mut Uniform, &g).unwrap(), generate(&p, &mut Uniform, &b).unwrap());
        }
    }

    #[test]
    fn state_weights_steer_choice() {
        struct States;
        impl Scorer for States {
            fn score_tokens(&mut self, _: &[Token], c: &[Token]) -> Result<Vec<f64>, ScorerError> {
                Ok(vec![1.0; c.len()])
            }
            fn score_states(&mut self, _: &[Token]) -> Result<Option<BTreeMap<String, f64>>, ScorerError> {
                Ok(Some(BTreeMap::from([("B".to_string(), 1.0)])))
            }
        }
        let p = pda("S: A | B\nA: 'a'\nB: 'b'");
        for seed in 0..5 {
            let cfg = DecodeConfig { alpha: 1.0, seed, ..DecodeConfig::default() };
            let r = generate(&p, &mut States, &cfg).unwrap();
            assert_eq!(r.tokens[0].terminal, Symbol::literal("b"));
            assert!((r.log[0].joint_weight - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_stops_at_end_marker() {
        let p = pda("S: 'a'");
        let toks = generate_unconstrained(&p, &mut Uniform, 50, 3).unwrap();
        assert!(toks.len() <= 50);
        if toks.len() < 50 {
            assert_eq!(toks.last().unwrap().terminal.name, "ENDMARKER");
        }
    }
}
