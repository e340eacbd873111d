//! Metrics over generated corpora and the enumeration oracle.

mod enumerate;

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::grammar::Symbol;
use crate::pda::{recognize, ConfigSet, DeductionError, Pda, Recognition, Token};

pub use enumerate::{enumerate_language, EnumeratedLanguage, EnumeratedLanguageJson, FORM_BUDGET, MAX_ENUMERATION_LEN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("enumeration bound {max_len} exceeds the limit of {limit}")]
    BoundTooLarge { max_len: usize, limit: usize },
    #[error("cannot enumerate a left-recursive grammar: {0:?}")]
    LeftRecursive(Vec<Vec<String>>),
    #[error("enumeration visited more than {0} sentential forms")]
    FormBudget(usize),
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorBreakdown {
    pub tsm: usize,
    pub ens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    /// Accepted fraction; 0 for an empty corpus.
    pub gcp: f64,
    pub em: Option<f64>,
    pub bleu4: Option<f64>,
    pub error_breakdown: ErrorBreakdown,
}

/// Recognizes every stream and tallies the outcomes.
pub fn gcp(pda: &Pda, corpus: &[Vec<Token>]) -> Result<EvalReport, DeductionError> {
    let mut accepted = 0;
    let mut errors = ErrorBreakdown::default();
    for stream in corpus {
        match recognize(pda, stream)? {
            Recognition::Accepted => accepted += 1,
            Recognition::Tsm { .. } => errors.tsm += 1,
            Recognition::Ens { .. } => errors.ens += 1,
        }
    }
    let n = corpus.len();
    Ok(EvalReport {
        n,
        gcp: if n == 0 { 0.0 } else { accepted as f64 / n as f64 },
        em: None,
        bleu4: None,
        error_breakdown: errors,
    })
}

/// Every terminal sequence of at most `max_len` symbols the automaton
/// accepts, found by walking valid sets depth-first. Branches that cannot
/// finish within the bound are pruned.
pub fn accepted_sentences(pda: &Pda, max_len: usize) -> Result<BTreeSet<Vec<Symbol>>, DeductionError> {
    let mut out = BTreeSet::new();
    let mut prefix = Vec::new();
    walk(pda, &pda.initial(), max_len, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk(
    pda: &Pda,
    configs: &ConfigSet,
    max_len: usize,
    prefix: &mut Vec<Symbol>,
    out: &mut BTreeSet<Vec<Symbol>>,
) -> Result<(), DeductionError> {
    let valid = pda.valid_set(configs)?;
    for (t, entry) in valid.iter() {
        if prefix.len() + 1 + entry.min_completion() as usize > max_len {
            continue;
        }
        prefix.push(pda.symbol(t).clone());
        if pda.is_accepting(t) && pda.valid_set(&entry.successors)?.can_accept() {
            out.insert(prefix.clone());
        } else {
            walk(pda, &entry.successors, max_len, prefix, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

fn check_lengths<T>(hyps: &[T], refs: &[T]) -> Result<(), EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch { hypotheses: hyps.len(), references: refs.len() });
    }
    Ok(())
}

/// Fraction of hypotheses identical to their reference.
pub fn em<S: PartialEq>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64, EvalError> {
    check_lengths(hyps, refs)?;
    if hyps.is_empty() {
        return Ok(0.0);
    }
    Ok(hyps.iter().zip(refs).filter(|(h, r)| h == r).count() as f64 / hyps.len() as f64)
}

/// Corpus-level BLEU-4 with brevity penalty. Counts are pooled over the
/// corpus; precisions for n = 2..4 get add-one smoothing, the unigram
/// precision does not (so no unigram overlap gives 0).
pub fn bleu4<S: Eq + std::hash::Hash>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64, EvalError> {
    check_lengths(hyps, refs)?;
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=4 {
            let mut ref_counts: HashMap<&[S], usize> = HashMap::new();
            for g in r.windows(n) {
                *ref_counts.entry(g).or_insert(0) += 1;
            }
            let mut hyp_counts: HashMap<&[S], usize> = HashMap::new();
            for g in h.windows(n) {
                *hyp_counts.entry(g).or_insert(0) += 1;
            }
            total[n - 1] += h.len().saturating_sub(n - 1);
            matched[n - 1] +=
                hyp_counts.iter().map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0))).sum::<usize>();
        }
    }
    if hyp_len == 0 || matched[0] == 0 {
        return Ok(0.0);
    }
    let p1 = matched[0] as f64 / total[0] as f64;
    let log_sum = p1.ln()
        + (1..4).map(|i| ((matched[i] + 1) as f64 / (total[i] + 1) as f64).ln()).sum::<f64>();
    let bp = if hyp_len > ref_len { 1.0 } else { (1.0 - ref_len as f64 / hyp_len as f64).exp() };
    Ok(bp * (log_sum / 4.0).exp())
}
