//! A scorer running in another process.
//!
//! Each request is one JSON line on the child's stdin:
//! `{"prefix": [[terminal, surface], ...], "candidates": [[terminal, surface], ...]}`.
//! The child answers with one line:
//! `{"weights": [...], "state_weights": {"rule": weight, ...}}`, where
//! `state_weights` is optional.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use super::scorer::{Scorer, ScorerError};
use crate::pda::Token;

#[derive(Serialize)]
struct Request<'a> {
    prefix: &'a [Token],
    candidates: &'a [Token],
}

#[derive(Deserialize)]
struct Reply {
    weights: Vec<f64>,
    #[serde(default)]
    state_weights: Option<BTreeMap<String, f64>>,
}

pub struct ExternalScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    last_states: Option<(usize, Option<BTreeMap<String, f64>>)>,
}

impl ExternalScorer {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, ScorerError> {
        let mut child =
            Command::new("sh").arg("-c").arg(command).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalScorer { child, stdin, stdout, last_states: None })
    }
}

impl Scorer for ExternalScorer {
    fn score_tokens(&mut self, prefix: &[Token], candidates: &[Token]) -> Result<Vec<f64>, ScorerError> {
        let mut line = serde_json::to_string(&Request { prefix, candidates })
            .map_err(|e| ScorerError::External(e.to_string()))?;
        line.push('\n');
        let stdin = self.stdin.as_mut().ok_or_else(|| ScorerError::External("stdin closed".into()))?;
        stdin.write_all(line.as_bytes())?;
        stdin.flush()?;

        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(ScorerError::External("process closed its output".into()));
        }
        let reply: Reply =
            serde_json::from_str(&reply).map_err(|e| ScorerError::External(format!("bad reply: {e}")))?;
        self.last_states = Some((prefix.len(), reply.state_weights));
        Ok(reply.weights)
    }

    fn score_states(&mut self, prefix: &[Token]) -> Result<Option<BTreeMap<String, f64>>, ScorerError> {
        Ok(match &self.last_states {
            Some((len, states)) if *len == prefix.len() => states.clone(),
            _ => None,
        })
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        drop(self.stdin.take());
        if matches!(self.child.try_wait(), Ok(None)) {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}
