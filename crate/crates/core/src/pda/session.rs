//! Incremental deduction over a stream of terminals.

use serde::ser::{Serialize, SerializeTuple, Serializer};
use thiserror::Error;

use super::{ConfigSet, DeductionError, Pda, ValidSet};
use crate::grammar::Symbol;

/// A terminal together with the text it was produced from. Serializes as
/// the pair `[terminal name, surface]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub terminal: Symbol,
    pub surface: String,
}

impl Token {
    pub fn new(terminal: Symbol, surface: impl Into<String>) -> Self {
        Token { terminal, surface: surface.into() }
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.terminal.name)?;
        t.serialize_element(&self.surface)?;
        t.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Active,
    Accepted,
    /// A terminal outside the valid set was offered at `position`.
    FailedTsm { position: usize, terminal: Symbol },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("session is not active ({0:?})")]
    NotActive(Status),
    #[error(transparent)]
    Deduction(#[from] DeductionError),
}

/// Deduction state for one token stream. After a failed step the frontier
/// is left as it was so the expected set can still be inspected.
#[derive(Debug, Clone)]
pub struct Session<'p> {
    pda: &'p Pda,
    current: ConfigSet,
    valid: Option<ValidSet>,
    consumed: Vec<Token>,
    status: Status,
}

impl<'p> Session<'p> {
    pub fn new(pda: &'p Pda) -> Self {
        Session { pda, current: pda.initial(), valid: None, consumed: Vec::new(), status: Status::Active }
    }

    pub fn pda(&self) -> &'p Pda {
        self.pda
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    pub fn consumed(&self) -> &[Token] {
        &self.consumed
    }

    pub fn current(&self) -> &ConfigSet {
        &self.current
    }

    /// Valid set of the current frontier (cached between steps).
    pub fn valid_set(&mut self) -> Result<&ValidSet, DeductionError> {
        if self.valid.is_none() {
            self.valid = Some(self.pda.valid_set(&self.current)?);
        }
        Ok(self.valid.as_ref().expect("just filled"))
    }

    /// Consumes one token. An invalid terminal moves the session to
    /// `FailedTsm`; that is a status, not an error.
    pub fn step(&mut self, token: Token) -> Result<&Status, SessionError> {
        if self.status != Status::Active {
            return Err(SessionError::NotActive(self.status.clone()));
        }
        let pda = self.pda;
        let id = pda.id_of(&token.terminal).filter(|&t| pda.is_terminal(t));
        let entry = match id {
            Some(t) => self.valid_set()?.get(t).cloned(),
            None => None,
        };
        let Some(entry) = entry else {
            self.status = Status::FailedTsm { position: self.consumed.len(), terminal: token.terminal };
            return Ok(&self.status);
        };
        let id = id.expect("entry implies id");
        self.current = entry.successors;
        self.valid = None;
        self.consumed.push(token);
        if pda.is_accepting(id) && self.valid_set()?.can_accept() {
            self.status = Status::Accepted;
        }
        Ok(&self.status)
    }
}

/// Outcome of running a whole token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recognition {
    Accepted,
    /// Terminal mismatch; `expected` is the valid set at `position`.
    Tsm { position: usize, terminal: Symbol, expected: ValidSet },
    /// Input ended before acceptance.
    Ens { expected: ValidSet },
}

impl Recognition {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Recognition::Accepted)
    }
}

pub fn recognize(pda: &Pda, tokens: &[Token]) -> Result<Recognition, DeductionError> {
    let mut session = Session::new(pda);
    for (position, token) in tokens.iter().enumerate() {
        if session.status == Status::Accepted {
            return Ok(Recognition::Tsm {
                position,
                terminal: token.terminal.clone(),
                expected: ValidSet::default(),
            });
        }
        let status = session.step(token.clone()).map_err(|e| match e {
            SessionError::Deduction(d) => d,
            SessionError::NotActive(_) => unreachable!("loop only steps active sessions"),
        })?;
        if let Status::FailedTsm { position, terminal } = status.clone() {
            let expected = session.valid_set()?.clone();
            return Ok(Recognition::Tsm { position, terminal, expected });
        }
    }
    if session.status == Status::Accepted {
        Ok(Recognition::Accepted)
    } else {
        Ok(Recognition::Ens { expected: session.valid_set()?.clone() })
    }
}
