//! Binary serialization of a compiled automaton. See `docs/pda-format.md`.

use thiserror::Error;

use super::{Pda, StateId, SymbolId};
use crate::grammar::{Symbol, SymbolKind};

const MAGIC: &[u8; 4] = b"PDA1";
const WILDCARD: u32 = u32::MAX;
const EPSILON: u32 = u32::MAX;
const UNCHANGED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unsupported format version `{0}`")]
    VersionMismatch(String),
    #[error("corrupt payload: {0}")]
    Corrupt(String),
}

fn corrupt(msg: impl Into<String>) -> CodecError {
    CodecError::Corrupt(msg.into())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("table fits in u32"));
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// A count, sanity-checked against the bytes left so a corrupt length
    /// cannot trigger a huge allocation.
    fn count(&mut self, min_item_size: usize) -> Result<usize, CodecError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_size) > self.buf.len() - self.pos {
            return Err(corrupt(format!("count {n} exceeds remaining payload")));
        }
        Ok(n)
    }

    fn str(&mut self) -> Result<String, CodecError> {
        let n = self.count(1)?;
        String::from_utf8(self.bytes(n)?.to_vec()).map_err(|_| corrupt("symbol name is not UTF-8"))
    }
}

impl Pda {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(MAGIC.to_vec());
        let n_t = self.num_terminals as usize;
        w.len(n_t);
        for s in &self.symbols[..n_t] {
            w.0.push(if s.kind == SymbolKind::SyntaxString { 1 } else { 2 });
            w.str(&s.name);
        }
        w.len(self.symbols.len() - n_t);
        for s in &self.symbols[n_t..] {
            w.str(&s.name);
        }
        w.u32(self.start_state().0);
        w.u32(self.start.0);
        w.len(self.accept.len());
        for a in &self.accept {
            w.u32(a.0);
        }
        let rows = self.delta_rows();
        w.len(rows.len());
        for row in rows {
            w.u32(WILDCARD);
            w.u32(row.stack_top.0);
            w.u32(row.input.map_or(EPSILON, |i| i.0));
            w.len(row.pushes.len());
            for push in &row.pushes {
                w.u32(UNCHANGED);
                w.len(push.len());
                for s in push {
                    w.u32(s.0);
                }
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Pda, CodecError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.bytes(4).map_err(|_| corrupt("missing header"))?;
        if magic != MAGIC {
            return Err(if magic.starts_with(b"PDA") {
                CodecError::VersionMismatch(String::from_utf8_lossy(magic).into_owned())
            } else {
                corrupt("bad magic")
            });
        }

        let n_t = r.count(5)?;
        let mut symbols = Vec::with_capacity(n_t);
        for _ in 0..n_t {
            let kind = match r.u8()? {
                1 => SymbolKind::SyntaxString,
                2 => SymbolKind::TokenType,
                k => return Err(corrupt(format!("unknown terminal kind {k}"))),
            };
            symbols.push(Symbol { kind, name: r.str()? });
        }
        let n_n = r.count(4)?;
        for _ in 0..n_n {
            symbols.push(Symbol::nonterminal(r.str()?));
        }
        let sorted = |s: &[Symbol]| s.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&symbols[..n_t]) || !sorted(&symbols[n_t..]) {
            return Err(corrupt("symbol tables are not strictly sorted"));
        }
        let total = symbols.len() as u32;
        let n_t32 = n_t as u32;
        let nonterminal = |id: u32| (n_t32..total).contains(&id);

        let start_state = r.u32()?;
        let start = r.u32()?;
        if !nonterminal(start) || start_state != start - n_t32 {
            return Err(corrupt("start state and stack symbol disagree"));
        }
        let n_a = r.count(4)?;
        let mut accept = Vec::with_capacity(n_a);
        for _ in 0..n_a {
            let a = r.u32()?;
            if a >= n_t32 {
                return Err(corrupt(format!("accept id {a} is not a terminal")));
            }
            accept.push(SymbolId(a));
        }
        if accept.is_empty() {
            return Err(corrupt("empty accept set"));
        }

        let mut expansions = vec![Vec::new(); n_n];
        let mut consumes = vec![false; n_t];
        let n_rows = r.count(16)?;
        let mut last: Option<(u32, u32)> = None;
        for _ in 0..n_rows {
            let (state, top, input) = (r.u32()?, r.u32()?, r.u32()?);
            if state != WILDCARD {
                return Err(corrupt("state-specific rows are not supported"));
            }
            if last.is_some_and(|l| l >= (top, input)) {
                return Err(corrupt("rows are not strictly sorted"));
            }
            last = Some((top, input));
            let n_targets = r.count(8)?;
            let mut pushes = Vec::with_capacity(n_targets);
            for _ in 0..n_targets {
                if r.u32()? != UNCHANGED {
                    return Err(corrupt("state-changing transitions are not supported"));
                }
                let len = r.count(4)?;
                let mut push = Vec::with_capacity(len);
                for _ in 0..len {
                    let s = r.u32()?;
                    if s >= total {
                        return Err(corrupt(format!("symbol id {s} out of range")));
                    }
                    push.push(SymbolId(s));
                }
                pushes.push(push);
            }
            if input == EPSILON && nonterminal(top) {
                expansions[(top - n_t32) as usize] = pushes;
            } else if input == top && top < n_t32 && pushes == [Vec::new()] {
                consumes[top as usize] = true;
            } else {
                return Err(corrupt(format!("unexpected row for stack top {top}")));
            }
        }
        if consumes.iter().any(|c| !c) {
            return Err(corrupt("missing consuming row for a terminal"));
        }
        if r.pos != bytes.len() {
            return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let pda = Pda::assemble(symbols, n_t32, SymbolId(start), accept, expansions);
        debug_assert_eq!(pda.start_state(), StateId(start_state));
        Ok(pda)
    }
}
