//! Persistent stacks.
//!
//! Configurations in a frontier share most of their stack, so stacks are
//! immutable linked lists behind `Arc`: pushing allocates one node and
//! popping is a pointer copy. Every node caches its depth, a structural
//! hash and the minimum number of terminals needed to empty the stack from
//! that point.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Index into a [`Pda`](super::Pda)'s symbol table. Terminals come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

/// Index into a [`Pda`](super::Pda)'s state set (its non-terminals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub u32);

pub(crate) const NO_ORIGIN: u32 = u32::MAX;

/// One stack entry. Terminal entries remember the non-terminal whose
/// production pushed them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Frame {
    pub symbol: SymbolId,
    pub origin: u32,
}

impl Frame {
    fn bits(self) -> u64 {
        u64::from(self.symbol.0) | (u64::from(self.origin) << 32)
    }
}

struct Node {
    frame: Frame,
    below: Stack,
    len: u32,
    hash: u64,
    min_len: u32,
}

#[derive(Clone, Default)]
pub struct Stack(Option<Arc<Node>>);

impl Stack {
    pub fn new() -> Self {
        Stack(None)
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn top(&self) -> Option<SymbolId> {
        self.0.as_ref().map(|n| n.frame.symbol)
    }

    pub(crate) fn top_frame(&self) -> Option<Frame> {
        self.0.as_ref().map(|n| n.frame)
    }

    /// Stack without its top entry (empty stays empty).
    pub(crate) fn pop(&self) -> Stack {
        self.0.as_ref().map_or_else(Stack::new, |n| n.below.clone())
    }

    pub(crate) fn push(&self, frame: Frame, min_yield: u32) -> Stack {
        let below_hash = self.structural_hash();
        let hash = (below_hash ^ frame.bits().wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .rotate_left(23)
            .wrapping_mul(0xFF51_AFD7_ED55_8CCD);
        Stack(Some(Arc::new(Node {
            frame,
            below: self.clone(),
            len: self.len() as u32 + 1,
            hash,
            min_len: self.min_completion().saturating_add(min_yield),
        })))
    }

    /// Fewest terminals whose consumption can empty this stack.
    pub fn min_completion(&self) -> u32 {
        self.0.as_ref().map_or(0, |n| n.min_len)
    }

    fn structural_hash(&self) -> u64 {
        self.0.as_ref().map_or(0x5151_5151, |n| n.hash)
    }

    pub(crate) fn frames(&self) -> Frames<'_> {
        Frames(self.0.as_deref())
    }

    /// Symbols from the top of the stack downwards.
    pub fn iter(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.frames().map(|f| f.symbol)
    }

    /// Symbols bottom first, top last.
    pub fn symbols(&self) -> Vec<SymbolId> {
        let mut v: Vec<SymbolId> = self.iter().collect();
        v.reverse();
        v
    }
}

pub(crate) struct Frames<'a>(Option<&'a Node>);

impl Iterator for Frames<'_> {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        let node = self.0?;
        self.0 = node.below.0.as_deref();
        Some(node.frame)
    }
}

impl PartialEq for Stack {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b) = (self.0.as_ref(), other.0.as_ref());
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.hash != y.hash || x.len != y.len || x.frame != y.frame {
                        return false;
                    }
                    a = x.below.0.as_ref();
                    b = y.below.0.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl Eq for Stack {}

impl Hash for Stack {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.structural_hash());
    }
}

impl Drop for Stack {
    // Unlink iteratively so dropping a deep stack cannot overflow.
    fn drop(&mut self) {
        let mut cur = self.0.take();
        while let Some(node) = cur {
            match Arc::try_unwrap(node) {
                Ok(mut owned) => cur = owned.below.0.take(),
                Err(_) => break,
            }
        }
    }
}

impl fmt::Debug for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.symbols().iter().map(|s| s.0)).finish()
    }
}
