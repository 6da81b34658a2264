//! Variable-length binary strings and the three single-edit operations that
//! act on them.
//!
//! Bits are packed little-endian into `u64` words: symbol `i` lives in word
//! `i / 64` at bit `i % 64`. Bits past the end of the string are always zero,
//! so derived equality and hashing compare contents only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// An ordered sequence of binary symbols of length at least one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitstring {
    words: Vec<u64>,
    len: usize,
}

impl Bitstring {
    /// Builds a string from explicit symbols.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Result<Self> {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % WORD_BITS == 0 {
                words.push(0);
            }
            if bit {
                words[len / WORD_BITS] |= 1 << (len % WORD_BITS);
            }
            len += 1;
        }
        if len == 0 {
            return Err(Error::invalid("bitstring must contain at least one symbol"));
        }
        Ok(Bitstring { words, len })
    }

    /// Samples a string of `len` independent fair bits.
    pub fn random<G: Rng + ?Sized>(len: usize, rng: &mut G) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("random bitstring length must be at least 1"));
        }
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.next_u64()).collect();
        let tail = len % WORD_BITS;
        if tail != 0 {
            *words.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        Ok(Bitstring { words, len })
    }

    /// Complexity: the number of symbols.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for API symmetry with collections.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range for length {}", self.len);
        (self.words[index / WORD_BITS] >> (index % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Returns a new string with `edit` applied. `self` is left untouched.
    pub fn apply(&self, edit: &EditProposal) -> Result<Bitstring> {
        edit.check(self.len)?;
        let mut out = self.clone();
        match *edit {
            EditProposal::Remove { position } => out.remove_at(position),
            EditProposal::Modify { position } => {
                out.words[position / WORD_BITS] ^= 1 << (position % WORD_BITS);
            }
            EditProposal::Expand { position, bit } => out.insert_at(position, bit),
        }
        Ok(out)
    }

    fn remove_at(&mut self, pos: usize) {
        let w = pos / WORD_BITS;
        let b = pos % WORD_BITS;
        let low = (1u64 << b) - 1;
        let n = self.words.len();
        let word = self.words[w];
        self.words[w] = (word & low) | ((word >> 1) & !low);
        for i in w..n {
            if i > w {
                self.words[i] >>= 1;
            }
            if i + 1 < n {
                self.words[i] |= self.words[i + 1] << 63;
            }
        }
        self.len -= 1;
        self.words.truncate(words_for(self.len));
    }

    fn insert_at(&mut self, pos: usize, bit: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        let w = pos / WORD_BITS;
        let b = pos % WORD_BITS;
        let low = (1u64 << b) - 1;
        let word = self.words[w];
        let mut carry = word >> 63;
        self.words[w] = (word & low) | ((bit as u64) << b) | ((word << 1) & !low & !(1u64 << b));
        for i in w + 1..self.words.len() {
            let next = self.words[i] >> 63;
            self.words[i] = (self.words[i] << 1) | carry;
            carry = next;
        }
        self.len += 1;
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("unexpected symbol {other:?} in bitstring"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Bitstring::from_bits(bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EditKind {
    Remove,
    Modify,
    Expand,
}

/// A single generative change to a bitstring.
///
/// `Remove` and `Modify` address an existing symbol, `position < len`.
/// `Expand` addresses one of the `len + 1` gaps, `position <= len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EditProposal {
    Remove { position: usize },
    Modify { position: usize },
    Expand { position: usize, bit: bool },
}

impl EditProposal {
    pub fn kind(&self) -> EditKind {
        match self {
            EditProposal::Remove { .. } => EditKind::Remove,
            EditProposal::Modify { .. } => EditKind::Modify,
            EditProposal::Expand { .. } => EditKind::Expand,
        }
    }

    pub fn position(&self) -> usize {
        match *self {
            EditProposal::Remove { position }
            | EditProposal::Modify { position }
            | EditProposal::Expand { position, .. } => position,
        }
    }

    /// Change in length caused by this edit.
    pub fn length_delta(&self) -> isize {
        match self {
            EditProposal::Remove { .. } => -1,
            EditProposal::Modify { .. } => 0,
            EditProposal::Expand { .. } => 1,
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        match *self {
            EditProposal::Remove { .. } if len <= 1 => Err(Error::invalid(
                "cannot remove a symbol from a string of length 1",
            )),
            EditProposal::Remove { position } | EditProposal::Modify { position }
                if position >= len =>
            {
                Err(Error::invalid(format!(
                    "position {position} out of range for length {len}"
                )))
            }
            EditProposal::Expand { position, .. } if position > len => Err(Error::invalid(
                format!("insertion slot {position} out of range for length {len}"),
            )),
            _ => Ok(()),
        }
    }
}

/// What to do when a removal is drawn against a string of length 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovePolicy {
    /// Draw the kind uniformly from modify/expand instead.
    #[default]
    Resample,
    /// Keep the uniform three-way draw and waste the iteration on a removal.
    Reject,
}

/// Samples an unbiased edit for a string of `len` symbols.
///
/// Draw order: kind, then position, then (for expansions) the new bit.
/// With `len == 1` the kind is uniform over modify and expand.
pub fn sample_proposal<G: Rng + ?Sized>(len: usize, rng: &mut G) -> EditProposal {
    sample_proposal_with(len, RemovePolicy::Resample, rng)
        .expect("resampling always yields a proposal")
}

/// Like [`sample_proposal`], but returns `None` when `policy` is
/// [`RemovePolicy::Reject`] and a removal was drawn at length 1.
pub fn sample_proposal_with<G: Rng + ?Sized>(
    len: usize,
    policy: RemovePolicy,
    rng: &mut G,
) -> Option<EditProposal> {
    debug_assert!(len >= 1);
    let kind = if len > 1 || policy == RemovePolicy::Reject {
        match rng.gen_range(0..3u32) {
            0 => EditKind::Remove,
            1 => EditKind::Modify,
            _ => EditKind::Expand,
        }
    } else if rng.gen_range(0..2u32) == 0 {
        EditKind::Modify
    } else {
        EditKind::Expand
    };
    match kind {
        EditKind::Remove if len == 1 => None,
        EditKind::Remove => Some(EditProposal::Remove {
            position: rng.gen_range(0..len),
        }),
        EditKind::Modify => Some(EditProposal::Modify {
            position: rng.gen_range(0..len),
        }),
        EditKind::Expand => {
            let position = rng.gen_range(0..=len);
            let bit = rng.gen::<bool>();
            Some(EditProposal::Expand { position, bit })
        }
    }
}
