//! Edit distance and effectiveness.
//!
//! Three kernels compute the same Levenshtein distance:
//!
//! * [`levenshtein_dp`]: two-row Wagner–Fischer, `O(m·n)`. Reference speed.
//! * [`levenshtein`]: Myers/Hyyrö bit-parallel columns over 64-row blocks,
//!   `O(⌈m/64⌉·n)`.
//! * [`levenshtein_bounded`]: the same recurrence restricted to the Ukkonen
//!   band of a distance budget `k`, `O(⌈k/64⌉·n)`, with a single-word
//!   diagonal band when `2k + 1 ≤ 64`.
//!
//! All three strip the common prefix and suffix first, which never changes
//! the distance. Binary strings make the match vectors free: the pattern's
//! own words are the match mask for `1`, their complement the mask for `0`.

use std::cmp::{max, min, Ordering};

use crate::bitstring::{words_for, Bitstring, WORD_BITS};
use crate::scalar::Real;

/// Upper bound on the distance a bounded query cares about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DistanceBudget(pub usize);

/// `1 - distance / max_len`, held as the exact integer pair.
#[derive(Clone, Copy, Debug)]
pub struct Effectiveness {
    distance: usize,
    max_len: usize,
}

impl Effectiveness {
    pub fn new(distance: usize, max_len: usize) -> Self {
        assert!(max_len >= 1, "effectiveness needs a non-empty string");
        assert!(distance <= max_len, "distance {distance} exceeds max length {max_len}");
        Effectiveness { distance, max_len }
    }

    pub fn of(t: &Bitstring, s: &Bitstring) -> Self {
        Effectiveness::new(levenshtein(t, s), max(t.len(), s.len()))
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn is_perfect(&self) -> bool {
        self.distance == 0
    }

    pub fn value<R: Real>(&self) -> R {
        R::one() - R::from_count(self.distance) / R::from_count(self.max_len)
    }
}

impl PartialEq for Effectiveness {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Effectiveness {}

impl PartialOrd for Effectiveness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Effectiveness {
    fn cmp(&self, other: &Self) -> Ordering {
        // 1 - a/b < 1 - c/d  <=>  a·d > c·b
        let lhs = self.distance as u128 * other.max_len as u128;
        let rhs = other.distance as u128 * self.max_len as u128;
        rhs.cmp(&lhs)
    }
}

/// Effectiveness of a technological system `t` against a search space `s`.
pub fn effectiveness(t: &Bitstring, s: &Bitstring) -> Effectiveness {
    Effectiveness::of(t, s)
}

/// Outcome of replacing one string of a pair by a single-edit neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Delta {
    Improved,
    Tied,
    Worsened,
}

/// Classifies `edited` (a single edit away from `old`) against `other`.
///
/// `cached_distance` must equal `LD(old, other)`. Because one edit moves the
/// distance by at most one, the new distance is found with a budget of
/// `cached_distance + 1`. The comparison is on effectiveness, so a length
/// change that alters the normaliser is accounted for.
pub fn classify_delta(
    old: &Bitstring,
    other: &Bitstring,
    cached_distance: usize,
    edited: &Bitstring,
) -> (Delta, usize) {
    let new_distance = levenshtein_bounded(edited, other, DistanceBudget(cached_distance + 1))
        .unwrap_or_else(|| levenshtein(edited, other));
    let before = Effectiveness::new(cached_distance, max(old.len(), other.len()));
    let after = Effectiveness::new(new_distance, max(edited.len(), other.len()));
    let delta = match after.cmp(&before) {
        Ordering::Greater => Delta::Improved,
        Ordering::Equal => Delta::Tied,
        Ordering::Less => Delta::Worsened,
    };
    (delta, new_distance)
}

/// Largest distance for `edited` that still counts as a strict improvement
/// over `cached_distance`, or `None` if no distance can improve.
pub(crate) fn improvement_threshold(
    old_len: usize,
    other_len: usize,
    cached_distance: usize,
    edited_len: usize,
) -> Option<usize> {
    // improved  <=>  d'·m < d·m'
    let m = max(old_len, other_len) as u128;
    let m_new = max(edited_len, other_len) as u128;
    let bound = cached_distance as u128 * m_new;
    if bound == 0 {
        return None;
    }
    Some(((bound - 1) / m) as usize)
}

/// Exact edit distance, bit-parallel.
pub fn levenshtein(a: &Bitstring, b: &Bitstring) -> usize {
    let (a, b) = trim_common_affix(BitView::whole(a), BitView::whole(b));
    let (pattern, text) = if a.len <= b.len { (a, b) } else { (b, a) };
    if pattern.len == 0 {
        return text.len;
    }
    if pattern.len <= WORD_BITS {
        single_word(pattern, text)
    } else {
        blocked_full(pattern, text)
    }
}

/// Exact edit distance if it is at most `budget`, otherwise `None`.
pub fn levenshtein_bounded(a: &Bitstring, b: &Bitstring, budget: DistanceBudget) -> Option<usize> {
    let k = budget.0;
    if a.len().abs_diff(b.len()) > k {
        return None;
    }
    let (a, b) = trim_common_affix(BitView::whole(a), BitView::whole(b));
    let (pattern, text) = if a.len <= b.len { (a, b) } else { (b, a) };
    if pattern.len == 0 {
        return Some(text.len);
    }
    if k == 0 {
        // both remnants non-empty means they differ
        return None;
    }
    let k = min(k, text.len);
    let d = if pattern.len <= WORD_BITS {
        single_word(pattern, text)
    } else if 2 * k < WORD_BITS {
        small_band(pattern, text, k)
    } else {
        blocked_band(pattern, text, k)
    };
    (d <= k).then_some(d)
}

/// Reference Wagner–Fischer with two rows.
pub fn levenshtein_dp(a: &Bitstring, b: &Bitstring) -> usize {
    let a: Vec<bool> = a.iter().collect();
    let b: Vec<bool> = b.iter().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = min(min(prev[j + 1], cur[j]) + 1, prev[j] + (x != y) as usize);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// A window onto `len` bits of a packed word slice starting at bit `start`.
#[derive(Clone, Copy, Debug)]
struct BitView<'a> {
    words: &'a [u64],
    start: usize,
    len: usize,
}

impl<'a> BitView<'a> {
    fn whole(s: &'a Bitstring) -> Self {
        BitView {
            words: s.words(),
            start: 0,
            len: s.len(),
        }
    }

    #[cfg(test)]
    fn get(&self, i: usize) -> bool {
        let p = self.start + i;
        (self.words[p / WORD_BITS] >> (p % WORD_BITS)) & 1 == 1
    }

    /// Bits `offset .. offset + 64` of the view; positions outside the view
    /// read as zero.
    #[inline]
    fn window(&self, offset: isize) -> u64 {
        let len = self.len as isize;
        if offset >= len || offset <= -(WORD_BITS as isize) {
            return 0;
        }
        let abs = self.start as isize + offset;
        let raw = if abs >= 0 {
            let p = abs as usize;
            let w = p / WORD_BITS;
            let s = p % WORD_BITS;
            let lo = self.words.get(w).copied().unwrap_or(0) >> s;
            let hi = if s != 0 {
                self.words.get(w + 1).copied().unwrap_or(0) << (WORD_BITS - s)
            } else {
                0
            };
            lo | hi
        } else {
            self.words[0] << ((-abs) as usize)
        };
        raw & self.valid_mask(offset)
    }

    #[inline]
    fn valid_mask(&self, offset: isize) -> u64 {
        let len = self.len as isize;
        let mut mask = !0u64;
        if offset < 0 {
            mask <<= (-offset) as u32;
        }
        let avail = len - offset;
        if avail < WORD_BITS as isize {
            mask &= (1u64 << avail) - 1;
        }
        mask
    }

    /// Match mask of the view at `offset` against symbol `c`.
    #[inline]
    fn matches(&self, offset: isize, c: bool) -> u64 {
        let w = self.window(offset);
        if c {
            w
        } else {
            !w & self.valid_mask(offset)
        }
    }

    fn slice(&self, from: usize, len: usize) -> Self {
        debug_assert!(from + len <= self.len);
        BitView {
            words: self.words,
            start: self.start + from,
            len,
        }
    }
}

fn trim_common_affix<'a>(a: BitView<'a>, b: BitView<'a>) -> (BitView<'a>, BitView<'a>) {
    let shortest = min(a.len, b.len);
    let mut prefix = 0;
    while prefix < shortest {
        let diff = a.window(prefix as isize) ^ b.window(prefix as isize);
        if diff != 0 {
            prefix += diff.trailing_zeros() as usize;
            break;
        }
        prefix += WORD_BITS;
    }
    let prefix = min(prefix, shortest);
    let a = a.slice(prefix, a.len - prefix);
    let b = b.slice(prefix, b.len - prefix);

    let shortest = min(a.len, b.len);
    let mut suffix = 0;
    while suffix < shortest {
        let step = min(WORD_BITS, shortest - suffix);
        // the `step` bits ending `suffix` before each end, in the low bits
        let wa = a.window(a.len as isize - (suffix + step) as isize);
        let wb = b.window(b.len as isize - (suffix + step) as isize);
        let mask = if step == WORD_BITS { !0 } else { (1u64 << step) - 1 };
        let diff = (wa ^ wb) & mask;
        if diff != 0 {
            suffix += (diff.leading_zeros() as usize) - (WORD_BITS - step);
            break;
        }
        suffix += step;
    }
    (a.slice(0, a.len - suffix), b.slice(0, b.len - suffix))
}

/// One column step of a 64-row block. Takes the horizontal delta entering at
/// the top of the block and returns the one leaving at bit `shift`, the
/// block's last pattern row.
#[inline(always)]
pub(crate) fn advance_block(eq: u64, v: &mut Vertical, hp_in: u64, hn_in: u64, shift: u32) -> (u64, u64) {
    let x = eq | hn_in;
    let d0 = ((x & v.pos).wrapping_add(v.pos) ^ v.pos) | x | v.neg;
    let mut hp = v.neg | !(d0 | v.pos);
    let mut hn = d0 & v.pos;
    let hp_out = (hp >> shift) & 1;
    let hn_out = (hn >> shift) & 1;
    hp = (hp << 1) | hp_in;
    hn = (hn << 1) | hn_in;
    v.pos = hn | !(d0 | hp);
    v.neg = hp & d0;
    (hp_out, hn_out)
}

/// Vertical delta vectors of one block: bit set where a cell exceeds (`pos`)
/// or undercuts (`neg`) the cell above it by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Vertical {
    pub(crate) pos: u64,
    pub(crate) neg: u64,
}

const FRESH: Vertical = Vertical { pos: !0, neg: 0 };

fn for_each_symbol(text: BitView<'_>, mut f: impl FnMut(usize, bool)) {
    let mut j = 0;
    while j < text.len {
        let w = text.window(j as isize);
        let n = min(WORD_BITS, text.len - j);
        for b in 0..n {
            f(j + b, (w >> b) & 1 == 1);
        }
        j += n;
    }
}

fn single_word(pattern: BitView<'_>, text: BitView<'_>) -> usize {
    debug_assert!((1..=WORD_BITS).contains(&pattern.len));
    let eq = [pattern.matches(0, false), pattern.matches(0, true)];
    let shift = (pattern.len - 1) as u32;
    let mut v = FRESH;
    let mut score = pattern.len;
    for_each_symbol(text, |_, c| {
        let (hp, hn) = advance_block(eq[c as usize], &mut v, 1, 0, shift);
        score = score + hp as usize - hn as usize;
    });
    score
}

/// Per-block match masks, indexed by symbol, and the bit of each block's
/// last pattern row.
struct PatternMasks {
    eq: Vec<[u64; 2]>,
    shift: Vec<u32>,
}

impl PatternMasks {
    fn new(pattern: BitView<'_>) -> Self {
        let blocks = words_for(pattern.len);
        let eq = (0..blocks)
            .map(|w| {
                let at = (w * WORD_BITS) as isize;
                [pattern.matches(at, false), pattern.matches(at, true)]
            })
            .collect();
        let mut shift = vec![63u32; blocks];
        shift[blocks - 1] = ((pattern.len - 1) % WORD_BITS) as u32;
        PatternMasks { eq, shift }
    }

    fn blocks(&self) -> usize {
        self.eq.len()
    }
}

fn blocked_full(pattern: BitView<'_>, text: BitView<'_>) -> usize {
    let masks = PatternMasks::new(pattern);
    let mut vert = vec![FRESH; masks.blocks()];
    let mut score = pattern.len;
    for_each_symbol(text, |_, c| {
        let (mut hp, mut hn) = (1u64, 0u64);
        for ((v, eq), &shift) in vert.iter_mut().zip(&masks.eq).zip(&masks.shift) {
            (hp, hn) = advance_block(eq[c as usize], v, hp, hn, shift);
        }
        score = score + hp as usize - hn as usize;
    });
    score
}

/// Blocked columns restricted to the Ukkonen band for budget `k`. The band's
/// first and last active blocks move with the column; blocks whose every
/// cell provably exceeds the budget are skipped. Returns a value `> k` when
/// the distance exceeds the budget.
fn blocked_band(pattern: BitView<'_>, text: BitView<'_>, k: usize) -> usize {
    let m = pattern.len as isize;
    let n = text.len as isize;
    let w = WORD_BITS as isize;
    let mut k = k as isize;
    debug_assert!(k >= (n - m).abs());

    let masks = PatternMasks::new(pattern);
    let blocks = masks.blocks();
    let mut vert = vec![FRESH; blocks];
    // score at the bottom row of each block
    let mut scores: Vec<isize> = (0..blocks).map(|b| ((b + 1) * WORD_BITS) as isize).collect();
    scores[blocks - 1] = m;

    let bottom_row = |b: isize| -> isize {
        if b as usize + 1 == blocks {
            m - 1
        } else {
            (b + 1) * w - 1
        }
    };

    let mut first: isize = 0;
    let mut last: isize = (blocks as isize).min((min(k, (k + m - n) / 2) + 1 + w - 1) / w) - 1;

    let mut exceeded = false;
    let mut col: isize = 0;
    for_each_symbol(text, |_, c| {
        if exceeded {
            return;
        }
        let (mut hp, mut hn) = (1u64, 0u64);
        let span = first as usize..=last as usize;
        for (((v, eq), &shift), score) in vert[span.clone()]
            .iter_mut()
            .zip(&masks.eq[span.clone()])
            .zip(&masks.shift[span.clone()])
            .zip(&mut scores[span])
        {
            (hp, hn) = advance_block(eq[c as usize], v, hp, hn, shift);
            *score += hp as isize - hn as isize;
        }

        // tighten the budget with an upper bound through the last block
        k = min(
            k,
            scores[last as usize] + max(n - col - 1, m - ((1 + last) * w - 1) - 1),
        );

        // the block below the band may have entered it
        if last + 1 < blocks as isize
            && bottom_row(last) <= k + 2 * w + col + m - scores[last as usize] - 2 - n
        {
            last += 1;
            let lu = last as usize;
            vert[lu] = FRESH;
            let rows = if lu + 1 == blocks {
                (m - 1) % w + 1
            } else {
                w
            };
            scores[lu] = scores[lu - 1] + rows - hp as isize + hn as isize;
            (hp, hn) = advance_block(masks.eq[lu][c as usize], &mut vert[lu], hp, hn, masks.shift[lu]);
            scores[lu] += hp as isize - hn as isize;
        }

        while last >= first {
            let s = scores[last as usize];
            let in_band = s < k + w && bottom_row(last) <= k + 2 * w + col + m + 1 - s - 2 - n;
            if in_band {
                break;
            }
            last -= 1;
        }
        while first <= last {
            let s = scores[first as usize];
            let in_band = s < k + w && bottom_row(first) >= s + m + col - k - n;
            if in_band {
                break;
            }
            first += 1;
        }
        if last < first {
            exceeded = true;
        }
        col += 1;
    });

    if exceeded {
        usize::MAX
    } else {
        scores[blocks - 1] as usize
    }
}

/// Diagonal band of 64 cells sliding one row down per column. Requires
/// `2k + 1 <= 64`, `k < m` and `n >= m - k`. Tracks the band's lowest
/// diagonal cell until it reaches the last pattern row, then follows the
/// last row. Returns `usize::MAX` when the distance exceeds the budget.
fn small_band(pattern: BitView<'_>, text: BitView<'_>, k: usize) -> usize {
    let m = pattern.len;
    let n = text.len;
    debug_assert!(2 * k < WORD_BITS && k < m && n + k >= m);

    let mut vp: u64 = !0u64 << (WORD_BITS - k - 1);
    let mut vn: u64 = 0;
    let mut dist = k;
    let diagonal_mask = 1u64 << 63;
    let mut horizontal_mask = 1u64 << 62;
    let mut start = k as isize + 1 - WORD_BITS as isize;
    // the score can still fall by one per remaining column
    let break_score = k + n - (m - k);
    let diagonal_cols = m - k;

    let mut over = false;
    for_each_symbol(text, |j, c| {
        if over {
            return;
        }
        let x = pattern.matches(start, c);
        let d0 = ((x & vp).wrapping_add(vp) ^ vp) | x | vn;
        let hp = vn | !(d0 | vp);
        let hn = d0 & vp;
        if j < diagonal_cols {
            dist += (d0 & diagonal_mask == 0) as usize;
        } else {
            dist += (hp & horizontal_mask != 0) as usize;
            dist -= (hn & horizontal_mask != 0) as usize;
            horizontal_mask >>= 1;
        }
        if dist > break_score {
            over = true;
            return;
        }
        vp = hn | !((d0 >> 1) | hp);
        vn = (d0 >> 1) & hp;
        start += 1;
    });
    if over {
        usize::MAX
    } else {
        dist
    }
}
