//! Incremental edit distance between two long strings that change one symbol
//! at a time.
//!
//! Rows of the alignment table follow `s`, columns follow `t`. With
//! `F(i, j) = LD(s[..i], t[..j])` and `B(i, j) = LD(s[i..], t[j..])`, a cell
//! lies on an alignment within `g` of optimal iff `F + B <= ld + g`. Those
//! cells form a narrow corridor around the optimal paths, and every row and
//! column of it is an interval that only moves forward.
//!
//! For each column we store a hull of rows with `[F, B]` plus lazy offsets.
//! The invariant: a stored cell passes `F + B <= ld + margin` exactly when it
//! is in the true corridor at that margin, and then its values are exact.
//! With `margin >= 2` the distance after any single edit of either string is
//! the minimum over one line of the corridor, because every alignment that
//! improves on `ld + 1` stays within 2 of the old optimum away from the
//! edited line.
//!
//! Folding in an adopted edit recomputes lines on both sides of it until the
//! new values equal the old ones plus the change in distance; further lines
//! only get their offsets bumped. The guaranteed margin drops by
//! `1 + change` per fold, and the corridor is rebuilt from two banded
//! bit-parallel passes once it falls below 2.

use std::cmp::{max, min};

use crate::bitstring::{Bitstring, EditProposal};
use crate::distance::{advance_block, Vertical};

const INF: i32 = 1 << 29;
const QUERY_MARGIN: i32 = 2;

#[derive(Clone, Debug, Default)]
struct Column {
    lo: i32,
    df: i32,
    db: i32,
    cells: Vec<[i32; 2]>,
}

impl Column {
    #[inline]
    fn get(&self, row: i32) -> (i32, i32) {
        let k = row - self.lo;
        if k < 0 || k as usize >= self.cells.len() {
            return (INF, INF);
        }
        let [f, b] = self.cells[k as usize];
        (f + self.df, b + self.db)
    }

    #[inline]
    fn usable(&self, row: i32, limit: i32) -> Option<(i32, i32)> {
        let (f, b) = self.get(row);
        (f + b <= limit).then_some((f, b))
    }

    fn min_usable(&self, limit: i32) -> i32 {
        let bias = limit - self.df - self.db;
        self.cells
            .iter()
            .position(|&[f, b]| f + b <= bias)
            .map_or(INF, |k| self.lo + k as i32)
    }

    fn max_usable(&self, limit: i32) -> i32 {
        let bias = limit - self.df - self.db;
        self.cells
            .iter()
            .rposition(|&[f, b]| f + b <= bias)
            .map_or(-1, |k| self.lo + k as i32)
    }
}

/// Values along one row or column, `INF` outside the stored range.
#[derive(Clone, Debug, Default)]
struct Line {
    start: i32,
    vals: Vec<i32>,
}

impl Line {
    #[inline]
    fn at(&self, k: i32) -> i32 {
        let idx = k - self.start;
        if idx < 0 || idx as usize >= self.vals.len() {
            INF
        } else {
            self.vals[idx as usize]
        }
    }

    fn end(&self) -> i32 {
        self.start + self.vals.len() as i32
    }
}

/// `min_k F'(k) + next(k)` where `F'` extends `prev` by one symbol `x`
/// against the other string (`along(k)` is its symbol `k`, `len` its length).
fn step_min(prev: &Line, next: &Line, x: bool, along: impl Fn(usize) -> bool, len: i32) -> i32 {
    let lo = min(prev.start, next.start).max(0);
    let hi = max(prev.end(), next.end()).min(len);
    let mut best = INF;
    let mut up = INF;
    for k in lo..=hi {
        let mut f = prev.at(k) + 1;
        if k > 0 {
            f = min(f, prev.at(k - 1) + (along(k as usize - 1) != x) as i32);
        }
        f = min(f, up + 1);
        best = min(best, f + next.at(k));
        up = f;
    }
    best
}

fn sum_min(a: &Line, b: &Line) -> i32 {
    let lo = max(a.start, b.start);
    let hi = min(a.end(), b.end());
    (lo..hi).map(|k| a.at(k) + b.at(k)).min().unwrap_or(INF)
}

#[derive(Debug)]
pub(crate) struct Corridor {
    t: Bitstring,
    s: Bitstring,
    ld: i32,
    margin: i32,
    target: i32,
    cols: Vec<Column>,
    passes: Box<[BandPass; 2]>,
}

impl Corridor {
    /// Builds the corridor of `t` against `s`, whose distance is `ld`, with
    /// room for `target_margin` folds' worth of slack.
    pub(crate) fn new(t: &Bitstring, s: &Bitstring, ld: usize, target_margin: usize) -> Self {
        let mut c = Corridor {
            t: t.clone(),
            s: s.clone(),
            ld: ld as i32,
            margin: 0,
            target: max(target_margin as i32, QUERY_MARGIN),
            cols: Vec::new(),
            passes: Box::default(),
        };
        c.rebuild();
        c
    }

    pub(crate) fn tracks(&self, t: &Bitstring, s: &Bitstring, ld: usize) -> bool {
        self.ld as usize == ld && self.t == *t && self.s == *s
    }

    /// Exact distance after applying `edit` to `t` (`on_t`) or to `s`.
    pub(crate) fn distance_after(&mut self, on_t: bool, edit: &EditProposal) -> usize {
        if self.margin < QUERY_MARGIN {
            self.rebuild();
        }
        let limit = self.ld + self.margin;
        let d = if on_t { self.query_column(edit, limit) } else { self.query_row(edit, limit) };
        debug_assert!(d < INF / 2);
        d as usize
    }

    /// Folds in `edit`, whose resulting distance `new_ld` was returned by
    /// [`Corridor::distance_after`].
    pub(crate) fn commit(&mut self, on_t: bool, edit: &EditProposal, new_ld: usize) {
        let new_ld = new_ld as i32;
        let kept = self.margin - 1 - (new_ld - self.ld);
        if kept < 0 {
            if on_t {
                self.t = self.t.apply(edit).expect("edit valid for tracked string");
            } else {
                self.s = self.s.apply(edit).expect("edit valid for tracked string");
            }
            self.ld = new_ld;
            self.rebuild();
        } else if on_t {
            self.commit_column(edit, new_ld, kept);
        } else {
            self.commit_row(edit, new_ld, kept);
        }
    }

    fn f_column(&self, j: usize, limit: i32) -> Line {
        self.column_line(j, limit, 0)
    }

    fn b_column(&self, j: usize, limit: i32) -> Line {
        self.column_line(j, limit, 1)
    }

    fn column_line(&self, j: usize, limit: i32, which: usize) -> Line {
        let col = &self.cols[j];
        let vals = (0..col.cells.len() as i32)
            .map(|k| match col.usable(col.lo + k, limit) {
                Some((f, b)) => [f, b][which],
                None => INF,
            })
            .collect();
        Line { start: col.lo, vals }
    }

    fn row_line(&self, row: i32, from: usize, to: usize, limit: i32, which: usize) -> Line {
        let vals = (from..=to)
            .map(|j| match self.cols[j].usable(row, limit) {
                Some((f, b)) => [f, b][which],
                None => INF,
            })
            .collect();
        Line { start: from as i32, vals }
    }

    /// First column whose corridor reaches down to `row` or beyond.
    fn first_col_reaching(&self, row: i32, limit: i32) -> usize {
        self.cols.partition_point(|c| c.max_usable(limit) < row)
    }

    /// Last column whose corridor starts at or above `row`, if any.
    fn last_col_starting_by(&self, row: i32, limit: i32) -> Option<usize> {
        self.cols.partition_point(|c| c.min_usable(limit) <= row).checked_sub(1)
    }

    fn query_column(&self, edit: &EditProposal, limit: i32) -> i32 {
        let p = edit.position();
        let s = &self.s;
        let m = s.len() as i32;
        match *edit {
            EditProposal::Modify { .. } => step_min(
                &self.f_column(p, limit),
                &self.b_column(p + 1, limit),
                !self.t.get(p),
                |i| s.get(i),
                m,
            ),
            EditProposal::Remove { .. } => {
                sum_min(&self.f_column(p, limit), &self.b_column(p + 1, limit))
            }
            EditProposal::Expand { bit, .. } => step_min(
                &self.f_column(p, limit),
                &self.b_column(p, limit),
                bit,
                |i| s.get(i),
                m,
            ),
        }
    }

    fn query_row(&self, edit: &EditProposal, limit: i32) -> i32 {
        let q = edit.position() as i32;
        let from = self.first_col_reaching(q, limit);
        let to = self
            .last_col_starting_by(q + 1, limit)
            .expect("corridor covers every row");
        let t = &self.t;
        let n = t.len() as i32;
        let f = self.row_line(q, from, to, limit, 0);
        match *edit {
            EditProposal::Modify { .. } => {
                let b = self.row_line(q + 1, from, to, limit, 1);
                step_min(&f, &b, !self.s.get(q as usize), |j| t.get(j), n)
            }
            EditProposal::Remove { .. } => {
                sum_min(&f, &self.row_line(q + 1, from, to, limit, 1))
            }
            EditProposal::Expand { bit, .. } => {
                let b = self.row_line(q, from, to, limit, 1);
                step_min(&f, &b, bit, |j| t.get(j), n)
            }
        }
    }

    fn commit_column(&mut self, edit: &EditProposal, new_ld: i32, kept: i32) {
        let c = new_ld - self.ld;
        let l_old = self.ld + self.margin;
        let l_new = new_ld + kept;
        let l_heal = self.ld + kept;
        let t2 = self.t.apply(edit).expect("edit valid for tracked string");
        let n = self.t.len() as i32;
        let n2 = t2.len() as i32;
        let m = self.s.len() as i32;
        let delta = n2 - n;
        let p = edit.position() as i32;
        let s = &self.s;

        // Forward: new columns p+1.. recompute F against the old B.
        let mut prev = self.f_column(p as usize, l_old);
        let mut forward = Vec::new();
        let mut heal_fwd = n2 + 1;
        for j2 in p + 1..=n2 {
            let old = &self.cols[(j2 - delta) as usize];
            let (a, z) = (old.min_usable(l_old), old.max_usable(l_old));
            let ch = t2.get(j2 as usize - 1);
            let mut cells = vec![[INF, INF]; (z - a + 1) as usize];
            let mut up = INF;
            let mut healed = true;
            for i in a..=z {
                let (fo, bo) = old.get(i);
                let mut f = INF;
                if fo + bo <= l_old {
                    f = min(prev.at(i) + 1, up + 1);
                    if i > 0 {
                        f = min(f, prev.at(i - 1) + (s.get(i as usize - 1) != ch) as i32);
                    }
                    cells[(i - a) as usize] = [f, bo];
                }
                up = f;
                let now = f + bo <= l_new;
                if now != (fo + bo <= l_heal) || (now && f != fo + c) {
                    healed = false;
                }
            }
            if healed {
                heal_fwd = j2;
                break;
            }
            prev = Line { start: a, vals: cells.iter().map(|x| x[0]).collect() };
            forward.push(Column { lo: a, df: 0, db: 0, cells });
        }

        // Backward: new columns ..=start recompute B against the old F.
        let is_remove = matches!(edit, EditProposal::Remove { .. });
        let start = if is_remove { p - 1 } else { p };
        let mut backward = Vec::new();
        let mut heal_bwd = -1;
        if start >= 0 {
            let mut prev = self.b_column((start + 1 - delta) as usize, l_old);
            for j2 in (0..=start).rev() {
                let old = &self.cols[j2 as usize];
                let (a, z) = (old.min_usable(l_old), old.max_usable(l_old));
                let ch = t2.get(j2 as usize);
                let mut cells = vec![[INF, INF]; (z - a + 1) as usize];
                let mut down = INF;
                let mut healed = true;
                for i in (a..=z).rev() {
                    let (fo, bo) = old.get(i);
                    let mut b = INF;
                    if fo + bo <= l_old {
                        b = min(prev.at(i) + 1, down + 1);
                        if i < m {
                            b = min(b, prev.at(i + 1) + (s.get(i as usize) != ch) as i32);
                        }
                        cells[(i - a) as usize] = [fo, b];
                    }
                    down = b;
                    let now = fo + b <= l_new;
                    if now != (fo + bo <= l_heal) || (now && b != bo + c) {
                        healed = false;
                    }
                }
                if healed {
                    heal_bwd = j2;
                    break;
                }
                prev = Line { start: a, vals: cells.iter().map(|x| x[1]).collect() };
                backward.push(Column { lo: a, df: 0, db: 0, cells });
            }
        }

        let mut middle: Vec<Column> = backward.into_iter().rev().collect();
        if is_remove {
            let (left, right) = (&self.cols[p as usize], &self.cols[p as usize + 1]);
            let a = max(left.min_usable(l_old), right.min_usable(l_old));
            let z = min(left.max_usable(l_old), right.max_usable(l_old));
            let cells = (a..=z)
                .map(|i| match (left.usable(i, l_old), right.usable(i, l_old)) {
                    (Some((f, _)), Some((_, b))) => [f, b],
                    _ => [INF, INF],
                })
                .collect();
            middle.push(Column { lo: a, df: 0, db: 0, cells });
        }
        middle.extend(forward);

        let from = (heal_bwd + 1) as usize;
        let to = if heal_fwd <= n2 { (heal_fwd - delta) as usize } else { self.cols.len() };
        let inserted = middle.len();

        if from <= to {
            self.cols.splice(from..to, middle);
        } else {
            // An insertion healed on both sides of the same old column, which
            // therefore appears twice.
            let overlap = self.cols[to..from].to_vec();
            self.cols.splice(from..from, middle.into_iter().chain(overlap));
        }
        for col in &mut self.cols[..from] {
            col.db += c;
        }
        for col in &mut self.cols[from + inserted..] {
            col.df += c;
        }
        debug_assert_eq!(self.cols.len() as i32, n2 + 1);
        self.t = t2;
        self.ld = new_ld;
        self.margin = kept;
    }

    fn commit_row(&mut self, edit: &EditProposal, new_ld: i32, kept: i32) {
        let c = new_ld - self.ld;
        let l_old = self.ld + self.margin;
        let l_new = new_ld + kept;
        let l_heal = self.ld + kept;
        let s2 = self.s.apply(edit).expect("edit valid for tracked string");
        let m2 = s2.len() as i32;
        let n = self.t.len() as i32;
        let q = edit.position() as i32;
        let (width, delta) = match edit {
            EditProposal::Modify { .. } => (1, 0),
            EditProposal::Remove { .. } => (0, -1),
            EditProposal::Expand { .. } => (1, 1),
        };
        // New rows <= q keep their F, new rows >= q + width keep the B of old
        // row r - delta. A new row is a candidate for the corridor only if
        // every old row it inherits from was in the old one.
        let cols = &self.cols;
        let cand = |j: usize, r: i32| -> Option<(i32, i32)> {
            let mut out = (INF, INF);
            if r <= q {
                out.0 = cols[j].usable(r, l_old)?.0;
            }
            if r >= q + width {
                out.1 = cols[j].usable(r - delta, l_old)?.1;
            }
            Some(out)
        };
        let t = &self.t;

        // B of new rows <= q + width - 1, downward from the last column that
        // has such candidates.
        let top = q + width - 1;
        let mut b_start = 0usize;
        let mut b_res: Vec<Line> = Vec::new();
        let mut heal_bwd = -1i32;
        if top >= 0 {
            b_start = self.last_col_starting_by(top, l_old).expect("corridor covers every row");
            let mut next = Line::default();
            for j in (0..=b_start).rev() {
                let col = &cols[j];
                let (a, z) = (col.min_usable(l_old), col.max_usable(l_old));
                let zb = min(z, top);
                let mut vals = vec![INF; max(zb - a + 1, 0) as usize];
                let mut down = if zb + 1 == q + width { cand(j, zb + 1).map_or(INF, |x| x.1) } else { INF };
                let ju = j + 1;
                let b_next = |r: i32, next: &Line| -> i32 {
                    if ju as i32 > n {
                        INF
                    } else if r >= q + width {
                        cand(ju, r).map_or(INF, |x| x.1)
                    } else {
                        next.at(r)
                    }
                };
                for i in (a..=zb).rev() {
                    let mut b = INF;
                    if cand(j, i).is_some() {
                        b = min(b_next(i, &next) + 1, down + 1);
                        if (j as i32) < n && i < m2 {
                            let cost = (s2.get(i as usize) != t.get(j)) as i32;
                            b = min(b, b_next(i + 1, &next) + cost);
                        }
                        vals[(i - a) as usize] = b;
                    }
                    down = b;
                }
                let line = Line { start: a, vals };
                if z < q {
                    let healed = (a..=z).all(|i| {
                        let (fo, bo) = col.get(i);
                        let b = line.at(i);
                        let now = fo + bo <= l_old && fo + b <= l_new;
                        now == (fo + bo <= l_heal) && (!now || b == bo + c)
                    });
                    if healed {
                        heal_bwd = j as i32;
                        break;
                    }
                }
                b_res.push(line.clone());
                next = line;
            }
        }

        // F of new rows >= q + 1, upward from the first column that has such
        // candidates.
        let f_start = self.first_col_reaching(q + 1 - delta, l_old);
        let mut f_res: Vec<Line> = Vec::new();
        let mut heal_fwd = n + 1;
        let mut prev = Line::default();
        for j in f_start..=n as usize {
            let col = &cols[j];
            let (a, z) = (col.min_usable(l_old), col.max_usable(l_old));
            let (ra, rz) = (max(q + 1, a + delta), z + delta);
            let mut vals = vec![INF; max(rz - ra + 1, 0) as usize];
            let f_prev = |r: i32, prev: &Line| -> i32 {
                if j == 0 {
                    INF
                } else if r <= q {
                    cand(j - 1, r).map_or(INF, |x| x.0)
                } else {
                    prev.at(r)
                }
            };
            let mut up = if ra - 1 <= q { cand(j, ra - 1).map_or(INF, |x| x.0) } else { INF };
            for r in ra..=rz {
                let mut f = INF;
                if cand(j, r).is_some() {
                    f = min(f_prev(r, &prev) + 1, up + 1);
                    if j > 0 {
                        let cost = (s2.get(r as usize - 1) != t.get(j - 1)) as i32;
                        f = min(f, f_prev(r - 1, &prev) + cost);
                    }
                    vals[(r - ra) as usize] = f;
                }
                up = f;
            }
            let line = Line { start: ra, vals };
            if a > q {
                let healed = (a..=z).all(|i| {
                    let (fo, bo) = col.get(i);
                    let f = line.at(i + delta);
                    let now = fo + bo <= l_old && f + bo <= l_new;
                    now == (fo + bo <= l_heal) && (!now || f == fo + c)
                });
                if healed {
                    heal_fwd = j as i32;
                    break;
                }
            }
            f_res.push(line.clone());
            prev = line;
        }

        let mut rebuilt = Vec::new();

        for j in (heal_bwd + 1) as usize..heal_fwd as usize {
            let col = &cols[j];
            let (a, z) = (col.min_usable(l_old), col.max_usable(l_old));
            let ra = max(min(a, a + delta), 0);
            let rz = min(max(z, z + delta), m2);
            let mut lo = None;
            let mut cells = Vec::new();
            for r in ra..=rz {
                let Some((mut f, mut b)) = cand(j, r) else {
                    if lo.is_some() {
                        cells.push([INF, INF]);
                    }
                    continue;
                };
                if r > q {
                    f = f_res[j - f_start].at(r);
                }
                if r <= top {
                    b = b_res[b_start - j].at(r);
                }
                lo.get_or_insert(r);
                cells.push([f, b]);
            }
            while cells.last().is_some_and(|&[f, _]| f >= INF) {
                cells.pop();
            }
            rebuilt.push(Column { lo: lo.unwrap_or(0), df: 0, db: 0, cells });
        }

        let from = (heal_bwd + 1) as usize;
        let to = from + rebuilt.len();
        for (slot, col) in self.cols[from..to].iter_mut().zip(rebuilt) {
            *slot = col;
        }
        for col in &mut self.cols[..from] {
            col.db += c;
        }
        for col in &mut self.cols[to..] {
            col.lo += delta;
            col.df += c;
        }
        self.s = s2;
        self.ld = new_ld;
        self.margin = kept;
    }

    /// Recomputes every column from scratch at the target margin.
    fn rebuild(&mut self) {
        let n = self.t.len();
        let m = self.s.len();
        let cap = self.ld + self.target;
        let d = n as i64 - m as i64;
        let half = (cap as i64 - d.abs()) / 2;
        let (e_lo, e_hi) = (min(0, d) - half, max(0, d) + half);
        let [fwd, bwd] = &mut *self.passes;
        fwd.run(&self.s, &self.t, e_lo, e_hi);
        let rs = Bitstring::from_bits((0..m).rev().map(|i| self.s.get(i))).expect("non-empty");
        let rt = Bitstring::from_bits((0..n).rev().map(|i| self.t.get(i))).expect("non-empty");
        bwd.run(&rs, &rt, e_lo, e_hi);
        let (fwd, bwd) = (&*fwd, &*bwd);

        // The first and last corridor rows never decrease from one column to
        // the next, and an alignment reaching the last row of a column runs
        // down to it from a row the previous column already covers. So the
        // scan for `lo` resumes at the previous `lo`, and everything from the
        // previous `hi` up to the new one is inside the corridor.
        let mut spare = std::mem::take(&mut self.cols);
        let mut cols = Vec::with_capacity(n + 1);
        let (mut prev_lo, mut prev_hi) = (0usize, 0usize);
        for j in 0..=n {
            let jr = n - j;
            let sum = |i: usize| fwd.value(j, i) + bwd.value(jr, m - i);
            let r0 = max(prev_lo as i64, j as i64 - e_hi) as usize;
            let r1 = min(m as i64, j as i64 - e_lo) as usize;
            let mut lo = r0;
            loop {
                let v = sum(lo);
                if v <= cap {
                    break;
                }
                // One row changes F + B by at most 2.
                lo += if v >= INF { 1 } else { ((v - cap + 1) / 2) as usize };
                assert!(lo <= r1, "optimal alignment crosses every column inside the band");
            }
            let mut cells = spare.get_mut(j).map(|c| std::mem::take(&mut c.cells)).unwrap_or_default();
            cells.clear();
            cells.reserve(prev_hi.saturating_sub(lo) + 16);
            let (mut f, mut b) = (fwd.value(j, lo), bwd.value(jr, m - lo));
            let (fcol, bcol) = (fwd.column(j), bwd.column(jr));
            let mut i = lo;
            loop {
                cells.push([f, b]);
                if i == r1 {
                    break;
                }
                let nf = f + fcol.delta(i);
                let nb = b - bcol.delta(m - i - 1);
                if i >= prev_hi && nf + nb > cap {
                    break;
                }
                (f, b, i) = (nf, nb, i + 1);
            }
            (prev_lo, prev_hi) = (lo, i);
            cols.push(Column { lo: lo as i32, df: 0, db: 0, cells });
        }
        self.cols = cols;
        self.margin = self.target;
    }
}

/// Bit-parallel table of `pattern` against `text` restricted to the diagonal
/// band `j - i` in `[e_lo, e_hi]`. Cells just outside the band are treated as
/// never below their true value, which keeps every value inside the band an
/// upper bound and exact wherever an optimal path to the cell stays inside.
struct BandColumn<'a> {
    blocks: &'a [(Vertical, i32)],
    /// First row covered by `blocks`, minus one.
    first: usize,
}

impl BandColumn<'_> {
    /// `value(i + 1) - value(i)`; row `i + 1` must be inside the band.
    #[inline]
    fn delta(&self, i: usize) -> i32 {
        let (v, _) = self.blocks[(i - self.first) / 64];
        ((v.pos >> (i % 64)) & 1) as i32 - ((v.neg >> (i % 64)) & 1) as i32
    }
}

#[derive(Debug, Default)]
struct BandPass {
    m: usize,
    first: Vec<u32>,
    offset: Vec<u32>,
    blocks: Vec<(Vertical, i32)>,
    eq: Vec<[u64; 2]>,
    state: Vec<(Vertical, i32)>,
}

impl BandPass {
    /// Fills the table, reusing the buffers of an earlier run.
    fn run(&mut self, pattern: &Bitstring, text: &Bitstring, e_lo: i64, e_hi: i64) {
        let m = pattern.len();
        let n = text.len();
        let nb = m.div_ceil(64);
        let rows_in = |b: usize| min(64, m - 64 * b);
        let mask = |b: usize| if rows_in(b) == 64 { !0 } else { (1u64 << rows_in(b)) - 1 };
        // Active blocks at column j, as an inclusive range (empty if lo > hi).
        let range = |j: usize| -> (usize, usize) {
            let r_lo = max(1, j as i64 - e_hi);
            let r_hi = min(m as i64, j as i64 - e_lo);
            if r_lo > r_hi {
                (1, 0)
            } else {
                (((r_lo - 1) / 64) as usize, ((r_hi - 1) / 64) as usize)
            }
        };

        self.m = m;
        self.eq.clear();
        self.eq.extend(pattern.words().iter().enumerate().map(|(b, &w)| [!w & mask(b), w]));
        self.state.clear();
        self.state.resize(nb, (Vertical { pos: 0, neg: 0 }, 0));
        self.first.clear();
        self.offset.clear();
        self.blocks.clear();
        self.blocks.reserve((n + 1) * (((e_hi - e_lo) as usize).div_ceil(64) + 2));
        self.offset.push(0);
        let last_shift = (rows_in(nb - 1) - 1) as u32;

        let state = &mut self.state;
        let (mut cf, mut cl) = range(0);
        for b in cf..=cl {
            state[b] = (Vertical { pos: mask(b), neg: 0 }, (64 * b + rows_in(b)) as i32);
        }
        Self::store(&mut self.first, &mut self.offset, &mut self.blocks, state, cf, cl);
        for j in 1..=n {
            let ch = text.get(j - 1) as usize;
            let (nf, nl) = range(j);
            if nf <= nl {
                let add_from = if cf <= cl { cl + 1 } else { nf };
                for b in add_from..=nl {
                    // Block b - 1 is active or was just added, and holds column j - 1.
                    let base = if b == 0 { j as i32 - 1 } else { state[b - 1].1 };
                    state[b] = (Vertical { pos: mask(b), neg: 0 }, base + rows_in(b) as i32);
                }
                let (mut hp, mut hn) = (1u64, 0u64);
                for (b, ((v, bottom), eq)) in
                    (nf..=nl).zip(state[nf..=nl].iter_mut().zip(&self.eq[nf..=nl]))
                {
                    let shift = if b + 1 == nb { last_shift } else { 63 };
                    (hp, hn) = advance_block(eq[ch], v, hp, hn, shift);
                    *bottom += hp as i32 - hn as i32;
                }
            }
            (cf, cl) = (nf, nl);
            Self::store(&mut self.first, &mut self.offset, &mut self.blocks, state, cf, cl);
        }
    }

    fn store(
        first: &mut Vec<u32>,
        offset: &mut Vec<u32>,
        blocks: &mut Vec<(Vertical, i32)>,
        state: &[(Vertical, i32)],
        f: usize,
        l: usize,
    ) {
        first.push(f as u32);
        if f <= l {
            blocks.extend_from_slice(&state[f..=l]);
        }
        offset.push(blocks.len() as u32);
    }

    fn column(&self, j: usize) -> BandColumn<'_> {
        let range = self.offset[j] as usize..self.offset[j + 1] as usize;
        BandColumn { blocks: &self.blocks[range], first: self.first[j] as usize * 64 }
    }

    /// Table value at row `i`, column `j`; `INF` outside the band.
    fn value(&self, j: usize, i: usize) -> i32 {
        if i == 0 {
            return j as i32;
        }
        let b = (i - 1) / 64;
        let first = self.first[j] as usize;
        let count = (self.offset[j + 1] - self.offset[j]) as usize;
        if b < first || b >= first + count {
            return INF;
        }
        let (v, bottom) = self.blocks[self.offset[j] as usize + b - first];
        let k = (i - 1) % 64;
        let last = min(64, self.m - 64 * b) - 1;
        if k == last {
            return bottom;
        }
        let upto = if last == 63 { !0 } else { (1u64 << (last + 1)) - 1 };
        let above = upto & !((1u64 << (k + 1)) - 1);
        bottom - ((v.pos & above).count_ones() as i32 - (v.neg & above).count_ones() as i32)
    }
}
