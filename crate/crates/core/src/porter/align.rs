//! Minimum-cost monotone alignment of two token sequences.
//!
//! Moves and costs:
//!
//! | move      | shape | condition                         | cost |
//! |-----------|-------|-----------------------------------|------|
//! | one-one   | 1→1   | tokens equal                      | 0    |
//! | merge     | k→1   | concatenated sources equal dest   | 1    |
//! | split     | 1→k   | source equals concatenated dests  | 1    |
//! | modified  | 1→1   | tokens differ                     | 2    |
//! | gap       | 1→0 or 0→1 |                              | 2    |
//!
//! Group sizes run from 2 to `max_group`. Among equal-cost alignments the
//! first move is chosen by the preference one-one > merge > split >
//! modified > source gap > dest gap, smaller groups first.

use std::ops::Range;

pub const COST_EQUAL: u32 = 0;
pub const COST_GROUP: u32 = 1;
pub const COST_MODIFIED: u32 = 2;
pub const COST_GAP: u32 = 2;

pub const DEFAULT_MAX_GROUP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    OneOne,
    Merge,
    Split,
    Modified,
    GapSource,
    GapDest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub source: Range<usize>,
    pub dest: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAlignment {
    pub moves: Vec<Move>,
    pub cost: u32,
}

struct Table<'a> {
    src: &'a [String],
    dst: &'a [String],
    max_group: usize,
    width: usize,
    best: Vec<u32>,
}

impl Table<'_> {
    fn at(&self, i: usize, j: usize) -> u32 {
        self.best[i * self.width + j]
    }

    /// Candidate moves from (i, j) in preference order, with their cost.
    fn moves(&self, i: usize, j: usize) -> Vec<(Move, u32)> {
        let (n, m) = (self.src.len(), self.dst.len());
        let mut out = Vec::new();
        if i < n && j < m {
            let one = |kind| Move {
                kind,
                source: i..i + 1,
                dest: j..j + 1,
            };
            if self.src[i] == self.dst[j] {
                out.push((one(MoveKind::OneOne), COST_EQUAL));
            }
            for k in 2..=self.max_group.min(n - i) {
                if concat_equals(&self.src[i..i + k], &self.dst[j]) {
                    out.push((
                        Move {
                            kind: MoveKind::Merge,
                            source: i..i + k,
                            dest: j..j + 1,
                        },
                        COST_GROUP,
                    ));
                }
            }
            for k in 2..=self.max_group.min(m - j) {
                if concat_equals(&self.dst[j..j + k], &self.src[i]) {
                    out.push((
                        Move {
                            kind: MoveKind::Split,
                            source: i..i + 1,
                            dest: j..j + k,
                        },
                        COST_GROUP,
                    ));
                }
            }
            if self.src[i] != self.dst[j] {
                out.push((one(MoveKind::Modified), COST_MODIFIED));
            }
        }
        if i < n {
            out.push((
                Move {
                    kind: MoveKind::GapSource,
                    source: i..i + 1,
                    dest: j..j,
                },
                COST_GAP,
            ));
        }
        if j < m {
            out.push((
                Move {
                    kind: MoveKind::GapDest,
                    source: i..i,
                    dest: j..j + 1,
                },
                COST_GAP,
            ));
        }
        out
    }
}

fn concat_equals(parts: &[String], whole: &str) -> bool {
    let mut rest = whole;
    for p in parts {
        match rest.strip_prefix(p.as_str()) {
            Some(r) => rest = r,
            None => return false,
        }
    }
    rest.is_empty()
}

/// Align two (already normalized) token sequences.
pub fn align_tokens(src: &[String], dst: &[String], max_group: usize) -> TokenAlignment {
    let (n, m) = (src.len(), dst.len());
    let width = m + 1;
    // TODO: restrict the table to a band around the diagonal; the full table
    // is quadratic in memory for long works.
    let mut table = Table {
        src,
        dst,
        max_group: max_group.max(1),
        width,
        best: vec![0; (n + 1) * width],
    };
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let best = table
                .moves(i, j)
                .into_iter()
                .map(|(mv, cost)| cost + table.at(mv.source.end, mv.dest.end))
                .min()
                .expect("some move is always available before the end");
            table.best[i * width + j] = best;
        }
    }
    let mut moves = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let target = table.at(i, j);
        let (mv, _) = table
            .moves(i, j)
            .into_iter()
            .find(|(mv, cost)| cost + table.at(mv.source.end, mv.dest.end) == target)
            .expect("the optimum is reachable");
        i = mv.source.end;
        j = mv.dest.end;
        moves.push(mv);
    }
    TokenAlignment {
        moves,
        cost: table.at(0, 0),
    }
}
