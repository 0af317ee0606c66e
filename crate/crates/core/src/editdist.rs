//! Weighted token edit distance over terminal kinds.

use crate::grammar::{GrammarSpec, TermId};
use crate::lexer::Token;

fn ins(g: &GrammarSpec, t: TermId) -> u32 {
    if t == g.eof {
        1
    } else {
        g.insert_cost(t)
    }
}

fn del(g: &GrammarSpec, t: TermId) -> u32 {
    if t == g.eof {
        1
    } else {
        g.delete_cost(t)
    }
}

fn sub(g: &GrammarSpec, a: TermId, b: TermId) -> u32 {
    if a == b {
        0
    } else if a == g.eof || b == g.eof {
        del(g, a) + ins(g, b)
    } else {
        g.replace_cost(a, b)
    }
}

/// Cost of turning `a` into `b`.
pub fn token_edit_distance(g: &GrammarSpec, a: &[Token], b: &[Token]) -> u32 {
    let mut row: Vec<u32> = std::iter::once(0)
        .chain(b.iter().scan(0, |acc, t| {
            *acc += ins(g, t.kind);
            Some(*acc)
        }))
        .collect();
    for x in a {
        let mut diag = row[0];
        row[0] += del(g, x.kind);
        for (j, y) in b.iter().enumerate() {
            let v = (diag + sub(g, x.kind, y.kind)).min(row[j + 1] + del(g, x.kind)).min(row[j] + ins(g, y.kind));
            diag = row[j + 1];
            row[j + 1] = v;
        }
    }
    row[b.len()]
}

/// Cheapest rewrite of some prefix of `tgt` into `gen`.
pub fn min_prefix_distance(g: &GrammarSpec, gen: &[Token], tgt: &[Token]) -> u32 {
    let mut row = PrefixRow::new(g, tgt);
    for t in gen {
        row = row.push(g, tgt, t.kind);
    }
    row.min()
}

/// One DP row of `EditDist(gen, tgt[..j])` for every `j`, extended one
/// generated token at a time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrefixRow(pub Vec<u32>);

impl PrefixRow {
    pub fn new(g: &GrammarSpec, tgt: &[Token]) -> Self {
        // gen = [], so row[j] = deleting tgt[..j]
        let mut v = Vec::with_capacity(tgt.len() + 1);
        let mut acc = 0;
        v.push(0);
        for t in tgt {
            acc += del(g, t.kind);
            v.push(acc);
        }
        PrefixRow(v)
    }

    pub fn push(&self, g: &GrammarSpec, tgt: &[Token], x: TermId) -> Self {
        let prev = &self.0;
        let mut v = Vec::with_capacity(prev.len());
        v.push(prev[0] + ins(g, x));
        for (j, y) in tgt.iter().enumerate() {
            let c = (prev[j] + sub(g, y.kind, x)).min(prev[j + 1] + ins(g, x)).min(v[j] + del(g, y.kind));
            v.push(c);
        }
        PrefixRow(v)
    }

    pub fn min(&self) -> u32 {
        *self.0.iter().min().unwrap()
    }

    /// Distance to the whole target.
    pub fn full(&self) -> u32 {
        *self.0.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EditOp {
    Insert,
    Delete,
}

/// One step of an edit script. Inserts index the candidate; deletes index the
/// original.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edit {
    pub op: EditOp,
    pub terminal: TermId,
    pub index: usize,
}

/// Minimal-cost alignment of `a` to `b` expressed as inserts and deletes; a
/// substitution shows up as a delete followed by an insert.
pub fn edit_script(g: &GrammarSpec, a: &[Token], b: &[Token]) -> Vec<Edit> {
    let n = a.len();
    let m = b.len();
    let mut d = vec![vec![0u32; m + 1]; n + 1];
    for i in 1..=n {
        d[i][0] = d[i - 1][0] + del(g, a[i - 1].kind);
    }
    for j in 1..=m {
        d[0][j] = d[0][j - 1] + ins(g, b[j - 1].kind);
    }
    for i in 1..=n {
        for j in 1..=m {
            d[i][j] = (d[i - 1][j - 1] + sub(g, a[i - 1].kind, b[j - 1].kind))
                .min(d[i - 1][j] + del(g, a[i - 1].kind))
                .min(d[i][j - 1] + ins(g, b[j - 1].kind));
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && a[i - 1].kind == b[j - 1].kind && d[i][j] == d[i - 1][j - 1] {
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + sub(g, a[i - 1].kind, b[j - 1].kind) {
            out.push(Edit { op: EditOp::Insert, terminal: b[j - 1].kind, index: j - 1 });
            out.push(Edit { op: EditOp::Delete, terminal: a[i - 1].kind, index: i - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + del(g, a[i - 1].kind) {
            out.push(Edit { op: EditOp::Delete, terminal: a[i - 1].kind, index: i - 1 });
            i -= 1;
        } else {
            out.push(Edit { op: EditOp::Insert, terminal: b[j - 1].kind, index: j - 1 });
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Candidate positions holding tokens that were inserted or substituted.
pub fn changed_positions(g: &GrammarSpec, original: &[Token], candidate: &[Token]) -> Vec<usize> {
    edit_script(g, original, candidate)
        .into_iter()
        .filter(|e| e.op == EditOp::Insert)
        .map(|e| e.index)
        .collect()
}
