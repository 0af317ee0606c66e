//! Error-location prediction for edits beyond the backtracking window, and the
//! synthetic error injector used to train and evaluate it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{GrammarSpec, TermId};
use crate::lexer::{Lexer, Token};
use crate::rank::Abstraction;

/// Ranks token positions by how likely an edit belongs there.
pub trait Localizer {
    /// At most five `(index, confidence)` pairs, best first. Index `k` means
    /// the gap before token `k`; `k == toks.len()` is the end of input.
    fn predict(&self, toks: &[Token]) -> Vec<(usize, f64)>;
}

const MAGIC: &str = "FMND-LOC v1";
const BOS: &str = "<s>";
const EOS: &str = "</s>";

#[derive(Debug, Error, PartialEq)]
pub enum LocError {
    #[error("empty corpus")]
    Empty,
    #[error("bad model file, line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Interpolated add-alpha k-gram model in one reading direction.
#[derive(Clone, Debug, Default, PartialEq)]
struct Ngram {
    /// `counts[j]` maps the `j` preceding symbols to next-symbol counts.
    counts: Vec<BTreeMap<String, BTreeMap<String, u64>>>,
}

impl Ngram {
    fn new(k: usize) -> Self {
        Ngram { counts: vec![BTreeMap::new(); k + 1] }
    }

    fn observe(&mut self, seq: &[String]) {
        let k = self.counts.len() - 1;
        for i in k..seq.len() {
            for j in 0..=k {
                let ctx = seq[i - j..i].join(" ");
                *self.counts[j].entry(ctx).or_default().entry(seq[i].clone()).or_default() += 1;
            }
        }
    }

    fn prob(&self, ctx: &[String], sym: &str, alpha: f64, vocab: usize) -> f64 {
        let mut p = 0.0;
        let mut total = 0.0;
        for j in 0..self.counts.len() {
            let Some(row) = self.counts[j].get(&ctx[ctx.len() - j..].join(" ")) else { continue };
            let n: u64 = row.values().sum();
            let c = row.get(sym).copied().unwrap_or(0);
            let lambda = (1u64 << j) as f64;
            p += lambda * (c as f64 + alpha) / (n as f64 + alpha * vocab as f64);
            total += lambda;
        }
        if total == 0.0 {
            1.0 / vocab as f64
        } else {
            p / total
        }
    }
}

/// Scores each gap by how surprising its neighbours are when read forwards
/// and backwards.
#[derive(Clone, Debug, PartialEq)]
pub struct SurprisalLocalizer {
    pub k: usize,
    pub alpha: f64,
    pub top: usize,
    pub abstraction: Abstraction,
    vocab: usize,
    fwd: Ngram,
    bwd: Ngram,
    grammar_eof: TermId,
    names: Vec<String>,
}

impl SurprisalLocalizer {
    pub fn train(
        g: &GrammarSpec,
        abstraction: Abstraction,
        corpus: &[Vec<Token>],
        k: usize,
    ) -> Result<Self, LocError> {
        if corpus.is_empty() {
            return Err(LocError::Empty);
        }
        let names = (0..g.num_terminals()).map(|t| g.term_name(t as TermId).to_string()).collect();
        let mut m = SurprisalLocalizer {
            k,
            alpha: 0.1,
            top: 5,
            abstraction,
            vocab: 0,
            fwd: Ngram::new(k),
            bwd: Ngram::new(k),
            grammar_eof: g.eof,
            names,
        };
        let mut vocab = std::collections::BTreeSet::new();
        for toks in corpus {
            let syms = m.padded(toks);
            vocab.extend(syms.iter().cloned());
            m.fwd.observe(&syms);
            let mut rev = syms;
            rev.reverse();
            m.bwd.observe(&rev);
        }
        // one extra slot for symbols never seen in training
        m.vocab = vocab.len() + 1;
        Ok(m)
    }

    fn symbol(&self, t: &Token) -> String {
        match self.names[t.kind as usize].as_str() {
            "ident" => {
                let up = t.text.to_uppercase();
                if self.abstraction.keep.contains(&up) {
                    up
                } else {
                    "IDENT".into()
                }
            }
            "num" => "NUM".into(),
            "str" => "STR".into(),
            n => n.to_string(),
        }
    }

    /// `k` start markers, the symbols, `k` end markers.
    fn padded(&self, toks: &[Token]) -> Vec<String> {
        let mut v: Vec<String> = vec![BOS.to_string(); self.k];
        v.extend(toks.iter().filter(|t| t.kind != self.grammar_eof).map(|t| self.symbol(t)));
        v.extend(std::iter::repeat(EOS.to_string()).take(self.k));
        v
    }

    /// Surprisal of every gap `0..=n`.
    pub fn gap_surprisal(&self, toks: &[Token]) -> Vec<f64> {
        let toks: Vec<Token> = toks.iter().filter(|t| t.kind != self.grammar_eof).cloned().collect();
        let n = toks.len();
        let syms = self.padded(&toks);
        let mut rev = syms.clone();
        rev.reverse();
        let k = self.k;
        (0..=n)
            .map(|gap| {
                // forward: the symbol just after the gap given what precedes it
                let i = gap + k;
                let f = -self.fwd.prob(&syms[i - k..i], &syms[i], self.alpha, self.vocab).ln();
                // backward: the symbol just before the gap given what follows it
                let r = (n - gap) + k;
                let b = -self.bwd.prob(&rev[r - k..r], &rev[r], self.alpha, self.vocab).ln();
                f + b
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "k\t{}", self.k).unwrap();
        writeln!(s, "alpha\t{:?}", self.alpha).unwrap();
        writeln!(s, "top\t{}", self.top).unwrap();
        writeln!(s, "vocab\t{}", self.vocab).unwrap();
        writeln!(s, "eof\t{}", self.grammar_eof).unwrap();
        writeln!(s, "terminals\t{}", self.names.join(" ")).unwrap();
        writeln!(s, "keep\t{}", self.abstraction.keep.iter().cloned().collect::<Vec<_>>().join(" ")).unwrap();
        for (dir, m) in [("f", &self.fwd), ("b", &self.bwd)] {
            for (j, table) in m.counts.iter().enumerate() {
                for (ctx, row) in table {
                    let cells: Vec<String> = row.iter().map(|(sym, c)| format!("{sym}={c}")).collect();
                    writeln!(s, "{dir}{j}\t{ctx}\t{}", cells.join(" ")).unwrap();
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, LocError> {
        let bad = |line: usize, msg: &str| LocError::Format { line, msg: msg.to_string() };
        let mut it = text.lines().enumerate();
        if it.next().map(|(_, l)| l) != Some(MAGIC) {
            return Err(bad(1, "missing header"));
        }
        let mut field = |name: &str| -> Result<(usize, String), LocError> {
            let (i, l) = it.next().ok_or_else(|| bad(0, "truncated"))?;
            match l.split_once('\t') {
                Some((k, v)) if k == name => Ok((i + 1, v.to_string())),
                _ => Err(bad(i + 1, &format!("expected `{name}`"))),
            }
        };
        let num = |(ln, v): (usize, String)| v.parse::<usize>().map_err(|_| bad(ln, "bad number"));
        let k = num(field("k")?)?;
        let (ln, v) = field("alpha")?;
        let alpha: f64 = v.parse().map_err(|_| bad(ln, "bad alpha"))?;
        let top = num(field("top")?)?;
        let vocab = num(field("vocab")?)?;
        let grammar_eof = num(field("eof")?)? as TermId;
        let names: Vec<String> = field("terminals")?.1.split(' ').map(str::to_string).collect();
        let abstraction = Abstraction::new(field("keep")?.1.split_whitespace());
        let mut fwd = Ngram::new(k);
        let mut bwd = Ngram::new(k);
        for (i, l) in it {
            let parts: Vec<&str> = l.split('\t').collect();
            let [tag, ctx, cells] = parts.as_slice() else { return Err(bad(i + 1, "expected three fields")) };
            let (dir, j) = tag.split_at(1);
            let j: usize = j.parse().ok().filter(|&j| j <= k).ok_or_else(|| bad(i + 1, "bad level"))?;
            let m = match dir {
                "f" => &mut fwd,
                "b" => &mut bwd,
                _ => return Err(bad(i + 1, "bad direction")),
            };
            let row = m.counts[j].entry(ctx.to_string()).or_default();
            for cell in cells.split(' ') {
                let (sym, c) = cell.rsplit_once('=').ok_or_else(|| bad(i + 1, "bad cell"))?;
                row.insert(sym.to_string(), c.parse().map_err(|_| bad(i + 1, "bad count"))?);
            }
        }
        Ok(SurprisalLocalizer { k, alpha, top, abstraction, vocab, fwd, bwd, grammar_eof, names })
    }
}

impl Localizer for SurprisalLocalizer {
    fn predict(&self, toks: &[Token]) -> Vec<(usize, f64)> {
        if toks.iter().all(|t| t.kind == self.grammar_eof) {
            return Vec::new();
        }
        let s = self.gap_surprisal(toks);
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        // softmax over all gaps, reported for the best few
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = s.iter().map(|x| (x - hi).exp()).sum();
        idx.into_iter().take(self.top).map(|i| (i, (s[i] - hi).exp() / z)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InjectOp {
    Insert,
    Delete,
    Replace,
}

impl InjectOp {
    pub const ALL: [InjectOp; 3] = [InjectOp::Insert, InjectOp::Delete, InjectOp::Replace];

    pub fn name(self) -> &'static str {
        match self {
            InjectOp::Insert => "insert",
            InjectOp::Delete => "delete",
            InjectOp::Replace => "replace",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        InjectOp::ALL.into_iter().find(|o| o.name() == s)
    }
}

/// One synthetic edit. `position` indexes the original tokens; an insert
/// goes into the gap before that token. `terminal` is the inserted or the
/// replacement terminal, or the deleted one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectedEdit {
    pub op: InjectOp,
    pub position: usize,
    pub terminal: TermId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorInjection {
    pub original: Vec<Token>,
    pub broken: Vec<Token>,
    /// Sorted by position.
    pub edits: Vec<InjectedEdit>,
}

impl ErrorInjection {
    /// Gap indices in `broken` where each edit shows up.
    pub fn broken_positions(&self) -> Vec<usize> {
        let mut shift: isize = 0;
        let mut out = Vec::new();
        for e in &self.edits {
            let at = (e.position as isize + shift) as usize;
            out.push(at);
            match e.op {
                InjectOp::Insert => shift += 1,
                InjectOp::Delete => shift -= 1,
                InjectOp::Replace => {}
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InjectError {
    #[error("need {wanted} edit positions, only {available} are eligible")]
    TooFew { wanted: usize, available: usize },
    #[error("at least one edit is required")]
    Zero,
}

/// Applies `edits` (sorted, distinct positions) to `original`.
pub fn replay(lexer: &Lexer, original: &[Token], edits: &[InjectedEdit]) -> Vec<Token> {
    let mut out = Vec::with_capacity(original.len() + edits.len());
    let mut e = edits.iter().peekable();
    for i in 0..=original.len() {
        let mut consumed = false;
        while let Some(ed) = e.next_if(|ed| ed.position == i) {
            match ed.op {
                InjectOp::Insert => out.push(lexer.make(ed.terminal)),
                InjectOp::Delete => consumed = true,
                InjectOp::Replace => {
                    out.push(lexer.make(ed.terminal));
                    consumed = true;
                }
            }
        }
        if i < original.len() && !consumed {
            out.push(original[i].clone());
        }
    }
    out
}

/// `n` edits of unreliable tokens at distinct positions, each op drawn
/// uniformly from `ops` among those still possible.
pub fn inject_errors(
    g: &GrammarSpec,
    lexer: &Lexer,
    original: &[Token],
    n: usize,
    ops: &[InjectOp],
    rng: &mut ChaCha8Rng,
) -> Result<ErrorInjection, InjectError> {
    if n == 0 {
        return Err(InjectError::Zero);
    }
    let original: Vec<Token> = original.iter().filter(|t| t.kind != g.eof).cloned().collect();
    let unrel = g.unreliable_terminals();
    let mut used = vec![false; original.len() + 1];
    let eligible = |op: InjectOp, i: usize| match op {
        InjectOp::Insert => true,
        InjectOp::Delete | InjectOp::Replace => i < original.len() && g.is_unreliable(original[i].kind),
    };
    let available = (0..=original.len()).filter(|&i| ops.iter().any(|&o| eligible(o, i))).count();
    if available < n {
        return Err(InjectError::TooFew { wanted: n, available });
    }
    let mut edits = Vec::new();
    for _ in 0..n {
        let live: Vec<InjectOp> =
            ops.iter().copied().filter(|&o| (0..=original.len()).any(|i| !used[i] && eligible(o, i))).collect();
        let op = *live.choose(rng).expect("checked above");
        let slots: Vec<usize> = (0..=original.len()).filter(|&i| !used[i] && eligible(op, i)).collect();
        let position = *slots.choose(rng).unwrap();
        used[position] = true;
        let terminal = match op {
            InjectOp::Delete => original[position].kind,
            InjectOp::Insert => unrel[rng.gen_range(0..unrel.len())],
            InjectOp::Replace => {
                let cur = original[position].kind;
                let others: Vec<TermId> = unrel.iter().copied().filter(|&t| t != cur).collect();
                others[rng.gen_range(0..others.len())]
            }
        };
        edits.push(InjectedEdit { op, position, terminal });
    }
    edits.sort_by_key(|e| e.position);
    let broken = replay(lexer, &original, &edits);
    Ok(ErrorInjection { original, broken, edits })
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `positions` and `ops` fields of an injection record.
pub fn format_edits(g: &GrammarSpec, edits: &[InjectedEdit]) -> (String, String) {
    let pos: Vec<String> = edits.iter().map(|e| e.position.to_string()).collect();
    let ops: Vec<String> = edits.iter().map(|e| format!("{}:{}", e.op.name(), g.term_name(e.terminal))).collect();
    (pos.join(" "), ops.join(" "))
}

pub fn parse_edits(g: &GrammarSpec, positions: &str, ops: &str) -> Option<Vec<InjectedEdit>> {
    let pos: Vec<usize> = positions.split_whitespace().map(str::parse).collect::<Result<_, _>>().ok()?;
    let ops: Vec<&str> = ops.split_whitespace().collect();
    if pos.len() != ops.len() {
        return None;
    }
    pos.into_iter()
        .zip(ops)
        .map(|(position, o)| {
            let (op, t) = o.split_once(':')?;
            Some(InjectedEdit { op: InjectOp::parse(op)?, position, terminal: g.terminal(t)? })
        })
        .collect()
}
