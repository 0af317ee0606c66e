//! Naturalness scorer over unreliable-token runs.
//!
//! A formula is cut at its reliable tokens into runs of unreliable tokens
//! (possibly empty). Each run is predicted one token at a time from the
//! abstracted tokens before it and the tokens after the run, finished by a
//! `STOP` label. The model is an interpolated k-gram classifier with add-alpha
//! smoothing at every context length.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::editdist::{Edit, EditOp};
use crate::grammar::GrammarSpec;
use crate::lexer::{Lexer, Token};
use crate::search::RepairCandidate;

pub const STOP: &str = "STOP";
const BOS: &str = "<s>";
const EOS: &str = "</s>";
const MAGIC: &str = "FMND-RANK v1";

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("no training examples")]
    Empty,
    #[error("bad model file, line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// How the reliable tokens of a formula are turned into context symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Abstraction {
    /// Upper-cased identifiers that stay as themselves (function names).
    pub keep: BTreeSet<String>,
}

impl Abstraction {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(names: I) -> Self {
        Abstraction { keep: names.into_iter().map(|s| s.as_ref().to_uppercase()).collect() }
    }

    pub fn symbol(&self, g: &GrammarSpec, t: &Token) -> String {
        let name = g.term_name(t.kind);
        match name {
            "ident" => {
                let up = t.text.to_uppercase();
                if self.keep.contains(&up) {
                    up
                } else {
                    "IDENT".into()
                }
            }
            "num" => "NUM".into(),
            "str" => "STR".into(),
            _ => name.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingExample {
    /// Up to `k` symbols, oldest first, padded with `<s>`.
    pub prefix: Vec<String>,
    /// Up to `k` symbols, nearest first, padded with `</s>`.
    pub suffix: Vec<String>,
    pub label: String,
}

/// One maximal run of unreliable tokens: `toks[start..end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub end: usize,
}

/// All runs including the empty ones between adjacent reliable tokens and at
/// both ends.
pub fn runs(g: &GrammarSpec, toks: &[Token]) -> Vec<Run> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        if !g.is_unreliable(t.kind) {
            out.push(Run { start, end: i });
            start = i + 1;
        }
    }
    out.push(Run { start, end: toks.len() });
    out
}

fn context(syms: &[String], at: usize, after: usize, k: usize) -> (Vec<String>, Vec<String>) {
    let lo = at.saturating_sub(k);
    let mut prefix: Vec<String> = std::iter::repeat(BOS.to_string()).take(k - (at - lo)).collect();
    prefix.extend(syms[lo..at].iter().cloned());
    let hi = (after + k).min(syms.len());
    let mut suffix: Vec<String> = syms[after..hi].to_vec();
    suffix.resize(k, EOS.to_string());
    (prefix, suffix)
}

/// Examples for one run: one per token then `STOP`.
fn run_examples(g: &GrammarSpec, syms: &[String], toks: &[Token], run: Run, k: usize) -> Vec<TrainingExample> {
    let mut out = Vec::new();
    for i in run.start..=run.end {
        let (prefix, suffix) = context(syms, i, run.end, k);
        let label = if i < run.end { g.term_name(toks[i].kind).to_string() } else { STOP.to_string() };
        out.push(TrainingExample { prefix, suffix, label });
    }
    out
}

fn symbols(g: &GrammarSpec, abs: &Abstraction, toks: &[Token]) -> Vec<String> {
    toks.iter().filter(|t| t.kind != g.eof).map(|t| abs.symbol(g, t)).collect()
}

/// Examples from every run of one token sequence.
pub fn examples_of(g: &GrammarSpec, abs: &Abstraction, toks: &[Token], k: usize) -> Vec<TrainingExample> {
    let toks: Vec<Token> = toks.iter().filter(|t| t.kind != g.eof).cloned().collect();
    let syms = symbols(g, abs, &toks);
    runs(g, &toks).into_iter().flat_map(|r| run_examples(g, &syms, &toks, r, k)).collect()
}

/// Examples from a corpus; lines that fail `accept` are skipped and counted.
pub fn extract_examples(
    g: &GrammarSpec,
    lexer: &Lexer,
    abs: &Abstraction,
    corpus: &[String],
    k: usize,
    accept: impl Fn(&[Token]) -> bool,
) -> (Vec<TrainingExample>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for line in corpus {
        match lexer.tokenize(line) {
            Ok(toks) if accept(&toks) => out.extend(examples_of(g, abs, &toks, k)),
            _ => skipped += 1,
        }
    }
    (out, skipped)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Balance {
    /// Every example has equal weight.
    None,
    /// Every observed class gets the same total weight.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankerModel {
    pub k: usize,
    pub alpha: f64,
    /// Total weight given to each class (balanced) or the average class
    /// (unbalanced). Fixing it makes training insensitive to corpus scale.
    pub mass: f64,
    pub classes: Vec<String>,
    pub abstraction: Abstraction,
    /// `tables[j]` maps a context with `j` symbols each side to class weights.
    pub tables: Vec<BTreeMap<String, Vec<f64>>>,
}

fn key(prefix: &[String], suffix: &[String], j: usize) -> String {
    let p = &prefix[prefix.len() - j..];
    let s = &suffix[..j];
    format!("{}|{}", p.join(" "), s.join(" "))
}

pub struct TrainOptions {
    pub k: usize,
    pub alpha: f64,
    pub mass: f64,
    pub balance: Balance,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { k: 3, alpha: 0.1, mass: 1000.0, balance: Balance::Uniform }
    }
}

/// Class set of a grammar: its unreliable terminals then `STOP`.
pub fn class_set(g: &GrammarSpec) -> Vec<String> {
    let mut c: Vec<String> = g.unreliable_terminals().into_iter().map(|t| g.term_name(t).to_string()).collect();
    c.push(STOP.into());
    c
}

pub fn train(
    examples: &[TrainingExample],
    classes: Vec<String>,
    abstraction: Abstraction,
    opts: &TrainOptions,
) -> Result<RankerModel, RankError> {
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let usable: Vec<(&TrainingExample, usize)> =
        examples.iter().filter_map(|e| index.get(e.label.as_str()).map(|&c| (e, c))).collect();
    if usable.is_empty() {
        return Err(RankError::Empty);
    }
    let mut counts = vec![0usize; classes.len()];
    for &(_, c) in &usable {
        counts[c] += 1;
    }
    let observed = counts.iter().filter(|&&n| n > 0).count() as f64;
    let weight: Vec<f64> = counts
        .iter()
        .map(|&n| match opts.balance {
            _ if n == 0 => 0.0,
            Balance::Uniform => opts.mass / n as f64,
            Balance::None => opts.mass * observed / usable.len() as f64,
        })
        .collect();
    let mut tables = vec![BTreeMap::new(); opts.k + 1];
    for &(e, c) in &usable {
        for (j, table) in tables.iter_mut().enumerate() {
            let row = table.entry(key(&e.prefix, &e.suffix, j)).or_insert_with(|| vec![0.0; classes.len()]);
            row[c] += weight[c];
        }
    }
    Ok(RankerModel { k: opts.k, alpha: opts.alpha, mass: opts.mass, classes, abstraction, tables })
}

impl RankerModel {
    /// Distribution over `classes` for one context.
    pub fn distribution(&self, prefix: &[String], suffix: &[String]) -> Vec<f64> {
        let n = self.classes.len();
        let mut out = vec![0.0; n];
        let mut total_lambda = 0.0;
        for j in 0..=self.k {
            let Some(row) = self.tables[j].get(&key(prefix, suffix, j)) else { continue };
            let lambda = (1u64 << j) as f64;
            let sum: f64 = row.iter().sum();
            let denom = sum + self.alpha * n as f64;
            for (o, w) in out.iter_mut().zip(row) {
                *o += lambda * (w + self.alpha) / denom;
            }
            total_lambda += lambda;
        }
        if total_lambda == 0.0 {
            return vec![1.0 / n as f64; n];
        }
        out.iter_mut().for_each(|o| *o /= total_lambda);
        out
    }

    pub fn prob(&self, prefix: &[String], suffix: &[String], label: &str) -> f64 {
        let d = self.distribution(prefix, suffix);
        match self.classes.iter().position(|c| c == label) {
            Some(i) => d[i],
            None => self.alpha / (self.mass + self.alpha * self.classes.len() as f64),
        }
    }

    fn run_cost(&self, g: &GrammarSpec, syms: &[String], toks: &[Token], run: Run) -> f64 {
        run_examples(g, syms, toks, run, self.k).iter().map(|e| -self.prob(&e.prefix, &e.suffix, &e.label).ln()).sum()
    }

    /// Surprisal of the runs touched by `script` (original to `candidate`).
    pub fn score_tokens(&self, g: &GrammarSpec, candidate: &[Token], script: &[Edit]) -> f64 {
        let toks: Vec<Token> = candidate.iter().filter(|t| t.kind != g.eof).cloned().collect();
        let syms = symbols(g, &self.abstraction, &toks);
        let gaps = touched_gaps(script);
        runs(g, &toks)
            .into_iter()
            .filter(|r| gaps.iter().any(|&(lo, hi)| lo <= r.end && hi >= r.start))
            .map(|r| self.run_cost(g, &syms, &toks, r))
            .sum()
    }

    pub fn score_candidate(&self, g: &GrammarSpec, candidate: &RepairCandidate) -> f64 {
        self.score_tokens(g, &candidate.tokens, &candidate.edit_script)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "k\t{}", self.k).unwrap();
        writeln!(s, "alpha\t{:?}", self.alpha).unwrap();
        writeln!(s, "mass\t{:?}", self.mass).unwrap();
        writeln!(s, "classes\t{}", self.classes.join(" ")).unwrap();
        writeln!(s, "keep\t{}", self.abstraction.keep.iter().cloned().collect::<Vec<_>>().join(" ")).unwrap();
        for (j, table) in self.tables.iter().enumerate() {
            for (ctx, row) in table {
                let ws: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
                writeln!(s, "{j}\t{ctx}\t{}", ws.join(" ")).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, RankError> {
        let bad = |line: usize, msg: &str| RankError::Format { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l) != Some(MAGIC) {
            return Err(bad(1, "missing header"));
        }
        let mut field = |name: &str| -> Result<(usize, String), RankError> {
            let (i, l) = lines.next().ok_or_else(|| bad(0, "truncated"))?;
            let (k, v) = l.split_once('\t').ok_or_else(|| bad(i + 1, "expected key and value"))?;
            if k != name {
                return Err(bad(i + 1, &format!("expected `{name}`")));
            }
            Ok((i + 1, v.to_string()))
        };
        let (ln, v) = field("k")?;
        let k: usize = v.parse().map_err(|_| bad(ln, "bad k"))?;
        let (ln, v) = field("alpha")?;
        let alpha: f64 = v.parse().map_err(|_| bad(ln, "bad alpha"))?;
        let (ln, v) = field("mass")?;
        let mass: f64 = v.parse().map_err(|_| bad(ln, "bad mass"))?;
        let classes: Vec<String> = field("classes")?.1.split_whitespace().map(str::to_string).collect();
        let abstraction = Abstraction::new(field("keep")?.1.split_whitespace());
        let mut tables = vec![BTreeMap::new(); k + 1];
        for (i, l) in lines {
            let parts: Vec<&str> = l.split('\t').collect();
            let [j, ctx, ws] = parts.as_slice() else { return Err(bad(i + 1, "expected three fields")) };
            let j: usize = j.parse().ok().filter(|&j| j <= k).ok_or_else(|| bad(i + 1, "bad level"))?;
            let row: Vec<f64> = ws.split(' ').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad(i + 1, "bad weight"))?;
            if row.len() != classes.len() {
                return Err(bad(i + 1, "row width differs from class count"));
            }
            tables[j].insert(ctx.to_string(), row);
        }
        Ok(RankerModel { k, alpha, mass, classes, abstraction, tables })
    }
}

/// Candidate-gap intervals touched by an edit script. An inserted token at
/// `j` touches gaps `j..=j+1`; a deletion touches the gap where it happened.
fn touched_gaps(script: &[Edit]) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::new();
    for e in script {
        match e.op {
            EditOp::Insert => {
                let skip = e.index.saturating_sub(j);
                i += skip;
                j = e.index;
                out.push((j, j + 1));
                j += 1;
            }
            EditOp::Delete => {
                let skip = e.index.saturating_sub(i);
                j += skip;
                i = e.index;
                out.push((j, j));
                i += 1;
            }
        }
    }
    out
}

/// Stable order by cost, then score (when a model is given), then text.
pub fn rank(g: &GrammarSpec, mut cands: Vec<RepairCandidate>, model: Option<&RankerModel>) -> Vec<RepairCandidate> {
    if let Some(m) = model {
        for c in &mut cands {
            c.naturalness = Some(m.score_candidate(g, c));
        }
    }
    cands.sort_by(|a, b| {
        a.cost
            .cmp(&b.cost)
            .then_with(|| a.naturalness.unwrap_or(0.0).total_cmp(&b.naturalness.unwrap_or(0.0)))
            .then_with(|| a.text.cmp(&b.text))
    });
    cands
}
