//! Cost-ordered repair search with deterministic backtracking and windowed
//! repair enumeration.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rustc_hash::{FxHashMap, FxHashSet};
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::dss::{apply_domain_state_transformers, DssContext, TransformerRule};
use crate::editdist::{edit_script, Edit, PrefixRow};
use crate::grammar::{GrammarSpec, ProdId, Sym, TermId};
use crate::lexer::{LexError, Lexer, Token};
use crate::localize::Localizer;
use crate::parse::{expand, step, Fingerprint, Item, ParseTree, ParserState, Rule, Stack, StateKey, TokVec};
use crate::sets::SetTables;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Backtracking depth `d`.
    pub depth: usize,
    pub max_local_cost: u32,
    pub max_global_cost: u32,
    pub timeout: Duration,
    pub max_candidates: usize,
    /// Safety valve on popped states, independent of wall time.
    pub max_expansions: usize,
    /// States to treat as error states even when they can make progress.
    pub predicted: Option<Rc<HashSet<Fingerprint>>>,
    /// Prefix-distance pruning inside enumeration. Turning it off only costs
    /// time.
    pub prune: bool,
    pub use_dss: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth: 2,
            max_local_cost: 3,
            max_global_cost: 3,
            timeout: Duration::from_secs(10),
            max_candidates: 50,
            max_expansions: 2_000_000,
            predicted: None,
            prune: true,
            use_dss: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairCandidate {
    pub text: String,
    pub tokens: Vec<Token>,
    pub tree: ParseTree,
    pub cost: u32,
    pub naturalness: Option<f64>,
    pub edit_script: Vec<Edit>,
}

/// How a search node was reached from its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Via {
    Init,
    Match,
    Expand(ProdId),
    /// Produced by a domain rule. `barrier` is set when the rule rewrote
    /// already consumed tokens, which backtracking must not cross.
    Dss { barrier: bool },
    Repair,
}

/// Window selected for repair around an error state.
#[derive(Clone, Debug)]
pub struct BacktrackResult {
    pub s_b: ParserState,
    pub t_rel: Vec<Token>,
    pub t_tgt: Vec<Token>,
    pub t_rem: Vec<Token>,
}

/// Picks the backtrack point in a trace given newest first. Returns the index
/// into `trace` of `s_b`.
fn backtrack_index<'a, I>(g: &GrammarSpec, trace: I, depth: usize) -> usize
where
    I: Iterator<Item = (Via, &'a ParserState)>,
{
    let mut seen = 0;
    let mut last = 0;
    for (i, (via, s)) in trace.enumerate() {
        last = i;
        match via {
            Via::Match => {
                let t = &s.toks.toks[s.pos - 1];
                if !g.is_unreliable(t.kind) {
                    seen += 1;
                    if seen == depth {
                        return i;
                    }
                }
            }
            Via::Dss { barrier: true } => return i,
            _ => {}
        }
    }
    last
}

fn window(g: &GrammarSpec, s_e: &ParserState, pos_b: usize) -> (Vec<Token>, Vec<Token>, Vec<Token>, usize) {
    let toks = &s_e.toks.toks;
    let mut r = s_e.pos;
    while r < toks.len() && g.is_unreliable(toks[r].kind) {
        r += 1;
    }
    let r = r.min(toks.len() - 1);
    let tgt = toks[pos_b..=r].to_vec();
    let rel = tgt.iter().filter(|t| !g.is_unreliable(t.kind)).cloned().collect();
    let rem = toks[r + 1..].to_vec();
    (tgt, rel, rem, r)
}

/// Deterministic backtracking over an explicit trace (oldest first, last
/// element is the error state).
pub fn backtrack(g: &GrammarSpec, trace: &[(Via, ParserState)], depth: usize) -> BacktrackResult {
    let s_e = &trace.last().expect("non-empty trace").1;
    let idx = backtrack_index(g, trace.iter().rev().map(|(v, s)| (*v, s)), depth);
    let s_b = trace[trace.len() - 1 - idx].1.clone();
    let (t_tgt, t_rel, t_rem, _) = window(g, s_e, s_b.pos);
    BacktrackResult { s_b, t_rel, t_tgt, t_rem }
}

/// A generated replacement for the target window and its edit cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub tokens: Vec<Token>,
    pub cost: u32,
}

/// Enumerates token sequences derivable from `stack` that keep the reliable
/// tokens of `t_tgt` in order and edit only unreliable ones. `local` bounds
/// the prefix distance of partial sequences, `global` the final distance.
pub fn enumerate_generations(
    g: &GrammarSpec,
    tables: &SetTables,
    lexer: &Lexer,
    stack: &Stack,
    t_tgt: &[Token],
    local: u32,
    global: u32,
    prune: bool,
    deadline: Option<Instant>,
) -> Vec<Generated> {
    let t_rel: Vec<&Token> = t_tgt.iter().filter(|t| !g.is_unreliable(t.kind)).collect();
    let unrel = g.unreliable_terminals();
    let mut out: Vec<(Vec<TermId>, u32)> = Vec::new();
    let mut emitted: FxHashSet<Vec<TermId>> = FxHashSet::default();
    // Ambiguous grammars reach the same (stack, generated) pair along many
    // derivations, so those are visited once. Keys are 64-bit hashes; the
    // generated sequence hash is extended one token at a time.
    let mut seen: FxHashSet<(u64, u64, usize, usize)> = FxHashSet::default();
    struct E {
        stack: Stack,
        gen: Vec<TermId>,
        gh: u64,
        row: PrefixRow,
        ri: usize,
    }
    let mut work =
        vec![E { stack: stack.clone(), gen: Vec::new(), gh: 0, row: PrefixRow::new(g, t_tgt), ri: 0 }];
    let mut pops = 0u32;
    let push_tok = |e: &E, rest: Stack, kind: TermId, ri: usize, work: &mut Vec<E>| {
        let row = e.row.push(g, t_tgt, kind);
        if prune && row.min() > local {
            return;
        }
        // Without pruning, length alone keeps insertion finite: every token
        // beyond the target length costs at least one.
        if !prune && e.gen.len() + 1 > t_tgt.len() + global as usize {
            return;
        }
        let mut gen = e.gen.clone();
        gen.push(kind);
        let gh = (e.gh ^ (kind as u64 + 1)).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(23);
        work.push(E { stack: rest, gen, gh, row, ri });
    };
    while let Some(e) = work.pop() {
        pops = pops.wrapping_add(1);
        if pops % 1024 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            break;
        }
        if !seen.insert((e.stack.hash_value(), e.gh, e.ri, e.gen.len())) {
            continue;
        }
        let trailing = e.ri == t_rel.len();
        if trailing {
            let c = e.row.full();
            if c <= global && emitted.insert(e.gen.clone()) {
                out.push((e.gen.clone(), c));
            }
        }
        let Some(top) = e.stack.head().copied() else { continue };
        let rest = e.stack.tail();
        match top {
            Item::End(_) => work.push(E { stack: rest, ..e }),
            Item::Sym(Sym::T(a)) if g.is_unreliable(a) => push_tok(&e, rest, a, e.ri, &mut work),
            Item::Sym(Sym::T(a)) => {
                if !trailing && t_rel[e.ri].kind == a {
                    push_tok(&e, rest, a, e.ri + 1, &mut work);
                }
            }
            Item::Sym(Sym::N(a)) => {
                for &p in g.prods_of(a).iter().rev() {
                    let ok = if trailing {
                        let f = tables.first_of_prod(p);
                        f.eps || unrel.iter().any(|&u| f.contains(u))
                    } else {
                        let t = t_rel[e.ri].kind;
                        let fr = tables.first_rel_of_prod(p);
                        fr.contains(t) || (fr.eps && tables.follow_reliable(a).contains(t))
                    };
                    if ok {
                        let mut st = rest.push(Item::End(p));
                        for &x in g.prod(p).rhs.iter().rev() {
                            st = st.push(Item::Sym(x));
                        }
                        work.push(E { stack: st, gen: e.gen.clone(), gh: e.gh, row: e.row.clone(), ri: e.ri });
                    }
                }
            }
        }
    }
    out.sort();
    out.sort_by_key(|(_, c)| *c);
    out.into_iter()
        .map(|(kinds, cost)| {
            let mut rel = t_rel.iter();
            let tokens = kinds
                .into_iter()
                .map(|k| if g.is_unreliable(k) { lexer.make(k) } else { (*rel.next().unwrap()).clone() })
                .collect();
            Generated { tokens, cost }
        })
        .collect()
}

/// Repair states for an error state: `s_b` with its target window replaced.
/// Costs are charged on top of `s_e`, so edits made before the window still
/// count.
pub fn enumerate_repairs(
    g: &GrammarSpec,
    tables: &SetTables,
    lexer: &Lexer,
    bt: &BacktrackResult,
    s_e_cost: u32,
    cfg: &SearchConfig,
) -> Vec<ParserState> {
    if s_e_cost > cfg.max_global_cost {
        return Vec::new();
    }
    let budget = cfg.max_global_cost - s_e_cost;
    let gens = enumerate_generations(
        g,
        tables,
        lexer,
        &bt.s_b.stack,
        &bt.t_tgt,
        cfg.max_local_cost.min(budget),
        budget,
        cfg.prune,
        None,
    );
    gens.into_iter()
        .map(|gn| {
            let mut v = bt.s_b.toks.toks[..bt.s_b.pos].to_vec();
            v.extend(gn.tokens);
            v.extend(bt.t_rem.iter().cloned());
            bt.s_b.with_remaining(TokVec::new(v), s_e_cost + gn.cost)
        })
        .collect()
}

struct Node {
    state: ParserState,
    parent: Option<usize>,
    via: Via,
}

/// Grammar, tables, lexer and domain rules bundled for repeated repairs.
pub struct Engine {
    pub grammar: GrammarSpec,
    pub tables: SetTables,
    pub lexer: Lexer,
    pub rules: Vec<Box<dyn TransformerRule>>,
}

impl Engine {
    pub fn new(grammar: GrammarSpec) -> Self {
        let tables = SetTables::new(&grammar);
        let lexer = Lexer::new(&grammar);
        Engine { grammar, tables, lexer, rules: Vec::new() }
    }

    pub fn with_rules(mut self, rules: Vec<Box<dyn TransformerRule>>) -> Self {
        self.rules = rules;
        self
    }

    pub fn tokenize(&self, src: &str) -> Result<Vec<Token>, LexError> {
        self.lexer.tokenize(src)
    }

    pub fn repair<'e>(&'e self, toks: &[Token], cfg: &SearchConfig) -> RepairStream<'e> {
        RepairStream::new(self, toks, cfg.clone())
    }

    pub fn repair_text<'e>(&'e self, src: &str, cfg: &SearchConfig) -> Result<RepairStream<'e>, LexError> {
        Ok(self.repair(&self.tokenize(src)?, cfg))
    }

    /// Symbolic repair first; only when that produces nothing, ask the
    /// localizer for likely error positions and search again treating the
    /// matching states as error states.
    pub fn repair_with_fallback(
        &self,
        toks: &[Token],
        cfg: &SearchConfig,
        localizer: Option<&dyn Localizer>,
    ) -> FallbackOutcome {
        let mut first = self.repair(toks, cfg);
        let found: Vec<RepairCandidate> = first.by_ref().collect();
        let mut timed_out = first.timed_out();
        if !found.is_empty() || localizer.is_none() {
            return FallbackOutcome { candidates: found, used_localizer: false, timed_out };
        }
        let preds = localizer.unwrap().predict(toks);
        let fps = first.fingerprints_at(&preds.iter().map(|p| p.0).collect::<Vec<_>>());
        if fps.is_empty() {
            return FallbackOutcome { candidates: found, used_localizer: true, timed_out };
        }
        let mut cfg2 = cfg.clone();
        let mut all: HashSet<Fingerprint> = cfg.predicted.as_deref().cloned().unwrap_or_default();
        all.extend(fps);
        cfg2.predicted = Some(Rc::new(all));
        let mut second = self.repair(toks, &cfg2);
        let candidates: Vec<RepairCandidate> = second.by_ref().collect();
        timed_out |= second.timed_out();
        FallbackOutcome { candidates, used_localizer: true, timed_out }
    }

    fn dss_context(&self) -> DssContext<'_> {
        DssContext { grammar: &self.grammar, tables: &self.tables, lexer: &self.lexer }
    }
}

#[derive(Clone, Debug)]
pub struct FallbackOutcome {
    pub candidates: Vec<RepairCandidate>,
    pub used_localizer: bool,
    pub timed_out: bool,
}

/// Lazily produced candidates in non-decreasing cost order.
pub struct RepairStream<'e> {
    engine: &'e Engine,
    cfg: SearchConfig,
    original: Vec<Token>,
    nodes: Vec<Node>,
    heap: BinaryHeap<Reverse<(u32, u64, usize)>>,
    seq: u64,
    best: FxHashMap<StateKey, u32>,
    closed: FxHashSet<StateKey>,
    enum_memo: FxHashMap<(usize, u64, usize), Rc<Vec<Generated>>>,
    texts: HashSet<String>,
    emitted: usize,
    start: Instant,
    timed_out: bool,
    expansions: usize,
    enumerations: usize,
    done: bool,
}

impl<'e> RepairStream<'e> {
    fn new(engine: &'e Engine, toks: &[Token], cfg: SearchConfig) -> Self {
        let s0 = ParserState::initial(&engine.grammar, toks);
        let mut rs = RepairStream {
            engine,
            cfg,
            original: toks.to_vec(),
            nodes: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            best: FxHashMap::default(),
            closed: FxHashSet::default(),
            enum_memo: FxHashMap::default(),
            texts: HashSet::new(),
            emitted: 0,
            start: Instant::now(),
            timed_out: false,
            expansions: 0,
            enumerations: 0,
            done: false,
        };
        rs.push(s0, None, Via::Init);
        rs
    }

    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    /// Number of states popped so far.
    pub fn expansions(&self) -> usize {
        self.expansions
    }

    /// Number of error states handed to repair enumeration so far.
    pub fn enumerations(&self) -> usize {
        self.enumerations
    }

    /// Number of search nodes created so far.
    pub fn states(&self) -> usize {
        self.nodes.len()
    }

    fn push(&mut self, state: ParserState, parent: Option<usize>, via: Via) {
        if state.cost > self.cfg.max_global_cost {
            return;
        }
        let key = state.key();
        if let Some(&c) = self.best.get(&key) {
            if c <= state.cost {
                return;
            }
        }
        self.best.insert(key, state.cost);
        let id = self.nodes.len();
        let cost = state.cost;
        self.nodes.push(Node { state, parent, via });
        self.heap.push(Reverse((cost, self.seq, id)));
        self.seq += 1;
    }

    /// Trace of a node, newest first.
    fn trace(&self, id: usize) -> impl Iterator<Item = (usize, &Node)> {
        let mut cur = Some(id);
        std::iter::from_fn(move || {
            let i = cur?;
            let n = &self.nodes[i];
            cur = n.parent;
            Some((i, n))
        })
    }

    /// Full trace of a node, oldest first.
    pub fn trace_of(&self, id: usize) -> Vec<(Via, ParserState)> {
        let mut v: Vec<(Via, ParserState)> = self.trace(id).map(|(_, n)| (n.via, n.state.clone())).collect();
        v.reverse();
        v
    }

    /// Repair states for error node `id`, and the node they hang from.
    fn enumerate(&mut self, id: usize) -> (usize, Vec<ParserState>) {
        let g = &self.engine.grammar;
        self.enumerations += 1;
        let s_e = self.nodes[id].state.clone();
        // With no budget left the only generation is the window itself,
        // re-derived; the states it leads to are already on the queue.
        if s_e.cost >= self.cfg.max_global_cost {
            return (id, Vec::new());
        }
        let b = {
            let list: Vec<(usize, &Node)> = self.trace(id).collect();
            let k = backtrack_index(g, list.iter().map(|(_, n)| (n.via, &n.state)), self.cfg.depth);
            list[k].0
        };
        let s_b = self.nodes[b].state.clone();
        let (t_tgt, _, t_rem, r) = window(g, &s_e, s_b.pos);
        let budget = self.cfg.max_global_cost - s_e.cost;
        let memo_key = (b, s_e.toks.hash_value() ^ (budget as u64).rotate_left(48), r);
        let gens = match self.enum_memo.get(&memo_key) {
            Some(v) => v.clone(),
            None => {
                let v = Rc::new(enumerate_generations(
                    g,
                    &self.engine.tables,
                    &self.engine.lexer,
                    &s_b.stack,
                    &t_tgt,
                    self.cfg.max_local_cost.min(budget),
                    budget,
                    self.cfg.prune,
                    Some(self.start + self.cfg.timeout),
                ));
                self.enum_memo.insert(memo_key, v.clone());
                v
            }
        };
        let prefix = &s_e.toks.toks[..s_b.pos];
        let out = gens
            .iter()
            .map(|gn| {
                let mut v = prefix.to_vec();
                v.extend(gn.tokens.iter().cloned());
                v.extend(t_rem.iter().cloned());
                s_b.with_remaining(TokVec::new(v), s_e.cost + gn.cost)
            })
            .collect();
        (b, out)
    }

    /// Furthest input position reached without any edit so far.
    pub fn frontier(&self) -> usize {
        self.nodes.iter().filter(|n| n.state.cost == 0).map(|n| n.state.pos).max().unwrap_or(0)
    }

    /// Fingerprints of the zero-cost states that consumed exactly `k` tokens,
    /// for each requested `k`.
    pub fn fingerprints_at(&self, ks: &[usize]) -> Vec<Fingerprint> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if n.state.cost != 0 || !matches!(n.via, Via::Match | Via::Init) {
                continue;
            }
            if ks.contains(&n.state.pos) {
                let fp = n.state.fingerprint();
                if seen.insert(fp.clone()) {
                    out.push(fp);
                }
            }
        }
        out
    }

    fn candidate(&self, s: &ParserState) -> RepairCandidate {
        let g = &self.engine.grammar;
        let tokens: Vec<Token> = s.toks.toks.iter().filter(|t| t.kind != g.eof).cloned().collect();
        let tree = s.root().map(|r| ParseTree::from_node(&r)).unwrap_or(ParseTree::Epsilon);
        RepairCandidate {
            text: self.engine.lexer.render(g, &tokens),
            edit_script: edit_script(g, &self.original, &tokens),
            tokens,
            tree,
            cost: s.cost,
            naturalness: None,
        }
    }
}

impl<'e> Iterator for RepairStream<'e> {
    type Item = RepairCandidate;

    fn next(&mut self) -> Option<RepairCandidate> {
        if self.done {
            return None;
        }
        let engine = self.engine;
        let g = &engine.grammar;
        let rules: Vec<&dyn TransformerRule> =
            if self.cfg.use_dss { engine.rules.iter().map(|r| r.as_ref()).collect() } else { Vec::new() };
        let cx = engine.dss_context();
        while let Some(Reverse((cost, _, id))) = self.heap.pop() {
            if self.start.elapsed() > self.cfg.timeout {
                self.timed_out = true;
                break;
            }
            if self.expansions >= self.cfg.max_expansions {
                self.timed_out = true;
                break;
            }
            let s = self.nodes[id].state.clone();
            let key = s.key();
            if self.best.get(&key).is_some_and(|&c| c < cost) || !self.closed.insert(key.clone()) {
                continue;
            }
            self.expansions += 1;

            // Domain rules. A state is popped at most once, which is what
            // keeps rewriting rules from firing on it again.
            let mut applied = apply_domain_state_transformers(&rules, &cx, &s);
            let mut extra: Vec<ParserState> = Vec::new();
            let mut keep = applied.identity;
            if !applied.flagged && !applied.identity {
                for st in std::mem::take(&mut applied.states) {
                    if st.cost == s.cost && st.key() == key {
                        keep = true;
                    } else {
                        extra.push(st);
                    }
                }
            }

            if s.is_accept() {
                for st in extra {
                    self.push(st, Some(id), Via::Dss { barrier: true });
                }
                if !keep {
                    if applied.flagged {
                        let (parent, repairs) = self.enumerate(id);
                        for r in repairs {
                            self.push(r, Some(parent), Via::Repair);
                        }
                    }
                    continue;
                }
                let c = self.candidate(&s);
                if self.texts.insert(c.text.clone()) {
                    self.emitted += 1;
                    if self.emitted >= self.cfg.max_candidates || (self.emitted == 1 && c.cost == 0 && c.tokens.len() == self.original.len() && c.edit_script.is_empty()) {
                        self.done = true;
                    }
                    return Some(c);
                }
                continue;
            }

            let mut succ: Vec<(Via, ParserState)> = Vec::new();
            if keep {
                for (rule, n) in step(g, &engine.tables, &s) {
                    let via = match rule {
                        Rule::Match => Via::Match,
                        Rule::Expand(p) => Via::Expand(p),
                    };
                    succ.push((via, n));
                }
            }
            for st in extra {
                let barrier = st.pos != s.pos || !same_prefix(&st, &s);
                succ.push((Via::Dss { barrier }, st));
            }
            let predicted = self.cfg.predicted.as_ref().is_some_and(|p| p.contains(&s.fingerprint()));
            if succ.is_empty() || predicted {
                let (parent, repairs) = self.enumerate(id);
                for r in repairs {
                    self.push(r, Some(parent), Via::Repair);
                }
            }
            for (via, n) in succ {
                self.push(n, Some(id), via);
            }
        }
        self.done = true;
        None
    }
}

fn same_prefix(a: &ParserState, b: &ParserState) -> bool {
    a.pos == b.pos && a.toks.toks[..a.pos].iter().zip(&b.toks.toks[..b.pos]).all(|(x, y)| x.same(y))
}

/// Expands `p` on `s` regardless of lookahead; exposed for tests.
pub fn force_expand(g: &GrammarSpec, s: &ParserState, p: ProdId) -> ParserState {
    expand(g, s, p)
}
