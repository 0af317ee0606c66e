//! Parser states and the base transition rules (terminal match, nonterminal
//! expansion, accept).
//!
//! The partial parse tree is kept as a stack of open frames, one per expanded
//! nonterminal whose right-hand side is not finished yet. Each frame holds the
//! subtrees completed so far; the symbols still pending for it sit on the parse
//! stack above its `End` marker. Together they describe the same partial tree
//! as a tree with unexpanded leaves, and [`ParserState::tree`] rebuilds that
//! view on demand.

use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::grammar::{GrammarSpec, NtId, ProdId, Sym, TermId};
use crate::lexer::Token;
use crate::plist::{hash_one, PList};
use crate::sets::SetTables;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Item {
    Sym(Sym),
    /// Closes the frame opened when production `ProdId` was expanded.
    End(ProdId),
}

// One tagged word per item. The derived impl lets `End(p)` and
// `Sym(N(p))` collide under Fx, which ignores a leading zero discriminant.
impl Hash for Item {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let w = match *self {
            Item::Sym(Sym::T(t)) => 1 << 16 | t as u32,
            Item::Sym(Sym::N(n)) => 2 << 16 | n as u32,
            Item::End(p) => 3 << 16 | p as u32,
        };
        state.write_u32(w);
    }
}

pub type Stack = PList<Item>;

/// Completed subtree.
#[derive(Debug)]
pub struct Node {
    pub label: Label,
    pub children: Vec<Rc<Node>>,
    hash: u64,
}

#[derive(Debug, Clone)]
pub enum Label {
    Leaf(Token),
    Nt(NtId, ProdId),
}

impl Node {
    pub fn leaf(tok: Token) -> Rc<Node> {
        let hash = hash_one(&(0u8, tok.kind, &*tok.text));
        Rc::new(Node { label: Label::Leaf(tok), children: Vec::new(), hash })
    }

    pub fn interior(lhs: NtId, prod: ProdId, children: Vec<Rc<Node>>) -> Rc<Node> {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (1u8, lhs, prod).hash(&mut h);
        for c in &children {
            h.write_u64(c.hash);
        }
        Rc::new(Node { label: Label::Nt(lhs, prod), children, hash: h.finish() })
    }

    pub fn hash_value(&self) -> u64 {
        self.hash
    }

    pub fn nt(&self) -> Option<NtId> {
        match self.label {
            Label::Nt(n, _) => Some(n),
            Label::Leaf(_) => None,
        }
    }

    pub fn token(&self) -> Option<&Token> {
        match &self.label {
            Label::Leaf(t) => Some(t),
            Label::Nt(..) => None,
        }
    }

    pub fn frontier(&self, out: &mut Vec<Token>) {
        match &self.label {
            Label::Leaf(t) => out.push(t.clone()),
            Label::Nt(..) => {
                for c in &self.children {
                    c.frontier(out);
                }
            }
        }
    }

    pub fn tokens(&self) -> Vec<Token> {
        let mut v = Vec::new();
        self.frontier(&mut v);
        v
    }

    /// First leaf token in document order.
    pub fn first_token(&self) -> Option<&Token> {
        match &self.label {
            Label::Leaf(t) => Some(t),
            Label::Nt(..) => self.children.iter().find_map(|c| c.first_token()),
        }
    }
}

/// An open frame: production being parsed and its completed children.
#[derive(Clone, Debug)]
pub struct Frame {
    /// `None` for the sentinel frame that receives the finished root.
    pub prod: Option<ProdId>,
    pub children: PList<NodeRef>,
}

/// Node handle compared and hashed by structure hash.
#[derive(Clone, Debug)]
pub struct NodeRef(pub Rc<Node>);

impl PartialEq for NodeRef {
    fn eq(&self, other: &Self) -> bool {
        Rc::ptr_eq(&self.0, &other.0) || self.0.hash == other.0.hash
    }
}

impl Hash for NodeRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.prod == other.prod && self.children == other.children
    }
}

impl Hash for Frame {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.prod.hash(state);
        self.children.hash(state);
    }
}

impl Frame {
    /// Completed children, oldest first.
    pub fn children_vec(&self) -> Vec<Rc<Node>> {
        let mut v: Vec<Rc<Node>> = self.children.iter().map(|n| n.0.clone()).collect();
        v.reverse();
        v
    }
}

pub type Frames = PList<Frame>;

/// Immutable token sequence ending with the end marker, hashed once.
#[derive(Debug)]
pub struct TokVec {
    pub toks: Vec<Token>,
    hash: u64,
}

impl TokVec {
    pub fn new(toks: Vec<Token>) -> Rc<TokVec> {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in &toks {
            t.kind.hash(&mut h);
            t.text.hash(&mut h);
        }
        Rc::new(TokVec { toks, hash: h.finish() })
    }

    pub fn hash_value(&self) -> u64 {
        self.hash
    }

    pub fn same(a: &Rc<TokVec>, b: &Rc<TokVec>) -> bool {
        Rc::ptr_eq(a, b)
            || (a.hash == b.hash && a.toks.len() == b.toks.len() && a.toks.iter().zip(&b.toks).all(|(x, y)| x.same(y)))
    }
}

/// ⟨stack, remaining tokens, tree, cost⟩.
#[derive(Clone, Debug)]
pub struct ParserState {
    pub stack: Stack,
    pub toks: Rc<TokVec>,
    /// Number of tokens consumed; remaining tokens are `toks[pos..]`.
    pub pos: usize,
    pub cost: u32,
    pub frames: Frames,
    /// Subtrees completed by the transition that produced this state,
    /// innermost first.
    pub fresh: Rc<Vec<Rc<Node>>>,
}

/// Identity of a state for duplicate detection: everything but the cost.
#[derive(Clone, Debug)]
pub struct StateKey {
    pub stack: Stack,
    pub toks: Rc<TokVec>,
    pub pos: usize,
    pub tree: u64,
}

impl PartialEq for StateKey {
    fn eq(&self, other: &Self) -> bool {
        self.pos == other.pos && self.tree == other.tree && self.stack == other.stack && TokVec::same(&self.toks, &other.toks)
    }
}
impl Eq for StateKey {}

impl Hash for StateKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.stack.hash(state);
        state.write_u64(self.toks.hash);
        state.write_usize(self.pos);
        state.write_u64(self.tree);
    }
}

/// Fingerprint used for localizer-predicted states: stack contents and the
/// number of consumed tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub stack: Stack,
    pub consumed: usize,
}

/// Materialized parse tree, possibly with unexpanded leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseTree {
    Leaf(Token),
    Node(NtId, Vec<ParseTree>),
    /// Symbol still on the stack, not yet expanded or matched.
    Pending(Sym),
    Epsilon,
}

impl ParseTree {
    pub fn from_node(n: &Node) -> ParseTree {
        match &n.label {
            Label::Leaf(t) => ParseTree::Leaf(t.clone()),
            Label::Nt(nt, _) => {
                let kids: Vec<ParseTree> = if n.children.is_empty() {
                    vec![ParseTree::Epsilon]
                } else {
                    n.children.iter().map(|c| ParseTree::from_node(c)).collect()
                };
                ParseTree::Node(*nt, kids)
            }
        }
    }

    pub fn frontier(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<Token>) {
        match self {
            ParseTree::Leaf(t) => out.push(t.clone()),
            ParseTree::Node(_, kids) => kids.iter().for_each(|k| k.collect(out)),
            _ => {}
        }
    }

    pub fn render(&self, g: &GrammarSpec) -> String {
        match self {
            ParseTree::Leaf(t) => format!("{}:{}", g.term_name(t.kind), t.text),
            ParseTree::Node(n, kids) => {
                let inner: Vec<String> = kids.iter().map(|k| k.render(g)).collect();
                format!("({} {})", g.nt_name(*n), inner.join(" "))
            }
            ParseTree::Pending(s) => format!("<{}>", g.sym_name(*s)),
            ParseTree::Epsilon => "ε".into(),
        }
    }
}

impl ParserState {
    pub fn initial(g: &GrammarSpec, toks: &[Token]) -> ParserState {
        let mut v = toks.to_vec();
        v.push(Token::new(g.eof, ""));
        Self::with_tokens(g, TokVec::new(v))
    }

    /// Initial state over a token vector that already ends with `$`.
    pub fn with_tokens(g: &GrammarSpec, toks: Rc<TokVec>) -> ParserState {
        let stack = Stack::new().push(Item::Sym(Sym::T(g.eof))).push(Item::Sym(Sym::N(g.start)));
        let frames = Frames::new().push(Frame { prod: None, children: PList::new() });
        ParserState { stack, toks, pos: 0, cost: 0, frames, fresh: Rc::new(Vec::new()) }
    }

    pub fn remaining(&self) -> &[Token] {
        &self.toks.toks[self.pos..]
    }

    pub fn next_token(&self) -> Option<&Token> {
        self.toks.toks.get(self.pos)
    }

    pub fn is_accept(&self) -> bool {
        self.stack.is_empty() && self.pos >= self.toks.toks.len()
    }

    pub fn top(&self) -> Option<Sym> {
        self.stack.iter().find_map(|i| match i {
            Item::Sym(s) => Some(*s),
            Item::End(_) => None,
        })
    }

    pub fn tree_hash(&self) -> u64 {
        self.frames.hash_value()
    }

    pub fn key(&self) -> StateKey {
        StateKey { stack: self.stack.clone(), toks: self.toks.clone(), pos: self.pos, tree: self.tree_hash() }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint { stack: self.stack.clone(), consumed: self.pos }
    }

    /// Stack symbols front first, without frame markers.
    pub fn stack_symbols(&self) -> Vec<Sym> {
        self.stack
            .iter()
            .filter_map(|i| match i {
                Item::Sym(s) => Some(*s),
                Item::End(_) => None,
            })
            .collect()
    }

    /// Root subtree once the start symbol has been fully parsed.
    pub fn root(&self) -> Option<Rc<Node>> {
        let f = self.frames.head()?;
        if self.frames.len() == 1 && f.prod.is_none() {
            f.children.head().map(|n| n.0.clone())
        } else {
            None
        }
    }

    /// Rebuilds the partial tree with pending symbols as leaves.
    pub fn tree(&self, g: &GrammarSpec) -> ParseTree {
        if let Some(r) = self.root() {
            return ParseTree::from_node(&r);
        }
        // Split the stack into per-frame pending segments, innermost first.
        let mut segments: Vec<Vec<Sym>> = vec![Vec::new()];
        for item in self.stack.iter() {
            match item {
                Item::Sym(s) => segments.last_mut().unwrap().push(*s),
                Item::End(_) => segments.push(Vec::new()),
            }
        }
        let frames: Vec<&Frame> = self.frames.iter().collect();
        let mut built: Option<ParseTree> = None;
        for (i, f) in frames.iter().enumerate() {
            let mut kids: Vec<ParseTree> = f.children_vec().iter().map(|c| ParseTree::from_node(c)).collect();
            if let Some(b) = built.take() {
                kids.push(b);
            }
            for s in segments.get(i).map(|v| v.as_slice()).unwrap_or(&[]) {
                if *s != Sym::T(g.eof) {
                    kids.push(ParseTree::Pending(*s));
                }
            }
            match f.prod {
                Some(p) => built = Some(ParseTree::Node(g.prod(p).lhs, kids)),
                None => {
                    built = Some(match kids.len() {
                        1 => kids.pop().unwrap(),
                        _ => ParseTree::Node(g.start, kids),
                    })
                }
            }
        }
        built.unwrap_or(ParseTree::Pending(Sym::N(g.start)))
    }

    /// Innermost-first open frames.
    pub fn open_frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }

    /// Replaces the remaining tokens and cost, keeping stack and tree.
    pub fn with_remaining(&self, toks: Rc<TokVec>, cost: u32) -> ParserState {
        ParserState {
            stack: self.stack.clone(),
            toks,
            pos: self.pos,
            cost,
            frames: self.frames.clone(),
            fresh: Rc::new(Vec::new()),
        }
    }
}

/// Which base rule produced a successor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Match,
    Expand(ProdId),
}

/// Pops `End` markers at the top, closing frames into completed subtrees.
fn close_frames(g: &GrammarSpec, mut stack: Stack, mut frames: Frames, fresh: &mut Vec<Rc<Node>>) -> (Stack, Frames) {
    while let Some(Item::End(p)) = stack.head() {
        let p = *p;
        stack = stack.tail();
        let f = frames.head().expect("frame for End marker").clone();
        frames = frames.tail();
        let node = Node::interior(g.prod(p).lhs, p, f.children_vec());
        fresh.push(node.clone());
        let parent = frames.head().expect("parent frame").clone();
        frames = frames.tail().push(Frame { prod: parent.prod, children: parent.children.push(NodeRef(node)) });
    }
    (stack, frames)
}

pub fn match_terminal(g: &GrammarSpec, s: &ParserState) -> Option<ParserState> {
    let Some(Item::Sym(Sym::T(a))) = s.stack.head() else { return None };
    let tok = s.next_token()?;
    if tok.kind != *a {
        return None;
    }
    let mut frames = s.frames.clone();
    if *a != g.eof {
        let top = frames.head().expect("open frame").clone();
        frames = frames.tail().push(Frame { prod: top.prod, children: top.children.push(NodeRef(Node::leaf(tok.clone()))) });
    }
    let mut fresh = Vec::new();
    let (stack, frames) = close_frames(g, s.stack.tail(), frames, &mut fresh);
    Some(ParserState { stack, toks: s.toks.clone(), pos: s.pos + 1, cost: s.cost, frames, fresh: Rc::new(fresh) })
}

pub fn expand(g: &GrammarSpec, s: &ParserState, p: ProdId) -> ParserState {
    let mut stack = s.stack.tail().push(Item::End(p));
    for &x in g.prod(p).rhs.iter().rev() {
        stack = stack.push(Item::Sym(x));
    }
    let frames = s.frames.push(Frame { prod: Some(p), children: PList::new() });
    let mut fresh = Vec::new();
    let (stack, frames) = close_frames(g, stack, frames, &mut fresh);
    ParserState { stack, toks: s.toks.clone(), pos: s.pos, cost: s.cost, frames, fresh: Rc::new(fresh) }
}

/// Productions eligible for expanding `a` with lookahead `t`.
pub fn eligible<'a>(g: &'a GrammarSpec, tables: &'a SetTables, a: NtId, t: TermId) -> impl Iterator<Item = ProdId> + 'a {
    let follow = tables.follow(a);
    g.prods_of(a).iter().copied().filter(move |&p| {
        let f = tables.first_of_prod(p);
        f.contains(t) || (f.eps && follow.contains(t))
    })
}

/// All successors by one base rule, in production declaration order.
pub fn step(g: &GrammarSpec, tables: &SetTables, s: &ParserState) -> Vec<(Rule, ParserState)> {
    let mut out = Vec::new();
    match s.stack.head() {
        Some(Item::Sym(Sym::T(_))) => {
            if let Some(n) = match_terminal(g, s) {
                out.push((Rule::Match, n));
            }
        }
        Some(Item::Sym(Sym::N(a))) => {
            if let Some(tok) = s.next_token() {
                for p in eligible(g, tables, *a, tok.kind) {
                    out.push((Rule::Expand(p), expand(g, s, p)));
                }
            }
        }
        Some(Item::End(_)) => unreachable!("End markers are closed eagerly"),
        None => {}
    }
    out
}

/// Parses `toks` without edits, exploring every nondeterministic choice, and
/// returns the first complete tree found (depth-first, declaration order).
pub fn parse_exact(g: &GrammarSpec, tables: &SetTables, toks: &[Token]) -> Option<Rc<Node>> {
    parse_from(g, tables, g.start, toks)
}

/// Like [`parse_exact`] but starting from nonterminal `nt`.
pub fn parse_from(g: &GrammarSpec, tables: &SetTables, nt: NtId, toks: &[Token]) -> Option<Rc<Node>> {
    let mut v = toks.to_vec();
    v.push(Token::new(g.eof, ""));
    let tv = TokVec::new(v);
    let stack = Stack::new().push(Item::Sym(Sym::T(g.eof))).push(Item::Sym(Sym::N(nt)));
    let frames = Frames::new().push(Frame { prod: None, children: PList::new() });
    let init = ParserState { stack, toks: tv, pos: 0, cost: 0, frames, fresh: Rc::new(Vec::new()) };
    let mut work = vec![init];
    while let Some(s) = work.pop() {
        if s.is_accept() {
            return s.root();
        }
        let succ = step(g, tables, &s);
        for (_, n) in succ.into_iter().rev() {
            work.push(n);
        }
    }
    None
}

/// True when `toks` is a sentence of the grammar.
pub fn accepts(g: &GrammarSpec, tables: &SetTables, toks: &[Token]) -> bool {
    parse_exact(g, tables, toks).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;
    use crate::lexer::tokenize;

    const TINY: &str = r#"
[terminals]
ident = /[A-Za-z_][A-Za-z0-9_]*/
num = /[0-9]+/
lparen = "(" unreliable tight
rparen = ")" unreliable tight
comma = "," unreliable tight
[skip]
pattern = /\s+/
[rules]
Formula -> F ;
F -> ident lparen Args rparen ;
Args -> _ | E Tail ;
Tail -> _ | comma E Tail ;
E -> ident | num | F ;
[start]
symbol = Formula
"#;

    #[test]
    fn parses_nested_call() {
        let g = load_grammar(TINY).unwrap();
        let t = SetTables::new(&g);
        let toks = tokenize(&g, "f(x, g(1), y)").unwrap();
        let root = parse_exact(&g, &t, &toks).unwrap();
        let front = root.tokens();
        assert_eq!(front.len(), toks.len());
        assert!(front.iter().zip(&toks).all(|(a, b)| a.same(b)));
        assert!(!accepts(&g, &t, &tokenize(&g, "f(x,,y)").unwrap()));
    }

    #[test]
    fn partial_tree_has_pending_leaves() {
        let g = load_grammar(TINY).unwrap();
        let t = SetTables::new(&g);
        let toks = tokenize(&g, "f(x)").unwrap();
        let mut s = ParserState::initial(&g, &toks);
        for _ in 0..4 {
            s = step(&g, &t, &s).remove(0).1;
        }
        let rendered = s.tree(&g).render(&g);
        assert!(rendered.contains("<lparen>") || rendered.contains("lparen:("), "{rendered}");
        assert!(rendered.starts_with("(Formula"), "{rendered}");
    }
}
