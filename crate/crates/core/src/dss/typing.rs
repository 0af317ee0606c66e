//! Monomorphic type checks over completed subtrees of the demo expression
//! grammar, with coercion wrappers as the only repair.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::config::{Coercion, Signature};
use super::{DssContext, TransformResult, TransformerRule};
use crate::grammar::{GrammarSpec, NtId, TermId};
use crate::lexer::Token;
use crate::parse::{parse_from, Frame, Label, Node, NodeRef, ParserState, TokVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Number,
    Text,
    Boolean,
    Record,
    Range,
    Any,
}

impl Ty {
    pub fn parse(s: &str) -> Option<Ty> {
        Some(match s {
            "number" => Ty::Number,
            "text" => Ty::Text,
            "boolean" => Ty::Boolean,
            "record" => Ty::Record,
            "range" => Ty::Range,
            "any" => Ty::Any,
            _ => return None,
        })
    }

    pub fn fits(self, want: Ty) -> bool {
        self == want || self == Ty::Any || want == Ty::Any
    }
}

/// Grammar symbols the checker needs, looked up by name.
struct Shape {
    formula: NtId,
    expr: NtId,
    expr_tail: NtId,
    bin_op: NtId,
    unary: NtId,
    postfix: NtId,
    member: NtId,
    primary: NtId,
    func_call: NtId,
    func_name: NtId,
    method: NtId,
    range: NtId,
    record: NtId,
    var: NtId,
    arg: NtId,
    opt_arg: NtId,
    num: TermId,
    str_: TermId,
    amp: TermId,
    minus: TermId,
    bang: TermId,
    ident: TermId,
    lparen: TermId,
    rparen: TermId,
    arithmetic: Vec<TermId>,
}

impl Shape {
    fn new(g: &GrammarSpec) -> Result<Shape, String> {
        let n = |s: &str| g.nonterminal(s).ok_or_else(|| format!("nonterminal `{s}`"));
        let t = |s: &str| g.terminal(s).ok_or_else(|| format!("terminal `{s}`"));
        Ok(Shape {
            formula: n("Formula")?,
            expr: n("Expr")?,
            expr_tail: n("ExprTail")?,
            bin_op: n("BinOp")?,
            unary: n("Unary")?,
            postfix: n("Postfix")?,
            member: n("Member")?,
            primary: n("Primary")?,
            func_call: n("FuncCall")?,
            func_name: n("FuncName")?,
            method: n("Method")?,
            range: n("Range")?,
            record: n("Record")?,
            var: n("Var")?,
            arg: n("Arg")?,
            opt_arg: n("OptArg")?,
            num: t("num")?,
            str_: t("str")?,
            amp: t("amp")?,
            minus: t("minus")?,
            bang: t("bang")?,
            ident: t("ident")?,
            lparen: t("lparen")?,
            rparen: t("rparen")?,
            arithmetic: ["plus", "minus", "star", "slash", "caret"].iter().filter_map(|s| g.terminal(s)).collect(),
        })
    }
}

pub struct TypingRule {
    shape: Shape,
    sigs: BTreeMap<String, Signature>,
    coerce: Vec<Coercion>,
}

/// Result of checking one subtree: its type, the possibly rewritten node and
/// the cost of the rewrites.
type Checked = Result<(Ty, Rc<Node>, u32), ()>;

impl TypingRule {
    pub fn new(g: &GrammarSpec, sigs: BTreeMap<String, Signature>, coerce: Vec<Coercion>) -> Result<Self, String> {
        Ok(TypingRule { shape: Shape::new(g)?, sigs, coerce })
    }

    fn coercion(&self, from: Ty, to: Ty) -> Option<&Coercion> {
        self.coerce.iter().find(|c| c.from == from && c.to == to)
    }

    /// Wraps `node` (an `nt` subtree) as `FUNC(node)` and reparses it as `nt`.
    fn wrap(&self, cx: &DssContext<'_>, node: &Rc<Node>, nt: NtId, func: &str) -> Option<Rc<Node>> {
        let sh = &self.shape;
        let mut toks = vec![Token::new(sh.ident, func), cx.lexer.make(sh.lparen)];
        toks.extend(node.tokens());
        toks.push(cx.lexer.make(sh.rparen));
        parse_from(cx.grammar, cx.tables, nt, &toks)
    }

    fn rebuild(node: &Rc<Node>, kids: Vec<Rc<Node>>) -> Rc<Node> {
        if kids.iter().zip(&node.children).all(|(a, b)| Rc::ptr_eq(a, b)) {
            return node.clone();
        }
        match node.label {
            Label::Nt(n, p) => Node::interior(n, p, kids),
            Label::Leaf(_) => node.clone(),
        }
    }

    /// Checks every child, keeping rewrites; returns children and summed cost.
    fn check_children(&self, cx: &DssContext<'_>, node: &Rc<Node>) -> Result<(Vec<Rc<Node>>, Vec<Ty>, u32), ()> {
        let mut kids = Vec::with_capacity(node.children.len());
        let mut tys = Vec::with_capacity(node.children.len());
        let mut cost = 0;
        for c in &node.children {
            let (t, k, c2) = self.check(cx, c)?;
            kids.push(k);
            tys.push(t);
            cost += c2;
        }
        Ok((kids, tys, cost))
    }

    fn check(&self, cx: &DssContext<'_>, node: &Rc<Node>) -> Checked {
        let sh = &self.shape;
        let Label::Nt(nt, _) = node.label else {
            let t = node.token().unwrap().kind;
            let ty = if t == sh.num {
                Ty::Number
            } else if t == sh.str_ {
                Ty::Text
            } else {
                Ty::Any
            };
            return Ok((ty, node.clone(), 0));
        };
        if nt == sh.expr {
            return self.check_expr(cx, node);
        }
        if nt == sh.unary && node.children.len() == 2 {
            let op = node.children[0].token().map(|t| t.kind);
            let (ty, inner, cost) = self.check(cx, &node.children[1])?;
            let (want, out) = if op == Some(sh.bang) { (Ty::Boolean, Ty::Boolean) } else { (Ty::Number, Ty::Number) };
            if !ty.fits(want) {
                return Err(());
            }
            debug_assert!(op == Some(sh.bang) || op == Some(sh.minus));
            return Ok((out, Self::rebuild(node, vec![node.children[0].clone(), inner]), cost));
        }
        if nt == sh.postfix {
            let (kids, tys, cost) = self.check_children(cx, node)?;
            let ty = if kids[1].children.is_empty() { tys[0] } else { Ty::Any };
            return Ok((ty, Self::rebuild(node, kids), cost));
        }
        if nt == sh.func_call || nt == sh.method {
            return self.check_call(cx, node);
        }
        let (kids, tys, cost) = self.check_children(cx, node)?;
        let rebuilt = Self::rebuild(node, kids);
        let ty = if nt == sh.record {
            Ty::Record
        } else if nt == sh.range {
            Ty::Range
        } else if nt == sh.var || nt == sh.member {
            Ty::Any
        } else if nt == sh.primary || nt == sh.unary || nt == sh.formula || nt == sh.arg {
            // one child, or a parenthesised expression
            match tys.as_slice() {
                [only] => *only,
                [_, inner, _] => *inner,
                _ => Ty::Any,
            }
        } else {
            Ty::Any
        };
        Ok((ty, rebuilt, cost))
    }

    /// `Unary (BinOp Unary)*` folded left to right.
    fn check_expr(&self, cx: &DssContext<'_>, node: &Rc<Node>) -> Checked {
        let sh = &self.shape;
        // Flatten: operand, (op, operand)*
        let mut operands = vec![node.children[0].clone()];
        let mut ops: Vec<TermId> = Vec::new();
        let mut tails = Vec::new();
        let mut tail = node.children[1].clone();
        while !tail.children.is_empty() {
            debug_assert_eq!(tail.nt(), Some(sh.expr_tail));
            let op = &tail.children[0];
            debug_assert_eq!(op.nt(), Some(sh.bin_op));
            ops.push(op.children[0].token().unwrap().kind);
            operands.push(tail.children[1].clone());
            tails.push(tail.clone());
            tail = tail.children[2].clone();
        }
        let mut cost = 0;
        let mut tys = Vec::with_capacity(operands.len());
        for o in operands.iter_mut() {
            let (t, n, c) = self.check(cx, o)?;
            *o = n;
            tys.push(t);
            cost += c;
        }
        let mut acc = tys[0];
        // whether the left side of the next operator is a single operand
        let mut single = true;
        for (i, &op) in ops.iter().enumerate() {
            let rhs = i + 1;
            if op == sh.amp {
                if !acc.fits(Ty::Text) {
                    let Some(cv) = self.coercion(acc, Ty::Text).filter(|_| single) else { return Err(()) };
                    operands[i] = self.wrap(cx, &operands[i], sh.unary, &cv.func).ok_or(())?;
                    cost += cv.cost;
                }
                if !tys[rhs].fits(Ty::Text) {
                    let Some(cv) = self.coercion(tys[rhs], Ty::Text) else { return Err(()) };
                    operands[rhs] = self.wrap(cx, &operands[rhs], sh.unary, &cv.func).ok_or(())?;
                    cost += cv.cost;
                }
                acc = Ty::Text;
                single = true;
            } else if sh.arithmetic.contains(&op) {
                if !acc.fits(Ty::Number) || !tys[rhs].fits(Ty::Number) {
                    return Err(());
                }
                acc = Ty::Number;
                single = false;
            } else {
                acc = Ty::Boolean;
                single = false;
            }
        }
        // Rebuild the ExprTail chain from the inside out.
        let mut rebuilt_tail = tail;
        for (i, t) in tails.iter().enumerate().rev() {
            let kids = vec![t.children[0].clone(), operands[i + 1].clone(), rebuilt_tail];
            rebuilt_tail = Self::rebuild(t, kids);
        }
        let out = Self::rebuild(node, vec![operands[0].clone(), rebuilt_tail]);
        Ok((acc, out, cost))
    }

    fn check_call(&self, cx: &DssContext<'_>, node: &Rc<Node>) -> Checked {
        let name = node.children[0].first_token().map(|t| t.text.to_lowercase()).unwrap_or_default();
        let sig = self.sigs.get(&name);
        let mut cost = 0;
        let mut idx = 0;
        let kids = node
            .children
            .iter()
            .map(|c| self.rewrite_args(cx, c, sig, &mut idx, &mut cost))
            .collect::<Result<Vec<_>, ()>>()?;
        Ok((sig.map_or(Ty::Any, |s| s.ret), Self::rebuild(node, kids), cost))
    }

    /// Walks an argument list, checking each `Arg` against the signature.
    fn rewrite_args(
        &self,
        cx: &DssContext<'_>,
        node: &Rc<Node>,
        sig: Option<&Signature>,
        idx: &mut usize,
        cost: &mut u32,
    ) -> Result<Rc<Node>, ()> {
        let sh = &self.shape;
        match node.nt() {
            None => Ok(node.clone()),
            Some(n) if n == sh.arg => {
                let i = *idx;
                *idx += 1;
                let (ty, checked, c) = self.check(cx, node)?;
                *cost += c;
                let want = sig.and_then(|s| {
                    s.params.get(i).or_else(|| if s.variadic { s.params.last() } else { None }).copied()
                });
                match want {
                    Some(w) if !ty.fits(w) => {
                        let cv = self.coercion(ty, w).ok_or(())?;
                        *cost += cv.cost;
                        self.wrap(cx, &checked, sh.arg, &cv.func).ok_or(())
                    }
                    _ => Ok(checked),
                }
            }
            Some(n) if n == sh.opt_arg && node.children.is_empty() => {
                *idx += 1;
                Ok(node.clone())
            }
            Some(n) if n == sh.func_name => Ok(node.clone()),
            Some(_) => {
                let kids = node
                    .children
                    .iter()
                    .map(|c| self.rewrite_args(cx, c, sig, idx, cost))
                    .collect::<Result<Vec<_>, ()>>()?;
                Ok(Self::rebuild(node, kids))
            }
        }
    }
}

impl TransformerRule for TypingRule {
    fn name(&self) -> &str {
        "typing"
    }

    fn apply(&self, cx: &DssContext<'_>, s: &ParserState) -> TransformResult {
        let Some(root) = s.fresh.last() else { return TransformResult::Pass };
        match self.check(cx, root) {
            Err(()) => TransformResult::ErrorFlag,
            Ok((_, n, 0)) if Rc::ptr_eq(&n, root) => TransformResult::Pass,
            Ok((_, n, cost)) => match replace_newest(cx.grammar, s, n, cost) {
                Some(st) => TransformResult::States(vec![st]),
                None => TransformResult::ErrorFlag,
            },
        }
    }
}

/// Swaps the most recently completed subtree for `node` and re-derives the
/// consumed tokens from the tree.
fn replace_newest(g: &GrammarSpec, s: &ParserState, node: Rc<Node>, cost: u32) -> Option<ParserState> {
    let head = s.frames.head()?;
    let frames = s.frames.tail().push(Frame { prod: head.prod, children: head.children.tail().push(NodeRef(node)) });
    let mut prefix = Vec::new();
    let all: Vec<&Frame> = frames.iter().collect();
    for f in all.iter().rev() {
        for c in f.children_vec() {
            c.frontier(&mut prefix);
        }
    }
    let mut pos = prefix.len();
    let mut toks = prefix;
    toks.extend_from_slice(s.remaining());
    if s.is_accept() {
        toks.push(Token::new(g.eof, ""));
        pos = toks.len();
    }
    Some(ParserState {
        stack: s.stack.clone(),
        toks: TokVec::new(toks),
        pos,
        cost: s.cost + cost,
        frames,
        fresh: Rc::new(Vec::new()),
    })
}
