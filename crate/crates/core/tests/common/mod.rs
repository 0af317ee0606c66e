#![allow(dead_code)]

use fmnd::grammar::{load_grammar, GrammarSpec, Sym};
use fmnd::lexer::{Lexer, Token};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TINY: &str = r#"
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

pub fn tiny() -> GrammarSpec {
    load_grammar(TINY).unwrap()
}

const TERMS: [&str; 5] = ["a", "b", "c", "p", "q"];
const NTS: [&str; 3] = ["S", "A", "B"];

/// A random grammar over reliable `a b c` and unreliable `p q` with at most
/// `max_prods` productions, or `None` when the draw is rejected by the loader.
pub fn random_grammar(rng: &mut ChaCha8Rng, max_prods: usize) -> Option<GrammarSpec> {
    let mut text = String::from(
        "[terminals]\na = \"a\"\nb = \"b\"\nc = \"c\"\np = \"(\" unreliable tight\nq = \")\" unreliable tight\n[skip]\npattern = /\\s+/\n[rules]\n",
    );
    let total = rng.gen_range(NTS.len()..=max_prods);
    let mut per = vec![1; NTS.len()];
    for _ in NTS.len()..total {
        per[rng.gen_range(0..NTS.len())] += 1;
    }
    for (n, &k) in NTS.iter().zip(&per) {
        let alts: Vec<String> = (0..k)
            .map(|_| {
                let len = rng.gen_range(0..=3);
                if len == 0 {
                    return "_".to_string();
                }
                (0..len)
                    .map(|_| if rng.gen_bool(0.65) { TERMS[rng.gen_range(0..TERMS.len())] } else { NTS[rng.gen_range(0..NTS.len())] })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        text.push_str(&format!("{n} -> {} ;\n", alts.join(" | ")));
    }
    text.push_str("[start]\nsymbol = S\n");
    load_grammar(&text).ok()
}

/// Shortest terminal yield of every nonterminal.
pub fn min_yield(g: &GrammarSpec) -> Vec<usize> {
    let n = g.nonterminals.len();
    let mut best = vec![usize::MAX; n];
    loop {
        let mut changed = false;
        for p in &g.productions {
            let mut sum = 0usize;
            for s in &p.rhs {
                sum = sum.saturating_add(match *s {
                    Sym::T(_) => 1,
                    Sym::N(m) => best[m as usize],
                });
            }
            if sum < best[p.lhs as usize] {
                best[p.lhs as usize] = sum;
                changed = true;
            }
        }
        if !changed {
            return best;
        }
    }
}

/// A random sentence of the grammar, steering towards short productions
/// once `soft_max` tokens are committed.
pub fn sentence(g: &GrammarSpec, lx: &Lexer, rng: &mut ChaCha8Rng, soft_max: usize) -> Vec<Token> {
    let my = min_yield(g);
    let cost = |rhs: &[Sym]| rhs.iter().map(|s| if let Sym::N(m) = s { my[*m as usize] } else { 1 }).sum::<usize>();
    let mut out = Vec::new();
    let mut stack = vec![Sym::N(g.start)];
    while let Some(s) = stack.pop() {
        match s {
            Sym::T(t) => out.push(lx.make(t)),
            Sym::N(n) => {
                let ps = g.prods_of(n);
                let p = if out.len() + stack.len() >= soft_max {
                    *ps.iter().min_by_key(|&&p| cost(&g.prod(p).rhs)).unwrap()
                } else {
                    ps[rng.gen_range(0..ps.len())]
                };
                stack.extend(g.prod(p).rhs.iter().rev().copied());
            }
        }
    }
    out
}
