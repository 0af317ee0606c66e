//! Checks shared by the dedicated tests and the acceptance run. They count
//! rather than assert so the acceptance run can report numbers.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::time::Duration;

use fmnd::editdist::token_edit_distance;
use fmnd::grammar::{load_grammar, GrammarSpec, Sym};
use fmnd::lexer::{Lexer, Token};
use fmnd::localize::{inject_errors, seeded, InjectOp};
use fmnd::parse::accepts;
use fmnd::search::{Engine, SearchConfig};
use fmnd::sets::SetTables;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// LL(1), so the unedited parse dies at exactly one place.
const CALLS: &str = r#"
[terminals]
ident = /[a-z]+/
num = /[0-9]+/
plus = "+"
lparen = "(" unreliable tight
rparen = ")" unreliable tight
lbrace = "{" unreliable tight
rbrace = "}" unreliable tight
comma = "," unreliable tight
[skip]
pattern = /\s+/
[rules]
Formula -> E ;
E -> T ETail ;
ETail -> _ | plus T ETail ;
T -> ident Call | num | lbrace Items rbrace | lparen E rparen ;
Call -> _ | lparen Args rparen ;
Args -> _ | E ArgsTail ;
ArgsTail -> _ | comma E ArgsTail ;
Items -> _ | E ItemsTail ;
ItemsTail -> _ | comma E ItemsTail ;
[start]
symbol = Formula
"#;

fn sentence(g: &GrammarSpec, lx: &Lexer, rng: &mut ChaCha8Rng, max: usize) -> Vec<Token> {
    loop {
        let mut out = Vec::new();
        let mut stack = vec![Sym::N(g.start)];
        let mut ok = true;
        while let Some(s) = stack.pop() {
            match s {
                Sym::T(t) => out.push(if g.term_name(t) == "ident" {
                    Token::new(t, ["f", "g", "x", "y"][rng.gen_range(0..4)])
                } else if g.term_name(t) == "num" {
                    Token::new(t, "1")
                } else {
                    lx.make(t)
                }),
                Sym::N(n) => {
                    let ps = g.prods_of(n);
                    // prefer short productions once the sentence grows
                    let p = if out.len() + stack.len() > max / 2 {
                        *ps.iter().min_by_key(|&&p| g.prod(p).rhs.len()).unwrap()
                    } else {
                        ps[rng.gen_range(0..ps.len())]
                    };
                    stack.extend(g.prod(p).rhs.iter().rev().copied());
                }
            }
            if out.len() > max {
                ok = false;
                break;
            }
        }
        if ok && !out.is_empty() {
            return out;
        }
    }
}

/// Start of the editable window in input coordinates.
fn window_start(g: &GrammarSpec, toks: &[Token], err: usize, depth: usize) -> usize {
    let mut seen = 0;
    for j in (0..err.min(toks.len())).rev() {
        if !g.is_unreliable(toks[j].kind) {
            seen += 1;
            if seen == depth {
                return j + 1;
            }
        }
    }
    0
}

fn oracle(g: &GrammarSpec, lx: &Lexer, tables: &SetTables, broken: &[Token], floor: usize, budget: u32) -> BTreeSet<Vec<u16>> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut frontier = vec![(broken.to_vec(), 0u32)];
    let unrel = g.unreliable_terminals();
    while let Some((cur, cost)) = frontier.pop() {
        let kinds: Vec<u16> = cur.iter().map(|t| t.kind).collect();
        if !seen.insert((kinds.clone(), cost)) {
            continue;
        }
        if cost > 0 && accepts(g, tables, &cur) {
            out.insert(kinds);
        }
        if cost == budget {
            continue;
        }
        for j in floor..=cur.len() {
            for &u in &unrel {
                if cost + g.insert_cost(u) <= budget {
                    let mut v = cur.clone();
                    v.insert(j, lx.make(u));
                    frontier.push((v, cost + g.insert_cost(u)));
                }
            }
            if j < cur.len() && g.is_unreliable(cur[j].kind) && cost + g.delete_cost(cur[j].kind) <= budget {
                let mut v = cur.clone();
                v.remove(j);
                frontier.push((v, cost + g.delete_cost(cur[j].kind)));
            }
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Completeness {
    pub cases: usize,
    /// Cases whose first-window candidate sets are equal.
    pub agree: usize,
    /// Cases where the engine produced something outside the wide oracle.
    pub subset_failures: usize,
}

/// Single-error cases inside the window, engine against the unreliable-edit
/// oracle at cost two.
pub fn windowed_completeness(cases: usize, seed: u64) -> Completeness {
    let g = load_grammar(CALLS).unwrap();
    let e = Engine::new(g.clone());
    let tables = SetTables::new(&g);
    let lx = Lexer::new(&g);
    let cfg = SearchConfig {
        max_local_cost: 2,
        max_global_cost: 2,
        max_candidates: usize::MAX,
        use_dss: false,
        ..SearchConfig::default()
    };
    let probe = SearchConfig { max_local_cost: 0, max_global_cost: 0, ..cfg.clone() };
    let mut rng = seeded(seed);
    let (mut done, mut agree, mut tries, mut subset_failures) = (0, 0, 0, 0);
    while done < cases {
        tries += 1;
        assert!(tries < 50_000, "could not build enough cases");
        let s = sentence(&g, &lx, &mut rng, 12);
        let Ok(inj) = inject_errors(&g, &lx, &s, 1, &InjectOp::ALL, &mut rng) else { continue };
        if accepts(&g, &tables, &inj.broken) {
            continue;
        }
        let mut st = e.repair(&inj.broken, &probe);
        st.by_ref().for_each(drop);
        let err = st.frontier();
        let floor = window_start(&g, &inj.broken, err, cfg.depth);
        if inj.broken_positions()[0] < floor {
            continue;
        }
        done += 1;
        let all: BTreeSet<Vec<u16>> =
            e.repair(&inj.broken, &cfg).map(|c| c.tokens.iter().map(|t| t.kind).filter(|&k| k != g.eof).collect()).collect();
        let wide = oracle(&g, &lx, &tables, &inj.broken, floor, 2);
        subset_failures += !all.is_subset(&wide) as usize;
        // the window runs to the first reliable token at or after the error
        let kinds: Vec<u16> = inj.broken.iter().map(|t| t.kind).collect();
        let r = (err..kinds.len()).find(|&j| !g.is_unreliable(kinds[j])).unwrap_or(kinds.len());
        let (head, tail) = (&kinds[..floor], &kinds[(r + 1).min(kinds.len())..]);
        let inside = |k: &&Vec<u16>| k.len() >= head.len() + tail.len() && k.starts_with(head) && k.ends_with(tail);
        let got: BTreeSet<Vec<u16>> = all.iter().filter(inside).cloned().collect();
        let want: BTreeSet<Vec<u16>> = wide.iter().filter(inside).cloned().collect();
        if got == want {
            agree += 1;
        } else if done - agree <= 5 {
            let show = |s: &BTreeSet<Vec<u16>>| -> Vec<String> {
                s.iter().map(|k| k.iter().map(|&t| lx.make(t).text.to_string()).collect::<Vec<_>>().join(" ")).collect()
            };
            let b: Vec<&str> = inj.broken.iter().map(|t| &*t.text).collect();
            eprintln!("broken {:?} err {err} floor {floor}", b);
            eprintln!("  engine only {:?}", show(&got.difference(&want).cloned().collect()));
            eprintln!("  oracle only {:?}", show(&want.difference(&got).cloned().collect()));
        }
    }
    Completeness { cases: done, agree, subset_failures }
}

#[derive(Debug, Default)]
pub struct Fuzz {
    pub candidates: usize,
    pub inputs: usize,
    pub grammars: usize,
    pub unparsable: usize,
    pub over_budget: usize,
    pub decreasing: usize,
    pub below_distance: usize,
}

impl Fuzz {
    pub fn clean(&self) -> bool {
        self.unparsable + self.over_budget + self.decreasing + self.below_distance == 0
    }
}

pub fn fuzz_cfg() -> SearchConfig {
    SearchConfig {
        max_candidates: 40,
        timeout: Duration::from_secs(1),
        max_expansions: 30_000,
        ..SearchConfig::default()
    }
}

fn strip(g: &fmnd::grammar::GrammarSpec, toks: &[Token]) -> Vec<Token> {
    toks.iter().filter(|t| t.kind != g.eof).cloned().collect()
}

/// Random grammars of at most eight productions, broken inputs of at most
/// fifteen tokens, until `target` candidates have been checked.
pub fn soundness_fuzz(target: usize, seed: u64) -> Fuzz {
    let mut rng = seeded(seed);
    let cfg = fuzz_cfg();
    let mut f = Fuzz::default();
    while f.candidates < target {
        let Some(g) = crate::common::random_grammar(&mut rng, 8) else { continue };
        f.grammars += 1;
        let lx = Lexer::new(&g);
        let tables = SetTables::new(&g);
        let e = Engine::new(g.clone());
        for _ in 0..10 {
            let base = crate::common::sentence(&g, &lx, &mut rng, 10);
            let input: Vec<Token> = if rng.gen_bool(0.2) || base.is_empty() {
                // pure noise over every terminal
                (0..rng.gen_range(0..=15)).map(|_| lx.make(rng.gen_range(0..5))).collect()
            } else {
                let n = rng.gen_range(1..=3);
                match inject_errors(&g, &lx, &base, n, &InjectOp::ALL, &mut rng) {
                    Ok(inj) => inj.broken,
                    Err(_) => base,
                }
            };
            if input.len() > 15 {
                continue;
            }
            f.inputs += 1;
            let mut last = 0;
            for c in e.repair(&input, &cfg) {
                let toks = strip(&g, &c.tokens);
                f.unparsable += !accepts(&g, &tables, &toks) as usize;
                f.over_budget += (c.cost > cfg.max_global_cost) as usize;
                f.decreasing += (c.cost < last) as usize;
                f.below_distance += (c.cost < token_edit_distance(&g, &input, &toks)) as usize;
                last = c.cost;
                f.candidates += 1;
            }
        }
    }
    f
}

