//! First/Follow sets and their reliable-only counterparts.
//!
//! In the reliable variants an unreliable terminal contributes nothing, so a
//! symbol string whose every derivation consists of unreliable terminals only
//! behaves like an empty string: its reliable first set holds just ε.

use crate::grammar::{nullable_set, GrammarSpec, NtId, ProdId, Sym, TermId};

/// Terminal set over at most 128 terminal ids (end marker included) plus ε.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TermSet {
    bits: u128,
    pub eps: bool,
}

impl TermSet {
    pub const EMPTY: TermSet = TermSet { bits: 0, eps: false };

    pub fn single(t: TermId) -> Self {
        TermSet { bits: 1u128 << t, eps: false }
    }

    pub fn epsilon() -> Self {
        TermSet { bits: 0, eps: true }
    }

    #[inline]
    pub fn contains(&self, t: TermId) -> bool {
        self.bits & (1u128 << t) != 0
    }

    pub fn insert(&mut self, t: TermId) {
        self.bits |= 1u128 << t;
    }

    /// Adds the terminals of `other` (not its ε flag); reports growth.
    pub fn union_terms(&mut self, other: &TermSet) -> bool {
        let before = self.bits;
        self.bits |= other.bits;
        before != self.bits
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0 && !self.eps
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        (0..128u16).filter(move |&t| self.contains(t))
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_subset(&self, other: &TermSet) -> bool {
        self.bits & !other.bits == 0 && (!self.eps || other.eps)
    }

    pub fn names(&self, g: &GrammarSpec) -> Vec<String> {
        let mut v: Vec<String> = self.terms().map(|t| g.term_name(t).to_string()).collect();
        if self.eps {
            v.push("ε".into());
        }
        v
    }
}

impl std::fmt::Debug for TermSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut l = f.debug_set();
        for t in self.terms() {
            l.entry(&t);
        }
        if self.eps {
            l.entry(&"ε");
        }
        l.finish()
    }
}

#[derive(Clone, Debug)]
pub struct SetTables {
    pub nullable: Vec<bool>,
    pub first_nt: Vec<TermSet>,
    pub follow: Vec<TermSet>,
    /// Nonterminals that can derive a string made only of unreliable terminals.
    pub rnullable: Vec<bool>,
    pub first_rel_nt: Vec<TermSet>,
    pub follow_rel: Vec<TermSet>,
    /// Per-production first sets of the right-hand side.
    pub first_rhs: Vec<TermSet>,
    pub first_rel_rhs: Vec<TermSet>,
    eof: TermId,
    unreliable: TermSet,
}

impl SetTables {
    pub fn new(g: &GrammarSpec) -> Self {
        let (nullable, first_nt, follow) = compute_first_follow(g);
        let mut t = SetTables {
            nullable,
            first_nt,
            follow,
            rnullable: Vec::new(),
            first_rel_nt: Vec::new(),
            follow_rel: Vec::new(),
            first_rhs: Vec::new(),
            first_rel_rhs: Vec::new(),
            eof: g.eof,
            unreliable: TermSet::EMPTY,
        };
        for u in g.unreliable_terminals() {
            t.unreliable.insert(u);
        }
        compute_reliable_sets(g, &mut t);
        t.first_rhs = g.productions.iter().map(|p| t.first_seq(&p.rhs)).collect();
        t.first_rel_rhs = g.productions.iter().map(|p| t.first_rel_seq(&p.rhs)).collect();
        t
    }

    pub fn first(&self, s: Sym) -> TermSet {
        match s {
            Sym::T(t) => TermSet::single(t),
            Sym::N(n) => self.first_nt[n as usize],
        }
    }

    pub fn first_seq(&self, seq: &[Sym]) -> TermSet {
        let mut out = TermSet::EMPTY;
        for &s in seq {
            out.union_terms(&self.first(s));
            let nullable = match s {
                Sym::T(_) => false,
                Sym::N(n) => self.nullable[n as usize],
            };
            if !nullable {
                return out;
            }
        }
        out.eps = true;
        out
    }

    pub fn first_reliable(&self, s: Sym) -> TermSet {
        match s {
            Sym::T(t) if self.unreliable.contains(t) => TermSet::EMPTY,
            Sym::T(t) => TermSet::single(t),
            Sym::N(n) => self.first_rel_nt[n as usize],
        }
    }

    fn rnull(&self, s: Sym) -> bool {
        match s {
            Sym::T(t) => self.unreliable.contains(t),
            Sym::N(n) => self.rnullable[n as usize],
        }
    }

    pub fn first_rel_seq(&self, seq: &[Sym]) -> TermSet {
        let mut out = TermSet::EMPTY;
        for &s in seq {
            out.union_terms(&self.first_reliable(s));
            if !self.rnull(s) {
                return out;
            }
        }
        out.eps = true;
        out
    }

    pub fn follow(&self, n: NtId) -> TermSet {
        self.follow[n as usize]
    }

    pub fn follow_reliable(&self, n: NtId) -> TermSet {
        self.follow_rel[n as usize]
    }

    pub fn first_of_prod(&self, p: ProdId) -> &TermSet {
        &self.first_rhs[p as usize]
    }

    pub fn first_rel_of_prod(&self, p: ProdId) -> &TermSet {
        &self.first_rel_rhs[p as usize]
    }

    pub fn eof(&self) -> TermId {
        self.eof
    }
}

fn compute_first_follow(g: &GrammarSpec) -> (Vec<bool>, Vec<TermSet>, Vec<TermSet>) {
    let n = g.nonterminals.len();
    let nullable = nullable_set(g);
    let mut first = vec![TermSet::EMPTY; n];
    for (i, f) in first.iter_mut().enumerate() {
        f.eps = nullable[i];
    }
    loop {
        let mut changed = false;
        for p in &g.productions {
            let mut acc = TermSet::EMPTY;
            for &s in &p.rhs {
                match s {
                    Sym::T(t) => {
                        acc.insert(t);
                        break;
                    }
                    Sym::N(y) => {
                        acc.union_terms(&first[y as usize]);
                        if !nullable[y as usize] {
                            break;
                        }
                    }
                }
            }
            changed |= first[p.lhs as usize].union_terms(&acc);
        }
        if !changed {
            break;
        }
    }
    let mut follow = vec![TermSet::EMPTY; n];
    follow[g.start as usize].insert(g.eof);
    loop {
        let mut changed = false;
        for p in &g.productions {
            for (i, &s) in p.rhs.iter().enumerate() {
                let Sym::N(x) = s else { continue };
                let mut acc = TermSet::EMPTY;
                let mut rest_nullable = true;
                for &d in &p.rhs[i + 1..] {
                    match d {
                        Sym::T(t) => {
                            acc.insert(t);
                            rest_nullable = false;
                        }
                        Sym::N(y) => {
                            acc.union_terms(&first[y as usize]);
                            rest_nullable = nullable[y as usize];
                        }
                    }
                    if !rest_nullable {
                        break;
                    }
                }
                if rest_nullable {
                    let f = follow[p.lhs as usize];
                    acc.union_terms(&f);
                }
                changed |= follow[x as usize].union_terms(&acc);
            }
        }
        if !changed {
            break;
        }
    }
    (nullable, first, follow)
}

fn compute_reliable_sets(g: &GrammarSpec, t: &mut SetTables) {
    let n = g.nonterminals.len();
    let unrel = t.unreliable;
    let rnull_sym = |s: Sym, rn: &[bool]| match s {
        Sym::T(x) => unrel.contains(x),
        Sym::N(y) => rn[y as usize],
    };
    let mut rn = vec![false; n];
    loop {
        let mut changed = false;
        for p in &g.productions {
            if !rn[p.lhs as usize] && p.rhs.iter().all(|&s| rnull_sym(s, &rn)) {
                rn[p.lhs as usize] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut fr = vec![TermSet::EMPTY; n];
    for (i, f) in fr.iter_mut().enumerate() {
        f.eps = rn[i];
    }
    loop {
        let mut changed = false;
        for p in &g.productions {
            let mut acc = TermSet::EMPTY;
            for &s in &p.rhs {
                match s {
                    Sym::T(x) if unrel.contains(x) => {}
                    Sym::T(x) => acc.insert(x),
                    Sym::N(y) => {
                        acc.union_terms(&fr[y as usize]);
                    }
                }
                if !rnull_sym(s, &rn) {
                    break;
                }
            }
            changed |= fr[p.lhs as usize].union_terms(&acc);
        }
        if !changed {
            break;
        }
    }
    let mut fol = vec![TermSet::EMPTY; n];
    fol[g.start as usize].insert(g.eof);
    loop {
        let mut changed = false;
        for p in &g.productions {
            for (i, &s) in p.rhs.iter().enumerate() {
                let Sym::N(x) = s else { continue };
                let mut acc = TermSet::EMPTY;
                let mut rest = true;
                for &d in &p.rhs[i + 1..] {
                    match d {
                        Sym::T(y) if unrel.contains(y) => {}
                        Sym::T(y) => acc.insert(y),
                        Sym::N(y) => {
                            acc.union_terms(&fr[y as usize]);
                        }
                    }
                    if !rnull_sym(d, &rn) {
                        rest = false;
                        break;
                    }
                }
                if rest {
                    let f = fol[p.lhs as usize];
                    acc.union_terms(&f);
                }
                changed |= fol[x as usize].union_terms(&acc);
            }
        }
        if !changed {
            break;
        }
    }
    t.rnullable = rn;
    t.first_rel_nt = fr;
    t.follow_rel = fol;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{GrammarSpec, TerminalDef};

    #[test]
    fn unreliable_only_nonterminal_has_eps_only() {
        let g = GrammarSpec::new(
            vec![
                TerminalDef::literal("lparen", "(").unreliable(),
                TerminalDef::literal("rparen", ")").unreliable(),
            ],
            &[("X", vec!["lparen"]), ("X", vec!["rparen"])],
            "X",
            None,
        )
        .unwrap();
        let t = SetTables::new(&g);
        let fr = t.first_reliable(Sym::N(0));
        assert!(fr.eps);
        assert_eq!(fr.len(), 0);
        assert!(t.first_reliable(Sym::T(0)).is_empty());
    }
}
