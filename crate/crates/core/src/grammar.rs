//! Annotated context-free grammars and the text format they are loaded from.
//!
//! ```text
//! # comment
//! [terminals]
//! ident  = /[A-Za-z_][A-Za-z0-9_]*/
//! lparen = "(" unreliable tight
//! comma  = "," unreliable insert=1 delete=2 tight
//!
//! [skip]
//! pattern = /\s+/
//!
//! [rules]
//! F    -> ident lparen Args rparen ;
//! Args -> _ | E Tail ;
//!
//! [start]
//! symbol = F
//!
//! [substitutions]
//! unreliable = 1
//! lparen lbrace = 1
//! ```
//!
//! `_` is the empty sequence. A rule may span several lines and ends at `;`.
//! Terminal flags: `unreliable`, `insert=k`, `delete=k`, `tight` (no space is
//! printed next to the token when detokenizing).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub type TermId = u16;
pub type NtId = u16;
pub type ProdId = u16;

/// Upper bound on declared terminals; terminal sets are 128-bit masks and one
/// slot is reserved for the end marker.
pub const MAX_TERMINALS: usize = 127;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    T(TermId),
    N(NtId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Literal(String),
    Regex(String),
}

impl Pattern {
    pub fn regex_source(&self) -> String {
        match self {
            Pattern::Literal(s) => regex::escape(s),
            Pattern::Regex(r) => r.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalDef {
    pub name: String,
    pub pattern: Pattern,
    pub unreliable: bool,
    pub insert_cost: u32,
    pub delete_cost: u32,
    pub tight: bool,
}

impl TerminalDef {
    pub fn literal(name: &str, lit: &str) -> Self {
        TerminalDef {
            name: name.to_string(),
            pattern: Pattern::Literal(lit.to_string()),
            unreliable: false,
            insert_cost: 1,
            delete_cost: 1,
            tight: false,
        }
    }

    pub fn regex(name: &str, re: &str) -> Self {
        TerminalDef { pattern: Pattern::Regex(re.to_string()), ..TerminalDef::literal(name, "") }
    }

    pub fn unreliable(mut self) -> Self {
        self.unreliable = true;
        self
    }

    pub fn tight(mut self) -> Self {
        self.tight = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: NtId,
    pub rhs: Vec<Sym>,
}

/// Cost overrides for replacing one terminal by another.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitutions {
    /// Cost of replacing any unreliable terminal by a different unreliable one.
    pub unreliable: Option<u32>,
    pub pairs: BTreeMap<(TermId, TermId), u32>,
}

#[derive(Clone, Debug)]
pub struct GrammarSpec {
    pub terminals: Vec<TerminalDef>,
    pub nonterminals: Vec<String>,
    pub productions: Vec<Production>,
    pub start: NtId,
    pub skip_pattern: Option<String>,
    pub substitutions: Substitutions,
    /// End-of-input terminal id; equals `terminals.len()`.
    pub eof: TermId,
    by_lhs: Vec<Vec<ProdId>>,
    term_index: HashMap<String, TermId>,
    nt_index: HashMap<String, NtId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unreachable nonterminal `{0}`")]
    Unreachable(String),
    #[error("unproductive nonterminal `{0}`")]
    Unproductive(String),
    #[error("left recursion through `{0}`")]
    LeftRecursion(String),
    #[error("unreliable terminal `{0}` must have insert and delete cost of at least 1")]
    ZeroCost(String),
    #[error("terminal `{0}` has an empty pattern")]
    EmptyPattern(String),
    #[error("terminal `{0}` has an invalid pattern: {1}")]
    BadPattern(String, String),
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("missing start symbol")]
    MissingStart,
    #[error("too many terminals (limit {MAX_TERMINALS})")]
    TooManyTerminals,
}

impl GrammarSpec {
    /// Builds and validates a grammar from parts. Rules are `(lhs, rhs names)`;
    /// an empty rhs is ε.
    pub fn new(
        terminals: Vec<TerminalDef>,
        rules: &[(&str, Vec<&str>)],
        start: &str,
        skip_pattern: Option<&str>,
    ) -> Result<Self, GrammarError> {
        let owned: Vec<(String, Vec<String>)> = rules
            .iter()
            .map(|(l, r)| (l.to_string(), r.iter().map(|s| s.to_string()).collect()))
            .collect();
        build(terminals, owned, start.to_string(), skip_pattern.map(str::to_string), Vec::new())
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminal(&self, name: &str) -> Option<TermId> {
        self.term_index.get(name).copied()
    }

    pub fn nonterminal(&self, name: &str) -> Option<NtId> {
        self.nt_index.get(name).copied()
    }

    pub fn term_name(&self, t: TermId) -> &str {
        if t == self.eof {
            "$"
        } else {
            &self.terminals[t as usize].name
        }
    }

    pub fn nt_name(&self, n: NtId) -> &str {
        &self.nonterminals[n as usize]
    }

    pub fn sym_name(&self, s: Sym) -> &str {
        match s {
            Sym::T(t) => self.term_name(t),
            Sym::N(n) => self.nt_name(n),
        }
    }

    pub fn prods_of(&self, n: NtId) -> &[ProdId] {
        &self.by_lhs[n as usize]
    }

    pub fn prod(&self, p: ProdId) -> &Production {
        &self.productions[p as usize]
    }

    pub fn is_unreliable(&self, t: TermId) -> bool {
        t != self.eof && self.terminals[t as usize].unreliable
    }

    pub fn is_tight(&self, t: TermId) -> bool {
        t != self.eof && self.terminals[t as usize].tight
    }

    pub fn unreliable_terminals(&self) -> Vec<TermId> {
        (0..self.terminals.len() as TermId).filter(|&t| self.is_unreliable(t)).collect()
    }

    pub fn insert_cost(&self, t: TermId) -> u32 {
        self.terminals[t as usize].insert_cost
    }

    pub fn delete_cost(&self, t: TermId) -> u32 {
        self.terminals[t as usize].delete_cost
    }

    /// Cost of turning terminal `a` into terminal `b` in one step.
    pub fn replace_cost(&self, a: TermId, b: TermId) -> u32 {
        if a == b {
            return 0;
        }
        let split = self.delete_cost(a) + self.insert_cost(b);
        let mut best = split;
        if let Some(&c) = self.substitutions.pairs.get(&(a, b)) {
            best = best.min(c);
        }
        if let Some(c) = self.substitutions.unreliable {
            if self.is_unreliable(a) && self.is_unreliable(b) {
                best = best.min(c);
            }
        }
        best
    }

    /// Renders the grammar back into the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[terminals]\n");
        for t in &self.terminals {
            let pat = match &t.pattern {
                Pattern::Literal(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
                Pattern::Regex(r) => format!("/{}/", r.replace('/', "\\/")),
            };
            out.push_str(&format!("{} = {}", t.name, pat));
            if t.unreliable {
                out.push_str(" unreliable");
            }
            if t.insert_cost != 1 {
                out.push_str(&format!(" insert={}", t.insert_cost));
            }
            if t.delete_cost != 1 {
                out.push_str(&format!(" delete={}", t.delete_cost));
            }
            if t.tight {
                out.push_str(" tight");
            }
            out.push('\n');
        }
        if let Some(s) = &self.skip_pattern {
            out.push_str(&format!("\n[skip]\npattern = /{}/\n", s.replace('/', "\\/")));
        }
        out.push_str("\n[rules]\n");
        for (n, name) in self.nonterminals.iter().enumerate() {
            let alts: Vec<String> = self.by_lhs[n]
                .iter()
                .map(|&p| {
                    let rhs = &self.productions[p as usize].rhs;
                    if rhs.is_empty() {
                        "_".to_string()
                    } else {
                        rhs.iter().map(|&s| self.sym_name(s)).collect::<Vec<_>>().join(" ")
                    }
                })
                .collect();
            out.push_str(&format!("{} -> {} ;\n", name, alts.join(" | ")));
        }
        out.push_str(&format!("\n[start]\nsymbol = {}\n", self.nt_name(self.start)));
        let subs = &self.substitutions;
        if subs.unreliable.is_some() || !subs.pairs.is_empty() {
            out.push_str("\n[substitutions]\n");
            if let Some(c) = subs.unreliable {
                out.push_str(&format!("unreliable = {c}\n"));
            }
            for (&(a, b), c) in &subs.pairs {
                out.push_str(&format!("{} {} = {}\n", self.term_name(a), self.term_name(b), c));
            }
        }
        out
    }
}

impl fmt::Display for GrammarSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn build(
    terminals: Vec<TerminalDef>,
    rules: Vec<(String, Vec<String>)>,
    start: String,
    skip_pattern: Option<String>,
    subst_lines: Vec<(String, String, u32)>,
) -> Result<GrammarSpec, GrammarError> {
    if terminals.len() > MAX_TERMINALS {
        return Err(GrammarError::TooManyTerminals);
    }
    let mut term_index = HashMap::new();
    for (i, t) in terminals.iter().enumerate() {
        if term_index.insert(t.name.clone(), i as TermId).is_some() {
            return Err(GrammarError::Duplicate(t.name.clone()));
        }
        let empty = match &t.pattern {
            Pattern::Literal(s) | Pattern::Regex(s) => s.is_empty(),
        };
        if empty {
            return Err(GrammarError::EmptyPattern(t.name.clone()));
        }
        if let Err(e) = regex::Regex::new(&t.pattern.regex_source()) {
            return Err(GrammarError::BadPattern(t.name.clone(), e.to_string()));
        }
        if t.unreliable && (t.insert_cost == 0 || t.delete_cost == 0) {
            return Err(GrammarError::ZeroCost(t.name.clone()));
        }
    }
    if let Some(s) = &skip_pattern {
        if let Err(e) = regex::Regex::new(s) {
            return Err(GrammarError::BadPattern("skip".into(), e.to_string()));
        }
    }

    let mut nonterminals: Vec<String> = Vec::new();
    let mut nt_index: HashMap<String, NtId> = HashMap::new();
    for (lhs, _) in &rules {
        if term_index.contains_key(lhs) {
            return Err(GrammarError::Duplicate(lhs.clone()));
        }
        if !nt_index.contains_key(lhs) {
            nt_index.insert(lhs.clone(), nonterminals.len() as NtId);
            nonterminals.push(lhs.clone());
        }
    }
    let mut productions = Vec::new();
    for (lhs, rhs) in &rules {
        let mut syms = Vec::new();
        for name in rhs {
            if let Some(&t) = term_index.get(name) {
                syms.push(Sym::T(t));
            } else if let Some(&n) = nt_index.get(name) {
                syms.push(Sym::N(n));
            } else {
                return Err(GrammarError::UnknownSymbol(name.clone()));
            }
        }
        productions.push(Production { lhs: nt_index[lhs], rhs: syms });
    }
    let start = match nt_index.get(&start) {
        Some(&s) => s,
        None if start.is_empty() => return Err(GrammarError::MissingStart),
        None => return Err(GrammarError::UnknownSymbol(start)),
    };
    let mut by_lhs = vec![Vec::new(); nonterminals.len()];
    for (i, p) in productions.iter().enumerate() {
        by_lhs[p.lhs as usize].push(i as ProdId);
    }
    let mut substitutions = Substitutions::default();
    for (a, b, c) in subst_lines {
        if a == "unreliable" {
            substitutions.unreliable = Some(c);
            continue;
        }
        let ta = *term_index.get(&a).ok_or_else(|| GrammarError::UnknownSymbol(a.clone()))?;
        let tb = *term_index.get(&b).ok_or_else(|| GrammarError::UnknownSymbol(b.clone()))?;
        substitutions.pairs.insert((ta, tb), c);
    }

    let eof = terminals.len() as TermId;
    let g = GrammarSpec {
        terminals,
        nonterminals,
        productions,
        start,
        skip_pattern,
        substitutions,
        eof,
        by_lhs,
        term_index,
        nt_index,
    };
    validate(&g)?;
    Ok(g)
}

fn validate(g: &GrammarSpec) -> Result<(), GrammarError> {
    let n = g.nonterminals.len();
    // reachability
    let mut seen = vec![false; n];
    let mut work = vec![g.start];
    seen[g.start as usize] = true;
    while let Some(x) = work.pop() {
        for &p in g.prods_of(x) {
            for &s in &g.prod(p).rhs {
                if let Sym::N(y) = s {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        work.push(y);
                    }
                }
            }
        }
    }
    if let Some(i) = seen.iter().position(|&b| !b) {
        return Err(GrammarError::Unreachable(g.nonterminals[i].clone()));
    }
    // productivity
    let mut productive = vec![false; n];
    loop {
        let mut changed = false;
        for p in &g.productions {
            if productive[p.lhs as usize] {
                continue;
            }
            let ok = p.rhs.iter().all(|s| match s {
                Sym::T(_) => true,
                Sym::N(y) => productive[*y as usize],
            });
            if ok {
                productive[p.lhs as usize] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if let Some(i) = productive.iter().position(|&b| !b) {
        return Err(GrammarError::Unproductive(g.nonterminals[i].clone()));
    }
    // left recursion, including recursion hidden behind nullable prefixes
    let nullable = nullable_set(g);
    let mut edges: Vec<HashSet<NtId>> = vec![HashSet::new(); n];
    for p in &g.productions {
        for &s in &p.rhs {
            match s {
                Sym::T(_) => break,
                Sym::N(y) => {
                    edges[p.lhs as usize].insert(y);
                    if !nullable[y as usize] {
                        break;
                    }
                }
            }
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; n];
    fn dfs(x: usize, edges: &[HashSet<NtId>], mark: &mut [u8]) -> Option<usize> {
        mark[x] = 1;
        let mut next: Vec<NtId> = edges[x].iter().copied().collect();
        next.sort_unstable();
        for y in next {
            let y = y as usize;
            if mark[y] == 1 {
                return Some(y);
            }
            if mark[y] == 0 {
                if let Some(c) = dfs(y, edges, mark) {
                    return Some(c);
                }
            }
        }
        mark[x] = 2;
        None
    }
    for x in 0..n {
        if mark[x] == 0 {
            if let Some(c) = dfs(x, &edges, &mut mark) {
                return Err(GrammarError::LeftRecursion(g.nonterminals[c].clone()));
            }
        }
    }
    Ok(())
}

pub(crate) fn nullable_set(g: &GrammarSpec) -> Vec<bool> {
    let mut nullable = vec![false; g.nonterminals.len()];
    loop {
        let mut changed = false;
        for p in &g.productions {
            if nullable[p.lhs as usize] {
                continue;
            }
            if p.rhs.iter().all(|s| matches!(s, Sym::N(y) if nullable[*y as usize])) {
                nullable[p.lhs as usize] = true;
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// Parses the grammar text format.
pub fn load_grammar(text: &str) -> Result<GrammarSpec, GrammarError> {
    let mut section = String::new();
    let mut terminals = Vec::new();
    let mut skip = None;
    let mut start = String::new();
    let mut subst = Vec::new();
    let mut rule_buf = String::new();
    let mut rule_line = 0usize;
    let mut rules: Vec<(String, Vec<String>)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            if !rule_buf.trim().is_empty() {
                return Err(syntax(rule_line, 1, "rule is missing its terminating `;`"));
            }
            section = trimmed[1..trimmed.len() - 1].trim().to_string();
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        match section.as_str() {
            "terminals" => terminals.push(parse_terminal(trimmed, line_no, col)?),
            "skip" => {
                let (key, rest) = split_eq(trimmed, line_no, col)?;
                if key != "pattern" {
                    return Err(syntax(line_no, col, &format!("unknown key `{key}`")));
                }
                let (pat, tail) = parse_pattern(rest, line_no, col)?;
                if !tail.trim().is_empty() {
                    return Err(syntax(line_no, col, "trailing text after pattern"));
                }
                skip = Some(pat.regex_source());
            }
            "start" => {
                let (key, rest) = split_eq(trimmed, line_no, col)?;
                if key != "symbol" {
                    return Err(syntax(line_no, col, &format!("unknown key `{key}`")));
                }
                start = rest.trim().to_string();
            }
            "substitutions" => {
                let (lhs, rest) = split_eq(trimmed, line_no, col)?;
                let cost: u32 = rest
                    .trim()
                    .parse()
                    .map_err(|_| syntax(line_no, col, "substitution cost must be an integer"))?;
                let parts: Vec<&str> = lhs.split_whitespace().collect();
                match parts.as_slice() {
                    ["unreliable"] => subst.push(("unreliable".to_string(), String::new(), cost)),
                    [a, b] => subst.push((a.to_string(), b.to_string(), cost)),
                    _ => return Err(syntax(line_no, col, "expected `a b = k` or `unreliable = k`")),
                }
            }
            "rules" => {
                if rule_buf.trim().is_empty() {
                    rule_line = line_no;
                }
                rule_buf.push_str(trimmed);
                rule_buf.push(' ');
                while let Some(idx) = rule_buf.find(';') {
                    let one: String = rule_buf[..idx].to_string();
                    rule_buf = rule_buf[idx + 1..].to_string();
                    parse_rule(&one, rule_line, &mut rules)?;
                    rule_line = line_no;
                }
            }
            "" => return Err(syntax(line_no, col, "content outside of a section")),
            other => return Err(syntax(line_no, 1, &format!("unknown section `{other}`"))),
        }
    }
    if !rule_buf.trim().is_empty() {
        return Err(syntax(rule_line, 1, "rule is missing its terminating `;`"));
    }
    build(terminals, rules, start, skip, subst)
}

fn syntax(line: usize, col: usize, msg: &str) -> GrammarError {
    GrammarError::Syntax { line, col, msg: msg.to_string() }
}

fn strip_comment(line: &str) -> &str {
    // `#` starts a comment unless it sits inside a quoted literal or a regex.
    let mut in_lit = false;
    let mut in_re = false;
    let mut prev = '\0';
    for (i, c) in line.char_indices() {
        match c {
            '"' if !in_re && prev != '\\' => in_lit = !in_lit,
            '/' if !in_lit && prev != '\\' => in_re = !in_re,
            '#' if !in_lit && !in_re => return &line[..i],
            _ => {}
        }
        prev = if prev == '\\' && c == '\\' { '\0' } else { c };
    }
    line
}

fn split_eq(s: &str, line: usize, col: usize) -> Result<(String, &str), GrammarError> {
    match s.find('=') {
        Some(i) => Ok((s[..i].trim().to_string(), &s[i + 1..])),
        None => Err(syntax(line, col, "expected `=`")),
    }
}

fn parse_pattern(s: &str, line: usize, col: usize) -> Result<(Pattern, &str), GrammarError> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    let delim = match chars.next() {
        Some((_, c @ ('"' | '/'))) => c,
        _ => return Err(syntax(line, col, "expected a \"literal\" or /regex/ pattern")),
    };
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            if c == delim || (delim == '"' && c == '\\') {
                out.push(c);
            } else {
                out.push('\\');
                out.push(c);
            }
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == delim {
            let pat = if delim == '"' { Pattern::Literal(out) } else { Pattern::Regex(out) };
            return Ok((pat, &s[i + 1..]));
        } else {
            out.push(c);
        }
    }
    Err(syntax(line, col, "unterminated pattern"))
}

fn parse_terminal(s: &str, line: usize, col: usize) -> Result<TerminalDef, GrammarError> {
    let (name, rest) = split_eq(s, line, col)?;
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(syntax(line, col, &format!("bad terminal name `{name}`")));
    }
    let (pattern, flags) = parse_pattern(rest, line, col)?;
    let mut def = TerminalDef {
        name,
        pattern,
        unreliable: false,
        insert_cost: 1,
        delete_cost: 1,
        tight: false,
    };
    for flag in flags.split_whitespace() {
        if flag == "unreliable" {
            def.unreliable = true;
        } else if flag == "tight" {
            def.tight = true;
        } else if let Some(v) = flag.strip_prefix("insert=") {
            def.insert_cost = v.parse().map_err(|_| syntax(line, col, "insert cost must be an integer"))?;
        } else if let Some(v) = flag.strip_prefix("delete=") {
            def.delete_cost = v.parse().map_err(|_| syntax(line, col, "delete cost must be an integer"))?;
        } else {
            return Err(syntax(line, col, &format!("unknown terminal flag `{flag}`")));
        }
    }
    Ok(def)
}

fn parse_rule(s: &str, line: usize, rules: &mut Vec<(String, Vec<String>)>) -> Result<(), GrammarError> {
    let Some(arrow) = s.find("->") else {
        return Err(syntax(line, 1, "expected `->` in rule"));
    };
    let lhs = s[..arrow].trim();
    if lhs.is_empty() || lhs.contains(char::is_whitespace) {
        return Err(syntax(line, 1, &format!("bad rule head `{lhs}`")));
    }
    for alt in s[arrow + 2..].split('|') {
        let syms: Vec<String> = alt.split_whitespace().filter(|w| *w != "_").map(str::to_string).collect();
        if syms.is_empty() && !alt.split_whitespace().any(|w| w == "_") {
            return Err(syntax(line, 1, &format!("empty alternative for `{lhs}`; write `_` for ε")));
        }
        rules.push((lhs.to_string(), syms));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn loads_tiny() {
        let g = load_grammar(TINY).unwrap();
        assert_eq!(g.nonterminals, vec!["Formula", "F", "Args", "Tail", "E"]);
        assert_eq!(g.productions.len(), 9);
        assert_eq!(g.unreliable_terminals().len(), 3);
        assert_eq!(g.eof, 5);
    }

    #[test]
    fn round_trips_through_text() {
        let g = load_grammar(TINY).unwrap();
        let h = load_grammar(&g.to_text()).unwrap();
        assert_eq!(g.productions, h.productions);
        assert_eq!(g.terminals, h.terminals);
    }

    #[test]
    fn unknown_symbol_is_named() {
        let bad = TINY.replace("Tail -> _ | comma E Tail ;", "Tail -> _ | semi E Tail ;");
        assert_eq!(load_grammar(&bad).unwrap_err(), GrammarError::UnknownSymbol("semi".into()));
    }

    #[test]
    fn zero_cost_unreliable_rejected() {
        let bad = TINY.replace("lparen = \"(\" unreliable tight", "lparen = \"(\" unreliable insert=0");
        assert_eq!(load_grammar(&bad).unwrap_err(), GrammarError::ZeroCost("lparen".into()));
    }

    #[test]
    fn left_recursion_rejected() {
        let bad = TINY.replace("E -> ident | num | F ;", "E -> E comma ident | num | F ;");
        assert!(matches!(load_grammar(&bad), Err(GrammarError::LeftRecursion(_))));
        let hidden = TINY.replace("E -> ident | num | F ;", "E -> Args E | num | F ;");
        assert!(matches!(load_grammar(&hidden), Err(GrammarError::LeftRecursion(_))));
    }

    #[test]
    fn unreachable_and_unproductive() {
        let unreach = TINY.replace("[start]", "[rules]\nLost -> num ;\n[start]");
        assert_eq!(load_grammar(&unreach).unwrap_err(), GrammarError::Unreachable("Lost".into()));
        let unprod = TINY.replace("E -> ident | num | F ;", "E -> ident | num | F | Loop ;\nLoop -> comma Loop ;");
        assert_eq!(load_grammar(&unprod).unwrap_err(), GrammarError::Unproductive("Loop".into()));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = load_grammar("[terminals]\nfoo = bar\n").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, .. }));
        let err = load_grammar("[rules]\nA -> b\n").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, .. }));
    }

    #[test]
    fn comment_inside_literal_kept() {
        let g = load_grammar("[terminals]\nhash = \"#\" # trailing\n[rules]\nS -> hash ;\n[start]\nsymbol = S\n").unwrap();
        assert_eq!(g.terminals[0].pattern, Pattern::Literal("#".into()));
    }

    #[test]
    fn replace_cost_uses_table() {
        let g = load_grammar(&format!("{TINY}\n[substitutions]\nunreliable = 1\n")).unwrap();
        let (l, r, i) = (g.terminal("lparen").unwrap(), g.terminal("rparen").unwrap(), g.terminal("ident").unwrap());
        assert_eq!(g.replace_cost(l, r), 1);
        assert_eq!(g.replace_cost(l, i), 2);
        assert_eq!(g.replace_cost(i, i), 0);
    }
}
