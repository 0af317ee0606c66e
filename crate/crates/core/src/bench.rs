//! Top-k benchmark harness.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::demo::{is_well_formed, SEP};
use crate::grammar::GrammarSpec;
use crate::lexer::{Lexer, Token};
use crate::localize::{inject_errors, seeded, ErrorInjection, InjectOp, Localizer};
use crate::rank::{rank, RankerModel};
use crate::search::{Engine, SearchConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchCase {
    pub broken: String,
    pub truth: String,
    pub tags: Vec<String>,
}

/// Reads `broken ⟂ truth [⟂ tag tag ...]` lines, later fields ignored; blank lines and `#`
/// comments are ignored. Returns the 1-based numbers of malformed lines.
pub fn parse_cases(text: &str) -> (Vec<BenchCase>, Vec<usize>) {
    let mut cases = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split(SEP).map(str::trim).collect();
        match f.as_slice() {
            [b, g, ..] if !b.is_empty() && !g.is_empty() => cases.push(BenchCase {
                broken: b.to_string(),
                truth: g.to_string(),
                tags: f.get(2).map(|s| s.split_whitespace().map(str::to_string).collect()).unwrap_or_default(),
            }),
            _ => bad.push(i + 1),
        }
    }
    (cases, bad)
}

/// Canonical spacing, with identifiers in call position upper-cased. String
/// literals keep their case. Text that does not lex only has its whitespace
/// collapsed.
pub fn normalize(g: &GrammarSpec, lexer: &Lexer, text: &str) -> String {
    let Ok(mut toks) = lexer.tokenize(text) else {
        return text.split_whitespace().collect::<Vec<_>>().join(" ");
    };
    let ident = g.terminal("ident");
    let lparen = g.terminal("lparen");
    for i in 0..toks.len() {
        let call = toks.get(i + 1).is_some_and(|n| Some(n.kind) == lparen);
        if Some(toks[i].kind) == ident && call {
            toks[i].text = toks[i].text.to_uppercase().into();
        }
    }
    lexer.render(g, &toks)
}

pub struct BenchSettings<'a> {
    pub cfg: SearchConfig,
    pub ranker: Option<&'a RankerModel>,
    pub localizer: Option<&'a dyn Localizer>,
    pub strip_leading_eq: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    /// 1-based rank of the ground truth, if it was produced.
    pub rank: Option<usize>,
    pub candidates: usize,
    pub used_localizer: bool,
    pub timed_out: bool,
    pub elapsed: Duration,
    pub tags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub results: Vec<CaseResult>,
    pub malformed: usize,
}

pub fn run_case(engine: &Engine, case: &BenchCase, s: &BenchSettings<'_>) -> CaseResult {
    let g = &engine.grammar;
    let prep = |t: &str| if s.strip_leading_eq { crate::demo::strip_leading_eq(t).to_string() } else { t.to_string() };
    let broken = prep(&case.broken);
    let truth = normalize(g, &engine.lexer, &prep(&case.truth));
    let start = Instant::now();
    let (cands, used_localizer, timed_out) = match engine.tokenize(&broken) {
        Ok(toks) => {
            let out = engine.repair_with_fallback(&toks, &s.cfg, s.localizer);
            (rank(g, out.candidates, s.ranker), out.used_localizer, out.timed_out)
        }
        Err(_) => (Vec::new(), false, false),
    };
    let elapsed = start.elapsed();
    let rank = cands.iter().position(|c| normalize(g, &engine.lexer, &c.text) == truth).map(|i| i + 1);
    CaseResult { rank, candidates: cands.len(), used_localizer, timed_out, elapsed, tags: case.tags.clone() }
}

pub fn run_bench(engine: &Engine, cases: &[BenchCase], s: &BenchSettings<'_>) -> BenchReport {
    BenchReport { results: cases.iter().map(|c| run_case(engine, c, s)).collect(), malformed: 0 }
}

impl BenchReport {
    pub fn top(&self, k: usize) -> usize {
        self.top_where(k, |_| true)
    }

    pub fn top_where(&self, k: usize, keep: impl Fn(&CaseResult) -> bool) -> usize {
        self.results.iter().filter(|r| keep(r) && r.rank.is_some_and(|x| x <= k)).count()
    }

    pub fn median_time(&self) -> Duration {
        let mut t: Vec<Duration> = self.results.iter().map(|r| r.elapsed).collect();
        if t.is_empty() {
            return Duration::ZERO;
        }
        t.sort();
        t[t.len() / 2]
    }

    /// Aggregate table; holds no timings so it is reproducible.
    pub fn table(&self) -> String {
        let n = self.results.len();
        let mut s = String::new();
        writeln!(s, "{:<8}{:>8}{:>8}", "metric", "count", "pct").unwrap();
        for (name, v) in [("top-1", self.top(1)), ("top-3", self.top(3)), ("top-5", self.top(5))] {
            let pct = if n == 0 { 0.0 } else { 100.0 * v as f64 / n as f64 };
            writeln!(s, "{name:<8}{v:>8}{pct:>7.1}%").unwrap();
        }
        writeln!(s, "{:<8}{n:>8}", "cases").unwrap();
        writeln!(s, "{:<8}{:>8}", "skipped", self.malformed).unwrap();
        s
    }

    /// One `key=value` record per case.
    pub fn records(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.results.iter().enumerate() {
            let rank = r.rank.map_or("miss".to_string(), |x| x.to_string());
            write!(s, "case={i} rank={rank} candidates={} localizer={} timeout={}", r.candidates, r.used_localizer, r.timed_out)
                .unwrap();
            if !r.tags.is_empty() {
                write!(s, " tags={}", r.tags.join(",")).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Per-case wall times and the median, in milliseconds.
    pub fn timings(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.results.iter().enumerate() {
            writeln!(s, "case={i} ms={:.3}", r.elapsed.as_secs_f64() * 1e3).unwrap();
        }
        writeln!(s, "median_ms={:.3}", self.median_time().as_secs_f64() * 1e3).unwrap();
        s
    }
}

/// Whether some edit sits further before the first failure of the unedited
/// parse than the backtracking window reaches: more than `depth` reliable
/// tokens lie between them.
pub fn beyond_window(engine: &Engine, inj: &ErrorInjection, depth: usize) -> bool {
    let g = &engine.grammar;
    let cfg = SearchConfig { max_global_cost: 0, max_local_cost: 0, ..SearchConfig::default() };
    let mut st = engine.repair(&inj.broken, &cfg);
    st.by_ref().for_each(drop);
    let front = st.frontier().min(inj.broken.len());
    inj.broken_positions().into_iter().any(|p| {
        p < front && inj.broken[p..front].iter().filter(|t| !g.is_unreliable(t.kind)).count() > depth
    })
}

pub struct SuiteSpec {
    pub count: usize,
    pub max_errors: usize,
    /// Keep sampling until this many cases are beyond the window.
    pub min_beyond: usize,
    pub depth: usize,
    pub ops: Vec<InjectOp>,
    pub seed: u64,
}

/// Injected cases over `corpus`, each tagged `errors=N` and, when it
/// applies, `beyond`. Injections that leave the formula well formed are
/// dropped. Formulas are visited in a seeded order, one error count drawn
/// uniformly from `1..=max_errors` per case.
pub fn build_suite(engine: &Engine, corpus: &[Vec<Token>], spec: &SuiteSpec) -> Vec<(ErrorInjection, Vec<String>)> {
    let g = &engine.grammar;
    let mut rng = seeded(spec.seed);
    let mut out = Vec::new();
    let mut beyond = 0;
    let plain_quota = spec.count.saturating_sub(spec.min_beyond);
    let mut attempts = 0usize;
    while out.len() < spec.count && !corpus.is_empty() && attempts < spec.count * 1000 {
        attempts += 1;
        let f = &corpus[rng.gen_range(0..corpus.len())];
        let n = rng.gen_range(1..=spec.max_errors.max(1));
        let Ok(inj) = inject_errors(g, &engine.lexer, f, n, &spec.ops, &mut rng) else { continue };
        if is_well_formed(engine, &inj.broken) {
            continue;
        }
        let far = beyond_window(engine, &inj, spec.depth);
        let plain = out.len() - beyond;
        if !far && plain >= plain_quota {
            continue;
        }
        let mut tags = vec![format!("errors={n}")];
        if far {
            beyond += 1;
            tags.push("beyond".into());
        }
        out.push((inj, tags));
    }
    out
}
