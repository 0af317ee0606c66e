//! Case files, normalization and the top-k counts.

use fmnd::bench::{build_suite, normalize, parse_cases, run_bench, BenchCase, BenchSettings, SuiteSpec};
use fmnd::demo::{is_well_formed, DemoBundle};
use fmnd::localize::InjectOp;
use fmnd::search::SearchConfig;

#[test]
fn case_lines() {
    let text = "# header\n\nSUM(1 ⟂ SUM(1)\nbad line\nIf(x ⟂ If(x, 1) ⟂ errors=2 beyond ⟂ 3 ⟂ insert\n ⟂ x\n";
    let (cases, bad) = parse_cases(text);
    assert_eq!(bad, [4, 6]);
    assert_eq!(cases.len(), 2);
    assert_eq!(cases[0], BenchCase { broken: "SUM(1".into(), truth: "SUM(1)".into(), tags: vec![] });
    assert_eq!(cases[1].tags, ["errors=2", "beyond"]);
}

#[test]
fn normalization() {
    let b = DemoBundle::builtin();
    let e = b.engine().unwrap();
    let n = |s: &str| normalize(&e.grammar, &e.lexer, s);
    assert_eq!(n("sum( 1,2 )"), n("SUM(1, 2)"));
    assert_ne!(n("\"abc\""), n("\"ABC\""));
    // only names in call position change case
    assert_ne!(n("x + 1"), n("X + 1"));
    assert_eq!(n("  \" open"), "\" open");
}

#[test]
fn identity_suite_is_all_top1() {
    let b = DemoBundle::builtin();
    let e = b.engine().unwrap();
    let cases: Vec<BenchCase> =
        b.corpus.iter().take(30).map(|l| BenchCase { broken: l.clone(), truth: l.clone(), tags: vec![] }).collect();
    let s = BenchSettings { cfg: SearchConfig::default(), ranker: None, localizer: None, strip_leading_eq: false };
    let r = run_bench(&e, &cases, &s);
    assert_eq!(r.top(1), cases.len());
    assert!(r.table().contains("top-1"));
    assert_eq!(r.records().lines().count(), cases.len());
}

#[test]
fn top_k_is_monotone() {
    let b = DemoBundle::builtin();
    let e = b.engine().unwrap();
    let (cases, bad) = parse_cases(include_str!("../../../demo/bench_suite.txt"));
    assert!(bad.is_empty());
    let cfg = SearchConfig { timeout: std::time::Duration::from_secs(2), ..SearchConfig::default() };
    let s = BenchSettings { cfg, ranker: None, localizer: None, strip_leading_eq: false };
    let r = run_bench(&e, &cases[..20], &s);
    assert!(r.top(1) <= r.top(3) && r.top(3) <= r.top(5) && r.top(5) <= 20);
}

#[test]
fn suites_are_broken_tagged_and_reproducible() {
    let b = DemoBundle::builtin();
    let e = b.engine().unwrap();
    let (corpus, _) = b.corpus_tokens(&e);
    let spec = SuiteSpec { count: 15, max_errors: 3, min_beyond: 3, depth: 2, ops: InjectOp::ALL.to_vec(), seed: 4 };
    let a = build_suite(&e, &corpus, &spec);
    assert_eq!(a.len(), 15);
    assert!(a.iter().filter(|(_, t)| t.iter().any(|x| x == "beyond")).count() >= 3);
    for (inj, tags) in &a {
        assert!(!is_well_formed(&e, &inj.broken));
        let n: usize = tags[0].strip_prefix("errors=").unwrap().parse().unwrap();
        assert_eq!(inj.edits.len(), n);
    }
    let again = build_suite(&e, &corpus, &spec);
    assert!(a.iter().zip(&again).all(|(x, y)| x.0.broken == y.0.broken && x.1 == y.1));
}
