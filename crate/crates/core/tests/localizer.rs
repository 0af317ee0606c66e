use std::collections::BTreeMap;

use fmnd::demo::DemoBundle;
use fmnd::localize::{
    format_edits, inject_errors, parse_edits, replay, seeded, InjectError, InjectOp, Localizer, SurprisalLocalizer,
};
use fmnd::search::Engine;
use proptest::prelude::*;

fn setup() -> (DemoBundle, Engine, SurprisalLocalizer, Vec<Vec<fmnd::lexer::Token>>) {
    let b = DemoBundle::builtin();
    let e = b.engine().unwrap();
    let (l, skipped) = b.train_localizer(&e, 3).unwrap();
    assert_eq!(skipped, 0);
    let (corpus, _) = b.corpus_tokens(&e);
    (b, e, l, corpus)
}

#[test]
fn empty_input_predicts_nothing() {
    let (_, _, l, _) = setup();
    assert!(l.predict(&[]).is_empty());
}

#[test]
fn predictions_are_well_formed() {
    let (_, e, l, corpus) = setup();
    for toks in corpus.iter().take(60) {
        let p = l.predict(toks);
        assert_eq!(p.len(), 5.min(toks.len() + 1));
        assert!(p.iter().all(|&(i, c)| i <= toks.len() && c > 0.0 && c <= 1.0));
        assert!(p.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(p, l.predict(toks));
    }
    let one = e.tokenize("x").unwrap();
    assert_eq!(l.predict(&one).len(), 2);
}

#[test]
fn empty_corpus_is_rejected() {
    let b = DemoBundle::builtin();
    assert!(SurprisalLocalizer::train(&b.grammar, b.abstraction(), &[], 3).is_err());
}

#[test]
fn model_text_round_trip() {
    let (_, _, l, corpus) = setup();
    let back = SurprisalLocalizer::from_text(&l.to_text()).unwrap();
    assert_eq!(back.to_text(), l.to_text());
    for toks in corpus.iter().take(20) {
        assert_eq!(back.predict(toks), l.predict(toks));
    }
    assert!(SurprisalLocalizer::from_text("FMND-LOC v1\nnonsense").is_err());
}

#[test]
fn finds_inserted_punctuation_better_than_chance() {
    let (b, e, l, corpus) = setup();
    let mut rng = seeded(11);
    let (mut hit, mut chance) = (0.0, 0.0);
    for toks in corpus.iter().take(200) {
        let inj = inject_errors(&b.grammar, &e.lexer, toks, 1, &[InjectOp::Insert], &mut rng).unwrap();
        let at = inj.broken_positions()[0];
        let p = l.predict(&inj.broken);
        // the stray token sits between gaps at and at + 1
        if p.iter().any(|&(i, _)| i == at || i == at + 1) {
            hit += 1.0;
        }
        chance += (10.0 / (inj.broken.len() + 1) as f64).min(1.0);
    }
    assert!(hit > chance, "hits {hit} vs chance {chance}");
}

#[test]
fn replay_reproduces_every_injection() {
    let (b, e, _, corpus) = setup();
    for seed in 0..1000u64 {
        let mut rng = seeded(seed);
        let f = &corpus[seed as usize % corpus.len()];
        let n = 1 + (seed as usize % 3);
        let inj = inject_errors(&b.grammar, &e.lexer, f, n, &InjectOp::ALL, &mut rng).unwrap();
        assert_eq!(inj.edits.len(), n);
        assert!(inj.edits.windows(2).all(|w| w[0].position < w[1].position));
        assert_eq!(replay(&e.lexer, &inj.original, &inj.edits), inj.broken);
        let (p, o) = format_edits(&b.grammar, &inj.edits);
        assert_eq!(parse_edits(&b.grammar, &p, &o).unwrap(), inj.edits);
        for ed in &inj.edits {
            assert!(b.grammar.is_unreliable(ed.terminal));
            if ed.op != InjectOp::Insert {
                assert!(b.grammar.is_unreliable(inj.original[ed.position].kind));
            }
        }
        let again = inject_errors(&b.grammar, &e.lexer, f, n, &InjectOp::ALL, &mut seeded(seed)).unwrap();
        assert_eq!(again, inj);
    }
}

#[test]
fn ops_are_drawn_evenly() {
    let (b, e, _, corpus) = setup();
    let mut rng = seeded(5);
    let mut hist: BTreeMap<InjectOp, usize> = BTreeMap::new();
    let total = 6000;
    for i in 0..total {
        let inj = inject_errors(&b.grammar, &e.lexer, &corpus[i % corpus.len()], 1, &InjectOp::ALL, &mut rng).unwrap();
        *hist.entry(inj.edits[0].op).or_default() += 1;
    }
    for op in InjectOp::ALL {
        let share = hist[&op] as f64 / total as f64;
        assert!((share - 1.0 / 3.0).abs() < 0.05, "{op:?} {share}");
    }
}

#[test]
fn injection_limits() {
    let (b, e, _, _) = setup();
    let toks = e.tokenize("x").unwrap();
    let mut rng = seeded(0);
    assert_eq!(inject_errors(&b.grammar, &e.lexer, &toks, 0, &InjectOp::ALL, &mut rng), Err(InjectError::Zero));
    // no punctuation, so only the two gaps can take an insert
    assert!(matches!(
        inject_errors(&b.grammar, &e.lexer, &toks, 3, &InjectOp::ALL, &mut rng),
        Err(InjectError::TooFew { wanted: 3, available: 2 })
    ));
    assert!(inject_errors(&b.grammar, &e.lexer, &toks, 1, &[InjectOp::Delete], &mut rng).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn predictions_stay_in_range(words in prop::collection::vec(prop::sample::select(vec!["x", "(", ")", ",", "1", "+", "{", ":", "."]), 0..25)) {
        let (_, e, l, _) = setup();
        let toks = e.tokenize(&words.join(" ")).unwrap();
        for (i, c) in l.predict(&toks) {
            prop_assert!(i <= toks.len());
            prop_assert!(c.is_finite() && c > 0.0);
        }
    }
}
