//! The bundled Excel/PowerFx-flavoured grammar, rule tables and corpus.

use std::path::Path;

use thiserror::Error;

use crate::dss::{build_rules, load_dss, DssConfig, DssError};
use crate::grammar::{load_grammar, GrammarError, GrammarSpec};
use crate::lexer::Token;
use crate::localize::{LocError, SurprisalLocalizer};
use crate::rank::{class_set, extract_examples, train, Abstraction, RankError, RankerModel, TrainOptions};
use crate::search::{Engine, SearchConfig};

pub const GRAMMAR: &str = include_str!("../../../demo/formula.grammar");
pub const DSS: &str = include_str!("../../../demo/formula.dss");
pub const CORPUS: &str = include_str!("../../../demo/corpus.txt");
pub const WORKED: &str = include_str!("../../../demo/worked_examples.txt");

/// Field separator of case files.
pub const SEP: char = '⟂';

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Dss(#[from] DssError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Loc(#[from] LocError),
}

pub fn demo_grammar() -> GrammarSpec {
    load_grammar(GRAMMAR).expect("bundled grammar")
}

pub fn demo_dss() -> DssConfig {
    load_dss(DSS).expect("bundled rule tables")
}

pub fn demo_corpus() -> Vec<String> {
    lines(CORPUS)
}

fn lines(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_string).collect()
}

/// Drops one leading `=` (Excel style).
pub fn strip_leading_eq(src: &str) -> &str {
    let t = src.trim_start();
    t.strip_prefix('=').unwrap_or(src)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkedExample {
    pub broken: String,
    pub expected: String,
    /// Expected at rank 1 rather than merely in the top three.
    pub rank1: bool,
}

/// Lines of `broken ⟂ expected ⟂ rank1|top3`.
pub fn parse_worked(text: &str) -> Vec<WorkedExample> {
    lines(text)
        .into_iter()
        .filter_map(|l| {
            let f: Vec<&str> = l.split(SEP).map(str::trim).collect();
            match f.as_slice() {
                [b, e, m] => Some(WorkedExample { broken: b.to_string(), expected: e.to_string(), rank1: *m == "rank1" }),
                _ => None,
            }
        })
        .collect()
}

pub fn worked_examples() -> Vec<WorkedExample> {
    parse_worked(WORKED)
}

/// Grammar, rule tables and corpus loaded together.
pub struct DemoBundle {
    pub grammar: GrammarSpec,
    pub dss: DssConfig,
    pub corpus: Vec<String>,
}

impl DemoBundle {
    pub fn builtin() -> Self {
        DemoBundle { grammar: demo_grammar(), dss: demo_dss(), corpus: demo_corpus() }
    }

    pub fn from_files(grammar: &Path, dss: Option<&Path>, corpus: Option<&Path>) -> Result<Self, BundleError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| BundleError::Io(p.display().to_string(), e));
        let grammar = load_grammar(&read(grammar)?)?;
        let dss = match dss {
            Some(p) => load_dss(&read(p)?)?,
            None => DssConfig::default(),
        };
        let corpus = match corpus {
            Some(p) => lines(&read(p)?),
            None => Vec::new(),
        };
        Ok(DemoBundle { grammar, dss, corpus })
    }

    pub fn engine(&self) -> Result<Engine, BundleError> {
        let rules = build_rules(&self.dss, &self.grammar)?;
        Ok(Engine::new(self.grammar.clone()).with_rules(rules))
    }

    /// Function names from the rule tables stay verbatim in ranker contexts.
    pub fn abstraction(&self) -> Abstraction {
        Abstraction::new(self.dss.display.values())
    }

    pub fn train_ranker(&self, engine: &Engine, opts: &TrainOptions) -> Result<(RankerModel, usize), BundleError> {
        let (ex, skipped) = extract_examples(&self.grammar, &engine.lexer, &self.abstraction(), &self.corpus, opts.k, |t| {
            is_well_formed(engine, t)
        });
        Ok((train(&ex, class_set(&self.grammar), self.abstraction(), opts)?, skipped))
    }

    /// Corpus lines that lex, parse and pass the rules; the count of the
    /// others comes second.
    pub fn corpus_tokens(&self, engine: &Engine) -> (Vec<Vec<Token>>, usize) {
        let mut ok = Vec::new();
        let mut skipped = 0;
        for line in &self.corpus {
            match engine.tokenize(line) {
                Ok(t) if is_well_formed(engine, &t) => ok.push(t),
                _ => skipped += 1,
            }
        }
        (ok, skipped)
    }

    pub fn train_localizer(&self, engine: &Engine, k: usize) -> Result<(SurprisalLocalizer, usize), BundleError> {
        let (toks, skipped) = self.corpus_tokens(engine);
        Ok((SurprisalLocalizer::train(&self.grammar, self.abstraction(), &toks, k)?, skipped))
    }
}

/// Parses and passes every enabled domain rule.
pub fn is_well_formed(engine: &Engine, toks: &[Token]) -> bool {
    let cfg = SearchConfig { max_global_cost: 0, max_local_cost: 0, max_candidates: 1, ..SearchConfig::default() };
    engine.repair(toks, &cfg).next().is_some_and(|c| c.cost == 0)
}
