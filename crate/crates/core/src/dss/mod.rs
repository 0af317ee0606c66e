//! Domain-specific parser-state transformers.
//!
//! A rule looks at a popped state and either leaves it alone, proposes
//! replacement states (with extra cost already added), or flags it as an
//! error. One flag from any rule vetoes the state.

use crate::grammar::GrammarSpec;
use crate::lexer::Lexer;
use crate::parse::ParserState;
use crate::sets::SetTables;

/// Read-only context handed to every rule.
pub struct DssContext<'a> {
    pub grammar: &'a GrammarSpec,
    pub tables: &'a SetTables,
    pub lexer: &'a Lexer,
}

#[derive(Debug)]
pub enum TransformResult {
    Pass,
    States(Vec<ParserState>),
    ErrorFlag,
}

pub trait TransformerRule: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, cx: &DssContext<'_>, s: &ParserState) -> TransformResult;
}

/// Combined verdict of all rules on one state.
#[derive(Debug, Default)]
pub struct Applied {
    /// True when some rule flagged the state.
    pub flagged: bool,
    /// True when every rule passed, so the state stands as is.
    pub identity: bool,
    /// States proposed by rules, in rule order.
    pub states: Vec<ParserState>,
}

impl Applied {
    /// The resulting state set: empty when flagged, `{s}` when all rules pass.
    pub fn into_set(self, s: &ParserState) -> Vec<ParserState> {
        if self.flagged {
            Vec::new()
        } else if self.identity {
            vec![s.clone()]
        } else {
            self.states
        }
    }
}

pub fn apply_domain_state_transformers(
    rules: &[&dyn TransformerRule],
    cx: &DssContext<'_>,
    s: &ParserState,
) -> Applied {
    let mut out = Applied { flagged: false, identity: true, states: Vec::new() };
    for r in rules {
        match r.apply(cx, s) {
            TransformResult::Pass => {}
            TransformResult::ErrorFlag => {
                return Applied { flagged: true, identity: false, states: Vec::new() };
            }
            TransformResult::States(v) => {
                out.identity = false;
                out.states.extend(v);
            }
        }
    }
    out
}

pub mod arity;
pub mod combine;
pub mod config;
pub mod symbol;
pub mod typing;

pub use config::{load_dss, DssConfig, DssError};

/// Instantiates the built-in rules described by `cfg` for grammar `g`. Rules
/// whose tables are empty are left out.
pub fn build_rules(cfg: &DssConfig, g: &GrammarSpec) -> Result<Vec<Box<dyn TransformerRule>>, DssError> {
    let nts = |names: &[String]| -> Result<Vec<crate::grammar::NtId>, DssError> {
        names
            .iter()
            .map(|n| g.nonterminal(n).ok_or_else(|| DssError::Unknown { what: "nonterminal", name: n.clone() }))
            .collect()
    };
    let term = |n: &str| g.terminal(n).ok_or_else(|| DssError::Unknown { what: "terminal", name: n.to_string() });
    let mut rules: Vec<Box<dyn TransformerRule>> = Vec::new();
    if !cfg.combine.is_empty() {
        let mut pairs = std::collections::HashMap::new();
        for (a, b, c, k) in &cfg.combine {
            pairs.insert((term(a)?, term(b)?), (term(c)?, *k));
        }
        rules.push(Box::new(combine::CombineRule { pairs }));
    }
    if !cfg.nonterminals.symbol.is_empty() {
        let available = cfg.display.clone();
        for (alias, (canon, _)) in &cfg.synonyms {
            if !available.contains_key(&canon.to_lowercase()) {
                return Err(DssError::Unknown { what: "synonym target", name: format!("{alias} -> {canon}") });
            }
        }
        rules.push(Box::new(symbol::SymbolRule {
            targets: nts(&cfg.nonterminals.symbol)?,
            available,
            synonyms: cfg.synonyms.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            max_distance: cfg.max_spell_distance,
        }));
    }
    if !cfg.arity.is_empty() {
        if cfg.nonterminals.args.is_empty() || cfg.nonterminals.call.is_empty() || cfg.nonterminals.arg.is_empty() {
            return Err(DssError::Unknown { what: "nonterminal role", name: "args/call/arg".into() });
        }
        rules.push(Box::new(arity::ArityRule {
            args: nts(&cfg.nonterminals.args)?,
            call: nts(&cfg.nonterminals.call)?,
            arg: nts(&cfg.nonterminals.arg)?,
            table: cfg.arity.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        }));
    }
    if !cfg.types.is_empty() {
        let rule = typing::TypingRule::new(g, cfg.types.clone(), cfg.coerce.clone())
            .map_err(|name| DssError::Unknown { what: "typing symbol", name })?;
        rules.push(Box::new(rule));
    }
    Ok(rules)
}
