//! Corrects unknown names in name positions by spelling distance or synonym.

use std::collections::{BTreeMap, HashMap};

use super::{DssContext, TransformResult, TransformerRule};
use crate::grammar::{NtId, Sym};
use crate::lexer::Token;
use crate::parse::{ParserState, TokVec};

pub struct SymbolRule {
    pub targets: Vec<NtId>,
    /// Lower-cased name to canonical spelling.
    pub available: BTreeMap<String, String>,
    /// Lower-cased alias to canonical spelling and cost.
    pub synonyms: HashMap<String, (String, u32)>,
    pub max_distance: usize,
}

impl SymbolRule {
    /// Corrections for `name`, cheapest first, ties by spelling.
    pub fn corrections(&self, name: &str) -> Vec<(String, u32)> {
        let low = name.to_lowercase();
        let mut out: Vec<(String, u32)> = Vec::new();
        if let Some((c, k)) = self.synonyms.get(&low) {
            out.push((c.clone(), *k));
        }
        for (key, canon) in &self.available {
            let d = strsim::levenshtein(&low, key);
            if d > 0 && d <= self.max_distance && !out.iter().any(|(c, _)| c == canon) {
                out.push((canon.clone(), d as u32));
            }
        }
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

impl TransformerRule for SymbolRule {
    fn name(&self) -> &str {
        "symbol"
    }

    fn apply(&self, _cx: &DssContext<'_>, s: &ParserState) -> TransformResult {
        let Some(Sym::N(a)) = s.top() else { return TransformResult::Pass };
        if !self.targets.contains(&a) {
            return TransformResult::Pass;
        }
        let Some(tok) = s.next_token() else { return TransformResult::Pass };
        if self.available.contains_key(&tok.text.to_lowercase()) {
            return TransformResult::Pass;
        }
        let fixes = self.corrections(&tok.text);
        if fixes.is_empty() {
            return TransformResult::ErrorFlag;
        }
        let states = fixes
            .into_iter()
            .map(|(name, cost)| {
                let mut toks = s.toks.toks.clone();
                toks[s.pos] = Token { kind: tok.kind, text: name.as_str().into(), span: tok.span };
                s.with_remaining(TokVec::new(toks), s.cost + cost)
            })
            .collect();
        TransformResult::States(states)
    }
}
