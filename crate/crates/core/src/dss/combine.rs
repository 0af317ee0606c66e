//! Merges two adjacent tokens that were meant as one operator.

use std::collections::HashMap;

use super::{DssContext, TransformResult, TransformerRule};
use crate::grammar::TermId;
use crate::parse::{ParserState, TokVec};

pub struct CombineRule {
    pub pairs: HashMap<(TermId, TermId), (TermId, u32)>,
}

impl TransformerRule for CombineRule {
    fn name(&self) -> &str {
        "combine"
    }

    fn apply(&self, cx: &DssContext<'_>, s: &ParserState) -> TransformResult {
        let rest = s.remaining();
        if rest.len() < 2 {
            return TransformResult::Pass;
        }
        let Some(&(merged, cost)) = self.pairs.get(&(rest[0].kind, rest[1].kind)) else {
            return TransformResult::Pass;
        };
        let mut toks = s.toks.toks[..s.pos].to_vec();
        toks.push(cx.lexer.make(merged));
        toks.extend_from_slice(&rest[2..]);
        let merged_state = s.with_remaining(TokVec::new(toks), s.cost + cost);
        TransformResult::States(vec![s.clone(), merged_state])
    }
}
