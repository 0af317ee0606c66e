//! Argument-count checks on calls whose argument list is being parsed.

use std::collections::HashMap;

use super::{DssContext, TransformResult, TransformerRule};
use crate::grammar::{NtId, Sym};
use crate::parse::{Label, ParserState};

pub struct ArityRule {
    pub args: Vec<NtId>,
    pub call: Vec<NtId>,
    pub arg: Vec<NtId>,
    /// Lower-cased name to `(min, max)`.
    pub table: HashMap<String, (u32, Option<u32>)>,
}

impl ArityRule {
    /// Name of the innermost open call and the number of arguments it has so
    /// far, walking outwards from the newest frame.
    pub fn current_call(&self, cx: &DssContext<'_>, s: &ParserState) -> Option<(String, u32)> {
        let g = cx.grammar;
        let mut n = 0;
        for f in s.open_frames() {
            let p = f.prod?;
            let lhs = g.prod(p).lhs;
            if self.call.contains(&lhs) {
                let kids = f.children_vec();
                let name = kids.first()?.first_token()?.text.to_string();
                return Some((name, n));
            }
            n += f.children.iter().filter(|c| matches!(c.0.label, Label::Nt(x, _) if self.arg.contains(&x))).count() as u32;
        }
        None
    }
}

impl TransformerRule for ArityRule {
    fn name(&self) -> &str {
        "arity"
    }

    fn apply(&self, cx: &DssContext<'_>, s: &ParserState) -> TransformResult {
        let Some(Sym::N(a)) = s.top() else { return TransformResult::Pass };
        if !self.args.contains(&a) {
            return TransformResult::Pass;
        }
        let Some(next) = s.next_token() else { return TransformResult::Pass };
        let Some((name, n)) = self.current_call(cx, s) else { return TransformResult::Pass };
        let Some(&(lo, hi)) = self.table.get(&name.to_lowercase()) else { return TransformResult::Pass };
        let closing = cx.tables.follow(a).contains(next.kind);
        let too_many = hi.is_some_and(|h| n >= h) && !closing;
        let too_few = n < lo && closing;
        if too_many || too_few {
            TransformResult::ErrorFlag
        } else {
            TransformResult::Pass
        }
    }
}
