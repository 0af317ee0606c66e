//! Maximal-munch tokenizer and canonical detokenizer.

use std::sync::Arc;

use regex::Regex;
use thiserror::Error;

use crate::grammar::{GrammarSpec, TermId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TermId,
    pub text: Arc<str>,
    pub span: (usize, usize),
}

impl Token {
    pub fn new(kind: TermId, text: &str) -> Self {
        Token { kind, text: Arc::from(text), span: (0, 0) }
    }

    /// Same kind and text; spans are ignored.
    pub fn same(&self, other: &Token) -> bool {
        self.kind == other.kind && self.text == other.text
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no token matches at byte offset {offset}")]
pub struct LexError {
    pub offset: usize,
}

/// Compiled lexer for one grammar.
#[derive(Clone, Debug)]
pub struct Lexer {
    rules: Vec<Regex>,
    skip: Option<Regex>,
    literals: Vec<Option<String>>,
}

impl Lexer {
    pub fn new(g: &GrammarSpec) -> Self {
        let rules = g
            .terminals
            .iter()
            .map(|t| Regex::new(&format!("^(?:{})", t.pattern.regex_source())).expect("validated pattern"))
            .collect();
        let skip = g.skip_pattern.as_ref().map(|s| Regex::new(&format!("^(?:{s})")).expect("validated pattern"));
        let literals = g
            .terminals
            .iter()
            .map(|t| match &t.pattern {
                crate::grammar::Pattern::Literal(s) => Some(s.clone()),
                crate::grammar::Pattern::Regex(_) => None,
            })
            .collect();
        Lexer { rules, skip, literals }
    }

    pub fn tokenize(&self, src: &str) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < src.len() {
            let rest = &src[pos..];
            if let Some(re) = &self.skip {
                if let Some(m) = re.find(rest) {
                    if m.end() > 0 {
                        pos += m.end();
                        continue;
                    }
                }
            }
            let mut best: Option<(usize, TermId)> = None;
            for (i, re) in self.rules.iter().enumerate() {
                if let Some(m) = re.find(rest) {
                    let len = m.end();
                    if len > 0 && best.map_or(true, |(l, _)| len > l) {
                        best = Some((len, i as TermId));
                    }
                }
            }
            match best {
                Some((len, kind)) => {
                    out.push(Token { kind, text: Arc::from(&rest[..len]), span: (pos, pos + len) });
                    pos += len;
                }
                None => return Err(LexError { offset: pos }),
            }
        }
        Ok(out)
    }

    /// Canonical text for a terminal with no source text, if it has one.
    pub fn literal(&self, t: TermId) -> Option<&str> {
        self.literals.get(t as usize).and_then(|l| l.as_deref())
    }

    /// Builds a token for terminal `t` using its literal text.
    pub fn make(&self, t: TermId) -> Token {
        Token::new(t, self.literal(t).unwrap_or(""))
    }

    /// Like [`detokenize`], but a space is kept wherever the tight join
    /// would lex differently (`12 . 5` must not print as `12.5`).
    pub fn render(&self, g: &GrammarSpec, toks: &[Token]) -> String {
        let toks: Vec<&Token> = toks.iter().filter(|t| t.kind != g.eof).collect();
        let mut spaced: Vec<bool> =
            (0..toks.len()).map(|i| i > 0 && !g.is_tight(toks[i - 1].kind) && !g.is_tight(toks[i].kind)).collect();
        loop {
            let mut out = String::new();
            for (t, &sp) in toks.iter().zip(&spaced) {
                if sp {
                    out.push(' ');
                }
                out.push_str(&t.text);
            }
            let Ok(back) = self.tokenize(&out) else { return out };
            let Some(i) = (0..toks.len()).find(|&i| back.get(i).map_or(true, |b| b.text != toks[i].text)) else {
                return out;
            };
            // only a token that swallowed its neighbours can be fixed by spacing
            let merged = back.get(i).is_some_and(|b| b.text.len() > toks[i].text.len());
            match (i + 1..toks.len()).find(|&j| !spaced[j]) {
                Some(j) if merged => spaced[j] = true,
                _ => return out,
            }
        }
    }
}

pub fn tokenize(g: &GrammarSpec, src: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(g).tokenize(src)
}

/// Joins tokens with single spaces, omitting the space next to tight
/// terminals. See [`Lexer::render`] for output that must lex back.
pub fn detokenize(g: &GrammarSpec, toks: &[Token]) -> String {
    let mut out = String::new();
    let mut prev: Option<TermId> = None;
    for t in toks {
        if t.kind == g.eof {
            continue;
        }
        if let Some(p) = prev {
            if !g.is_tight(p) && !g.is_tight(t.kind) {
                out.push(' ');
            }
        }
        out.push_str(&t.text);
        prev = Some(t.kind);
    }
    out
}
