//! Text format for domain rule tables.
//!
//! ```text
//! [arity]
//! IsBlank = 1..1
//! COUNT = 1..*
//! [synonyms]
//! Length = Len 1
//! [combine]
//! lt eq -> le 1
//! [types]
//! MID(text, number, number) -> text
//! COUNT(any...) -> number
//! [coerce]
//! number -> text = TEXT 1
//! [symbols]
//! f g
//! [spelling]
//! max_distance = 2
//! [nonterminals]
//! args = ArgsList ArgsListTail
//! call = FuncCall Method
//! arg = Arg OptArg
//! symbol = FuncName
//! ```
//!
//! Function names are matched case-insensitively everywhere.

use std::collections::BTreeMap;

use thiserror::Error;

use super::typing::Ty;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DssError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub params: Vec<Ty>,
    /// Last parameter repeats.
    pub variadic: bool,
    pub ret: Ty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coercion {
    pub from: Ty,
    pub to: Ty,
    pub func: String,
    pub cost: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NtNames {
    pub args: Vec<String>,
    pub call: Vec<String>,
    pub arg: Vec<String>,
    pub symbol: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DssConfig {
    /// Lower-cased name to `(min, max)`; `None` max means variadic.
    pub arity: BTreeMap<String, (u32, Option<u32>)>,
    /// Lower-cased alias to canonical spelling and cost.
    pub synonyms: BTreeMap<String, (String, u32)>,
    pub combine: Vec<(String, String, String, u32)>,
    pub types: BTreeMap<String, Signature>,
    pub coerce: Vec<Coercion>,
    /// Extra names that count as defined besides those above.
    pub symbols: Vec<String>,
    pub max_spell_distance: usize,
    pub nonterminals: NtNames,
    /// Canonical spelling of every known function name, keyed lower-case.
    pub display: BTreeMap<String, String>,
}

impl DssConfig {
    pub fn arity_of(&self, name: &str) -> Option<(u32, Option<u32>)> {
        self.arity.get(&name.to_lowercase()).copied()
    }

    fn note(&mut self, name: &str) {
        self.display.entry(name.to_lowercase()).or_insert_with(|| name.to_string());
    }
}

fn err(line: usize, msg: impl Into<String>) -> DssError {
    DssError::Syntax { line, msg: msg.into() }
}

fn parse_ty(s: &str, line: usize) -> Result<Ty, DssError> {
    Ty::parse(s.trim()).ok_or_else(|| err(line, format!("unknown type `{}`", s.trim())))
}

pub fn load_dss(text: &str) -> Result<DssConfig, DssError> {
    let mut cfg = DssConfig { max_spell_distance: 2, ..Default::default() };
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        match section.as_str() {
            "arity" => {
                let (name, range) = line.split_once('=').ok_or_else(|| err(ln, "expected `Name = min..max`"))?;
                let (lo, hi) = range.trim().split_once("..").ok_or_else(|| err(ln, "expected `min..max`"))?;
                let lo: u32 = lo.trim().parse().map_err(|_| err(ln, "bad minimum arity"))?;
                let hi = match hi.trim() {
                    "*" => None,
                    h => Some(h.parse::<u32>().map_err(|_| err(ln, "bad maximum arity"))?),
                };
                if hi.is_some_and(|h| h < lo) {
                    return Err(err(ln, "minimum arity exceeds maximum"));
                }
                let name = name.trim();
                cfg.note(name);
                cfg.arity.insert(name.to_lowercase(), (lo, hi));
            }
            "synonyms" => {
                let (alias, rest) = line.split_once('=').ok_or_else(|| err(ln, "expected `Alias = Canonical cost`"))?;
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [canon, cost] = parts.as_slice() else { return Err(err(ln, "expected `Alias = Canonical cost`")) };
                let cost: u32 = cost.parse().map_err(|_| err(ln, "bad synonym cost"))?;
                cfg.note(canon);
                cfg.synonyms.insert(alias.trim().to_lowercase(), (canon.to_string(), cost));
            }
            "combine" => {
                let (lhs, rhs) = line.split_once("->").ok_or_else(|| err(ln, "expected `a b -> c cost`"))?;
                let l: Vec<&str> = lhs.split_whitespace().collect();
                let r: Vec<&str> = rhs.split_whitespace().collect();
                match (l.as_slice(), r.as_slice()) {
                    ([a, b], [c, k]) => {
                        let k: u32 = k.parse().map_err(|_| err(ln, "bad combine cost"))?;
                        cfg.combine.push((a.to_string(), b.to_string(), c.to_string(), k));
                    }
                    _ => return Err(err(ln, "expected `a b -> c cost`")),
                }
            }
            "types" => {
                let (head, ret) = line.split_once("->").ok_or_else(|| err(ln, "expected `Name(params) -> type`"))?;
                let open = head.find('(').ok_or_else(|| err(ln, "missing `(`"))?;
                let close = head.rfind(')').ok_or_else(|| err(ln, "missing `)`"))?;
                let name = head[..open].trim();
                let mut params = Vec::new();
                let mut variadic = false;
                let inner = head[open + 1..close].trim();
                if !inner.is_empty() {
                    for p in inner.split(',') {
                        let p = p.trim();
                        if let Some(base) = p.strip_suffix("...") {
                            variadic = true;
                            params.push(parse_ty(base, ln)?);
                        } else {
                            if variadic {
                                return Err(err(ln, "only the last parameter may repeat"));
                            }
                            params.push(parse_ty(p, ln)?);
                        }
                    }
                }
                cfg.note(name);
                cfg.types.insert(name.to_lowercase(), Signature { params, variadic, ret: parse_ty(ret, ln)? });
            }
            "coerce" => {
                let (conv, rest) = line.split_once('=').ok_or_else(|| err(ln, "expected `from -> to = FUNC cost`"))?;
                let (from, to) = conv.split_once("->").ok_or_else(|| err(ln, "expected `from -> to`"))?;
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [func, cost] = parts.as_slice() else { return Err(err(ln, "expected `FUNC cost`")) };
                cfg.coerce.push(Coercion {
                    from: parse_ty(from, ln)?,
                    to: parse_ty(to, ln)?,
                    func: func.to_string(),
                    cost: cost.parse().map_err(|_| err(ln, "bad coercion cost"))?,
                });
            }
            "symbols" => {
                for name in line.split_whitespace() {
                    cfg.note(name);
                    cfg.symbols.push(name.to_string());
                }
            }
            "spelling" => {
                let (k, v) = line.split_once('=').ok_or_else(|| err(ln, "expected `max_distance = k`"))?;
                if k.trim() != "max_distance" {
                    return Err(err(ln, format!("unknown key `{}`", k.trim())));
                }
                cfg.max_spell_distance = v.trim().parse().map_err(|_| err(ln, "bad distance"))?;
            }
            "nonterminals" => {
                let (k, v) = line.split_once('=').ok_or_else(|| err(ln, "expected `role = Names`"))?;
                let names: Vec<String> = v.split_whitespace().map(str::to_string).collect();
                let slot = match k.trim() {
                    "args" => &mut cfg.nonterminals.args,
                    "call" => &mut cfg.nonterminals.call,
                    "arg" => &mut cfg.nonterminals.arg,
                    "symbol" => &mut cfg.nonterminals.symbol,
                    other => return Err(err(ln, format!("unknown role `{other}`"))),
                };
                *slot = names;
            }
            "" => return Err(err(ln, "content outside of a section")),
            other => return Err(err(ln, format!("unknown section `{other}`"))),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_every_section() {
        let c = load_dss(
            "[arity]\nIf = 2..3\nCOUNT = 1..*\n[synonyms]\nLength = Len 1\n[combine]\nlt eq -> le 1\n\
             [types]\nMID(text, number, number) -> text\nCOUNT(any...) -> number\n\
             [coerce]\nnumber -> text = TEXT 1\n[symbols]\nf g\n[nonterminals]\nargs = A B\n",
        )
        .unwrap();
        assert_eq!(c.arity_of("IF"), Some((2, Some(3))));
        assert_eq!(c.arity_of("count"), Some((1, None)));
        assert_eq!(c.synonyms["length"], ("Len".to_string(), 1));
        assert!(c.types["count"].variadic);
        assert_eq!(c.coerce[0].func, "TEXT");
        assert_eq!(c.display["len"], "Len");
        assert_eq!(c.nonterminals.args, ["A", "B"]);
    }

    #[test]
    fn rejects_inverted_range() {
        assert!(matches!(load_dss("[arity]\nf = 3..1\n"), Err(DssError::Syntax { line: 2, .. })));
    }
}
