//! Line-oriented hierarchy format.
//!
//! ```text
//! hierarchy income_hierarchy income hierarchy
//! 1 '[MIN..499]' MIN 499
//! 1 '[500..599]' 500 599
//! ```
//!
//! The first line names the hierarchy, its attribute, its kind and an
//! optional `default <code>`. Every leaf is `level label lo hi [parent]` or
//! `level label { v ... } [parent]`; internal nodes are
//! `node level label [parent]`. A missing parent means the root.

use std::collections::BTreeSet;

use super::{ConceptHierarchy, Coverage, HierarchyKind, Interval, Label, Node};
use crate::error::{Error, Result};
use crate::relstore::{format_real, Value};

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn label_text(l: &Label) -> String {
    match l {
        Label::Any => "ANY".into(),
        Label::Code(c) => c.to_string(),
        Label::Name(n) => quote(n),
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Integer(i) => i.to_string(),
        Value::Real(r) => format_real(*r),
        Value::Text(s) => quote(s),
        Value::Null => "NULL".into(),
    }
}

fn kind_text(k: HierarchyKind) -> &'static str {
    match k {
        HierarchyKind::Encoding => "encoding",
        HierarchyKind::Hierarchy => "hierarchy",
        HierarchyKind::Taxonomy => "taxonomy",
    }
}

pub fn export_text(h: &ConceptHierarchy) -> String {
    let mut out = format!("hierarchy {} {} {}", h.name, h.attribute, kind_text(h.kind));
    if let Some(d) = h.default_code {
        out.push_str(&format!(" default {d}"));
    }
    out.push('\n');
    for n in h.nodes.iter().skip(1) {
        let parent = n
            .parent
            .filter(|&p| p != 0)
            .map(|p| format!(" {}", label_text(&h.nodes[p].label)))
            .unwrap_or_default();
        match &n.coverage {
            None => out.push_str(&format!("node {} {}{parent}\n", n.level, label_text(&n.label))),
            Some(Coverage::Interval(i)) => out.push_str(&format!(
                "{} {} {} {}{parent}\n",
                n.level,
                label_text(&n.label),
                i.lo_text(),
                i.hi_text()
            )),
            Some(Coverage::Values(vs)) => {
                let vals: Vec<String> = vs.iter().map(value_text).collect();
                out.push_str(&format!(
                    "{} {} {{ {} }}{parent}\n",
                    n.level,
                    label_text(&n.label),
                    vals.join(" ")
                ));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
}

fn split(line: &str, lineno: usize) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '\'' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('\'') if chars.peek() == Some(&'\'') => {
                        chars.next();
                        s.push('\'');
                    }
                    Some('\'') => break,
                    Some(ch) => s.push(ch),
                    None => {
                        return Err(Error::Ingest {
                            line: lineno,
                            message: "unterminated quote".into(),
                        })
                    }
                }
            }
            toks.push(Tok::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            toks.push(Tok::Word(s));
        }
    }
    Ok(toks)
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        line,
        message: message.into(),
    }
}

fn parse_label(t: &Tok, line: usize) -> Result<Label> {
    match t {
        Tok::Quoted(s) => Ok(Label::Name(s.clone())),
        Tok::Word(w) if w == "ANY" => Ok(Label::Any),
        Tok::Word(w) => w
            .parse()
            .map(Label::Code)
            .map_err(|_| bad(line, format!("bad label `{w}`"))),
    }
}

fn parse_value(t: &Tok, line: usize) -> Result<Value> {
    match t {
        Tok::Quoted(s) => Ok(Value::Text(s.clone())),
        Tok::Word(w) => {
            if let Ok(i) = w.parse() {
                Ok(Value::Integer(i))
            } else {
                w.parse()
                    .map(Value::Real)
                    .map_err(|_| bad(line, format!("bad value `{w}`")))
            }
        }
    }
}

fn parse_bound(t: &Tok, sentinel: &str, line: usize) -> Result<Option<f64>> {
    match t {
        Tok::Word(w) if w == sentinel => Ok(None),
        Tok::Word(w) => w
            .parse()
            .map(Some)
            .map_err(|_| bad(line, format!("bad bound `{w}`"))),
        Tok::Quoted(_) => Err(bad(line, "bounds are numbers or MIN/MAX")),
    }
}

pub fn import_text(text: &str) -> Result<ConceptHierarchy> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| bad(1, "empty hierarchy file"))?;
    let head = split(header, hl)?;
    let word = |t: Option<&Tok>| match t {
        Some(Tok::Word(w)) => Some(w.clone()),
        _ => None,
    };
    if word(head.first()).as_deref() != Some("hierarchy") || head.len() < 4 {
        return Err(bad(hl, "expected `hierarchy <name> <attribute> <kind>`"));
    }
    let name = word(head.get(1)).ok_or_else(|| bad(hl, "missing name"))?;
    let attribute = word(head.get(2)).ok_or_else(|| bad(hl, "missing attribute"))?;
    let kind = match word(head.get(3)).as_deref() {
        Some("encoding") => HierarchyKind::Encoding,
        Some("hierarchy") => HierarchyKind::Hierarchy,
        Some("taxonomy") => HierarchyKind::Taxonomy,
        _ => return Err(bad(hl, "unknown hierarchy kind")),
    };
    let default_code = match head.get(4..) {
        Some([Tok::Word(d), Tok::Word(c)]) if d == "default" => {
            Some(c.parse().map_err(|_| bad(hl, "bad default code"))?)
        }
        Some([]) | None => None,
        _ => return Err(bad(hl, "trailing tokens after kind")),
    };

    let mut nodes = vec![Node {
        level: 0,
        label: Label::Any,
        coverage: None,
        parent: None,
    }];
    let mut pending: Vec<(usize, Option<Label>, usize)> = Vec::new();
    for (ln, line) in lines {
        let toks = split(line, ln)?;
        let (internal, rest) = match toks.first() {
            Some(Tok::Word(w)) if w == "node" => (true, &toks[1..]),
            _ => (false, &toks[..]),
        };
        let level: usize = match rest.first() {
            Some(Tok::Word(w)) => w.parse().map_err(|_| bad(ln, "bad level"))?,
            _ => return Err(bad(ln, "expected a level")),
        };
        let label = parse_label(rest.get(1).ok_or_else(|| bad(ln, "missing label"))?, ln)?;
        let (coverage, tail) = if internal {
            (None, &rest[2..])
        } else if rest.get(2) == Some(&Tok::Word("{".into())) {
            let close = rest
                .iter()
                .position(|t| t == &Tok::Word("}".into()))
                .ok_or_else(|| bad(ln, "unterminated value set"))?;
            let vals = rest[3..close]
                .iter()
                .map(|t| parse_value(t, ln))
                .collect::<Result<BTreeSet<_>>>()?;
            (Some(Coverage::Values(vals)), &rest[close + 1..])
        } else {
            let lo = parse_bound(rest.get(2).ok_or_else(|| bad(ln, "missing lo"))?, "MIN", ln)?;
            let hi = parse_bound(rest.get(3).ok_or_else(|| bad(ln, "missing hi"))?, "MAX", ln)?;
            (Some(Coverage::Interval(Interval::new(lo, hi)?)), &rest[4..])
        };
        let parent = match tail {
            [] => None,
            [t] => Some(parse_label(t, ln)?),
            _ => return Err(bad(ln, "trailing tokens")),
        };
        pending.push((nodes.len(), parent, ln));
        nodes.push(Node {
            level,
            label,
            coverage,
            parent: Some(0),
        });
    }
    for (idx, parent, ln) in pending {
        if let Some(p) = parent {
            let level = nodes[idx].level;
            let pi = nodes
                .iter()
                .position(|n| n.level + 1 == level && n.label == p)
                .ok_or_else(|| bad(ln, format!("unknown parent {p}")))?;
            nodes[idx].parent = Some(pi);
        }
    }
    ConceptHierarchy::build(&name, &attribute, kind, nodes, default_code)
}
