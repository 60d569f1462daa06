//! DMQL: USE DATABASE, USE HIERARCHY, DEFINE HIERARCHY and FIND
//! ASSOCIATIONS with metapatterns.

use std::fmt;

use super::ast::*;
use super::lexer::Tok;
use super::lower::*;
use super::parser::{Parser, CLAUSE_WORDS};
use super::{Lowered, LogicalPlan};
use crate::catalog::{Catalog, Dataset};
use crate::error::Result;
use crate::hierarchy::{ConceptHierarchy, Encoder, Label, LevelDef, Member};
use crate::miner::{Basis, ComponentSchema, MinePlan, SupportSemantics, Threshold};
use crate::relstore::{CmpOp, Value};
use crate::rulestore::{Provenance, RuleStyle};

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    UseDatabase(Ident),
    UseHierarchy { hierarchy: Ident, attribute: Ident },
    DefineHierarchy(HierarchyDef),
    Find(Find),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyDef {
    pub name: Ident,
    pub attribute: Ident,
    pub table: Option<Ident>,
    pub levels: Vec<LevelLine>,
}

/// `LEVEL1 :{500..599} < LEVEL0 :ALL`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLine {
    pub level: usize,
    pub members: Vec<MemberLit>,
    pub parent_level: usize,
    /// `None` is `ALL`.
    pub parent: Option<MemberLit>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemberLit {
    Range(Option<f64>, Option<f64>),
    Value(Literal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Find {
    pub name: Option<Ident>,
    pub pattern: Option<MetaPattern>,
    pub from: Vec<FromItem>,
    pub filter: Option<SqlExpr>,
    pub group_by: Vec<SqlExpr>,
    pub order_by: Vec<OrderItem>,
    pub thresholds: Vec<ThresholdClause>,
}

/// `WITH [kind] THRESHOLD = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdClause {
    pub kind: Option<Ident>,
    pub value: Number,
    pub at: Pos,
}

/// `body ^ … -> head ^ …`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaPattern {
    pub body: Vec<PatternPred>,
    pub head: Vec<PatternPred>,
}

/// `ITEM+(X,{I})`: `plus` allows one or more instances.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPred {
    pub attr: Ident,
    pub plus: bool,
    pub args: Vec<PatternArg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternArg {
    Var(Ident),
    Set(Vec<Ident>),
}

// ---- printing ----

impl fmt::Display for MemberLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberLit::Range(lo, hi) => write!(f, "{}..{}", bound_text(*lo, "MIN"), bound_text(*hi, "MAX")),
            MemberLit::Value(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for LevelLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LEVEL{} :{{{}}} < LEVEL{} :",
            self.level,
            join(&self.members, ", "),
            self.parent_level
        )?;
        match &self.parent {
            None => f.write_str("ALL"),
            Some(m) => write!(f, "{{{m}}}"),
        }
    }
}

impl fmt::Display for PatternArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternArg::Var(v) => write!(f, "{v}"),
            PatternArg::Set(vs) => write!(f, "{{{}}}", join(vs, ", ")),
        }
    }
}

impl fmt::Display for PatternPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plus = if self.plus { "+" } else { "" };
        write!(f, "{}{plus}({})", self.attr, join(&self.args, ", "))
    }
}

impl fmt::Display for MetaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", join(&self.body, " ^ "), join(&self.head, " ^ "))
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::UseDatabase(d) => write!(f, "USE DATABASE {d}"),
            Stmt::UseHierarchy { hierarchy, attribute } => {
                write!(f, "USE HIERARCHY {hierarchy} FOR {attribute}")
            }
            Stmt::DefineHierarchy(h) => {
                write!(f, "DEFINE HIERARCHY {} FOR {}", h.name, h.attribute)?;
                if let Some(t) = &h.table {
                    write!(f, " ON {t}")?;
                }
                write!(f, " AS {}", join(&h.levels, " "))
            }
            Stmt::Find(q) => {
                f.write_str("FIND ASSOCIATIONS")?;
                if let Some(n) = &q.name {
                    write!(f, " AS {n}")?;
                }
                if let Some(m) = &q.pattern {
                    write!(f, " MATCHING WITH {m}")?;
                }
                write!(f, " FROM {}", join(&q.from, ", "))?;
                if let Some(w) = &q.filter {
                    write!(f, " WHERE {w}")?;
                }
                if !q.group_by.is_empty() {
                    write!(f, " GROUP BY {}", join(&q.group_by, ", "))?;
                }
                if !q.order_by.is_empty() {
                    let parts: Vec<String> = q
                        .order_by
                        .iter()
                        .map(|o| format!("{}{}", o.expr, if o.desc { " DESC" } else { "" }))
                        .collect();
                    write!(f, " ORDER BY {}", parts.join(", "))?;
                }
                for t in &q.thresholds {
                    f.write_str(" WITH ")?;
                    if let Some(k) = &t.kind {
                        write!(f, "{k} ")?;
                    }
                    write!(f, "THRESHOLD = {}", t.value)?;
                }
                Ok(())
            }
        }
    }
}

// ---- parsing ----

pub fn parse(p: &mut Parser) -> Result<Stmt> {
    if p.eat_kw("USE") {
        if p.eat_kw("DATABASE") {
            return Ok(Stmt::UseDatabase(p.ident(CLAUSE_WORDS)?));
        }
        if p.eat_kw("HIERARCHY") {
            let hierarchy = p.ident(CLAUSE_WORDS)?;
            p.expect_kw("FOR")?;
            let attribute = p.ident(CLAUSE_WORDS)?;
            return Ok(Stmt::UseHierarchy { hierarchy, attribute });
        }
        return Err(p.error(&["DATABASE", "HIERARCHY"]));
    }
    if p.eat_kw("DEFINE") {
        p.expect_kw("HIERARCHY")?;
        return define(p).map(Stmt::DefineHierarchy);
    }
    if p.eat_kw("FIND") {
        p.expect_kw("ASSOCIATIONS")?;
        return find(p).map(Stmt::Find);
    }
    Err(p.error(&["USE", "DEFINE", "FIND"]))
}

/// `LEVEL<k>` as one word.
fn level_word(p: &mut Parser) -> Result<usize> {
    if let Tok::Word(w) = p.peek().clone() {
        let upper = w.to_ascii_uppercase();
        if let Some(n) = upper.strip_prefix("LEVEL").and_then(|d| d.parse::<usize>().ok()) {
            p.bump();
            return Ok(n);
        }
    }
    Err(p.error(&["LEVEL<n>"]))
}

fn member(p: &mut Parser) -> Result<MemberLit> {
    let ranged = p.at_kw("MIN")
        || (matches!(p.peek(), Tok::Int(_) | Tok::Real(_)) && matches!(p.peek_at(1), Tok::Sym("..")))
        || (p.at_sym("-") && matches!(p.peek_at(2), Tok::Sym("..")));
    if ranged {
        let lo = p.bound("MIN")?;
        p.expect_sym("..")?;
        let hi = p.bound("MAX")?;
        return Ok(MemberLit::Range(lo, hi));
    }
    if let Tok::Word(w) = p.peek().clone() {
        p.bump();
        return Ok(MemberLit::Value(Literal::Str(w)));
    }
    super::msql::literal(p).map(MemberLit::Value)
}

fn braced_members(p: &mut Parser) -> Result<Vec<MemberLit>> {
    p.expect_sym("{")?;
    let ms = p.list(",", member)?;
    p.expect_sym("}")?;
    Ok(ms)
}

fn define(p: &mut Parser) -> Result<HierarchyDef> {
    let name = p.ident(CLAUSE_WORDS)?;
    p.expect_kw("FOR")?;
    let attribute = p.ident(CLAUSE_WORDS)?;
    let table = if p.eat_kw("ON") {
        Some(p.ident(CLAUSE_WORDS)?)
    } else {
        None
    };
    p.expect_kw("AS")?;
    let mut levels = Vec::new();
    loop {
        let level = level_word(p)?;
        p.expect_sym(":")?;
        let members = braced_members(p)?;
        p.expect_sym("<")?;
        let parent_level = level_word(p)?;
        p.expect_sym(":")?;
        let parent = if p.eat_kw("ALL") {
            None
        } else if !p.at_sym("{") {
            Some(member(p)?)
        } else {
            let mut ms = braced_members(p)?;
            if ms.len() != 1 {
                return Err(p.fail("a level line names exactly one parent"));
            }
            ms.pop()
        };
        levels.push(LevelLine {
            level,
            members,
            parent_level,
            parent,
        });
        let more = matches!(p.peek(), Tok::Word(w) if w.to_ascii_uppercase().starts_with("LEVEL"));
        if !more {
            break;
        }
    }
    Ok(HierarchyDef {
        name,
        attribute,
        table,
        levels,
    })
}

fn pattern_pred(p: &mut Parser) -> Result<PatternPred> {
    let attr = p.ident(CLAUSE_WORDS)?;
    let plus = p.eat_sym("+");
    p.expect_sym("(")?;
    let args = p.list(",", |p| {
        if p.eat_sym("{") {
            let vs = p.list(",", |p| p.ident(CLAUSE_WORDS))?;
            p.expect_sym("}")?;
            Ok(PatternArg::Set(vs))
        } else {
            p.ident(CLAUSE_WORDS).map(PatternArg::Var)
        }
    })?;
    p.expect_sym(")")?;
    Ok(PatternPred { attr, plus, args })
}

fn metapattern(p: &mut Parser) -> Result<MetaPattern> {
    let body = p.list("^", pattern_pred)?;
    if !p.eat_sym("->") {
        return Err(p.fail_expecting("metapattern needs an arrow between body and head", &["->", "^"]));
    }
    let head = p.list("^", pattern_pred)?;
    Ok(MetaPattern { body, head })
}

fn find(p: &mut Parser) -> Result<Find> {
    let name = if p.eat_kw("AS") {
        Some(p.ident(CLAUSE_WORDS)?)
    } else {
        None
    };
    let pattern = if p.eat_kw("MATCHING") {
        p.expect_kw("WITH")?;
        Some(metapattern(p)?)
    } else {
        None
    };
    p.expect_kw("FROM")?;
    let from = p.from_list()?;
    let filter = if p.eat_kw("WHERE") { Some(p.expr()?) } else { None };
    let mut group_by = Vec::new();
    if p.eat_kw("GROUP") {
        p.expect_kw("BY")?;
        group_by = p.list(",", |p| p.expr())?;
    }
    let order_by = if p.at_kw("ORDER") { p.order_by()? } else { Vec::new() };
    let mut thresholds = Vec::new();
    while p.at_kw("WITH") {
        let at = Pos(p.span());
        p.bump();
        let kind = if p.at_kw("THRESHOLD") {
            None
        } else {
            Some(p.ident(CLAUSE_WORDS)?)
        };
        p.expect_kw("THRESHOLD")?;
        p.expect_sym("=")?;
        thresholds.push(ThresholdClause {
            kind,
            value: p.number()?,
            at,
        });
    }
    Ok(Find {
        name,
        pattern,
        from,
        filter,
        group_by,
        order_by,
        thresholds,
    })
}

// ---- lowering ----

fn member_def(m: &MemberLit) -> Member {
    match m {
        MemberLit::Range(lo, hi) => Member::Range(*lo, *hi),
        MemberLit::Value(Literal::Int(i)) => Member::Value(Value::Integer(*i)),
        MemberLit::Value(Literal::Real(r)) => Member::Value(Value::Real(*r)),
        MemberLit::Value(Literal::Str(s)) => Member::Value(Value::text(s.clone())),
        MemberLit::Value(Literal::Null) => Member::Value(Value::Null),
    }
}

pub fn lower(s: &Stmt, catalog: &Catalog) -> Result<Lowered> {
    let mut warnings = Vec::new();
    let plan = match s {
        Stmt::UseDatabase(d) => LogicalPlan::UseDatabase(d.lower()),
        Stmt::UseHierarchy { hierarchy, attribute } => {
            if catalog.hierarchy(&hierarchy.text).is_none() {
                return Err(resolve_err(hierarchy.span, format!("unknown hierarchy `{hierarchy}`")));
            }
            LogicalPlan::UseHierarchy {
                attribute: attribute.lower(),
                hierarchy: hierarchy.lower(),
            }
        }
        Stmt::DefineHierarchy(h) => {
            if let Some(t) = &h.table {
                let data = catalog
                    .table(&t.text)
                    .ok_or_else(|| resolve_err(t.span, format!("unknown table `{t}`")))?;
                if data.table.schema().index_of(&h.attribute.lower()).is_none() {
                    return Err(resolve_err(
                        h.attribute.span,
                        format!("`{t}` has no attribute `{}`", h.attribute),
                    ));
                }
            }
            let defs: Vec<LevelDef> = h
                .levels
                .iter()
                .map(|l| LevelDef {
                    level: l.level,
                    members: l.members.iter().map(member_def).collect(),
                    parent_level: l.parent_level,
                    parent: l.parent.as_ref().map(|m| member_def(m).label()).filter(|l| *l != Label::Any),
                })
                .collect();
            LogicalPlan::DefineHierarchy(ConceptHierarchy::define_hierarchy(
                &h.name.text,
                &h.attribute.lower(),
                &defs,
            )?)
        }
        Stmt::Find(q) => find_plan(q, catalog, &mut warnings, &s.to_string())?,
    };
    Ok(Lowered { plan, warnings })
}

/// Attribute list and cardinality of one side of a metapattern.
fn side_schema(preds: &[PatternPred], columns: &[String]) -> Result<(Vec<String>, usize, Option<usize>)> {
    let mut attrs = Vec::new();
    for pr in preds {
        let a = pr.attr.lower();
        if !columns.contains(&a) {
            return Err(resolve_err(pr.attr.span, format!("unknown attribute `{}`", pr.attr)));
        }
        if !attrs.contains(&a) {
            attrs.push(a);
        }
    }
    let max = if preds.iter().any(|p| p.plus) {
        None
    } else {
        Some(preds.len())
    };
    Ok((attrs, 1, max))
}

fn find_plan(q: &Find, catalog: &Catalog, warnings: &mut Vec<String>, text: &str) -> Result<LogicalPlan> {
    let src = resolve_source(&q.from, q.filter.as_ref(), catalog, &[])?;
    let keys = q
        .group_by
        .iter()
        .map(|e| key_name(e, &src.scopes))
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset {
        table: src.table.clone(),
        group_keys: if keys.is_empty() { src.group_keys.clone() } else { keys },
        pivoted: Vec::new(),
    };
    let columns: Vec<String> = data.table.schema().names().map(str::to_string).collect();
    let free: Vec<String> = columns
        .iter()
        .filter(|c| !data.group_keys.contains(c))
        .cloned()
        .collect();
    let (body, head) = match &q.pattern {
        Some(m) => (side_schema(&m.body, &columns)?, side_schema(&m.head, &columns)?),
        None => {
            warnings.push(format!(
                "no MATCHING WITH metapattern: body and head range over {}",
                free.join(", ")
            ));
            ((free.clone(), 1, None), (free.clone(), 1, Some(1)))
        }
    };
    let mut support = None;
    let mut confidence = None;
    for t in &q.thresholds {
        let kind = t.kind.as_ref().map_or("SUPPORT".to_string(), |k| k.text.to_ascii_uppercase());
        let span = t.at.0;
        match kind.as_str() {
            "SUPPORT" => support = Some(threshold(&t.value, CmpOp::Ge, span, "support")?),
            "CONFIDENCE" => confidence = Some(threshold(&t.value, CmpOp::Ge, span, "confidence")?),
            other => warnings.push(format!("{other} THRESHOLD ignored: only support and confidence are mined")),
        }
    }
    if !q.order_by.is_empty() {
        warnings.push("ORDER BY ignored: rule tables keep mining order".into());
    }
    let body_refs: Vec<&str> = body.0.iter().map(String::as_str).collect();
    let head_refs: Vec<&str> = head.0.iter().map(String::as_str).collect();
    let mut plan = MinePlan::new(
        data.groups()?,
        ComponentSchema::new(&body_refs, body.1, body.2)?,
        ComponentSchema::new(&head_refs, head.1, head.2)?,
    );
    plan.semantics = SupportSemantics::Rule;
    plan.support = support;
    plan.confidence = confidence;
    let mut provenance = Provenance {
        style: RuleStyle::Dmql,
        semantics: SupportSemantics::Rule,
        basis: support.map_or(Basis::Relative, |t: Threshold| t.basis),
        summary: text.to_string(),
        body_attributes: body.0.clone(),
        head_attributes: head.0.clone(),
        ..Provenance::default()
    };
    for a in body.0.iter().chain(&head.0) {
        if let Some(hname) = catalog.default_hierarchies.get(a) {
            let h = catalog.hierarchy(hname).ok_or_else(|| {
                crate::error::Error::Catalog(format!("hierarchy `{hname}` in use for `{a}` no longer exists"))
            })?;
            let e = Encoder::hierarchy(h.clone());
            plan.bindings.insert(a.clone(), e.clone());
            provenance.bindings.insert(a.clone(), e);
        }
    }
    plan.validate()?;
    Ok(LogicalPlan::Mine {
        plan,
        target: q.name.as_ref().map(Ident::lower),
        provenance,
        replace: false,
    })
}
