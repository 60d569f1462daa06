//! MSQL: CREATE ENCODING, GETRULES, SELECTRULES and data selection with
//! SATISFIES / VIOLATES.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use super::lower::*;
use super::parser::{Parser, CLAUSE_WORDS};
use super::{CrossOutput, CrossOverPlan, Lowered, LogicalPlan};
use crate::catalog::{Catalog, Dataset};
use crate::error::Result;
use crate::hierarchy::{ConceptHierarchy, Encoder};
use crate::miner::{Basis, ComponentSchema, MinePlan, SupportSemantics};
use crate::postproc::{
    select_rules, ComponentRef, CrossOp, CrossOverMode, DescPattern, MetricRef, Quantifier, RulePredicate,
    SetExpr, SetLiteral, ViolationSemantics,
};
use crate::relstore::{project, CmpOp, Value};
use crate::rulestore::{Provenance, RuleStyle, RuleTable};

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    CreateView { name: Ident, query: Select },
    CreateEncoding(Encoding),
    GetRules(GetRules),
    SelectRules(SelectRules),
    Select(DataSelect),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub name: Ident,
    pub table: Option<Ident>,
    pub attribute: Ident,
    pub ranges: Vec<(Option<f64>, Option<f64>, i64)>,
    pub default: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GetRules {
    pub source: Ident,
    pub target: Ident,
    pub conditions: Vec<MineCond>,
    /// `(encoding, attribute)` pairs.
    pub using: Vec<(Ident, Ident)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Has,
    Is,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Body,
    Consequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Support,
    Confidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MineCond {
    Set(Side, SetOp, DescSet),
    Metric(Metric, CmpOp, Number),
}

/// `A=1`, `INCOME=*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Desc {
    pub attr: Ident,
    pub value: Option<Literal>,
}

/// `{(A=1) OR (B=1 AND C=1)}`: alternatives of conjunctions.
#[derive(Debug, Clone, PartialEq)]
pub struct DescSet(pub Vec<Vec<Desc>>);

#[derive(Debug, Clone, PartialEq)]
pub struct SelectRules {
    pub source: Ident,
    pub alias: Option<Ident>,
    pub filter: Option<RulePred>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideRef {
    pub alias: Option<Ident>,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetRhs {
    Lit(DescSet),
    Side(SideRef),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RulePred {
    Set { lhs: SideRef, op: SetOp, rhs: SetRhs },
    Metric { alias: Option<Ident>, metric: Metric, op: CmpOp, value: Number },
    And(Box<RulePred>, Box<RulePred>),
    Or(Box<RulePred>, Box<RulePred>),
    Not(Box<RulePred>),
    Exists { negated: bool, query: Box<SelectRules> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataFilter {
    Cross {
        verb: CrossVerb,
        strict: bool,
        quant: Quant,
        rules: SelectRules,
    },
    Cond(SqlExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSelect {
    pub insert_into: Option<Ident>,
    pub items: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub filter: Option<DataFilter>,
}

// ---- printing ----

impl fmt::Display for Desc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(v) => write!(f, "{}={v}", self.attr),
            None => write!(f, "{}=*", self.attr),
        }
    }
}

impl fmt::Display for DescSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alts: Vec<String> = self.0.iter().map(|a| format!("({})", join(a, " AND "))).collect();
        write!(f, "{{{}}}", alts.join(" OR "))
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Body => "BODY",
            Side::Consequent => "CONSEQUENT",
        })
    }
}

impl fmt::Display for SetOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetOp::Has => "HAS",
            SetOp::Is => "IS",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Support => "SUPPORT",
            Metric::Confidence => "CONFIDENCE",
        })
    }
}

impl fmt::Display for MineCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MineCond::Set(side, op, set) => write!(f, "{side} {op} {set}"),
            MineCond::Metric(m, op, n) => write!(f, "{m} {} {n}", op.symbol()),
        }
    }
}

impl fmt::Display for SideRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.alias {
            Some(a) => write!(f, "{a}.{}", self.side),
            None => write!(f, "{}", self.side),
        }
    }
}

impl RulePred {
    fn precedence(&self) -> u8 {
        match self {
            RulePred::Or(..) => 1,
            RulePred::And(..) => 2,
            RulePred::Not(..) => 3,
            _ => 4,
        }
    }
}

fn wrap_pred(p: &RulePred, parens: bool) -> String {
    if parens {
        format!("({p})")
    } else {
        p.to_string()
    }
}

impl fmt::Display for RulePred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        match self {
            RulePred::Set { lhs, op, rhs } => match rhs {
                SetRhs::Lit(s) => write!(f, "{lhs} {op} {s}"),
                SetRhs::Side(s) => write!(f, "{lhs} {op} {s}"),
            },
            RulePred::Metric {
                alias,
                metric,
                op,
                value,
            } => {
                if let Some(a) = alias {
                    write!(f, "{a}.")?;
                }
                write!(f, "{metric} {} {value}", op.symbol())
            }
            RulePred::And(a, b) => write!(
                f,
                "{} AND {}",
                wrap_pred(a, a.precedence() < prec),
                wrap_pred(b, b.precedence() <= prec)
            ),
            RulePred::Or(a, b) => write!(
                f,
                "{} OR {}",
                wrap_pred(a, a.precedence() < prec),
                wrap_pred(b, b.precedence() <= prec)
            ),
            RulePred::Not(a) => {
                let parens = a.precedence() < prec || matches!(**a, RulePred::Exists { .. });
                write!(f, "NOT {}", wrap_pred(a, parens))
            }
            RulePred::Exists { negated, query } => {
                let n = if *negated { "NOT " } else { "" };
                write!(f, "{n}EXISTS ({query})")
            }
        }
    }
}

impl fmt::Display for SelectRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECTRULES({})", self.source)?;
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        if let Some(p) = &self.filter {
            write!(f, " WHERE {p}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::CreateView { name, query } => write!(f, "CREATE VIEW {name} AS {query}"),
            Stmt::CreateEncoding(e) => {
                write!(f, "CREATE ENCODING {} ON ", e.name)?;
                if let Some(t) = &e.table {
                    write!(f, "{t}.")?;
                }
                let mut parts: Vec<String> = e
                    .ranges
                    .iter()
                    .map(|(lo, hi, c)| format!("({},{},{c})", bound_text(*lo, "MIN"), bound_text(*hi, "MAX")))
                    .collect();
                parts.extend(e.default.map(|d| d.to_string()));
                write!(f, "{} AS BEGIN {} END", e.attribute, parts.join(", "))
            }
            Stmt::GetRules(g) => {
                write!(f, "GETRULES({}) INTO {}", g.source, g.target)?;
                if !g.conditions.is_empty() {
                    write!(f, " WHERE {}", join(&g.conditions, " AND "))?;
                }
                if !g.using.is_empty() {
                    let parts: Vec<String> = g.using.iter().map(|(e, a)| format!("{e} FOR {a}")).collect();
                    write!(f, " USING {}", parts.join(", "))?;
                }
                Ok(())
            }
            Stmt::SelectRules(s) => write!(f, "{s}"),
            Stmt::Select(s) => {
                if let Some(t) = &s.insert_into {
                    write!(f, "INSERT INTO {t} AS ")?;
                }
                write!(f, "SELECT {} FROM {}", join(&s.items, ", "), join(&s.from, ", "))?;
                match &s.filter {
                    None => Ok(()),
                    Some(DataFilter::Cond(c)) => write!(f, " WHERE {c}"),
                    Some(DataFilter::Cross {
                        verb,
                        strict,
                        quant,
                        rules,
                    }) => {
                        let v = match verb {
                            CrossVerb::Satisfied => "SATISFIES",
                            CrossVerb::Violated => "VIOLATES",
                        };
                        let st = if *strict { " STRICT" } else { "" };
                        write!(f, " WHERE {v}{st} {quant} ({rules})")
                    }
                }
            }
        }
    }
}

// ---- parsing ----

pub fn parse(p: &mut Parser) -> Result<Stmt> {
    if p.at_kw("CREATE") {
        p.bump();
        if p.eat_kw("VIEW") {
            let name = p.ident(CLAUSE_WORDS)?;
            p.expect_kw("AS")?;
            let query = p.select()?;
            return Ok(Stmt::CreateView { name, query });
        }
        if p.eat_kw("ENCODING") {
            return encoding(p).map(Stmt::CreateEncoding);
        }
        return Err(p.error(&["VIEW", "ENCODING"]));
    }
    if p.at_kw("GETRULES") {
        return get_rules(p).map(Stmt::GetRules);
    }
    if p.at_kw("SELECTRULES") {
        return select_rules_stmt(p).map(Stmt::SelectRules);
    }
    if p.at_kw("INSERT") || p.at_kw("SELECT") {
        return data_select(p).map(Stmt::Select);
    }
    Err(p.error(&["CREATE", "GETRULES", "SELECTRULES", "SELECT", "INSERT"]))
}

fn encoding(p: &mut Parser) -> Result<Encoding> {
    let name = p.ident(CLAUSE_WORDS)?;
    p.expect_kw("ON")?;
    let first = p.ident(CLAUSE_WORDS)?;
    let (table, attribute) = if p.eat_sym(".") {
        (Some(first), p.ident(CLAUSE_WORDS)?)
    } else {
        (None, first)
    };
    p.expect_kw("AS")?;
    p.expect_kw("BEGIN")?;
    let mut ranges = Vec::new();
    let mut default = None;
    loop {
        if p.eat_sym("(") {
            let lo = p.bound("MIN")?;
            p.expect_sym(",")?;
            let hi = p.bound("MAX")?;
            p.expect_sym(",")?;
            let code = p.int()?;
            p.expect_sym(")")?;
            ranges.push((lo, hi, code));
        } else {
            default = Some(p.int()?);
            break;
        }
        if !p.eat_sym(",") {
            break;
        }
    }
    p.expect_kw("END")?;
    Ok(Encoding {
        name,
        table,
        attribute,
        ranges,
        default,
    })
}

fn desc_set(p: &mut Parser) -> Result<DescSet> {
    p.expect_sym("{")?;
    let alts = p.list_kw("OR", |p| {
        p.expect_sym("(")?;
        let ds = p.list_kw("AND", |p| {
            let attr = p.ident(CLAUSE_WORDS)?;
            p.expect_sym("=")?;
            let value = if p.eat_sym("*") {
                None
            } else {
                Some(literal(p)?)
            };
            Ok(Desc { attr, value })
        })?;
        p.expect_sym(")")?;
        Ok(ds)
    })?;
    p.expect_sym("}")?;
    Ok(DescSet(alts))
}

pub(crate) fn literal(p: &mut Parser) -> Result<Literal> {
    use super::lexer::Tok;
    let neg = p.eat_sym("-");
    let lit = match p.peek().clone() {
        Tok::Int(i) => Literal::Int(if neg { -i } else { i }),
        Tok::Real(r) => Literal::Real(if neg { -r } else { r }),
        Tok::Str(s) if !neg => Literal::Str(s),
        _ => return Err(p.error(&["literal"])),
    };
    p.bump();
    Ok(lit)
}

fn side(p: &mut Parser) -> Option<Side> {
    if p.eat_kw("BODY") {
        Some(Side::Body)
    } else if p.eat_kw("CONSEQUENT") {
        Some(Side::Consequent)
    } else {
        None
    }
}

fn set_op(p: &mut Parser) -> Result<SetOp> {
    if p.eat_kw("HAS") {
        Ok(SetOp::Has)
    } else if p.eat_kw("IS") {
        Ok(SetOp::Is)
    } else {
        Err(p.error(&["HAS", "IS"]))
    }
}

fn metric(p: &mut Parser) -> Option<Metric> {
    if p.eat_kw("SUPPORT") {
        Some(Metric::Support)
    } else if p.eat_kw("CONFIDENCE") {
        Some(Metric::Confidence)
    } else {
        None
    }
}

fn get_rules(p: &mut Parser) -> Result<GetRules> {
    p.expect_kw("GETRULES")?;
    p.expect_sym("(")?;
    let source = p.ident(CLAUSE_WORDS)?;
    p.expect_sym(")")?;
    if !p.at_kw("INTO") {
        return Err(p.fail_expecting("GETRULES needs an INTO target", &["INTO"]));
    }
    p.bump();
    let target = p.ident(CLAUSE_WORDS)?;
    let mut conditions = Vec::new();
    if p.eat_kw("WHERE") {
        conditions = p.list_kw("AND", |p| {
            if let Some(s) = side(p) {
                let op = set_op(p)?;
                return Ok(MineCond::Set(s, op, desc_set(p)?));
            }
            if let Some(m) = metric(p) {
                let op = p.comparison()?;
                return Ok(MineCond::Metric(m, op, p.number()?));
            }
            Err(p.error(&["BODY", "CONSEQUENT", "SUPPORT", "CONFIDENCE"]))
        })?;
    }
    let mut using = Vec::new();
    if p.eat_kw("USING") {
        using = p.list(",", |p| {
            let e = p.ident(CLAUSE_WORDS)?;
            p.expect_kw("FOR")?;
            Ok((e, p.ident(CLAUSE_WORDS)?))
        })?;
    }
    Ok(GetRules {
        source,
        target,
        conditions,
        using,
    })
}

fn select_rules_stmt(p: &mut Parser) -> Result<SelectRules> {
    p.expect_kw("SELECTRULES")?;
    p.expect_sym("(")?;
    let source = p.ident(CLAUSE_WORDS)?;
    p.expect_sym(")")?;
    let alias = if p.eat_kw("AS") {
        Some(p.ident(CLAUSE_WORDS)?)
    } else {
        None
    };
    let filter = if p.eat_kw("WHERE") {
        Some(pred_or(p)?)
    } else {
        None
    };
    Ok(SelectRules {
        source,
        alias,
        filter,
    })
}

fn pred_or(p: &mut Parser) -> Result<RulePred> {
    let mut e = pred_and(p)?;
    while p.eat_kw("OR") {
        e = RulePred::Or(Box::new(e), Box::new(pred_and(p)?));
    }
    Ok(e)
}

fn pred_and(p: &mut Parser) -> Result<RulePred> {
    let mut e = pred_not(p)?;
    while p.eat_kw("AND") {
        e = RulePred::And(Box::new(e), Box::new(pred_not(p)?));
    }
    Ok(e)
}

fn pred_not(p: &mut Parser) -> Result<RulePred> {
    if p.at_kw("NOT") && p.peek_at(1).is_kw("EXISTS") {
        p.bump();
        p.bump();
        return exists_tail(p, true);
    }
    if p.eat_kw("NOT") {
        return Ok(RulePred::Not(Box::new(pred_not(p)?)));
    }
    pred_atom(p)
}

fn exists_tail(p: &mut Parser, negated: bool) -> Result<RulePred> {
    p.expect_sym("(")?;
    let q = select_rules_stmt(p)?;
    p.expect_sym(")")?;
    Ok(RulePred::Exists {
        negated,
        query: Box::new(q),
    })
}

fn pred_atom(p: &mut Parser) -> Result<RulePred> {
    if p.eat_sym("(") {
        let e = pred_or(p)?;
        p.expect_sym(")")?;
        return Ok(e);
    }
    if p.eat_kw("EXISTS") {
        return exists_tail(p, false);
    }
    let alias = if matches!(p.peek_at(1), super::lexer::Tok::Sym(".")) {
        let a = p.ident(CLAUSE_WORDS)?;
        p.bump();
        Some(a)
    } else {
        None
    };
    if let Some(s) = side(p) {
        let lhs = SideRef { alias, side: s };
        let op = set_op(p)?;
        let rhs = if p.at_sym("{") {
            SetRhs::Lit(desc_set(p)?)
        } else {
            let alias = if matches!(p.peek_at(1), super::lexer::Tok::Sym(".")) {
                let a = p.ident(CLAUSE_WORDS)?;
                p.bump();
                Some(a)
            } else {
                None
            };
            match side(p) {
                Some(s) => SetRhs::Side(SideRef { alias, side: s }),
                None => return Err(p.error(&["{", "BODY", "CONSEQUENT"])),
            }
        };
        return Ok(RulePred::Set { lhs, op, rhs });
    }
    if let Some(m) = metric(p) {
        let op = p.comparison()?;
        return Ok(RulePred::Metric {
            alias,
            metric: m,
            op,
            value: p.number()?,
        });
    }
    Err(p.error(&["BODY", "CONSEQUENT", "SUPPORT", "CONFIDENCE", "EXISTS", "NOT", "("]))
}

fn data_select(p: &mut Parser) -> Result<DataSelect> {
    let insert_into = if p.eat_kw("INSERT") {
        p.expect_kw("INTO")?;
        let t = p.ident(CLAUSE_WORDS)?;
        p.expect_kw("AS")?;
        Some(t)
    } else {
        None
    };
    p.expect_kw("SELECT")?;
    let items = p.list(",", |p| {
        if p.eat_sym("*") {
            return Ok(SelectItem::Star);
        }
        let expr = p.expr()?;
        let alias = if p.eat_kw("AS") {
            Some(p.ident(CLAUSE_WORDS)?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    })?;
    p.expect_kw("FROM")?;
    let from = p.from_list()?;
    let filter = if p.eat_kw("WHERE") {
        let verb = if p.eat_kw("SATISFIES") {
            Some(CrossVerb::Satisfied)
        } else if p.eat_kw("VIOLATES") {
            Some(CrossVerb::Violated)
        } else {
            None
        };
        match verb {
            Some(verb) => {
                let strict = p.eat_kw("STRICT");
                let quant = if p.eat_kw("ALL") {
                    Quant::All
                } else if p.eat_kw("ANY") {
                    Quant::Any
                } else {
                    return Err(p.error(&["ALL", "ANY"]));
                };
                p.expect_sym("(")?;
                let rules = select_rules_stmt(p)?;
                p.expect_sym(")")?;
                Some(DataFilter::Cross {
                    verb,
                    strict,
                    quant,
                    rules,
                })
            }
            None => Some(DataFilter::Cond(p.expr()?)),
        }
    } else {
        None
    };
    Ok(DataSelect {
        insert_into,
        items,
        from,
        filter,
    })
}

// ---- lowering ----

pub fn lower(s: &Stmt, catalog: &Catalog) -> Result<Lowered> {
    let mut warnings = Vec::new();
    let plan = match s {
        Stmt::CreateView { name, query } => LogicalPlan::CreateView {
            name: name.lower(),
            data: view(query, catalog)?,
        },
        Stmt::CreateEncoding(e) => {
            if let Some(t) = &e.table {
                let data = catalog
                    .table(&t.text)
                    .ok_or_else(|| resolve_err(t.span, format!("unknown table `{t}`")))?;
                if data.table.schema().index_of(&e.attribute.lower()).is_none() {
                    return Err(resolve_err(
                        e.attribute.span,
                        format!("`{t}` has no attribute `{}`", e.attribute),
                    ));
                }
            }
            LogicalPlan::DefineHierarchy(ConceptHierarchy::define_encoding(
                &e.name.text,
                &e.attribute.text,
                &e.ranges,
                e.default,
            )?)
        }
        Stmt::GetRules(g) => get_rules_plan(g, catalog, &mut warnings, &s.to_string())?,
        Stmt::SelectRules(q) => {
            let rt = rule_table(&q.source, catalog)?;
            let alias = q.alias.as_ref().map(Ident::lower);
            let predicate = match &q.filter {
                Some(f) => translate(f, &mut vec![(alias.clone(), rt.clone())], catalog)?,
                None => RulePredicate::True,
            };
            LogicalPlan::SelectRules {
                source: rt,
                alias,
                predicate,
                target: None,
            }
        }
        Stmt::Select(q) => data_select_plan(q, catalog)?,
    };
    Ok(Lowered { plan, warnings })
}

/// `CREATE VIEW`: the joined, filtered rows keyed by the GROUP BY list.
/// `SUM(CASE attr WHEN …)` items mark `attr` as spread into indicator
/// columns; its rows are kept unspread.
fn view(q: &Select, catalog: &Catalog) -> Result<Dataset> {
    let src = resolve_source(&q.from, q.filter.as_ref(), catalog, &[])?;
    let mut keep: Vec<String> = Vec::new();
    let mut pivoted: Vec<String> = Vec::new();
    for item in &q.items {
        match item {
            SelectItem::Star => keep.extend(src.table.schema().names().map(str::to_string)),
            SelectItem::Expr { expr, .. } => match expr {
                SqlExpr::Column(c) => keep.push(column_name(c, &src.scopes)?),
                SqlExpr::Call { name, args, .. } if name.is("SUM") => match args.as_slice() {
                    [SqlExpr::Case {
                        operand: Some(op), ..
                    }] => match &**op {
                        SqlExpr::Column(c) => {
                            let a = column_name(c, &src.scopes)?;
                            if !pivoted.contains(&a) {
                                pivoted.push(a.clone());
                            }
                            keep.push(a);
                        }
                        other => {
                            return Err(resolve_err(
                                span_of(other),
                                "CASE operand must be an attribute",
                            ))
                        }
                    },
                    _ => {
                        return Err(resolve_err(
                            name.span,
                            "view aggregates must be SUM(CASE attribute WHEN … END)",
                        ))
                    }
                },
                other => {
                    return Err(resolve_err(
                        span_of(other),
                        format!("unsupported view item `{other}`"),
                    ))
                }
            },
        }
    }
    let group_keys = q
        .group_by
        .iter()
        .map(|e| key_name(e, &src.scopes))
        .collect::<Result<Vec<_>>>()?;
    for k in &group_keys {
        keep.push(k.clone());
    }
    let mut seen = BTreeSet::new();
    keep.retain(|k| seen.insert(k.clone()));
    let names: Vec<&str> = keep.iter().map(String::as_str).collect();
    let data = Dataset {
        table: project(&src.table, &names, false)?,
        group_keys,
        pivoted,
    };
    data.groups()?;
    Ok(data)
}

fn rule_table(name: &Ident, catalog: &Catalog) -> Result<RuleTable> {
    catalog.rule_table(&name.text).cloned().ok_or_else(|| {
        let msg = if catalog.table(&name.text).is_some() {
            format!("`{name}` is a data table, not a rule table")
        } else {
            format!("unknown rule table `{name}`")
        };
        resolve_err(name.span, msg)
    })
}

/// The attribute a GETRULES descriptor stands for: a real attribute, or
/// the spread attribute one of whose values it names (`A=1` for item A).
fn desc_attribute(d: &Desc, data: &Dataset) -> Result<(String, bool)> {
    let a = d.attr.lower();
    let schema = data.table.schema();
    if schema.index_of(&a).is_some() && !data.pivoted.contains(&a) {
        return Ok((a, false));
    }
    let col_has = |p: &str| {
        data.table
            .column_values(p)
            .map(|vs| vs.iter().any(|v| v.as_str().is_some_and(|s| s.eq_ignore_ascii_case(&d.attr.text))))
            .unwrap_or(false)
    };
    if let Some(p) = data.pivoted.iter().find(|p| col_has(p)).or(data.pivoted.first()) {
        return Ok((p.clone(), true));
    }
    Err(resolve_err(d.attr.span, format!("unknown attribute `{}`", d.attr)))
}

fn get_rules_plan(g: &GetRules, catalog: &Catalog, warnings: &mut Vec<String>, text: &str) -> Result<LogicalPlan> {
    let data = catalog.table(&g.source.text).ok_or_else(|| {
        resolve_err(g.source.span, format!("unknown table `{}`", g.source))
    })?;
    let mut body: Vec<String> = Vec::new();
    let mut head: Vec<String> = Vec::new();
    let mut support = None;
    let mut confidence = None;
    for c in &g.conditions {
        match c {
            MineCond::Set(side, _, set) => {
                for d in set.0.iter().flatten() {
                    let (a, spread) = desc_attribute(d, data)?;
                    if !spread && d.value.is_some() {
                        warnings.push(format!(
                            "value of `{d}` ignored: GETRULES descriptor sets only choose attributes"
                        ));
                    }
                    let target = match side {
                        Side::Body => &mut body,
                        Side::Consequent => &mut head,
                    };
                    if !target.contains(&a) {
                        target.push(a);
                    }
                }
            }
            MineCond::Metric(Metric::Support, op, n) => {
                support = Some(threshold(n, *op, g.source.span, "support")?)
            }
            MineCond::Metric(Metric::Confidence, op, n) => {
                confidence = Some(threshold(n, *op, g.source.span, "confidence")?)
            }
        }
    }
    let keys = &data.group_keys;
    let free: Vec<String> = data
        .table
        .schema()
        .names()
        .filter(|n| !keys.iter().any(|k| k == n))
        .map(str::to_string)
        .collect();
    if body.is_empty() {
        body = if data.pivoted.is_empty() {
            free.iter().filter(|a| !head.contains(a)).cloned().collect()
        } else {
            data.pivoted.clone()
        };
    }
    if head.is_empty() {
        head = free.iter().filter(|a| !body.contains(a)).cloned().collect();
        if head.is_empty() {
            head = body.clone();
        }
    }
    let body_refs: Vec<&str> = body.iter().map(String::as_str).collect();
    let head_refs: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut plan = MinePlan::new(
        data.groups()?,
        ComponentSchema::new(&body_refs, 1, None)?,
        ComponentSchema::new(&head_refs, 1, Some(1))?,
    );
    plan.semantics = SupportSemantics::Body;
    plan.support = support;
    plan.confidence = confidence;
    let mut provenance = Provenance {
        style: RuleStyle::Msql,
        semantics: SupportSemantics::Body,
        basis: support.map_or(Basis::Absolute, |t| t.basis),
        summary: text.to_string(),
        pivoted: data.pivoted.iter().cloned().collect(),
        body_attributes: body.clone(),
        head_attributes: head.clone(),
        ..Provenance::default()
    };
    for (enc, attr) in &g.using {
        let h = catalog
            .hierarchy(&enc.text)
            .ok_or_else(|| resolve_err(enc.span, format!("unknown encoding `{enc}`")))?;
        let a = attr.lower();
        if data.table.schema().index_of(&a).is_none() {
            return Err(resolve_err(attr.span, format!("unknown attribute `{attr}`")));
        }
        let e = Encoder::hierarchy(h.clone());
        plan.bindings.insert(a.clone(), e.clone());
        provenance.bindings.insert(a, e);
    }
    plan.validate()?;
    Ok(LogicalPlan::Mine {
        plan,
        target: Some(g.target.lower()),
        provenance,
        replace: false,
    })
}

type Frames = Vec<(Option<String>, RuleTable)>;

fn frame<'a>(frames: &'a Frames, alias: &Option<Ident>) -> Result<&'a RuleTable> {
    match alias {
        None => Ok(&frames.last().expect("outer frame").1),
        Some(a) => frames
            .iter()
            .rev()
            .find(|(n, _)| n.as_deref() == Some(&a.lower()))
            .map(|(_, rt)| rt)
            .ok_or_else(|| resolve_err(a.span, format!("unknown rule alias `{a}`"))),
    }
}

fn component_ref(s: &SideRef) -> ComponentRef {
    let alias = s.alias.as_ref().map(Ident::lower);
    match s.side {
        Side::Body => ComponentRef::body(alias.as_deref()),
        Side::Consequent => ComponentRef::head(alias.as_deref()),
    }
}

/// `A=1` against a rule table whose item attribute was spread reads as
/// `item='A'`.
fn desc_pattern(d: &Desc, rt: &RuleTable) -> DescPattern {
    let a = d.attr.lower();
    let p = &rt.provenance;
    let known = p.body_attributes.contains(&a) || p.head_attributes.contains(&a);
    if !known {
        if let Some(spread) = p.pivoted.iter().next() {
            return DescPattern::new(spread, Some(Value::text(d.attr.text.clone())));
        }
    }
    let value = d.value.as_ref().map(|l| match l {
        Literal::Int(i) => Value::Integer(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Str(s) => Value::text(s.clone()),
        Literal::Null => Value::Null,
    });
    DescPattern::new(&a, value)
}

fn translate(p: &RulePred, frames: &mut Frames, catalog: &Catalog) -> Result<RulePredicate> {
    Ok(match p {
        RulePred::Set { lhs, op, rhs } => {
            let rt = frame(frames, &lhs.alias)?.clone();
            let of = match rhs {
                SetRhs::Lit(set) => SetExpr::Literal(SetLiteral(
                    set.0
                        .iter()
                        .map(|alt| alt.iter().map(|d| desc_pattern(d, &rt)).collect())
                        .collect(),
                )),
                SetRhs::Side(s) => {
                    frame(frames, &s.alias)?;
                    SetExpr::Component(component_ref(s))
                }
            };
            let set = component_ref(lhs);
            match op {
                SetOp::Has => RulePredicate::Has { set, of },
                SetOp::Is => RulePredicate::Is { set, of },
            }
        }
        RulePred::Metric {
            alias,
            metric,
            op,
            value,
        } => {
            let rt = frame(frames, alias)?;
            let m = match metric {
                Metric::Confidence => MetricRef::Confidence,
                Metric::Support => MetricRef::SupportAs(
                    rt.provenance.semantics,
                    if value.is_absolute() {
                        Basis::Absolute
                    } else {
                        Basis::Relative
                    },
                ),
            };
            RulePredicate::Metric {
                metric: m,
                alias: alias.as_ref().map(Ident::lower),
                op: *op,
                value: value.magnitude(),
            }
        }
        RulePred::And(a, b) => translate(a, frames, catalog)?.and(translate(b, frames, catalog)?),
        RulePred::Or(a, b) => translate(a, frames, catalog)?.or(translate(b, frames, catalog)?),
        RulePred::Not(a) => translate(a, frames, catalog)?.negate(),
        RulePred::Exists { negated, query } => {
            let rt = rule_table(&query.source, catalog)?;
            let alias = query.alias.as_ref().map(Ident::lower);
            frames.push((alias.clone(), rt.clone()));
            let inner = match &query.filter {
                Some(f) => translate(f, frames, catalog),
                None => Ok(RulePredicate::True),
            };
            frames.pop();
            RulePredicate::Exists {
                negated: *negated,
                rules: rt,
                alias,
                predicate: Box::new(inner?),
            }
        }
    })
}

/// Rules picked by a nested SELECTRULES, evaluated during lowering.
fn nested_rules(q: &SelectRules, catalog: &Catalog) -> Result<RuleTable> {
    let rt = rule_table(&q.source, catalog)?;
    let alias = q.alias.as_ref().map(Ident::lower);
    let pred = match &q.filter {
        Some(f) => translate(f, &mut vec![(alias.clone(), rt.clone())], catalog)?,
        None => RulePredicate::True,
    };
    select_rules(&rt, alias.as_deref(), &pred, &rt.name)
}

fn data_select_plan(q: &DataSelect, catalog: &Catalog) -> Result<LogicalPlan> {
    let target = q.insert_into.as_ref().map(Ident::lower);
    match &q.filter {
        Some(DataFilter::Cross {
            verb,
            strict,
            quant,
            rules,
        }) => {
            let [FromItem::Table { name, .. }] = q.from.as_slice() else {
                return Err(resolve_err(
                    rules.source.span,
                    "SATISFIES/VIOLATES selects from exactly one table or view",
                ));
            };
            let data = catalog
                .table(&name.text)
                .ok_or_else(|| resolve_err(name.span, format!("unknown table `{name}`")))?;
            let groups = data.groups()?;
            let keys: Vec<String> = groups.key_names().iter().map(|s| s.to_string()).collect();
            let mut columns = Vec::new();
            for item in &q.items {
                match item {
                    SelectItem::Star => columns.extend(keys.iter().cloned()),
                    SelectItem::Expr {
                        expr: SqlExpr::Column(c),
                        ..
                    } if keys.contains(&c.name.lower()) => columns.push(c.name.lower()),
                    SelectItem::Expr { expr, .. } => {
                        return Err(resolve_err(
                            span_of(expr),
                            format!(
                                "cross-over returns grouping attributes ({}), not `{expr}`",
                                keys.join(", ")
                            ),
                        ))
                    }
                }
            }
            let mode = CrossOverMode {
                op: match verb {
                    CrossVerb::Satisfied => CrossOp::Satisfies,
                    CrossVerb::Violated => CrossOp::Violates,
                },
                quantifier: match quant {
                    Quant::All => Quantifier::All,
                    Quant::Any => Quantifier::Any,
                },
                violation: if *strict {
                    ViolationSemantics::Strict
                } else {
                    ViolationSemantics::NonSatisfaction
                },
            };
            Ok(LogicalPlan::CrossOver(CrossOverPlan {
                data: groups,
                rules: nested_rules(rules, catalog)?,
                mode,
                output: CrossOutput::Keys(columns),
                target,
            }))
        }
        other => {
            let cond = match other {
                Some(DataFilter::Cond(c)) => Some(c),
                _ => None,
            };
            let table = super::plain_query(&q.items, &q.from, cond, false, catalog)?;
            Ok(LogicalPlan::Query { table, target })
        }
    }
}
