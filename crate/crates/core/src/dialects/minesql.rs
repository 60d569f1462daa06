//! MineSQL: taxonomies, the RULE column type, `MINE … FOR … TO …` and
//! SQL selections over rule tables with BODY/HEAD/SUPPORT/CONFIDENCE and
//! the SATISFIED BY / VIOLATED BY cross-over.

use std::fmt;

use super::ast::*;
use super::lower::*;
use super::parser::{Parser, CLAUSE_WORDS};
use super::{CrossOutput, CrossOverPlan, Lowered, LogicalPlan};
use crate::catalog::{Catalog, Dataset};
use crate::error::Result;
use crate::hierarchy::{ConceptHierarchy, Coverage, Encoder, HierarchyKind, Interval, Label, LabeledLeaf};
use crate::miner::{Basis, ComponentSchema, MinePlan, SupportSemantics, Threshold};
use crate::postproc::{
    select_rules, ComponentRef, CrossOp, CrossOverMode, DescPattern, MetricRef, Quantifier, RulePredicate,
    SetExpr, SetLiteral, ViolationSemantics,
};
use crate::relstore::{CmpOp, Value};
use crate::rulestore::{Provenance, RuleStyle, RuleTable};

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    CreateTaxonomy { name: Ident, entries: Vec<TaxEntry> },
    CreateTable { name: Ident, columns: Vec<ColumnDef> },
    Mine(Mine),
    Select(Select),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaxEntry {
    Node(String),
    Leaf { range: LeafRange, code: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafRange {
    Interval(Option<f64>, Option<f64>),
    Value(Literal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDef {
    pub name: Ident,
    pub ty: Ident,
    pub size: Option<i64>,
}

/// `attr [USING taxonomy] [AS alias]` in FOR and TO.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTerm {
    pub attr: ColumnRef,
    pub using: Option<Ident>,
    pub alias: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mine {
    pub insert: Option<(Ident, Vec<Ident>)>,
    pub alias: Option<Ident>,
    pub metrics: Vec<SqlExpr>,
    pub body: Vec<DataTerm>,
    pub head: Vec<DataTerm>,
    pub from: Vec<FromItem>,
    pub filter: Option<SqlExpr>,
    pub group_by: Vec<SqlExpr>,
    pub having: Option<SqlExpr>,
    pub order_by: Vec<OrderItem>,
    pub at: Pos,
}

impl fmt::Display for TaxEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaxEntry::Node(n) => write!(f, "NODE {}", quote(n)),
            TaxEntry::Leaf {
                range: LeafRange::Interval(lo, hi),
                code,
            } => write!(
                f,
                "LEAF [{}..{}] REFERENCES {code}",
                bound_text(*lo, "MIN"),
                bound_text(*hi, "MAX")
            ),
            TaxEntry::Leaf {
                range: LeafRange::Value(v),
                code,
            } => write!(f, "LEAF {v} REFERENCES {code}"),
        }
    }
}

impl fmt::Display for ColumnDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.ty)?;
        if let Some(n) = self.size {
            write!(f, "({n})")?;
        }
        Ok(())
    }
}

impl fmt::Display for DataTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.attr)?;
        if let Some(u) = &self.using {
            write!(f, " USING {u}")?;
        }
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Mine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((t, cols)) = &self.insert {
            write!(f, "INSERT INTO {t}")?;
            if !cols.is_empty() {
                write!(f, "({})", join(cols, ", "))?;
            }
            f.write_str(" ")?;
        }
        f.write_str("MINE RULE")?;
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        for m in &self.metrics {
            write!(f, ", {m}")?;
        }
        write!(
            f,
            " FOR {} TO {} FROM {}",
            join(&self.body, ", "),
            join(&self.head, ", "),
            join(&self.from, ", ")
        )?;
        if let Some(w) = &self.filter {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY {}", join(&self.group_by, ", "))?;
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.order_by.is_empty() {
            let parts: Vec<String> = self
                .order_by
                .iter()
                .map(|o| format!("{}{}", o.expr, if o.desc { " DESC" } else { "" }))
                .collect();
            write!(f, " ORDER BY {}", parts.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::CreateTaxonomy { name, entries } => {
                write!(f, "CREATE TAXONOMY {name}({})", join(entries, ", "))
            }
            Stmt::CreateTable { name, columns } => {
                write!(f, "CREATE TABLE {name}({})", join(columns, ", "))
            }
            Stmt::Mine(m) => write!(f, "{m}"),
            Stmt::Select(s) => write!(f, "{s}"),
        }
    }
}

// ---- parsing ----

pub fn parse(p: &mut Parser) -> Result<Stmt> {
    if p.eat_kw("CREATE") {
        if p.eat_kw("TAXONOMY") {
            let name = p.ident(CLAUSE_WORDS)?;
            p.expect_sym("(")?;
            let entries = p.list(",", tax_entry)?;
            p.expect_sym(")")?;
            return Ok(Stmt::CreateTaxonomy { name, entries });
        }
        if p.eat_kw("TABLE") {
            let name = p.ident(CLAUSE_WORDS)?;
            p.expect_sym("(")?;
            let columns = p.list(",", column_def)?;
            p.expect_sym(")")?;
            return Ok(Stmt::CreateTable { name, columns });
        }
        return Err(p.error(&["TAXONOMY", "TABLE"]));
    }
    if p.at_kw("INSERT") || p.at_kw("MINE") {
        return mine(p).map(Stmt::Mine);
    }
    if p.at_kw("SELECT") {
        return p.select().map(Stmt::Select);
    }
    Err(p.error(&["CREATE", "INSERT", "MINE", "SELECT"]))
}

fn tax_entry(p: &mut Parser) -> Result<TaxEntry> {
    if p.eat_kw("NODE") {
        return Ok(TaxEntry::Node(p.string()?));
    }
    if !p.eat_kw("LEAF") {
        return Err(p.error(&["NODE", "LEAF"]));
    }
    let range = if p.eat_sym("[") {
        let lo = p.bound("MIN")?;
        p.expect_sym("..")?;
        let hi = p.bound("MAX")?;
        p.expect_sym("]")?;
        LeafRange::Interval(lo, hi)
    } else {
        LeafRange::Value(super::msql::literal(p)?)
    };
    p.expect_kw("REFERENCES")?;
    let neg = p.eat_sym("-");
    let code = p.int()?;
    Ok(TaxEntry::Leaf {
        range,
        code: if neg { -code } else { code },
    })
}

fn column_def(p: &mut Parser) -> Result<ColumnDef> {
    let name = p.ident(CLAUSE_WORDS)?;
    let ty = p.ident(CLAUSE_WORDS)?;
    let size = if p.eat_sym("(") {
        let n = p.int()?;
        p.expect_sym(")")?;
        Some(n)
    } else {
        None
    };
    Ok(ColumnDef { name, ty, size })
}

fn data_term(p: &mut Parser) -> Result<DataTerm> {
    let attr = p.column_ref()?;
    let using = if p.eat_kw("USING") {
        Some(p.ident(CLAUSE_WORDS)?)
    } else {
        None
    };
    let alias = if p.eat_kw("AS") {
        Some(p.ident(CLAUSE_WORDS)?)
    } else {
        None
    };
    Ok(DataTerm { attr, using, alias })
}

fn mine(p: &mut Parser) -> Result<Mine> {
    let at = Pos(p.span());
    let insert = if p.eat_kw("INSERT") {
        p.expect_kw("INTO")?;
        let t = p.ident(CLAUSE_WORDS)?;
        let cols = if p.eat_sym("(") {
            let c = p.list(",", |p| p.ident(CLAUSE_WORDS))?;
            p.expect_sym(")")?;
            c
        } else {
            Vec::new()
        };
        Some((t, cols))
    } else {
        None
    };
    p.expect_kw("MINE")?;
    p.expect_kw("RULE")?;
    let alias = p.alias(CLAUSE_WORDS)?;
    let mut metrics = Vec::new();
    while p.eat_sym(",") {
        metrics.push(p.expr()?);
    }
    if !p.at_kw("FOR") {
        return Err(p.fail_expecting("body (FOR) and head (TO) schemas required", &["FOR"]));
    }
    p.bump();
    let body = p.list(",", data_term)?;
    if !p.at_kw("TO") {
        return Err(p.fail_expecting("body (FOR) and head (TO) schemas required", &["TO"]));
    }
    p.bump();
    let head = p.list(",", data_term)?;
    p.expect_kw("FROM")?;
    let from = p.from_list()?;
    let filter = if p.eat_kw("WHERE") { Some(p.expr()?) } else { None };
    let group_by = if p.eat_kw("GROUP") {
        p.expect_kw("BY")?;
        p.list(",", |p| p.expr())?
    } else {
        Vec::new()
    };
    let having = if p.eat_kw("HAVING") { Some(p.expr()?) } else { None };
    let order_by = if p.at_kw("ORDER") { p.order_by()? } else { Vec::new() };
    Ok(Mine {
        insert,
        alias,
        metrics,
        body,
        head,
        from,
        filter,
        group_by,
        having,
        order_by,
        at,
    })
}

// ---- lowering ----

pub fn lower(s: &Stmt, catalog: &Catalog) -> Result<Lowered> {
    let mut warnings = Vec::new();
    let plan = match s {
        Stmt::CreateTaxonomy { name, entries } => LogicalPlan::DefineHierarchy(taxonomy(name, entries)?),
        Stmt::CreateTable { name, columns } => {
            let rules: Vec<&ColumnDef> = columns.iter().filter(|c| c.ty.is("RULE")).collect();
            let [rule] = rules.as_slice() else {
                return Err(resolve_err(
                    name.span,
                    format!("`{name}` needs exactly one column of type RULE"),
                ));
            };
            if columns.len() > 1 {
                warnings.push(format!(
                    "only the RULE column of `{name}` is stored; other columns stay empty"
                ));
            }
            LogicalPlan::DeclareRuleTable {
                name: name.lower(),
                rule_column: rule.name.lower(),
                style: RuleStyle::MineSql,
            }
        }
        Stmt::Mine(m) => mine_plan(m, catalog, &mut warnings, &s.to_string())?,
        Stmt::Select(q) => select_plan(q, catalog)?,
    };
    Ok(Lowered { plan, warnings })
}

fn taxonomy(name: &Ident, entries: &[TaxEntry]) -> Result<ConceptHierarchy> {
    let mut leaves = Vec::new();
    let mut nodes = 0;
    for e in entries {
        match e {
            TaxEntry::Node(_) => {
                nodes += 1;
                if nodes > 1 {
                    return Err(resolve_err(
                        name.span,
                        format!("`{name}` may name one NODE (the root); LEAF entries hang off it"),
                    ));
                }
            }
            TaxEntry::Leaf { range, code } => {
                let coverage = match range {
                    LeafRange::Interval(lo, hi) => Coverage::Interval(Interval::new(*lo, *hi)?),
                    LeafRange::Value(l) => Coverage::Values([literal_value(l)].into_iter().collect()),
                };
                leaves.push(LabeledLeaf {
                    label: Label::Code(*code),
                    coverage,
                });
            }
        }
    }
    ConceptHierarchy::flat(&name.text, "", HierarchyKind::Taxonomy, leaves, None)
}

fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Int(i) => Value::Integer(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Str(s) => Value::text(s.clone()),
        Literal::Null => Value::Null,
    }
}

enum RuleMetric {
    Support,
    Confidence,
}

/// `SUPPORT(x)` or `CONFIDENCE(x)` and its argument.
fn metric_call(e: &SqlExpr) -> Option<(RuleMetric, &SqlExpr)> {
    let SqlExpr::Call { name, args, .. } = e else {
        return None;
    };
    let m = if name.is("SUPPORT") {
        RuleMetric::Support
    } else if name.is("CONFIDENCE") {
        RuleMetric::Confidence
    } else {
        return None;
    };
    match args.as_slice() {
        [a] => Some((m, a)),
        _ => None,
    }
}

fn literal_number(e: &SqlExpr) -> Option<Number> {
    match e {
        SqlExpr::Lit(Literal::Int(i)) => Some(Number::int(*i)),
        SqlExpr::Lit(Literal::Real(r)) => Some(Number::real(*r)),
        _ => None,
    }
}

/// `metric(x) op number`, with the sides in either order.
fn metric_condition(e: &SqlExpr) -> Option<(RuleMetric, &SqlExpr, CmpOp, Number)> {
    let SqlExpr::Cmp(op, a, b) = e else {
        return None;
    };
    if let (Some((m, arg)), Some(n)) = (metric_call(a), literal_number(b)) {
        return Some((m, arg, *op, n));
    }
    if let (Some(n), Some((m, arg))) = (literal_number(a), metric_call(b)) {
        return Some((m, arg, op.flip(), n));
    }
    None
}

fn mentions_metric(e: &SqlExpr) -> bool {
    match e {
        SqlExpr::Call { name, .. } => {
            ["SUPPORT", "CONFIDENCE", "BODY", "HEAD"].iter().any(|f| name.is(f))
        }
        SqlExpr::Cmp(_, a, b) | SqlExpr::And(a, b) | SqlExpr::Or(a, b) | SqlExpr::In(a, b) => {
            mentions_metric(a) || mentions_metric(b)
        }
        SqlExpr::Not(a) => mentions_metric(a),
        _ => false,
    }
}

fn mine_plan(m: &Mine, catalog: &Catalog, warnings: &mut Vec<String>, text: &str) -> Result<LogicalPlan> {
    let rule_names: Vec<String> = std::iter::once("rule".to_string())
        .chain(m.alias.as_ref().map(Ident::lower))
        .collect();
    let names_rule = |e: &SqlExpr| matches!(e, SqlExpr::Column(c) if c.qualifier.is_none() && rule_names.contains(&c.name.lower()));

    let mut support: Option<Threshold> = None;
    let mut confidence: Option<Threshold> = None;
    let mut support_number = None;
    let mut data_conds: Vec<SqlExpr> = Vec::new();
    for c in m.filter.as_ref().map(SqlExpr::conjuncts).unwrap_or_default() {
        if let Some((metric, arg, op, n)) = metric_condition(c) {
            if !names_rule(arg) {
                return Err(resolve_err(span_of(arg), format!("`{arg}` is not the mined rule")));
            }
            let span = span_of(c);
            match metric {
                RuleMetric::Support => {
                    support = Some(threshold(&n, op, span, "support")?);
                    support_number = Some(n);
                }
                RuleMetric::Confidence => confidence = Some(threshold(&n, op, span, "confidence")?),
            }
            continue;
        }
        if mentions_metric(c) {
            return Err(resolve_err(
                span_of(c),
                format!("rule condition `{c}` must compare SUPPORT or CONFIDENCE with a number"),
            ));
        }
        data_conds.push(c.clone());
    }
    let cond = data_conds.into_iter().reduce(SqlExpr::and);
    let src = resolve_source(&m.from, cond.as_ref(), catalog, &[])?;
    let keys = if m.group_by.is_empty() {
        src.group_keys.clone()
    } else {
        m.group_by
            .iter()
            .map(|e| key_name(e, &src.scopes))
            .collect::<Result<Vec<_>>>()?
    };
    let data = Dataset {
        table: src.table.clone(),
        group_keys: keys,
        pivoted: Vec::new(),
    };

    let mut provenance = Provenance {
        style: RuleStyle::MineSql,
        semantics: SupportSemantics::Body,
        basis: support_number.map_or(Basis::Relative, |n: Number| {
            if n.is_absolute() {
                Basis::Absolute
            } else {
                Basis::Relative
            }
        }),
        summary: text.to_string(),
        ..Provenance::default()
    };
    let mut bindings = Vec::new();
    let mut side = |terms: &[DataTerm], provenance: &mut Provenance| -> Result<Vec<String>> {
        let mut out = Vec::new();
        for t in terms {
            let a = column_name(&t.attr, &src.scopes)?;
            if let Some(u) = &t.using {
                let h = catalog
                    .hierarchy(&u.text)
                    .ok_or_else(|| resolve_err(u.span, format!("unknown taxonomy `{u}`")))?;
                bindings.push((a.clone(), Encoder::hierarchy(h.clone())));
            }
            if let Some(al) = &t.alias {
                provenance.aliases.insert(a.clone(), al.lower());
            }
            if !out.contains(&a) {
                out.push(a);
            }
        }
        Ok(out)
    };
    let body = side(&m.body, &mut provenance)?;
    let head = side(&m.head, &mut provenance)?;
    provenance.body_attributes = body.clone();
    provenance.head_attributes = head.clone();

    let body_refs: Vec<&str> = body.iter().map(String::as_str).collect();
    let head_refs: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut plan = MinePlan::new(
        data.groups()?,
        ComponentSchema::new(&body_refs, 1, None)?,
        ComponentSchema::new(&head_refs, 1, None)?,
    );
    plan.semantics = SupportSemantics::Body;
    plan.support = support;
    plan.confidence = confidence;
    for (a, e) in bindings {
        plan.bindings.insert(a.clone(), e.clone());
        provenance.bindings.insert(a, e);
    }
    if let Some(h) = &m.having {
        plan.group_filter = Some(to_expr(h, &src.scopes)?);
    }
    if !m.order_by.is_empty() {
        warnings.push("ORDER BY on mined rules is ignored".to_string());
    }

    let (target, replace) = match &m.insert {
        None => (None, false),
        Some((t, cols)) => {
            let name = t.lower();
            match catalog.rule_table(&name) {
                Some(rt) => {
                    if let (Some(want), [col]) = (&rt.provenance.rule_column, cols.as_slice()) {
                        if &col.lower() != want {
                            return Err(resolve_err(
                                col.span,
                                format!("`{t}` has no RULE column `{col}` (its RULE column is `{want}`)"),
                            ));
                        }
                    }
                    if cols.len() > 1 {
                        return Err(resolve_err(t.span, "mined rules fill exactly one RULE column"));
                    }
                    provenance.rule_column = rt.provenance.rule_column.clone();
                    (Some(name), true)
                }
                None if catalog.table(&name).is_some() => {
                    return Err(resolve_err(t.span, format!("`{t}` is a data table, not a rule table")))
                }
                None => {
                    provenance.rule_column = cols.first().map(Ident::lower);
                    (Some(name), false)
                }
            }
        }
    };
    plan.validate()?;
    Ok(LogicalPlan::Mine {
        plan,
        target,
        provenance,
        replace,
    })
}

// ---- selections ----

/// A rule table in scope of a selection, by the names it answers to.
struct Frame {
    names: Vec<String>,
    alias: String,
    rules: RuleTable,
}

fn rule_frame(item: &FromItem, catalog: &Catalog) -> Result<Option<Frame>> {
    let FromItem::Table { name, alias } = item else {
        return Ok(None);
    };
    let Some(rt) = catalog.rule_table(&name.text) else {
        return Ok(None);
    };
    let mut names = vec![name.lower()];
    names.extend(alias.as_ref().map(Ident::lower));
    Ok(Some(Frame {
        alias: names.last().cloned().unwrap_or_default(),
        names,
        rules: rt.clone(),
    }))
}

/// The frame a rule column reference points at.
fn frame_of<'a>(e: &SqlExpr, frames: &'a [Frame]) -> Result<&'a Frame> {
    let SqlExpr::Column(c) = e else {
        return Err(resolve_err(span_of(e), format!("`{e}` is not a rule column")));
    };
    let f = match &c.qualifier {
        Some(q) => frames
            .iter()
            .rev()
            .find(|f| f.names.contains(&q.lower()))
            .ok_or_else(|| resolve_err(q.span, format!("unknown rule table or alias `{q}`")))?,
        None => frames.last().expect("a rule frame"),
    };
    let col = c.name.lower();
    let ok = match &f.rules.provenance.rule_column {
        Some(rc) => *rc == col,
        None => true,
    };
    if !ok {
        return Err(resolve_err(c.name.span, format!("unknown RULE column `{c}`")));
    }
    Ok(f)
}

fn component(e: &SqlExpr, frames: &[Frame]) -> Result<Option<ComponentRef>> {
    let SqlExpr::Call { name, args, .. } = e else {
        return Ok(None);
    };
    let body = if name.is("BODY") {
        true
    } else if name.is("HEAD") {
        false
    } else {
        return Ok(None);
    };
    let [arg] = args.as_slice() else {
        return Err(resolve_err(name.span, format!("{name} takes one rule")));
    };
    let f = frame_of(arg, frames)?;
    Ok(Some(if body {
        ComponentRef::body(Some(&f.alias))
    } else {
        ComponentRef::head(Some(&f.alias))
    }))
}

/// `item='A'` or `income_h=2` as a descriptor pattern of `rt`'s rules.
fn descriptor(text: &str, rt: &RuleTable) -> Option<DescPattern> {
    let (attr, value) = text.split_once('=')?;
    let attr = attr.trim().to_ascii_lowercase();
    let attr = rt
        .provenance
        .aliases
        .iter()
        .find(|(_, shown)| **shown == attr)
        .map(|(a, _)| a.clone())
        .unwrap_or(attr);
    let v = value.trim();
    let value = if let Some(s) = v.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')) {
        Value::text(s.replace("''", "'"))
    } else if let Ok(i) = v.parse::<i64>() {
        Value::Integer(i)
    } else if let Ok(r) = v.parse::<f64>() {
        Value::Real(r)
    } else {
        Value::text(v.to_string())
    };
    Some(DescPattern::new(&attr, Some(value)))
}

fn rule_predicate(e: &SqlExpr, frames: &mut Vec<Frame>, catalog: &Catalog) -> Result<RulePredicate> {
    Ok(match e {
        SqlExpr::And(a, b) => rule_predicate(a, frames, catalog)?.and(rule_predicate(b, frames, catalog)?),
        SqlExpr::Or(a, b) => rule_predicate(a, frames, catalog)?.or(rule_predicate(b, frames, catalog)?),
        SqlExpr::Not(a) => rule_predicate(a, frames, catalog)?.negate(),
        SqlExpr::In(a, b) => {
            let Some(set) = component(b, frames)? else {
                return Err(resolve_err(span_of(b), format!("`{b}` is not BODY(…) or HEAD(…)")));
            };
            if let Some(sub) = component(a, frames)? {
                // proper subset
                let of = SetExpr::Component(sub);
                RulePredicate::Has {
                    set: set.clone(),
                    of: of.clone(),
                }
                .and(RulePredicate::Is { set, of }.negate())
            } else if let SqlExpr::Lit(Literal::Str(s)) = &**a {
                let alias = set.alias.clone().unwrap_or_default();
                let rt = &frames.iter().find(|f| f.alias == alias).expect("resolved frame").rules;
                let Some(p) = descriptor(s, rt) else {
                    return Err(resolve_err(
                        span_of(b),
                        format!("`{}` is not a descriptor like 'ITEM=''A'''", quote(s)),
                    ));
                };
                RulePredicate::Has {
                    set,
                    of: SetExpr::Literal(SetLiteral::single(p)),
                }
            } else {
                return Err(resolve_err(
                    span_of(a),
                    format!("left of IN must be BODY(…), HEAD(…) or a descriptor string, found `{a}`"),
                ));
            }
        }
        SqlExpr::Cmp(op @ (CmpOp::Eq | CmpOp::Ne), a, b)
            if component(a, frames)?.is_some() && component(b, frames)?.is_some() =>
        {
            let set = component(a, frames)?.expect("component");
            let of = SetExpr::Component(component(b, frames)?.expect("component"));
            let p = RulePredicate::Is { set, of };
            if *op == CmpOp::Eq {
                p
            } else {
                p.negate()
            }
        }
        SqlExpr::Cmp(..) if metric_condition(e).is_some() => {
            let (m, arg, op, n) = metric_condition(e).expect("metric condition");
            let f = frame_of(arg, frames)?;
            let metric = match m {
                RuleMetric::Confidence => MetricRef::Confidence,
                RuleMetric::Support => MetricRef::SupportAs(
                    f.rules.provenance.semantics,
                    if n.is_absolute() {
                        Basis::Absolute
                    } else {
                        Basis::Relative
                    },
                ),
            };
            RulePredicate::Metric {
                metric,
                alias: Some(f.alias.clone()),
                op,
                value: n.magnitude(),
            }
        }
        SqlExpr::Exists { negated, query } => {
            let frame = match query.from.as_slice() {
                [item] => rule_frame(item, catalog)?,
                _ => None,
            };
            let Some(frame) = frame else {
                return Err(resolve_err(
                    span_of(e),
                    "EXISTS over rules selects from exactly one rule table",
                ));
            };
            let rules = frame.rules.clone();
            let alias = frame.alias.clone();
            frames.push(frame);
            let inner = match &query.filter {
                Some(f) => rule_predicate(f, frames, catalog),
                None => Ok(RulePredicate::True),
            };
            frames.pop();
            RulePredicate::Exists {
                negated: *negated,
                rules,
                alias: Some(alias),
                predicate: Box::new(inner?),
            }
        }
        other => {
            return Err(resolve_err(
                span_of(other),
                format!("unsupported rule condition `{other}`"),
            ))
        }
    })
}

fn check_rule_items(q: &Select, frame: &Frame) -> Result<()> {
    for item in &q.items {
        match item {
            SelectItem::Star => {}
            SelectItem::Expr { expr, .. } => {
                frame_of(expr, std::slice::from_ref(frame))?;
            }
        }
    }
    Ok(())
}

/// `SELECT * FROM rules alias WHERE …`: the frame and its predicate.
fn rule_selection(q: &Select, catalog: &Catalog) -> Result<Option<(RuleTable, String, RulePredicate)>> {
    let frame = match q.from.as_slice() {
        [item] => rule_frame(item, catalog)?,
        _ => None,
    };
    let Some(frame) = frame else {
        return Ok(None);
    };
    check_rule_items(q, &frame)?;
    let rules = frame.rules.clone();
    let alias = frame.alias.clone();
    let mut frames = vec![frame];
    let predicate = match &q.filter {
        Some(f) => rule_predicate(f, &mut frames, catalog)?,
        None => RulePredicate::True,
    };
    Ok(Some((rules, alias, predicate)))
}

fn select_plan(q: &Select, catalog: &Catalog) -> Result<LogicalPlan> {
    if let Some((source, alias, predicate)) = rule_selection(q, catalog)? {
        return Ok(LogicalPlan::SelectRules {
            source,
            alias: Some(alias),
            predicate,
            target: None,
        });
    }
    let conjuncts = q.filter.as_ref().map(SqlExpr::conjuncts).unwrap_or_default();
    let (cross, rest): (Vec<&SqlExpr>, Vec<&SqlExpr>) = conjuncts
        .into_iter()
        .partition(|c| matches!(c, SqlExpr::CrossOver { .. }));
    match cross.as_slice() {
        [] => Ok(LogicalPlan::Query {
            table: super::plain_query(&q.items, &q.from, q.filter.as_ref(), q.distinct, catalog)?,
            target: None,
        }),
        [SqlExpr::CrossOver {
            quant,
            rules,
            verb,
            strict,
            data,
        }] => {
            let outer_cond = rest.into_iter().cloned().reduce(SqlExpr::and);
            let outer = resolve_source(&q.from, outer_cond.as_ref(), catalog, &[])?;
            let Some((rt, alias, predicate)) = rule_selection(rules, catalog)? else {
                return Err(resolve_err(
                    rules.from.first().map(|_| span_of(cross[0])).unwrap_or_default(),
                    "the left of SATISFIED/VIOLATED BY must select from one rule table",
                ));
            };
            let picked = select_rules(&rt, Some(&alias), &predicate, &rt.name)?;
            let inner = resolve_source(&data.from, data.filter.as_ref(), catalog, &outer.scopes)?;
            if inner.correlations.is_empty() {
                return Err(resolve_err(
                    span_of(cross[0]),
                    "the data of SATISFIED/VIOLATED BY must be correlated with the outer query",
                ));
            }
            let inner_keys: Vec<String> = inner.correlations.iter().map(|(a, _)| a.clone()).collect();
            let outer_columns = inner
                .correlations
                .iter()
                .map(|(_, c)| column_name(c, &outer.scopes))
                .collect::<Result<Vec<_>>>()?;
            let mut project = Vec::new();
            for item in &q.items {
                match item {
                    SelectItem::Star => project.extend(outer.table.schema().names().map(str::to_string)),
                    SelectItem::Expr {
                        expr: SqlExpr::Column(c),
                        ..
                    } => project.push(column_name(c, &outer.scopes)?),
                    SelectItem::Expr { expr, .. } => {
                        return Err(resolve_err(
                            span_of(expr),
                            format!("only attributes can be selected here, found `{expr}`"),
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
                data: inner.grouped(&inner_keys)?,
                rules: picked,
                mode,
                output: CrossOutput::Correlated {
                    outer: outer.table,
                    outer_columns,
                    project,
                },
                target: None,
            }))
        }
        _ => Err(resolve_err(
            span_of(cross[1]),
            "one SATISFIED/VIOLATED BY condition per query",
        )),
    }
}
