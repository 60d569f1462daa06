//! MINE RULE: one statement, a SELECT-shaped rule specification with
//! body/head schemas, grouping, optional clustering and thresholds.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use super::lower::*;
use super::parser::{Parser, CLAUSE_WORDS};
use super::{Lowered, LogicalPlan};
use crate::catalog::{Catalog, Dataset};
use crate::error::Result;
use crate::hierarchy::Encoder;
use crate::miner::{Basis, ComponentSchema, MinePlan, SupportSemantics};
use crate::relstore::{CmpOp, Expr};
use crate::rulestore::{Provenance, RuleStyle};

#[derive(Debug, Clone, PartialEq)]
pub struct MineRule {
    pub name: Ident,
    pub body_card: Option<Card>,
    pub body: Vec<SqlExpr>,
    pub head_card: Option<Card>,
    pub head: Vec<SqlExpr>,
    pub show_support: bool,
    pub show_confidence: bool,
    /// Condition on rule elements (`BODY.x`, `HEAD.x`), before FROM.
    pub mining_cond: Option<SqlExpr>,
    pub from: Vec<FromItem>,
    pub filter: Option<SqlExpr>,
    pub group_by: Vec<SqlExpr>,
    pub having: Option<SqlExpr>,
    pub cluster_by: Vec<SqlExpr>,
    pub cluster_having: Option<SqlExpr>,
    pub support: Number,
    pub confidence: Number,
    pub at: Pos,
}

pub type Stmt = MineRule;

fn card_prefix(c: &Option<Card>) -> String {
    c.map(|c| format!("{c} ")).unwrap_or_default()
}

impl fmt::Display for MineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MINE RULE {} AS SELECT DISTINCT {}{} AS BODY, {}{} AS HEAD",
            self.name,
            card_prefix(&self.body_card),
            join(&self.body, ", "),
            card_prefix(&self.head_card),
            join(&self.head, ", ")
        )?;
        if self.show_support {
            f.write_str(", SUPPORT")?;
        }
        if self.show_confidence {
            f.write_str(", CONFIDENCE")?;
        }
        if let Some(c) = &self.mining_cond {
            write!(f, " WHERE {c}")?;
        }
        write!(f, " FROM {}", join(&self.from, ", "))?;
        if let Some(w) = &self.filter {
            write!(f, " WHERE {w}")?;
        }
        write!(f, " GROUP BY {}", join(&self.group_by, ", "))?;
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.cluster_by.is_empty() {
            write!(f, " CLUSTER BY {}", join(&self.cluster_by, ", "))?;
            if let Some(h) = &self.cluster_having {
                write!(f, " HAVING {h}")?;
            }
        }
        write!(
            f,
            " EXTRACTING RULES WITH SUPPORT : {}, CONFIDENCE : {}",
            self.support, self.confidence
        )
    }
}

// ---- parsing ----

fn schema_part(p: &mut Parser, role: &str) -> Result<(Option<Card>, Vec<SqlExpr>)> {
    let card = if p.at_card() { Some(p.card()?) } else { None };
    let attrs = p.list(",", |p| p.expr())?;
    p.expect_kw("AS")?;
    p.expect_kw(role)?;
    Ok((card, attrs))
}

pub fn parse(p: &mut Parser) -> Result<Stmt> {
    let at = Pos(p.span());
    p.expect_kw("MINE")?;
    p.expect_kw("RULE")?;
    let name = p.ident(CLAUSE_WORDS)?;
    p.expect_kw("AS")?;
    p.expect_kw("SELECT")?;
    p.expect_kw("DISTINCT")?;
    let (body_card, body) = schema_part(p, "BODY")?;
    p.expect_sym(",")?;
    let (head_card, head) = schema_part(p, "HEAD")?;
    let mut show_support = false;
    let mut show_confidence = false;
    while p.eat_sym(",") {
        if !show_support && p.eat_kw("SUPPORT") {
            show_support = true;
        } else if !show_confidence && p.eat_kw("CONFIDENCE") {
            show_confidence = true;
        } else {
            return Err(p.error(&["SUPPORT", "CONFIDENCE"]));
        }
    }
    let mining_cond = if p.eat_kw("WHERE") { Some(p.expr()?) } else { None };
    p.expect_kw("FROM")?;
    let from = p.from_list()?;
    let filter = if p.eat_kw("WHERE") { Some(p.expr()?) } else { None };
    if !p.at_kw("GROUP") {
        return Err(p.fail_expecting("MINE RULE needs a GROUP BY clause", &["GROUP"]));
    }
    p.bump();
    p.expect_kw("BY")?;
    let group_by = p.list(",", |p| p.expr())?;
    let having = if p.eat_kw("HAVING") { Some(p.expr()?) } else { None };
    let mut cluster_by = Vec::new();
    let mut cluster_having = None;
    if p.eat_kw("CLUSTER") {
        p.expect_kw("BY")?;
        cluster_by = p.list(",", |p| p.expr())?;
        if p.eat_kw("HAVING") {
            cluster_having = Some(p.expr()?);
        }
    }
    if !p.at_kw("EXTRACTING") {
        return Err(p.fail_expecting("EXTRACTING RULES required", &["EXTRACTING"]));
    }
    p.bump();
    p.expect_kw("RULES")?;
    p.expect_kw("WITH")?;
    p.expect_kw("SUPPORT")?;
    p.expect_sym(":")?;
    let support = p.number()?;
    p.expect_sym(",")?;
    p.expect_kw("CONFIDENCE")?;
    p.expect_sym(":")?;
    let confidence = p.number()?;
    Ok(MineRule {
        name,
        body_card,
        body,
        head_card,
        head,
        show_support,
        show_confidence,
        mining_cond,
        from,
        filter,
        group_by,
        having,
        cluster_by,
        cluster_having,
        support,
        confidence,
        at,
    })
}

// ---- lowering ----

/// A schema attribute: a plain attribute, or `TRUNC(attr, n)` which mines
/// `attr` bucketed to multiples of `10^n`.
struct SchemaAttr {
    name: String,
    encoder: Option<(Encoder, String)>,
}

fn schema_attr(e: &SqlExpr, scopes: &[Scope]) -> Result<SchemaAttr> {
    match e {
        SqlExpr::Column(c) => Ok(SchemaAttr {
            name: column_name(c, scopes)?,
            encoder: None,
        }),
        SqlExpr::Call { name, args, .. } if name.is("TRUNC") => match args.as_slice() {
            [SqlExpr::Column(c), SqlExpr::Lit(Literal::Int(d))] if *d >= 0 => {
                let a = column_name(c, scopes)?;
                Ok(SchemaAttr {
                    encoder: Some((Encoder::Truncate { digits: *d as u32 }, format!("TRUNC({a},{d})"))),
                    name: a,
                })
            }
            _ => Err(resolve_err(name.span, "TRUNC takes an attribute and a digit count")),
        },
        other => Err(resolve_err(
            span_of(other),
            format!("body and head entries must be attributes or TRUNC(attribute, n), found `{other}`"),
        )),
    }
}

enum Role {
    Body,
    Head,
}

/// Which rule element a mining condition talks about: every column must
/// carry the same `BODY.` or `HEAD.` qualifier.
fn role_of(e: &SqlExpr, found: &mut Vec<(Role, Ident)>) {
    match e {
        SqlExpr::Column(c) => {
            if let Some(q) = &c.qualifier {
                if q.is("BODY") {
                    found.push((Role::Body, q.clone()));
                } else if q.is("HEAD") {
                    found.push((Role::Head, q.clone()));
                }
            }
        }
        SqlExpr::Cmp(_, a, b) | SqlExpr::And(a, b) | SqlExpr::Or(a, b) | SqlExpr::In(a, b) => {
            role_of(a, found);
            role_of(b, found);
        }
        SqlExpr::Not(a) => role_of(a, found),
        _ => {}
    }
}

fn strip_role(e: &SqlExpr) -> SqlExpr {
    match e {
        SqlExpr::Column(c) => SqlExpr::Column(ColumnRef {
            qualifier: None,
            name: c.name.clone(),
        }),
        SqlExpr::Cmp(op, a, b) => SqlExpr::Cmp(*op, Box::new(strip_role(a)), Box::new(strip_role(b))),
        SqlExpr::And(a, b) => SqlExpr::And(Box::new(strip_role(a)), Box::new(strip_role(b))),
        SqlExpr::Or(a, b) => SqlExpr::Or(Box::new(strip_role(a)), Box::new(strip_role(b))),
        SqlExpr::In(a, b) => SqlExpr::In(Box::new(strip_role(a)), Box::new(strip_role(b))),
        SqlExpr::Not(a) => SqlExpr::Not(Box::new(strip_role(a))),
        other => other.clone(),
    }
}

pub fn lower(s: &Stmt, catalog: &Catalog) -> Result<Lowered> {
    let src = resolve_source(&s.from, s.filter.as_ref(), catalog, &[])?;
    let keys = s
        .group_by
        .iter()
        .map(|e| key_name(e, &src.scopes))
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset {
        table: src.table.clone(),
        group_keys: keys,
        pivoted: Vec::new(),
    };
    let groups = data.groups()?;

    let mut plan_bindings = Vec::new();
    let mut aliases = Vec::new();
    let mut side = |exprs: &[SqlExpr]| -> Result<Vec<String>> {
        let mut names = Vec::new();
        for e in exprs {
            let a = schema_attr(e, &src.scopes)?;
            if let Some((enc, label)) = a.encoder {
                plan_bindings.push((a.name.clone(), enc));
                aliases.push((a.name.clone(), label));
            }
            if !names.contains(&a.name) {
                names.push(a.name);
            }
        }
        Ok(names)
    };
    let body = side(&s.body)?;
    let head = side(&s.head)?;
    let card = |c: &Option<Card>| c.unwrap_or(Card { min: 1, max: None });
    let (bc, hc) = (card(&s.body_card), card(&s.head_card));
    let body_refs: Vec<&str> = body.iter().map(String::as_str).collect();
    let head_refs: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut plan = MinePlan::new(
        groups,
        ComponentSchema::new(&body_refs, bc.min, bc.max)?,
        ComponentSchema::new(&head_refs, hc.min, hc.max)?,
    );
    let span = s.at.0;
    let support = threshold(&s.support, CmpOp::Ge, span, "support")?;
    plan.support = Some(support);
    plan.confidence = Some(threshold(&s.confidence, CmpOp::Ge, span, "confidence")?);
    plan.semantics = SupportSemantics::Rule;

    if let Some(cond) = &s.mining_cond {
        let mut body_parts = Vec::new();
        let mut head_parts = Vec::new();
        for c in cond.conjuncts() {
            let mut found = Vec::new();
            role_of(c, &mut found);
            let Some((first, q)) = found.first() else {
                return Err(resolve_err(
                    span_of(c),
                    format!("mining condition `{c}` must qualify attributes with BODY. or HEAD."),
                ));
            };
            let same = found.iter().all(|(r, _)| std::mem::discriminant(r) == std::mem::discriminant(first));
            if !same {
                return Err(resolve_err(q.span, format!("`{c}` mixes BODY and HEAD attributes")));
            }
            let e = to_expr(&strip_role(c), &src.scopes)?;
            match first {
                Role::Body => body_parts.push(e),
                Role::Head => head_parts.push(e),
            }
        }
        plan.body_filter = Expr::conjunction(body_parts);
        plan.head_filter = Expr::conjunction(head_parts);
    }
    if let Some(h) = &s.having {
        plan.group_filter = Some(to_expr(h, &src.scopes)?);
    }
    if !s.cluster_by.is_empty() {
        let ck = s
            .cluster_by
            .iter()
            .map(|e| key_name(e, &src.scopes))
            .collect::<Result<Vec<_>>>()?;
        plan.cluster_keys = Some(ck);
        if let Some(h) = &s.cluster_having {
            plan.cluster_filter = Some(to_expr(h, &src.scopes)?);
        }
    }
    let mut provenance = Provenance {
        style: RuleStyle::MineRule,
        semantics: SupportSemantics::Rule,
        basis: if s.support.is_absolute() {
            Basis::Absolute
        } else {
            Basis::Relative
        },
        summary: s.to_string(),
        body_attributes: body.clone(),
        head_attributes: head.clone(),
        ..Provenance::default()
    };
    let mut seen = BTreeSet::new();
    for (a, e) in plan_bindings {
        if !seen.insert(a.clone()) {
            continue;
        }
        plan.bindings.insert(a.clone(), e.clone());
        provenance.bindings.insert(a, e);
    }
    provenance.aliases.extend(aliases);
    plan.validate()?;
    Ok(Lowered {
        plan: LogicalPlan::Mine {
            plan,
            target: Some(s.name.lower()),
            provenance,
            replace: false,
        },
        warnings: Vec::new(),
    })
}
