//! Lowering pieces shared by the dialects: FROM lists with their WHERE
//! clause become equijoins plus a row filter, SQL conditions become store
//! expressions, thresholds become miner thresholds.

use super::ast::*;
use crate::catalog::{Catalog, Dataset};
use crate::error::{Error, Result, Span};
use crate::miner::{Basis, Comparator, Threshold};
use crate::relstore::{equijoin, filter, group_rows, project, AggFunc, CmpOp, Expr, GroupedTable, Table, Value};

pub(crate) fn resolve_err(span: Span, message: impl Into<String>) -> Error {
    Error::Resolve {
        span,
        message: message.into(),
    }
}

/// Position of the first identifier in an expression, for error reports.
pub(crate) fn span_of(e: &SqlExpr) -> Span {
    match e {
        SqlExpr::Column(c) => c.qualifier.as_ref().unwrap_or(&c.name).span,
        SqlExpr::Call { name, .. } => name.span,
        SqlExpr::Cmp(_, a, b) | SqlExpr::And(a, b) | SqlExpr::Or(a, b) | SqlExpr::In(a, b) => {
            let s = span_of(a);
            if s == Span::default() {
                span_of(b)
            } else {
                s
            }
        }
        SqlExpr::Not(a) => span_of(a),
        SqlExpr::Case { whens, operand, .. } => operand
            .as_deref()
            .map(span_of)
            .or_else(|| whens.first().map(|(w, _)| span_of(w)))
            .unwrap_or_default(),
        SqlExpr::Exists { query, .. } => query.from.first().map(from_span).unwrap_or_default(),
        SqlExpr::CrossOver { rules, .. } => rules.from.first().map(from_span).unwrap_or_default(),
        SqlExpr::Lit(_) | SqlExpr::Star => Span::default(),
    }
}

fn from_span(f: &FromItem) -> Span {
    match f {
        FromItem::Table { name, .. } => name.span,
        FromItem::Subquery { query, .. } => query.from.first().map(from_span).unwrap_or_default(),
    }
}

/// Names one FROM item answers to and the attributes it offers.
#[derive(Debug, Clone)]
pub(crate) struct Scope {
    pub names: Vec<String>,
    pub columns: Vec<String>,
}

impl Scope {
    fn answers(&self, q: &str) -> bool {
        self.names.iter().any(|n| n == q)
    }

    fn has(&self, c: &str) -> bool {
        self.columns.iter().any(|x| x == c)
    }
}

/// A resolved FROM/WHERE: the joined and filtered rows plus what the
/// sources said about grouping.
#[derive(Debug, Clone)]
pub(crate) struct Source {
    pub table: Table,
    pub scopes: Vec<Scope>,
    /// Grouping inherited from a view or a FROM subquery.
    pub group_keys: Vec<String>,
    pub pivoted: Vec<String>,
    /// `(inner attribute, outer column)` equalities with an enclosing query.
    pub correlations: Vec<(String, ColumnRef)>,
}

impl Source {
    pub fn grouped(&self, keys: &[String]) -> Result<GroupedTable> {
        Dataset {
            table: self.table.clone(),
            group_keys: keys.to_vec(),
            pivoted: Vec::new(),
        }
        .groups()
    }
}

enum Side {
    Local(usize),
    Outer,
}

/// Which scope a column belongs to, or `None` when it exists nowhere.
fn locate(c: &ColumnRef, scopes: &[Scope], outer: &[Scope]) -> Result<Option<Side>> {
    let col = c.name.lower();
    match &c.qualifier {
        Some(q) => {
            let q = q.lower();
            if let Some(i) = scopes.iter().position(|s| s.answers(&q)) {
                return Ok(scopes[i].has(&col).then_some(Side::Local(i)));
            }
            if let Some(s) = outer.iter().find(|s| s.answers(&q)) {
                return Ok(s.has(&col).then_some(Side::Outer));
            }
            Err(resolve_err(
                c.qualifier.as_ref().unwrap().span,
                format!("unknown table or alias `{}`", c.qualifier.as_ref().unwrap()),
            ))
        }
        None => Ok(scopes.iter().position(|s| s.has(&col)).map(Side::Local)),
    }
}

pub(crate) fn column_name(c: &ColumnRef, scopes: &[Scope]) -> Result<String> {
    match locate(c, scopes, &[])? {
        Some(_) => Ok(c.name.lower()),
        None => Err(resolve_err(c.name.span, format!("unknown attribute `{c}`"))),
    }
}

fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Int(i) => Value::Integer(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Str(s) => Value::text(s.clone()),
        Literal::Null => Value::Null,
    }
}

fn aggregate(name: &Ident) -> Option<AggFunc> {
    Some(match name.text.to_ascii_uppercase().as_str() {
        "COUNT" => AggFunc::Count,
        "SUM" => AggFunc::Sum,
        "MIN" => AggFunc::Min,
        "MAX" => AggFunc::Max,
        "AVG" => AggFunc::Avg,
        _ => return None,
    })
}

/// A condition over the attributes of `scopes`.
pub(crate) fn to_expr(e: &SqlExpr, scopes: &[Scope]) -> Result<Expr> {
    Ok(match e {
        SqlExpr::Column(c) => Expr::col(&column_name(c, scopes)?),
        SqlExpr::Lit(l) => Expr::Literal(literal_value(l)),
        SqlExpr::Cmp(op, a, b) => Expr::cmp(*op, to_expr(a, scopes)?, to_expr(b, scopes)?),
        SqlExpr::And(a, b) => to_expr(a, scopes)?.and(to_expr(b, scopes)?),
        SqlExpr::Or(a, b) => to_expr(a, scopes)?.or(to_expr(b, scopes)?),
        SqlExpr::Not(a) => to_expr(a, scopes)?.negate(),
        SqlExpr::Call { name, distinct, args } => {
            let Some(f) = aggregate(name) else {
                return Err(resolve_err(name.span, format!("unsupported function `{name}`")));
            };
            let f = if *distinct && f == AggFunc::Count {
                AggFunc::CountDistinct
            } else {
                f
            };
            match args.as_slice() {
                [SqlExpr::Star] if f == AggFunc::Count => Expr::Aggregate(f, None),
                [SqlExpr::Column(c)] => Expr::Aggregate(f, Some(column_name(c, scopes)?)),
                _ => {
                    return Err(resolve_err(
                        name.span,
                        format!("{name} takes one attribute (or * for COUNT)"),
                    ))
                }
            }
        }
        other => {
            return Err(resolve_err(
                span_of(other),
                format!("unsupported condition `{other}`"),
            ))
        }
    })
}

/// Whether any column of `e` names an outer alias.
fn mentions_outer(e: &SqlExpr, scopes: &[Scope], outer: &[Scope]) -> bool {
    match e {
        SqlExpr::Column(c) => c.qualifier.as_ref().is_some_and(|q| {
            let q = q.lower();
            !scopes.iter().any(|s| s.answers(&q)) && outer.iter().any(|s| s.answers(&q))
        }),
        SqlExpr::Cmp(_, a, b) | SqlExpr::And(a, b) | SqlExpr::Or(a, b) | SqlExpr::In(a, b) => {
            mentions_outer(a, scopes, outer) || mentions_outer(b, scopes, outer)
        }
        SqlExpr::Not(a) => mentions_outer(a, scopes, outer),
        _ => false,
    }
}

fn item_source(item: &FromItem, catalog: &Catalog) -> Result<(Dataset, Scope)> {
    match item {
        FromItem::Table { name, alias } => {
            let Some(data) = catalog.table(&name.text) else {
                let msg = if catalog.rule_table(&name.text).is_some() {
                    format!("`{name}` is a rule table, not a data table")
                } else {
                    format!("unknown table `{name}`")
                };
                return Err(resolve_err(name.span, msg));
            };
            let mut names = vec![name.lower()];
            names.extend(alias.as_ref().map(Ident::lower));
            let columns = data.table.schema().names().map(str::to_string).collect();
            Ok((data.clone(), Scope { names, columns }))
        }
        FromItem::Subquery { query, alias } => {
            let data = select_dataset(query, catalog)?;
            let columns = data.table.schema().names().map(str::to_string).collect();
            Ok((
                data,
                Scope {
                    names: alias.iter().map(Ident::lower).collect(),
                    columns,
                },
            ))
        }
    }
}

/// Resolves a FROM list and its WHERE clause. Column equalities across
/// two FROM items become join keys, equalities with `outer` aliases become
/// correlations, everything else filters the joined rows.
pub(crate) fn resolve_source(
    from: &[FromItem],
    cond: Option<&SqlExpr>,
    catalog: &Catalog,
    outer: &[Scope],
) -> Result<Source> {
    let mut parts = Vec::new();
    let mut scopes = Vec::new();
    for item in from {
        let (d, s) = item_source(item, catalog)?;
        parts.push(d);
        scopes.push(s);
    }
    let mut joins: Vec<(usize, String, usize, String)> = Vec::new();
    let mut correlations = Vec::new();
    let mut residual = Vec::new();
    for c in cond.map(SqlExpr::conjuncts).unwrap_or_default() {
        if let SqlExpr::Cmp(CmpOp::Eq, a, b) = c {
            if let (SqlExpr::Column(ca), SqlExpr::Column(cb)) = (&**a, &**b) {
                match (locate(ca, &scopes, outer)?, locate(cb, &scopes, outer)?) {
                    (Some(Side::Local(i)), Some(Side::Local(j))) if i != j => {
                        joins.push((i, ca.name.lower(), j, cb.name.lower()));
                        continue;
                    }
                    (Some(Side::Local(_)), Some(Side::Outer)) => {
                        correlations.push((ca.name.lower(), cb.clone()));
                        continue;
                    }
                    (Some(Side::Outer), Some(Side::Local(_))) => {
                        correlations.push((cb.name.lower(), ca.clone()));
                        continue;
                    }
                    _ => {}
                }
            }
        }
        if mentions_outer(c, &scopes, outer) {
            return Err(resolve_err(
                span_of(c),
                format!("correlated condition `{c}` must equate an inner and an outer attribute"),
            ));
        }
        residual.push(c);
    }

    let mut table = parts[0].table.clone();
    let mut joined = vec![0usize];
    while joined.len() < parts.len() {
        let next = (0..parts.len()).filter(|j| !joined.contains(j)).find_map(|j| {
            let on: Vec<(String, String)> = joins
                .iter()
                .filter_map(|(a, ca, b, cb)| {
                    if joined.contains(a) && *b == j {
                        Some((ca.clone(), cb.clone()))
                    } else if joined.contains(b) && *a == j {
                        Some((cb.clone(), ca.clone()))
                    } else {
                        None
                    }
                })
                .collect();
            (!on.is_empty()).then_some((j, on))
        });
        let Some((j, on)) = next else {
            let j = (0..parts.len()).find(|j| !joined.contains(j)).unwrap();
            return Err(resolve_err(
                from_span(&from[j]),
                "FROM items must be linked by attribute equalities in WHERE",
            ));
        };
        let on_ref: Vec<(&str, &str)> = on.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        table = equijoin(&table, &parts[j].table, &on_ref)?;
        joined.push(j);
    }

    if let Some(pred) = Expr::conjunction(
        residual
            .into_iter()
            .map(|c| to_expr(c, &scopes))
            .collect::<Result<Vec<_>>>()?,
    ) {
        let names: Vec<String> = table.schema().names().map(str::to_string).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        table = filter(&table, &pred, &names)?;
    }
    let single = parts.len() == 1;
    Ok(Source {
        table,
        scopes,
        group_keys: if single { parts[0].group_keys.clone() } else { Vec::new() },
        pivoted: parts.iter().flat_map(|p| p.pivoted.clone()).collect(),
        correlations,
    })
}

/// Attribute named by a GROUP BY / CLUSTER BY entry.
pub(crate) fn key_name(e: &SqlExpr, scopes: &[Scope]) -> Result<String> {
    match e {
        SqlExpr::Column(c) => column_name(c, scopes),
        other => Err(resolve_err(
            span_of(other),
            format!("grouping entry `{other}` must be an attribute"),
        )),
    }
}

/// Rows of a nested SELECT with the grouping it declares. `SET(attr)`
/// collects the attribute per group; other items must be attributes.
pub(crate) fn select_dataset(q: &Select, catalog: &Catalog) -> Result<Dataset> {
    let src = resolve_source(&q.from, q.filter.as_ref(), catalog, &[])?;
    let keys = q
        .group_by
        .iter()
        .map(|e| key_name(e, &src.scopes))
        .collect::<Result<Vec<_>>>()?;
    let mut keep: Vec<String> = Vec::new();
    for item in &q.items {
        match item {
            SelectItem::Star => keep.extend(src.table.schema().names().map(str::to_string)),
            SelectItem::Expr { expr, .. } => match expr {
                SqlExpr::Column(c) => keep.push(column_name(c, &src.scopes)?),
                SqlExpr::Call { name, args, .. } if name.is("SET") => match args.as_slice() {
                    [SqlExpr::Column(c)] => keep.push(column_name(c, &src.scopes)?),
                    _ => return Err(resolve_err(name.span, "SET takes one attribute")),
                },
                other => {
                    return Err(resolve_err(
                        span_of(other),
                        format!("unsupported select item `{other}`"),
                    ))
                }
            },
        }
    }
    for k in &keys {
        if !keep.contains(k) {
            keep.push(k.clone());
        }
    }
    let mut seen = Vec::new();
    keep.retain(|k| {
        let fresh = !seen.contains(k);
        seen.push(k.clone());
        fresh
    });
    let names: Vec<&str> = keep.iter().map(String::as_str).collect();
    let table = project(&src.table, &names, false)?;
    let group_keys = if keys.is_empty() { src.group_keys } else { keys };
    // validates the keys early
    if !group_keys.is_empty() {
        let refs: Vec<&str> = group_keys.iter().map(String::as_str).collect();
        group_rows(&table, &refs)?;
    }
    Ok(Dataset {
        table,
        group_keys,
        pivoted: src.pivoted,
    })
}

/// Support or confidence threshold. Integers are absolute counts,
/// reals and percentages fractions; `op` must be `>` or `>=`.
pub(crate) fn threshold(n: &Number, op: CmpOp, span: Span, what: &str) -> Result<Threshold> {
    let comparator = match op {
        CmpOp::Gt => Comparator::Greater,
        CmpOp::Ge => Comparator::GreaterOrEqual,
        other => {
            return Err(resolve_err(
                span,
                format!("{what} threshold must use > or >=, found {}", other.symbol()),
            ))
        }
    };
    let basis = if n.is_absolute() {
        Basis::Absolute
    } else {
        Basis::Relative
    };
    Ok(Threshold::new(n.magnitude(), basis, comparator))
}
