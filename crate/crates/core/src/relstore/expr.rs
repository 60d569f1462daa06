use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use super::table::{Row, Schema};
use super::value::Value;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn test(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// `a op b` ⇔ `b op.flip() a`.
    pub fn flip(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    CountDistinct,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count | AggFunc::CountDistinct => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Avg => "AVG",
        }
    }
}

/// Row or group predicate over named attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// Aggregate over a group; `None` column means `*`.
    Aggregate(AggFunc, Option<String>),
}

impl Expr {
    pub fn col(name: &str) -> Expr {
        Expr::Column(name.to_ascii_lowercase())
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Literal(v.into())
    }

    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::Compare(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, l, r)
    }

    pub fn and(self, other: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Expr) -> Expr {
        Expr::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    /// Conjunction of all expressions; `None` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Expr>) -> Option<Expr> {
        parts.into_iter().reduce(Expr::and)
    }

    pub fn columns(&self) -> HashSet<&str> {
        let mut out = HashSet::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut HashSet<&'a str>) {
        match self {
            Expr::Column(c) => {
                out.insert(c);
            }
            Expr::Aggregate(_, Some(c)) => {
                out.insert(c);
            }
            Expr::Compare(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_columns(out);
                b.collect_columns(out);
            }
            Expr::Not(a) => a.collect_columns(out),
            Expr::Literal(_) | Expr::Aggregate(_, None) => {}
        }
    }

    fn has_aggregate(&self) -> bool {
        match self {
            Expr::Aggregate(..) => true,
            Expr::Compare(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.has_aggregate() || b.has_aggregate()
            }
            Expr::Not(a) => a.has_aggregate(),
            _ => false,
        }
    }

    /// Resolves attribute names against `schema`.
    pub fn bind(&self, schema: &Schema) -> Result<BoundExpr> {
        Ok(match self {
            Expr::Column(c) => BoundExpr::Column(schema.require(c)?),
            Expr::Literal(v) => BoundExpr::Literal(v.clone()),
            Expr::Compare(op, a, b) => {
                BoundExpr::Compare(*op, Box::new(a.bind(schema)?), Box::new(b.bind(schema)?))
            }
            Expr::And(a, b) => BoundExpr::And(Box::new(a.bind(schema)?), Box::new(b.bind(schema)?)),
            Expr::Or(a, b) => BoundExpr::Or(Box::new(a.bind(schema)?), Box::new(b.bind(schema)?)),
            Expr::Not(a) => BoundExpr::Not(Box::new(a.bind(schema)?)),
            Expr::Aggregate(f, c) => BoundExpr::Aggregate(
                *f,
                c.as_deref().map(|c| schema.require(c)).transpose()?,
            ),
        })
    }

    /// Binds a predicate evaluated per row; aggregates are rejected.
    pub fn bind_row(&self, schema: &Schema) -> Result<BoundExpr> {
        if self.has_aggregate() {
            return Err(Error::plan(format!(
                "aggregate not allowed in row predicate: {self}"
            )));
        }
        self.bind(schema)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => f.write_str(c),
            Expr::Literal(Value::Text(s)) => write!(f, "'{}'", s.replace('\'', "''")),
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Compare(op, a, b) => write!(f, "{a}{}{b}", op.symbol()),
            Expr::And(a, b) => write!(f, "({a} AND {b})"),
            Expr::Or(a, b) => write!(f, "({a} OR {b})"),
            Expr::Not(a) => write!(f, "NOT {a}"),
            Expr::Aggregate(AggFunc::CountDistinct, Some(c)) => write!(f, "COUNT(DISTINCT {c})"),
            Expr::Aggregate(func, Some(c)) => write!(f, "{}({c})", func.name()),
            Expr::Aggregate(func, None) => write!(f, "{}(*)", func.name()),
        }
    }
}

/// An [`Expr`] with attribute references resolved to column positions.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr {
    Column(usize),
    Literal(Value),
    Compare(CmpOp, Box<BoundExpr>, Box<BoundExpr>),
    And(Box<BoundExpr>, Box<BoundExpr>),
    Or(Box<BoundExpr>, Box<BoundExpr>),
    Not(Box<BoundExpr>),
    Aggregate(AggFunc, Option<usize>),
}

impl BoundExpr {
    /// Three-valued truth of the predicate on a single row.
    pub fn eval_row(&self, row: &Row) -> Option<bool> {
        self.truth(&|e| match e {
            BoundExpr::Column(i) => row[*i].clone(),
            BoundExpr::Literal(v) => v.clone(),
            _ => Value::Null,
        })
    }

    /// Truth over a group: plain columns read the group's first row,
    /// aggregates range over all rows.
    pub fn eval_group(&self, rows: &[Row]) -> Option<bool> {
        self.truth(&|e| match e {
            BoundExpr::Column(i) => rows.first().map(|r| r[*i].clone()).unwrap_or(Value::Null),
            BoundExpr::Literal(v) => v.clone(),
            BoundExpr::Aggregate(f, c) => aggregate(*f, *c, rows),
            _ => Value::Null,
        })
    }

    /// Row filter: unknown counts as false.
    pub fn matches(&self, row: &Row) -> bool {
        self.eval_row(row) == Some(true)
    }

    fn truth(&self, scalar: &dyn Fn(&BoundExpr) -> Value) -> Option<bool> {
        match self {
            BoundExpr::Compare(op, a, b) => {
                let (x, y) = (scalar(a), scalar(b));
                x.compare(&y).map(|o| op.test(o))
            }
            BoundExpr::And(a, b) => match (a.truth(scalar), b.truth(scalar)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            BoundExpr::Or(a, b) => match (a.truth(scalar), b.truth(scalar)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            BoundExpr::Not(a) => a.truth(scalar).map(|t| !t),
            // bare scalar used as a condition: non-zero numbers are true
            other => match scalar(other) {
                Value::Integer(i) => Some(i != 0),
                Value::Real(r) => Some(r != 0.0),
                _ => None,
            },
        }
    }
}

fn aggregate(f: AggFunc, col: Option<usize>, rows: &[Row]) -> Value {
    let Some(c) = col else {
        return Value::Integer(rows.len() as i64);
    };
    let vals: Vec<&Value> = rows.iter().map(|r| &r[c]).filter(|v| !v.is_null()).collect();
    match f {
        AggFunc::Count => Value::Integer(vals.len() as i64),
        AggFunc::CountDistinct => {
            let set: HashSet<&Value> = vals.into_iter().collect();
            Value::Integer(set.len() as i64)
        }
        AggFunc::Min => vals.into_iter().min().cloned().unwrap_or(Value::Null),
        AggFunc::Max => vals.into_iter().max().cloned().unwrap_or(Value::Null),
        AggFunc::Sum => {
            if vals.iter().all(|v| matches!(v, Value::Integer(_))) {
                Value::Integer(vals.iter().filter_map(|v| v.as_f64()).map(|x| x as i64).sum())
            } else {
                Value::Real(vals.iter().filter_map(|v| v.as_f64()).sum())
            }
        }
        AggFunc::Avg => {
            let nums: Vec<f64> = vals.iter().filter_map(|v| v.as_f64()).collect();
            if nums.is_empty() {
                Value::Null
            } else {
                Value::Real(nums.iter().sum::<f64>() / nums.len() as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relstore::DataType;

    fn schema() -> Schema {
        Schema::new([("a", DataType::Integer), ("b", DataType::Text)]).unwrap()
    }

    #[test]
    fn null_comparison_is_unknown() {
        let e = Expr::eq(Expr::col("a"), Expr::lit(1)).bind(&schema()).unwrap();
        assert_eq!(e.eval_row(&vec![Value::Null, Value::text("x")]), None);
        let not = Expr::eq(Expr::col("a"), Expr::lit(1))
            .negate()
            .bind(&schema())
            .unwrap();
        assert!(!not.matches(&vec![Value::Null, Value::text("x")]));
    }

    #[test]
    fn unknown_attribute_is_plan_error() {
        let err = Expr::col("zz").bind(&schema()).unwrap_err();
        assert!(matches!(err, Error::Plan(_)));
    }

    #[test]
    fn group_aggregates() {
        let rows = vec![
            vec![Value::Integer(1), Value::text("x")],
            vec![Value::Integer(3), Value::text("x")],
            vec![Value::Integer(3), Value::text("y")],
        ];
        let s = schema();
        let count = Expr::cmp(CmpOp::Ge, Expr::Aggregate(AggFunc::Count, None), Expr::lit(3));
        assert_eq!(count.bind(&s).unwrap().eval_group(&rows), Some(true));
        let distinct = Expr::eq(
            Expr::Aggregate(AggFunc::CountDistinct, Some("a".into())),
            Expr::lit(2),
        );
        assert_eq!(distinct.bind(&s).unwrap().eval_group(&rows), Some(true));
        let avg = Expr::cmp(
            CmpOp::Gt,
            Expr::Aggregate(AggFunc::Avg, Some("a".into())),
            Expr::lit(2.0),
        );
        assert_eq!(avg.bind(&s).unwrap().eval_group(&rows), Some(true));
        assert!(count.bind_row(&s).is_err());
    }
}
