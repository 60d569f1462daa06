//! Syntax nodes shared by the dialects: identifiers, SQL expressions,
//! SELECT blocks and threshold numbers. Every node prints back to text the
//! parsers accept; equality ignores spans and identifier case.

use std::fmt;

use crate::error::Span;
use crate::relstore::CmpOp;

#[derive(Debug, Clone)]
pub struct Ident {
    pub text: String,
    pub span: Span,
}

impl Ident {
    pub fn new(text: &str) -> Self {
        Ident {
            text: text.to_string(),
            span: Span::default(),
        }
    }

    pub fn at(text: &str, span: Span) -> Self {
        Ident {
            text: text.to_string(),
            span,
        }
    }

    pub fn lower(&self) -> String {
        self.text.to_ascii_lowercase()
    }

    pub fn is(&self, s: &str) -> bool {
        self.text.eq_ignore_ascii_case(s)
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.text.eq_ignore_ascii_case(&other.text)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub qualifier: Option<Ident>,
    pub name: Ident,
}

impl ColumnRef {
    pub fn bare(name: &str) -> Self {
        ColumnRef {
            qualifier: None,
            name: Ident::new(name),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

/// Shortest text that reads back as the same `f64` and still lexes as a
/// real (always has a `.` or an exponent).
pub fn real_text(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
    Null,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => f.write_str(&real_text(*r)),
            Literal::Str(s) => f.write_str(&quote(s)),
            Literal::Null => f.write_str("NULL"),
        }
    }
}

/// A threshold value as written: `2`, `0.5`, `25%`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Number {
    pub value: f64,
    pub integer: bool,
    pub percent: bool,
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number {
            value: v as f64,
            integer: true,
            percent: false,
        }
    }

    pub fn real(v: f64) -> Self {
        Number {
            value: v,
            integer: false,
            percent: false,
        }
    }

    pub fn percent(v: f64) -> Self {
        Number {
            value: v,
            integer: v.fract() == 0.0,
            percent: true,
        }
    }

    /// Integers count groups; reals and percentages are fractions.
    pub fn is_absolute(&self) -> bool {
        self.integer && !self.percent
    }

    /// The value on its basis: a count, or a fraction in `[0, 1]`.
    pub fn magnitude(&self) -> f64 {
        if self.percent {
            self.value / 100.0
        } else {
            self.value
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.integer {
            write!(f, "{}", self.value as i64)?;
        } else {
            f.write_str(&real_text(self.value))?;
        }
        if self.percent {
            f.write_str("%")?;
        }
        Ok(())
    }
}

/// `min..max`, `N` standing for no upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Card {
    pub min: usize,
    pub max: Option<usize>,
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "{}..{m}", self.min),
            None => write!(f, "{}..N", self.min),
        }
    }
}

/// A numeric range bound; `None` is `MIN` or `MAX` by position.
pub fn bound_text(b: Option<f64>, sentinel: &str) -> String {
    match b {
        None => sentinel.to_string(),
        Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{}", x as i64),
        Some(x) => real_text(x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossVerb {
    Satisfied,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    All,
    Any,
}

impl fmt::Display for Quant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quant::All => "ALL",
            Quant::Any => "ANY",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlExpr {
    Column(ColumnRef),
    Lit(Literal),
    /// `*` as a call argument, as in `COUNT(*)`.
    Star,
    Call {
        name: Ident,
        distinct: bool,
        args: Vec<SqlExpr>,
    },
    Cmp(CmpOp, Box<SqlExpr>, Box<SqlExpr>),
    And(Box<SqlExpr>, Box<SqlExpr>),
    Or(Box<SqlExpr>, Box<SqlExpr>),
    Not(Box<SqlExpr>),
    Case {
        operand: Option<Box<SqlExpr>>,
        whens: Vec<(SqlExpr, SqlExpr)>,
        otherwise: Option<Box<SqlExpr>>,
    },
    /// `x IN y`; MineSQL set containment.
    In(Box<SqlExpr>, Box<SqlExpr>),
    Exists {
        negated: bool,
        query: Box<Select>,
    },
    /// MineSQL `(rules) [ANY] VIOLATED [STRICT] BY (data)`.
    CrossOver {
        quant: Quant,
        rules: Box<Select>,
        verb: CrossVerb,
        strict: bool,
        data: Box<Select>,
    },
}

impl SqlExpr {
    pub fn col(name: &str) -> SqlExpr {
        SqlExpr::Column(ColumnRef::bare(name))
    }

    pub fn and(self, other: SqlExpr) -> SqlExpr {
        SqlExpr::And(Box::new(self), Box::new(other))
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&SqlExpr> {
        match self {
            SqlExpr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            SqlExpr::Or(..) => 1,
            SqlExpr::And(..) => 2,
            SqlExpr::Not(..) => 3,
            SqlExpr::Cmp(..) | SqlExpr::In(..) | SqlExpr::CrossOver { .. } => 4,
            _ => 5,
        }
    }
}

fn wrap(e: &SqlExpr, parens: bool) -> String {
    if parens {
        format!("({e})")
    } else {
        e.to_string()
    }
}

impl fmt::Display for SqlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            SqlExpr::Column(c) => write!(f, "{c}"),
            SqlExpr::Lit(l) => write!(f, "{l}"),
            SqlExpr::Star => f.write_str("*"),
            SqlExpr::Call { name, distinct, args } => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                let d = if *distinct { "DISTINCT " } else { "" };
                write!(f, "{name}({d}{})", args.join(", "))
            }
            SqlExpr::Cmp(op, a, b) => write!(
                f,
                "{} {} {}",
                wrap(a, a.precedence() <= p),
                op.symbol(),
                wrap(b, b.precedence() <= p)
            ),
            SqlExpr::In(a, b) => write!(
                f,
                "{} IN {}",
                wrap(a, a.precedence() <= p),
                wrap(b, b.precedence() <= p)
            ),
            SqlExpr::And(a, b) => write!(
                f,
                "{} AND {}",
                wrap(a, a.precedence() < p),
                wrap(b, b.precedence() <= p)
            ),
            SqlExpr::Or(a, b) => write!(
                f,
                "{} OR {}",
                wrap(a, a.precedence() < p),
                wrap(b, b.precedence() <= p)
            ),
            SqlExpr::Not(a) => {
                // `NOT EXISTS` would read back as a negated EXISTS
                let parens = a.precedence() < p || matches!(**a, SqlExpr::Exists { .. });
                write!(f, "NOT {}", wrap(a, parens))
            }
            SqlExpr::Case {
                operand,
                whens,
                otherwise,
            } => {
                f.write_str("CASE")?;
                if let Some(o) = operand {
                    write!(f, " {o}")?;
                }
                for (w, t) in whens {
                    write!(f, " WHEN {w} THEN {t}")?;
                }
                if let Some(e) = otherwise {
                    write!(f, " ELSE {e}")?;
                }
                f.write_str(" END")
            }
            SqlExpr::Exists { negated, query } => {
                let n = if *negated { "NOT " } else { "" };
                write!(f, "{n}EXISTS ({query})")
            }
            SqlExpr::CrossOver {
                quant,
                rules,
                verb,
                strict,
                data,
            } => {
                if *quant == Quant::Any {
                    f.write_str("ANY ")?;
                }
                let v = match verb {
                    CrossVerb::Satisfied => "SATISFIED",
                    CrossVerb::Violated => "VIOLATED",
                };
                let s = if *strict { " STRICT" } else { "" };
                write!(f, "({rules}) {v}{s} BY ({data})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Star,
    Expr { expr: SqlExpr, alias: Option<Ident> },
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Star => f.write_str("*"),
            SelectItem::Expr { expr, alias: None } => write!(f, "{expr}"),
            SelectItem::Expr {
                expr,
                alias: Some(a),
            } => write!(f, "{expr} AS {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Table { name: Ident, alias: Option<Ident> },
    Subquery { query: Box<Select>, alias: Option<Ident> },
}

impl fmt::Display for FromItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (head, alias) = match self {
            FromItem::Table { name, alias } => (name.to_string(), alias),
            FromItem::Subquery { query, alias } => (format!("({query})"), alias),
        };
        match alias {
            Some(a) => write!(f, "{head} {a}"),
            None => f.write_str(&head),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: SqlExpr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub filter: Option<SqlExpr>,
    pub group_by: Vec<SqlExpr>,
    pub having: Option<SqlExpr>,
    pub order_by: Vec<OrderItem>,
}

pub fn join<T: fmt::Display>(xs: &[T], sep: &str) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    parts.join(sep)
}

impl fmt::Display for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        write!(f, "{} FROM {}", join(&self.items, ", "), join(&self.from, ", "))?;
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

/// A source position that takes no part in node equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos(pub Span);

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
