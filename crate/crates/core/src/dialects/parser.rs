//! Token cursor and the grammar pieces every dialect reuses: SQL
//! expressions, SELECT blocks, FROM lists, thresholds and cardinalities.

use super::ast::*;
use super::lexer::{Tok, Token};
use crate::error::{Error, Result, Span};
use crate::relstore::CmpOp;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_kw(kw)
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, expected: &[&str]) -> Error {
        Error::Parse {
            span: self.span(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn fail(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            span: self.span(),
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn fail_expecting(&self, message: impl Into<String>, expected: &[&str]) -> Error {
        Error::Parse {
            span: self.span(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[s]))
        }
    }

    /// Any word not in `reserved`.
    pub fn ident(&mut self, reserved: &[&str]) -> Result<Ident> {
        match self.peek().clone() {
            Tok::Word(w) if !reserved.iter().any(|r| w.eq_ignore_ascii_case(r)) => {
                let span = self.span();
                self.bump();
                Ok(Ident::at(&w, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// An optional alias, with or without `AS`, that is not a reserved word.
    pub fn alias(&mut self, reserved: &[&str]) -> Result<Option<Ident>> {
        if self.eat_kw("AS") {
            return self.ident(reserved).map(Some);
        }
        match self.peek() {
            Tok::Word(w) if !reserved.iter().any(|r| w.eq_ignore_ascii_case(r)) => {
                self.ident(reserved).map(Some)
            }
            _ => Ok(None),
        }
    }

    pub fn int(&mut self) -> Result<i64> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(if neg { -i } else { i })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    pub fn string(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["string"])),
        }
    }

    /// `2`, `0.5`, `25%`.
    pub fn number(&mut self) -> Result<Number> {
        let n = match self.peek().clone() {
            Tok::Int(i) => Number::int(i),
            Tok::Real(r) => Number::real(r),
            _ => return Err(self.error(&["number"])),
        };
        self.bump();
        if self.eat_sym("%") {
            return Ok(Number {
                percent: true,
                ..n
            });
        }
        Ok(n)
    }

    /// A numeric bound or the `MIN`/`MAX` sentinel.
    pub fn bound(&mut self, sentinel: &str) -> Result<Option<f64>> {
        if self.eat_kw(sentinel) {
            return Ok(None);
        }
        let neg = self.eat_sym("-");
        let v = match self.peek().clone() {
            Tok::Int(i) => i as f64,
            Tok::Real(r) => r,
            _ => return Err(self.error(&[sentinel, "number"])),
        };
        self.bump();
        Ok(Some(if neg { -v } else { v }))
    }

    /// `1..N`, `1..1`.
    pub fn card(&mut self) -> Result<Card> {
        let span = self.span();
        let min = self.int()?;
        self.expect_sym("..")?;
        let max = if self.eat_kw("N") {
            None
        } else {
            Some(self.int()?)
        };
        if min < 0 || max.is_some_and(|m| m < 0) {
            return Err(Error::Parse {
                span,
                message: "cardinality bounds must be non-negative".into(),
                expected: Vec::new(),
            });
        }
        Ok(Card {
            min: min as usize,
            max: max.map(|m| m as usize),
        })
    }

    pub fn at_card(&self) -> bool {
        matches!(self.peek(), Tok::Int(_)) && matches!(self.peek_at(1), Tok::Sym(".."))
    }

    pub fn comparison(&mut self) -> Result<CmpOp> {
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<>") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Err(self.error(&["=", "<>", "<", "<=", ">", ">="])),
        };
        self.bump();
        Ok(op)
    }

    pub fn at_comparison(&self) -> bool {
        matches!(self.peek(), Tok::Sym("=" | "<>" | "<" | "<=" | ">" | ">="))
    }

    /// Separated list of at least one element.
    pub fn list<T>(&mut self, sep: &str, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = vec![item(self)?];
        while self.eat_sym(sep) {
            out.push(item(self)?);
        }
        Ok(out)
    }

    /// Like [`Parser::list`] with a keyword separator (`AND`, `OR`).
    pub fn list_kw<T>(&mut self, kw: &str, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = vec![item(self)?];
        while self.eat_kw(kw) {
            out.push(item(self)?);
        }
        Ok(out)
    }

    // ---- SQL expressions ----

    pub fn expr(&mut self) -> Result<SqlExpr> {
        let mut e = self.and_expr()?;
        while self.eat_kw("OR") {
            e = SqlExpr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<SqlExpr> {
        let mut e = self.not_expr()?;
        while self.eat_kw("AND") {
            e = SqlExpr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<SqlExpr> {
        if self.at_kw("NOT") && self.peek_at(1).is_kw("EXISTS") {
            self.bump();
            self.bump();
            return self.exists_tail(true);
        }
        if self.eat_kw("NOT") {
            return Ok(SqlExpr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn exists_tail(&mut self, negated: bool) -> Result<SqlExpr> {
        self.expect_sym("(")?;
        let query = self.select()?;
        self.expect_sym(")")?;
        Ok(SqlExpr::Exists {
            negated,
            query: Box::new(query),
        })
    }

    fn cmp_expr(&mut self) -> Result<SqlExpr> {
        let left = self.primary()?;
        if matches!(left, SqlExpr::CrossOver { .. }) {
            return Ok(left);
        }
        if self.at_comparison() {
            let op = self.comparison()?;
            let right = self.primary()?;
            return Ok(SqlExpr::Cmp(op, Box::new(left), Box::new(right)));
        }
        if self.eat_kw("IN") {
            let right = self.primary()?;
            return Ok(SqlExpr::In(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn cross_tail(&mut self, quant: Quant, rules: Select) -> Result<SqlExpr> {
        let verb = if self.eat_kw("SATISFIED") {
            CrossVerb::Satisfied
        } else if self.eat_kw("VIOLATED") {
            CrossVerb::Violated
        } else {
            return Err(self.error(&["SATISFIED", "VIOLATED"]));
        };
        let strict = self.eat_kw("STRICT");
        self.expect_kw("BY")?;
        self.expect_sym("(")?;
        let data = self.select()?;
        self.expect_sym(")")?;
        Ok(SqlExpr::CrossOver {
            quant,
            rules: Box::new(rules),
            verb,
            strict,
            data: Box::new(data),
        })
    }

    fn primary(&mut self) -> Result<SqlExpr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(SqlExpr::Lit(Literal::Int(i)))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(SqlExpr::Lit(Literal::Real(r)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(SqlExpr::Lit(Literal::Str(s)))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(i) => {
                        self.bump();
                        Ok(SqlExpr::Lit(Literal::Int(-i)))
                    }
                    Tok::Real(r) => {
                        self.bump();
                        Ok(SqlExpr::Lit(Literal::Real(-r)))
                    }
                    _ => Err(self.error(&["number"])),
                }
            }
            Tok::Sym("*") => {
                self.bump();
                Ok(SqlExpr::Star)
            }
            Tok::Sym("(") => {
                self.bump();
                if self.at_kw("SELECT") {
                    let q = self.select()?;
                    self.expect_sym(")")?;
                    return self.cross_tail(Quant::All, q);
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("NULL") => {
                self.bump();
                Ok(SqlExpr::Lit(Literal::Null))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("EXISTS") => {
                self.bump();
                self.exists_tail(false)
            }
            Tok::Word(w)
                if w.eq_ignore_ascii_case("ANY")
                    && matches!(self.peek_at(1), Tok::Sym("("))
                    && self.peek_at(2).is_kw("SELECT") =>
            {
                self.bump();
                self.bump();
                let q = self.select()?;
                self.expect_sym(")")?;
                self.cross_tail(Quant::Any, q)
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("CASE") => {
                self.bump();
                self.case_tail()
            }
            Tok::Word(_) => {
                let name = self.ident(EXPR_RESERVED)?;
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    let distinct = self.eat_kw("DISTINCT");
                    if !self.at_sym(")") {
                        args = self.list(",", |p| p.expr())?;
                    }
                    self.expect_sym(")")?;
                    return Ok(SqlExpr::Call { name, distinct, args });
                }
                if self.at_sym(".") {
                    self.bump();
                    let col = self.ident(EXPR_RESERVED)?;
                    return Ok(SqlExpr::Column(ColumnRef {
                        qualifier: Some(name),
                        name: col,
                    }));
                }
                Ok(SqlExpr::Column(ColumnRef {
                    qualifier: None,
                    name,
                }))
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    fn case_tail(&mut self) -> Result<SqlExpr> {
        let operand = if self.at_kw("WHEN") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        let mut whens = Vec::new();
        while self.eat_kw("WHEN") {
            let w = self.expr()?;
            self.expect_kw("THEN")?;
            whens.push((w, self.expr()?));
        }
        if whens.is_empty() {
            return Err(self.error(&["WHEN"]));
        }
        let otherwise = if self.eat_kw("ELSE") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        self.expect_kw("END")?;
        Ok(SqlExpr::Case {
            operand,
            whens,
            otherwise,
        })
    }

    pub fn column_ref(&mut self) -> Result<ColumnRef> {
        let first = self.ident(EXPR_RESERVED)?;
        if self.eat_sym(".") {
            let name = self.ident(EXPR_RESERVED)?;
            return Ok(ColumnRef {
                qualifier: Some(first),
                name,
            });
        }
        Ok(ColumnRef {
            qualifier: None,
            name: first,
        })
    }

    // ---- SELECT ----

    pub fn select(&mut self) -> Result<Select> {
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        let items = self.list(",", |p| p.select_item())?;
        self.expect_kw("FROM")?;
        let from = self.from_list()?;
        let mut q = Select {
            distinct,
            items,
            from,
            ..Select::default()
        };
        if self.eat_kw("WHERE") {
            q.filter = Some(self.expr()?);
        }
        if self.at_kw("GROUP") {
            self.bump();
            self.expect_kw("BY")?;
            q.group_by = self.list(",", |p| p.expr())?;
            if self.eat_kw("HAVING") {
                q.having = Some(self.expr()?);
            }
        }
        if self.at_kw("ORDER") {
            q.order_by = self.order_by()?;
        }
        Ok(q)
    }

    pub fn order_by(&mut self) -> Result<Vec<OrderItem>> {
        self.expect_kw("ORDER")?;
        self.expect_kw("BY")?;
        self.list(",", |p| {
            let expr = p.expr()?;
            let desc = if p.eat_kw("DESC") {
                true
            } else {
                p.eat_kw("ASC");
                false
            };
            Ok(OrderItem { expr, desc })
        })
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat_sym("*") {
            return Ok(SelectItem::Star);
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident(CLAUSE_WORDS)?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    pub fn from_list(&mut self) -> Result<Vec<FromItem>> {
        self.list(",", |p| p.table_ref())
    }

    fn table_ref(&mut self) -> Result<FromItem> {
        if self.eat_sym("(") {
            let q = self.select()?;
            self.expect_sym(")")?;
            let alias = self.alias(CLAUSE_WORDS)?;
            return Ok(FromItem::Subquery {
                query: Box::new(q),
                alias,
            });
        }
        let name = self.ident(CLAUSE_WORDS)?;
        let alias = self.alias(CLAUSE_WORDS)?;
        Ok(FromItem::Table { name, alias })
    }
}

/// Words that end an expression or a FROM item and so cannot be names
/// there.
pub const CLAUSE_WORDS: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "BY", "AND", "OR", "NOT", "AS", "ON", "CLUSTER",
    "EXTRACTING", "WITH", "USING", "INTO", "FOR", "TO", "MINE", "MATCHING", "SATISFIES", "VIOLATES",
    "SATISFIED", "VIOLATED", "INSERT", "IN", "IS", "HAS", "UNION", "MINUS", "ASC", "DESC", "STRICT",
];

pub const EXPR_RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "AND", "OR", "NOT", "AS", "CLUSTER", "EXTRACTING",
    "WHEN", "THEN", "ELSE", "END", "IN", "EXISTS", "CASE", "NULL", "SATISFIED", "VIOLATED", "BY", "ASC", "DESC",
];
