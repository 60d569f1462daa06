//! The four surface languages. Each has its own parser and printer; all of
//! them lower to one [`LogicalPlan`] resolved against a [`Catalog`].
//!
//! The dialect is always chosen by the caller. MSQL and MineSQL share
//! keywords (`SELECT`, `BODY`, `SUPPORT`) with different meanings, so
//! guessing would be fragile.

pub mod ast;
pub mod dmql;
pub mod lexer;
mod lower;
pub mod minerule;
pub mod minesql;
pub mod msql;
pub mod parser;


use std::fmt;
use std::str::FromStr;

use crate::catalog::{Catalog, Dataset};
use crate::error::{Error, Result, Span};
use crate::hierarchy::ConceptHierarchy;
use crate::miner::MinePlan;
use crate::postproc::{CrossOverMode, RulePredicate};
use crate::relstore::{GroupedTable, Table};
use crate::rulestore::{Provenance, RuleStyle, RuleTable};

use ast::{FromItem, SelectItem, SqlExpr};
use lexer::{tokenize, Tok, Token};
use parser::Parser;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Msql,
    MineRule,
    Dmql,
    MineSql,
}

impl Dialect {
    pub const ALL: [Dialect; 4] = [Dialect::Msql, Dialect::MineRule, Dialect::Dmql, Dialect::MineSql];
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "msql" => Ok(Dialect::Msql),
            "minerule" => Ok(Dialect::MineRule),
            "dmql" => Ok(Dialect::Dmql),
            "minesql" => Ok(Dialect::MineSql),
            _ => Err(format!("unknown dialect `{s}` (msql, minerule, dmql, minesql)")),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Msql => "msql",
            Dialect::MineRule => "minerule",
            Dialect::Dmql => "dmql",
            Dialect::MineSql => "minesql",
        })
    }
}

/// A parsed statement of one dialect. Printing gives single-line text the
/// same dialect parses back to an equal statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Msql(msql::Stmt),
    MineRule(minerule::Stmt),
    Dmql(dmql::Stmt),
    MineSql(minesql::Stmt),
}

impl Statement {
    pub fn dialect(&self) -> Dialect {
        match self {
            Statement::Msql(_) => Dialect::Msql,
            Statement::MineRule(_) => Dialect::MineRule,
            Statement::Dmql(_) => Dialect::Dmql,
            Statement::MineSql(_) => Dialect::MineSql,
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Msql(s) => write!(f, "{s}"),
            Statement::MineRule(s) => write!(f, "{s}"),
            Statement::Dmql(s) => write!(f, "{s}"),
            Statement::MineSql(s) => write!(f, "{s}"),
        }
    }
}

fn parse_one(p: &mut Parser, dialect: Dialect) -> Result<Statement> {
    Ok(match dialect {
        Dialect::Msql => Statement::Msql(msql::parse(p)?),
        Dialect::MineRule => Statement::MineRule(minerule::parse(p)?),
        Dialect::Dmql => Statement::Dmql(dmql::parse(p)?),
        Dialect::MineSql => Statement::MineSql(minesql::parse(p)?),
    })
}

/// DMQL's `USE …` lines need no terminator before the next statement.
fn open_ended(s: &Statement) -> bool {
    matches!(s, Statement::Dmql(dmql::Stmt::UseDatabase(_) | dmql::Stmt::UseHierarchy { .. }))
}

/// Parses the statements of one `;`-delimited chunk.
fn parse_chunk(toks: Vec<Token>, dialect: Dialect) -> Result<Vec<Statement>> {
    let mut p = Parser::new(toks);
    let mut out = Vec::new();
    loop {
        let s = parse_one(&mut p, dialect)?;
        let more = open_ended(&s);
        out.push(s);
        if p.at_eof() {
            return Ok(out);
        }
        if !more {
            return Err(p.error(&[";"]));
        }
    }
}

/// Splits at `;` and parses every piece. A lex error fails the
/// whole script; parse errors are reported per statement so a caller can
/// keep going past them.
pub fn parse_script(text: &str, dialect: Dialect) -> Result<Vec<Result<Statement>>> {
    let toks = tokenize(text)?;
    let mut out = Vec::new();
    let mut chunk: Vec<Token> = Vec::new();
    for t in toks {
        let end = matches!(t.tok, Tok::Eof | Tok::Sym(";"));
        if !end {
            chunk.push(t);
            continue;
        }
        if !chunk.is_empty() {
            let mut toks = std::mem::take(&mut chunk);
            toks.push(Token {
                tok: Tok::Eof,
                span: t.span,
            });
            match parse_chunk(toks, dialect) {
                Ok(stmts) => out.extend(stmts.into_iter().map(Ok)),
                Err(e) => out.push(Err(e)),
            }
        }
    }
    Ok(out)
}

/// Exactly one statement, with an optional trailing `;`.
pub fn parse_statement(text: &str, dialect: Dialect) -> Result<Statement> {
    let mut all = parse_script(text, dialect)?;
    match all.len() {
        0 => Err(Error::Parse {
            span: end_span(text),
            message: "empty statement".into(),
            expected: Vec::new(),
        }),
        1 => all.pop().expect("one statement"),
        _ => {
            let second = all.into_iter().nth(1).expect("two statements");
            second.and_then(|_| {
                Err(Error::Parse {
                    span: end_span(text),
                    message: "expected a single statement".into(),
                    expected: Vec::new(),
                })
            })
        }
    }
}

fn end_span(text: &str) -> Span {
    let line = text.lines().count().max(1);
    let col = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
    Span::new(line, col)
}

// ---- plans ----

/// Which rows a cross-over reports.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossOutput {
    /// The grouping keys of the passing groups.
    Keys(Vec<String>),
    /// Per outer row: the inner group whose correlated attributes equal the
    /// outer row's `outer_columns` (no group means no rows), and the
    /// outer row projected on `project` when it passes.
    Correlated {
        outer: Table,
        outer_columns: Vec<String>,
        project: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossOverPlan {
    pub data: GroupedTable,
    pub rules: RuleTable,
    pub mode: CrossOverMode,
    pub output: CrossOutput,
    pub target: Option<String>,
}

/// A statement resolved against the catalog, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalPlan {
    DefineHierarchy(ConceptHierarchy),
    CreateView {
        name: String,
        data: Dataset,
    },
    /// MineSQL `CREATE TABLE t(col RULE, …)`: an empty rule table.
    DeclareRuleTable {
        name: String,
        rule_column: String,
        style: RuleStyle,
    },
    Mine {
        plan: MinePlan,
        target: Option<String>,
        provenance: Provenance,
        /// Fills a declared rule table instead of creating a new one.
        replace: bool,
    },
    SelectRules {
        source: RuleTable,
        alias: Option<String>,
        predicate: RulePredicate,
        target: Option<String>,
    },
    CrossOver(CrossOverPlan),
    Query {
        table: Table,
        target: Option<String>,
    },
    UseDatabase(String),
    UseHierarchy {
        attribute: String,
        hierarchy: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub plan: LogicalPlan,
    /// Clauses accepted but ignored, defaults applied, and the like.
    pub warnings: Vec<String>,
}

pub fn lower(s: &Statement, catalog: &Catalog) -> Result<Lowered> {
    match s {
        Statement::Msql(s) => msql::lower(s, catalog),
        Statement::MineRule(s) => minerule::lower(s, catalog),
        Statement::Dmql(s) => dmql::lower(s, catalog),
        Statement::MineSql(s) => minesql::lower(s, catalog),
    }
}

/// Plain data selection: attributes (or `*`) of the joined, filtered rows.
pub(crate) fn plain_query(
    items: &[SelectItem],
    from: &[FromItem],
    cond: Option<&SqlExpr>,
    distinct: bool,
    catalog: &Catalog,
) -> Result<Table> {
    let src = lower::resolve_source(from, cond, catalog, &[])?;
    let mut names: Vec<String> = Vec::new();
    for item in items {
        match item {
            SelectItem::Star => names.extend(src.table.schema().names().map(str::to_string)),
            SelectItem::Expr {
                expr: SqlExpr::Column(c),
                ..
            } => names.push(lower::column_name(c, &src.scopes)?),
            SelectItem::Expr { expr, .. } => {
                return Err(lower::resolve_err(
                    lower::span_of(expr),
                    format!("only attributes can be selected here, found `{expr}`"),
                ))
            }
        }
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    crate::relstore::project(&src.table, &refs, distinct)
}
