//! Runs logical plans against a catalog, and whole scripts of one dialect.

use std::collections::BTreeMap;
use std::fmt;

use crate::catalog::{Catalog, Dataset};
use crate::dialects::{self, CrossOutput, CrossOverPlan, Dialect, LogicalPlan, Statement};
use crate::error::Result;
use crate::miner::mine_associations;
use crate::postproc::{crossover, group_passes, select_rules};
use crate::relstore::{project, render_aligned, Row, Table};
use crate::rulestore::{Provenance, RuleTable};

/// Name given to rules mined without a target.
pub const UNNAMED_RULES: &str = "result";

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Rules(RuleTable),
    Table(Table),
    Message(String),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Rules(rt) => {
                let (header, rows) = rt.display_table();
                write!(f, "{}", render_aligned(&header, &rows))
            }
            Outcome::Table(t) => write!(f, "{t}"),
            Outcome::Message(m) => writeln!(f, "{m}"),
        }
    }
}

pub fn execute(plan: LogicalPlan, catalog: &mut Catalog) -> Result<Outcome> {
    Ok(match plan {
        LogicalPlan::DefineHierarchy(h) => {
            let msg = format!("hierarchy `{}` defined", h.name());
            catalog.put_hierarchy(h);
            Outcome::Message(msg)
        }
        LogicalPlan::CreateView { name, data } => {
            catalog.put_table(&name, data, false)?;
            Outcome::Message(format!("view `{name}` created"))
        }
        LogicalPlan::DeclareRuleTable {
            name,
            rule_column,
            style,
        } => {
            let provenance = Provenance {
                style,
                rule_column: Some(rule_column),
                ..Provenance::default()
            };
            catalog.put_rules(RuleTable::new(&name, Vec::new(), provenance), false)?;
            Outcome::Message(format!("rule table `{name}` created"))
        }
        LogicalPlan::Mine {
            plan,
            target,
            provenance,
            replace,
        } => {
            let rules = mine_associations(&plan)?;
            let name = target.as_deref().unwrap_or(UNNAMED_RULES);
            let rt = RuleTable::new(name, rules, provenance);
            if target.is_some() {
                catalog.put_rules(rt.clone(), replace)?;
            }
            Outcome::Rules(rt)
        }
        LogicalPlan::SelectRules {
            source,
            alias,
            predicate,
            target,
        } => {
            let name = target.clone().unwrap_or_else(|| source.name.clone());
            let rt = select_rules(&source, alias.as_deref(), &predicate, &name)?;
            if target.is_some() {
                catalog.put_rules(rt.clone(), false)?;
            }
            Outcome::Rules(rt)
        }
        LogicalPlan::CrossOver(plan) => {
            let target = plan.target.clone();
            let table = run_crossover(&plan)?;
            if let Some(t) = target {
                catalog.put_table(&t, Dataset::plain(table.clone()), false)?;
            }
            Outcome::Table(table)
        }
        LogicalPlan::Query { table, target } => {
            if let Some(t) = target {
                catalog.put_table(&t, Dataset::plain(table.clone()), false)?;
            }
            Outcome::Table(table)
        }
        LogicalPlan::UseDatabase(db) => {
            let msg = format!("using database `{db}`");
            catalog.database = Some(db);
            Outcome::Message(msg)
        }
        LogicalPlan::UseHierarchy {
            attribute,
            hierarchy,
        } => {
            let msg = format!("hierarchy `{hierarchy}` applies to `{attribute}`");
            catalog.default_hierarchies.insert(attribute, hierarchy);
            Outcome::Message(msg)
        }
    })
}

fn sorted(t: Table) -> Result<Table> {
    let mut rows = t.rows().to_vec();
    rows.sort();
    rows.dedup();
    Table::new(t.schema().clone(), rows)
}

fn run_crossover(plan: &CrossOverPlan) -> Result<Table> {
    match &plan.output {
        CrossOutput::Keys(columns) => {
            let keys = crossover(&plan.data, &plan.rules, plan.mode)?;
            let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
            sorted(project(&keys, &refs, true)?)
        }
        CrossOutput::Correlated {
            outer,
            outer_columns,
            project: columns,
        } => {
            let groups: BTreeMap<&Row, &Vec<Row>> = plan.data.iter().collect();
            let idx = outer_columns
                .iter()
                .map(|c| outer.schema().require(c))
                .collect::<Result<Vec<_>>>()?;
            let mut verdicts: BTreeMap<Row, bool> = BTreeMap::new();
            let mut passing = Vec::new();
            for row in outer.rows() {
                let key: Row = idx.iter().map(|&i| row[i].clone()).collect();
                let pass = match verdicts.get(&key) {
                    Some(p) => *p,
                    None => {
                        let rows = groups.get(&key).map_or(&[][..], |g| g.as_slice());
                        let p = group_passes(rows, plan.data.schema(), &plan.rules, plan.mode)?;
                        verdicts.insert(key, p);
                        p
                    }
                };
                if pass {
                    passing.push(row.clone());
                }
            }
            let passed = Table::new(outer.schema().clone(), passing)?;
            let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
            sorted(project(&passed, &refs, true)?)
        }
    }
}

/// One statement's result.
#[derive(Debug, Clone)]
pub struct Executed {
    pub statement: Statement,
    pub outcome: Outcome,
    pub warnings: Vec<String>,
}

pub fn run_statement(s: &Statement, catalog: &mut Catalog) -> Result<Executed> {
    let lowered = dialects::lower(s, catalog)?;
    let outcome = execute(lowered.plan, catalog)?;
    Ok(Executed {
        statement: s.clone(),
        outcome,
        warnings: lowered.warnings,
    })
}

/// Parses and runs every statement, in order. A statement that fails to
/// parse or run leaves the catalog as it was and does not stop the rest.
pub fn run_script(text: &str, dialect: Dialect, catalog: &mut Catalog) -> Result<Vec<Result<Executed>>> {
    Ok(dialects::parse_script(text, dialect)?
        .into_iter()
        .map(|s| s.and_then(|s| run_statement(&s, catalog)))
        .collect())
}
