//! Rules as re-queryable values: rule tables, metric accessors, per-dialect
//! rendering and the export formats.

mod export;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::catalog::Catalog;
use crate::error::Result;
use crate::hierarchy::Encoder;
use crate::miner::{Basis, DescriptorSet, Rule, SupportSemantics};
use crate::relstore::{DataType, Schema, Table, Value};

pub use export::{export_csv, export_normalized, export_text, reconstruct, NormalizedRules, CSV_HEADER};
pub use render::{format_percent, format_ratio, render_rule};

/// Surface conventions a rule table is printed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RuleStyle {
    Msql,
    MineRule,
    Dmql,
    MineSql,
    #[default]
    Canonical,
}

/// Where a rule table came from and how to show it.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub style: RuleStyle,
    /// Support shown in the `support` column.
    pub semantics: SupportSemantics,
    pub basis: Basis,
    pub summary: String,
    pub bindings: BTreeMap<String, Encoder>,
    /// Display names for attributes, e.g. `income` shown as `income_h`.
    pub aliases: BTreeMap<String, String>,
    /// Attributes shown MSQL-style as indicator columns (`A=1`).
    pub pivoted: BTreeSet<String>,
    pub body_attributes: Vec<String>,
    pub head_attributes: Vec<String>,
    /// Name of the RULE column when the table was declared explicitly.
    pub rule_column: Option<String>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            style: RuleStyle::Canonical,
            semantics: SupportSemantics::Rule,
            basis: Basis::Absolute,
            summary: String::new(),
            bindings: BTreeMap::new(),
            aliases: BTreeMap::new(),
            pivoted: BTreeSet::new(),
            body_attributes: Vec::new(),
            head_attributes: Vec::new(),
            rule_column: None,
        }
    }
}

/// A named, immutable sequence of rules. Converts to an ordinary [`Table`]
/// with [`RuleTable::to_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub name: String,
    rules: Arc<Vec<Rule>>,
    pub provenance: Provenance,
}

impl RuleTable {
    pub fn new(name: &str, rules: Vec<Rule>, provenance: Provenance) -> Self {
        RuleTable {
            name: name.to_ascii_lowercase(),
            rules: Arc::new(rules),
            provenance,
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Same provenance, different rules and name.
    pub fn derive(&self, name: &str, rules: Vec<Rule>) -> RuleTable {
        RuleTable::new(name, rules, self.provenance.clone())
    }

    pub fn renamed(&self, name: &str) -> RuleTable {
        RuleTable {
            name: name.to_ascii_lowercase(),
            ..self.clone()
        }
    }

    pub fn support(&self, r: &Rule) -> f64 {
        r.support(self.provenance.semantics, self.provenance.basis)
    }

    pub fn render(&self, r: &Rule) -> String {
        render_rule(r, self.provenance.style, &self.provenance)
    }

    pub fn table_schema(&self) -> Schema {
        let support = match self.provenance.basis {
            Basis::Absolute => DataType::Integer,
            Basis::Relative => DataType::Real,
        };
        Schema::new([
            ("body", DataType::Text),
            ("head", DataType::Text),
            ("support", support),
            ("confidence", DataType::Real),
            ("body_count", DataType::Integer),
            ("rule_count", DataType::Integer),
            ("group_count", DataType::Integer),
        ])
        .expect("static schema")
    }

    /// The rules as a relation of canonical text plus metrics.
    pub fn to_table(&self) -> Table {
        let rows = self
            .rules
            .iter()
            .map(|r| {
                let support = match self.provenance.basis {
                    Basis::Absolute => Value::Integer(self.support(r) as i64),
                    Basis::Relative => Value::Real(self.support(r)),
                };
                vec![
                    Value::text(r.body.to_string()),
                    Value::text(r.head.to_string()),
                    support,
                    Value::Real(r.confidence()),
                    Value::Integer(r.body_count as i64),
                    Value::Integer(r.rule_count as i64),
                    Value::Integer(r.group_count as i64),
                ]
            })
            .collect();
        Table::new(self.table_schema(), rows).expect("rule rows match schema")
    }

    /// The table as the originating dialect prints it.
    pub fn display_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let p = &self.provenance;
        let support = |r: &Rule| {
            let s = self.support(r);
            match (p.basis, p.style) {
                (Basis::Absolute, _) => format!("{}", s as i64),
                (Basis::Relative, RuleStyle::Dmql) => format_percent(s),
                (Basis::Relative, _) => format_ratio(s),
            }
        };
        let confidence = |r: &Rule| match p.style {
            RuleStyle::MineSql | RuleStyle::Canonical => format_ratio(r.confidence()),
            _ => format_percent(r.confidence()),
        };
        let header: Vec<&str> = match p.style {
            RuleStyle::MineSql => vec!["rule", "s", "c"],
            RuleStyle::Msql | RuleStyle::MineRule => vec!["body", "consequent", "support", "confidence"],
            RuleStyle::Dmql | RuleStyle::Canonical => vec!["body", "head", "support", "confidence"],
        };
        let rows = self
            .rules
            .iter()
            .map(|r| match p.style {
                RuleStyle::MineSql => vec![self.render(r), support(r), confidence(r)],
                _ => {
                    let (b, h) = render::sides(r, p.style, p);
                    vec![b, h, support(r), confidence(r)]
                }
            })
            .collect();
        (header.into_iter().map(String::from).collect(), rows)
    }
}

/// What [`rule_metric`] reads off a rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Body,
    Head,
    Support(SupportSemantics, Basis),
    Confidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Set(DescriptorSet),
    Real(f64),
}

pub fn rule_metric(r: &Rule, which: Metric) -> MetricValue {
    match which {
        Metric::Body => MetricValue::Set(r.body.clone()),
        Metric::Head => MetricValue::Set(r.head.clone()),
        Metric::Support(s, b) => MetricValue::Real(r.support(s, b)),
        Metric::Confidence => MetricValue::Real(r.confidence()),
    }
}

/// Registers `table` under its name. Fails on an existing name unless
/// `replace` is set.
pub fn store_rules(catalog: &mut Catalog, table: RuleTable, replace: bool) -> Result<RuleTable> {
    catalog.put_rules(table.clone(), replace)?;
    Ok(table)
}
