//! Named objects of a session: data tables (optionally grouped), rule
//! tables and concept hierarchies. Table and rule table names share one
//! namespace since rule tables are tables too.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hierarchy::ConceptHierarchy;
use crate::relstore::{fixture, group_rows, singleton_groups, GroupedTable, Table};
use crate::rulestore::RuleTable;

/// A stored relation plus the grouping it was defined with (views).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub table: Table,
    pub group_keys: Vec<String>,
    /// Attributes a view spreads into indicator columns (`SUM(CASE item…)`).
    pub pivoted: Vec<String>,
}

impl Dataset {
    pub fn plain(table: Table) -> Self {
        Dataset {
            table,
            group_keys: Vec::new(),
            pivoted: Vec::new(),
        }
    }

    /// Groups by the stored keys, or one group per row without keys.
    pub fn groups(&self) -> Result<GroupedTable> {
        if self.group_keys.is_empty() {
            Ok(singleton_groups(&self.table))
        } else {
            let keys: Vec<&str> = self.group_keys.iter().map(String::as_str).collect();
            group_rows(&self.table, &keys)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: BTreeMap<String, Dataset>,
    rules: BTreeMap<String, RuleTable>,
    hierarchies: BTreeMap<String, Arc<ConceptHierarchy>>,
    pub database: Option<String>,
    /// Session-wide `USE HIERARCHY h FOR attr` bindings (attribute → name).
    pub default_hierarchies: BTreeMap<String, String>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Catalog holding the bundled `transactions` and `customer` tables.
    pub fn with_fixture() -> Result<Self> {
        let mut c = Catalog::new();
        c.put_table("transactions", Dataset::plain(fixture::transactions()?), false)?;
        c.put_table("customer", Dataset::plain(fixture::customer()?), false)?;
        Ok(c)
    }

    fn taken(&self, name: &str) -> bool {
        self.tables.contains_key(name) || self.rules.contains_key(name)
    }

    pub fn put_table(&mut self, name: &str, data: Dataset, replace: bool) -> Result<()> {
        let name = name.to_ascii_lowercase();
        if self.taken(&name) && !replace {
            return Err(Error::Catalog(format!("`{name}` already exists")));
        }
        self.rules.remove(&name);
        self.tables.insert(name, data);
        Ok(())
    }

    pub fn put_rules(&mut self, rt: RuleTable, replace: bool) -> Result<()> {
        if self.taken(&rt.name) && !replace {
            return Err(Error::Catalog(format!("`{}` already exists", rt.name)));
        }
        self.tables.remove(&rt.name);
        self.rules.insert(rt.name.clone(), rt);
        Ok(())
    }

    /// Hierarchies are replaced on redefinition.
    pub fn put_hierarchy(&mut self, h: ConceptHierarchy) {
        self.hierarchies.insert(h.name().to_ascii_lowercase(), Arc::new(h));
    }

    pub fn table(&self, name: &str) -> Option<&Dataset> {
        self.tables.get(&name.to_ascii_lowercase())
    }

    pub fn rule_table(&self, name: &str) -> Option<&RuleTable> {
        self.rules.get(&name.to_ascii_lowercase())
    }

    pub fn hierarchy(&self, name: &str) -> Option<&Arc<ConceptHierarchy>> {
        self.hierarchies.get(&name.to_ascii_lowercase())
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn rule_table_names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn hierarchy_names(&self) -> impl Iterator<Item = &str> {
        self.hierarchies.keys().map(String::as_str)
    }
}
