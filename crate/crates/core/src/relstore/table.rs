use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use super::value::{DataType, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub name: String,
    pub data_type: DataType,
}

/// Ordered, non-empty list of uniquely named columns. Names are stored
/// lowercased; lookups are case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new<S: AsRef<str>>(columns: impl IntoIterator<Item = (S, DataType)>) -> Result<Self> {
        let columns: Vec<Column> = columns
            .into_iter()
            .map(|(name, data_type)| Column {
                name: name.as_ref().to_ascii_lowercase(),
                data_type,
            })
            .collect();
        if columns.is_empty() {
            return Err(Error::plan("schema must have at least one attribute"));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::plan("attribute names must be non-empty"));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::plan(format!("duplicate attribute `{}`", c.name)));
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::plan(format!("unknown attribute `{name}`")))
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn project(&self, names: &[&str]) -> Result<(Schema, Vec<usize>)> {
        let idx = names
            .iter()
            .map(|n| self.require(n))
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema::new(idx.iter().map(|&i| {
            let c = &self.columns[i];
            (c.name.clone(), c.data_type)
        }))?;
        Ok((schema, idx))
    }
}

pub type Row = Vec<Value>;

/// Immutable relation. Rows are shared, so cloning a table is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Arc<Vec<Row>>,
}

impl Table {
    /// Checks arity and cell types against the schema.
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            check_row(&schema, row).map_err(|m| Error::plan(format!("row {}: {m}", i + 1)))?;
        }
        Ok(Table {
            schema,
            rows: Arc::new(rows),
        })
    }

    pub fn empty(schema: Schema) -> Self {
        Table {
            schema,
            rows: Arc::new(Vec::new()),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_values(&self, name: &str) -> Result<Vec<Value>> {
        let i = self.schema.require(name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }
}

pub(crate) fn check_row(schema: &Schema, row: &[Value]) -> std::result::Result<(), String> {
    if row.len() != schema.len() {
        return Err(format!(
            "expected {} values, found {}",
            schema.len(),
            row.len()
        ));
    }
    for (cell, col) in row.iter().zip(schema.columns()) {
        match (cell, col.data_type) {
            (Value::Null, _) => {}
            (Value::Real(r), DataType::Real) if !r.is_finite() => {
                return Err(format!("non-finite real in `{}`", col.name));
            }
            (v, t) if v.data_type() == Some(t) => {}
            (v, t) => {
                return Err(format!(
                    "value `{v}` does not match type {t} of `{}`",
                    col.name
                ));
            }
        }
    }
    Ok(())
}

impl fmt::Display for Table {
    /// Aligned text rendering, one line per row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = self.schema.names().map(str::to_string).collect();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        f.write_str(&render_aligned(&header, &body))
    }
}

/// Renders a header and rows as space-aligned columns separated by ` | `.
pub fn render_aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("-+-"),
    );
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Rows partitioned by a key tuple; groups keep first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedTable {
    pub(crate) schema: Schema,
    pub(crate) key_columns: Vec<usize>,
    pub(crate) keys: Vec<Row>,
    pub(crate) groups: Vec<Vec<Row>>,
}

impl GroupedTable {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Key attribute names; `["row"]` for per-row groups.
    pub fn key_names(&self) -> Vec<&str> {
        if self.key_columns.is_empty() {
            return vec!["row"];
        }
        self.key_columns
            .iter()
            .map(|&i| self.schema.column(i).name.as_str())
            .collect()
    }

    pub fn key_columns(&self) -> &[usize] {
        &self.key_columns
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn keys(&self) -> &[Row] {
        &self.keys
    }

    pub fn groups(&self) -> &[Vec<Row>] {
        &self.groups
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Row, &Vec<Row>)> {
        self.keys.iter().zip(&self.groups)
    }

    /// Keeps only groups for which `keep` returns true.
    pub fn retain_groups(&self, mut keep: impl FnMut(&[Row]) -> Result<bool>) -> Result<Self> {
        let mut keys = Vec::new();
        let mut groups = Vec::new();
        for (k, g) in self.iter() {
            if keep(g)? {
                keys.push(k.clone());
                groups.push(g.clone());
            }
        }
        Ok(GroupedTable {
            schema: self.schema.clone(),
            key_columns: self.key_columns.clone(),
            keys,
            groups,
        })
    }

    /// The key tuples as a table.
    pub fn key_table(&self) -> Result<Table> {
        let schema = if self.key_columns.is_empty() {
            Schema::new([("row", DataType::Integer)])?
        } else {
            Schema::new(self.key_columns.iter().map(|&i| {
                let c = self.schema.column(i);
                (c.name.clone(), c.data_type)
            }))?
        };
        Table::new(schema, self.keys.clone())
    }
}
