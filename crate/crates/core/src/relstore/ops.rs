use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use super::expr::Expr;
use super::table::{GroupedTable, Row, Schema, Table};
use super::value::{DataType, Value};
use crate::error::{Error, Result};

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Split each Text cell of this attribute into one row per character.
    pub explode_items: Option<String>,
    /// The file has no header line.
    pub no_header: bool,
}

impl IngestOptions {
    pub fn explode(attr: &str) -> Self {
        IngestOptions {
            explode_items: Some(attr.to_ascii_lowercase()),
            no_header: false,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, options: &IngestOptions) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, schema, options)
}

/// Parses CSV text against a declared schema. Empty cells become Null.
pub fn parse_csv(text: &str, schema: &Schema, options: &IngestOptions) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let explode = options
        .explode_items
        .as_deref()
        .map(|a| {
            let i = schema.require(a)?;
            if schema.column(i).data_type != DataType::Text {
                return Err(Error::plan(format!("explode-items attribute `{a}` must be TEXT")));
            }
            Ok(i)
        })
        .transpose()?;

    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 1;
        let record = record.map_err(|e| Error::Ingest {
            line,
            message: e.to_string(),
        })?;
        if n == 0 && !options.no_header {
            let names: Vec<String> = record.iter().map(|s| s.trim().to_ascii_lowercase()).collect();
            let expected: Vec<&str> = schema.names().collect();
            if names != expected {
                return Err(Error::Ingest {
                    line,
                    message: format!(
                        "header [{}] does not match schema [{}]",
                        names.join(","),
                        expected.join(",")
                    ),
                });
            }
            continue;
        }
        if record.len() == 1 && record.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if record.len() != schema.len() {
            return Err(Error::Ingest {
                line,
                message: format!("expected {} fields, found {}", schema.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .zip(schema.columns())
            .map(|(cell, col)| parse_cell(cell.trim(), col.data_type, &col.name))
            .collect::<std::result::Result<Row, String>>()
            .map_err(|message| Error::Ingest { line, message })?;
        match explode {
            Some(i) if matches!(row[i], Value::Text(_)) => {
                let Value::Text(s) = &row[i] else { unreachable!() };
                for ch in s.chars() {
                    let mut r = row.clone();
                    r[i] = Value::Text(ch.to_string());
                    rows.push(r);
                }
            }
            _ => rows.push(row),
        }
    }
    Table::new(schema.clone(), rows)
}

fn parse_cell(cell: &str, ty: DataType, col: &str) -> std::result::Result<Value, String> {
    if cell.is_empty() {
        return Ok(Value::Null);
    }
    match ty {
        DataType::Text => Ok(Value::Text(cell.to_string())),
        DataType::Integer => cell
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| format!("`{cell}` is not an INTEGER (attribute `{col}`)")),
        DataType::Real => match cell.parse::<f64>() {
            Ok(r) if r.is_finite() => Ok(Value::Real(r)),
            _ => Err(format!("`{cell}` is not a finite REAL (attribute `{col}`)")),
        },
    }
}

/// Derives a schema from a CSV header and its cells: INTEGER if every
/// non-empty cell parses as one, else REAL if every cell is a finite number,
/// else TEXT.
pub fn infer_schema(text: &str) -> Result<Schema> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Ingest {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut types = vec![DataType::Integer; header.len()];
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Ingest {
            line: n + 2,
            message: e.to_string(),
        })?;
        for (t, cell) in types.iter_mut().zip(rec.iter()) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            if *t == DataType::Integer && cell.parse::<i64>().is_err() {
                *t = DataType::Real;
            }
            if *t == DataType::Real && !cell.parse::<f64>().is_ok_and(f64::is_finite) {
                *t = DataType::Text;
            }
        }
    }
    Schema::new(header.into_iter().zip(types))
}

/// Writes a table as CSV with a header line.
pub fn write_csv(table: &Table, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(table.schema().names()).map_err(csv_err)?;
    for row in table.rows() {
        w.write_record(row.iter().map(|v| match v {
            Value::Null => String::new(),
            v => v.to_string(),
        }))
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows satisfying `predicate` (in input order), restricted to `projection`.
pub fn filter(t: &Table, predicate: &Expr, projection: &[&str]) -> Result<Table> {
    let bound = predicate.bind_row(t.schema())?;
    let (schema, idx) = t.schema().project(projection)?;
    let rows = t
        .rows()
        .iter()
        .filter(|r| bound.matches(r))
        .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
        .collect();
    Table::new(schema, rows)
}

/// The named attributes of every row; with `distinct`, duplicates are
/// dropped and the rows sorted.
pub fn project(t: &Table, names: &[&str], distinct: bool) -> Result<Table> {
    let (schema, idx) = t.schema().project(names)?;
    let mut rows: Vec<Row> = t
        .rows()
        .iter()
        .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
        .collect();
    if distinct {
        rows.sort();
        rows.dedup();
    }
    Table::new(schema, rows)
}

fn join_key(v: &Value, as_real: bool) -> Option<Value> {
    match v {
        Value::Null => None,
        Value::Integer(i) if as_real => Some(Value::Real(*i as f64)),
        other => Some(other.clone()),
    }
}

/// Inner equijoin. Output schema is every left attribute followed by the
/// right attributes that are not join keys; rows follow left order, with
/// right matches in right order.
pub fn equijoin(left: &Table, right: &Table, on: &[(&str, &str)]) -> Result<Table> {
    if on.is_empty() {
        return Err(Error::plan("equijoin needs at least one attribute pair"));
    }
    let mut lk = Vec::new();
    let mut rk = Vec::new();
    let mut as_real = Vec::new();
    for (l, r) in on {
        let li = left.schema().require(l)?;
        let ri = right.schema().require(r)?;
        let (lt, rt) = (left.schema().column(li).data_type, right.schema().column(ri).data_type);
        let numeric = |t| matches!(t, DataType::Integer | DataType::Real);
        if lt != rt && !(numeric(lt) && numeric(rt)) {
            return Err(Error::plan(format!(
                "join attributes `{l}` ({lt}) and `{r}` ({rt}) are not comparable"
            )));
        }
        lk.push(li);
        rk.push(ri);
        as_real.push(lt != rt);
    }
    let right_keep: Vec<usize> = (0..right.schema().len()).filter(|i| !rk.contains(i)).collect();
    let mut cols: Vec<(String, DataType)> = left
        .schema()
        .columns()
        .iter()
        .map(|c| (c.name.clone(), c.data_type))
        .collect();
    for &i in &right_keep {
        let c = right.schema().column(i);
        if left.schema().index_of(&c.name).is_some() {
            return Err(Error::plan(format!(
                "ambiguous attribute `{}` appears on both sides of the join",
                c.name
            )));
        }
        cols.push((c.name.clone(), c.data_type));
    }
    let schema = Schema::new(cols)?;

    let mut index: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (j, row) in right.rows().iter().enumerate() {
        let key: Option<Vec<Value>> = rk
            .iter()
            .zip(&as_real)
            .map(|(&i, &r)| join_key(&row[i], r))
            .collect();
        if let Some(key) = key {
            index.entry(key).or_default().push(j);
        }
    }
    let mut rows = Vec::new();
    for lrow in left.rows() {
        let key: Option<Vec<Value>> = lk
            .iter()
            .zip(&as_real)
            .map(|(&i, &r)| join_key(&lrow[i], r))
            .collect();
        let Some(matches) = key.and_then(|k| index.get(&k)) else {
            continue;
        };
        for &j in matches {
            let rrow = &right.rows()[j];
            let mut out = lrow.clone();
            out.extend(right_keep.iter().map(|&i| rrow[i].clone()));
            rows.push(out);
        }
    }
    Table::new(schema, rows)
}

/// One group per distinct key tuple, in order of first appearance.
pub fn group_rows(t: &Table, keys: &[&str]) -> Result<GroupedTable> {
    if keys.is_empty() {
        return Err(Error::plan("grouping requires at least one key attribute"));
    }
    let key_columns = keys
        .iter()
        .map(|k| t.schema().require(k))
        .collect::<Result<Vec<_>>>()?;
    let mut positions: HashMap<Row, usize> = HashMap::new();
    let mut out_keys = Vec::new();
    let mut groups: Vec<Vec<Row>> = Vec::new();
    for row in t.rows() {
        let key: Row = key_columns.iter().map(|&i| row[i].clone()).collect();
        let g = *positions.entry(key.clone()).or_insert_with(|| {
            out_keys.push(key);
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(row.clone());
    }
    Ok(GroupedTable {
        schema: t.schema().clone(),
        key_columns,
        keys: out_keys,
        groups,
    })
}

/// Each row is its own group, keyed by its position (1-based).
pub fn singleton_groups(t: &Table) -> GroupedTable {
    GroupedTable {
        schema: t.schema().clone(),
        key_columns: Vec::new(),
        keys: (1..=t.len()).map(|i| vec![Value::Integer(i as i64)]).collect(),
        groups: t.rows().iter().map(|r| vec![r.clone()]).collect(),
    }
}

/// Turns item rows into one 0/1 INTEGER column per distinct item value
/// (columns sorted), one output row per transaction key, carry attributes
/// appended.
pub fn pivot_items(t: &Table, tx_key: &str, item_attr: &str, carry: &[&str]) -> Result<Table> {
    let grouped = group_rows(t, &[tx_key])?;
    let item_i = t.schema().require(item_attr)?;
    let carry_i = carry
        .iter()
        .map(|c| t.schema().require(c))
        .collect::<Result<Vec<_>>>()?;
    let items: BTreeSet<String> = t
        .rows()
        .iter()
        .filter(|r| !r[item_i].is_null())
        .map(|r| r[item_i].to_string())
        .collect();

    let key_col = t.schema().column(grouped.key_columns[0]);
    let mut cols = vec![(key_col.name.clone(), key_col.data_type)];
    cols.extend(items.iter().map(|i| (i.clone(), DataType::Integer)));
    for &c in &carry_i {
        let col = t.schema().column(c);
        cols.push((col.name.clone(), col.data_type));
    }
    let schema = Schema::new(cols)
        .map_err(|e| Error::plan(format!("pivot columns collide: {e}")))?;

    let mut rows = Vec::with_capacity(grouped.len());
    for (key, group) in grouped.iter() {
        let present: BTreeSet<String> = group
            .iter()
            .filter(|r| !r[item_i].is_null())
            .map(|r| r[item_i].to_string())
            .collect();
        let mut out = key.clone();
        out.extend(
            items
                .iter()
                .map(|i| Value::Integer(present.contains(i) as i64)),
        );
        for (&c, name) in carry_i.iter().zip(carry) {
            let v = &group[0][c];
            if group.iter().any(|r| &r[c] != v) {
                return Err(Error::Pivot {
                    key: key[0].to_string(),
                    attribute: name.to_ascii_lowercase(),
                });
            }
            out.push(v.clone());
        }
        rows.push(out);
    }
    Table::new(schema, rows)
}
