use std::collections::BTreeMap;

use super::RuleTable;
use crate::error::{Error, Result};
use crate::miner::DescriptorSet;
use crate::relstore::{write_csv, DataType, Schema, Table, Value};

pub const CSV_HEADER: &str = "body,head,body_count,rule_count,group_count,confidence";

/// One line per rule with canonical descriptor text; confidence has six
/// fixed decimals so output is byte-stable.
pub fn export_csv(rt: &RuleTable) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in rt.rules() {
        w.write_record([
            r.body.to_string(),
            r.head.to_string(),
            r.body_count.to_string(),
            r.rule_count.to_string(),
            r.group_count.to_string(),
            format!("{:.6}", r.confidence()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// The three-table form: rules reference shared body and head rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRules {
    pub rules: Table,
    pub bodies: Table,
    pub heads: Table,
}

fn component_schema(id: &str) -> Schema {
    Schema::new([
        (id, DataType::Integer),
        ("attribute", DataType::Text),
        ("value", DataType::Text),
    ])
    .expect("static schema")
}

/// Assigns ids in first-use order and emits one row per descriptor.
fn intern<'a>(
    ids: &mut BTreeMap<&'a DescriptorSet, i64>,
    rows: &mut Vec<Vec<Value>>,
    set: &'a DescriptorSet,
) -> i64 {
    if let Some(&id) = ids.get(set) {
        return id;
    }
    let id = ids.len() as i64 + 1;
    ids.insert(set, id);
    for d in set.iter() {
        rows.push(vec![
            Value::Integer(id),
            Value::text(d.attribute.clone()),
            Value::text(d.value.to_string()),
        ]);
    }
    id
}

pub fn export_normalized(rt: &RuleTable) -> NormalizedRules {
    let (mut body_ids, mut head_ids) = (BTreeMap::new(), BTreeMap::new());
    let (mut bodies, mut heads, mut rules) = (Vec::new(), Vec::new(), Vec::new());
    let support_value = |x: f64| match rt.provenance.basis {
        crate::miner::Basis::Absolute => Value::Integer(x as i64),
        crate::miner::Basis::Relative => Value::Real(x),
    };
    for (i, r) in rt.rules().iter().enumerate() {
        let b = intern(&mut body_ids, &mut bodies, &r.body);
        let h = intern(&mut head_ids, &mut heads, &r.head);
        rules.push(vec![
            Value::Integer(i as i64 + 1),
            Value::Integer(b),
            Value::Integer(h),
            support_value(rt.support(r)),
            Value::Real(r.confidence()),
            Value::Integer(r.body_count as i64),
            Value::Integer(r.rule_count as i64),
            Value::Integer(r.group_count as i64),
        ]);
    }
    let support_type = match rt.provenance.basis {
        crate::miner::Basis::Absolute => DataType::Integer,
        crate::miner::Basis::Relative => DataType::Real,
    };
    let rules_schema = Schema::new([
        ("id_r", DataType::Integer),
        ("id_b", DataType::Integer),
        ("id_h", DataType::Integer),
        ("support", support_type),
        ("confidence", DataType::Real),
        ("body_count", DataType::Integer),
        ("rule_count", DataType::Integer),
        ("group_count", DataType::Integer),
    ])
    .expect("static schema");
    NormalizedRules {
        rules: Table::new(rules_schema, rules).expect("rows match schema"),
        bodies: Table::new(component_schema("id_b"), bodies).expect("rows match schema"),
        heads: Table::new(component_schema("id_h"), heads).expect("rows match schema"),
    }
}

fn component_text(t: &Table) -> Result<BTreeMap<i64, String>> {
    let mut parts: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for row in t.rows() {
        match (&row[0], &row[1], &row[2]) {
            (Value::Integer(id), Value::Text(a), Value::Text(v)) => {
                parts.entry(*id).or_default().push(format!("{a}={v}"))
            }
            _ => return Err(Error::Catalog("malformed component row".into())),
        }
    }
    Ok(parts.into_iter().map(|(k, v)| (k, v.join(" & "))).collect())
}

/// Joins the three tables back into the rows of [`RuleTable::to_table`].
pub fn reconstruct(n: &NormalizedRules, like: &RuleTable) -> Result<Table> {
    let bodies = component_text(&n.bodies)?;
    let heads = component_text(&n.heads)?;
    let lookup = |m: &BTreeMap<i64, String>, v: &Value| match v {
        Value::Integer(id) => m
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Catalog(format!("dangling component id {id}"))),
        _ => Err(Error::Catalog("component id must be an integer".into())),
    };
    let mut rows = Vec::new();
    for r in n.rules.rows() {
        rows.push(vec![
            Value::text(lookup(&bodies, &r[1])?),
            Value::text(lookup(&heads, &r[2])?),
            r[3].clone(),
            r[4].clone(),
            r[5].clone(),
            r[6].clone(),
            r[7].clone(),
        ]);
    }
    Table::new(like.table_schema(), rows)
}

fn csv_text(t: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(t, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 output")
}

/// Line-oriented form of [`export_normalized`]: a `ruletable` line, then
/// `[rules]`, `[bodies]` and `[heads]` sections in CSV.
pub fn export_text(rt: &RuleTable) -> String {
    let n = export_normalized(rt);
    format!(
        "ruletable {}\n[rules]\n{}[bodies]\n{}[heads]\n{}",
        rt.name,
        csv_text(&n.rules),
        csv_text(&n.bodies),
        csv_text(&n.heads)
    )
}
