use std::collections::{BTreeMap, HashMap};

use super::{DescValue, Descriptor, MinePlan};
use crate::error::{Error, Result};
use crate::hierarchy::Encoder;
use crate::relstore::{BoundExpr, Expr, GroupedTable, Row, Schema, Value};

/// One cluster of one group (the whole group when mining is unclustered),
/// with the descriptor ids available to each rule side. Ids index
/// [`Transactions::universe`], which is sorted, so id order is descriptor
/// order.
#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub group: usize,
    pub body: Vec<u32>,
    pub head: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Transactions {
    pub universe: Vec<Descriptor>,
    pub instances: Vec<Instance>,
    pub groups: usize,
}

/// Converts raw cells of one attribute into descriptor values, memoizing
/// encoder results.
struct AttrEncoder<'a> {
    column: usize,
    name: String,
    encoder: Option<&'a Encoder>,
    cache: HashMap<Value, DescValue>,
}

impl AttrEncoder<'_> {
    fn descriptor(&mut self, row: &Row) -> Result<Option<Descriptor>> {
        let v = &row[self.column];
        let value = match (self.encoder, v) {
            (None, Value::Null) => return Ok(None),
            (None, v) => DescValue::Raw(v.clone()),
            (Some(enc), v) => match self.cache.get(v) {
                Some(d) => d.clone(),
                None => {
                    let d = DescValue::Concept(enc.encode(v)?);
                    self.cache.insert(v.clone(), d.clone());
                    d
                }
            },
        };
        Ok(Some(Descriptor {
            attribute: self.name.clone(),
            value,
        }))
    }
}

fn encoders<'a>(
    schema: &Schema,
    attributes: &[String],
    bindings: &'a BTreeMap<String, Encoder>,
) -> Result<Vec<AttrEncoder<'a>>> {
    attributes
        .iter()
        .map(|a| {
            Ok(AttrEncoder {
                column: schema.require(a)?,
                name: a.to_ascii_lowercase(),
                encoder: bindings.get(&a.to_ascii_lowercase()),
                cache: HashMap::new(),
            })
        })
        .collect()
}

fn bind_opt(e: &Option<Expr>, schema: &Schema, row: bool) -> Result<Option<BoundExpr>> {
    e.as_ref()
        .map(|e| if row { e.bind_row(schema) } else { e.bind(schema) })
        .transpose()
}

fn key_text(key: &Row) -> String {
    let parts: Vec<String> = key.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(", "))
}

struct Interner {
    ids: HashMap<Descriptor, u32>,
    items: Vec<Descriptor>,
}

impl Interner {
    fn id(&mut self, d: Descriptor) -> u32 {
        if let Some(&i) = self.ids.get(&d) {
            return i;
        }
        let i = self.items.len() as u32;
        self.ids.insert(d.clone(), i);
        self.items.push(d);
        i
    }
}

/// Builds the mining transactions for a plan.
pub(crate) fn extract(plan: &MinePlan) -> Result<Transactions> {
    plan.validate()?;
    let schema = plan.source.schema();
    let group_filter = bind_opt(&plan.group_filter, schema, false)?;
    let cluster_filter = bind_opt(&plan.cluster_filter, schema, false)?;
    let body_filter = bind_opt(&plan.body_filter, schema, true)?;
    let head_filter = bind_opt(&plan.head_filter, schema, true)?;
    let cluster_cols = plan
        .cluster_keys
        .as_ref()
        .map(|keys| keys.iter().map(|k| schema.require(k)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let mut body_enc = encoders(schema, &plan.body.attributes, &plan.bindings)?;
    let mut head_enc = encoders(schema, &plan.head.attributes, &plan.bindings)?;

    let mut interner = Interner {
        ids: HashMap::new(),
        items: Vec::new(),
    };
    let mut instances = Vec::new();
    let mut groups = 0;
    for (key, rows) in plan.source.iter() {
        if let Some(f) = &group_filter {
            if f.eval_group(rows) != Some(true) {
                continue;
            }
        }
        let group = groups;
        groups += 1;
        let clusters: Vec<Vec<&Row>> = match &cluster_cols {
            None => vec![rows.iter().collect()],
            Some(cols) => {
                let mut order: Vec<Row> = Vec::new();
                let mut parts: HashMap<Row, Vec<&Row>> = HashMap::new();
                for r in rows {
                    let k: Row = cols.iter().map(|&c| r[c].clone()).collect();
                    parts
                        .entry(k.clone())
                        .or_insert_with(|| {
                            order.push(k);
                            Vec::new()
                        })
                        .push(r);
                }
                order.into_iter().map(|k| parts.remove(&k).unwrap()).collect()
            }
        };
        for cluster in clusters {
            if let Some(f) = &cluster_filter {
                let owned: Vec<Row> = cluster.iter().map(|r| (*r).clone()).collect();
                if f.eval_group(&owned) != Some(true) {
                    continue;
                }
            }
            let mut side = |enc: &mut Vec<AttrEncoder>, filter: &Option<BoundExpr>| -> Result<Vec<u32>> {
                let mut ids = Vec::new();
                for r in &cluster {
                    if filter.as_ref().is_some_and(|f| !f.matches(r)) {
                        continue;
                    }
                    for e in enc.iter_mut() {
                        let d = e.descriptor(r).map_err(|err| match err {
                            Error::Encoding(m) => {
                                Error::Encoding(format!("group {}: {m}", key_text(key)))
                            }
                            other => other,
                        })?;
                        if let Some(d) = d {
                            ids.push(interner.id(d));
                        }
                    }
                }
                Ok(ids)
            };
            let body = side(&mut body_enc, &body_filter)?;
            let head = side(&mut head_enc, &head_filter)?;
            instances.push(Instance { group, body, head });
        }
    }

    Ok(finish(interner, instances, groups))
}

/// Transactions for a single component schema (body side only).
pub(crate) fn extract_single(
    groups: &GroupedTable,
    attributes: &[String],
    bindings: &BTreeMap<String, Encoder>,
) -> Result<Transactions> {
    let schema = groups.schema();
    let mut enc = encoders(schema, attributes, bindings)?;
    let mut interner = Interner {
        ids: HashMap::new(),
        items: Vec::new(),
    };
    let mut instances = Vec::new();
    for (g, (key, rows)) in groups.iter().enumerate() {
        let mut ids = Vec::new();
        for r in rows {
            for e in enc.iter_mut() {
                let d = e.descriptor(r).map_err(|err| match err {
                    Error::Encoding(m) => Error::Encoding(format!("group {}: {m}", key_text(key))),
                    other => other,
                })?;
                if let Some(d) = d {
                    ids.push(interner.id(d));
                }
            }
        }
        instances.push(Instance {
            group: g,
            body: ids,
            head: Vec::new(),
        });
    }
    Ok(finish(interner, instances, groups.len()))
}

/// Renumbers descriptor ids so that id order follows descriptor order.
fn finish(interner: Interner, mut instances: Vec<Instance>, groups: usize) -> Transactions {
    let mut order: Vec<u32> = (0..interner.items.len() as u32).collect();
    order.sort_by(|&a, &b| interner.items[a as usize].cmp(&interner.items[b as usize]));
    let mut remap = vec![0u32; order.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    for inst in &mut instances {
        for ids in [&mut inst.body, &mut inst.head] {
            for id in ids.iter_mut() {
                *id = remap[*id as usize];
            }
            ids.sort_unstable();
            ids.dedup();
        }
    }
    let mut items: Vec<Option<Descriptor>> = interner.items.into_iter().map(Some).collect();
    let universe = order
        .iter()
        .map(|&old| items[old as usize].take().expect("each id once"))
        .collect();
    Transactions {
        universe,
        instances,
        groups,
    }
}
