use std::collections::{BTreeSet, HashMap};

use super::{sort_rules, DescValue, Descriptor, DescriptorSet, MinePlan, Rule};
use crate::error::{Error, Result};
use crate::relstore::{Row, Value};

/// Largest descriptor universe the exhaustive miner accepts.
pub const ORACLE_MAX_DESCRIPTORS: usize = 20;

type Cluster = (BTreeSet<Descriptor>, BTreeSet<Descriptor>);

fn side(plan: &MinePlan, rows: &[&Row], attrs: &[String], filter: &Option<crate::relstore::BoundExpr>) -> Result<BTreeSet<Descriptor>> {
    let schema = plan.source.schema();
    let mut out = BTreeSet::new();
    for r in rows {
        if let Some(f) = filter {
            if !f.matches(r) {
                continue;
            }
        }
        for a in attrs {
            let v = &r[schema.require(a)?];
            let value = match plan.bindings.get(a) {
                Some(enc) => DescValue::Concept(enc.encode(v)?),
                None if v.is_null() => continue,
                None => DescValue::Raw(v.clone()),
            };
            out.insert(Descriptor {
                attribute: a.clone(),
                value,
            });
        }
    }
    Ok(out)
}

/// Per group, the (body, head) descriptor sets of each cluster.
fn scan(plan: &MinePlan) -> Result<Vec<Vec<Cluster>>> {
    plan.validate()?;
    let schema = plan.source.schema();
    let bind = |e: &Option<crate::relstore::Expr>, row: bool| {
        e.as_ref()
            .map(|e| if row { e.bind_row(schema) } else { e.bind(schema) })
            .transpose()
    };
    let group_filter = bind(&plan.group_filter, false)?;
    let cluster_filter = bind(&plan.cluster_filter, false)?;
    let body_filter = bind(&plan.body_filter, true)?;
    let head_filter = bind(&plan.head_filter, true)?;
    let mut out = Vec::new();
    for (_, rows) in plan.source.iter() {
        if group_filter.as_ref().is_some_and(|f| f.eval_group(rows) != Some(true)) {
            continue;
        }
        let mut clusters: Vec<(Vec<Value>, Vec<&Row>)> = Vec::new();
        for r in rows {
            let key: Vec<Value> = match &plan.cluster_keys {
                None => Vec::new(),
                Some(keys) => keys
                    .iter()
                    .map(|k| schema.require(k).map(|i| r[i].clone()))
                    .collect::<Result<_>>()?,
            };
            match clusters.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(r),
                None => clusters.push((key, vec![r])),
            }
        }
        let mut group = Vec::new();
        for (_, members) in clusters {
            if let Some(f) = &cluster_filter {
                let owned: Vec<Row> = members.iter().map(|r| (*r).clone()).collect();
                if f.eval_group(&owned) != Some(true) {
                    continue;
                }
            }
            group.push((
                side(plan, &members, &plan.body.attributes, &body_filter)?,
                side(plan, &members, &plan.head.attributes, &head_filter)?,
            ));
        }
        out.push(group);
    }
    Ok(out)
}

fn subsets(universe: &[Descriptor]) -> impl Iterator<Item = BTreeSet<Descriptor>> + '_ {
    (1u32..(1 << universe.len())).map(move |mask| {
        universe
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, d)| d.clone())
            .collect()
    })
}

/// Exhaustive miner: tries every body/head pair over the descriptors that
/// occur in the data and counts each directly from the groups. Refuses
/// universes above [`ORACLE_MAX_DESCRIPTORS`].
pub fn brute_force_mine(plan: &MinePlan) -> Result<Vec<Rule>> {
    let groups = scan(plan)?;
    let mut body_universe = BTreeSet::new();
    let mut head_universe = BTreeSet::new();
    for g in &groups {
        for (b, h) in g {
            body_universe.extend(b.iter().cloned());
            head_universe.extend(h.iter().cloned());
        }
    }
    let distinct: BTreeSet<&Descriptor> = body_universe.iter().chain(&head_universe).collect();
    if distinct.len() > ORACLE_MAX_DESCRIPTORS {
        return Err(Error::Oracle(format!(
            "{} distinct descriptors exceed the oracle limit of {ORACLE_MAX_DESCRIPTORS}",
            distinct.len()
        )));
    }
    let body_universe: Vec<Descriptor> = body_universe.into_iter().collect();
    let head_universe: Vec<Descriptor> = head_universe.into_iter().collect();
    let total = groups.len();
    let clustered = plan.cluster_keys.is_some();

    let mut body_counts: HashMap<BTreeSet<Descriptor>, usize> = HashMap::new();
    let mut rules = Vec::new();
    for body in subsets(&body_universe) {
        if !plan.body.admits(body.len()) {
            continue;
        }
        let body_count = *body_counts.entry(body.clone()).or_insert_with(|| {
            groups
                .iter()
                .filter(|g| g.iter().any(|(b, _)| body.is_subset(b)))
                .count()
        });
        if body_count == 0 {
            continue;
        }
        for head in subsets(&head_universe) {
            if !plan.head.admits(head.len()) || !body.is_disjoint(&head) {
                continue;
            }
            let rule_count = groups
                .iter()
                .filter(|g| {
                    g.iter().enumerate().any(|(i, (b, _))| {
                        body.is_subset(b)
                            && g.iter().enumerate().any(|(j, (_, h))| {
                                (!clustered || i != j) && head.is_subset(h) && (clustered || i == j)
                            })
                    })
                })
                .count();
            if plan.accepts(rule_count, body_count, total) {
                rules.push(Rule {
                    body: DescriptorSet::new(body.iter().cloned().collect()),
                    head: DescriptorSet::new(head.iter().cloned().collect()),
                    group_count: total,
                    body_count,
                    rule_count,
                });
            }
        }
    }
    sort_rules(&mut rules);
    Ok(rules)
}
