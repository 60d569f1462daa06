use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use super::bits::Bits;
use super::extract::{extract, extract_single, Transactions};
use super::{sort_rules, ComponentSchema, DescriptorSet, MinePlan, Rule};
use crate::error::{Error, Result};
use crate::hierarchy::Encoder;
use crate::relstore::GroupedTable;

/// Vertical layout of the transactions: per descriptor, the instances
/// holding it on each rule side.
struct Index {
    body: Vec<Option<Bits>>,
    head: Vec<Option<Bits>>,
    group_of: Vec<usize>,
    clustered: bool,
}

impl Index {
    fn build(tx: &Transactions, clustered: bool) -> Self {
        let n = tx.instances.len();
        let mut body: Vec<Option<Bits>> = vec![None; tx.universe.len()];
        let mut head: Vec<Option<Bits>> = vec![None; tx.universe.len()];
        for (i, inst) in tx.instances.iter().enumerate() {
            for &d in &inst.body {
                body[d as usize].get_or_insert_with(|| Bits::zeros(n)).set(i);
            }
            for &d in &inst.head {
                head[d as usize].get_or_insert_with(|| Bits::zeros(n)).set(i);
            }
        }
        Index {
            body,
            head,
            group_of: tx.instances.iter().map(|i| i.group).collect(),
            clustered,
        }
    }

    /// Groups with some instance holding the whole set.
    fn group_count(&self, tids: &Bits) -> usize {
        if !self.clustered {
            return tids.count();
        }
        let mut last = None;
        let mut n = 0;
        for i in tids.ones() {
            let g = self.group_of[i];
            if last != Some(g) {
                n += 1;
                last = Some(g);
            }
        }
        n
    }

    /// Groups with two distinct clusters, one holding the body set and the
    /// other the head set.
    fn pair_count(&self, body: &Bits, head: &Bits) -> usize {
        let mut b = body.ones().peekable();
        let mut h = head.ones().peekable();
        let mut n = 0;
        loop {
            let g = match (b.peek(), h.peek()) {
                (Some(&x), Some(&y)) => self.group_of[x].min(self.group_of[y]),
                _ => return n,
            };
            let take = |it: &mut std::iter::Peekable<_>| {
                let (mut count, mut first) = (0usize, usize::MAX);
                while let Some(&i) = std::iter::Peekable::peek(it) {
                    if self.group_of[i] != g {
                        break;
                    }
                    first = first.min(i);
                    count += 1;
                    it.next();
                }
                (count, first)
            };
            let (cb, fb) = take(&mut b);
            let (ch, fh) = take(&mut h);
            if cb > 0 && ch > 0 && !(cb == 1 && ch == 1 && fb == fh) {
                n += 1;
            }
        }
    }
}

/// A frequent set with its tidset-like state and count.
type Entry<S> = (Vec<u32>, S, usize);

/// Level-wise Apriori. `singles` are the frequent 1-sets (sorted by id);
/// each following level joins sets sharing all but their last item,
/// prunes candidates with an infrequent subset and counts the survivors
/// with `extend`. `visit` sees every level in order.
fn levelwise<S: Send + Sync>(
    singles: Vec<Entry<S>>,
    max_len: Option<usize>,
    min: usize,
    extend: &(dyn Fn(&S, u32) -> (S, usize) + Sync),
    mut visit: impl FnMut(&[Entry<S>]) -> Result<()>,
) -> Result<()> {
    let mut level = singles;
    let mut k = 1;
    while !level.is_empty() {
        visit(&level)?;
        if max_len.is_some_and(|m| k >= m) {
            break;
        }
        let known: HashSet<&[u32]> = level.iter().map(|(s, _, _)| s.as_slice()).collect();
        let next: Vec<Entry<S>> = (0..level.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let (a, state, _) = &level[i];
                let prefix = &a[..k - 1];
                let known = &known;
                level[i + 1..]
                    .iter()
                    .take_while(move |(b, _, _)| &b[..k - 1] == prefix)
                    .filter_map(move |(b, _, _)| {
                        let last = b[k - 1];
                        let mut cand = a.clone();
                        cand.push(last);
                        // every k-subset obtained by dropping one of the
                        // first k-1 items must be frequent
                        let pruned = (0..k - 1).any(|drop| {
                            let sub: Vec<u32> = cand
                                .iter()
                                .enumerate()
                                .filter(|&(j, _)| j != drop)
                                .map(|(_, &x)| x)
                                .collect();
                            !known.contains(sub.as_slice())
                        });
                        if pruned {
                            return None;
                        }
                        let (st, count) = extend(state, last);
                        (count >= min).then_some((cand, st, count))
                    })
            })
            .collect();
        level = next;
        k += 1;
    }
    Ok(())
}

fn descriptors(tx: &Transactions, ids: &[u32]) -> DescriptorSet {
    DescriptorSet::new(ids.iter().map(|&i| tx.universe[i as usize].clone()).collect())
}

/// All descriptor sets admitted by `schema` that occur in at least
/// `min_count` groups, with exact counts, ordered by size then descriptors.
pub fn enumerate_frequent(
    groups: &GroupedTable,
    schema: &ComponentSchema,
    min_count: usize,
    bindings: &BTreeMap<String, Encoder>,
) -> Result<Vec<(DescriptorSet, usize)>> {
    if min_count < 1 {
        return Err(Error::plan("min_count must be at least 1"));
    }
    schema.validate()?;
    let tx = extract_single(groups, &schema.attributes, bindings)?;
    let index = Index::build(&tx, false);
    let singles: Vec<Entry<Bits>> = index
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let b = b.as_ref()?;
            let c = b.count();
            (c >= min_count).then(|| (vec![i as u32], b.clone(), c))
        })
        .collect();
    let mut out = Vec::new();
    let extend = |s: &Bits, x: u32| {
        let st = s.and(index.body[x as usize].as_ref().expect("frequent single"));
        let c = st.count();
        (st, c)
    };
    levelwise(singles, schema.max, min_count, &extend, |level| {
        for (ids, _, c) in level {
            if schema.admits(ids.len()) {
                out.push((descriptors(&tx, ids), *c));
            }
        }
        Ok(())
    })?;
    out.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    Ok(out)
}

/// Mines every rule allowed by the plan's schemas and thresholds. Plans
/// with cluster keys are mined over cluster pairs.
pub fn mine_associations(plan: &MinePlan) -> Result<Vec<Rule>> {
    let tx = extract(plan)?;
    mine_transactions(plan, &tx, plan.cluster_keys.is_some())
}

/// Clustered mining: a group supports `B → H` when one of its clusters
/// holds `B` and a different one holds `H`.
pub fn mine_clustered(plan: &MinePlan) -> Result<Vec<Rule>> {
    if plan.cluster_keys.is_none() {
        return Err(Error::plan("clustered mining requires CLUSTER BY keys"));
    }
    mine_associations(plan)
}

fn mine_transactions(plan: &MinePlan, tx: &Transactions, clustered: bool) -> Result<Vec<Rule>> {
    let groups = tx.groups;
    let Some(min_body) = plan.min_body_count(groups) else {
        return Ok(Vec::new());
    };
    let index = Index::build(tx, clustered);

    let body_singles: Vec<Entry<Bits>> = index
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let b = b.as_ref()?;
            let c = index.group_count(b);
            (c >= min_body).then(|| (vec![i as u32], b.clone(), c))
        })
        .collect();
    let body_extend = |s: &Bits, x: u32| {
        let st = s.and(index.body[x as usize].as_ref().expect("frequent single"));
        let c = index.group_count(&st);
        (st, c)
    };

    let mut rules = Vec::new();
    levelwise(body_singles, plan.body.max, min_body, &body_extend, |level| {
        let found: Vec<Vec<Rule>> = level
            .par_iter()
            .filter(|(ids, _, _)| plan.body.admits(ids.len()))
            .map(|(ids, tids, count)| heads_for(plan, tx, &index, ids, tids, *count))
            .collect::<Result<_>>()?;
        rules.extend(found.into_iter().flatten());
        Ok(())
    })?;
    sort_rules(&mut rules);
    Ok(rules)
}

/// Grows heads inside one frequent body.
fn heads_for(
    plan: &MinePlan,
    tx: &Transactions,
    index: &Index,
    body: &[u32],
    body_tids: &Bits,
    body_count: usize,
) -> Result<Vec<Rule>> {
    let groups = tx.groups;
    let Some(min_rule) = plan.min_rule_count(body_count, groups) else {
        return Ok(Vec::new());
    };
    // unclustered heads carry the conditional tidset (body ∧ head);
    // clustered heads carry the head tidset alone
    let count = |st: &Bits| {
        if index.clustered {
            index.pair_count(body_tids, st)
        } else {
            st.count()
        }
    };
    let singles: Vec<Entry<Bits>> = index
        .head
        .iter()
        .enumerate()
        .filter(|(i, _)| body.binary_search(&(*i as u32)).is_err())
        .filter_map(|(i, h)| {
            let h = h.as_ref()?;
            let st = if index.clustered {
                h.clone()
            } else {
                body_tids.and(h)
            };
            let c = count(&st);
            (c >= min_rule).then(|| (vec![i as u32], st, c))
        })
        .collect();
    let extend = |s: &Bits, x: u32| {
        let st = s.and(index.head[x as usize].as_ref().expect("frequent single"));
        let c = count(&st);
        (st, c)
    };
    let body_set = descriptors(tx, body);
    let mut out = Vec::new();
    levelwise(singles, plan.head.max, min_rule, &extend, |level| {
        for (ids, _, rule_count) in level {
            if plan.head.admits(ids.len()) && plan.accepts(*rule_count, body_count, groups) {
                out.push(Rule {
                    body: body_set.clone(),
                    head: descriptors(tx, ids),
                    group_count: groups,
                    body_count,
                    rule_count: *rule_count,
                });
            }
        }
        Ok(())
    })?;
    Ok(out)
}
