use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::hierarchy::{ConceptHierarchy, Encoder};
use crate::relstore::{fixture, group_rows, DataType, Row, Schema, Table};

fn income_encoder() -> Encoder {
    Encoder::hierarchy(Arc::new(
        ConceptHierarchy::define_encoding(
            "dscrt_income",
            "income",
            &[
                (None, Some(499.0), 1),
                (Some(500.0), Some(599.0), 2),
                (Some(600.0), Some(699.0), 3),
                (Some(700.0), Some(799.0), 4),
                (Some(800.0), None, 5),
            ],
            Some(0),
        )
        .unwrap(),
    ))
}

fn items_to_income(support: Threshold, semantics: SupportSemantics) -> MinePlan {
    MinePlan::new(
        fixture::credit_card_groups().unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["income"], 1, Some(1)).unwrap(),
    )
    .with_support(support, semantics)
    .with_confidence(Threshold::at_least(0.5))
    .bind("income", income_encoder())
}

fn msql_plan() -> MinePlan {
    items_to_income(
        Threshold::new(2.0, Basis::Absolute, Comparator::Greater),
        SupportSemantics::Body,
    )
}

/// Compact `body -> head (body_count, rule_count)` view.
fn brief(rules: &[Rule]) -> Vec<String> {
    rules
        .iter()
        .map(|r| format!("{} -> {} ({}, {})", r.body, r.head, r.body_count, r.rule_count))
        .collect()
}

#[test]
fn frequent_items_in_fixture() {
    let groups = fixture::credit_card_groups().unwrap();
    let schema = ComponentSchema::new(&["item"], 1, None).unwrap();
    let got = enumerate_frequent(&groups, &schema, 3, &BTreeMap::new()).unwrap();
    let text: Vec<String> = got.iter().map(|(s, c)| format!("{s}:{c}")).collect();
    assert_eq!(
        text,
        ["item=A:4", "item=B:4", "item=D:3", "item=E:3", "item=A & item=B:3"]
    );
}

fn table(cols: &[&str], rows: &[&[&str]]) -> Table {
    let schema = Schema::new(cols.iter().map(|c| (*c, DataType::Text))).unwrap();
    Table::new(
        schema,
        rows.iter()
            .map(|r| r.iter().map(|v| Value::text(*v)).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn frequent_trivial_cases() {
    let one = group_rows(&table(&["g", "item"], &[&["1", "X"]]), &["g"]).unwrap();
    let schema = ComponentSchema::new(&["item"], 1, None).unwrap();
    let got = enumerate_frequent(&one, &schema, 1, &BTreeMap::new()).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].1, 1);
    assert_eq!(got[0].0.to_string(), "item=X");

    let groups = fixture::credit_card_groups().unwrap();
    assert!(enumerate_frequent(&groups, &schema, 9, &BTreeMap::new())
        .unwrap()
        .is_empty());
    assert!(enumerate_frequent(&groups, &schema, 0, &BTreeMap::new()).is_err());
}

#[test]
fn encoding_error_names_group() {
    let groups = fixture::credit_card_groups().unwrap();
    let schema = ComponentSchema::new(&["item"], 1, None).unwrap();
    let mut b = BTreeMap::new();
    b.insert("item".to_string(), Encoder::Truncate { digits: 1 });
    let err = enumerate_frequent(&groups, &schema, 1, &b).unwrap_err();
    assert!(err.to_string().contains("(t1)"), "{err}");
}

#[test]
fn msql_defaults_give_four_rules() {
    let rules = mine_associations(&msql_plan()).unwrap();
    assert_eq!(
        brief(&rules),
        [
            "item=A -> income=[500..599] (4, 3)",
            "item=B -> income=[500..599] (4, 4)",
            "item=D -> income=[500..599] (3, 2)",
            "item=A & item=B -> income=[500..599] (3, 3)",
        ]
    );
    assert!(rules.iter().all(|r| r.group_count == 8));
    assert_eq!(brute_force_mine(&msql_plan()).unwrap(), rules);
}

#[test]
fn minerule_defaults_give_seven_rules() {
    let plan = items_to_income(Threshold::at_least(0.25), SupportSemantics::Rule);
    let rules = mine_associations(&plan).unwrap();
    assert_eq!(
        brief(&rules),
        [
            "item=A -> income=[500..599] (4, 3)",
            "item=B -> income=[500..599] (4, 4)",
            "item=D -> income=[500..599] (3, 2)",
            "item=A & item=B -> income=[500..599] (3, 3)",
            "item=A & item=D -> income=[500..599] (2, 2)",
            "item=B & item=D -> income=[500..599] (2, 2)",
            "item=A & item=B & item=D -> income=[500..599] (2, 2)",
        ]
    );
    assert_eq!(brute_force_mine(&plan).unwrap(), rules);
}

#[test]
fn constant_head_gives_one_rule_per_item() {
    let t = table(
        &["g", "item", "k"],
        &[&["1", "A", "z"], &["1", "B", "z"], &["2", "A", "z"], &["3", "C", "z"]],
    );
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, Some(1)).unwrap(),
        ComponentSchema::new(&["k"], 1, Some(1)).unwrap(),
    )
    .with_support(Threshold::at_least(0.0), SupportSemantics::Rule)
    .with_confidence(Threshold::at_least(0.0));
    let rules = mine_associations(&plan).unwrap();
    assert_eq!(
        brief(&rules),
        ["item=A -> k=z (2, 2)", "item=B -> k=z (1, 1)", "item=C -> k=z (1, 1)"]
    );
}

#[test]
fn zero_groups_is_empty_not_error() {
    let t = table(&["g", "item"], &[]);
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    );
    assert!(mine_associations(&plan).unwrap().is_empty());
    assert!(brute_force_mine(&plan).unwrap().is_empty());
}

#[test]
fn relative_support_above_one_is_plan_error() {
    let plan = items_to_income(Threshold::at_least(1.5), SupportSemantics::Rule);
    assert!(matches!(mine_associations(&plan), Err(Error::Plan(_))));
}

fn customer_clusters(min_rule: f64) -> MinePlan {
    let groups = group_rows(&fixture::transactions().unwrap(), &["id_customer"]).unwrap();
    MinePlan::new(
        groups,
        ComponentSchema::new(&["item"], 1, Some(1)).unwrap(),
        ComponentSchema::new(&["item"], 1, Some(1)).unwrap(),
    )
    .with_support(
        Threshold::new(min_rule, Basis::Absolute, Comparator::GreaterOrEqual),
        SupportSemantics::Rule,
    )
    .with_confidence(Threshold::at_least(0.5))
    .clustered_by(&["payment_mode"])
}

#[test]
fn clustered_c_to_a() {
    let plan = customer_clusters(2.0);
    let rules = mine_clustered(&plan).unwrap();
    let ca = rules
        .iter()
        .find(|r| r.body.to_string() == "item=C" && r.head.to_string() == "item=A")
        .expect("C -> A mined");
    assert_eq!(ca.rule_count, 2);
    assert_eq!(ca.group_count, 9);
    assert_eq!(brute_force_mine(&plan).unwrap(), rules);
}

#[test]
fn clustered_requires_keys() {
    assert!(mine_clustered(&msql_plan()).is_err());
}

#[test]
fn single_cluster_per_group_is_empty() {
    let t = table(
        &["g", "c", "item"],
        &[&["1", "x", "A"], &["1", "x", "B"], &["2", "y", "A"], &["2", "y", "B"]],
    );
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    )
    .clustered_by(&["c"]);
    assert!(mine_clustered(&plan).unwrap().is_empty());
}

#[test]
fn clustered_never_emits_x_to_x() {
    let t = table(&["g", "c", "item"], &[&["1", "x", "X"], &["1", "y", "X"]]);
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    )
    .with_support(Threshold::new(1.0, Basis::Absolute, Comparator::GreaterOrEqual), SupportSemantics::Rule)
    .clustered_by(&["c"]);
    assert!(mine_clustered(&plan).unwrap().is_empty());
    assert!(brute_force_mine(&plan).unwrap().is_empty());
}

#[test]
fn cluster_key_overlapping_group_key_rejected() {
    let groups = group_rows(&fixture::transactions().unwrap(), &["id_customer"]).unwrap();
    let plan = MinePlan::new(
        groups,
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    )
    .clustered_by(&["id_customer"]);
    assert!(matches!(mine_clustered(&plan), Err(Error::Plan(_))));
}

#[test]
fn oracle_symmetric_pair() {
    let t = table(
        &["g", "item"],
        &[&["1", "A"], &["1", "B"], &["2", "A"], &["2", "B"]],
    );
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    )
    .with_support(Threshold::at_least(1.0), SupportSemantics::Rule)
    .with_confidence(Threshold::at_least(1.0));
    let rules = brute_force_mine(&plan).unwrap();
    assert_eq!(brief(&rules), ["item=A -> item=B (2, 2)", "item=B -> item=A (2, 2)"]);
    assert_eq!(mine_associations(&plan).unwrap(), rules);
}

#[test]
fn oracle_guard() {
    let rows: Vec<Vec<String>> = (0..21).map(|i| vec!["1".into(), format!("i{i}")]).collect();
    let refs: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
    let t = table(&["g", "item"], &slices);
    let plan = MinePlan::new(
        group_rows(&t, &["g"]).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    );
    assert!(matches!(brute_force_mine(&plan), Err(Error::Oracle(_))));
}

#[test]
fn deterministic_across_thread_counts() {
    let plan = items_to_income(Threshold::at_least(0.0), SupportSemantics::Rule);
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| mine_associations(&plan).unwrap())
    };
    let one = run(1);
    assert_eq!(format!("{one:?}"), format!("{:?}", run(4)));
}

/// Random instance: per row (group, cluster, item, head value).
#[derive(Debug, Clone)]
struct Instance {
    rows: Vec<(u8, u8, u8, u8)>,
    support: Threshold,
    confidence: Threshold,
    semantics: SupportSemantics,
    body_max: Option<usize>,
    head_max: Option<usize>,
}

fn threshold() -> impl Strategy<Value = Threshold> {
    (
        prop_oneof![Just(Basis::Absolute), Just(Basis::Relative)],
        prop_oneof![Just(Comparator::Greater), Just(Comparator::GreaterOrEqual)],
        0u8..=12,
    )
        .prop_map(|(basis, cmp, k)| match basis {
            Basis::Absolute => Threshold::new(k as f64 / 2.0, basis, cmp),
            Basis::Relative => Threshold::new(k as f64 / 12.0, basis, cmp),
        })
}

fn instance() -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec((0u8..12, 0u8..3, 0u8..6, 0u8..4), 0..40),
        threshold(),
        (0u8..=10).prop_map(|k| Threshold::at_least(k as f64 / 10.0)),
        prop_oneof![Just(SupportSemantics::Body), Just(SupportSemantics::Rule)],
        prop::option::of(1usize..4),
        prop::option::of(1usize..3),
    )
        .prop_map(|(rows, support, confidence, semantics, body_max, head_max)| Instance {
            rows,
            support,
            confidence,
            semantics,
            body_max,
            head_max,
        })
}

fn random_source(inst: &Instance) -> GroupedTable {
    let schema = Schema::new([
        ("g", DataType::Integer),
        ("c", DataType::Integer),
        ("item", DataType::Text),
        ("h", DataType::Text),
    ])
    .unwrap();
    let rows = inst
        .rows
        .iter()
        .map(|&(g, c, i, h)| {
            vec![
                Value::Integer(g as i64),
                Value::Integer(c as i64),
                Value::text(((b'A' + i) as char).to_string()),
                Value::text(format!("h{h}")),
            ]
        })
        .collect();
    group_rows(&Table::new(schema, rows).unwrap(), &["g"]).unwrap()
}

fn random_plan(inst: &Instance, head_attr: &str) -> MinePlan {
    MinePlan::new(
        random_source(inst),
        ComponentSchema::new(&["item"], 1, inst.body_max).unwrap(),
        ComponentSchema::new(&[head_attr], 1, inst.head_max).unwrap(),
    )
    .with_support(inst.support, inst.semantics)
    .with_confidence(inst.confidence)
}

/// Direct rescan of one rule's counts.
fn rescan(plan: &MinePlan, rule: &Rule) -> (usize, usize) {
    let schema = plan.source.schema();
    let desc_of = |r: &Row, a: &str| Descriptor::raw(a, r[schema.index_of(a).unwrap()].clone());
    let holds = |rows: &[&Row], set: &DescriptorSet, attrs: &[String]| {
        set.iter().all(|d| {
            rows.iter()
                .any(|r| attrs.iter().any(|a| desc_of(r, a) == *d))
        })
    };
    let (mut body, mut both) = (0, 0);
    for (_, rows) in plan.source.iter() {
        let all: Vec<&Row> = rows.iter().collect();
        if holds(&all, &rule.body, &plan.body.attributes) {
            body += 1;
            if holds(&all, &rule.head, &plan.head.attributes) {
                both += 1;
            }
        }
    }
    (body, both)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_oracle(inst in instance()) {
        let plan = random_plan(&inst, "h");
        prop_assert_eq!(mine_associations(&plan).unwrap(), brute_force_mine(&plan).unwrap());
    }

    #[test]
    fn matches_oracle_items_to_items(inst in instance()) {
        let plan = random_plan(&inst, "item");
        prop_assert_eq!(mine_associations(&plan).unwrap(), brute_force_mine(&plan).unwrap());
    }

    #[test]
    fn matches_oracle_clustered(inst in instance()) {
        let plan = random_plan(&inst, "item").clustered_by(&["c"]);
        prop_assert_eq!(mine_clustered(&plan).unwrap(), brute_force_mine(&plan).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn downward_closure(inst in instance(), min in 1usize..4) {
        let source = random_source(&inst);
        let schema = ComponentSchema::new(&["item", "h"], 1, None).unwrap();
        let sets = enumerate_frequent(&source, &schema, min, &BTreeMap::new()).unwrap();
        let index: BTreeMap<&DescriptorSet, usize> = sets.iter().map(|(s, c)| (s, *c)).collect();
        for (set, count) in &sets {
            prop_assert!(*count >= min);
            for drop in 0..set.len() {
                if set.len() == 1 {
                    break;
                }
                let sub: DescriptorSet = set
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, d)| d.clone())
                    .collect();
                let c = index.get(&sub);
                prop_assert!(c.is_some_and(|c| c >= count), "{} missing or smaller", sub);
            }
        }
    }

    #[test]
    fn rule_semantics_subset_of_body(inst in instance()) {
        let body = mine_associations(&random_plan(&inst, "h").with_support(inst.support, SupportSemantics::Body)).unwrap();
        let rule = mine_associations(&random_plan(&inst, "h").with_support(inst.support, SupportSemantics::Rule)).unwrap();
        for r in &rule {
            prop_assert!(body.contains(r), "{} missing under body support", r);
        }
    }

    #[test]
    fn counts_rescan(inst in instance()) {
        let plan = random_plan(&inst, "h");
        for r in mine_associations(&plan).unwrap() {
            prop_assert_eq!(rescan(&plan, &r), (r.body_count, r.rule_count));
            prop_assert!(r.rule_count >= 1 && r.rule_count <= r.body_count);
            prop_assert!(r.body_count <= r.group_count);
            prop_assert!(r.body.is_disjoint(&r.head));
        }
    }
}
