//! Acceptance checks. Prints one line per criterion and exits non-zero when
//! a criterion that should pass fails, or a known-unattainable one passes.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use minedb::catalog::Catalog;
use minedb::dialects::{self, parse_script, parse_statement, Dialect, LogicalPlan, Statement};
use minedb::engine::{execute, run_script, Outcome};
use minedb::miner::{
    brute_force_mine, enumerate_frequent, mine_associations, Basis, Comparator, ComponentSchema, MinePlan, Rule,
    SupportSemantics, Threshold,
};
use minedb::postproc::{crossover, maximal_rules, CrossOp, CrossOverMode, Quantifier};
use minedb::relstore::{group_rows, DataType, GroupedTable, Row, Schema, Table, Value};
use minedb::rulestore::{export_csv, export_normalized, reconstruct, Provenance, RuleTable};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const MSQL: &str = include_str!("../../../scripts/msql_walkthrough.dmq");
const DMQL: &str = include_str!("../../../scripts/dmql_walkthrough.dmq");
const MINERULE: &str = include_str!("../../../scripts/minerule_walkthrough.dmq");
const MINESQL: &str = include_str!("../../../scripts/minesql_walkthrough.dmq");

/// Criteria that cannot pass as stated; see the README.
const UNATTAINABLE: &[usize] = &[5];

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(text: &str, d: Dialect) -> Result<(Catalog, Vec<Outcome>), String> {
    let mut c = Catalog::with_fixture().map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for r in run_script(text, d, &mut c).map_err(|e| e.to_string())? {
        out.push(r.map_err(|e| e.to_string())?.outcome);
    }
    Ok((c, out))
}

fn statements(text: &str, d: Dialect) -> Result<Vec<Statement>, String> {
    parse_script(text, d)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|s| s.map_err(|e| e.to_string()))
        .collect()
}

/// Runs the script up to its mining statement and returns that statement's plan.
fn mining_plan(text: &str, d: Dialect) -> Result<(MinePlan, Provenance), String> {
    let mut c = Catalog::with_fixture().map_err(|e| e.to_string())?;
    for s in statements(text, d)? {
        let lowered = dialects::lower(&s, &c).map_err(|e| e.to_string())?;
        if let LogicalPlan::Mine { plan, provenance, .. } = lowered.plan {
            return Ok((plan, provenance));
        }
        execute(lowered.plan, &mut c).map_err(|e| e.to_string())?;
    }
    Err("script has no mining statement".into())
}

fn rules_at(out: &[Outcome], i: usize) -> Result<&RuleTable, String> {
    match out.get(i) {
        Some(Outcome::Rules(rt)) => Ok(rt),
        other => Err(format!("statement {i} gave {other:?}, not rules")),
    }
}

fn table_at(out: &[Outcome], i: usize) -> Result<&Table, String> {
    match out.get(i) {
        Some(Outcome::Table(t)) => Ok(t),
        other => Err(format!("statement {i} gave {other:?}, not a table")),
    }
}

fn bodies(rt: &RuleTable) -> BTreeSet<String> {
    rt.rules().iter().map(|r| r.body.to_string()).collect()
}

fn keyed(rules: &[Rule]) -> BTreeMap<(String, String), &Rule> {
    rules.iter().map(|r| ((r.body.to_string(), r.head.to_string()), r)).collect()
}

fn round3(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let (_, out) = run(MSQL, Dialect::Msql)?;
    let elapsed = started.elapsed();
    let rt = rules_at(&out, 2)?;
    let (plan, _) = mining_plan(MSQL, Dialect::Msql)?;
    let oracle = brute_force_mine(&plan).map_err(|e| e.to_string())?;
    ensure(rt.rules() == oracle.as_slice(), "mined rules differ from the oracle")?;
    let got: BTreeMap<String, (i64, i64)> = rt
        .rules()
        .iter()
        .map(|r| (r.body.to_string(), (rt.support(r) as i64, round3(r.confidence()))))
        .collect();
    let want: BTreeMap<String, (i64, i64)> = [
        ("item=A", (4, 750)),
        ("item=B", (4, 1000)),
        ("item=D", (3, 667)),
        ("item=A & item=B", (3, 1000)),
    ]
    .into_iter()
    .map(|(b, v)| (b.to_string(), v))
    .collect();
    ensure(got == want, format!("got {got:?}"))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("4 rules matching the oracle in {elapsed:?}"))
}

fn criterion_2() -> Check {
    let (_, out) = run(MSQL, Dialect::Msql)?;
    let t = table_at(&out, 3)?;
    let ids: BTreeSet<String> = t
        .column_values("id_transac")
        .map_err(|e| e.to_string())?
        .iter()
        .map(|v| v.to_string())
        .collect();
    let want: BTreeSet<String> = ["t2", "t4", "t5", "t9", "t10"].iter().map(|s| s.to_string()).collect();
    ensure(ids == want, format!("got {ids:?}"))?;
    Ok(format!("{ids:?}"))
}

fn criterion_3() -> Check {
    let (c, out) = run(MSQL, Dialect::Msql)?;
    let stored = c.rule_table("transaction_rb").ok_or("transaction_rb not stored")?;
    let direct = bodies(&maximal_rules(stored));
    let nested = bodies(rules_at(&out, 4)?);
    let want: BTreeSet<String> = ["item=D", "item=A & item=B"].iter().map(|s| s.to_string()).collect();
    ensure(direct == want, format!("maximal_rules gave {direct:?}"))?;
    ensure(nested == want, format!("SELECTRULES gave {nested:?}"))?;
    Ok(format!("both give {want:?}"))
}

fn criterion_4() -> Check {
    let (_, out) = run(MINERULE, Dialect::MineRule)?;
    let rt = rules_at(&out, 0)?;
    let (mut plan, _) = mining_plan(MINERULE, Dialect::MineRule)?;
    let oracle = brute_force_mine(&plan).map_err(|e| e.to_string())?;
    ensure(rt.len() == 7, format!("{} rules by default", rt.len()))?;
    ensure(rt.rules() == oracle.as_slice(), "default rules differ from the oracle")?;
    plan.support = Some(Threshold::new(0.25, Basis::Relative, Comparator::Greater));
    plan.semantics = SupportSemantics::Body;
    let alt = mine_associations(&plan).map_err(|e| e.to_string())?;
    let alt_bodies: BTreeSet<String> = alt.iter().map(|r| r.body.to_string()).collect();
    let want: BTreeSet<String> = ["item=A", "item=B", "item=D", "item=A & item=B"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    ensure(alt_bodies == want, format!("body basis gave {alt_bodies:?}"))?;
    Ok("7 oracle rules by default, 4 bodies under body basis with >".into())
}

fn criterion_5() -> Check {
    let (_, out) = run(MINESQL, Dialect::MineSql)?;
    let rt = rules_at(&out, 2)?;
    let got: BTreeMap<String, (i64, i64)> = rt
        .rules()
        .iter()
        .map(|r| (r.body.to_string(), (round3(rt.support(r)), round3(r.confidence()))))
        .collect();
    let want: BTreeMap<String, (i64, i64)> = [
        ("item=A", (375, 750)),
        ("item=B", (500, 1000)),
        ("item=D", (375, 667)),
        ("item=A & item=B", (375, 1000)),
    ]
    .into_iter()
    .map(|(b, v)| (b.to_string(), v))
    .collect();
    let rendered: Vec<String> = rt.rules().iter().map(|r| rt.render(r)).collect();
    let text = "item='A' & item='B'→income_h=2".to_string();
    ensure(rendered.contains(&text), format!("no rule renders as {text}: {rendered:?}"))?;
    let wrong: Vec<String> = want
        .iter()
        .filter(|(b, v)| got.get(*b) != Some(v))
        .map(|(b, v)| format!("{b}: want {v:?}, got {:?}", got.get(b)))
        .collect();
    ensure(wrong.is_empty(), wrong.join("; "))?;
    Ok("supports, confidences and rendering match".into())
}

fn criterion_6() -> Check {
    let (_, out) = run(DMQL, Dialect::Dmql)?;
    let rt = out
        .iter()
        .rev()
        .find_map(|o| match o {
            Outcome::Rules(rt) => Some(rt),
            _ => None,
        })
        .ok_or("DMQL script produced no rules")?;
    let (_, msql) = run(MSQL, Dialect::Msql)?;
    let four = rules_at(&msql, 2)?;
    let have = keyed(rt.rules());
    for r in four.rules() {
        ensure(
            have.contains_key(&(r.body.to_string(), r.head.to_string())),
            format!("missing {} -> {}", r.body, r.head),
        )?;
    }
    let back = reconstruct(&export_normalized(rt), rt).map_err(|e| e.to_string())?;
    ensure(back == rt.to_table(), "normalized form does not reconstruct the rule table")?;
    Ok(format!("{} rules cover the 4, normalized form reconstructs", rt.len()))
}

// ---- random instances ----

fn random_groups(rng: &mut StdRng) -> GroupedTable {
    let schema = Schema::new([
        ("g", DataType::Integer),
        ("item", DataType::Text),
        ("h", DataType::Text),
    ])
    .unwrap();
    let n = rng.gen_range(0..40);
    let rows: Vec<Row> = (0..n)
        .map(|_| {
            vec![
                Value::Integer(rng.gen_range(0..12)),
                Value::text(((b'A' + rng.gen_range(0..6u8)) as char).to_string()),
                Value::text(format!("h{}", rng.gen_range(0..4))),
            ]
        })
        .collect();
    group_rows(&Table::new(schema, rows).unwrap(), &["g"]).unwrap()
}

fn random_plan(rng: &mut StdRng) -> MinePlan {
    let basis = if rng.gen_bool(0.5) { Basis::Absolute } else { Basis::Relative };
    let cmp = if rng.gen_bool(0.5) { Comparator::Greater } else { Comparator::GreaterOrEqual };
    let k = rng.gen_range(0..=12) as f64;
    let value = match basis {
        Basis::Absolute => k / 2.0,
        Basis::Relative => k / 12.0,
    };
    let semantics = if rng.gen_bool(0.5) { SupportSemantics::Body } else { SupportSemantics::Rule };
    let body_max = rng.gen_bool(0.7).then(|| rng.gen_range(1..4));
    let head_max = rng.gen_bool(0.7).then(|| rng.gen_range(1..3));
    let head = if rng.gen_bool(0.5) { "h" } else { "item" };
    MinePlan::new(
        random_groups(rng),
        ComponentSchema::new(&["item"], 1, body_max).unwrap(),
        ComponentSchema::new(&[head], 1, head_max).unwrap(),
    )
    .with_support(Threshold::new(value, basis, cmp), semantics)
    .with_confidence(Threshold::at_least(rng.gen_range(0..=10) as f64 / 10.0))
}

fn criterion_7() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let started = Instant::now();
    let cases = 1000;
    for i in 0..cases {
        let plan = random_plan(&mut rng);
        let fast = mine_associations(&plan).map_err(|e| e.to_string())?;
        let slow = brute_force_mine(&plan).map_err(|e| e.to_string())?;
        ensure(fast == slow, format!("instance {i} differs from the oracle"))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("{cases} instances agree with the oracle in {elapsed:?}"))
}

fn criterion_8() -> Check {
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..300 {
        let plan = random_plan(&mut rng);
        let rules = mine_associations(&plan).map_err(|e| e.to_string())?;
        for r in &rules {
            ensure(
                r.rule_count <= r.body_count && r.body_count <= r.group_count,
                format!("instance {i}: counts out of order"),
            )?;
            ensure(r.body.is_disjoint(&r.head), format!("instance {i}: body meets head"))?;
        }
        let schema = ComponentSchema::new(&["item"], 1, None).unwrap();
        let frequent = enumerate_frequent(&plan.source, &schema, 1, &BTreeMap::new()).map_err(|e| e.to_string())?;
        let counts: BTreeMap<_, _> = frequent.iter().cloned().collect();
        for (set, n) in &frequent {
            for d in set.iter() {
                let rest = minedb::miner::DescriptorSet::new(set.iter().filter(|x| *x != d).cloned().collect());
                if rest.is_empty() {
                    continue;
                }
                let sub = counts.get(&rest).copied().unwrap_or(0);
                ensure(sub >= *n, format!("instance {i}: {rest} below its superset {set}"))?;
            }
        }
        let rt = RuleTable::new("r", rules, Provenance::default());
        let any = crossover(&plan.source, &rt, CrossOverMode::new(CrossOp::Satisfies, Quantifier::Any))
            .map_err(|e| e.to_string())?;
        let all = crossover(&plan.source, &rt, CrossOverMode::new(CrossOp::Violates, Quantifier::All))
            .map_err(|e| e.to_string())?;
        ensure(any.len() + all.len() == plan.source.len(), format!("instance {i}: cross-over is no partition"))?;
        let m = maximal_rules(&rt);
        ensure(maximal_rules(&m) == m, format!("instance {i}: maximal_rules not idempotent"))?;
        let back = reconstruct(&export_normalized(&rt), &rt).map_err(|e| e.to_string())?;
        ensure(back == rt.to_table(), format!("instance {i}: normalized round trip"))?;
    }
    for (text, d) in [
        (MSQL, Dialect::Msql),
        (DMQL, Dialect::Dmql),
        (MINERULE, Dialect::MineRule),
        (MINESQL, Dialect::MineSql),
    ] {
        for s in statements(text, d)? {
            let printed = s.to_string();
            let again = parse_statement(&printed, d).map_err(|e| format!("{printed}: {e}"))?;
            ensure(again == s, format!("{printed} does not round-trip"))?;
        }
    }
    Ok("mining, cross-over, maximality, storage and print/parse properties hold".into())
}

fn criterion_9() -> Check {
    let mut outputs = Vec::new();
    for (text, d) in [
        (MSQL, Dialect::Msql),
        (DMQL, Dialect::Dmql),
        (MINERULE, Dialect::MineRule),
        (MINESQL, Dialect::MineSql),
    ] {
        let (mut plan, provenance) = mining_plan(text, d)?;
        plan.support = Some(Threshold::at_least(0.25));
        plan.semantics = SupportSemantics::Rule;
        plan.confidence = Some(Threshold::at_least(0.5));
        let rules = mine_associations(&plan).map_err(|e| e.to_string())?;
        outputs.push((d, export_csv(&RuleTable::new("r", rules, provenance))));
    }
    let first = &outputs[0].1;
    for (d, csv) in &outputs[1..] {
        ensure(csv == first, format!("{d:?} export differs:\n{csv}\nvs\n{first}"))?;
    }
    Ok(format!("four identical exports of {} lines", first.lines().count()))
}

fn peak_memory_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn baskets(n: usize, items: usize, rng: &mut StdRng) -> GroupedTable {
    let schema = Schema::new([("basket", DataType::Integer), ("item", DataType::Integer)]).unwrap();
    let mut rows = Vec::new();
    for b in 0..n {
        let size = rng.gen_range(1..=15);
        for _ in 0..size {
            // Skewed: low ids are far more common.
            let u: f64 = rng.gen();
            let item = ((u * u * u) * items as f64) as i64;
            rows.push(vec![Value::Integer(b as i64), Value::Integer(item)]);
        }
    }
    group_rows(&Table::new(schema, rows).unwrap(), &["basket"]).unwrap()
}

fn criterion_10() -> Check {
    let mut rng = StdRng::seed_from_u64(10);
    let groups = baskets(100_000, 1000, &mut rng);
    let started = Instant::now();
    let plan = MinePlan::new(
        groups,
        ComponentSchema::new(&["item"], 1, None).unwrap(),
        ComponentSchema::new(&["item"], 1, None).unwrap(),
    )
    .with_support(Threshold::at_least(0.01), SupportSemantics::Rule)
    .with_confidence(Threshold::at_least(0.0));
    let rules = mine_associations(&plan).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let peak = peak_memory_kb().ok_or("VmHWM unavailable")?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    ensure(peak < 1024 * 1024, format!("peak memory {peak} kB"))?;
    Ok(format!("{} rules in {elapsed:?}, peak {} MB", rules.len(), peak / 1024))
}

fn main() {
    let criteria: [fn() -> Check; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut unexpected = Vec::new();
    for (i, check) in criteria.iter().enumerate() {
        let n = i + 1;
        let result = check();
        let known = UNATTAINABLE.contains(&n);
        match &result {
            Ok(detail) => println!("criterion {n}: PASS: {detail}"),
            Err(detail) if known => println!("criterion {n}: FAIL (known unattainable): {detail}"),
            Err(detail) => println!("criterion {n}: FAIL: {detail}"),
        }
        if result.is_ok() == known {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
