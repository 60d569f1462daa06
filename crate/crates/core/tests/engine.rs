use minedb::catalog::Catalog;
use minedb::dialects::Dialect;
use minedb::engine::{run_script, Outcome, UNNAMED_RULES};
use minedb::rulestore::{export_csv, CSV_HEADER};

const MSQL: &str = include_str!("../../../scripts/msql_walkthrough.dmq");
const MINESQL: &str = include_str!("../../../scripts/minesql_walkthrough.dmq");

fn outcomes(text: &str, d: Dialect, c: &mut Catalog) -> Vec<Result<Outcome, String>> {
    run_script(text, d, c)
        .unwrap()
        .into_iter()
        .map(|r| r.map(|e| e.outcome).map_err(|e| e.to_string()))
        .collect()
}

#[test]
fn declared_rule_table_is_filled_by_insert() {
    let mut c = Catalog::with_fixture().unwrap();
    let out = outcomes(MINESQL, Dialect::MineSql, &mut c);
    assert!(matches!(&out[1], Ok(Outcome::Message(m)) if m.contains("transaction_rb")));
    let rt = c.rule_table("transaction_rb").unwrap();
    assert_eq!(rt.len(), 4);
    assert_eq!(rt.provenance.rule_column.as_deref(), Some("rl"));
}

#[test]
fn stored_names_cannot_be_reused() {
    let mut c = Catalog::with_fixture().unwrap();
    outcomes(MSQL, Dialect::Msql, &mut c);
    let again = outcomes(
        "GETRULES(TRANSACTION_VIEW) INTO TRANSACTION_RB WHERE SUPPORT>2 USING DSCRT_INCOME FOR INCOME;",
        Dialect::Msql,
        &mut c,
    );
    let err = again[0].as_ref().unwrap_err();
    assert!(err.contains("transaction_rb"), "{err}");
    assert_eq!(c.rule_table("transaction_rb").unwrap().len(), 4);
}

#[test]
fn failing_statement_does_not_stop_the_script() {
    let mut c = Catalog::with_fixture().unwrap();
    let out = outcomes(
        "SELECT * FROM NOWHERE; SELECT ID_TRANSAC FROM TRANSACTIONS WHERE ITEM='E';",
        Dialect::MineSql,
        &mut c,
    );
    assert!(out[0].is_err());
    let Ok(Outcome::Table(t)) = &out[1] else { panic!("{:?}", out[1]) };
    assert_eq!(t.len(), 4);
}

#[test]
fn unnamed_mining_is_not_stored() {
    let mut c = Catalog::with_fixture().unwrap();
    let text = "MINE RULE, SUPPORT(RULE), CONFIDENCE(RULE) FOR ITEM TO ITEM \
                FROM (SELECT SET(ITEM) FROM TRANSACTIONS GROUP BY ID_TRANSAC) \
                WHERE SUPPORT(RULE)>0.3 AND CONFIDENCE(RULE)>0.5;";
    let out = outcomes(text, Dialect::MineSql, &mut c);
    let Ok(Outcome::Rules(rt)) = &out[0] else { panic!("{:?}", out[0]) };
    assert_eq!(rt.name, UNNAMED_RULES);
    assert!(c.rule_table(UNNAMED_RULES).is_none());
    assert!(!rt.is_empty());
}

#[test]
fn cross_over_result_is_stored_as_a_table() {
    let mut c = Catalog::with_fixture().unwrap();
    outcomes(MSQL, Dialect::Msql, &mut c);
    let t = &c.table("cross_over").unwrap().table;
    assert_eq!(t.len(), 5);
}

#[test]
fn csv_export_of_walkthrough_rules() {
    let mut c = Catalog::with_fixture().unwrap();
    outcomes(MSQL, Dialect::Msql, &mut c);
    let csv = export_csv(c.rule_table("transaction_rb").unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("item=A,income=[500..599],4,3,8,0.750000"), "{}", lines[1]);
}

#[test]
fn outcome_display_aligns_rule_columns() {
    let mut c = Catalog::with_fixture().unwrap();
    let out = outcomes(MSQL, Dialect::Msql, &mut c);
    let text = out[2].as_ref().unwrap().to_string();
    let widths: Vec<usize> = text.lines().map(|l| l.trim_end().chars().count()).collect();
    assert!(text.lines().next().unwrap().contains("consequent"), "{text}");
    assert_eq!(widths.len(), 6, "{text}");
}
