//! Immutable in-memory relations and the handful of dataset operators the
//! mining workflow needs: CSV ingestion, filtering, equijoin, grouping and
//! the item pivot.

mod expr;
mod ops;
mod table;
mod value;

pub use expr::{AggFunc, BoundExpr, CmpOp, Expr};
pub use ops::{
    equijoin, filter, group_rows, infer_schema, load_csv, parse_csv, pivot_items,
    project, singleton_groups, write_csv, IngestOptions,
};
pub use table::{render_aligned, Column, GroupedTable, Row, Schema, Table};
pub use value::{format_real, DataType, Value};

/// The sales database shipped with the crate: a `transactions` table of
/// baskets (one row per item after exploding) and a `customer` income table.
pub mod fixture {
    use super::*;
    use crate::error::Result;

    pub const TRANSACTIONS_CSV: &str = include_str!("../../fixtures/transactions.csv");
    pub const CUSTOMER_CSV: &str = include_str!("../../fixtures/customer.csv");

    pub fn transactions_schema() -> Schema {
        Schema::new([
            ("id_customer", DataType::Text),
            ("id_transac", DataType::Text),
            ("item", DataType::Text),
            ("payment_mode", DataType::Text),
        ])
        .expect("static schema")
    }

    pub fn customer_schema() -> Schema {
        Schema::new([("id_customer", DataType::Text), ("income", DataType::Integer)])
            .expect("static schema")
    }

    /// Transactions with multi-item cells exploded to one row per item.
    pub fn transactions() -> Result<Table> {
        parse_csv(
            TRANSACTIONS_CSV,
            &transactions_schema(),
            &IngestOptions::explode("item"),
        )
    }

    pub fn customer() -> Result<Table> {
        parse_csv(CUSTOMER_CSV, &customer_schema(), &IngestOptions::default())
    }

    /// Credit-card transactions joined with customer income, grouped by
    /// transaction id.
    pub fn credit_card_groups() -> Result<GroupedTable> {
        let joined = equijoin(&transactions()?, &customer()?, &[("id_customer", "id_customer")])?;
        let cc = filter(
            &joined,
            &Expr::eq(Expr::col("payment_mode"), Expr::lit("credit_card")),
            &["id_customer", "id_transac", "item", "payment_mode", "income"],
        )?;
        group_rows(&cc, &["id_transac"])
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use super::*;
    use crate::error::Error;

    fn txt(s: &str) -> Value {
        Value::text(s)
    }

    #[test]
    fn explode_items_splits_baskets() {
        let t = fixture::transactions().unwrap();
        assert_eq!(
            &t.rows()[..2],
            &[
                vec![txt("c1"), txt("t1"), txt("A"), txt("credit_card")],
                vec![txt("c1"), txt("t1"), txt("B"), txt("credit_card")],
            ]
        );
        // 2+2+2+1+2+2+3+4+1+1+3
        assert_eq!(t.len(), 23);
    }

    #[test]
    fn header_only_file_is_empty_table() {
        let t = parse_csv(
            "id_customer,income\n",
            &fixture::customer_schema(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn customer_has_nine_rows() {
        assert_eq!(fixture::customer().unwrap().len(), 9);
    }

    #[test]
    fn arity_error_names_line() {
        let err = parse_csv(
            "id_customer,income\nc1,534\nc2\n",
            &fixture::customer_schema(),
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Ingest { line: 3, .. }), "{err}");
    }

    #[test]
    fn type_mismatch_is_ingest_error() {
        let err = parse_csv(
            "id_customer,income\nc1,lots\n",
            &fixture::customer_schema(),
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Ingest { line: 2, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv(
            "/nonexistent/customer.csv",
            &fixture::customer_schema(),
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn credit_card_filter_matches_linear_scan() {
        let t = fixture::transactions().unwrap();
        let f = filter(
            &t,
            &Expr::eq(Expr::col("payment_mode"), Expr::lit("credit_card")),
            &["id_transac"],
        )
        .unwrap();
        let got: BTreeSet<Value> = f.rows().iter().map(|r| r[0].clone()).collect();
        // oracle: scan the raw CSV text
        let expected: BTreeSet<Value> = fixture::TRANSACTIONS_CSV
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(",credit_card"))
            .map(|l| txt(l.split(',').nth(1).unwrap()))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 8);
        let want: BTreeSet<Value> = ["t1", "t2", "t4", "t5", "t7", "t8", "t9", "t10"]
            .into_iter()
            .map(txt)
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn filter_identity_and_empty() {
        let t = fixture::customer().unwrap();
        let all: Vec<&str> = t.schema().names().collect();
        let yes = Expr::cmp(CmpOp::Ge, Expr::lit(1), Expr::lit(0));
        assert_eq!(filter(&t, &yes, &all).unwrap(), t);
        let no = yes.clone().negate();
        assert!(filter(&t, &no, &all).unwrap().is_empty());
        assert!(matches!(
            filter(&t, &Expr::eq(Expr::col("nope"), Expr::lit(1)), &all),
            Err(Error::Plan(_))
        ));
    }

    #[test]
    fn join_gains_income() {
        let j = equijoin(
            &fixture::transactions().unwrap(),
            &fixture::customer().unwrap(),
            &[("id_customer", "id_customer")],
        )
        .unwrap();
        let names: Vec<&str> = j.schema().names().collect();
        assert_eq!(names, ["id_customer", "id_transac", "item", "payment_mode", "income"]);
        assert_eq!(j.rows()[0][4], Value::Integer(534));
        assert_eq!(j.len(), 23);
    }

    #[test]
    fn join_empty_and_unmatched() {
        let t = fixture::transactions().unwrap();
        let empty = Table::empty(fixture::customer_schema());
        assert!(equijoin(&t, &empty, &[("id_customer", "id_customer")])
            .unwrap()
            .is_empty());
        let only_c99 = parse_csv(
            "id_customer,income\nc99,100\n",
            &fixture::customer_schema(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert!(equijoin(&t, &only_c99, &[("id_customer", "id_customer")])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn join_rejects_ambiguous_column() {
        let c = fixture::customer().unwrap();
        let err = equijoin(&c, &c, &[("income", "income")]).unwrap_err();
        assert!(matches!(err, Error::Plan(_)));
    }

    #[test]
    fn grouping_counts() {
        let g = fixture::credit_card_groups().unwrap();
        assert_eq!(g.len(), 8);
        // oracle: set construction
        let ids: BTreeSet<&Value> = g.keys().iter().map(|k| &k[0]).collect();
        assert_eq!(ids.len(), 8);

        let c = fixture::customer().unwrap();
        let by_id = group_rows(&c, &["id_customer"]).unwrap();
        assert_eq!(by_id.len(), 9);
        assert!(by_id.groups().iter().all(|g| g.len() == 1));

        let one = Table::new(c.schema().clone(), vec![c.rows()[0].clone()]).unwrap();
        let g1 = group_rows(&one, &["income"]).unwrap();
        assert_eq!(g1.len(), 1);
        assert_eq!(g1.groups()[0].len(), 1);

        assert!(matches!(group_rows(&c, &[]), Err(Error::Plan(_))));
    }

    #[test]
    fn pivot_first_row() {
        let j = equijoin(
            &fixture::transactions().unwrap(),
            &fixture::customer().unwrap(),
            &[("id_customer", "id_customer")],
        )
        .unwrap();
        let p = pivot_items(&j, "id_transac", "item", &["income", "payment_mode"]).unwrap();
        let names: Vec<&str> = p.schema().names().collect();
        assert_eq!(
            names,
            ["id_transac", "a", "b", "c", "d", "e", "income", "payment_mode"]
        );
        let i = |n: i64| Value::Integer(n);
        assert_eq!(
            p.rows()[0],
            vec![txt("t1"), i(1), i(1), i(0), i(0), i(0), i(534), txt("credit_card")]
        );
        let t8 = p.rows().iter().find(|r| r[0] == txt("t8")).unwrap();
        // oracle: membership in the raw basket string
        let basket = "ABDE";
        for (k, item) in ["A", "B", "C", "D", "E"].iter().enumerate() {
            assert_eq!(t8[k + 1], i(basket.contains(item) as i64));
        }
    }

    #[test]
    fn pivot_single_item_and_non_constant_carry() {
        let s = Schema::new([
            ("tx", DataType::Text),
            ("item", DataType::Text),
            ("qty", DataType::Integer),
        ])
        .unwrap();
        let t = Table::new(s.clone(), vec![vec![txt("t"), txt("X"), Value::Integer(1)]]).unwrap();
        let p = pivot_items(&t, "tx", "item", &[]).unwrap();
        assert_eq!(p.schema().names().collect::<Vec<_>>(), ["tx", "x"]);
        assert!(pivot_items(&t, "tx", "item", &["qty"]).is_ok());
        assert_eq!(p.rows()[0][1], Value::Integer(1));

        let bad = Table::new(
            s,
            vec![
                vec![txt("t"), txt("X"), Value::Integer(1)],
                vec![txt("t"), txt("Y"), Value::Integer(2)],
            ],
        )
        .unwrap();
        let err = pivot_items(&bad, "tx", "item", &["qty"]).unwrap_err();
        assert!(matches!(err, Error::Pivot { ref key, .. } if key == "t"));
    }

    #[test]
    fn infer_types() {
        let s = infer_schema("a,b,c\n1,2.5,x\n,3,y\n").unwrap();
        let types: Vec<DataType> = s.columns().iter().map(|c| c.data_type).collect();
        assert_eq!(types, [DataType::Integer, DataType::Real, DataType::Text]);
    }

    #[test]
    fn join_count_matches_nested_loop() {
        let t = fixture::transactions().unwrap();
        let c = fixture::customer().unwrap();
        let j = equijoin(&t, &c, &[("id_customer", "id_customer")]).unwrap();
        let mut counts: HashMap<&Value, usize> = HashMap::new();
        for r in c.rows() {
            *counts.entry(&r[0]).or_default() += 1;
        }
        let expected: usize = t.rows().iter().map(|r| counts.get(&r[0]).copied().unwrap_or(0)).sum();
        assert_eq!(j.len(), expected);
    }
}
