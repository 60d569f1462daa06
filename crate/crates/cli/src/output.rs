use std::fmt::Write as _;

use minedb::engine::Outcome;
use minedb::relstore::{render_aligned, write_csv, Table};
use minedb::rulestore::RuleTable;
use minedb::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Aligned columns.
    Table,
    Csv,
    /// One rendered rule per line.
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (table, csv, text)")),
        }
    }
}

fn csv_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn table_csv(t: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(t, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 output").replace("\r\n", "\n")
}

pub fn rules(rt: &RuleTable, format: Format) -> String {
    match format {
        Format::Table => {
            let (header, rows) = rt.display_table();
            render_aligned(&header, &rows)
        }
        Format::Csv => {
            let (header, rows) = rt.display_table();
            csv_rows(&header, &rows)
        }
        Format::Text => rt.rules().iter().map(|r| rt.render(r) + "\n").collect(),
    }
}

pub fn outcome(o: &Outcome, format: Format) -> String {
    match (o, format) {
        (Outcome::Rules(rt), f) => rules(rt, f),
        (Outcome::Table(t), Format::Csv) => table_csv(t),
        (Outcome::Table(t), _) => t.to_string(),
        (Outcome::Message(m), Format::Csv) => format!("-- {m}\n"),
        (Outcome::Message(m), _) => format!("{m}\n"),
    }
}

/// The error, and for positioned errors the offending line with a caret.
pub fn error(e: &Error, source: &str) -> String {
    let mut out = format!("error: {e}\n");
    let Some(span) = e.span() else { return out };
    let Some(line) = source.lines().nth(span.line.saturating_sub(1)) else { return out };
    let gutter = span.line.to_string();
    let pad = " ".repeat(gutter.len());
    let _ = writeln!(out, "{pad} |");
    let _ = writeln!(out, "{gutter} | {line}");
    let lead: String = line
        .chars()
        .take(span.col.saturating_sub(1))
        .map(|c| if c == '\t' { '\t' } else { ' ' })
        .collect();
    let _ = writeln!(out, "{pad} | {lead}^");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use minedb::Span;

    #[test]
    fn caret_points_at_column() {
        let e = Error::Parse {
            span: Span::new(2, 5),
            message: "unexpected `;`".into(),
            expected: vec![],
        };
        let text = error(&e, "GETRULES(T)\nINTO;\n");
        assert_eq!(
            text,
            "error: parse error at 2:5: unexpected `;`\n  |\n2 | INTO;\n  |     ^\n"
        );
    }

    #[test]
    fn unpositioned_errors_have_no_caret() {
        let e = Error::Catalog("nope".into());
        assert_eq!(error(&e, "x"), "error: catalog error: nope\n");
    }
}
