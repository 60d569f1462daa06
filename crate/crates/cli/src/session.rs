use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context};
use minedb::catalog::{Catalog, Dataset};
use minedb::dialects::{parse_script, Dialect};
use minedb::engine::run_statement;
use minedb::relstore::{infer_schema, parse_csv, DataType, IngestOptions, Schema};
use minedb::rulestore::{export_csv, export_normalized};

use crate::output::{self, Format};

pub struct Session {
    pub catalog: Catalog,
    pub dialect: Dialect,
    pub format: Format,
}

/// What the REPL does after a meta-command.
#[derive(Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Quit,
}

const HELP: &str = "\
.dialect [msql|minerule|dmql|minesql]   show or switch the dialect
.load <csv> as <table> [explode-items=<attr>]
.tables                                 list tables, rule tables and hierarchies
.rules <name>                           show a stored rule table
.format <table|csv|text>                output format
.export <rules> <path> [normalized]     write a rule table to disk
.help
.quit
";

impl Session {
    pub fn new(dialect: Dialect, format: Format, fixture: bool) -> anyhow::Result<Self> {
        let catalog = if fixture { Catalog::with_fixture()? } else { Catalog::new() };
        Ok(Session {
            catalog,
            dialect,
            format,
        })
    }

    /// Runs every statement of `text`, printing results to `out` and
    /// errors and warnings to `err`. Returns how many statements failed.
    pub fn run(&mut self, text: &str, keep_going: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<usize> {
        let statements = match parse_script(text, self.dialect) {
            Ok(s) => s,
            Err(e) => {
                err.write_all(output::error(&e, text).as_bytes())?;
                return Ok(1);
            }
        };
        let mut failed = 0;
        let mut first = true;
        for s in statements {
            match s.and_then(|s| run_statement(&s, &mut self.catalog)) {
                Ok(done) => {
                    for w in &done.warnings {
                        writeln!(err, "warning: {w}")?;
                    }
                    if !first && self.format != Format::Text {
                        writeln!(out)?;
                    }
                    first = false;
                    out.write_all(output::outcome(&done.outcome, self.format).as_bytes())?;
                }
                Err(e) => {
                    failed += 1;
                    err.write_all(output::error(&e, text).as_bytes())?;
                    if !keep_going {
                        break;
                    }
                }
            }
        }
        Ok(failed)
    }

    pub fn load(&mut self, path: &Path, table: &str, explode: Option<&str>) -> anyhow::Result<usize> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut schema = infer_schema(&text)?;
        if let Some(attr) = explode {
            // Item strings like "123" must still be split, not read as numbers.
            let attr = attr.to_ascii_lowercase();
            schema = Schema::new(schema.columns().iter().map(|c| {
                let ty = if c.name == attr { DataType::Text } else { c.data_type };
                (c.name.clone(), ty)
            }))?;
        }
        let options = match explode {
            Some(a) => IngestOptions::explode(a),
            None => IngestOptions::default(),
        };
        let t = parse_csv(&text, &schema, &options)?;
        let rows = t.len();
        self.catalog.put_table(table, Dataset::plain(t), false)?;
        Ok(rows)
    }

    pub fn export(&self, rules: &str, path: &Path, normalized: bool) -> anyhow::Result<Vec<String>> {
        let rt = self
            .catalog
            .rule_table(rules)
            .with_context(|| format!("no rule table `{rules}`"))?;
        if !normalized {
            std::fs::write(path, export_csv(rt)).with_context(|| format!("writing {}", path.display()))?;
            return Ok(vec![path.display().to_string()]);
        }
        let n = export_normalized(rt);
        let mut written = Vec::new();
        for (suffix, t) in [("rules", &n.rules), ("bodies", &n.bodies), ("heads", &n.heads)] {
            let mut p = path.as_os_str().to_owned();
            p.push(format!(".{suffix}"));
            std::fs::write(&p, output::table_csv(t)).with_context(|| format!("writing {}", p.to_string_lossy()))?;
            written.push(p.to_string_lossy().into_owned());
        }
        Ok(written)
    }

    pub fn meta(&mut self, line: &str, out: &mut dyn Write) -> anyhow::Result<Flow> {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [".quit"] | [".exit"] => return Ok(Flow::Quit),
            [".help"] => out.write_all(HELP.as_bytes())?,
            [".dialect"] => writeln!(out, "{}", self.dialect)?,
            [".dialect", d] => {
                self.dialect = d.parse().map_err(anyhow::Error::msg)?;
                writeln!(out, "dialect {}", self.dialect)?;
            }
            [".format", f] => {
                self.format = f.parse().map_err(anyhow::Error::msg)?;
            }
            [".load", path, "as", table, rest @ ..] => {
                let explode = match rest {
                    [] => None,
                    [opt] => match opt.strip_prefix("explode-items=") {
                        Some(a) if !a.is_empty() => Some(a),
                        _ => bail!("expected explode-items=<attr>, found `{opt}`"),
                    },
                    _ => bail!("usage: .load <csv> as <table> [explode-items=<attr>]"),
                };
                let n = self.load(Path::new(path), table, explode)?;
                writeln!(out, "loaded {n} rows into `{}`", table.to_ascii_lowercase())?;
            }
            [".tables"] => {
                for t in self.catalog.table_names() {
                    writeln!(out, "table      {t}")?;
                }
                for r in self.catalog.rule_table_names() {
                    writeln!(out, "rules      {r}")?;
                }
                for h in self.catalog.hierarchy_names() {
                    writeln!(out, "hierarchy  {h}")?;
                }
            }
            [".rules", name] => {
                let rt = self
                    .catalog
                    .rule_table(name)
                    .with_context(|| format!("no rule table `{name}`"))?;
                out.write_all(output::rules(rt, self.format).as_bytes())?;
            }
            [".export", rules, path] => {
                for p in self.export(rules, Path::new(path), false)? {
                    writeln!(out, "wrote {p}")?;
                }
            }
            [".export", rules, path, "normalized"] => {
                for p in self.export(rules, Path::new(path), true)? {
                    writeln!(out, "wrote {p}")?;
                }
            }
            _ => bail!("unknown command `{line}` (try .help)"),
        }
        Ok(Flow::Continue)
    }
}
