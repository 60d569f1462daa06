mod output;
mod repl;
mod session;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use minedb::dialects::Dialect;

use output::Format;
use session::Session;

#[derive(Parser)]
#[command(name = "minedb", version, about = "Mine association rules with MSQL, MINE RULE, DMQL or MineSQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// msql, minerule, dmql or minesql
    #[arg(long, short, default_value = "msql", value_parser = parse_dialect)]
    dialect: Dialect,
    /// Start without the bundled transactions/customer tables.
    #[arg(long)]
    empty: bool,
    /// Load a CSV file first: TABLE=PATH, or TABLE=PATH@ATTR to split ATTR into one row per item.
    #[arg(long = "load", value_name = "TABLE=PATH")]
    loads: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive console.
    Repl {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run a script file.
    Run {
        script: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Carry on after a failing statement.
        #[arg(long)]
        keep_going: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Read a CSV file and print it as the engine sees it.
    Load {
        csv: PathBuf,
        /// Split this attribute's text into one row per character.
        #[arg(long)]
        explode_items: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a script, then write one of its rule tables.
    Export {
        script: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Rule table to write.
        #[arg(long)]
        rules: String,
        /// Three files PATH.rules, PATH.bodies and PATH.heads instead of one CSV.
        #[arg(long, requires = "out")]
        normalized: bool,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dialect(s: &str) -> Result<Dialect, String> {
    s.parse()
}

/// An error in how the program was invoked rather than in a statement.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn session(common: &Common, format: Format) -> anyhow::Result<Session> {
    let mut s = Session::new(common.dialect, format, !common.empty)?;
    for spec in &common.loads {
        let Some((table, rest)) = spec.split_once('=') else {
            return Err(usage(format!("--load expects TABLE=PATH, found `{spec}`")));
        };
        let (path, explode) = match rest.rsplit_once('@') {
            Some((p, a)) => (p, Some(a)),
            None => (rest, None),
        };
        s.load(Path::new(path), table, explode)?;
    }
    Ok(s)
}

fn read_script(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let stdout = io::stdout();
    let stderr = io::stderr();
    match cli.command {
        Command::Repl { common, format } => {
            let mut s = session(&common, format)?;
            repl::run(&mut s, io::stdin().lock(), &mut stdout.lock(), &mut stderr.lock())?;
        }
        Command::Run {
            script,
            common,
            keep_going,
            format,
        } => {
            let text = read_script(&script)?;
            let mut s = session(&common, format)?;
            let failed = s.run(&text, keep_going, &mut stdout.lock(), &mut stderr.lock())?;
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Load {
            csv,
            explode_items,
            format,
        } => {
            let mut s = Session::new(Dialect::Msql, format, false)?;
            let name = csv
                .file_stem()
                .and_then(|n| n.to_str())
                .filter(|n| !n.is_empty())
                .unwrap_or("data")
                .to_string();
            s.load(&csv, &name, explode_items.as_deref())?;
            let t = &s.catalog.table(&name).context("table just loaded")?.table;
            let text = match format {
                Format::Csv => output::table_csv(t),
                _ => t.to_string(),
            };
            stdout.lock().write_all(text.as_bytes())?;
        }
        Command::Export {
            script,
            common,
            rules,
            normalized,
            out,
        } => {
            let text = read_script(&script)?;
            let mut s = session(&common, Format::Csv)?;
            let failed = s.run(&text, false, &mut io::sink(), &mut stderr.lock())?;
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
            match out {
                Some(path) => {
                    for p in s.export(&rules, &path, normalized)? {
                        eprintln!("wrote {p}");
                    }
                }
                None => {
                    let Some(rt) = s.catalog.rule_table(&rules) else {
                        bail!("no rule table `{rules}`");
                    };
                    stdout.lock().write_all(minedb::rulestore::export_csv(rt).as_bytes())?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
