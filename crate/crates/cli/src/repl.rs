use std::io::{self, BufRead, IsTerminal, Write};

use crate::session::{Flow, Session};

/// Reads statements until `;` and meta-commands (lines starting with `.`)
/// from `input`. Errors are reported and the loop goes on.
pub fn run(session: &mut Session, input: impl BufRead, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<()> {
    let interactive = io::stdin().is_terminal();
    let mut buffer = String::new();
    let prompt = |out: &mut dyn Write, pending: bool, dialect: &dyn std::fmt::Display| -> io::Result<()> {
        if interactive {
            if pending {
                write!(out, "{:>width$}> ", "...", width = dialect.to_string().len())?;
            } else {
                write!(out, "{dialect}> ")?;
            }
            out.flush()?;
        }
        Ok(())
    };
    if interactive {
        writeln!(out, "minedb {}; .help for commands", env!("CARGO_PKG_VERSION"))?;
    }
    prompt(out, false, &session.dialect)?;
    for line in input.lines() {
        let line = line?;
        if buffer.trim().is_empty() && line.trim_start().starts_with('.') {
            buffer.clear();
            match session.meta(line.trim(), out) {
                Ok(Flow::Quit) => return Ok(()),
                Ok(Flow::Continue) => {}
                Err(e) => writeln!(err, "error: {e:#}")?,
            }
        } else {
            buffer.push_str(&line);
            buffer.push('\n');
            if line.trim_end().ends_with(';') {
                session.run(&buffer, true, out, err)?;
                buffer.clear();
            }
        }
        prompt(out, !buffer.trim().is_empty(), &session.dialect)?;
    }
    if !buffer.trim().is_empty() {
        session.run(&buffer, true, out, err)?;
    }
    Ok(())
}
