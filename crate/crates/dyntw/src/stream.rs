//! The text update-stream format: one operation per line.
//!
//! `+ u v` inserts an edge, `- u v` deletes it, `? <name>` asks the
//! named automaton for its root answer. `#` starts a comment and blank
//! lines are skipped. Vertices are 0-based integers; range checks are
//! the consumer's job since the parser does not know the graph size.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamOp {
    Add(u32, u32),
    Delete(u32, u32),
    Query(String),
}

/// Parses one line; comments and blank lines yield None.
pub fn parse_line(line: &str) -> Result<Option<StreamOp>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut parts = line.split_whitespace();
    let head = parts.next().expect("nonempty after trim");
    let op = match head {
        "+" | "-" => {
            let mut vertex = || -> Result<u32, String> {
                parts
                    .next()
                    .ok_or_else(|| format!("`{head}` needs two vertices"))?
                    .parse::<u32>()
                    .map_err(|_| "vertices are 0-based integers".to_string())
            };
            let u = vertex()?;
            let v = vertex()?;
            if head == "+" {
                StreamOp::Add(u, v)
            } else {
                StreamOp::Delete(u, v)
            }
        }
        "?" => {
            let name = parts
                .next()
                .ok_or_else(|| "`?` needs an automaton name".to_string())?;
            StreamOp::Query(name.to_string())
        }
        other => return Err(format!("unknown operation {other:?}")),
    };
    if parts.next().is_some() {
        return Err("trailing tokens".to_string());
    }
    Ok(Some(op))
}

/// Parses a whole stream, pairing each operation with its 1-based line
/// number; the first malformed line aborts with its number.
pub fn parse(text: &str) -> Result<Vec<(usize, StreamOp)>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(op)) => out.push((i + 1, op)),
            Ok(None) => {}
            Err(e) => return Err((i + 1, e)),
        }
    }
    Ok(out)
}
