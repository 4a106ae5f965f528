//! Batch driver: replay an edge-update stream against the dynamic
//! decomposition engine and print answers, the stats ledger, or the
//! final decomposition.
//!
//! Exit codes: 0 on success, 2 for malformed input (flags, stream
//! lines, range or duplicate-edge errors, all with the line number),
//! 3 when the treewidth promise is violated.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dyntw::balance::EngineParams;
use dyntw::session::Session;
use dyntw::stream::{parse, StreamOp};
use dyntw::DyntwError;

#[derive(Parser)]
#[command(
    name = "dyntw",
    version,
    about = "Dynamic tree decompositions over edge-update streams"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay an update stream, maintaining the decomposition and any
    /// queried automata.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Number of vertices; the stream may only mention 0..n.
    #[arg(long)]
    n: u32,
    /// Treewidth promise the stream keeps at all times.
    #[arg(long, conflicts_with = "kwl", required_unless_present = "kwl")]
    k: Option<u32>,
    /// Expert override: the internal well-linkedness bound directly.
    #[arg(long)]
    kwl: Option<u32>,
    /// Expert overrides as `degreeCap,balanceDist` (validated).
    #[arg(long, value_name = "degreeCap,balanceDist")]
    params: Option<String>,
    /// Update stream file; `-` reads stdin.
    #[arg(long)]
    stream: String,
    /// Automata to attach up front (`?` lines also attach on demand).
    #[arg(long = "automaton")]
    automata: Vec<String>,
    /// answers: one line per `?`. stats: the per-op JSON ledger.
    /// decomp: the final decomposition in canonical text form.
    #[arg(long, default_value = "answers", value_parser = ["answers", "stats", "decomp"])]
    emit: String,
    /// Audit every invariant after every operation.
    #[arg(long)]
    selfcheck: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(a) => run(a),
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn build_params(a: &RunArgs) -> Result<EngineParams, String> {
    let base = match (a.k, a.kwl) {
        (_, Some(kwl)) => EngineParams::from_wl_bound(kwl),
        (Some(k), None) => EngineParams::from_treewidth_promise(k).map_err(|e| e.to_string())?,
        (None, None) => unreachable!("clap requires one of --k/--kwl"),
    };
    let Some(spec) = &a.params else {
        return Ok(base);
    };
    let (cap, dist) = spec
        .split_once(',')
        .ok_or_else(|| "expected --params degreeCap,balanceDist".to_string())?;
    let cap: u64 = cap
        .trim()
        .parse()
        .map_err(|_| "degreeCap must be a positive integer".to_string())?;
    let dist: u64 = dist
        .trim()
        .parse()
        .map_err(|_| "balanceDist must be a positive integer".to_string())?;
    base.with_overrides(cap, dist).map_err(|e| e.to_string())
}

fn read_stream(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("reading stdin: {e}"))?;
        return Ok(text);
    }
    std::fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))
}

// Largest width an honest promise of treewidth k ever produces.
fn promised_width_bound(k: u32) -> u64 {
    9 * k as u64 + 8
}

fn run(a: RunArgs) -> ExitCode {
    let params = match build_params(&a) {
        Ok(p) => p,
        Err(msg) => return usage_error(&msg),
    };
    let text = match read_stream(&a.stream) {
        Ok(t) => t,
        Err(msg) => return usage_error(&msg),
    };
    let ops = match parse(&text) {
        Ok(o) => o,
        Err((line, msg)) => return usage_error(&format!("line {line}: {msg}")),
    };
    let mut session = match Session::new(a.n, params) {
        Ok(s) => s,
        Err(e) => return usage_error(&e.to_string()),
    };
    for name in &a.automata {
        if let Err(e) = session.attach_automaton(name) {
            return usage_error(&e.to_string());
        }
    }

    let mut answers: Vec<String> = Vec::new();
    for (line, op) in ops {
        let result = match op {
            StreamOp::Add(u, v) => session.add_edge(u, v),
            StreamOp::Delete(u, v) => session.delete_edge(u, v),
            StreamOp::Query(name) => session
                .query(&name)
                .map(|ans| answers.push(ans.to_string())),
        };
        match result {
            Ok(()) => {}
            Err(DyntwError::InvalidArgument(msg)) => {
                return usage_error(&format!("line {line}: {msg}"));
            }
            Err(DyntwError::PromiseViolated(msg)) => {
                eprintln!("error: line {line}: {msg}");
                return ExitCode::from(3);
            }
        }
        // under an honest promise the exported width never exceeds
        // 9k+8; exceeding it means the promise did not hold
        if let Some(k) = a.k {
            if session.width() as u64 > promised_width_bound(k) {
                eprintln!(
                    "error: line {line}: width {} exceeds the promised bound {}",
                    session.width(),
                    promised_width_bound(k)
                );
                return ExitCode::from(3);
            }
        }
        if a.selfcheck {
            if let Err(msg) = session.selfcheck() {
                eprintln!("error: line {line}: selfcheck: {msg}");
                return ExitCode::FAILURE;
            }
        }
    }

    match a.emit.as_str() {
        "answers" => {
            for ans in answers {
                println!("{ans}");
            }
        }
        "stats" => println!("{}", session.stats_json()),
        "decomp" => print!("{}", session.td().canonical_text()),
        _ => unreachable!("clap validates --emit"),
    }
    ExitCode::SUCCESS
}

#[cfg(test)]
mod tests {
    use super::*;

    // Triggering the bound end to end needs treewidth 18 inside the
    // promise-k-1 run; absorbing such a graph takes minutes because the
    // linkedness tests are exponential in the set size, so the threshold
    // is pinned here and the exit-code mapping is covered by the
    // integration tests for errors the engine does raise cheaply.
    #[test]
    fn width_bound_matches_the_promise_guarantee() {
        assert_eq!(promised_width_bound(1), 17);
        assert_eq!(promised_width_bound(2), 26);
        assert_eq!(promised_width_bound(3), 35);
        // a k-promise run derives its linkedness bound as 3k+3, and an
        // honest export stays within 3 * (3k+3) - 1 = 9k+8
        for k in 1..=8u32 {
            let kwl = 3 * k as u64 + 3;
            assert_eq!(promised_width_bound(k), 3 * kwl - 1);
        }
        assert!(9 > promised_width_bound(0));
        assert!(18 > promised_width_bound(1));
        assert!(17 <= promised_width_bound(1));
    }
}
