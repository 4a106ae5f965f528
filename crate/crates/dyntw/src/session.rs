//! One engine, its exported decomposition, and any attached automaton
//! runs, advanced in lockstep: the shared state behind the CLI and the
//! C ABI.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::automata::{automaton_by_name, Answer, AutomatonRun};
use crate::engine::{DynEngine, OpStats, UpdateSummary};
use crate::oracle;
use crate::tree_decomp::{apply_description, build_full, AnnotatedTd, GlueState};
use crate::DyntwError;

pub struct Session {
    engine: DynEngine,
    glue: GlueState,
    td: AnnotatedTd,
    runs: BTreeMap<String, AutomatonRun>,
    /// Exported width after init and after each successful update;
    /// aligned with the engine's per-op ledger.
    widths: Vec<usize>,
}

/// Ledger row for the stats output: the engine's per-op entry joined
/// with the exported decomposition's width.
#[derive(Serialize)]
struct LedgerEntry<'a> {
    #[serde(flatten)]
    op: &'a OpStats,
    width: usize,
}

impl Session {
    pub fn new(n: u32, params: crate::balance::EngineParams) -> Result<Session, DyntwError> {
        let engine = DynEngine::init(n, params)?;
        let (glue, td) = GlueState::init(&engine)?;
        let widths = vec![td.width()];
        Ok(Session {
            engine,
            glue,
            td,
            runs: BTreeMap::new(),
            widths,
        })
    }

    /// Attaches a registered automaton; already-attached names are left
    /// alone.
    pub fn attach_automaton(&mut self, name: &str) -> Result<(), DyntwError> {
        if self.runs.contains_key(name) {
            return Ok(());
        }
        let aut = automaton_by_name(name)
            .ok_or_else(|| DyntwError::invalid(format!("unknown automaton {name:?}")))?;
        self.runs
            .insert(name.to_string(), AutomatonRun::init(self.td.clone(), aut));
        Ok(())
    }

    fn advance(&mut self, s: &UpdateSummary) -> Result<(), DyntwError> {
        let desc = self.glue.apply_engine_update(&self.engine, s)?;
        apply_description(&mut self.td, &desc)?;
        for run in self.runs.values_mut() {
            run.update(&desc)?;
        }
        self.widths.push(self.td.width());
        Ok(())
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<(), DyntwError> {
        let s = self.engine.add_edge(u, v)?;
        self.advance(&s)
    }

    pub fn delete_edge(&mut self, u: u32, v: u32) -> Result<(), DyntwError> {
        let s = self.engine.delete_edge(u, v)?;
        self.advance(&s)
    }

    /// Root answer of the named automaton, attaching it on first use.
    pub fn query(&mut self, name: &str) -> Result<Answer, DyntwError> {
        self.attach_automaton(name)?;
        Ok(self.runs[name].answer())
    }

    pub fn engine(&self) -> &DynEngine {
        &self.engine
    }

    pub fn td(&self) -> &AnnotatedTd {
        &self.td
    }

    pub fn width(&self) -> usize {
        self.td.width()
    }

    /// The engine's per-op ledger with the exported width joined in.
    pub fn stats_json(&self) -> String {
        debug_assert_eq!(self.engine.stats().len(), self.widths.len());
        let entries: Vec<LedgerEntry> = self
            .engine
            .stats()
            .iter()
            .zip(&self.widths)
            .map(|(op, &width)| LedgerEntry { op, width })
            .collect();
        serde_json::to_string_pretty(&entries).expect("stats serialize")
    }

    /// Every invariant checkable without the oracles' size caps: engine
    /// internals, the export against the decomposition axioms, the
    /// incremental export against a full rebuild, and each attached
    /// run's equations.
    pub fn selfcheck(&self) -> Result<(), String> {
        self.engine.selfcheck()?;
        oracle::validate_annotated_td(self.engine.graph(), &self.td)?;
        let full = build_full(&self.engine).map_err(|e| e.to_string())?;
        if full.canonical_text() != self.td.canonical_text() {
            return Err("incremental export diverged from a full rebuild".into());
        }
        for (name, run) in &self.runs {
            run.audit().map_err(|e| format!("{name}: {e}"))?;
            if run.td().canonical_text() != self.td.canonical_text() {
                return Err(format!(
                    "{name}: run decomposition diverged from the session's"
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::EngineParams;

    fn small_params() -> EngineParams {
        EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap()
    }

    #[test]
    fn session_tracks_answers_and_survives_selfcheck() {
        let mut s = Session::new(6, small_params()).unwrap();
        s.attach_automaton("mis").unwrap();
        assert_eq!(s.query("mis").unwrap(), Answer::Count(6));
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)] {
            s.add_edge(u, v).unwrap();
            s.selfcheck().unwrap();
        }
        assert_eq!(s.query("mis").unwrap(), Answer::Count(3));
        assert_eq!(s.query("color2").unwrap(), Answer::Feasible(true));
        assert_eq!(s.query("domset").unwrap(), Answer::Count(2));
        s.delete_edge(2, 3).unwrap();
        s.selfcheck().unwrap();
        assert_eq!(s.query("mis").unwrap(), Answer::Count(4));
        assert_eq!(s.query("domset").unwrap(), Answer::Count(2));
    }

    #[test]
    fn stats_ledger_parses_and_carries_width() {
        let mut s = Session::new(4, small_params()).unwrap();
        s.add_edge(0, 1).unwrap();
        s.add_edge(1, 2).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&s.stats_json()).unwrap();
        let rows = parsed.as_array().unwrap();
        assert_eq!(rows.len(), 3); // init + two ops
        for row in rows {
            assert!(row.get("width").is_some());
            assert!(row.get("phi_total").is_some());
            assert!(row.get("depth").is_some());
        }
        assert_eq!(rows[0]["op"], "init");
        assert_eq!(rows[1]["op"], "add 0 1");
    }

    #[test]
    fn bad_inputs_surface_as_invalid_arguments() {
        let mut s = Session::new(4, small_params()).unwrap();
        assert!(s.attach_automaton("nonsense").is_err());
        assert!(s.query("color1").is_err());
        s.add_edge(0, 1).unwrap();
        assert!(s.add_edge(0, 1).is_err());
        assert!(s.delete_edge(2, 3).is_err());
        assert!(s.add_edge(0, 9).is_err());
        // the failed calls left no half-applied state behind
        s.selfcheck().unwrap();
    }
}
