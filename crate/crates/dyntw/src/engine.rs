//! The dynamic engine: maintains a simple graph, its support
//! hypergraph, and a rooted superbranch decomposition that is kept good
//! (downwards well-linked, degree-capped, depth-balanced) across edge
//! insertions and deletions. Updates are composed from leaf rotations
//! to the root, a leaf insert or delete, degree reduction, and
//! rebalancing, and every update reports the rotation sequence it
//! applied together with its charged cost.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::balance::{find_unbalanced_witness, phi_total, rebalance, BalanceVerdict, EngineParams};
use crate::hypergraph::{Eid, SimpleGraph, SupportHypergraph, Vid};
use crate::restructure::split_to_degree;
use crate::superbranch::{Applied, NodeId, Rotation, Sbd, SeqRecorder, TreeSpec};
use crate::DyntwError;

/// One leaf-towards-root rotation step's potential accounting:
/// Σ over the target hyperedges of depth(leaf) − log₂|L[parent]|,
/// before and after. Each step lowers the sum by at least 1.
#[derive(Debug, Clone, Serialize)]
pub struct RotateStepStat {
    pub phi_x_before: f64,
    pub phi_x_after: f64,
}

impl RotateStepStat {
    pub fn drop(&self) -> f64 {
        self.phi_x_before - self.phi_x_after
    }
}

/// Per-operation ledger entry; the JSON stats stream is a list of these.
#[derive(Debug, Clone, Serialize)]
pub struct OpStats {
    pub op: String,
    pub rotations: u64,
    /// ‖S‖: the summed per-rotation charges.
    pub size: u64,
    /// ‖S‖_T = ‖S‖ + |trace_T(S)|: the charged cost of the operation.
    pub size_with_trace: u64,
    pub trace_len: u64,
    pub phi_total: f64,
    pub rotate_steps: Vec<RotateStepStat>,
    pub balance_drops: Vec<f64>,
    /// Diagnostics (depth, degree, adhesion) are scanned only when
    /// enabled; they are observability, not charged work.
    pub depth: u64,
    pub max_degree: usize,
    pub max_adhesion: usize,
}

/// What one public update did: the exact rotation sequence (replayable
/// on a copy of the previous decomposition) and its touched regions.
#[derive(Debug, Clone)]
pub struct UpdateSummary {
    pub rotations: Vec<Rotation>,
    /// Prefix of the old tree covering everything the sequence touched.
    pub trace_t: BTreeSet<NodeId>,
    /// Prefix of the new tree covering everything touched; rebuild
    /// consumers recompute exactly these nodes.
    pub trace_t_prime: BTreeSet<NodeId>,
    pub size: u64,
    pub size_with_trace: u64,
    /// Engine generation after this update; consumers tracking the
    /// decomposition check it to detect skipped or repeated sequences.
    pub generation: u64,
}

pub struct DynEngine {
    params: EngineParams,
    d: Sbd,
    g: SimpleGraph,
    e_bot: Eid,
    e_vert: Vec<Eid>,
    pairs: BTreeMap<(u32, u32), Eid>,
    stats: Vec<OpStats>,
    diagnostics: bool,
    /// Counts successful mutating operations.
    generation: u64,
    /// Set when an update failed mid-flight (promise violation); the
    /// decomposition is no longer trustworthy and further updates refuse.
    poisoned: bool,
}

fn balanced_spec(leaves: &[Eid]) -> TreeSpec {
    if leaves.len() == 1 {
        TreeSpec::Leaf(leaves[0])
    } else {
        let mid = leaves.len() / 2;
        TreeSpec::Internal(vec![
            balanced_spec(&leaves[..mid]),
            balanced_spec(&leaves[mid..]),
        ])
    }
}

fn key(u: u32, v: u32) -> (u32, u32) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl DynEngine {
    /// Starts from an edgeless graph. The decomposition is the empty
    /// hyperedge as root with a balanced binary tree of the vertex
    /// hyperedges below it: every adhesion empty, every node balanced,
    /// potential linear in n.
    pub fn init_graph(g: &SimpleGraph, params: EngineParams) -> Result<DynEngine, DyntwError> {
        if g.n_edges() > 0 {
            return Err(DyntwError::invalid(
                "initialization requires an edgeless graph",
            ));
        }
        if g.n() == 0 {
            return Err(DyntwError::invalid(
                "a decomposition needs at least one vertex besides the empty hyperedge",
            ));
        }
        let su = SupportHypergraph::build(g);
        let e_vert: Vec<Eid> = (0..g.n() as u32).map(|v| su.vertex_edge(v)).collect();
        let spec = balanced_spec(&e_vert);
        let d = Sbd::assemble(su.hg, su.e_bot, spec)?;
        let mut eng = DynEngine {
            params,
            d,
            g: g.clone(),
            e_bot: su.e_bot,
            e_vert,
            pairs: BTreeMap::new(),
            stats: Vec::new(),
            diagnostics: true,
            generation: 0,
            poisoned: false,
        };
        let entry = eng.stats_entry("init", 0, 0, 0, Vec::new(), Vec::new());
        eng.stats.push(entry);
        Ok(eng)
    }

    pub fn init(n: u32, params: EngineParams) -> Result<DynEngine, DyntwError> {
        DynEngine::init_graph(&SimpleGraph::new(n as usize), params)
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn decomposition(&self) -> &Sbd {
        &self.d
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.g
    }

    pub fn n_vertices(&self) -> u32 {
        self.e_vert.len() as u32
    }

    /// The empty hyperedge anchoring the root.
    pub fn bottom_edge(&self) -> Eid {
        self.e_bot
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.pairs.contains_key(&key(u, v))
    }

    pub fn vertex_edge(&self, v: u32) -> Option<Eid> {
        self.e_vert.get(v as usize).copied()
    }

    pub fn pair_edge(&self, u: u32, v: u32) -> Option<Eid> {
        self.pairs.get(&key(u, v)).copied()
    }

    pub fn stats(&self) -> &[OpStats] {
        &self.stats
    }

    /// Number of successful mutating operations so far.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn stats_json(&self) -> String {
        serde_json::to_string_pretty(&self.stats).expect("stats serialize")
    }

    pub fn set_diagnostics(&mut self, on: bool) {
        self.diagnostics = on;
    }

    pub fn depth(&self) -> u64 {
        let mut max = 0;
        let mut stack = vec![(self.d.root(), 0u64)];
        while let Some((t, dep)) = stack.pop() {
            max = max.max(dep);
            for &c in self.d.children(t) {
                stack.push((c, dep + 1));
            }
        }
        max
    }

    pub fn max_adhesion(&self) -> usize {
        self.d
            .node_ids()
            .map(|t| self.d.adh(t).len())
            .max()
            .unwrap_or(0)
    }

    fn node_depth(&self, t: NodeId) -> u64 {
        let mut dep = 0;
        let mut cur = t;
        while let Some(p) = self.d.parent(cur) {
            dep += 1;
            cur = p;
        }
        dep
    }

    /// depth(L⁻¹(e)) − log₂|L[parent]|: the per-hyperedge rotation
    /// potential. Minimum 2 − log₂(‖G‖−1), at depth 2 under the
    /// heaviest possible parent.
    pub fn leaf_phi(&self, e: Eid) -> Result<f64, DyntwError> {
        let leaf = self
            .d
            .leaf_of(e)
            .ok_or_else(|| DyntwError::invalid(format!("{e} has no leaf")))?;
        let p = self
            .d
            .parent(leaf)
            .ok_or_else(|| DyntwError::invalid(format!("{e} sits at the root")))?;
        Ok(self.node_depth(leaf) as f64 - (self.d.nleaves(p) as f64).log2())
    }

    pub fn leaf_phi_set(&self, xs: &[Eid]) -> Result<f64, DyntwError> {
        xs.iter().map(|&e| self.leaf_phi(e)).sum()
    }

    fn check_live(&self) -> Result<(), DyntwError> {
        if self.poisoned {
            return Err(DyntwError::promise(
                "a previous update failed mid-flight; the decomposition is stale",
            ));
        }
        Ok(())
    }

    fn stats_entry(
        &self,
        op: &str,
        rotations: u64,
        size: u64,
        trace_len: u64,
        rotate_steps: Vec<RotateStepStat>,
        balance_drops: Vec<f64>,
    ) -> OpStats {
        let (depth, max_degree, max_adhesion) = if self.diagnostics {
            let md = self
                .d
                .node_ids()
                .map(|t| self.d.degree(t))
                .max()
                .unwrap_or(0);
            (self.depth(), md, self.max_adhesion())
        } else {
            (0, 0, 0)
        };
        OpStats {
            op: op.to_string(),
            rotations,
            size,
            size_with_trace: size + trace_len,
            trace_len,
            phi_total: phi_total(&self.d),
            rotate_steps,
            balance_drops,
            depth,
            max_degree,
            max_adhesion,
        }
    }

    fn validate_targets(&self, xs: &[Eid]) -> Result<(), DyntwError> {
        if xs.is_empty() || xs.len() > 3 {
            return Err(DyntwError::invalid("between 1 and 3 target hyperedges"));
        }
        let mut verts: BTreeSet<Vid> = BTreeSet::new();
        for &e in xs {
            let leaf = self
                .d
                .leaf_of(e)
                .ok_or_else(|| DyntwError::invalid(format!("{e} has no leaf")))?;
            if self.node_depth(leaf) < 2 {
                return Err(DyntwError::invalid(format!("{e} sits above depth 2")));
            }
            verts.extend(self.d.graph().vertex_set(e).iter().copied());
        }
        if verts.len() > 2 {
            return Err(DyntwError::invalid(
                "target hyperedges span more than 2 vertices",
            ));
        }
        Ok(())
    }

    /// Whether `e`'s leaf may take a rotation step: depth ≥ 3 and no
    /// target leaf strictly deeper under its grandparent.
    fn is_rotatable(&self, e: Eid, xs: &[Eid]) -> bool {
        let leaf = match self.d.leaf_of(e) {
            Some(l) => l,
            None => return false,
        };
        let dep = self.node_depth(leaf);
        if dep < 3 {
            return false;
        }
        let g = self.d.parent(self.d.parent(leaf).unwrap()).unwrap();
        for &x in xs {
            let lx = match self.d.leaf_of(x) {
                Some(l) => l,
                None => return false,
            };
            if self.node_depth(lx) > dep && self.is_under(lx, g) {
                return false;
            }
        }
        true
    }

    fn is_under(&self, node: NodeId, anc: NodeId) -> bool {
        let mut cur = Some(node);
        while let Some(x) = cur {
            if x == anc {
                return true;
            }
            cur = self.d.parent(x);
        }
        false
    }

    /// One rotation step for a rotatable target: contract the parents of
    /// all grandchild target leaves into the grandparent, then reduce
    /// its degree with the target leaves pinned together.
    fn rotate_step_inner(
        &mut self,
        e: Eid,
        xs: &[Eid],
        rec: &mut SeqRecorder,
    ) -> Result<RotateStepStat, DyntwError> {
        let phi_x_before = self.leaf_phi_set(xs)?;
        let leaf = self.d.leaf_of(e).expect("validated");
        let g = self
            .d
            .parent(self.d.parent(leaf).expect("depth ≥ 3"))
            .expect("depth ≥ 3");

        // target leaves under g sit at distance 1 or 2 by rotatability
        let mut near: Vec<NodeId> = Vec::new();
        let mut parents: BTreeSet<NodeId> = BTreeSet::new();
        for &x in xs {
            let lx = self.d.leaf_of(x).expect("validated");
            if !self.is_under(lx, g) {
                continue;
            }
            near.push(lx);
            let p = self.d.parent(lx).expect("leaf below g has a parent");
            if p != g {
                debug_assert_eq!(self.d.parent(p), Some(g), "rotatability caps the distance");
                parents.insert(p);
            }
        }

        let mut merged = g;
        for p in parents {
            match self.d.apply(&Rotation::Contract { s: merged, t: p }, rec)? {
                Applied::Contract { merged: m } => merged = m,
                _ => unreachable!(),
            }
        }
        debug_assert!(near.iter().all(|&lx| self.d.children(merged).contains(&lx)));
        let shallowest = split_to_degree(&mut self.d, merged, &near, rec)?;
        debug_assert!(near
            .iter()
            .all(|&lx| self.d.children(shallowest).contains(&lx)));

        let phi_x_after = self.leaf_phi_set(xs)?;
        Ok(RotateStepStat {
            phi_x_before,
            phi_x_after,
        })
    }

    fn rotate_to_root_inner(
        &mut self,
        xs: &[Eid],
        rec: &mut SeqRecorder,
    ) -> Result<Vec<RotateStepStat>, DyntwError> {
        let size = self.d.graph().size() as f64;
        let mut fuel = (self.leaf_phi_set(xs)? + (xs.len() as f64) * (size.log2() + 2.0))
            .ceil()
            .max(0.0) as u64
            + 8;
        let mut steps = Vec::new();
        loop {
            // deep targets, shallowest-grandparent-subtree first
            let mut cands: Vec<(usize, Eid)> = Vec::new();
            for &e in xs {
                let leaf = self.d.leaf_of(e).expect("validated");
                if self.node_depth(leaf) >= 3 {
                    let g = self.d.parent(self.d.parent(leaf).unwrap()).unwrap();
                    cands.push((self.d.nleaves(g), e));
                }
            }
            if cands.is_empty() {
                break;
            }
            cands.sort();
            let e = cands
                .iter()
                .map(|&(_, e)| e)
                .find(|&e| self.is_rotatable(e, xs))
                .expect("the deepest target is always rotatable");
            if fuel == 0 {
                return Err(DyntwError::promise(
                    "rotation failed to converge; the well-linkedness promise does not hold",
                ));
            }
            fuel -= 1;
            steps.push(self.rotate_step_inner(e, xs, rec)?);
        }
        debug_assert!(xs
            .iter()
            .all(|&e| self.node_depth(self.d.leaf_of(e).unwrap()) == 2));
        Ok(steps)
    }

    /// Public single rotation step; leaves the decomposition
    /// degree-capped but possibly unbalanced (no rebalance).
    pub fn rotate_step(&mut self, e: Eid, xs: &[Eid]) -> Result<RotateStepStat, DyntwError> {
        self.check_live()?;
        self.validate_targets(xs)?;
        if !xs.contains(&e) {
            return Err(DyntwError::invalid(
                "the rotated hyperedge must be a target",
            ));
        }
        if !self.is_rotatable(e, xs) {
            return Err(DyntwError::invalid(format!("{e} is not rotatable")));
        }
        let mut rec = SeqRecorder::new(&self.d);
        let stat = self.rotate_step_inner(e, xs, &mut rec);
        if stat.is_err() {
            self.poisoned = true;
        }
        let stat = stat?;
        self.generation += 1;
        let entry = self.stats_entry(
            "rotate-step",
            rec.rotations,
            rec.size,
            rec.trace_t().len() as u64,
            vec![stat.clone()],
            Vec::new(),
        );
        self.stats.push(entry);
        Ok(stat)
    }

    /// Brings every target hyperedge's leaf to depth 2. The result is
    /// degree-capped and well-linked but not rebalanced; the public
    /// update operations follow this with a rebalance.
    pub fn rotate_to_root(&mut self, xs: &[Eid]) -> Result<UpdateSummary, DyntwError> {
        self.check_live()?;
        self.validate_targets(xs)?;
        let mut rec = SeqRecorder::new(&self.d);
        let steps = self.rotate_to_root_inner(xs, &mut rec);
        if steps.is_err() {
            self.poisoned = true;
        }
        let steps = steps?;
        let summary = self.summarize(&rec);
        let entry = self.stats_entry(
            "rotate-to-root",
            rec.rotations,
            rec.size,
            rec.trace_t().len() as u64,
            steps,
            Vec::new(),
        );
        self.stats.push(entry);
        Ok(summary)
    }

    fn summarize(&mut self, rec: &SeqRecorder) -> UpdateSummary {
        self.generation += 1;
        UpdateSummary {
            rotations: rec.log.clone(),
            trace_t: rec.trace_t().clone(),
            trace_t_prime: rec.trace_t_prime(&self.d),
            size: rec.size,
            size_with_trace: rec.size_t(),
            generation: self.generation,
        }
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<UpdateSummary, DyntwError> {
        self.check_live()?;
        if u == v {
            return Err(DyntwError::invalid(format!("self-loop at {u}")));
        }
        let n = self.n_vertices();
        if u >= n || v >= n {
            return Err(DyntwError::invalid(format!(
                "vertex out of range: {u} {v} (n={n})"
            )));
        }
        if self.has_edge(u, v) {
            return Err(DyntwError::invalid(format!("duplicate edge {u}-{v}")));
        }
        let targets = [self.e_vert[u as usize], self.e_vert[v as usize]];

        let mut rec = SeqRecorder::new(&self.d);
        let result = self.add_edge_inner(u, v, &targets, &mut rec);
        match result {
            Ok((steps, drops)) => {
                let summary = self.summarize(&rec);
                let entry = self.stats_entry(
                    &format!("add {u} {v}"),
                    rec.rotations,
                    rec.size,
                    rec.trace_t().len() as u64,
                    steps,
                    drops,
                );
                self.stats.push(entry);
                Ok(summary)
            }
            Err(e) => {
                self.poisoned = true;
                Err(e)
            }
        }
    }

    fn add_edge_inner(
        &mut self,
        u: u32,
        v: u32,
        targets: &[Eid],
        rec: &mut SeqRecorder,
    ) -> Result<(Vec<RotateStepStat>, Vec<f64>), DyntwError> {
        let steps = self.rotate_to_root_inner(targets, rec)?;
        let r = self.d.children(self.d.root())[0];
        let applied = self.d.apply(
            &Rotation::InsertLeaf {
                t: r,
                x: vec![Vid(u), Vid(v)],
            },
            rec,
        )?;
        let Applied::InsertLeaf { edge, .. } = applied else {
            unreachable!()
        };
        self.pairs.insert(key(u, v), edge);
        self.g.add_edge(u, v)?;
        split_to_degree(&mut self.d, r, &[], rec)?;
        let prefix = rec.trace_t_prime(&self.d);
        let rep = rebalance(&mut self.d, &prefix, &self.params, rec)?;
        Ok((steps, rep.steps.iter().map(|s| s.drop()).collect()))
    }

    pub fn delete_edge(&mut self, u: u32, v: u32) -> Result<UpdateSummary, DyntwError> {
        self.check_live()?;
        let Some(e_uv) = self.pair_edge(u, v) else {
            return Err(DyntwError::invalid(format!("missing edge {u}-{v}")));
        };
        let targets = [self.e_vert[u as usize], self.e_vert[v as usize], e_uv];

        let mut rec = SeqRecorder::new(&self.d);
        let result = self.delete_edge_inner(u, v, e_uv, &targets, &mut rec);
        match result {
            Ok((steps, drops)) => {
                let summary = self.summarize(&rec);
                let entry = self.stats_entry(
                    &format!("del {u} {v}"),
                    rec.rotations,
                    rec.size,
                    rec.trace_t().len() as u64,
                    steps,
                    drops,
                );
                self.stats.push(entry);
                Ok(summary)
            }
            Err(e) => {
                self.poisoned = true;
                Err(e)
            }
        }
    }

    fn delete_edge_inner(
        &mut self,
        u: u32,
        v: u32,
        e_uv: Eid,
        targets: &[Eid],
        rec: &mut SeqRecorder,
    ) -> Result<(Vec<RotateStepStat>, Vec<f64>), DyntwError> {
        let steps = self.rotate_to_root_inner(targets, rec)?;
        // all three target leaves are siblings at depth 2 now, so the
        // parent keeps ≥ 2 children and the vertex hyperedges cover
        // the deleted pair's vertices
        let leaf = self.d.leaf_of(e_uv).expect("validated");
        self.d.apply(&Rotation::DeleteLeaf { leaf }, rec)?;
        self.pairs.remove(&key(u, v));
        self.g.remove_edge(u, v)?;
        let prefix = rec.trace_t_prime(&self.d);
        let rep = rebalance(&mut self.d, &prefix, &self.params, rec)?;
        Ok((steps, rep.steps.iter().map(|s| s.drop()).collect()))
    }

    /// Structural audit: decomposition internals, support bookkeeping,
    /// degree cap, balance of all non-root nodes, and the depth bound.
    /// Well-linkedness is not rechecked here (tests do that with the
    /// exact decision procedure).
    pub fn selfcheck(&self) -> Result<(), String> {
        self.d.audit()?;

        // support hypergraph matches the simple graph
        let hg = self.d.graph();
        let mut expected: Vec<Vec<Vid>> = vec![Vec::new()];
        for v in 0..self.n_vertices() {
            expected.push(vec![Vid(v)]);
        }
        for &(u, v) in self.pairs.keys() {
            expected.push(vec![Vid(u), Vid(v)]);
        }
        expected.sort();
        let mut actual: Vec<Vec<Vid>> = hg.edge_ids().map(|e| hg.vertex_set(e).to_vec()).collect();
        actual.sort();
        if expected != actual {
            return Err("support hypergraph does not match the graph".into());
        }
        if self.g.n_edges() != self.pairs.len() {
            return Err("pair bookkeeping out of sync".into());
        }
        for (&(u, v), &e) in self.pairs.iter() {
            if !self.g.has_edge(u, v) {
                return Err(format!("pair map has {u}-{v} but the graph does not"));
            }
            if hg.vertex_set(e) != [Vid(u.min(v)), Vid(u.max(v))] {
                return Err(format!("{e} does not carry {{{u},{v}}}"));
            }
        }

        // degree cap: the split guarantee in terms of k_wl, or the
        // override cap if that is larger
        let cap = self.params.degree_cap.max(
            1u64.checked_shl(2 * self.params.k_wl)
                .map_or(u64::MAX, |x| x.saturating_add(1)),
        );
        for t in self.d.node_ids() {
            if self.d.degree(t) as u64 > cap {
                return Err(format!("{t} exceeds the degree cap"));
            }
        }

        // balance everywhere below the root
        for t in self.d.node_ids() {
            if t != self.d.root()
                && find_unbalanced_witness(&self.d, t, self.params.balance_dist)
                    != BalanceVerdict::Balanced
            {
                return Err(format!("{t} is unbalanced"));
            }
        }

        // depth bound of balanced decompositions
        let m = self.d.graph().n_edges() as f64;
        if m >= 2.0 {
            let bound = 1.0 + (self.params.balance_dist as f64 + 1.0) * 2.0 * m.log2();
            if self.depth() as f64 > bound {
                return Err(format!("depth {} exceeds the bound {bound}", self.depth()));
            }
        }

        // adhesions within the promised well-linkedness bound
        for t in self.d.node_ids() {
            if self.d.adh(t).len() as u32 > self.params.k_wl {
                return Err(format!("adhesion at {t} exceeds the promise"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::well_linked::{test_well_linked, WlVerdict};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn small_params() -> EngineParams {
        EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap()
    }

    fn assert_dwl(d: &Sbd) {
        for t in d.node_ids().collect::<Vec<_>>() {
            if !d.is_leaf(t) {
                let set = d.leaves_under(t);
                assert!(
                    matches!(
                        test_well_linked(d.graph(), &set).unwrap(),
                        WlVerdict::WellLinked
                    ),
                    "leaves under {t} are not well-linked"
                );
            }
        }
    }

    #[test]
    fn init_shapes() {
        let params = small_params();
        assert!(DynEngine::init(0, params).is_err());

        let one = DynEngine::init(1, params).unwrap();
        assert_eq!(one.depth(), 1, "n=1 is the two-leaf tree");
        one.selfcheck().unwrap();

        let two = DynEngine::init(2, params).unwrap();
        assert_eq!(two.depth(), 2, "n=2 forces root, one internal, two leaves");
        two.selfcheck().unwrap();

        let eight = DynEngine::init(8, params).unwrap();
        eight.selfcheck().unwrap();
        assert_eq!(eight.depth(), 4);
        assert_eq!(phi_total(eight.decomposition()), 22.0);
        assert_dwl(eight.decomposition());

        let mut g = SimpleGraph::new(3);
        g.add_edge(0, 1).unwrap();
        assert!(
            DynEngine::init_graph(&g, params).is_err(),
            "non-edgeless init refused"
        );
    }

    #[test]
    fn init_potential_stays_linear() {
        let params = small_params();
        for n in [16u32, 64, 256, 1024, 4096] {
            let eng = DynEngine::init(n, params).unwrap();
            let ratio = phi_total(eng.decomposition()) / n as f64;
            assert!(ratio <= 6.0, "Φ/n = {ratio} at n = {n}");
        }
    }

    #[test]
    fn leaf_potential_minimum() {
        let params = small_params();
        let eng = DynEngine::init(8, params).unwrap();
        let size = eng.decomposition().graph().size() as f64;
        let floor = 2.0 - (size - 1.0).log2();
        for v in 0..8 {
            let p = eng.leaf_phi(eng.vertex_edge(v).unwrap()).unwrap();
            assert!(
                p >= floor - 1e-9,
                "leaf potential {p} below the floor {floor}"
            );
        }
    }

    #[test]
    fn first_edge_and_round_trip() {
        let params = small_params();
        let mut eng = DynEngine::init(2, params).unwrap();
        eng.add_edge(0, 1).unwrap();
        eng.selfcheck().unwrap();
        assert!(eng.has_edge(0, 1));
        assert_dwl(eng.decomposition());
        assert!(eng.add_edge(0, 1).is_err(), "duplicate refused");
        assert!(eng.add_edge(0, 0).is_err());
        assert!(eng.add_edge(0, 5).is_err());

        eng.delete_edge(0, 1).unwrap();
        eng.selfcheck().unwrap();
        assert!(!eng.has_edge(0, 1));
        assert!(eng.delete_edge(0, 1).is_err(), "missing edge refused");
        assert_dwl(eng.decomposition());
    }

    #[test]
    fn path_buildup_stays_good() {
        let params = small_params();
        let mut eng = DynEngine::init(6, params).unwrap();
        for v in 0..5 {
            eng.add_edge(v, v + 1).unwrap();
            eng.selfcheck().unwrap();
            assert_dwl(eng.decomposition());
        }
        // adhesions within 3·(tw+1) with tw = 1
        assert!(eng.max_adhesion() <= 6);
        let g = eng.graph().clone();
        assert_eq!(oracle::exact_treewidth(&g).unwrap(), 1);
    }

    #[test]
    fn rotate_to_root_brings_targets_to_depth_two() {
        let params = small_params();
        let mut eng = DynEngine::init(8, params).unwrap();
        for v in 0..7 {
            eng.add_edge(v, v + 1).unwrap();
        }
        // pick two vertex hyperedges far apart
        let xs = [eng.vertex_edge(0).unwrap(), eng.vertex_edge(7).unwrap()];
        let anc_before: BTreeSet<NodeId> = {
            let d = eng.decomposition();
            let mut set = BTreeSet::new();
            for &e in &xs {
                let mut cur = Some(d.leaf_of(e).unwrap());
                while let Some(x) = cur {
                    set.insert(x);
                    cur = d.parent(x);
                }
            }
            set
        };
        let summary = eng.rotate_to_root(&xs).unwrap();
        for &e in &xs {
            let d = eng.decomposition();
            let leaf = d.leaf_of(e).unwrap();
            assert_eq!(
                d.parent(d.parent(leaf).unwrap()),
                Some(d.root()),
                "{e} must sit at depth 2"
            );
        }
        assert!(
            summary.trace_t.is_subset(&anc_before),
            "the old-tree trace stays within the targets' ancestor chains"
        );
        eng.decomposition().audit().unwrap();
        assert_dwl(eng.decomposition());

        // already at depth 2: empty sequence
        let summary = eng.rotate_to_root(&xs).unwrap();
        assert!(summary.rotations.is_empty());
        assert_eq!(summary.size, 0);

        // a 3-vertex target set is refused
        let bad = [
            eng.vertex_edge(0).unwrap(),
            eng.vertex_edge(1).unwrap(),
            eng.vertex_edge(2).unwrap(),
        ];
        assert!(eng.rotate_to_root(&bad).is_err());
    }

    #[test]
    fn rotate_steps_drop_leaf_potential() {
        let params = small_params();
        let mut eng = DynEngine::init(16, params).unwrap();
        for v in 0..15 {
            eng.add_edge(v, v + 1).unwrap();
        }
        let xs = [eng.vertex_edge(3).unwrap(), eng.vertex_edge(12).unwrap()];
        eng.rotate_to_root(&xs).unwrap();
        let last = eng.stats().last().unwrap();
        assert!(
            !last.rotate_steps.is_empty(),
            "distant targets require rotation"
        );
        for step in &last.rotate_steps {
            assert!(
                step.drop() >= 1.0 - 1e-9,
                "rotation step dropped the target potential by only {}",
                step.drop()
            );
        }
    }

    #[test]
    fn replayed_sequences_reproduce_the_decomposition() {
        let params = small_params();
        let mut eng = DynEngine::init(6, params).unwrap();
        let script = [(0u32, 1u32), (1, 2), (2, 3), (3, 4), (4, 5), (0, 2), (2, 4)];
        for &(u, v) in &script {
            let before = eng.decomposition().clone();
            let summary = eng.add_edge(u, v).unwrap();
            let mut copy = before;
            let mut rec = SeqRecorder::new(&copy);
            copy.apply_sequence(&summary.rotations, &mut rec).unwrap();
            assert_eq!(
                copy.dump(),
                eng.decomposition().dump(),
                "replay diverged at {u}-{v}"
            );
        }
        let before = eng.decomposition().clone();
        let summary = eng.delete_edge(2, 3).unwrap();
        let mut copy = before;
        let mut rec = SeqRecorder::new(&copy);
        copy.apply_sequence(&summary.rotations, &mut rec).unwrap();
        assert_eq!(copy.dump(), eng.decomposition().dump());
    }

    #[test]
    fn identical_streams_are_deterministic() {
        let params = small_params();
        let mut a = DynEngine::init(7, params).unwrap();
        let mut b = DynEngine::init(7, params).unwrap();
        let script = [(0u32, 1u32), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (5, 6)];
        for &(u, v) in &script {
            a.add_edge(u, v).unwrap();
            b.add_edge(u, v).unwrap();
        }
        a.delete_edge(0, 2).unwrap();
        b.delete_edge(0, 2).unwrap();
        assert_eq!(a.decomposition().dump(), b.decomposition().dump());
        assert_eq!(a.stats_json(), b.stats_json());
    }

    #[test]
    fn random_updates_keep_every_invariant() {
        let params = small_params();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let n = 7u32;
        let mut eng = DynEngine::init(n, params).unwrap();
        // tw ≤ 2 universe: a fan plus a cycle chord pool
        let mut pool: Vec<(u32, u32)> = Vec::new();
        for v in 0..n - 1 {
            pool.push((v, v + 1));
        }
        for v in 0..n - 2 {
            pool.push((v, v + 2));
        }
        for round in 0..200 {
            let &(u, v) = pool.choose(&mut rng).unwrap();
            if eng.has_edge(u, v) {
                eng.delete_edge(u, v).unwrap();
            } else {
                eng.add_edge(u, v).unwrap();
            }
            if round % 10 == 0 {
                eng.selfcheck().unwrap();
                assert_dwl(eng.decomposition());
            }
        }
        eng.selfcheck().unwrap();
        assert_dwl(eng.decomposition());
        // exported adhesion bound against exact treewidth
        let tw = oracle::exact_treewidth(eng.graph()).unwrap();
        assert!(eng.max_adhesion() <= 3 * (tw + 1).max(1));
    }

    #[test]
    fn amortized_cost_scales_logarithmically() {
        let params = small_params();
        let mut costs = Vec::new();
        for exp in [6u32, 8] {
            let n = 1u32 << exp;
            let mut eng = DynEngine::init(n, params).unwrap();
            eng.set_diagnostics(false);
            let mut total = 0u64;
            for v in 0..n - 1 {
                let s = eng.add_edge(v, v + 1).unwrap();
                total += s.size_with_trace;
            }
            costs.push(total as f64 / (n - 1) as f64 / (n as f64).log2());
        }
        // per-op cost divided by log n stays within a constant band
        let ratio = costs[1] / costs[0];
        assert!(
            ratio < 3.0,
            "amortized cost per op grew superlogarithmically: {costs:?}"
        );
    }
}
