//! Depth control for the maintained decomposition: the potential
//! function, unbalance detection, the single balancing step (contract a
//! path, split it back under a degree budget), and the prefix-driven
//! loop that removes every unbalanced node.

use std::collections::BTreeSet;

use crate::restructure::split_to_degree;
use crate::superbranch::{Applied, NodeId, Rotation, Sbd, SeqRecorder};
use crate::DyntwError;

/// Engine-wide balance parameters. `degree_cap` and `balance_dist`
/// default to 2^{2·k_wl}+1 and 2^{2·k_wl+1}; overrides for testable
/// small-scale balancing must keep balance_dist ≥ 2·(degree_cap−1),
/// which the potential-drop argument needs, and are flagged.
#[derive(Debug, Clone, Copy)]
pub struct EngineParams {
    pub k_wl: u32,
    pub degree_cap: u64,
    pub balance_dist: u64,
    pub conforming: bool,
}

fn pow2(e: u32) -> u64 {
    1u64.checked_shl(e).unwrap_or(u64::MAX)
}

impl EngineParams {
    /// From the public treewidth promise: wl(su(G)) ≤ 3·(k+1).
    pub fn from_treewidth_promise(k: u32) -> Result<EngineParams, DyntwError> {
        if k < 1 {
            return Err(DyntwError::invalid("treewidth promise must be ≥ 1"));
        }
        Ok(EngineParams::from_wl_bound(3 * k + 3))
    }

    /// Expert entry point taking the well-linkedness bound directly,
    /// floored at 3 as the main construction assumes.
    pub fn from_wl_bound(k_wl: u32) -> EngineParams {
        let k_wl = k_wl.max(3);
        EngineParams {
            k_wl,
            degree_cap: pow2(2 * k_wl).saturating_add(1),
            balance_dist: pow2(2 * k_wl + 1),
            conforming: true,
        }
    }

    pub fn with_overrides(
        self,
        degree_cap: u64,
        balance_dist: u64,
    ) -> Result<EngineParams, DyntwError> {
        if degree_cap < 3 {
            return Err(DyntwError::invalid(
                "degree cap below 3 forbids internal nodes",
            ));
        }
        if balance_dist < 2 * (degree_cap - 1) {
            return Err(DyntwError::invalid(format!(
                "balance distance {balance_dist} below 2·(degreeCap−1) = {} breaks the \
                 potential-drop argument",
                2 * (degree_cap - 1)
            )));
        }
        Ok(EngineParams {
            degree_cap,
            balance_dist,
            conforming: false,
            ..self
        })
    }
}

/// (Δ−1)·log₂|L[t]| as a pure formula.
pub fn phi_value(delta: usize, nleaves: usize) -> f64 {
    (delta as f64 - 1.0) * (nleaves as f64).log2()
}

/// Potential of one internal node.
pub fn phi(d: &Sbd, t: NodeId) -> Result<f64, DyntwError> {
    if d.is_leaf(t) {
        return Err(DyntwError::invalid(format!(
            "{t} is a leaf, leaves carry no potential"
        )));
    }
    Ok(phi_value(d.degree(t), d.nleaves(t)))
}

/// Φ(T): sum over internal nodes, in node-id order for determinism.
pub fn phi_total(d: &Sbd) -> f64 {
    d.node_ids()
        .filter(|&t| !d.is_leaf(t))
        .map(|t| phi_value(d.degree(t), d.nleaves(t)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceVerdict {
    Balanced,
    /// Descendant at depth exactly `balance_dist` below with
    /// |L[s]| ≥ (2/3)·|L[t]|.
    Witness(NodeId),
}

/// Greedy unbalance test: descend `balance_dist` steps along the child
/// with the most leaf descendants (ties to the smallest id). Complete
/// because two children of one node cannot both hold ≥ 2/3 of the
/// leaves, so any witness path is the greedy path.
pub fn find_unbalanced_witness(d: &Sbd, t: NodeId, balance_dist: u64) -> BalanceVerdict {
    let goal = 2 * d.nleaves(t);
    let mut cur = t;
    for _ in 0..balance_dist {
        let Some(&next) = d
            .children(cur)
            .iter()
            .max_by_key(|&&c| (d.nleaves(c), std::cmp::Reverse(c.0)))
        else {
            return BalanceVerdict::Balanced;
        };
        cur = next;
        // leaf counts only shrink downwards; stop as soon as 2/3 is gone
        if 3 * d.nleaves(cur) < goal {
            return BalanceVerdict::Balanced;
        }
    }
    BalanceVerdict::Witness(cur)
}

#[derive(Debug, Clone)]
pub struct BalanceStepReport {
    pub witness: NodeId,
    pub shallowest: NodeId,
    /// Nodes replacing the contracted path, in DFS preorder from the
    /// shallowest: what a balancing loop re-examines.
    pub pushable: Vec<NodeId>,
    /// Σ Φ over the contracted path, before any rotation.
    pub phi_before_local: f64,
    /// Σ Φ over the replacement nodes afterwards. Nodes outside the two
    /// sums keep their degree and leaf count, so the global Φ moves by
    /// exactly the local difference.
    pub phi_after_local: f64,
}

impl BalanceStepReport {
    pub fn drop(&self) -> f64 {
        self.phi_before_local - self.phi_after_local
    }
}

/// One balancing step at an unbalanced non-root node: contract the
/// `balance_dist`-node path towards the witness into one node, then
/// split that node back under the degree budget with the witness pinned
/// as a child of the shallowest result.
pub fn balance_step(
    d: &mut Sbd,
    t: NodeId,
    params: &EngineParams,
    rec: &mut SeqRecorder,
) -> Result<BalanceStepReport, DyntwError> {
    if !d.exists(t) || d.is_leaf(t) {
        return Err(DyntwError::invalid(format!(
            "{t} is not a live internal node"
        )));
    }
    if d.parent(t).is_none() {
        return Err(DyntwError::invalid("the root is exempt from balancing"));
    }
    let BalanceVerdict::Witness(s) = find_unbalanced_witness(d, t, params.balance_dist) else {
        return Err(DyntwError::invalid(format!("{t} is already balanced")));
    };

    // the path t, ..., parent(s): balance_dist nodes, all internal
    let mut path = Vec::with_capacity(params.balance_dist as usize);
    let mut cur = s;
    for _ in 0..params.balance_dist {
        cur = d.parent(cur).expect("witness lies at full depth");
        path.push(cur);
    }
    debug_assert_eq!(*path.last().unwrap(), t);
    path.reverse();

    let phi_before_local: f64 = path
        .iter()
        .map(|&x| phi(d, x).expect("path is internal"))
        .sum();

    let step_first = d.next_node_id();
    let mut merged = path[0];
    for &next in &path[1..] {
        match d.apply(&Rotation::Contract { s: merged, t: next }, rec)? {
            Applied::Contract { merged: m } => merged = m,
            _ => unreachable!("contract rotation yields a contract result"),
        }
    }
    let shallowest = split_to_degree(d, merged, &[s], rec)?;
    debug_assert!(
        d.children(shallowest).contains(&s),
        "pin lands at the shallowest node"
    );

    // replacement nodes: everything created during this step that is
    // still alive, a connected subtree under `shallowest`
    let member = |u: NodeId| u == shallowest || u.0 >= step_first;
    let mut pushable = Vec::new();
    let mut stack = vec![shallowest];
    while let Some(u) = stack.pop() {
        pushable.push(u);
        for &c in d.children(u).iter().rev() {
            if member(c) && !d.is_leaf(c) {
                stack.push(c);
            }
        }
    }
    let phi_after_local: f64 = pushable
        .iter()
        .map(|&x| phi(d, x).expect("replacements are internal"))
        .sum();

    Ok(BalanceStepReport {
        witness: s,
        shallowest,
        pushable,
        phi_before_local,
        phi_after_local,
    })
}

#[derive(Debug, Default)]
pub struct RebalanceReport {
    pub iterations: u64,
    pub steps: Vec<BalanceStepReport>,
}

/// Removes every unbalanced node, given a prefix `r` guaranteed by the
/// caller to contain all of them. Nodes are processed deepest-first off
/// a stack seeded by a preorder walk of `r`; each balancing step's
/// replacement nodes are pushed back for re-examination. The root is
/// exempt; leaves are trivially balanced.
pub fn rebalance(
    d: &mut Sbd,
    r: &BTreeSet<NodeId>,
    params: &EngineParams,
    rec: &mut SeqRecorder,
) -> Result<RebalanceReport, DyntwError> {
    for &u in r {
        if !d.exists(u) {
            return Err(DyntwError::invalid(format!(
                "{u} in the prefix does not exist"
            )));
        }
        if let Some(p) = d.parent(u) {
            if !r.contains(&p) {
                return Err(DyntwError::invalid(format!(
                    "{u} is in the prefix but its parent {p} is not"
                )));
            }
        }
    }

    let mut stack: Vec<NodeId> = Vec::with_capacity(r.len());
    if !r.is_empty() {
        let mut walk = vec![d.root()];
        while let Some(u) = walk.pop() {
            stack.push(u);
            for &c in d.children(u).iter().rev() {
                if r.contains(&c) {
                    walk.push(c);
                }
            }
        }
    }

    let mut report = RebalanceReport::default();
    #[cfg(debug_assertions)]
    let mut popped: BTreeSet<NodeId> = BTreeSet::new();
    while let Some(t) = stack.pop() {
        report.iterations += 1;
        if !d.exists(t) {
            debug_assert!(false, "stack discipline keeps entries alive");
            continue;
        }
        #[cfg(debug_assertions)]
        {
            // a node pops before any of its ancestors
            let mut cur = d.parent(t);
            while let Some(p) = cur {
                debug_assert!(!popped.contains(&p), "{p} popped before its descendant {t}");
                cur = d.parent(p);
            }
            popped.insert(t);
        }
        if t == d.root() || d.is_leaf(t) {
            continue;
        }
        if let BalanceVerdict::Witness(_) = find_unbalanced_witness(d, t, params.balance_dist) {
            let step = balance_step(d, t, params, rec)?;
            stack.extend(step.pushable.iter().copied());
            #[cfg(debug_assertions)]
            for u in &step.pushable {
                popped.remove(u);
            }
            report.steps.push(step);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{Eid, Hypergraph, SimpleGraph, SupportHypergraph, Vid};
    use crate::superbranch::TreeSpec;
    use crate::well_linked::{test_well_linked, WlVerdict};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    #[test]
    fn params_defaults_and_overrides() {
        let p = EngineParams::from_treewidth_promise(1).unwrap();
        assert_eq!(p.k_wl, 6);
        assert_eq!(p.degree_cap, (1 << 12) + 1);
        assert_eq!(p.balance_dist, 1 << 13);
        assert!(p.conforming);

        let p = EngineParams::from_wl_bound(1);
        assert_eq!(p.k_wl, 3, "floored at 3");
        assert_eq!(p.degree_cap, 65);
        assert_eq!(p.balance_dist, 128);

        let o = p.with_overrides(9, 16).unwrap();
        assert!(!o.conforming);
        assert_eq!(o.degree_cap, 9);
        assert_eq!(o.balance_dist, 16);
        assert!(p.with_overrides(9, 15).is_err());
        assert!(p.with_overrides(2, 100).is_err());
        assert!(EngineParams::from_treewidth_promise(0).is_err());

        // enormous bounds saturate
        let big = EngineParams::from_wl_bound(40);
        assert_eq!(big.degree_cap, u64::MAX);
    }

    fn disjoint_singletons(n: u32) -> (Hypergraph, Eid, Vec<Eid>) {
        let mut hg = Hypergraph::new();
        let root = hg.add_edge(&[]);
        let leaves = (0..n).map(|v| hg.add_edge(&[Vid(v)])).collect();
        (hg, root, leaves)
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

    #[test]
    fn phi_formula() {
        assert_eq!(phi_value(2, 2), 1.0);
        assert_eq!(phi_value(3, 4), 4.0);

        let (hg, root, leaves) = disjoint_singletons(8);
        let d = Sbd::assemble(hg, root, balanced_spec(&leaves)).unwrap();
        // balanced binary over 8 leaves: one (Δ−1)=2 node per subtree,
        // leaf counts 8,4,4,2,2,2,2 → 2·(3+2+2+1+1+1+1) = 22
        assert_eq!(phi_total(&d), 22.0);
        let top = d.children(d.root())[0];
        assert_eq!(phi(&d, top).unwrap(), 6.0);
        assert!(phi(&d, d.root()).is_err(), "leaves have no potential");
        // every internal node carries at least 1
        for t in d.node_ids() {
            if !d.is_leaf(t) {
                assert!(phi(&d, t).unwrap() >= 1.0);
            }
        }
    }

    fn depths(d: &Sbd) -> BTreeMap<NodeId, u64> {
        let mut out = BTreeMap::new();
        let mut stack = vec![(d.root(), 0)];
        while let Some((u, dep)) = stack.pop() {
            out.insert(u, dep);
            for &c in d.children(u) {
                stack.push((c, dep + 1));
            }
        }
        out
    }

    fn brute_unbalanced(d: &Sbd, t: NodeId, bd: u64) -> bool {
        let dep = depths(d);
        let mut stack = vec![t];
        let mut found = false;
        while let Some(u) = stack.pop() {
            if dep[&u] >= dep[&t] + bd && 3 * d.nleaves(u) >= 2 * d.nleaves(t) {
                found = true;
            }
            stack.extend(d.children(u).iter().copied());
        }
        found
    }

    fn random_spec(rng: &mut ChaCha8Rng, leaves: &[Eid]) -> TreeSpec {
        if leaves.len() == 1 {
            return TreeSpec::Leaf(leaves[0]);
        }
        let groups = rng.gen_range(2..=3.min(leaves.len()));
        let mut shuffled = leaves.to_vec();
        shuffled.shuffle(rng);
        let mut parts: Vec<Vec<Eid>> = vec![Vec::new(); groups];
        for (i, e) in shuffled.into_iter().enumerate() {
            parts[i % groups].push(e);
        }
        TreeSpec::Internal(parts.iter().map(|p| random_spec(rng, p)).collect())
    }

    #[test]
    fn witness_search_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..60 {
            let n = rng.gen_range(2..=8u32);
            let (hg, root, leaves) = disjoint_singletons(n);
            let spec = random_spec(&mut rng, &leaves);
            let d = Sbd::assemble(hg, root, spec).unwrap();
            for bd in 1..=3u64 {
                for t in d.node_ids().collect::<Vec<_>>() {
                    let greedy = find_unbalanced_witness(&d, t, bd);
                    let brute = brute_unbalanced(&d, t, bd);
                    match greedy {
                        BalanceVerdict::Balanced => {
                            assert!(!brute, "greedy missed a witness below {t} at bd={bd}")
                        }
                        BalanceVerdict::Witness(s) => {
                            assert!(brute);
                            let dep = depths(&d);
                            assert_eq!(dep[&s], dep[&t] + bd, "witness at exact distance");
                            assert!(3 * d.nleaves(s) >= 2 * d.nleaves(t));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shallow_trees_are_balanced() {
        let (hg, root, leaves) = disjoint_singletons(4);
        let d = Sbd::assemble(hg, root, balanced_spec(&leaves)).unwrap();
        let top = d.children(d.root())[0];
        assert_eq!(
            find_unbalanced_witness(&d, top, 64),
            BalanceVerdict::Balanced
        );
    }

    /// Chain of `depth` internal nodes under the root's child, each
    /// shedding one singleton leaf, with `bulk` extra leaves at the
    /// bottom: the classic unbalanced caterpillar.
    fn caterpillar(depth: usize, bulk: u32) -> Sbd {
        let n = depth as u32 + bulk;
        let (hg, root, leaves) = disjoint_singletons(n);
        let mut spec =
            TreeSpec::Internal(leaves[depth..].iter().map(|&e| TreeSpec::Leaf(e)).collect());
        for i in (0..depth).rev() {
            spec = TreeSpec::Internal(vec![TreeSpec::Leaf(leaves[i]), spec]);
        }
        Sbd::assemble(hg, root, spec).unwrap()
    }

    #[test]
    fn balance_step_drops_potential() {
        let params = EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap();
        // nl along the chain: 16, 15, 14, 13, 12 — the depth-4 node keeps
        // 12 ≥ (2/3)·16 leaves
        let mut d = caterpillar(4, 12);
        let t = d.children(d.root())[0];
        assert!(matches!(
            find_unbalanced_witness(&d, t, params.balance_dist),
            BalanceVerdict::Witness(_)
        ));
        let phi_global_before = phi_total(&d);
        let mut rec = SeqRecorder::new(&d);
        let step = balance_step(&mut d, t, &params, &mut rec).unwrap();
        d.audit().unwrap();
        assert!(
            step.drop() >= 1.0 - 1e-9,
            "potential dropped by {} only",
            step.drop()
        );
        // local sums account for the global change exactly
        let phi_global_after = phi_total(&d);
        assert!(
            (phi_global_before - phi_global_after - step.drop()).abs() < 1e-6,
            "local accounting must match the global potential move"
        );
        assert!(d.children(step.shallowest).contains(&step.witness));
        // the original path is exactly the touched part of the old tree
        assert_eq!(rec.v_t().len(), params.balance_dist as usize);
        assert!(rec.v_t().contains(&t));
        // downwards well-linkedness survives (decided exactly)
        for u in d.node_ids().collect::<Vec<_>>() {
            if !d.is_leaf(u) {
                let set = d.leaves_under(u);
                assert!(matches!(
                    test_well_linked(d.graph(), &set).unwrap(),
                    WlVerdict::WellLinked
                ));
            }
        }
    }

    #[test]
    fn balance_step_rejects_balanced_nodes() {
        let params = EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap();
        let (hg, root, leaves) = disjoint_singletons(8);
        let mut d = Sbd::assemble(hg, root, balanced_spec(&leaves)).unwrap();
        let top = d.children(d.root())[0];
        let mut rec = SeqRecorder::new(&d);
        assert!(balance_step(&mut d, top, &params, &mut rec).is_err());
        let root_id = d.root();
        assert!(balance_step(&mut d, root_id, &params, &mut rec).is_err());
    }

    #[test]
    fn rebalance_noop_on_balanced_input() {
        let params = EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap();
        let (hg, root, leaves) = disjoint_singletons(8);
        let mut d = Sbd::assemble(hg, root, balanced_spec(&leaves)).unwrap();
        let before = d.shape_signature();
        let phi_before = phi_total(&d);
        let mut r = BTreeSet::new();
        r.insert(d.root());
        let mut rec = SeqRecorder::new(&d);
        let rep = rebalance(&mut d, &r, &params, &mut rec).unwrap();
        assert!(rep.steps.is_empty());
        assert_eq!(d.shape_signature(), before);
        assert_eq!(phi_total(&d), phi_before);

        // a non-prefix set is refused
        let deep: BTreeSet<NodeId> = [d.children(d.children(d.root())[0])[0]]
            .into_iter()
            .collect();
        assert!(rebalance(&mut d, &deep, &params, &mut rec).is_err());
        // the empty prefix is a no-op
        let rep = rebalance(&mut d, &BTreeSet::new(), &params, &mut rec).unwrap();
        assert_eq!(rep.iterations, 0);
    }

    /// Chain over a path graph's support: node i holds the vertex leaf
    /// and the edge-to-next leaf, real adhesions of size ≤ 2 throughout.
    fn path_chain(n: u32) -> (SupportHypergraph, Sbd) {
        let mut g = SimpleGraph::new(n as usize);
        for v in 0..n - 1 {
            g.add_edge(v, v + 1).unwrap();
        }
        let su = SupportHypergraph::build(&g);
        let mut spec = TreeSpec::Internal(vec![
            TreeSpec::Leaf(su.vertex_edge(n - 2)),
            TreeSpec::Leaf(su.pair_edge(n - 2, n - 1).unwrap()),
            TreeSpec::Leaf(su.vertex_edge(n - 1)),
        ]);
        for v in (0..n - 2).rev() {
            spec = TreeSpec::Internal(vec![
                TreeSpec::Leaf(su.vertex_edge(v)),
                TreeSpec::Leaf(su.pair_edge(v, v + 1).unwrap()),
                spec,
            ]);
        }
        let d = Sbd::assemble(su.hg.clone(), su.e_bot, spec).unwrap();
        (su, d)
    }

    #[test]
    fn rebalance_flattens_adversarial_chain() {
        let params = EngineParams::from_wl_bound(3).with_overrides(3, 4).unwrap();
        let (_su, mut d) = path_chain(256);
        let phi_before = phi_total(&d);
        let depth_before = *depths(&d).values().max().unwrap();
        let r: BTreeSet<NodeId> = d.node_ids().collect();
        let mut rec = SeqRecorder::new(&d);
        let rep = rebalance(&mut d, &r, &params, &mut rec).unwrap();
        d.audit().unwrap();
        assert!(!rep.steps.is_empty(), "the chain must trigger balancing");
        for step in &rep.steps {
            assert!(step.drop() >= 1.0 - 1e-9);
        }
        let phi_after = phi_total(&d);
        assert!(
            phi_after <= phi_before + 1e-6,
            "rebalance never raises the potential"
        );

        // every non-root node is now balanced
        for t in d.node_ids().collect::<Vec<_>>() {
            if t != d.root() {
                assert_eq!(
                    find_unbalanced_witness(&d, t, params.balance_dist),
                    BalanceVerdict::Balanced
                );
            }
        }
        // the depth bound of a balanced decomposition, and real progress
        let m = d.graph().n_edges() as f64;
        let bound = 1.0 + (params.balance_dist as f64 + 1.0) * 2.0 * m.log2();
        let depth_after = *depths(&d).values().max().unwrap();
        assert!(
            (depth_after as f64) <= bound,
            "depth {depth_after} exceeds the balance bound {bound}"
        );
        assert!(
            depth_after < depth_before / 2,
            "the chain must actually flatten"
        );

        // downwards well-linkedness survived the whole loop
        for u in d.node_ids().collect::<Vec<_>>() {
            if !d.is_leaf(u) {
                let set = d.leaves_under(u);
                assert!(matches!(
                    test_well_linked(d.graph(), &set).unwrap(),
                    WlVerdict::WellLinked
                ));
            }
        }
        // the override cap steers balancing only; the split worklist's
        // own thresholds keep degrees small on path-shaped torsos
        let max_deg = d.node_ids().map(|u| d.degree(u)).max().unwrap();
        assert!(max_deg <= 9, "degree {max_deg} blew up on a path instance");
    }
}
