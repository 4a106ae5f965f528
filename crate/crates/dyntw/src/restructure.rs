//! Degree reduction that preserves downwards well-linkedness: a single
//! split attempt against a pinned child set, and the worklist loop that
//! drives every touched degree under a threshold.

use std::collections::BTreeSet;

use crate::superbranch::{Applied, NodeId, Rotation, Sbd, SeqRecorder};
use crate::well_linked::partition_into_well_linked;
use crate::DyntwError;

/// Degree thresholds in terms of the promised well-linkedness bound and
/// the pinned set's combined adhesion size α = |∪_{x∈X} adh(xt)|.
#[derive(Debug, Clone, Copy)]
pub struct SplitBudget {
    pub k_wl: u32,
    pub alpha: u32,
}

impl SplitBudget {
    pub fn new(k_wl: u32, alpha: u32) -> Result<SplitBudget, DyntwError> {
        if k_wl < 1 {
            return Err(DyntwError::invalid("well-linkedness bound must be ≥ 1"));
        }
        Ok(SplitBudget { k_wl, alpha })
    }

    pub fn alpha_of(d: &Sbd, xs: &[NodeId]) -> u32 {
        let mut verts = BTreeSet::new();
        for &x in xs {
            verts.extend(d.adh(x).iter().copied());
        }
        verts.len() as u32
    }

    /// |X| + 2^{k_wl+α}: degrees at or below this end a split attempt.
    pub fn split_threshold(&self, x_len: usize) -> u64 {
        x_len as u64 + 1u64.checked_shl(self.k_wl + self.alpha).unwrap_or(u64::MAX)
    }

    /// 1 + 2^{2·k_wl}: the worklist's degree target away from the pins.
    pub fn worklist_threshold(&self) -> u64 {
        1 + 1u64.checked_shl(2 * self.k_wl).unwrap_or(u64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitOutcome {
    /// One split rotation was applied; the pinned children sit under
    /// `shallow`, the chosen well-linked part under `deep`.
    Split { shallow: NodeId, deep: NodeId },
    /// Every part of the well-linked partition is a singleton, so
    /// Δ(t) ≤ |X| + 2^{k_wl+α} already. (Equality of the partition count
    /// with 2^λ forces a zero-boundary part, so the count stays one below
    /// the power whenever λ ≥ 1, which absorbs the parent hyperedge.)
    DegreeSmall,
}

/// Splits `t` against the pinned children `x` once, if a well-linked part
/// of the remaining children has size ≥ 2. Preserves downwards
/// well-linkedness because the new tree edge carries a set that is
/// well-linked inside torso(t) and does not contain the parent hyperedge.
pub fn split_once(
    d: &mut Sbd,
    t: NodeId,
    x: &[NodeId],
    rec: &mut SeqRecorder,
) -> Result<SplitOutcome, DyntwError> {
    if x.is_empty() {
        return Err(DyntwError::invalid("split needs at least one pinned child"));
    }
    let xs: BTreeSet<NodeId> = x.iter().copied().collect();
    if !xs.iter().all(|c| d.children(t).contains(c)) {
        return Err(DyntwError::invalid(
            "pinned nodes must be children of the split target",
        ));
    }
    let tv = d.torso_view(t)?;

    let mut e_y = tv.hg.all_edges();
    e_y.remove(tv.parent_edge);
    for c in &xs {
        e_y.remove(tv.node_edge[c]);
    }
    if e_y.is_empty() {
        return Ok(SplitOutcome::DegreeSmall);
    }

    let parts = partition_into_well_linked(&tv.hg, &e_y)?;
    let Some(part) = parts.iter().find(|c| c.len() >= 2) else {
        return Ok(SplitOutcome::DegreeSmall);
    };
    let deep: BTreeSet<NodeId> = part.iter().map(|e| tv.edge_node[&e]).collect();

    match d.apply(&Rotation::Split { t, deep }, rec)? {
        Applied::Split { shallow, deep } => Ok(SplitOutcome::Split { shallow, deep }),
        _ => unreachable!("split rotation yields a split result"),
    }
}

/// Worklist degree reduction: starting from `t`, keeps splitting touched
/// nodes until every one has degree within the budget. The pinned
/// children `x` (possibly none) end up as children of the returned node,
/// the shallowest one touched. The sequence opens with a Touch of `t` so
/// the recorder's involved sets include it even when nothing splits.
pub fn split_to_degree(
    d: &mut Sbd,
    t: NodeId,
    x: &[NodeId],
    rec: &mut SeqRecorder,
) -> Result<NodeId, DyntwError> {
    if d.is_leaf(t) {
        return Err(DyntwError::invalid(format!(
            "{t} is a leaf, nothing to split"
        )));
    }
    d.apply(&Rotation::Touch { t }, rec)?;
    let mut shallowest = t;
    let mut active = vec![t];
    // each iteration either removes a node for good or splits one, and
    // splits strictly shrink degrees, so 4Δ+8 rounds are ample; running
    // out means the well-linkedness promise did not actually hold
    let mut fuel = 4 * d.degree(t) as u64 + 8;
    while let Some(v) = active.pop() {
        if fuel == 0 {
            return Err(DyntwError::promise(
                "degree reduction failed to converge; the promised \
                 well-linkedness bound does not hold for this graph",
            ));
        }
        fuel -= 1;
        let pins: Vec<NodeId> = if !x.is_empty() && v == shallowest {
            x.to_vec()
        } else {
            // pinning the child with the smallest adhesion keeps the
            // fallback threshold at 1 + 2^{2·k_wl}
            let c = d
                .children(v)
                .iter()
                .copied()
                .min_by_key(|&c| (d.adh(c).len(), c.0))
                .expect("internal nodes have children");
            vec![c]
        };
        match split_once(d, v, &pins, rec)? {
            SplitOutcome::DegreeSmall => {}
            SplitOutcome::Split { shallow, deep } => {
                if v == shallowest {
                    shallowest = shallow;
                }
                active.push(shallow);
                active.push(deep);
            }
        }
    }
    Ok(shallowest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{Eid, Hypergraph, SimpleGraph, SupportHypergraph, Vid};
    use crate::oracle;
    use crate::superbranch::TreeSpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Root leaf plus one internal node holding every other hyperedge:
    /// downwards well-linked for free, since the lone internal node's
    /// leaf set is the complement of the root hyperedge (λ ≤ 1).
    fn star(hg: Hypergraph, root_edge: Eid) -> Sbd {
        let others: Vec<Eid> = hg.edge_ids().filter(|&e| e != root_edge).collect();
        Sbd::assemble(
            hg,
            root_edge,
            TreeSpec::Internal(others.into_iter().map(TreeSpec::Leaf).collect()),
        )
        .unwrap()
    }

    fn assert_downwards_well_linked(d: &Sbd) {
        for t in d.node_ids().collect::<Vec<_>>() {
            if d.is_leaf(t) {
                continue;
            }
            let leaves = d.leaves_under(t);
            assert!(
                oracle::is_well_linked_brute(d.graph(), &leaves).unwrap(),
                "L[{t}] = {leaves:?} is not well-linked"
            );
        }
    }

    #[test]
    fn budget_thresholds() {
        let b = SplitBudget::new(1, 0).unwrap();
        assert_eq!(b.split_threshold(3), 3 + 2);
        assert_eq!(b.worklist_threshold(), 1 + 4);
        let b = SplitBudget::new(3, 2).unwrap();
        assert_eq!(b.split_threshold(1), 1 + 32);
        assert_eq!(b.worklist_threshold(), 1 + 64);
        assert!(SplitBudget::new(0, 0).is_err());
        // absurd bounds saturate instead of overflowing
        assert_eq!(
            SplitBudget::new(40, 40).unwrap().split_threshold(0),
            u64::MAX
        );
    }

    #[test]
    fn verdict_when_all_parts_are_singletons() {
        // children: x = {0,2}, y1 = {0}, y2 = {1}; root hyperedge {0,1}.
        // In torso(t) the set {y1,y2} has boundary {0,1} but each
        // singleton only boundary 1, so the partition splits it apart.
        let mut hg = Hypergraph::new();
        let e_r = hg.add_edge(&[Vid(0), Vid(1)]);
        let e_x = hg.add_edge(&[Vid(0), Vid(2)]);
        hg.add_edge(&[Vid(0)]);
        hg.add_edge(&[Vid(1)]);
        let mut d = star(hg, e_r);
        let t = d.children(d.root())[0];
        assert_eq!(d.degree(t), 4);
        let before = d.shape_signature();
        let x = vec![d.leaf_of(e_x).unwrap()];
        let mut rec = SeqRecorder::new(&d);
        let out = split_once(&mut d, t, &x, &mut rec).unwrap();
        assert_eq!(out, SplitOutcome::DegreeSmall);
        assert_eq!(rec.rotations, 0, "a verdict applies no rotations");
        assert_eq!(d.shape_signature(), before);
        // the budget the verdict certifies: α = |{0}| = 1, any k_wl ≥ 1
        let alpha = SplitBudget::alpha_of(&d, &x);
        assert_eq!(alpha, 1);
        assert!(d.degree(t) as u64 <= SplitBudget::new(1, alpha).unwrap().split_threshold(1));
    }

    #[test]
    fn star_with_disjoint_adhesions_splits() {
        // four singleton hyperedges over distinct vertices: every
        // adhesion is empty, so the non-pinned children are well-linked
        // as one part of size 3
        let mut hg = Hypergraph::new();
        let e_r = hg.add_edge(&[]);
        let kids: Vec<Eid> = (0..4).map(|v| hg.add_edge(&[Vid(v)])).collect();
        let mut d = star(hg, e_r);
        let t = d.children(d.root())[0];
        let delta_before = d.degree(t);
        let x = vec![d.leaf_of(kids[0]).unwrap()];
        let mut rec = SeqRecorder::new(&d);
        let SplitOutcome::Split { shallow, deep } = split_once(&mut d, t, &x, &mut rec).unwrap()
        else {
            panic!("expected a split");
        };
        d.audit().unwrap();
        assert!(
            d.children(shallow).contains(&x[0]),
            "pin stays at the shallow node"
        );
        assert_eq!(
            d.children(deep).len(),
            3,
            "the whole well-linked part moved down"
        );
        assert_eq!(d.adh(deep), &[] as &[Vid]);
        assert!(d.degree(shallow) < delta_before);
        assert!(d.degree(deep) < delta_before);
        // exact degree redistribution of a split
        assert_eq!(d.degree(shallow) + d.degree(deep), delta_before + 2);
        assert_eq!(rec.v_t().iter().copied().collect::<Vec<_>>(), vec![t]);
        assert_eq!(rec.v_t_prime().len(), 2);
        assert_downwards_well_linked(&d);
    }

    #[test]
    fn small_node_yields_touch_only_sequence() {
        // two children leave at most one non-pinned hyperedge, so every
        // attempt settles for the verdict straight away
        let mut hg = Hypergraph::new();
        let e_r = hg.add_edge(&[]);
        for v in 0..2 {
            hg.add_edge(&[Vid(v)]);
        }
        let mut d = star(hg, e_r);
        let t = d.children(d.root())[0];
        let before = d.shape_signature();
        let mut rec = SeqRecorder::new(&d);
        let top = split_to_degree(&mut d, t, &[], &mut rec).unwrap();
        assert_eq!(top, t);
        assert_eq!(rec.rotations, 1, "just the opening touch");
        assert_eq!(rec.size, 1);
        assert_eq!(d.shape_signature(), before);
        d.audit().unwrap();
    }

    #[test]
    fn disjoint_eight_reduces_to_binary_caterpillar() {
        let mut hg = Hypergraph::new();
        let e_r = hg.add_edge(&[]);
        for v in 0..8 {
            hg.add_edge(&[Vid(v)]);
        }
        let mut d = star(hg, e_r);
        let t = d.children(d.root())[0];
        let delta = d.degree(t);
        let mut rec = SeqRecorder::new(&d);
        let top = split_to_degree(&mut d, t, &[], &mut rec).unwrap();
        d.audit().unwrap();
        assert_eq!(rec.v_t().iter().copied().collect::<Vec<_>>(), vec![t]);
        for &v in rec.v_t_prime() {
            assert!(
                d.degree(v) <= 3,
                "empty adhesions pare everything down to binary"
            );
        }
        assert!(rec.v_t_prime().contains(&top));
        assert!(rec.v_t_prime().len() <= 2 * delta);
        assert!(rec.rotations as usize <= 2 * delta + 1);
        assert_eq!(d.nleaves(d.root()), 9);
        assert_downwards_well_linked(&d);
    }

    #[test]
    fn pinned_children_end_at_the_shallowest_node() {
        let mut g = SimpleGraph::new(4);
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        g.add_edge(2, 3).unwrap();
        let su = SupportHypergraph::build(&g);
        let mut d = star(su.hg.clone(), su.e_bot);
        let t = d.children(d.root())[0];
        let x = vec![
            d.leaf_of(su.pair_edge(0, 1).unwrap()).unwrap(),
            d.leaf_of(su.vertex_edge(3)).unwrap(),
        ];
        let mut rec = SeqRecorder::new(&d);
        let top = split_to_degree(&mut d, t, &x, &mut rec).unwrap();
        d.audit().unwrap();
        for pin in &x {
            assert!(
                d.children(top).contains(pin),
                "{pin} must stay at the shallowest node"
            );
        }
        // the returned node is the shallowest touched one
        for &v in rec.v_t_prime() {
            let mut cur = v;
            while cur != top {
                match d.parent(cur) {
                    Some(p) => cur = p,
                    None => panic!("{v} is not below {top}"),
                }
            }
        }
        assert_downwards_well_linked(&d);
    }

    #[test]
    fn random_instances_meet_budget_and_stay_well_linked() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..40 {
            let n = rng.gen_range(2..=4usize);
            let mut g = SimpleGraph::new(n);
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.gen_bool(0.5) {
                        g.add_edge(u, v).unwrap();
                    }
                }
            }
            let su = SupportHypergraph::build(&g);
            let k_wl = oracle::well_linked_number_brute(&su.hg).unwrap() as u32;
            let mut d = star(su.hg.clone(), su.e_bot);
            let t = d.children(d.root())[0];
            let kids = d.children(t).to_vec();
            let x: Vec<NodeId> = {
                let mut pool = kids.clone();
                pool.shuffle(&mut rng);
                pool.truncate(rng.gen_range(0..=3usize.min(pool.len().saturating_sub(1))));
                pool
            };
            let budget = SplitBudget::new(k_wl.max(1), SplitBudget::alpha_of(&d, &x)).unwrap();
            let mut rec = SeqRecorder::new(&d);
            let top = split_to_degree(&mut d, t, &x, &mut rec).unwrap();
            d.audit().unwrap();
            assert_downwards_well_linked(&d);
            let cap = budget
                .split_threshold(x.len())
                .max(budget.worklist_threshold());
            for &v in rec.v_t_prime() {
                assert!(
                    d.degree(v) as u64 <= cap,
                    "degree {} of {v} exceeds budget {cap} (k_wl {k_wl})",
                    d.degree(v)
                );
            }
            for pin in &x {
                assert!(d.children(top).contains(pin));
            }
        }
    }

    #[test]
    fn split_once_rejects_bad_pins() {
        let mut hg = Hypergraph::new();
        let e_r = hg.add_edge(&[]);
        for v in 0..4 {
            hg.add_edge(&[Vid(v)]);
        }
        let mut d = star(hg, e_r);
        let t = d.children(d.root())[0];
        let mut rec = SeqRecorder::new(&d);
        let root = d.root();
        let first_kid = d.children(t)[0];
        assert!(split_once(&mut d, t, &[], &mut rec).is_err(), "no pins");
        assert!(
            split_once(&mut d, t, &[root], &mut rec).is_err(),
            "pin not a child"
        );
        assert!(
            split_once(&mut d, root, &[t], &mut rec).is_err(),
            "target not internal"
        );
        assert!(split_to_degree(&mut d, first_kid, &[], &mut rec).is_err());
    }
}
