//! Tree decomposition containers, their canonical text form, and the
//! engine glue that exports the maintained superbranch decomposition as
//! an annotated tree decomposition kept up to date by prefix rebuilds.
//!
//! `PlainDecomposition` is an unrooted tree of bags, the output shape of
//! the branch-decomposition conversion. `AnnotatedTd` is the exported
//! product: a rooted binary tree of bags where each graph edge is
//! additionally annotated at the unique smallest-depth node whose bag
//! contains both endpoints. `GlueState` assembles an `AnnotatedTd` from a
//! `DynEngine` and, after each engine update, emits a
//! `PrefixRebuildDescription` that patches the exported tree in place:
//! nodes outside the rebuilt prefix keep their ids and contents, so
//! consumers caching per-node data only recompute the prefix.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::engine::{DynEngine, UpdateSummary};
use crate::hypergraph::Vid;
use crate::superbranch::{NodeId, Sbd};
use crate::well_linked::torso_tree_decomposition;
use crate::DyntwError;

/// Unrooted tree decomposition: node `i` has neighbor list `adj[i]` and
/// bag `bags[i]` (sorted).
#[derive(Clone, Debug, Default)]
pub struct PlainDecomposition {
    pub adj: Vec<Vec<usize>>,
    pub bags: Vec<Vec<Vid>>,
}

impl PlainDecomposition {
    pub fn n_nodes(&self) -> usize {
        self.bags.len()
    }

    pub fn add_node(&mut self, bag: Vec<Vid>) -> usize {
        let mut bag = bag;
        bag.sort_unstable();
        bag.dedup();
        self.adj.push(Vec::new());
        self.bags.push(bag);
        self.bags.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    /// Width = max bag size − 1; an empty decomposition has width 0.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Node handle in an annotated decomposition's arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TdId(pub u32);

#[derive(Clone, Debug)]
pub struct TdNode {
    pub parent: Option<TdId>,
    pub children: Vec<TdId>,    // at most 2
    pub bag: Vec<Vid>,          // sorted
    pub edges: Vec<(Vid, Vid)>, // owned graph edges, each pair u < v, sorted
}

/// Rooted binary annotated tree decomposition.
#[derive(Clone, Debug, Default)]
pub struct AnnotatedTd {
    nodes: Vec<Option<TdNode>>,
    root: Option<TdId>,
}

impl AnnotatedTd {
    pub fn new() -> Self {
        AnnotatedTd::default()
    }

    pub fn alloc(&mut self, parent: Option<TdId>, bag: Vec<Vid>, edges: Vec<(Vid, Vid)>) -> TdId {
        let mut bag = bag;
        bag.sort_unstable();
        bag.dedup();
        let mut edges = edges;
        edges.sort_unstable();
        let id = TdId(self.nodes.len() as u32);
        self.nodes.push(Some(TdNode {
            parent,
            children: Vec::new(),
            bag,
            edges,
        }));
        if let Some(p) = parent {
            self.node_mut(p).children.push(id);
            debug_assert!(self.node(p).children.len() <= 2, "binary tree");
        }
        id
    }

    /// Inserts a node under a caller-chosen id, the form used when
    /// replaying a `PrefixRebuildDescription`. The slot must be free and
    /// the parent (when given) must be live.
    pub fn insert(
        &mut self,
        id: TdId,
        parent: Option<TdId>,
        bag: Vec<Vid>,
        edges: Vec<(Vid, Vid)>,
    ) -> Result<(), DyntwError> {
        let idx = id.0 as usize;
        if idx >= self.nodes.len() {
            self.nodes.resize_with(idx + 1, || None);
        }
        if self.nodes[idx].is_some() {
            return Err(DyntwError::invalid(format!(
                "node id {} is already occupied",
                id.0
            )));
        }
        if let Some(p) = parent {
            if !self.exists(p) {
                return Err(DyntwError::invalid(format!(
                    "parent {} of node {} is not live",
                    p.0, id.0
                )));
            }
        }
        let mut bag = bag;
        bag.sort_unstable();
        bag.dedup();
        let mut edges = edges;
        edges.sort_unstable();
        self.nodes[idx] = Some(TdNode {
            parent,
            children: Vec::new(),
            bag,
            edges,
        });
        if let Some(p) = parent {
            self.node_mut(p).children.push(id);
            debug_assert!(self.node(p).children.len() <= 2, "binary tree");
        }
        Ok(())
    }

    pub fn set_root(&mut self, r: TdId) {
        self.root = Some(r);
    }

    pub fn root(&self) -> TdId {
        self.root.expect("decomposition has a root")
    }

    pub fn exists(&self, t: TdId) -> bool {
        self.nodes.get(t.0 as usize).is_some_and(Option::is_some)
    }

    pub fn node(&self, t: TdId) -> &TdNode {
        self.nodes[t.0 as usize].as_ref().expect("live node")
    }

    pub fn node_mut(&mut self, t: TdId) -> &mut TdNode {
        self.nodes[t.0 as usize].as_mut().expect("live node")
    }

    pub fn free(&mut self, t: TdId) {
        self.nodes[t.0 as usize] = None;
    }

    pub fn ids(&self) -> impl Iterator<Item = TdId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_some())
            .map(|(i, _)| TdId(i as u32))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.iter().flatten().count()
    }

    pub fn width(&self) -> usize {
        self.nodes
            .iter()
            .flatten()
            .map(|n| n.bag.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Longest root-leaf path length (edges).
    pub fn depth(&self) -> usize {
        fn go(td: &AnnotatedTd, t: TdId) -> usize {
            td.node(t)
                .children
                .iter()
                .map(|&c| 1 + go(td, c))
                .max()
                .unwrap_or(0)
        }
        go(self, self.root())
    }

    /// Preorder over live nodes, children in stored order.
    pub fn preorder(&self) -> Vec<TdId> {
        let mut out = Vec::with_capacity(self.n_nodes());
        let mut stack = vec![self.root()];
        while let Some(t) = stack.pop() {
            out.push(t);
            for &c in self.node(t).children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Canonical text form, independent of node ids and child order:
    /// children are ordered by their canonical subtree strings, nodes are
    /// renumbered in the resulting DFS order, one line per node
    /// `id parentId bag=(v,...) edges=((u,v),...)` with `parentId = -1`
    /// at the root. Two decompositions of equal structure (bags, edge
    /// annotations, tree shape) produce identical text.
    pub fn canonical_text(&self) -> String {
        fn key(td: &AnnotatedTd, t: TdId) -> String {
            let n = td.node(t);
            let mut child_keys: Vec<String> = n.children.iter().map(|&c| key(td, c)).collect();
            child_keys.sort();
            let mut s = String::new();
            write_node_payload(&mut s, n);
            s.push('[');
            for ck in child_keys {
                s.push_str(&ck);
                s.push(';');
            }
            s.push(']');
            s
        }

        fn write_node_payload(s: &mut String, n: &TdNode) {
            s.push_str("bag=(");
            for (i, v) in n.bag.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push_str(") edges=(");
            for (i, (u, v)) in n.edges.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "({u},{v})");
            }
            s.push(')');
        }

        // DFS with children in canonical-key order, assigning dense ids
        let mut lines = Vec::with_capacity(self.n_nodes());
        let mut stack: Vec<(TdId, i64)> = vec![(self.root(), -1)];
        while let Some((t, parent_id)) = stack.pop() {
            let my_id = lines.len() as i64;
            let n = self.node(t);
            let mut payload = String::new();
            write_node_payload(&mut payload, n);
            lines.push(format!("{my_id} {parent_id} {payload}"));
            let mut kids: Vec<(String, TdId)> =
                n.children.iter().map(|&c| (key(self, c), c)).collect();
            // reverse so the lexicographically first child pops first
            kids.sort_by(|a, b| b.0.cmp(&a.0));
            for (_, c) in kids {
                stack.push((c, my_id));
            }
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// The same line format in raw-id form (stable across untouched
    /// subtrees), used by the CLI's decomposition dump.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for t in self.preorder() {
            let n = self.node(t);
            let parent = n.parent.map_or(-1i64, |p| p.0 as i64);
            let _ = write!(out, "{} {} bag=(", t.0, parent);
            for (i, v) in n.bag.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push_str(") edges=(");
            for (i, (u, v)) in n.edges.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "({u},{v})");
            }
            out.push_str(")\n");
        }
        out
    }
}

/// One node of the rebuilt prefix, parent listed before child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewNode {
    pub id: TdId,
    /// None exactly at the new root; otherwise an id appearing earlier
    /// in the same description.
    pub parent: Option<TdId>,
    pub bag: Vec<Vid>,
    pub edges: Vec<(Vid, Vid)>,
}

/// A prefix-rebuilding update to an exported decomposition: remove the
/// old prefix, insert the new one, and reattach the kept subtrees whose
/// parents were replaced. The tree after application is uniquely
/// determined; nodes outside both prefixes are untouched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixRebuildDescription {
    /// The old prefix: every listed node is deleted.
    pub removed: Vec<TdId>,
    /// The new prefix in parent-before-child order.
    pub added: Vec<NewNode>,
    /// Kept node whose parent was removed, mapped to its new parent.
    pub reattach: BTreeMap<TdId, TdId>,
    /// Root after application; always part of `added`.
    pub root: TdId,
}

impl PrefixRebuildDescription {
    /// |P| + |P′|, the cost measure of the update.
    pub fn size(&self) -> usize {
        self.removed.len() + self.added.len()
    }
}

/// Applies a prefix rebuild. Everything is validated before the first
/// mutation, so on error the decomposition is unchanged.
pub fn apply_description(
    td: &mut AnnotatedTd,
    u: &PrefixRebuildDescription,
) -> Result<(), DyntwError> {
    let removed: BTreeSet<TdId> = u.removed.iter().copied().collect();
    if removed.len() != u.removed.len() {
        return Err(DyntwError::invalid("a node is removed twice"));
    }
    for &t in &u.removed {
        if !td.exists(t) {
            return Err(DyntwError::invalid(format!(
                "removed node {} is not live",
                t.0
            )));
        }
        if let Some(p) = td.node(t).parent {
            if !removed.contains(&p) {
                return Err(DyntwError::invalid(
                    "removed set is not a prefix: a removed node keeps its parent",
                ));
            }
        }
        for &c in &td.node(t).children {
            if !removed.contains(&c) && !u.reattach.contains_key(&c) {
                return Err(DyntwError::invalid(format!("removal orphans node {}", c.0)));
            }
        }
    }
    let mut incoming = BTreeSet::new();
    for nn in &u.added {
        if !incoming.insert(nn.id) {
            return Err(DyntwError::invalid(format!(
                "node id {} is added twice",
                nn.id.0
            )));
        }
        if td.exists(nn.id) && !removed.contains(&nn.id) {
            return Err(DyntwError::invalid(format!(
                "added id {} collides with a kept node",
                nn.id.0
            )));
        }
        match nn.parent {
            None => {
                if nn.id != u.root {
                    return Err(DyntwError::invalid("only the new root may omit a parent"));
                }
            }
            Some(p) => {
                if !incoming.contains(&p) {
                    return Err(DyntwError::invalid(format!(
                        "parent {} of added node {} does not precede it",
                        p.0, nn.id.0
                    )));
                }
            }
        }
    }
    if !incoming.contains(&u.root) {
        return Err(DyntwError::invalid("the new root must be an added node"));
    }
    for (&kept, &newp) in &u.reattach {
        if !td.exists(kept) || removed.contains(&kept) {
            return Err(DyntwError::invalid(format!(
                "reattachment source {} is not a kept node",
                kept.0
            )));
        }
        match td.node(kept).parent {
            Some(p) if removed.contains(&p) => {}
            _ => {
                return Err(DyntwError::invalid(format!(
                    "reattached node {} did not lose its parent",
                    kept.0
                )))
            }
        }
        if !incoming.contains(&newp) {
            return Err(DyntwError::invalid(format!(
                "reattachment target {} is not an added node",
                newp.0
            )));
        }
    }

    for &t in &u.removed {
        td.free(t);
    }
    for nn in &u.added {
        td.insert(nn.id, nn.parent, nn.bag.clone(), nn.edges.clone())?;
    }
    for (&kept, &newp) in &u.reattach {
        td.node_mut(kept).parent = Some(newp);
        td.node_mut(newp).children.push(kept);
        debug_assert!(td.node(newp).children.len() <= 2, "binary tree");
    }
    td.set_root(u.root);
    Ok(())
}

/// The exported nodes owned by one superbranch node: the node for the
/// tree edge toward its parent plus, at internal nodes, the torso tree.
struct Region {
    /// Owned ids in parent-before-child order; the root leaf's single
    /// node comes first.
    nodes: Vec<TdId>,
    /// The node carrying the adhesion toward the parent; None only at
    /// the root leaf.
    edge_node: Option<TdId>,
    /// For each child: the owned node the child's edge node hangs from
    /// (the torso-tree leaf holding that child's adhesion).
    ports: BTreeMap<NodeId, TdId>,
}

/// Incremental exporter. Owns the id space of the exported decomposition
/// and, per superbranch node, the slice of exported nodes derived from
/// it: leaves contribute their hyperedge bag, internal nodes a tree
/// decomposition of their torso rooted at the parent-adhesion leaf, and
/// every non-root node the connecting adhesion bag. Edge annotations
/// come from the per-node `EL` tables: EL(t) holds the graph edges whose
/// pair hyperedge lives under t with both endpoints in V(torso(t)),
/// computed bottom-up from pair leaves and children's tables restricted
/// to the connecting adhesions. An edge is annotated at the deepest
/// node of the superbranch tree where it escapes the parent adhesion.
pub struct GlueState {
    next_id: u32,
    generation: u64,
    regions: BTreeMap<NodeId, Region>,
    el: BTreeMap<NodeId, BTreeSet<(Vid, Vid)>>,
}

impl GlueState {
    /// Full build: exports the engine's current decomposition and the
    /// state needed to keep it updated.
    pub fn init(engine: &DynEngine) -> Result<(GlueState, AnnotatedTd), DyntwError> {
        let d = engine.decomposition();
        let mut gs = GlueState {
            next_id: 0,
            generation: engine.generation(),
            regions: BTreeMap::new(),
            el: BTreeMap::new(),
        };
        let all: BTreeSet<NodeId> = d.node_ids().collect();
        let added = gs.rebuild(engine, &all)?;
        let root = gs.regions[&d.root()].nodes[0];
        let desc = PrefixRebuildDescription {
            removed: Vec::new(),
            added,
            reattach: BTreeMap::new(),
            root,
        };
        let mut td = AnnotatedTd::new();
        apply_description(&mut td, &desc)?;
        Ok((gs, td))
    }

    /// Turns one engine update into a prefix rebuild of the exported
    /// decomposition. Consumes updates in order: the sequence must be
    /// the one produced by the engine operation directly after the state
    /// this glue has seen, on the same engine.
    pub fn apply_engine_update(
        &mut self,
        engine: &DynEngine,
        s: &UpdateSummary,
    ) -> Result<PrefixRebuildDescription, DyntwError> {
        if s.generation != self.generation + 1 || engine.generation() != s.generation {
            return Err(DyntwError::invalid(format!(
                "sequence generation {} does not follow glue generation {} on engine generation {}",
                s.generation,
                self.generation,
                engine.generation()
            )));
        }
        let d = engine.decomposition();
        let root = d.root();

        let mut old_set = s.trace_t.clone();
        old_set.insert(root);
        let mut removed = Vec::new();
        for &x in &old_set {
            let region = self.regions.remove(&x).ok_or_else(|| {
                DyntwError::invalid(format!("{x} in the trace is unknown to the exporter"))
            })?;
            removed.extend(region.nodes);
            self.el.remove(&x);
        }

        let mut new_set = s.trace_t_prime.clone();
        new_set.insert(root);
        for &x in &new_set {
            if !d.exists(x) {
                return Err(DyntwError::invalid(format!(
                    "{x} in the new trace is not part of the decomposition"
                )));
            }
        }
        let added = self.rebuild(engine, &new_set)?;

        let mut reattach = BTreeMap::new();
        for &x in &new_set {
            for &c in d.children(x) {
                if new_set.contains(&c) {
                    continue;
                }
                let kept = self
                    .regions
                    .get(&c)
                    .and_then(|r| r.edge_node)
                    .ok_or_else(|| {
                        DyntwError::invalid(format!("kept child {c} has no exported edge node"))
                    })?;
                reattach.insert(kept, self.regions[&x].ports[&c]);
            }
        }
        self.generation = s.generation;
        Ok(PrefixRebuildDescription {
            removed,
            added,
            reattach,
            root: self.regions[&root].nodes[0],
        })
    }

    fn fresh(&mut self) -> TdId {
        let id = TdId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Recomputes EL bottom-up and regions top-down for `set`, which
    /// must be closed under parents. Children outside `set` contribute
    /// their cached tables and keep their regions.
    fn rebuild(
        &mut self,
        engine: &DynEngine,
        set: &BTreeSet<NodeId>,
    ) -> Result<Vec<NewNode>, DyntwError> {
        let d = engine.decomposition();
        let mut order: Vec<NodeId> = set.iter().copied().collect();
        order.sort_by_key(|&x| node_depth(d, x));

        for &x in order.iter().rev() {
            if d.is_leaf(x) {
                continue;
            }
            let mut el = BTreeSet::new();
            for &c in d.children(x) {
                match d.leaf_edge(c) {
                    Some(e) => {
                        let vs = d.graph().vertex_set(e);
                        if vs.len() == 2 {
                            el.insert((vs[0], vs[1]));
                        }
                    }
                    None => {
                        let adh: BTreeSet<Vid> = d.adh(c).iter().copied().collect();
                        let sub = self.el.get(&c).ok_or_else(|| {
                            DyntwError::invalid(format!("missing edge table for {c}"))
                        })?;
                        for &(a, b) in sub {
                            if adh.contains(&a) && adh.contains(&b) {
                                el.insert((a, b));
                            }
                        }
                    }
                }
            }
            self.el.insert(x, el);
        }

        let mut added = Vec::new();
        for &x in &order {
            let parent_port = match d.parent(x) {
                None => None,
                Some(p) => Some(
                    *self
                        .regions
                        .get(&p)
                        .and_then(|r| r.ports.get(&x))
                        .ok_or_else(|| {
                            DyntwError::invalid(format!("no rebuilt attachment for {x}"))
                        })?,
                ),
            };
            let region = self.build_region(engine, x, parent_port, &mut added)?;
            self.regions.insert(x, region);
        }
        Ok(added)
    }

    fn build_region(
        &mut self,
        engine: &DynEngine,
        x: NodeId,
        parent_port: Option<TdId>,
        out: &mut Vec<NewNode>,
    ) -> Result<Region, DyntwError> {
        let d = engine.decomposition();
        let Some(_) = d.parent(x) else {
            // the root leaf: one empty bag, the single child attaches here
            let id = self.fresh();
            out.push(NewNode {
                id,
                parent: None,
                bag: Vec::new(),
                edges: Vec::new(),
            });
            let ports = d.children(x).iter().map(|&c| (c, id)).collect();
            return Ok(Region {
                nodes: vec![id],
                edge_node: None,
                ports,
            });
        };
        let parent_port = parent_port.expect("non-root nodes attach under their parent's region");
        let edge_id = self.fresh();
        out.push(NewNode {
            id: edge_id,
            parent: Some(parent_port),
            bag: d.adh(x).to_vec(),
            edges: Vec::new(),
        });
        if let Some(e) = d.leaf_edge(x) {
            let leaf_id = self.fresh();
            out.push(NewNode {
                id: leaf_id,
                parent: Some(edge_id),
                bag: d.graph().vertex_set(e).to_vec(),
                edges: Vec::new(),
            });
            return Ok(Region {
                nodes: vec![edge_id, leaf_id],
                edge_node: Some(edge_id),
                ports: BTreeMap::new(),
            });
        }

        // internal: tree decomposition of the torso, rooted where the
        // parent adhesion sits so depths below are placement depths
        let tv = d.torso_view(x)?;
        let (local, q) = torso_tree_decomposition(&tv.hg, tv.parent_edge)?;
        let n_local = local.n_nodes();
        let lroot = q[&tv.parent_edge];
        let mut order = Vec::with_capacity(n_local);
        let mut lparent: Vec<Option<usize>> = vec![None; n_local];
        let mut seen = vec![false; n_local];
        let mut queue = VecDeque::from([lroot]);
        seen[lroot] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &local.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    lparent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        debug_assert_eq!(order.len(), n_local, "torso tree is connected");

        // each escaped pair goes to its first breadth-first holder,
        // the unique smallest-depth bag containing both endpoints
        let adh: BTreeSet<Vid> = d.adh(x).iter().copied().collect();
        let mut owned: Vec<Vec<(Vid, Vid)>> = vec![Vec::new(); n_local];
        for &(u, v) in &self.el[&x] {
            if adh.contains(&u) && adh.contains(&v) {
                continue;
            }
            let holder = order
                .iter()
                .copied()
                .find(|&li| {
                    local.bags[li].binary_search(&u).is_ok()
                        && local.bags[li].binary_search(&v).is_ok()
                })
                .expect("a tracked pair is covered by the adhesion bag toward its leaf");
            owned[holder].push((u, v));
        }

        let mut nodes = vec![edge_id];
        let mut tid: Vec<Option<TdId>> = vec![None; n_local];
        for &li in &order {
            let id = self.fresh();
            tid[li] = Some(id);
            let parent =
                lparent[li].map_or(edge_id, |pl| tid[pl].expect("parents precede children"));
            out.push(NewNode {
                id,
                parent: Some(parent),
                bag: local.bags[li].clone(),
                edges: std::mem::take(&mut owned[li]),
            });
            nodes.push(id);
        }
        let mut ports = BTreeMap::new();
        for (&e, &c) in &tv.edge_node {
            if e != tv.parent_edge {
                ports.insert(c, tid[q[&e]].expect("every torso edge has a leaf"));
            }
        }
        Ok(Region {
            nodes,
            edge_node: Some(edge_id),
            ports,
        })
    }
}

/// One-shot export of the engine's current decomposition.
pub fn build_full(engine: &DynEngine) -> Result<AnnotatedTd, DyntwError> {
    Ok(GlueState::init(engine)?.1)
}

fn node_depth(d: &Sbd, x: NodeId) -> usize {
    let mut dep = 0;
    let mut cur = x;
    while let Some(p) = d.parent(cur) {
        dep += 1;
        cur = p;
    }
    dep
}
