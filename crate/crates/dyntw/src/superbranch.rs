//! Rooted superbranch decompositions and the four basic rotations.
//!
//! The tree is rooted at the leaf carrying the designated root hyperedge.
//! Every tree edge stores its adhesion on the child end; torsos are
//! assembled from those adhesions on demand, which costs the same
//! O(‖torso(t)‖) the rotations charge, so nothing is cached twice.
//! Node ids are never reused: splits and contractions allocate fresh ids
//! for their results, which keeps before/after bookkeeping in
//! [`SeqRecorder`] unambiguous.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::hypergraph::{EdgeSet, Eid, Hypergraph, Vid};
use crate::DyntwError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Leaf(Eid),
    Internal,
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    payload: Payload,
    /// |L[t]|: leaves in the subtree, counting the node itself if a leaf.
    nleaves: usize,
    /// adh(t, parent(t)) = bd(L[t]); empty at the root.
    adh_parent: Vec<Vid>,
}

/// Tree shape handed to [`Sbd::assemble`]: leaves name hyperedges,
/// internal nodes need at least two children.
#[derive(Debug, Clone)]
pub enum TreeSpec {
    Leaf(Eid),
    Internal(Vec<TreeSpec>),
}

/// One basic rotation. `Split` names the deep side by neighbor node ids
/// (the side of the torso bipartition without the parent hyperedge);
/// neighbor ids and torso hyperedges are interchangeable through the
/// cross-links in [`TorsoView`].
#[derive(Debug, Clone)]
pub enum Rotation {
    Split { t: NodeId, deep: BTreeSet<NodeId> },
    Contract { s: NodeId, t: NodeId },
    InsertLeaf { t: NodeId, x: Vec<Vid> },
    DeleteLeaf { leaf: NodeId },
    Touch { t: NodeId },
}

/// What a rotation produced; fresh node ids land here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applied {
    Split { shallow: NodeId, deep: NodeId },
    Contract { merged: NodeId },
    InsertLeaf { leaf: NodeId, edge: Eid },
    DeleteLeaf,
    Touch,
}

/// The torso of an internal node, assembled from the stored adhesions:
/// one hyperedge per neighbor, the parent's added last.
pub struct TorsoView {
    pub hg: Hypergraph,
    pub parent_edge: Eid,
    pub edge_node: BTreeMap<Eid, NodeId>,
    pub node_edge: BTreeMap<NodeId, Eid>,
}

impl TorsoView {
    /// ‖torso‖ = |V| + Σ (|V(e)| + 1).
    pub fn size(&self) -> usize {
        self.hg.size()
    }
}

/// Bookkeeping for one sequence of basic rotations applied to a
/// decomposition T, producing T'. Tracks the charged size ‖S‖, the
/// involved node sets on both sides, and the trace anc_T(V_T(S)),
/// maintained eagerly: the first time an original node is involved, its
/// current ancestor chain is walked and original nodes on it are marked.
/// That walk is exact because rotations never give a surviving original
/// node a new original ancestor, so the original nodes on the current
/// chain are precisely the still-alive original ancestors, and destroyed
/// original ancestors were marked when they themselves were involved.
pub struct SeqRecorder {
    first_fresh: u32,
    /// ‖S‖ per the size table: split ‖torso(t)‖, contract
    /// ‖torso(s)‖+‖torso(t)‖, insert |X|·‖torso(t)‖+|anc(t)|, delete
    /// |V(L(ℓ))|·‖torso(t)‖+|anc(t)|, touch 1.
    pub size: u64,
    pub rotations: u64,
    /// Every successfully applied rotation, in order: replaying the log
    /// on a copy of the starting decomposition reproduces this one.
    pub log: Vec<Rotation>,
    v_t: BTreeSet<NodeId>,
    alive_involved: BTreeSet<NodeId>,
    trace_marked: BTreeSet<NodeId>,
}

impl SeqRecorder {
    pub fn new(d: &Sbd) -> Self {
        SeqRecorder {
            first_fresh: d.nodes.len() as u32,
            size: 0,
            rotations: 0,
            log: Vec::new(),
            v_t: BTreeSet::new(),
            alive_involved: BTreeSet::new(),
            trace_marked: BTreeSet::new(),
        }
    }

    fn is_original(&self, x: NodeId) -> bool {
        x.0 < self.first_fresh
    }

    /// Call while `x` is still alive and its chain intact.
    fn involve(&mut self, d: &Sbd, x: NodeId) {
        self.alive_involved.insert(x);
        if !self.is_original(x) || !self.v_t.insert(x) {
            return;
        }
        let mut cur = Some(x);
        while let Some(y) = cur {
            if self.is_original(y) && !self.trace_marked.insert(y) {
                break;
            }
            cur = d.parent(y);
        }
    }

    fn destroyed(&mut self, x: NodeId) {
        self.alive_involved.remove(&x);
    }

    fn created(&mut self, x: NodeId) {
        self.alive_involved.insert(x);
    }

    /// V_T(S): involved nodes that existed before the sequence.
    pub fn v_t(&self) -> &BTreeSet<NodeId> {
        &self.v_t
    }

    /// V_{T'}(S): involved nodes alive now.
    pub fn v_t_prime(&self) -> &BTreeSet<NodeId> {
        &self.alive_involved
    }

    /// trace_T(S) = anc_T(V_T(S)), a prefix of the original tree.
    pub fn trace_t(&self) -> &BTreeSet<NodeId> {
        &self.trace_marked
    }

    /// ‖S‖_T = ‖S‖ + |trace_T(S)|.
    pub fn size_t(&self) -> u64 {
        self.size + self.trace_marked.len() as u64
    }

    /// trace_{T'}(S) = anc_{T'}(V_{T'}(S)), computed by walking current
    /// ancestor chains with stop-at-marked deduplication.
    pub fn trace_t_prime(&self, d: &Sbd) -> BTreeSet<NodeId> {
        let mut marked = BTreeSet::new();
        for &x in &self.alive_involved {
            let mut cur = Some(x);
            while let Some(y) = cur {
                if !marked.insert(y) {
                    break;
                }
                cur = d.parent(y);
            }
        }
        marked
    }
}

#[derive(Clone)]
pub struct Sbd {
    g: Hypergraph,
    nodes: Vec<Option<Node>>,
    root: NodeId,
    leaf_of: BTreeMap<Eid, NodeId>,
}

impl Sbd {
    /// Builds a decomposition with the given shape: the root is the leaf
    /// for `root_edge` and `below` hangs off it as the single child.
    /// Adhesions and counters are computed from scratch.
    pub fn assemble(g: Hypergraph, root_edge: Eid, below: TreeSpec) -> Result<Sbd, DyntwError> {
        if !g.has_edge(root_edge) {
            return Err(DyntwError::invalid(format!(
                "{root_edge} is not a hyperedge"
            )));
        }
        let mut d = Sbd {
            g,
            nodes: Vec::new(),
            root: NodeId(0),
            leaf_of: BTreeMap::new(),
        };
        let root = d.alloc(None, Payload::Leaf(root_edge));
        d.root = root;
        d.build_spec(root, &below)?;
        // bijection totality
        let mut expected = d.g.all_edges();
        for &e in d.leaf_of.keys() {
            if !expected.contains(e) {
                return Err(DyntwError::invalid(format!("{e} used twice or unknown")));
            }
            expected.remove(e);
        }
        if !expected.is_empty() {
            return Err(DyntwError::invalid("some hyperedges have no leaf"));
        }
        d.recompute_all();
        Ok(d)
    }

    fn build_spec(&mut self, parent: NodeId, spec: &TreeSpec) -> Result<NodeId, DyntwError> {
        match spec {
            TreeSpec::Leaf(e) => {
                if !self.g.has_edge(*e) {
                    return Err(DyntwError::invalid(format!("{e} is not a hyperedge")));
                }
                let id = self.alloc(Some(parent), Payload::Leaf(*e));
                Ok(id)
            }
            TreeSpec::Internal(kids) => {
                if kids.len() < 2 {
                    return Err(DyntwError::invalid(
                        "internal node needs at least two children",
                    ));
                }
                let id = self.alloc(Some(parent), Payload::Internal);
                for k in kids {
                    self.build_spec(id, k)?;
                }
                Ok(id)
            }
        }
    }

    fn alloc(&mut self, parent: Option<NodeId>, payload: Payload) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        if let Payload::Leaf(e) = payload {
            self.leaf_of.insert(e, id);
        }
        self.nodes.push(Some(Node {
            parent,
            children: Vec::new(),
            payload,
            nleaves: 0,
            adh_parent: Vec::new(),
        }));
        if let Some(p) = parent {
            self.node_mut(p).children.push(id);
        }
        id
    }

    fn free(&mut self, id: NodeId) {
        if let Payload::Leaf(e) = self.node(id).payload {
            self.leaf_of.remove(&e);
        }
        self.nodes[id.0 as usize] = None;
    }

    fn node(&self, id: NodeId) -> &Node {
        self.nodes[id.0 as usize].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node {
        self.nodes[id.0 as usize].as_mut().expect("live node")
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.g
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn exists(&self, id: NodeId) -> bool {
        (id.0 as usize) < self.nodes.len() && self.nodes[id.0 as usize].is_some()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.node(id).children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.node(id).payload, Payload::Leaf(_))
    }

    pub fn leaf_edge(&self, id: NodeId) -> Option<Eid> {
        match self.node(id).payload {
            Payload::Leaf(e) => Some(e),
            Payload::Internal => None,
        }
    }

    /// L⁻¹: the leaf carrying hyperedge `e`.
    pub fn leaf_of(&self, e: Eid) -> Option<NodeId> {
        self.leaf_of.get(&e).copied()
    }

    /// |L[t]|.
    pub fn nleaves(&self, id: NodeId) -> usize {
        self.node(id).nleaves
    }

    /// adh(t, parent(t)); empty slice at the root.
    pub fn adh(&self, id: NodeId) -> &[Vid] {
        &self.node(id).adh_parent
    }

    /// Degree in the unrooted tree: children plus the parent edge.
    pub fn degree(&self, id: NodeId) -> usize {
        self.node(id).children.len() + usize::from(self.node(id).parent.is_some())
    }

    pub fn next_node_id(&self) -> u32 {
        self.nodes.len() as u32
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|_| NodeId(i as u32)))
    }

    /// Leaf children CL(t).
    pub fn leaf_children(&self, t: NodeId) -> Vec<NodeId> {
        self.node(t)
            .children
            .iter()
            .copied()
            .filter(|&c| self.is_leaf(c))
            .collect()
    }

    /// L[t]: hyperedges at leaves in the subtree of `t`.
    pub fn leaves_under(&self, t: NodeId) -> EdgeSet {
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(id) = stack.pop() {
            if let Some(e) = self.leaf_edge(id) {
                out.push(e);
            }
            stack.extend(self.node(id).children.iter().copied());
        }
        EdgeSet::from_vec(out)
    }

    /// V(L(CL(t))): vertices under the leaf children's hyperedges.
    pub fn leaf_children_vertices(&self, t: NodeId) -> BTreeSet<Vid> {
        let mut out = BTreeSet::new();
        for c in self.leaf_children(t) {
            let e = self.leaf_edge(c).expect("leaf child");
            out.extend(self.g.vertex_set(e).iter().copied());
        }
        out
    }

    /// Assembles torso(t) for internal `t`: one hyperedge per child in
    /// child order carrying that child's adhesion, then the parent edge
    /// carrying adh(t, parent). Costs O(‖torso(t)‖).
    pub fn torso_view(&self, t: NodeId) -> Result<TorsoView, DyntwError> {
        if self.is_leaf(t) {
            return Err(DyntwError::invalid(format!(
                "{t} is a leaf, torsos live at internal nodes"
            )));
        }
        let mut hg = Hypergraph::new();
        let mut edge_node = BTreeMap::new();
        let mut node_edge = BTreeMap::new();
        for &c in &self.node(t).children {
            let e = hg.add_edge(&self.node(c).adh_parent);
            edge_node.insert(e, c);
            node_edge.insert(c, e);
        }
        let p = self
            .node(t)
            .parent
            .expect("internal nodes have a parent: the root is a leaf");
        let parent_edge = hg.add_edge(&self.node(t).adh_parent);
        edge_node.insert(parent_edge, p);
        node_edge.insert(p, parent_edge);
        Ok(TorsoView {
            hg,
            parent_edge,
            edge_node,
            node_edge,
        })
    }

    /// ‖torso(t)‖ without materializing the torso.
    pub fn torso_size(&self, t: NodeId) -> usize {
        let mut verts = BTreeSet::new();
        let mut sum = 0;
        let node = self.node(t);
        for &c in &node.children {
            let adh = &self.node(c).adh_parent;
            sum += adh.len() + 1;
            verts.extend(adh.iter().copied());
        }
        sum += node.adh_parent.len() + 1;
        verts.extend(node.adh_parent.iter().copied());
        verts.len() + sum
    }

    /// Applies one rotation, recording its charge and involved nodes.
    /// Validation happens before any mutation; an error leaves the
    /// decomposition untouched.
    pub fn apply(&mut self, rot: &Rotation, rec: &mut SeqRecorder) -> Result<Applied, DyntwError> {
        let applied = match rot {
            Rotation::Split { t, deep } => self.apply_split(*t, deep, rec),
            Rotation::Contract { s, t } => self.apply_contract(*s, *t, rec),
            Rotation::InsertLeaf { t, x } => self.apply_insert_leaf(*t, x, rec),
            Rotation::DeleteLeaf { leaf } => self.apply_delete_leaf(*leaf, rec),
            Rotation::Touch { t } => {
                if !self.exists(*t) {
                    return Err(DyntwError::invalid(format!("{t} does not exist")));
                }
                rec.size += 1;
                rec.rotations += 1;
                rec.involve(self, *t);
                Ok(Applied::Touch)
            }
        }?;
        rec.log.push(rot.clone());
        Ok(applied)
    }

    pub fn apply_sequence(
        &mut self,
        rots: &[Rotation],
        rec: &mut SeqRecorder,
    ) -> Result<Vec<Applied>, DyntwError> {
        rots.iter().map(|r| self.apply(r, rec)).collect()
    }

    fn apply_split(
        &mut self,
        t: NodeId,
        deep: &BTreeSet<NodeId>,
        rec: &mut SeqRecorder,
    ) -> Result<Applied, DyntwError> {
        if !self.exists(t) || self.is_leaf(t) {
            return Err(DyntwError::invalid(format!(
                "split target {t} is not internal"
            )));
        }
        let node = self.node(t);
        if deep.len() < 2 {
            return Err(DyntwError::invalid(
                "split needs ≥ 2 hyperedges on the deep side",
            ));
        }
        if !deep.iter().all(|c| node.children.contains(c)) {
            return Err(DyntwError::invalid("deep side must consist of children"));
        }
        if node.children.len() - deep.len() < 1 {
            return Err(DyntwError::invalid(
                "split needs ≥ 2 hyperedges on the parent side",
            ));
        }

        rec.size += self.torso_size(t) as u64;
        rec.rotations += 1;
        rec.involve(self, t);

        // adhesion of the new tree edge = bd_torso(deep side), which
        // expansion transfers to bd_G of the union of the deep subtrees
        let torso = self.torso_view(t)?;
        let deep_edges: EdgeSet = deep.iter().map(|c| torso.node_edge[c]).collect();
        let new_adh = torso.hg.boundary(&deep_edges)?;

        let parent = self.node(t).parent.expect("internal node has a parent");
        let old_children = self.node(t).children.clone();
        let shallow_kids: Vec<NodeId> = old_children
            .iter()
            .copied()
            .filter(|c| !deep.contains(c))
            .collect();
        let deep_kids: Vec<NodeId> = old_children
            .iter()
            .copied()
            .filter(|c| deep.contains(c))
            .collect();

        let shallow = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node {
            parent: Some(parent),
            children: shallow_kids.clone(),
            payload: Payload::Internal,
            nleaves: self.node(t).nleaves,
            adh_parent: self.node(t).adh_parent.clone(),
        }));
        let deep_count = deep_kids.iter().map(|&c| self.node(c).nleaves).sum();
        let deep_node = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node {
            parent: Some(shallow),
            children: deep_kids.clone(),
            payload: Payload::Internal,
            nleaves: deep_count,
            adh_parent: new_adh,
        }));
        self.node_mut(shallow).children.push(deep_node);
        for &c in &shallow_kids {
            self.node_mut(c).parent = Some(shallow);
        }
        for &c in &deep_kids {
            self.node_mut(c).parent = Some(deep_node);
        }
        let pos = self
            .node(parent)
            .children
            .iter()
            .position(|&c| c == t)
            .expect("child link");
        self.node_mut(parent).children[pos] = shallow;
        self.free(t);

        rec.destroyed(t);
        rec.created(shallow);
        rec.created(deep_node);
        Ok(Applied::Split {
            shallow,
            deep: deep_node,
        })
    }

    fn apply_contract(
        &mut self,
        s: NodeId,
        t: NodeId,
        rec: &mut SeqRecorder,
    ) -> Result<Applied, DyntwError> {
        if !self.exists(s) || !self.exists(t) {
            return Err(DyntwError::invalid("contract endpoint does not exist"));
        }
        if self.is_leaf(s) || self.is_leaf(t) {
            return Err(DyntwError::invalid("contract endpoints must be internal"));
        }
        let (up, down) = if self.node(t).parent == Some(s) {
            (s, t)
        } else if self.node(s).parent == Some(t) {
            (t, s)
        } else {
            return Err(DyntwError::invalid(format!("{s} and {t} are not adjacent")));
        };

        rec.size += (self.torso_size(s) + self.torso_size(t)) as u64;
        rec.rotations += 1;
        rec.involve(self, s);
        rec.involve(self, t);

        let parent = self.node(up).parent.expect("internal node has a parent");
        let down_kids = self.node(down).children.clone();
        let mut children = self.node(up).children.clone();
        let pos = children
            .iter()
            .position(|&c| c == down)
            .expect("child link");
        children.splice(pos..=pos, down_kids.iter().copied());

        let merged = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node {
            parent: Some(parent),
            children: children.clone(),
            payload: Payload::Internal,
            nleaves: self.node(up).nleaves,
            adh_parent: self.node(up).adh_parent.clone(),
        }));
        for &c in &children {
            self.node_mut(c).parent = Some(merged);
        }
        let ppos = self
            .node(parent)
            .children
            .iter()
            .position(|&c| c == up)
            .expect("child link");
        self.node_mut(parent).children[ppos] = merged;
        self.free(up);
        self.free(down);

        rec.destroyed(up);
        rec.destroyed(down);
        rec.created(merged);
        Ok(Applied::Contract { merged })
    }

    fn apply_insert_leaf(
        &mut self,
        t: NodeId,
        x: &[Vid],
        rec: &mut SeqRecorder,
    ) -> Result<Applied, DyntwError> {
        if !self.exists(t) || self.is_leaf(t) {
            return Err(DyntwError::invalid(format!(
                "insert target {t} is not internal"
            )));
        }
        let available = self.leaf_children_vertices(t);
        if !x.iter().all(|v| available.contains(v)) {
            return Err(DyntwError::invalid(
                "inserted vertex set must lie under existing leaf children",
            ));
        }

        rec.rotations += 1;
        rec.involve(self, t);
        let tsize = self.torso_size(t) as u64;

        let e = self.g.add_edge(x);
        let leaf = self.alloc(Some(t), Payload::Leaf(e));
        // every inserted vertex also lives in a sibling leaf's hyperedge,
        // so the new leaf's adhesion is all of X
        let mut adh: Vec<Vid> = self.g.vertex_set(e).to_vec();
        adh.sort_unstable();
        self.node_mut(leaf).adh_parent = adh;
        self.node_mut(leaf).nleaves = 1;

        // sibling leaf adhesions gain X ∩ V(e''); internal siblings and
        // the parent edge cannot change: a vertex of X under an internal
        // sibling already had an occurrence outside it (the leaf child
        // that justified X), so it was in that adhesion before. A sibling
        // whose adhesion grows is involved so the trace covers the change.
        for c in self.leaf_children(t) {
            if c == leaf {
                continue;
            }
            let ce = self.leaf_edge(c).expect("leaf child");
            let gained: Vec<Vid> = x
                .iter()
                .copied()
                .filter(|v| {
                    self.g.vertex_set(ce).contains(v) && !self.node(c).adh_parent.contains(v)
                })
                .collect();
            if !gained.is_empty() {
                {
                    let adh = &mut self.node_mut(c).adh_parent;
                    adh.extend(gained);
                    adh.sort_unstable();
                }
                rec.involve(self, c);
            }
        }

        // counters along the ancestor path; the walk length is the
        // |anc(t)| term of the charge
        let mut walk = 0u64;
        let mut cur = Some(t);
        while let Some(y) = cur {
            self.node_mut(y).nleaves += 1;
            walk += 1;
            cur = self.node(y).parent;
        }
        rec.size += x.len() as u64 * tsize + walk;
        rec.created(leaf);
        Ok(Applied::InsertLeaf { leaf, edge: e })
    }

    fn apply_delete_leaf(
        &mut self,
        leaf: NodeId,
        rec: &mut SeqRecorder,
    ) -> Result<Applied, DyntwError> {
        if !self.exists(leaf) {
            return Err(DyntwError::invalid(format!("{leaf} does not exist")));
        }
        let Some(e) = self.leaf_edge(leaf) else {
            return Err(DyntwError::invalid(format!("{leaf} is not a leaf")));
        };
        let Some(t) = self.node(leaf).parent else {
            return Err(DyntwError::invalid("cannot delete the root"));
        };
        if self.is_leaf(t) {
            return Err(DyntwError::invalid(
                "parent of a deletable leaf must be internal",
            ));
        }
        if self.node(t).children.len() < 3 {
            return Err(DyntwError::invalid(
                "deleting needs ≥ 3 children at the parent to keep its degree",
            ));
        }
        let ev: Vec<Vid> = self.g.vertex_set(e).to_vec();
        let mut covered = BTreeSet::new();
        for c in self.leaf_children(t) {
            if c != leaf {
                covered.extend(
                    self.g
                        .vertex_set(self.leaf_edge(c).unwrap())
                        .iter()
                        .copied(),
                );
            }
        }
        if !ev.iter().all(|v| covered.contains(v)) {
            return Err(DyntwError::invalid(
                "deleted leaf's vertices must persist under sibling leaves",
            ));
        }

        rec.rotations += 1;
        rec.involve(self, leaf);
        rec.involve(self, t);
        let tsize = self.torso_size(t) as u64;

        let siblings = self.leaf_children(t);
        self.g.remove_edge(e)?;
        // a sibling adhesion vertex leaves when its only other occurrence
        // was the deleted hyperedge; internal siblings and the parent
        // edge keep theirs, since such vertices still occur under the
        // covering sibling leaves. A sibling whose adhesion shrinks is
        // involved so the trace covers the change.
        for c in siblings {
            if c == leaf {
                continue;
            }
            let ce = self.leaf_edge(c).expect("leaf child");
            let keep: Vec<Vid> = self
                .node(c)
                .adh_parent
                .iter()
                .copied()
                .filter(|&v| self.g.edges_at(v).iter().any(|&other| other != ce))
                .collect();
            if keep.len() != self.node(c).adh_parent.len() {
                self.node_mut(c).adh_parent = keep;
                rec.involve(self, c);
            }
        }
        let pos = self
            .node(t)
            .children
            .iter()
            .position(|&c| c == leaf)
            .expect("child link");
        self.node_mut(t).children.remove(pos);
        self.free(leaf);

        let mut walk = 0u64;
        let mut cur = Some(t);
        while let Some(y) = cur {
            self.node_mut(y).nleaves -= 1;
            walk += 1;
            cur = self.node(y).parent;
        }
        rec.size += ev.len() as u64 * tsize + walk;
        rec.destroyed(leaf);
        Ok(Applied::DeleteLeaf)
    }

    /// Recomputes every adhesion and leaf counter from the definition:
    /// one post-order pass merging per-subtree occurrence counts, a
    /// vertex being in bd(L[t]) exactly when its subtree occurrence count
    /// is below its degree in the hypergraph.
    fn recompute_all(&mut self) {
        let results = self.recompute_maps();
        for (id, (adh, nl)) in results {
            let node = self.node_mut(id);
            node.adh_parent = adh;
            node.nleaves = nl;
        }
    }

    fn recompute_maps(&self) -> BTreeMap<NodeId, (Vec<Vid>, usize)> {
        let mut out: BTreeMap<NodeId, (Vec<Vid>, usize)> = BTreeMap::new();
        // iterative post-order: (node, child cursor), merging counts up
        let mut counts: BTreeMap<NodeId, BTreeMap<Vid, usize>> = BTreeMap::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, cursor)) = stack.pop() {
            let node = self.node(id);
            if cursor < node.children.len() {
                stack.push((id, cursor + 1));
                stack.push((node.children[cursor], 0));
                continue;
            }
            let mut mine: BTreeMap<Vid, usize> = BTreeMap::new();
            let mut nl = 0usize;
            if let Payload::Leaf(e) = node.payload {
                for &v in self.g.vertex_set(e) {
                    *mine.entry(v).or_insert(0) += 1;
                }
                nl = 1;
            }
            for &c in &node.children {
                let cm = counts.remove(&c).expect("child computed");
                let (mut big, small) = if cm.len() > mine.len() {
                    (cm, mine)
                } else {
                    (mine, cm)
                };
                for (v, k) in small {
                    *big.entry(v).or_insert(0) += k;
                }
                mine = big;
                nl += out[&c].1;
            }
            let adh: Vec<Vid> = mine
                .iter()
                .filter(|&(&v, &k)| k < self.g.edges_at(v).len())
                .map(|(&v, _)| v)
                .collect();
            out.insert(id, (adh, nl));
            counts.insert(id, mine);
        }
        out
    }

    /// From-scratch verification of the whole representation; reports the
    /// first mismatch found.
    pub fn audit(&self) -> Result<(), String> {
        // tree shape and cross-links
        if !self.exists(self.root) || !self.is_leaf(self.root) {
            return Err("root missing or not a leaf".into());
        }
        if self.node(self.root).parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return Err(format!("{id} reached twice"));
            }
            let node = self.node(id);
            match node.payload {
                Payload::Leaf(e) => {
                    if !node.children.is_empty() && id != self.root {
                        return Err(format!("non-root leaf {id} has children"));
                    }
                    if node.children.len() > 1 {
                        return Err(format!("root leaf {id} has several children"));
                    }
                    if self.leaf_of.get(&e) != Some(&id) {
                        return Err(format!("leaf lookup for {e} broken"));
                    }
                }
                Payload::Internal => {
                    if node.children.len() < 2 {
                        return Err(format!("internal {id} has degree < 3"));
                    }
                }
            }
            for &c in &node.children {
                if !self.exists(c) {
                    return Err(format!("{id} links to dead child"));
                }
                if self.node(c).parent != Some(id) {
                    return Err(format!("parent pointer of {c} disagrees with {id}"));
                }
                stack.push(c);
            }
        }
        let live = self.node_ids().count();
        if seen.len() != live {
            return Err("nodes unreachable from the root exist".into());
        }
        // leaf bijection totality
        let mut edges = self.g.all_edges();
        for &e in self.leaf_of.keys() {
            if !edges.contains(e) {
                return Err(format!("leaf stored for non-edge {e}"));
            }
            edges.remove(e);
        }
        if !edges.is_empty() {
            return Err("hyperedges without a leaf exist".into());
        }
        // adhesions and counters against the definition
        let fresh = self.recompute_maps();
        for (id, (adh, nl)) in fresh {
            let node = self.node(id);
            if node.adh_parent != adh {
                return Err(format!(
                    "adhesion of {id} is {:?}, definition gives {:?}",
                    node.adh_parent, adh
                ));
            }
            if node.nleaves != nl {
                return Err(format!("|L[{id}]| stored {} true {nl}", node.nleaves));
            }
        }
        Ok(())
    }

    /// Order-independent structural fingerprint, for isomorphism checks.
    pub fn shape_signature(&self) -> String {
        fn rec(d: &Sbd, id: NodeId) -> String {
            let node = d.node(id);
            let mut parts: Vec<String> = node.children.iter().map(|&c| rec(d, c)).collect();
            parts.sort();
            match node.payload {
                Payload::Leaf(e) if parts.is_empty() => format!("{e}"),
                Payload::Leaf(e) => format!("{e}[{}]", parts.join(",")),
                Payload::Internal => format!("({})", parts.join(",")),
            }
        }
        rec(self, self.root)
    }

    /// Debug dump, one node per line in DFS preorder:
    /// `id depth kind parent |L[t]| adhesion-to-parent`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = self.node(id);
            let kind = match node.payload {
                Payload::Leaf(e) => format!("leaf({e})"),
                Payload::Internal => "int".into(),
            };
            let parent = node.parent.map_or("-".into(), |p| p.to_string());
            let adh: Vec<String> = node.adh_parent.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{id} {depth} {kind} {parent} {} ({})\n",
                node.nleaves,
                adh.join(",")
            ));
            for &c in node.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}
