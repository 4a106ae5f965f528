//! Hypergraphs with boundary/contraction calculus.
//!
//! A hypergraph is a vertex set plus hyperedges carrying arbitrary vertex
//! sets; distinct hyperedges with equal vertex sets are allowed. The vertex
//! set is always exactly the union of the hyperedge vertex sets. For an edge
//! set `A`, `bd(A)` is the set of vertices incident both to a hyperedge in
//! `A` and to one outside it, and `λ(A) = |bd(A)|`; `λ` is symmetric and
//! submodular. Contraction `G ◁ A` replaces `A` by a single hyperedge on
//! `bd(A)` and preserves boundaries of edge sets under expansion `▷`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::DyntwError;

/// Vertex id. Dense small integers; the dynamic engine uses `0..n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Vid(pub u32);

/// Hyperedge id, unique within one hypergraph for its lifetime.
/// Freed ids are never reused (no compaction is implemented; the engine
/// has no call site for it).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Eid(pub u32);

impl fmt::Display for Vid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Eid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Subset of a hypergraph's hyperedges: sorted, deduplicated ids.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EdgeSet(Vec<Eid>);

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet(Vec::new())
    }

    pub fn from_vec(mut ids: Vec<Eid>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        EdgeSet(ids)
    }

    pub fn singleton(e: Eid) -> Self {
        EdgeSet(vec![e])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: Eid) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    pub fn insert(&mut self, e: Eid) {
        if let Err(i) = self.0.binary_search(&e) {
            self.0.insert(i, e);
        }
    }

    pub fn remove(&mut self, e: Eid) {
        if let Ok(i) = self.0.binary_search(&e) {
            self.0.remove(i);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Eid> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Eid] {
        &self.0
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        EdgeSet::from_vec(v)
    }

    pub fn intersection(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(
            self.0
                .iter()
                .copied()
                .filter(|&e| other.contains(e))
                .collect(),
        )
    }

    pub fn minus(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(
            self.0
                .iter()
                .copied()
                .filter(|&e| !other.contains(e))
                .collect(),
        )
    }
}

impl FromIterator<Eid> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = Eid>>(iter: T) -> Self {
        EdgeSet::from_vec(iter.into_iter().collect())
    }
}

/// Expansion `B ▷ A`: maps an edge set of `G ◁ A` back to one of `G`.
/// `e_a` is the hyperedge that the contraction introduced.
pub fn expand_set(b: &EdgeSet, a: &EdgeSet, e_a: Eid) -> EdgeSet {
    if b.contains(e_a) {
        let mut out = b.clone();
        out.remove(e_a);
        out.union(a)
    } else {
        b.clone()
    }
}

#[derive(Clone, Default)]
pub struct Hypergraph {
    // V(e) per hyperedge id, sorted; None marks a freed id.
    edges: Vec<Option<Vec<Vid>>>,
    // vertex -> sorted ids of hyperedges containing it; an entry exists
    // exactly while the vertex lies in some hyperedge (V(G) = V(E(G))).
    incidence: BTreeMap<Vid, Vec<Eid>>,
    live: usize,
}

impl Hypergraph {
    pub fn new() -> Self {
        Hypergraph::default()
    }

    /// Adds a hyperedge with the given vertex set (sorted and deduplicated
    /// here); returns its fresh id.
    pub fn add_edge(&mut self, vs: &[Vid]) -> Eid {
        let mut vs: Vec<Vid> = vs.to_vec();
        vs.sort_unstable();
        vs.dedup();
        let id = Eid(self.edges.len() as u32);
        for &v in &vs {
            let list = self.incidence.entry(v).or_default();
            // ids grow monotonically, so push keeps the list sorted
            list.push(id);
        }
        self.edges.push(Some(vs));
        self.live += 1;
        id
    }

    pub fn remove_edge(&mut self, e: Eid) -> Result<(), DyntwError> {
        let vs = self
            .edges
            .get_mut(e.0 as usize)
            .and_then(Option::take)
            .ok_or_else(|| DyntwError::invalid(format!("unknown hyperedge {e}")))?;
        for v in vs {
            let list = self.incidence.get_mut(&v).expect("incidence consistent");
            let i = list.binary_search(&e).expect("incidence consistent");
            list.remove(i);
            if list.is_empty() {
                self.incidence.remove(&v);
            }
        }
        self.live -= 1;
        Ok(())
    }

    pub fn has_edge(&self, e: Eid) -> bool {
        self.edges.get(e.0 as usize).is_some_and(Option::is_some)
    }

    /// V(e); panics on freed/unknown ids (callers validate via `has_edge`).
    pub fn vertex_set(&self, e: Eid) -> &[Vid] {
        self.edges[e.0 as usize]
            .as_deref()
            .unwrap_or_else(|| panic!("unknown hyperedge {e}"))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = Eid> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, vs)| vs.is_some())
            .map(|(i, _)| Eid(i as u32))
    }

    pub fn all_edges(&self) -> EdgeSet {
        self.edge_ids().collect()
    }

    pub fn n_edges(&self) -> usize {
        self.live
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vid> + '_ {
        self.incidence.keys().copied()
    }

    pub fn n_vertices(&self) -> usize {
        self.incidence.len()
    }

    pub fn has_vertex(&self, v: Vid) -> bool {
        self.incidence.contains_key(&v)
    }

    /// Hyperedges containing `v`, sorted by id.
    pub fn edges_at(&self, v: Vid) -> &[Eid] {
        self.incidence.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// ‖G‖ = |V(G)| + Σ_e (|V(e)|+1).
    pub fn size(&self) -> usize {
        let edge_part: usize = self.edges.iter().flatten().map(|vs| vs.len() + 1).sum();
        self.incidence.len() + edge_part
    }

    pub fn check_subset(&self, a: &EdgeSet) -> Result<(), DyntwError> {
        for e in a.iter() {
            if !self.has_edge(e) {
                return Err(DyntwError::invalid(format!("unknown hyperedge {e}")));
            }
        }
        Ok(())
    }

    /// V(A): union of the vertex sets of the hyperedges in `a`.
    pub fn vertex_union(&self, a: &EdgeSet) -> Vec<Vid> {
        let mut out: Vec<Vid> = a
            .iter()
            .flat_map(|e| self.vertex_set(e).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// bd(A) = V(A) ∩ V(Ā): vertices with incident hyperedges on both sides.
    pub fn boundary(&self, a: &EdgeSet) -> Result<Vec<Vid>, DyntwError> {
        self.check_subset(a)?;
        let mut out = Vec::new();
        for v in self.vertex_union(a) {
            if self.edges_at(v).iter().any(|&e| !a.contains(e)) {
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn lambda(&self, a: &EdgeSet) -> Result<usize, DyntwError> {
        Ok(self.boundary(a)?.len())
    }

    /// λ(A∪B) + λ(A∩B) ≤ λ(A) + λ(B); holds for every correct boundary
    /// computation, exposed as a test-support check.
    pub fn submodularity_check(&self, a: &EdgeSet, b: &EdgeSet) -> Result<bool, DyntwError> {
        let l_union = self.lambda(&a.union(b))?;
        let l_inter = self.lambda(&a.intersection(b))?;
        Ok(l_union + l_inter <= self.lambda(a)? + self.lambda(b)?)
    }

    /// G ◁ A: hyperedges Ā ∪ {e_A} with V(e_A) = bd(A), ids of Ā preserved.
    /// Returns the contracted hypergraph and the fresh id of e_A.
    pub fn contract(&self, a: &EdgeSet) -> Result<(Hypergraph, Eid), DyntwError> {
        self.check_subset(a)?;
        if a.len() == self.live {
            return Err(DyntwError::invalid(
                "contracting the full hyperedge set is not defined".to_string(),
            ));
        }
        let bd = self.boundary(a)?;
        let mut out = Hypergraph {
            edges: vec![None; self.edges.len()],
            incidence: BTreeMap::new(),
            live: 0,
        };
        for e in self.edge_ids() {
            if !a.contains(e) {
                let vs = self.vertex_set(e).to_vec();
                for &v in &vs {
                    out.incidence.entry(v).or_default().push(e);
                }
                out.edges[e.0 as usize] = Some(vs);
                out.live += 1;
            }
        }
        let e_a = Eid(out.edges.len() as u32);
        for &v in &bd {
            out.incidence.entry(v).or_default().push(e_a);
        }
        out.edges.push(Some(bd));
        out.live += 1;
        Ok((out, e_a))
    }

    /// Primal graph: V(G) relabeled as given, edge uv iff some hyperedge
    /// contains both. Vertex ids are kept as-is (callers index by `Vid`).
    pub fn primal(&self) -> PrimalGraph {
        let mut adj: BTreeMap<Vid, BTreeSet<Vid>> = BTreeMap::new();
        for v in self.vertices() {
            adj.entry(v).or_default();
        }
        for e in self.edge_ids() {
            let vs = self.vertex_set(e);
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    adj.get_mut(&vs[i]).unwrap().insert(vs[j]);
                    adj.get_mut(&vs[j]).unwrap().insert(vs[i]);
                }
            }
        }
        PrimalGraph { adj }
    }

    /// Every vertex lies in at least two hyperedges. Torsos always satisfy
    /// this; support hypergraphs satisfy it except at isolated vertices.
    pub fn is_normal(&self) -> bool {
        self.incidence.values().all(|l| l.len() >= 2)
    }
}

impl fmt::Debug for Hypergraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hypergraph{{")?;
        for e in self.edge_ids() {
            let vs: Vec<String> = self.vertex_set(e).iter().map(|v| v.to_string()).collect();
            write!(f, " {e}:({})", vs.join(","))?;
        }
        write!(f, " }}")
    }
}

/// Primal graph over `Vid`s (not necessarily dense), adjacency-set backed.
#[derive(Clone, Debug)]
pub struct PrimalGraph {
    pub adj: BTreeMap<Vid, BTreeSet<Vid>>,
}

impl PrimalGraph {
    pub fn has_edge(&self, u: Vid, v: Vid) -> bool {
        self.adj.get(&u).is_some_and(|s| s.contains(&v))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vid> + '_ {
        self.adj.keys().copied()
    }

    pub fn edge_pairs(&self) -> Vec<(Vid, Vid)> {
        let mut out = Vec::new();
        for (&u, nbrs) in &self.adj {
            for &v in nbrs {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Simple graph on dense vertices `0..n`; the dynamic engine's input shape.
#[derive(Clone, Debug, Default)]
pub struct SimpleGraph {
    adj: Vec<BTreeSet<u32>>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        SimpleGraph {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<(), DyntwError> {
        if u == v {
            return Err(DyntwError::invalid(format!("self-loop at {u}")));
        }
        let n = self.adj.len() as u32;
        if u >= n || v >= n {
            return Err(DyntwError::invalid(format!(
                "vertex out of range: {u} {v} (n={n})"
            )));
        }
        if !self.adj[u as usize].insert(v) {
            return Err(DyntwError::invalid(format!("duplicate edge {u}-{v}")));
        }
        self.adj[v as usize].insert(u);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: u32, v: u32) -> Result<(), DyntwError> {
        if !self.has_edge(u, v) {
            return Err(DyntwError::invalid(format!("missing edge {u}-{v}")));
        }
        self.adj[u as usize].remove(&v);
        self.adj[v as usize].remove(&u);
        Ok(())
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj.get(u as usize).is_some_and(|s| s.contains(&v))
    }

    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[u as usize].iter().copied()
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Support hypergraph of a simple graph: the empty hyperedge `e_⊥`, one
/// singleton hyperedge `e_v` per vertex, one pair hyperedge `e_uv` per edge.
/// `P(su(G)) = G`.
pub struct SupportHypergraph {
    pub hg: Hypergraph,
    pub e_bot: Eid,
    e_vert: Vec<Eid>,
    e_pair: BTreeMap<(u32, u32), Eid>,
}

impl SupportHypergraph {
    pub fn build(g: &SimpleGraph) -> Self {
        let mut hg = Hypergraph::new();
        let e_bot = hg.add_edge(&[]);
        let e_vert: Vec<Eid> = (0..g.n() as u32).map(|v| hg.add_edge(&[Vid(v)])).collect();
        let mut e_pair = BTreeMap::new();
        for (u, v) in g.edges() {
            e_pair.insert((u, v), hg.add_edge(&[Vid(u), Vid(v)]));
        }
        SupportHypergraph {
            hg,
            e_bot,
            e_vert,
            e_pair,
        }
    }

    pub fn vertex_edge(&self, v: u32) -> Eid {
        self.e_vert[v as usize]
    }

    pub fn pair_edge(&self, u: u32, v: u32) -> Option<Eid> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.e_pair.get(&key).copied()
    }

    pub fn add_pair(&mut self, u: u32, v: u32, e: Eid) {
        let key = if u < v { (u, v) } else { (v, u) };
        self.e_pair.insert(key, e);
    }

    pub fn remove_pair(&mut self, u: u32, v: u32) -> Option<Eid> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.e_pair.remove(&key)
    }

    pub fn pair_edges(&self) -> impl Iterator<Item = ((u32, u32), Eid)> + '_ {
        self.e_pair.iter().map(|(&k, &e)| (k, e))
    }

    /// Which graph edge a hyperedge stands for, if it is a pair hyperedge.
    pub fn pair_of(&self, e: Eid) -> Option<(u32, u32)> {
        // the engine keeps this map small; linear scan is fine for tests,
        // hot paths use pair_edge/add_pair bookkeeping instead
        self.e_pair.iter().find(|(_, &pe)| pe == e).map(|(&k, _)| k)
    }
}
