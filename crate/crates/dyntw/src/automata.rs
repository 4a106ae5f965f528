//! Tree-decomposition automata: bag-indexed dynamic programs evaluated
//! bottom-up over an annotated decomposition, and a maintained run that
//! re-evaluates exactly the rebuilt prefix after each update.
//!
//! An automaton supplies a leaf state `ι(bag)` and a transition
//! `δ(bag_t, bag_x, bag_y, edges_t, ρ(x), ρ(y))`; one-child nodes pass
//! the null state and an empty bag for the missing side. Decompositions
//! are raw (bags change arbitrarily between parent and child), so every
//! transition projects child tables onto the shared vertices, extends
//! them over the vertices new to the parent bag, joins the two sides,
//! and only then imposes the node's own edge annotations. Because each
//! graph edge is annotated at exactly one node with both endpoints in
//! its bag, and every edge at a vertex is annotated at or below the
//! point where the vertex leaves the bags, each constraint lands exactly
//! once and always before its vertices are projected away.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::hypergraph::Vid;
use crate::tree_decomp::{apply_description, AnnotatedTd, PrefixRebuildDescription, TdId};
use crate::DyntwError;

/// A per-node automaton state. Tables are keyed over the node's sorted
/// bag (bit or coordinate `i` is the bag's `i`-th vertex); values count
/// or constrain only vertices already projected away, which is what lets
/// sibling tables combine by plain addition, minimum, or intersection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum State {
    /// Null state for an absent second child.
    Bot,
    /// Independent set: selection mask → best number of selected
    /// vertices no longer in the bag.
    Mis(BTreeMap<u64, u64>),
    /// Coloring: the bag colorings extendable below this node.
    Color(BTreeSet<Vec<u8>>),
    /// Dominating set: (selected mask, covered mask) → least number of
    /// selected vertices no longer in the bag. Selected implies covered.
    Dom(BTreeMap<(u64, u64), u64>),
}

impl State {
    /// Table entries held; the null state holds none.
    pub fn entries(&self) -> usize {
        match self {
            State::Bot => 0,
            State::Mis(m) => m.len(),
            State::Color(s) => s.len(),
            State::Dom(m) => m.len(),
        }
    }
}

/// What a root state decodes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Count(u64),
    Feasible(bool),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Count(c) => write!(f, "{c}"),
            Answer::Feasible(b) => write!(f, "{b}"),
        }
    }
}

/// A bottom-up tree-decomposition automaton. `delta` must be a pure
/// function of its six arguments, and the tables it produces stay within
/// `tau` entries for the widths it is fed.
pub trait Automaton {
    fn name(&self) -> &str;
    /// Declared table-size class at width `k` (bags of `k+1` vertices).
    fn tau(&self, k: usize) -> u64;
    fn iota(&self, bag: &[Vid]) -> State;
    #[allow(clippy::too_many_arguments)]
    fn delta(
        &self,
        bag_t: &[Vid],
        bag_x: &[Vid],
        bag_y: &[Vid],
        edges_t: &[(Vid, Vid)],
        sx: &State,
        sy: &State,
    ) -> State;
    /// Decodes the run's answer from the root state. Exported
    /// decompositions root at an empty bag; the shipped automata accept
    /// any root bag except where noted.
    fn answer(&self, root: &State) -> Answer;
}

/// For each position of `from`, its position in `to`, or None when the
/// vertex is projected away.
fn position_map(from: &[Vid], to: &[Vid]) -> Vec<Option<usize>> {
    from.iter().map(|v| to.binary_search(v).ok()).collect()
}

/// Mask over `to` of the positions holding vertices absent from `from`.
fn introduced_mask(from: &[Vid], to: &[Vid]) -> u64 {
    debug_assert!(to.len() < 64, "bags fit in a machine word");
    let mut m = 0u64;
    for (i, v) in to.iter().enumerate() {
        if from.binary_search(v).is_err() {
            m |= 1 << i;
        }
    }
    m
}

/// All submasks of `m`, including 0 and `m` itself.
fn submasks(m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = m;
    loop {
        out.push(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & m;
    }
    out
}

fn full_mask(n: usize) -> u64 {
    debug_assert!(n < 64);
    (1u64 << n) - 1
}

fn edge_positions(bag: &[Vid], uv: (Vid, Vid)) -> (usize, usize) {
    let pu = bag
        .binary_search(&uv.0)
        .expect("annotated endpoints are in the bag");
    let pv = bag
        .binary_search(&uv.1)
        .expect("annotated endpoints are in the bag");
    (pu, pv)
}

/// Maximum independent set size.
pub struct MisAutomaton;

impl MisAutomaton {
    /// Project a child table onto `to`, banking selected projected
    /// vertices into the value, then extend over the vertices new in
    /// `to` (they have no occurrences below, so both choices are free).
    fn transfer(bag_c: &[Vid], to: &[Vid], s: &State) -> BTreeMap<u64, u64> {
        let neutral;
        let table = match s {
            State::Bot => {
                neutral = BTreeMap::from([(0u64, 0u64)]);
                &neutral
            }
            State::Mis(m) => m,
            _ => unreachable!("state from another automaton"),
        };
        let map = position_map(bag_c, to);
        let ext = submasks(introduced_mask(bag_c, to));
        let mut out: BTreeMap<u64, u64> = BTreeMap::new();
        for (&key, &val) in table {
            let mut base = 0u64;
            let mut banked = val;
            for (i, m) in map.iter().enumerate() {
                if key >> i & 1 == 1 {
                    match m {
                        Some(j) => base |= 1 << j,
                        None => banked += 1,
                    }
                }
            }
            for &e in &ext {
                out.entry(base | e)
                    .and_modify(|b| *b = (*b).max(banked))
                    .or_insert(banked);
            }
        }
        out
    }
}

impl Automaton for MisAutomaton {
    fn name(&self) -> &str {
        "mis"
    }

    fn tau(&self, k: usize) -> u64 {
        1u64.checked_shl(k as u32 + 1).unwrap_or(u64::MAX)
    }

    fn iota(&self, bag: &[Vid]) -> State {
        State::Mis(
            submasks(full_mask(bag.len()))
                .into_iter()
                .map(|m| (m, 0))
                .collect(),
        )
    }

    fn delta(
        &self,
        bag_t: &[Vid],
        bag_x: &[Vid],
        bag_y: &[Vid],
        edges_t: &[(Vid, Vid)],
        sx: &State,
        sy: &State,
    ) -> State {
        let tx = Self::transfer(bag_x, bag_t, sx);
        let ty = Self::transfer(bag_y, bag_t, sy);
        // vertices projected away below x and below y are disjoint
        // (a shared one would be in bag_t), so the values add
        let mut joined: BTreeMap<u64, u64> = BTreeMap::new();
        for (k, vx) in tx {
            if let Some(vy) = ty.get(&k) {
                joined.insert(k, vx + vy);
            }
        }
        for &uv in edges_t {
            let (pu, pv) = edge_positions(bag_t, uv);
            let bits = (1 << pu) | (1 << pv);
            joined.retain(|k, _| k & bits != bits);
        }
        State::Mis(joined)
    }

    fn answer(&self, root: &State) -> Answer {
        let State::Mis(m) = root else {
            unreachable!("state from another automaton")
        };
        Answer::Count(
            m.iter()
                .map(|(k, v)| v + u64::from(k.count_ones()))
                .max()
                .unwrap_or(0),
        )
    }
}

/// q-colorability.
pub struct ColorAutomaton {
    q: u8,
    name: String,
}

impl ColorAutomaton {
    pub fn new(q: u8) -> Option<ColorAutomaton> {
        (q >= 2).then(|| ColorAutomaton {
            q,
            name: format!("color{q}"),
        })
    }

    /// Writes every completion of `partial` over the free positions.
    fn complete(
        &self,
        partial: &mut Vec<u8>,
        free: &[usize],
        k: usize,
        out: &mut BTreeSet<Vec<u8>>,
    ) {
        if k == free.len() {
            out.insert(partial.clone());
            return;
        }
        for c in 0..self.q {
            partial[free[k]] = c;
            self.complete(partial, free, k + 1, out);
        }
    }

    fn transfer(&self, bag_c: &[Vid], to: &[Vid], s: &State) -> BTreeSet<Vec<u8>> {
        let neutral;
        let table = match s {
            State::Bot => {
                neutral = BTreeSet::from([Vec::new()]);
                &neutral
            }
            State::Color(t) => t,
            _ => unreachable!("state from another automaton"),
        };
        let map = position_map(bag_c, to);
        let mut fixed = vec![false; to.len()];
        for m in map.iter().flatten() {
            fixed[*m] = true;
        }
        let free: Vec<usize> = (0..to.len()).filter(|&j| !fixed[j]).collect();
        let mut out = BTreeSet::new();
        for key in table {
            let mut partial = vec![0u8; to.len()];
            for (i, m) in map.iter().enumerate() {
                if let Some(j) = m {
                    partial[*j] = key[i];
                }
            }
            self.complete(&mut partial, &free, 0, &mut out);
        }
        out
    }
}

impl Automaton for ColorAutomaton {
    fn name(&self) -> &str {
        &self.name
    }

    fn tau(&self, k: usize) -> u64 {
        (self.q as u64)
            .checked_pow(k as u32 + 1)
            .unwrap_or(u64::MAX)
    }

    fn iota(&self, bag: &[Vid]) -> State {
        let mut out = BTreeSet::new();
        let free: Vec<usize> = (0..bag.len()).collect();
        self.complete(&mut vec![0u8; bag.len()], &free, 0, &mut out);
        State::Color(out)
    }

    fn delta(
        &self,
        bag_t: &[Vid],
        bag_x: &[Vid],
        bag_y: &[Vid],
        edges_t: &[(Vid, Vid)],
        sx: &State,
        sy: &State,
    ) -> State {
        let tx = self.transfer(bag_x, bag_t, sx);
        let ty = self.transfer(bag_y, bag_t, sy);
        let mut joined: BTreeSet<Vec<u8>> = tx.intersection(&ty).cloned().collect();
        for &uv in edges_t {
            let (pu, pv) = edge_positions(bag_t, uv);
            joined.retain(|key| key[pu] != key[pv]);
        }
        State::Color(joined)
    }

    fn answer(&self, root: &State) -> Answer {
        let State::Color(s) = root else {
            unreachable!("state from another automaton")
        };
        Answer::Feasible(!s.is_empty())
    }
}

/// Minimum dominating set size. A vertex must be selected or covered by
/// the time it is projected away; the edge-ownership discipline makes
/// every potential cover visible before that point.
pub struct DomSetAutomaton;

impl DomSetAutomaton {
    fn transfer(bag_c: &[Vid], to: &[Vid], s: &State) -> BTreeMap<(u64, u64), u64> {
        let neutral;
        let table = match s {
            State::Bot => {
                neutral = BTreeMap::from([((0u64, 0u64), 0u64)]);
                &neutral
            }
            State::Dom(m) => m,
            _ => unreachable!("state from another automaton"),
        };
        let map = position_map(bag_c, to);
        let ext = submasks(introduced_mask(bag_c, to));
        let mut out: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        'entry: for (&(kin, kdom), &val) in table {
            let mut bin = 0u64;
            let mut bdom = 0u64;
            let mut cost = val;
            for (i, m) in map.iter().enumerate() {
                let sel = kin >> i & 1 == 1;
                let cov = kdom >> i & 1 == 1;
                match m {
                    Some(j) => {
                        if sel {
                            bin |= 1 << j;
                        }
                        if cov {
                            bdom |= 1 << j;
                        }
                    }
                    // a projected vertex pays for its selection or must
                    // already be covered; nothing above can cover it
                    None if sel => cost += 1,
                    None if cov => {}
                    None => continue 'entry,
                }
            }
            // introduced vertices are selected (covering themselves) or
            // unselected and so far uncovered
            for &e in &ext {
                out.entry((bin | e, bdom | e))
                    .and_modify(|b| *b = (*b).min(cost))
                    .or_insert(cost);
            }
        }
        out
    }
}

impl Automaton for DomSetAutomaton {
    fn name(&self) -> &str {
        "domset"
    }

    fn tau(&self, k: usize) -> u64 {
        3u64.checked_pow(k as u32 + 1).unwrap_or(u64::MAX)
    }

    fn iota(&self, bag: &[Vid]) -> State {
        State::Dom(
            submasks(full_mask(bag.len()))
                .into_iter()
                .map(|m| ((m, m), 0))
                .collect(),
        )
    }

    fn delta(
        &self,
        bag_t: &[Vid],
        bag_x: &[Vid],
        bag_y: &[Vid],
        edges_t: &[(Vid, Vid)],
        sx: &State,
        sy: &State,
    ) -> State {
        let tx = Self::transfer(bag_x, bag_t, sx);
        let ty = Self::transfer(bag_y, bag_t, sy);
        let mut by_in: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
        for (&(kin, kdom), &val) in &ty {
            by_in.entry(kin).or_default().push((kdom, val));
        }
        // equal selections combine; coverage is the union of what the
        // two sides saw, costs add over their disjoint projected sets
        let mut joined: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        for ((kin, domx), vx) in tx {
            let Some(list) = by_in.get(&kin) else {
                continue;
            };
            for &(domy, vy) in list {
                let key = (kin, domx | domy);
                let cost = vx + vy;
                joined
                    .entry(key)
                    .and_modify(|b| *b = (*b).min(cost))
                    .or_insert(cost);
            }
        }
        for &uv in edges_t {
            let (pu, pv) = edge_positions(bag_t, uv);
            let mut next: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            for ((kin, kdom), val) in joined {
                let mut d = kdom;
                if kin >> pu & 1 == 1 {
                    d |= 1 << pv;
                }
                if kin >> pv & 1 == 1 {
                    d |= 1 << pu;
                }
                next.entry((kin, d))
                    .and_modify(|b| *b = (*b).min(val))
                    .or_insert(val);
            }
            joined = next;
        }
        State::Dom(joined)
    }

    /// Defined on empty root bags (as the exporter guarantees): every
    /// vertex has been projected, so feasible entries hold full answers.
    fn answer(&self, root: &State) -> Answer {
        let State::Dom(m) = root else {
            unreachable!("state from another automaton")
        };
        debug_assert!(m.keys().all(|&k| k == (0, 0)), "root bag must be empty");
        Answer::Count(
            m.values()
                .copied()
                .min()
                .expect("selecting every vertex always dominates"),
        )
    }
}

/// Looks up a shipped automaton by name: `mis`, `domset`, or `color<q>`
/// with q ≥ 2 (for example `color3`).
pub fn automaton_by_name(name: &str) -> Option<Box<dyn Automaton>> {
    match name {
        "mis" => Some(Box::new(MisAutomaton)),
        "domset" => Some(Box::new(DomSetAutomaton)),
        _ => {
            let q: u8 = name.strip_prefix("color")?.parse().ok()?;
            Some(Box::new(ColorAutomaton::new(q)?))
        }
    }
}

/// A maintained run: the decomposition, a state per node, and the
/// number of transitions the last update evaluated.
pub struct AutomatonRun {
    aut: Box<dyn Automaton>,
    td: AnnotatedTd,
    states: BTreeMap<TdId, State>,
    last_recompute: u64,
}

impl AutomatonRun {
    /// Evaluates the run bottom-up over the whole decomposition.
    pub fn init(td: AnnotatedTd, aut: Box<dyn Automaton>) -> AutomatonRun {
        let mut run = AutomatonRun {
            aut,
            td,
            states: BTreeMap::new(),
            last_recompute: 0,
        };
        for &t in run.td.preorder().iter().rev() {
            let s = run.eval(t);
            run.states.insert(t, s);
        }
        run.last_recompute = run.states.len() as u64;
        run
    }

    /// One run equation: ι at leaves, δ above, null state for a missing
    /// second child. Childless nodes own edge annotations only in
    /// hand-built one-bag decompositions; those are imposed via a
    /// bag-preserving transition.
    fn eval(&self, t: TdId) -> State {
        let node = self.td.node(t);
        let state = match *node.children.as_slice() {
            [] => {
                let s = self.aut.iota(&node.bag);
                if node.edges.is_empty() {
                    s
                } else {
                    self.aut
                        .delta(&node.bag, &node.bag, &[], &node.edges, &s, &State::Bot)
                }
            }
            [x] => self.aut.delta(
                &node.bag,
                &self.td.node(x).bag,
                &[],
                &node.edges,
                &self.states[&x],
                &State::Bot,
            ),
            [x, y] => self.aut.delta(
                &node.bag,
                &self.td.node(x).bag,
                &self.td.node(y).bag,
                &node.edges,
                &self.states[&x],
                &self.states[&y],
            ),
            _ => unreachable!("decomposition is binary"),
        };
        debug_assert!(
            state.entries() as u64 <= self.aut.tau(node.bag.len().saturating_sub(1)),
            "state table exceeds the declared class"
        );
        state
    }

    /// Applies a prefix rebuild to the stored decomposition and
    /// re-evaluates exactly the added nodes, children first; reattached
    /// subtrees keep their states untouched.
    pub fn update(&mut self, u: &PrefixRebuildDescription) -> Result<(), DyntwError> {
        apply_description(&mut self.td, u)?;
        for r in &u.removed {
            self.states.remove(r);
        }
        for n in u.added.iter().rev() {
            let s = self.eval(n.id);
            self.states.insert(n.id, s);
        }
        self.last_recompute = u.added.len() as u64;
        debug_assert_eq!(self.states.len(), self.td.n_nodes());
        Ok(())
    }

    /// Stored ρ(t).
    pub fn query(&self, t: TdId) -> Result<&State, DyntwError> {
        self.states
            .get(&t)
            .ok_or_else(|| DyntwError::invalid(format!("no node {}", t.0)))
    }

    pub fn answer(&self) -> Answer {
        self.aut.answer(&self.states[&self.td.root()])
    }

    /// Transitions evaluated by the last update: the new prefix size.
    pub fn last_recompute(&self) -> u64 {
        self.last_recompute
    }

    pub fn td(&self) -> &AnnotatedTd {
        &self.td
    }

    pub fn automaton(&self) -> &dyn Automaton {
        &*self.aut
    }

    /// Re-derives each node's state from its children and compares with
    /// the stored labeling.
    pub fn audit(&self) -> Result<(), String> {
        for t in self.td.preorder() {
            if self.states.get(&t) != Some(&self.eval(t)) {
                return Err(format!("run equation fails at node {}", t.0));
            }
        }
        Ok(())
    }
}
