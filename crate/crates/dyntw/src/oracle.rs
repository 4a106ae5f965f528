//! Brute-force ground truth, independent of the engine's algorithms.
//!
//! Everything here is exhaustive or near-exhaustive and guarded by hard
//! size caps. A call over the cap returns `Refused`; callers in tests must
//! treat that as a test failure, never as a skip, so acceptance runs cannot
//! silently lose coverage. The only shortcuts taken are ones forced by
//! three-line set arithmetic (documented inline), not by the theory the
//! engine is built on.

use std::collections::BTreeSet;

use crate::hypergraph::{EdgeSet, Eid, Hypergraph, SimpleGraph, Vid};
use crate::tree_decomp::{AnnotatedTd, PlainDecomposition, TdId};

#[derive(Debug, thiserror::Error)]
#[error("oracle refused: {0}")]
pub struct Refused(pub String);

/// Exact treewidth via dynamic programming over vertex subsets of the
/// elimination-order formulation. Cap n ≤ 12.
pub fn exact_treewidth(g: &SimpleGraph) -> Result<usize, Refused> {
    let n = g.n();
    if n > 12 {
        return Err(Refused(format!(
            "exact_treewidth cap is 12 vertices, got {n}"
        )));
    }
    if n == 0 {
        return Ok(0);
    }
    // q(s, v): vertices outside s∪{v} reachable from v through s.
    let q = |s: u32, v: usize| -> u32 {
        let mut seen: u32 = 1 << v;
        let mut stack = vec![v];
        let mut out: u32 = 0;
        while let Some(x) = stack.pop() {
            for w in g.neighbors(x as u32) {
                let bit = 1u32 << w;
                if seen & bit != 0 {
                    continue;
                }
                seen |= bit;
                if s & bit != 0 {
                    stack.push(w as usize);
                } else {
                    out |= bit;
                }
            }
        }
        out
    };
    // f[s] = min over orders eliminating exactly s first of the max
    // q-degree so far; f[full] is the treewidth
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut f = vec![u32::MAX; (full as usize) + 1];
    f[0] = 0;
    for s in 1..=full {
        let mut best = u32::MAX;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let cost = f[prev as usize].max(q(prev, v).count_ones());
            best = best.min(cost);
        }
        f[s as usize] = best;
    }
    Ok(f[full as usize] as usize)
}

/// Second formulation: minimum over all elimination orders of the maximum
/// degree at elimination time in the fill-in graph. Cap n ≤ 8; used to
/// cross-validate `exact_treewidth`.
pub fn exact_treewidth_orders(g: &SimpleGraph) -> Result<usize, Refused> {
    let n = g.n();
    if n > 8 {
        return Err(Refused(format!(
            "exact_treewidth_orders cap is 8 vertices, got {n}"
        )));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v as u32).fold(0u32, |m, w| m | (1 << w)))
        .collect();
    fn rec(adj: &mut Vec<u32>, alive: u32, best_so_far: usize) -> usize {
        if alive == 0 {
            return 0;
        }
        let mut best = usize::MAX;
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nbrs = adj[v] & alive & !(1 << v);
            let deg = nbrs.count_ones() as usize;
            if deg >= best || deg >= best_so_far {
                // this branch cannot improve on what we already have
                if deg >= best {
                    continue;
                }
            }
            // eliminate v: make its live neighborhood a clique
            let saved: Vec<(usize, u32)> = {
                let mut s = Vec::new();
                let mut nb = nbrs;
                while nb != 0 {
                    let u = nb.trailing_zeros() as usize;
                    nb &= nb - 1;
                    s.push((u, adj[u]));
                    adj[u] |= nbrs & !(1 << u);
                }
                s
            };
            let sub = rec(adj, alive & !(1 << v), best.min(best_so_far));
            for (u, old) in saved {
                adj[u] = old;
            }
            best = best.min(deg.max(sub));
        }
        best
    }
    Ok(rec(
        &mut adj,
        if n == 32 { u32::MAX } else { (1 << n) - 1 },
        usize::MAX,
    ))
}

/// Exhaustive well-linkedness: no bipartition of `a` has both sides with
/// strictly smaller boundary. Cap |a| ≤ 16.
pub fn is_well_linked_brute(hg: &Hypergraph, a: &EdgeSet) -> Result<bool, Refused> {
    let lam = hg.lambda(a).map_err(|e| Refused(e.to_string()))?;
    // λ(A) ≤ 1 forces well-linkedness by set arithmetic alone: any v in
    // bd(A) lies in V(C_i) for one side and in V(Ā) ⊆ V(C̄_i), so
    // bd(A) ⊆ bd(C1) ∪ bd(C2), making λ(C1) = λ(C2) = 0 impossible unless
    // λ(A) = 0, where "< λ(A)" cannot hold at all.
    if lam <= 1 || a.len() <= 1 {
        return Ok(true);
    }
    if a.len() > 16 {
        return Err(Refused(format!(
            "is_well_linked_brute cap is 16 hyperedges, got {}",
            a.len()
        )));
    }
    let ids: Vec<Eid> = a.iter().collect();
    let k = ids.len();
    // fix ids[0] on side C1; enumerate the rest
    for mask in 0..(1u32 << (k - 1)) {
        let mut c1 = vec![ids[0]];
        let mut c2 = Vec::new();
        for (i, &e) in ids.iter().enumerate().skip(1) {
            if mask & (1 << (i - 1)) != 0 {
                c1.push(e);
            } else {
                c2.push(e);
            }
        }
        if c2.is_empty() {
            continue;
        }
        let l1 = hg.lambda(&EdgeSet::from_vec(c1)).unwrap();
        if l1 >= lam {
            continue;
        }
        let l2 = hg.lambda(&EdgeSet::from_vec(c2)).unwrap();
        if l2 < lam {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest λ(A) over well-linked A ⊆ E(G). Cap |E| ≤ 12.
pub fn well_linked_number_brute(hg: &Hypergraph) -> Result<usize, Refused> {
    well_linked_number_excluding(hg, None)
}

/// The variant excluding sets that contain `e`.
pub fn well_linked_number_brute_excluding(hg: &Hypergraph, e: Eid) -> Result<usize, Refused> {
    well_linked_number_excluding(hg, Some(e))
}

fn well_linked_number_excluding(hg: &Hypergraph, skip: Option<Eid>) -> Result<usize, Refused> {
    let ids: Vec<Eid> = hg.edge_ids().filter(|&x| Some(x) != skip).collect();
    if ids.len() > 12 {
        return Err(Refused(format!(
            "well_linked_number_brute cap is 12 hyperedges, got {}",
            ids.len()
        )));
    }
    let mut best = 0;
    for mask in 1u32..(1 << ids.len()) {
        let sub: EdgeSet = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let lam = hg.lambda(&sub).unwrap();
        if lam > best && is_well_linked_brute(hg, &sub)? {
            best = lam;
        }
    }
    Ok(best)
}

/// Tree-decomposition axioms for a plain decomposition of `g`:
/// every vertex covered, every edge inside some bag, and each vertex's
/// occurrence set connected in the tree. Reports the first failure.
pub fn validate_tree_decomposition(g: &SimpleGraph, td: &PlainDecomposition) -> Result<(), String> {
    let nn = td.n_nodes();
    if nn == 0 {
        return Err("decomposition has no nodes".into());
    }
    // tree shape: connected and acyclic
    let mut edge_count = 0;
    for (i, nbrs) in td.adj.iter().enumerate() {
        for &j in nbrs {
            if j >= nn {
                return Err(format!("node {i} links to missing node {j}"));
            }
            edge_count += 1;
        }
    }
    if edge_count % 2 != 0 {
        return Err("adjacency is not symmetric".into());
    }
    let mut seen = vec![false; nn];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 0;
    while let Some(x) = stack.pop() {
        visited += 1;
        for &y in &td.adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    if visited != nn || edge_count / 2 != nn - 1 {
        return Err("decomposition tree is not a tree".into());
    }

    for v in 0..g.n() as u32 {
        let occ: Vec<usize> = (0..nn)
            .filter(|&i| td.bags[i].binary_search(&Vid(v)).is_ok())
            .collect();
        if occ.is_empty() {
            return Err(format!("vertex {v} is in no bag"));
        }
        // connectivity of the occurrence set
        let inset: Vec<bool> = {
            let mut m = vec![false; nn];
            for &i in &occ {
                m[i] = true;
            }
            m
        };
        let mut seen = vec![false; nn];
        let mut stack = vec![occ[0]];
        seen[occ[0]] = true;
        let mut cnt = 0;
        while let Some(x) = stack.pop() {
            cnt += 1;
            for &y in &td.adj[x] {
                if inset[y] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if cnt != occ.len() {
            return Err(format!("occurrence set of vertex {v} is split"));
        }
    }

    for (u, v) in g.edges() {
        let covered = (0..nn).any(|i| {
            td.bags[i].binary_search(&Vid(u)).is_ok() && td.bags[i].binary_search(&Vid(v)).is_ok()
        });
        if !covered {
            return Err(format!("edge {u}-{v} is in no bag"));
        }
    }
    Ok(())
}

/// Axioms plus the annotation property: each graph edge appears in the
/// `edges` list of exactly the unique smallest-depth node whose bag holds
/// both endpoints, and the lists contain nothing else.
pub fn validate_annotated_td(g: &SimpleGraph, td: &AnnotatedTd) -> Result<(), String> {
    // flatten to a plain decomposition for the axiom checks
    let ids: Vec<TdId> = td.ids().collect();
    let index = |t: TdId| ids.binary_search(&t).expect("live id");
    let mut plain = PlainDecomposition::default();
    for &t in &ids {
        plain.add_node(td.node(t).bag.clone());
    }
    let mut depth = vec![0usize; ids.len()];
    for &t in &ids {
        if td.node(t).children.len() > 2 {
            return Err(format!(
                "node {} has {} children",
                t.0,
                td.node(t).children.len()
            ));
        }
        for &c in &td.node(t).children {
            plain.add_edge(index(t), index(c));
            if td.node(c).parent != Some(t) {
                return Err(format!("parent pointer of {} is inconsistent", c.0));
            }
        }
    }
    validate_tree_decomposition(g, &plain)?;

    // depths for the ownership check (root may be any node marked so)
    let root = td.root();
    let mut stack = vec![root];
    while let Some(t) = stack.pop() {
        for &c in &td.node(t).children {
            depth[index(c)] = depth[index(t)] + 1;
            stack.push(c);
        }
    }

    let mut owned: BTreeSet<(u32, u32)> = BTreeSet::new();
    for &t in &ids {
        for &(u, v) in &td.node(t).edges {
            if u >= v {
                return Err(format!(
                    "edge annotation ({u},{v}) at node {} is not normalized",
                    t.0
                ));
            }
            if !g.has_edge(u.0, v.0) {
                return Err(format!("node {} annotates non-edge ({u},{v})", t.0));
            }
            if !owned.insert((u.0, v.0)) {
                return Err(format!("edge ({u},{v}) annotated twice"));
            }
            // t must be the unique smallest-depth node containing both
            let holders: Vec<usize> = ids
                .iter()
                .enumerate()
                .filter(|(_, &x)| {
                    let bag = &td.node(x).bag;
                    bag.binary_search(&u).is_ok() && bag.binary_search(&v).is_ok()
                })
                .map(|(i, _)| i)
                .collect();
            let dmin = holders.iter().map(|&i| depth[i]).min().unwrap();
            let at_min: Vec<usize> = holders
                .iter()
                .copied()
                .filter(|&i| depth[i] == dmin)
                .collect();
            if at_min != vec![index(t)] {
                return Err(format!(
                    "edge ({u},{v}) annotated at node {} which is not the unique shallowest holder",
                    t.0
                ));
            }
        }
    }
    for (u, v) in g.edges() {
        if !owned.contains(&(u, v)) {
            return Err(format!("edge {u}-{v} is annotated nowhere"));
        }
    }
    Ok(())
}

/// Maximum independent set size by subset enumeration. Cap n ≤ 20.
pub fn mis_brute(g: &SimpleGraph) -> Result<usize, Refused> {
    let n = g.n();
    if n > 20 {
        return Err(Refused(format!("mis_brute cap is 20 vertices, got {n}")));
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v as u32).fold(0u32, |m, w| m | (1 << w)))
        .collect();
    let mut best = 0;
    for s in 0u32..(1u32 << n) {
        if s.count_ones() as usize <= best {
            continue;
        }
        let mut ok = true;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if adj[v] & s != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            best = s.count_ones() as usize;
        }
    }
    Ok(best)
}

/// q-colorability by backtracking. Cap n ≤ 12.
pub fn color_brute(g: &SimpleGraph, q: usize) -> Result<bool, Refused> {
    let n = g.n();
    if n > 12 {
        return Err(Refused(format!("color_brute cap is 12 vertices, got {n}")));
    }
    fn rec(g: &SimpleGraph, q: usize, colors: &mut Vec<usize>) -> bool {
        let v = colors.len();
        if v == g.n() {
            return true;
        }
        'next: for c in 0..q {
            for w in g.neighbors(v as u32) {
                if (w as usize) < v && colors[w as usize] == c {
                    continue 'next;
                }
            }
            colors.push(c);
            if rec(g, q, colors) {
                return true;
            }
            colors.pop();
        }
        false
    }
    Ok(rec(g, q, &mut Vec::new()))
}

/// Minimum dominating set size by subset enumeration. Cap n ≤ 20.
pub fn domset_brute(g: &SimpleGraph) -> Result<usize, Refused> {
    let n = g.n();
    if n > 20 {
        return Err(Refused(format!("domset_brute cap is 20 vertices, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let closed: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v as u32).fold(1u32 << v, |m, w| m | (1 << w)))
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut best = n;
    for s in 0u32..=full {
        if (s.count_ones() as usize) >= best {
            continue;
        }
        let mut cover = 0u32;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cover |= closed[v];
        }
        if cover == full {
            best = s.count_ones() as usize;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::SupportHypergraph;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for v in 0..n as u32 - 1 {
            g.add_edge(v, v + 1).unwrap();
        }
        g
    }

    fn complete(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    fn cycle(n: usize) -> SimpleGraph {
        let mut g = path(n);
        g.add_edge(0, n as u32 - 1).unwrap();
        g
    }

    fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.gen_bool(p) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        g
    }

    #[test]
    fn treewidth_known_values() {
        assert_eq!(exact_treewidth(&path(7)).unwrap(), 1);
        assert_eq!(exact_treewidth(&complete(5)).unwrap(), 4);
        assert_eq!(exact_treewidth(&cycle(6)).unwrap(), 2);
        // 3x3 grid
        let mut grid = SimpleGraph::new(9);
        for r in 0..3u32 {
            for c in 0..3u32 {
                let v = r * 3 + c;
                if c + 1 < 3 {
                    grid.add_edge(v, v + 1).unwrap();
                }
                if r + 1 < 3 {
                    grid.add_edge(v, v + 3).unwrap();
                }
            }
        }
        assert_eq!(exact_treewidth(&grid).unwrap(), 3);
    }

    #[test]
    fn treewidth_formulations_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8);
            let p = rng.gen_range(0.1..0.9);
            let g = random_graph(&mut rng, n, p);
            assert_eq!(
                exact_treewidth(&g).unwrap(),
                exact_treewidth_orders(&g).unwrap(),
                "disagreement on {g:?}"
            );
        }
    }

    #[test]
    fn treewidth_cap_refuses() {
        assert!(exact_treewidth(&path(13)).is_err());
        assert!(exact_treewidth_orders(&path(9)).is_err());
    }

    #[test]
    fn well_linked_tiny_sets() {
        let su = SupportHypergraph::build(&path(4));
        let single = EdgeSet::singleton(su.pair_edge(0, 1).unwrap());
        assert!(is_well_linked_brute(&su.hg, &single).unwrap());
        assert!(is_well_linked_brute(&su.hg, &EdgeSet::new()).unwrap());
        assert!(is_well_linked_brute(&su.hg, &su.hg.all_edges()).unwrap());
    }

    #[test]
    fn well_linked_detects_split_pair() {
        // {e_01, e_23} on the path splits into its two hyperedges, both of
        // boundary 2 < 4
        let su = SupportHypergraph::build(&path(4));
        let a = EdgeSet::from_vec(vec![
            su.pair_edge(0, 1).unwrap(),
            su.pair_edge(2, 3).unwrap(),
        ]);
        assert_eq!(su.hg.lambda(&a).unwrap(), 4);
        assert!(!is_well_linked_brute(&su.hg, &a).unwrap());
    }

    #[test]
    fn well_linked_number_small_cases() {
        // two hyperedges: only bipartition is the trivial one
        let mut hg = Hypergraph::new();
        let a = hg.add_edge(&[Vid(0), Vid(1)]);
        let b = hg.add_edge(&[Vid(0), Vid(1)]);
        assert_eq!(well_linked_number_brute(&hg).unwrap(), 2);
        assert_eq!(well_linked_number_brute_excluding(&hg, a).unwrap(), 2);
        let _ = b;
    }

    #[test]
    fn well_linked_number_respects_treewidth_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut streak = 0;
        for _ in 0..40 {
            let n = rng.gen_range(2..=5);
            let g = random_graph(&mut rng, n, 0.5);
            let su = SupportHypergraph::build(&g);
            if su.hg.n_edges() > 12 {
                continue;
            }
            let wl = well_linked_number_brute(&su.hg).unwrap();
            let tw = exact_treewidth(&g).unwrap();
            assert!(wl <= 3 * (tw + 1), "wl={wl} tw={tw} on {g:?}");
            assert!(wl > tw || g.n_edges() == 0, "wl={wl} tw={tw} on {g:?}");
            streak += 1;
        }
        assert!(streak >= 20, "not enough in-cap samples");
    }

    #[test]
    fn validator_accepts_path_decomposition() {
        let g = path(4);
        let mut td = PlainDecomposition::default();
        let b0 = td.add_node(vec![Vid(0), Vid(1)]);
        let b1 = td.add_node(vec![Vid(1), Vid(2)]);
        let b2 = td.add_node(vec![Vid(2), Vid(3)]);
        td.add_edge(b0, b1);
        td.add_edge(b1, b2);
        assert!(validate_tree_decomposition(&g, &td).is_ok());
    }

    #[test]
    fn validator_rejects_split_occurrence() {
        let g = path(3);
        let mut td = PlainDecomposition::default();
        let b0 = td.add_node(vec![Vid(0), Vid(1)]);
        let b1 = td.add_node(vec![Vid(1), Vid(2)]);
        let b2 = td.add_node(vec![Vid(0)]); // 0 reappears, disconnected
        td.add_edge(b0, b1);
        td.add_edge(b1, b2);
        let err = validate_tree_decomposition(&g, &td).unwrap_err();
        assert!(err.contains("vertex 0"), "got: {err}");
    }

    #[test]
    fn validator_rejects_uncovered_edge() {
        let g = complete(3);
        let mut td = PlainDecomposition::default();
        let b0 = td.add_node(vec![Vid(0), Vid(1)]);
        let b1 = td.add_node(vec![Vid(1), Vid(2)]);
        td.add_edge(b0, b1);
        let err = validate_tree_decomposition(&g, &td).unwrap_err();
        assert!(err.contains("edge 0-2"), "got: {err}");
    }

    #[test]
    fn annotated_validator_checks_ownership() {
        let g = path(3);
        let mut td = AnnotatedTd::new();
        let r = td.alloc(None, vec![Vid(0), Vid(1)], vec![(Vid(0), Vid(1))]);
        td.set_root(r);
        td.alloc(Some(r), vec![Vid(1), Vid(2)], vec![(Vid(1), Vid(2))]);
        assert!(validate_annotated_td(&g, &td).is_ok());

        // annotating 1-2 at the root too must fail (duplicate)
        let mut bad = AnnotatedTd::new();
        let r = bad.alloc(
            None,
            vec![Vid(0), Vid(1)],
            vec![(Vid(0), Vid(1)), (Vid(1), Vid(2))],
        );
        bad.set_root(r);
        bad.alloc(Some(r), vec![Vid(1), Vid(2)], vec![(Vid(1), Vid(2))]);
        assert!(validate_annotated_td(&g, &bad).is_err());
    }

    #[test]
    fn counting_oracles_known_graphs() {
        let c5 = cycle(5);
        assert_eq!(mis_brute(&c5).unwrap(), 2);
        assert!(color_brute(&c5, 3).unwrap());
        assert!(!color_brute(&c5, 2).unwrap());
        assert_eq!(domset_brute(&c5).unwrap(), 2);

        assert!(!color_brute(&complete(4), 3).unwrap());

        // star K_{1,5}
        let mut star = SimpleGraph::new(6);
        for v in 1..6 {
            star.add_edge(0, v).unwrap();
        }
        assert_eq!(domset_brute(&star).unwrap(), 1);
        assert_eq!(mis_brute(&star).unwrap(), 5);

        let edgeless = SimpleGraph::new(7);
        assert_eq!(mis_brute(&edgeless).unwrap(), 7);
        assert_eq!(domset_brute(&edgeless).unwrap(), 7);
    }
}
