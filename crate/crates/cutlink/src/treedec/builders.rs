//! Decomposition builders: the one-bag baseline, clique trees of chordal
//! graphs, and a cut-splitting heuristic for general graphs. Every
//! builder's output goes through `validate`; the heuristic additionally
//! certifies its result before returning it.

use thiserror::Error;

use crate::graph::{Graph, VertexSet};

use super::unbreak::{breaking_threshold, BruteForceBudget, UnbreakError};
use super::{regularize, validate, DerivedSets, TreeDecomposition};

#[derive(Debug, Error)]
pub enum BuilderError {
    #[error("graph is not chordal: no perfect elimination order exists")]
    NotChordal,
    #[error("heuristic failed: {0}")]
    HeuristicFailed(String),
    #[error(transparent)]
    Budget(#[from] UnbreakError),
}

/// Single root node whose bag is the whole vertex set. Vacuously regular
/// and (|V|, k)-unbreakable for every k.
pub fn build_trivial(g: &Graph) -> TreeDecomposition {
    TreeDecomposition::new(vec![None], vec![g.vertices().collect()])
        .expect("one-node decomposition")
}

/// Maximum cardinality search; returns the visit order (first visited
/// first). The reverse visit order is a perfect elimination order iff the
/// graph is chordal.
fn mcs_order(g: &Graph) -> Vec<u32> {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    // max-heap with lazy deletion of stale weights
    let mut heap: std::collections::BinaryHeap<(usize, u32)> =
        (0..n as u32).map(|v| (0, v)).collect();
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = loop {
            let (w, v) = heap.pop().expect("heap holds all unvisited vertices");
            if !visited[v as usize] && weight[v as usize] == w {
                break v;
            }
        };
        visited[v as usize] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            if !visited[w as usize] {
                weight[w as usize] += 1;
                heap.push((weight[w as usize], w));
            }
        }
    }
    order
}

/// Checks that the reverse of `visit` is a perfect elimination order.
fn check_peo(g: &Graph, visit: &[u32]) -> Result<Vec<usize>, BuilderError> {
    let n = g.n();
    let mut pos = vec![0usize; n];
    for (i, &v) in visit.iter().rev().enumerate() {
        pos[v as usize] = i;
    }
    let mut mark = vec![false; n];
    for v in 0..n as u32 {
        // rn(v): neighbors later in the elimination order
        let mut rn: Vec<u32> =
            g.neighbors(v).iter().copied().filter(|&w| pos[w as usize] > pos[v as usize]).collect();
        if rn.is_empty() {
            continue;
        }
        rn.sort_by_key(|&w| pos[w as usize]);
        let u0 = rn[0];
        for &w in g.neighbors(u0) {
            mark[w as usize] = true;
        }
        let ok = rn[1..].iter().all(|&w| mark[w as usize]);
        for &w in g.neighbors(u0) {
            mark[w as usize] = false;
        }
        if !ok {
            return Err(BuilderError::NotChordal);
        }
    }
    Ok(pos)
}

struct CliqueForest {
    /// Maximal cliques, sorted vertex lists, in discovery order.
    cliques: Vec<Vec<u32>>,
    /// Parent clique per clique; `None` for per-component roots.
    parent: Vec<Option<u32>>,
}

/// Incremental clique-tree construction over a maximum cardinality
/// search: a new clique starts whenever the visit weight fails to grow,
/// and hangs below the home clique of the most recently visited neighbor.
fn clique_forest(g: &Graph) -> Result<CliqueForest, BuilderError> {
    let n = g.n();
    let visit = mcs_order(g);
    check_peo(g, &visit)?;
    let mut visit_time = vec![usize::MAX; n];
    let mut home = vec![u32::MAX; n];
    let mut cliques: Vec<Vec<u32>> = Vec::new();
    let mut parent: Vec<Option<u32>> = Vec::new();
    let mut prev_weight: i64 = -1;
    let mut current = u32::MAX;
    for (time, &v) in visit.iter().enumerate() {
        let visited_nbrs: Vec<u32> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| visit_time[w as usize] != usize::MAX)
            .collect();
        let weight = visited_nbrs.len() as i64;
        if weight <= prev_weight || current == u32::MAX {
            // finish the current clique and start a new one from v's
            // visited neighborhood
            let id = cliques.len() as u32;
            let mut bag = visited_nbrs.clone();
            bag.push(v);
            let up = visited_nbrs
                .iter()
                .max_by_key(|&&u| visit_time[u as usize])
                .map(|&u| home[u as usize]);
            cliques.push(bag);
            parent.push(up);
            current = id;
        } else {
            cliques[current as usize].push(v);
        }
        home[v as usize] = current;
        visit_time[v as usize] = time;
        prev_weight = weight;
    }
    for c in &mut cliques {
        c.sort_unstable();
    }
    Ok(CliqueForest { cliques, parent })
}

/// Maximal cliques of a chordal graph, each sorted, in a deterministic
/// order. Errors when the graph is not chordal.
pub fn maximal_cliques(g: &Graph) -> Result<Vec<Vec<u32>>, BuilderError> {
    Ok(clique_forest(g)?.cliques)
}

/// Clique tree of a chordal graph: bags are the maximal cliques arranged
/// so that every vertex's cliques form a subtree. Disconnected graphs get
/// a fresh empty-bag root above the per-component roots.
pub fn build_clique_tree(g: &Graph) -> Result<TreeDecomposition, BuilderError> {
    if g.n() == 0 {
        return Ok(TreeDecomposition::new(vec![None], vec![vec![]]).unwrap());
    }
    let CliqueForest { cliques, parent } = clique_forest(g)?;
    let root_count = parent.iter().filter(|p| p.is_none()).count();
    let (parents, bags) = if root_count > 1 {
        let root_id = cliques.len() as u32;
        let mut parents: Vec<Option<u32>> =
            parent.iter().map(|p| Some(p.unwrap_or(root_id))).collect();
        parents.push(None);
        let mut bags = cliques;
        bags.push(Vec::new());
        (parents, bags)
    } else {
        (parent, cliques)
    };
    let dec = TreeDecomposition::new(parents, bags)
        .expect("clique forest has tree structure per component");
    debug_assert!(validate(g, &dec).is_empty());
    Ok(dec)
}

/// Minimum s-t vertex cut in `h` via unit-capacity max flow with split
/// nodes. Returns `None` when the cut exceeds `limit` (or s,t adjacent).
fn min_vertex_cut(h: &Graph, s: u32, t: u32, limit: usize) -> Option<Vec<u32>> {
    if h.has_edge(s, t) {
        return None;
    }
    let n = h.n();
    // node v splits into in = 2v, out = 2v + 1
    let size = 2 * n;
    let mut cap: Vec<std::collections::HashMap<u32, i32>> = vec![Default::default(); size];
    for v in 0..n as u32 {
        let c = if v == s || v == t { i32::MAX / 2 } else { 1 };
        cap[2 * v as usize].insert(2 * v + 1, c);
        cap[(2 * v + 1) as usize].insert(2 * v, 0);
    }
    for v in 0..n as u32 {
        for &w in h.neighbors(v) {
            cap[(2 * v + 1) as usize].insert(2 * w, i32::MAX / 2);
            cap[2 * w as usize].entry(2 * v + 1).or_insert(0);
        }
    }
    let (src, snk) = (2 * s + 1, 2 * t);
    let mut flow = 0usize;
    loop {
        // BFS augmenting path
        let mut prev = vec![u32::MAX; size];
        prev[src as usize] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            if v == snk {
                break;
            }
            for (&w, &c) in &cap[v as usize] {
                if c > 0 && prev[w as usize] == u32::MAX {
                    prev[w as usize] = v;
                    queue.push_back(w);
                }
            }
        }
        if prev[snk as usize] == u32::MAX {
            break;
        }
        let mut v = snk;
        while v != src {
            let p = prev[v as usize];
            *cap[p as usize].get_mut(&v).unwrap() -= 1;
            *cap[v as usize].get_mut(&p).unwrap() += 1;
            v = p;
        }
        flow += 1;
        if flow > limit {
            return None;
        }
    }
    // cut vertices: in-side reachable, out-side not
    let mut reach = vec![false; size];
    reach[src as usize] = true;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for (&w, &c) in &cap[v as usize] {
            if c > 0 && !reach[w as usize] {
                reach[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    let cut: Vec<u32> = (0..n as u32)
        .filter(|&v| reach[2 * v as usize] && !reach[(2 * v + 1) as usize])
        .collect();
    debug_assert_eq!(cut.len(), flow);
    Some(cut)
}

/// Recursively splits `g` along small vertex cuts until every piece is
/// certifiably unbreakable, then assembles, regularizes, and certifies the
/// decomposition. Returns the decomposition with its achieved q, or an
/// explicit failure; never returns an uncertified result.
pub fn build_heuristic(
    g: &Graph,
    k: usize,
    q_target: usize,
    budget: BruteForceBudget,
) -> Result<(TreeDecomposition, usize), BuilderError> {
    struct Builder<'a> {
        g: &'a Graph,
        k: usize,
        q_target: usize,
        budget: BruteForceBudget,
        parents: Vec<Option<u32>>,
        bags: Vec<Vec<u32>>,
    }

    impl Builder<'_> {
        /// Builds a subtree for `G[piece]` whose root bag contains
        /// `interface`; returns the root node id. Splits along small
        /// useful cuts while any exist, then certifies the remaining
        /// piece as a single bag.
        fn piece(
            &mut self,
            piece: &[u32],
            interface: &[u32],
            parent: Option<u32>,
            depth: usize,
        ) -> Result<u32, BuilderError> {
            if depth > 2 * self.g.n() + 4 {
                return Err(BuilderError::HeuristicFailed("recursion exceeded bound".into()));
            }
            if interface.len() > self.q_target {
                return Err(BuilderError::HeuristicFailed(format!(
                    "interface of size {} exceeds target q {}",
                    interface.len(),
                    self.q_target
                )));
            }
            if let Some((split, sub_pieces)) = self.find_split(piece, interface)? {
                // every sub-piece carries the split set; the first hosts
                // the subtree root and the rest hang below it
                let first = self.piece(&sub_pieces[0], &split, parent, depth + 1)?;
                for sub in &sub_pieces[1..] {
                    self.piece(sub, &split, Some(first), depth + 1)?;
                }
                return Ok(first);
            }
            // no useful cut: the piece itself must certify
            let pset = VertexSet::from_iter(self.g.n(), piece.iter().copied());
            let (h, names) = self.g.induced(&pset);
            let _ = names;
            let whole = VertexSet::full(h.n());
            let unbreakable = piece.len() <= self.q_target
                || breaking_threshold(&h, &whole, self.k, self.budget)? <= self.q_target;
            if !unbreakable {
                return Err(BuilderError::HeuristicFailed(format!(
                    "piece of {} vertices has no useful cut of order <= {} yet is breakable",
                    piece.len(),
                    self.q_target
                )));
            }
            Ok(self.push(piece.to_vec(), parent))
        }

        /// Searches for a vertex cut C of `G[piece]` with
        /// `|C ∪ interface| ≤ q_target` splitting the piece into strictly
        /// smaller sub-pieces `D_i ∪ C ∪ interface`.
        #[allow(clippy::type_complexity)]
        fn find_split(
            &self,
            piece: &[u32],
            interface: &[u32],
        ) -> Result<Option<(Vec<u32>, Vec<Vec<u32>>)>, BuilderError> {
            let pset = VertexSet::from_iter(self.g.n(), piece.iter().copied());
            let (h, names) = self.g.induced(&pset);
            let mut tried = 0usize;
            for s in 0..h.n() as u32 {
                for t in s + 1..h.n() as u32 {
                    if tried > 4000 {
                        return Ok(None);
                    }
                    tried += 1;
                    let Some(cut) = min_vertex_cut(&h, s, t, self.q_target) else {
                        continue;
                    };
                    let cut_orig: Vec<u32> = cut.iter().map(|&v| names[v as usize]).collect();
                    let mut split: Vec<u32> =
                        cut_orig.iter().chain(interface.iter()).copied().collect();
                    split.sort_unstable();
                    split.dedup();
                    if split.len() > self.q_target {
                        continue;
                    }
                    let mut forb = VertexSet::from_iter(self.g.n(), split.iter().copied());
                    for v in self.g.vertices() {
                        if !pset.contains(v) {
                            forb.insert(v);
                        }
                    }
                    let comps = crate::graph::components_avoiding(self.g, &forb);
                    if comps.len() < 2 {
                        continue;
                    }
                    let mut pieces = Vec::with_capacity(comps.len());
                    let mut progress = true;
                    for comp in &comps {
                        let mut sub: Vec<u32> = comp.iter().chain(split.iter()).copied().collect();
                        sub.sort_unstable();
                        if sub.len() >= piece.len() {
                            progress = false;
                            break;
                        }
                        pieces.push(sub);
                    }
                    if progress {
                        return Ok(Some((split, pieces)));
                    }
                }
            }
            Ok(None)
        }

        fn push(&mut self, bag: Vec<u32>, parent: Option<u32>) -> u32 {
            let id = self.parents.len() as u32;
            self.parents.push(parent);
            self.bags.push(bag);
            id
        }
    }

    let mut b = Builder { g, k, q_target, budget, parents: Vec::new(), bags: Vec::new() };
    let all: Vec<u32> = g.vertices().collect();
    if g.n() == 0 {
        return Err(BuilderError::HeuristicFailed("empty graph".into()));
    }
    // decompose per connected component below a shared root when needed
    let comps = crate::graph::components_avoiding(g, &VertexSet::new(g.n()));
    if comps.len() == 1 {
        b.piece(&all, &[], None, 0)?;
    } else {
        let root = b.push(Vec::new(), None);
        for comp in comps {
            b.piece(&comp, &[], Some(root), 0)?;
        }
    }
    let raw = TreeDecomposition::new(b.parents, b.bags)
        .map_err(|e| BuilderError::HeuristicFailed(format!("assembly: {e}")))?;
    if !validate(g, &raw).is_empty() {
        return Err(BuilderError::HeuristicFailed("assembled decomposition invalid".into()));
    }
    let dec = regularize(g, &raw);
    // in-band certification: measure the achieved q and fail loudly if the
    // target is missed
    let derived = DerivedSets::compute(g, &dec);
    let mut achieved = derived.adhesion_width().max(1);
    for x in 0..dec.len() as u32 {
        let bag = dec.bag(x);
        if bag.len() <= achieved {
            continue;
        }
        let cone = derived.cone_set(&dec, g.n(), x);
        let (h, names) = g.induced(&cone);
        let mut local = VertexSet::new(h.n());
        for (i, &v) in names.iter().enumerate() {
            if bag.binary_search(&v).is_ok() {
                local.insert(i as u32);
            }
        }
        achieved = achieved.max(breaking_threshold(&h, &local, k, budget)?);
    }
    if achieved > q_target {
        return Err(BuilderError::HeuristicFailed(format!(
            "certification found threshold {achieved} above target {q_target}"
        )));
    }
    Ok((dec, achieved))
}
