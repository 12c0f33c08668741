//! Rooted tree decompositions: validity, derived adhesion/margin/cone/comp
//! views, regularization, annotated bag graphs, unbreakability
//! certification, and decomposition builders.

mod builders;
mod regularize;
mod unbreak;

pub use builders::{build_clique_tree, build_heuristic, build_trivial, maximal_cliques, BuilderError};
pub use regularize::regularize;
pub use unbreak::{
    breaking_threshold, certify, is_unbreakable_set, BruteForceBudget, CertifyMode, CertifyReport,
    CertifyViolation, UnbreakError,
};

use std::fmt;

use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::treenav::NavIndex;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("node count mismatch: header says {declared}, found {found}")]
    NodeCountMismatch { declared: usize, found: usize },
    #[error("expected exactly one root, found {0}")]
    BadRootCount(usize),
    #[error("parent links do not form a tree")]
    NotATree,
    #[error("node id {0} out of range or duplicated")]
    BadNodeId(usize),
}

/// A rooted tree of bags. Structural invariants (single root, acyclic
/// parent links, dense node ids) are enforced at construction; the
/// decomposition conditions (T1)/(T2) against a concrete graph are checked
/// by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    bags: Vec<Vec<u32>>,
    root: u32,
}

impl TreeDecomposition {
    /// Builds a decomposition from parent links; bags are sorted and
    /// deduplicated.
    pub fn new(
        parent: Vec<Option<u32>>,
        mut bags: Vec<Vec<u32>>,
    ) -> Result<TreeDecomposition, DecompositionError> {
        let n = parent.len();
        if bags.len() != n {
            return Err(DecompositionError::NodeCountMismatch { declared: n, found: bags.len() });
        }
        let roots: Vec<u32> = (0..n as u32).filter(|&v| parent[v as usize].is_none()).collect();
        if roots.len() != 1 {
            return Err(DecompositionError::BadRootCount(roots.len()));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for v in 0..n as u32 {
            if let Some(p) = parent[v as usize] {
                if p as usize >= n {
                    return Err(DecompositionError::BadNodeId(p as usize));
                }
                children[p as usize].push(v);
            }
        }
        // reachability from the root rules out cycles
        let mut seen = 0usize;
        let mut stack = vec![root];
        let mut visited = vec![false; n];
        visited[root as usize] = true;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &c in &children[v as usize] {
                if visited[c as usize] {
                    return Err(DecompositionError::NotATree);
                }
                visited[c as usize] = true;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(DecompositionError::NotATree);
        }
        for bag in &mut bags {
            bag.sort_unstable();
            bag.dedup();
        }
        Ok(TreeDecomposition { parent, children, bags, root })
    }

    /// Parses the text format: header `t <num_nodes>`, then one line per
    /// node `n <id> <parent-id|-1> <bag vertex ids...>`.
    pub fn parse(text: &str) -> Result<TreeDecomposition, DecompositionError> {
        let mut declared: Option<usize> = None;
        let mut parent: Vec<Option<Option<u32>>> = Vec::new();
        let mut bags: Vec<Vec<u32>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut it = s.split_whitespace();
            match it.next() {
                Some("t") => {
                    if declared.is_some() {
                        return Err(DecompositionError::Malformed { line, msg: "duplicate header".into() });
                    }
                    let cnt: usize = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| DecompositionError::Malformed { line, msg: "bad node count".into() })?;
                    declared = Some(cnt);
                    parent = vec![None; cnt];
                    bags = vec![Vec::new(); cnt];
                }
                Some("n") => {
                    let cnt = declared
                        .ok_or(DecompositionError::Malformed { line, msg: "missing `t` header".into() })?;
                    let id: usize = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| DecompositionError::Malformed { line, msg: "bad node id".into() })?;
                    if id >= cnt {
                        return Err(DecompositionError::BadNodeId(id));
                    }
                    if parent[id].is_some() {
                        return Err(DecompositionError::BadNodeId(id));
                    }
                    let ptok = it
                        .next()
                        .ok_or_else(|| DecompositionError::Malformed { line, msg: "missing parent".into() })?;
                    let p: i64 = ptok
                        .parse()
                        .map_err(|_| DecompositionError::Malformed { line, msg: "bad parent id".into() })?;
                    let p = if p < 0 {
                        None
                    } else if (p as usize) < cnt {
                        Some(p as u32)
                    } else {
                        return Err(DecompositionError::BadNodeId(p as usize));
                    };
                    let mut bag = Vec::new();
                    for tok in it {
                        let v: u32 = tok.parse().map_err(|_| DecompositionError::Malformed {
                            line,
                            msg: format!("bad bag vertex `{tok}`"),
                        })?;
                        bag.push(v);
                    }
                    parent[id] = Some(p);
                    bags[id] = bag;
                }
                Some(tok) => {
                    return Err(DecompositionError::Malformed { line, msg: format!("unknown record `{tok}`") });
                }
                None => unreachable!(),
            }
        }
        let declared = declared.ok_or(DecompositionError::Malformed { line: 0, msg: "missing `t` header".into() })?;
        let mut links = Vec::with_capacity(declared);
        for (id, slot) in parent.into_iter().enumerate() {
            links.push(slot.ok_or(DecompositionError::BadNodeId(id))?);
        }
        TreeDecomposition::new(links, bags)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("t {}\n", self.len());
        for x in 0..self.len() as u32 {
            let p = match self.parent(x) {
                Some(p) => p as i64,
                None => -1,
            };
            out.push_str(&format!("n {x} {p}"));
            for &v in self.bag(x) {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn parent(&self, x: u32) -> Option<u32> {
        self.parent[x as usize]
    }

    pub fn parents(&self) -> &[Option<u32>] {
        &self.parent
    }

    pub fn children(&self, x: u32) -> &[u32] {
        &self.children[x as usize]
    }

    pub fn bag(&self, x: u32) -> &[u32] {
        &self.bags[x as usize]
    }

    pub fn bag_contains(&self, x: u32, v: u32) -> bool {
        self.bags[x as usize].binary_search(&v).is_ok()
    }

    /// Sum of bag sizes.
    pub fn total_bag_size(&self) -> usize {
        self.bags.iter().map(|b| b.len()).sum()
    }

    /// Nodes in a root-first order (every parent precedes its children).
    pub fn topo_order(&self) -> Vec<u32> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend_from_slice(&self.children[v as usize]);
        }
        order
    }
}

/// Adhesion, margin, and subtree views of a decomposition, plus the
/// per-vertex link to the unique node whose margin holds it.
#[derive(Debug, Clone)]
pub struct DerivedSets {
    /// `bag(parent(x)) ∩ bag(x)`, sorted; empty at the root.
    pub adh: Vec<Vec<u32>>,
    /// `bag(x) \ adh(x)`, sorted.
    pub mrg: Vec<Vec<u32>>,
    /// Per graph vertex, the node whose margin contains it
    /// (`u32::MAX` when the vertex occurs in no bag).
    pub top: Vec<u32>,
    /// Euler entry/exit times for subtree tests on the decomposition tree.
    tin: Vec<u32>,
    tout: Vec<u32>,
}

pub const NO_NODE: u32 = u32::MAX;

impl DerivedSets {
    pub fn compute(g: &Graph, d: &TreeDecomposition) -> DerivedSets {
        let n_nodes = d.len();
        let mut adh = Vec::with_capacity(n_nodes);
        let mut mrg = Vec::with_capacity(n_nodes);
        for x in 0..n_nodes as u32 {
            match d.parent(x) {
                None => {
                    adh.push(Vec::new());
                    mrg.push(d.bag(x).to_vec());
                }
                Some(p) => {
                    let (a, m): (Vec<u32>, Vec<u32>) =
                        d.bag(x).iter().partition(|&&v| d.bag_contains(p, v));
                    adh.push(a);
                    mrg.push(m);
                }
            }
        }
        let mut top = vec![NO_NODE; g.n()];
        for x in 0..n_nodes as u32 {
            for &v in &mrg[x as usize] {
                debug_assert_eq!(top[v as usize], NO_NODE, "margins must be disjoint");
                top[v as usize] = x;
            }
        }
        let mut tin = vec![0u32; n_nodes];
        let mut tout = vec![0u32; n_nodes];
        let mut clock = 0u32;
        let mut stack: Vec<(u32, bool)> = vec![(d.root(), false)];
        while let Some((x, done)) = stack.pop() {
            if done {
                tout[x as usize] = clock;
                continue;
            }
            tin[x as usize] = clock;
            clock += 1;
            stack.push((x, true));
            for &c in d.children(x) {
                stack.push((c, false));
            }
        }
        DerivedSets { adh, mrg, top, tin, tout }
    }

    pub fn adh(&self, x: u32) -> &[u32] {
        &self.adh[x as usize]
    }

    pub fn mrg(&self, x: u32) -> &[u32] {
        &self.mrg[x as usize]
    }

    /// Largest adhesion size.
    pub fn adhesion_width(&self) -> usize {
        self.adh.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    /// Is `x` an ancestor of `y` (inclusive)?
    pub fn is_ancestor(&self, x: u32, y: u32) -> bool {
        self.tin[x as usize] <= self.tin[y as usize] && self.tin[y as usize] < self.tout[x as usize]
    }

    /// Is graph vertex `v` in `comp(x)`?
    pub fn in_comp(&self, x: u32, v: u32) -> bool {
        let t = self.top[v as usize];
        t != NO_NODE && self.is_ancestor(x, t)
    }

    /// Is graph vertex `v` in `cone(x)`?
    pub fn in_cone(&self, d: &TreeDecomposition, x: u32, v: u32) -> bool {
        self.in_comp(x, v) || self.adh[x as usize].binary_search(&v).is_ok()
            || d.bag_contains(x, v)
    }

    /// Materializes `cone(x)` as a vertex set.
    pub fn cone_set(&self, d: &TreeDecomposition, n: usize, x: u32) -> VertexSet {
        let mut set = VertexSet::new(n);
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            for &v in d.bag(y) {
                set.insert(v);
            }
            stack.extend_from_slice(d.children(y));
        }
        set
    }
}

/// A violation of the tree-decomposition conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// (T1) vertex appears in no bag.
    VertexNotCovered { vertex: u32 },
    /// (T1) the bags containing the vertex do not form a connected subtree;
    /// `tops` are the topmost nodes of the occurrence components.
    VertexDisconnected { vertex: u32, tops: Vec<u32> },
    /// (T2) no bag contains both endpoints.
    EdgeNotCovered { u: u32, v: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexNotCovered { vertex } => {
                write!(f, "T1: vertex {vertex} appears in no bag")
            }
            Violation::VertexDisconnected { vertex, tops } => {
                write!(f, "T1: occurrences of vertex {vertex} split across nodes {tops:?}")
            }
            Violation::EdgeNotCovered { u, v } => {
                write!(f, "T2: edge {{{u},{v}}} not inside any bag")
            }
        }
    }
}

/// Checks conditions (T1) and (T2); an empty list means `d` is a valid
/// tree decomposition of `g`.
pub fn validate(g: &Graph, d: &TreeDecomposition) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut occurrences: Vec<Vec<u32>> = vec![Vec::new(); g.n()];
    for x in 0..d.len() as u32 {
        for &v in d.bag(x) {
            if (v as usize) < g.n() {
                occurrences[v as usize].push(x);
            }
        }
    }
    for v in g.vertices() {
        let occ = &occurrences[v as usize];
        if occ.is_empty() {
            violations.push(Violation::VertexNotCovered { vertex: v });
            continue;
        }
        // the occurrence set is connected iff exactly one occurrence node
        // has a parent outside the set
        let tops: Vec<u32> = occ
            .iter()
            .copied()
            .filter(|&x| match d.parent(x) {
                None => true,
                Some(p) => !d.bag_contains(p, v),
            })
            .collect();
        if tops.len() != 1 {
            violations.push(Violation::VertexDisconnected { vertex: v, tops });
        }
    }
    for (u, v) in g.edges() {
        let covered = occurrences[u as usize].iter().any(|&x| d.bag_contains(x, v));
        if !covered {
            violations.push(Violation::EdgeNotCovered { u, v });
        }
    }
    violations
}

/// A violation of the regularity conditions (R1)-(R3) at a non-root node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegViolation {
    EmptyMargin { node: u32 },
    DisconnectedComp { node: u32, components: usize },
    AdhesionVertexIsolated { node: u32, vertex: u32 },
}

impl fmt::Display for RegViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegViolation::EmptyMargin { node } => write!(f, "R1: node {node} has empty margin"),
            RegViolation::DisconnectedComp { node, components } => {
                write!(f, "R2: comp({node}) splits into {components} parts")
            }
            RegViolation::AdhesionVertexIsolated { node, vertex } => {
                write!(f, "R3: adhesion vertex {vertex} of node {node} has no neighbor in comp")
            }
        }
    }
}

/// Checks regularity (R1)-(R3) at every non-root node by direct
/// computation of `comp(x)`. Intended for tests and desk-scale inputs.
pub fn regularity_violations(g: &Graph, d: &TreeDecomposition) -> Vec<RegViolation> {
    let derived = DerivedSets::compute(g, d);
    let mut out = Vec::new();
    let mut stamp = vec![u32::MAX; g.n()];
    for x in 0..d.len() as u32 {
        if d.parent(x).is_none() {
            continue;
        }
        if derived.mrg(x).is_empty() {
            out.push(RegViolation::EmptyMargin { node: x });
            continue;
        }
        // comp(x) = union of margins in the subtree of x
        let mut comp = Vec::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            comp.extend_from_slice(derived.mrg(y));
            stack.extend_from_slice(d.children(y));
        }
        for &v in &comp {
            stamp[v as usize] = x;
        }
        // connectivity of G[comp]
        let mut seen = vec![comp[0]];
        stamp[comp[0] as usize] = u32::MAX;
        let mut head = 0;
        while head < seen.len() {
            let v = seen[head];
            head += 1;
            for &w in g.neighbors(v) {
                if stamp[w as usize] == x {
                    stamp[w as usize] = u32::MAX;
                    seen.push(w);
                }
            }
        }
        if seen.len() != comp.len() {
            out.push(RegViolation::DisconnectedComp { node: x, components: 2 });
            for &v in &comp {
                stamp[v as usize] = u32::MAX;
            }
        }
        // R3: every adhesion vertex has a neighbor in comp(x)
        for &v in &comp {
            stamp[v as usize] = x;
        }
        for &a in derived.adh(x) {
            if !g.neighbors(a).iter().any(|&w| stamp[w as usize] == x) {
                out.push(RegViolation::AdhesionVertexIsolated { node: x, vertex: a });
            }
        }
        for &v in &comp {
            stamp[v as usize] = u32::MAX;
        }
    }
    out
}

/// An annotated `bgraph_∅(x)`: the bag graph with children removed and
/// each child's adhesion completed into a clique. Every edge is tagged
/// original or adhesion; adhesion edges carry the children supporting
/// them.
#[derive(Debug, Clone)]
pub struct AnnotatedBagGraph {
    pub node: u32,
    /// `bag(x)`, sorted; edge endpoints are indices into this list.
    pub verts: Vec<u32>,
    /// Per local vertex, indices into `edges`.
    pub adj: Vec<Vec<u32>>,
    pub edges: Vec<BagEdge>,
    /// `(child node, |adh(child)|)`; the degree of a child in the paper's
    /// bag graph equals its adhesion size.
    pub child_degrees: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct BagEdge {
    pub a: u32,
    pub b: u32,
    pub original: bool,
    /// Children whose adhesion contains both endpoints; empty for
    /// original edges.
    pub supports: Vec<u32>,
}

impl AnnotatedBagGraph {
    pub fn local(&self, v: u32) -> Option<u32> {
        self.verts.binary_search(&v).ok().map(|i| i as u32)
    }

    pub fn degree(&self, local: u32) -> usize {
        self.adj[local as usize].len()
    }

    pub fn original_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.original).count()
    }

    pub fn other_endpoint(&self, edge: u32, local: u32) -> u32 {
        let e = &self.edges[edge as usize];
        if e.a == local {
            e.b
        } else {
            e.a
        }
    }
}

/// Builds `bgraph_∅(x)` with the paper's annotations.
pub fn bag_graph(g: &Graph, d: &TreeDecomposition, derived: &DerivedSets, x: u32) -> AnnotatedBagGraph {
    let verts: Vec<u32> = d.bag(x).to_vec();
    let local = |v: u32| verts.binary_search(&v).expect("vertex in bag") as u32;
    let mut edges: Vec<BagEdge> = Vec::new();
    let mut index: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();
    for (ai, &u) in verts.iter().enumerate() {
        for &w in g.neighbors(u) {
            if w > u {
                if let Ok(bi) = verts.binary_search(&w) {
                    let id = edges.len() as u32;
                    index.insert((ai as u32, bi as u32), id);
                    edges.push(BagEdge { a: ai as u32, b: bi as u32, original: true, supports: Vec::new() });
                }
            }
        }
    }
    let mut child_degrees = Vec::with_capacity(d.children(x).len());
    for &y in d.children(x) {
        let adh = derived.adh(y);
        child_degrees.push((y, adh.len() as u32));
        for (i, &u) in adh.iter().enumerate() {
            for &v in &adh[i + 1..] {
                let (a, b) = (local(u), local(v));
                let key = if a < b { (a, b) } else { (b, a) };
                match index.get(&key) {
                    Some(&id) if edges[id as usize].original => {}
                    Some(&id) => edges[id as usize].supports.push(y),
                    None => {
                        let id = edges.len() as u32;
                        index.insert(key, id);
                        edges.push(BagEdge { a: key.0, b: key.1, original: false, supports: vec![y] });
                    }
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); verts.len()];
    for (id, e) in edges.iter().enumerate() {
        adj[e.a as usize].push(id as u32);
        adj[e.b as usize].push(id as u32);
    }
    AnnotatedBagGraph { node: x, verts, adj, edges, child_degrees }
}

/// Definitional `bgraph_S(x)` for cross-checking the lazy emulation:
/// bag vertices minus `S`, original edges, and for each child an edge
/// between adhesion vertices connected inside `G[cone(child)] - S`.
pub fn bgraph_s_from_definition(
    g: &Graph,
    d: &TreeDecomposition,
    derived: &DerivedSets,
    x: u32,
    s: &VertexSet,
) -> (Vec<u32>, Vec<(u32, u32)>) {
    let verts: Vec<u32> = d.bag(x).iter().copied().filter(|&v| !s.contains(v)).collect();
    let mut edges = Vec::new();
    for (i, &u) in verts.iter().enumerate() {
        for &v in &verts[i + 1..] {
            if g.has_edge(u, v) {
                edges.push((u, v));
            }
        }
    }
    for &y in d.children(x) {
        let cone = derived.cone_set(d, g.n(), y);
        let adh = derived.adh(y);
        for (i, &u) in adh.iter().enumerate() {
            for &v in &adh[i + 1..] {
                if s.contains(u) || s.contains(v) || g.has_edge(u, v) {
                    continue;
                }
                // u-v path within the child's cone avoiding S
                let mut forb = s.clone();
                for w in g.vertices() {
                    if !cone.contains(w) {
                        forb.insert(w);
                    }
                }
                if crate::graph::connected_avoiding(g, u, v, &forb) {
                    edges.push((u, v));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    (verts, edges)
}

/// Sizes from the bag-graph total-size bound: for a regular decomposition
/// of adhesion `a`, `Σ|bgraph(x)| ≤ (a+2)|G|` and
/// `Σ‖bgraph(x)‖ ≤ ‖G‖ + (a+2)²|G|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalSizeCheck {
    pub sum_order: usize,
    pub order_bound: usize,
    pub sum_size: usize,
    pub size_bound: usize,
}

impl TotalSizeCheck {
    pub fn holds(&self) -> bool {
        self.sum_order <= self.order_bound && self.sum_size <= self.size_bound
    }
}

pub fn total_size_check(g: &Graph, d: &TreeDecomposition, derived: &DerivedSets) -> TotalSizeCheck {
    let a = derived.adhesion_width();
    let mut sum_order = 0usize;
    let mut sum_size = 0usize;
    let mut marked = vec![false; g.n()];
    for x in 0..d.len() as u32 {
        let bag = d.bag(x);
        let order = bag.len() + d.children(x).len();
        for &v in bag {
            marked[v as usize] = true;
        }
        let mut original = 0usize;
        for &v in bag {
            original += g.neighbors(v).iter().filter(|&&w| w > v && marked[w as usize]).count();
        }
        for &v in bag {
            marked[v as usize] = false;
        }
        let child_edges: usize = d.children(x).iter().map(|&y| derived.adh(y).len()).sum();
        sum_order += order;
        sum_size += order + original + child_edges;
    }
    TotalSizeCheck {
        sum_order,
        order_bound: (a + 2) * g.n(),
        sum_size,
        size_bound: g.size() + (a + 2) * (a + 2) * g.n(),
    }
}

/// Navigation index over the decomposition tree.
pub fn nav_index(d: &TreeDecomposition) -> NavIndex {
    NavIndex::build(d.parents()).expect("decomposition structure is validated at construction")
}
