//! Undirected simple graphs over dense integer vertex ids, plus the
//! restricted traversals that every other component is checked against.

use std::fmt;

use thiserror::Error;

/// Errors produced while reading the text graph format.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: vertex id {id} out of range (n = {n})")]
    VertexOutOfRange { line: usize, id: usize, n: usize },
    #[error("line {line}: self-loop on vertex {id}")]
    SelfLoop { line: usize, id: usize },
    #[error("expected {declared} edge lines, found {found}")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error("missing `p <n> <m>` header")]
    MissingHeader,
}

/// An undirected simple graph with vertices `0..n`.
///
/// Adjacency lists are sorted and symmetric; parallel edges and both
/// orientations of the same edge are collapsed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    num_edges: usize,
}

impl Graph {
    /// Builds a graph from an edge list, deduplicating edges.
    ///
    /// Panics on self-loops or out-of-range endpoints; use [`Graph::parse`]
    /// for untrusted input.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Graph {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!((u as usize) < n && (v as usize) < n, "endpoint out of range");
            assert_ne!(u, v, "self-loop");
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut num_edges = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            num_edges += list.len();
        }
        Graph { adj, num_edges: num_edges / 2 }
    }

    /// Parses the text format: a `p <n> <m>` header, then `m` lines
    /// `e <u> <v>`. Lines starting with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Graph, ParseError> {
        let mut n: Option<usize> = None;
        let mut declared_m = 0usize;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut it = s.split_whitespace();
            match it.next() {
                Some("p") => {
                    if n.is_some() {
                        return Err(ParseError::Malformed { line, msg: "duplicate header".into() });
                    }
                    let nv = parse_num(it.next(), line)?;
                    let mv = parse_num(it.next(), line)?;
                    if it.next().is_some() {
                        return Err(ParseError::Malformed { line, msg: "trailing tokens in header".into() });
                    }
                    n = Some(nv);
                    declared_m = mv;
                    edges.reserve(mv);
                }
                Some("e") => {
                    let n = n.ok_or(ParseError::MissingHeader)?;
                    let u = parse_num(it.next(), line)?;
                    let v = parse_num(it.next(), line)?;
                    if it.next().is_some() {
                        return Err(ParseError::Malformed { line, msg: "trailing tokens in edge".into() });
                    }
                    if u >= n {
                        return Err(ParseError::VertexOutOfRange { line, id: u, n });
                    }
                    if v >= n {
                        return Err(ParseError::VertexOutOfRange { line, id: v, n });
                    }
                    if u == v {
                        return Err(ParseError::SelfLoop { line, id: u });
                    }
                    edges.push((u as u32, v as u32));
                }
                Some(tok) => {
                    return Err(ParseError::Malformed { line, msg: format!("unknown record `{tok}`") });
                }
                None => unreachable!(),
            }
        }
        let n = n.ok_or(ParseError::MissingHeader)?;
        if edges.len() != declared_m {
            return Err(ParseError::EdgeCountMismatch { declared: declared_m, found: edges.len() });
        }
        Ok(Graph::from_edges(n, &edges))
    }

    /// Renders the graph in the text format accepted by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p {} {}\n", self.n(), self.m()));
        for (u, v) in self.edges() {
            out.push_str(&format!("e {u} {v}\n"));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.num_edges
    }

    /// `|V| + |E|`.
    pub fn size(&self) -> usize {
        self.n() + self.m()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        0..self.n() as u32
    }

    /// All edges with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = u as u32;
            list.iter().copied().filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    /// Checks whether `set` induces a clique.
    pub fn is_clique(&self, set: &[u32]) -> bool {
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                if !self.has_edge(u, v) {
                    return false;
                }
            }
        }
        true
    }

    /// Induced subgraph on `keep` together with the mapping from new ids
    /// back to original vertex ids (sorted ascending).
    pub fn induced(&self, keep: &VertexSet) -> (Graph, Vec<u32>) {
        let verts: Vec<u32> = keep.iter().collect();
        let mut local = vec![u32::MAX; self.n()];
        for (i, &v) in verts.iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for &v in &verts {
            for &w in self.neighbors(v) {
                if v < w && local[w as usize] != u32::MAX {
                    edges.push((local[v as usize], local[w as usize]));
                }
            }
        }
        (Graph::from_edges(verts.len(), &edges), verts)
    }
}

fn parse_num(tok: Option<&str>, line: usize) -> Result<usize, ParseError> {
    let tok = tok.ok_or(ParseError::Malformed { line, msg: "missing field".into() })?;
    tok.parse::<usize>()
        .map_err(|_| ParseError::Malformed { line, msg: format!("not a number: `{tok}`") })
}

/// A set of vertex ids with O(1) membership; iteration is ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    member: Vec<bool>,
    count: usize,
}

impl VertexSet {
    pub fn new(n: usize) -> VertexSet {
        VertexSet { member: vec![false; n], count: 0 }
    }

    pub fn from_iter<I: IntoIterator<Item = u32>>(n: usize, items: I) -> VertexSet {
        let mut s = VertexSet::new(n);
        for v in items {
            s.insert(v);
        }
        s
    }

    pub fn full(n: usize) -> VertexSet {
        VertexSet { member: vec![true; n], count: n }
    }

    pub fn insert(&mut self, v: u32) -> bool {
        let slot = &mut self.member[v as usize];
        if *slot {
            false
        } else {
            *slot = true;
            self.count += 1;
            true
        }
    }

    pub fn remove(&mut self, v: u32) -> bool {
        let slot = &mut self.member[v as usize];
        if *slot {
            *slot = false;
            self.count -= 1;
            true
        } else {
            false
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.member[v as usize]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn capacity(&self) -> usize {
        self.member.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.member.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32)
    }

    pub fn clear(&mut self) {
        self.member.iter_mut().for_each(|b| *b = false);
        self.count = 0;
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("source vertex {0} is forbidden")]
pub struct SourceForbidden(pub u32);

/// Breadth-first search from `source` in `g` minus `forbidden`, stopped as
/// soon as the reached set would exceed `cap`. Returns the reached set and
/// whether the stop fired. `|reached| <= cap` always holds.
pub fn truncated_bfs(
    g: &Graph,
    source: u32,
    forbidden: &VertexSet,
    cap: usize,
) -> Result<(VertexSet, bool), SourceForbidden> {
    assert!(cap >= 1, "cap must be at least 1");
    if forbidden.contains(source) {
        return Err(SourceForbidden(source));
    }
    let mut reached = VertexSet::new(g.n());
    reached.insert(source);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(source);
    let mut truncated = false;
    'outer: while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if forbidden.contains(w) || reached.contains(w) {
                continue;
            }
            if reached.len() == cap {
                truncated = true;
                break 'outer;
            }
            reached.insert(w);
            queue.push_back(w);
        }
    }
    Ok((reached, truncated))
}

/// Ground truth for connectivity queries: is there an s-t path in `g`
/// avoiding every vertex of `forbidden`? False whenever `s` or `t` is
/// itself forbidden; true for `s == t` otherwise.
pub fn connected_avoiding(g: &Graph, s: u32, t: u32, forbidden: &VertexSet) -> bool {
    if forbidden.contains(s) || forbidden.contains(t) {
        return false;
    }
    if s == t {
        return true;
    }
    let mut seen = vec![false; g.n()];
    seen[s as usize] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if w == t {
                return true;
            }
            if !seen[w as usize] && !forbidden.contains(w) {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Partition of `V(g) \ forbidden` into connected components of the
/// restricted graph. Each block is sorted; blocks are ordered by their
/// smallest vertex.
pub fn components_avoiding(g: &Graph, forbidden: &VertexSet) -> Vec<Vec<u32>> {
    let mut seen = vec![false; g.n()];
    let mut blocks = Vec::new();
    for s in g.vertices() {
        if seen[s as usize] || forbidden.contains(s) {
            continue;
        }
        let mut block = vec![s];
        seen[s as usize] = true;
        let mut head = 0;
        while head < block.len() {
            let v = block[head];
            head += 1;
            for &w in g.neighbors(v) {
                if !seen[w as usize] && !forbidden.contains(w) {
                    seen[w as usize] = true;
                    block.push(w);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])
    }

    fn k4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    #[test]
    fn parse_smallest() {
        let g = Graph::parse("p 2 1\ne 0 1\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.m(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn parse_no_edges() {
        let g = Graph::parse("p 3 0\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn parse_path() {
        let g = Graph::parse("# a path\np 4 3\ne 0 1\ne 1 2\ne 2 3\n").unwrap();
        assert_eq!(g, path4());
    }

    #[test]
    fn parse_dedups_both_orientations() {
        let g = Graph::parse("p 3 3\ne 0 1\ne 1 0\ne 0 1\n").unwrap();
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match Graph::parse("p 2 1\ne 0 5\n") {
            Err(ParseError::VertexOutOfRange { line: 2, id: 5, n: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(Graph::parse("e 0 1\n").is_err());
        assert!(Graph::parse("p 2 2\ne 0 1\n").is_err());
        assert!(Graph::parse("p 2 1\ne 1 1\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = path4();
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn truncated_bfs_cut_vertex() {
        let g = path4();
        let forb = VertexSet::from_iter(4, [1]);
        let (reached, truncated) = truncated_bfs(&g, 0, &forb, 4).unwrap();
        assert_eq!(reached.iter().collect::<Vec<_>>(), vec![0]);
        assert!(!truncated);
    }

    #[test]
    fn truncated_bfs_cap_fires() {
        let g = path4();
        let (reached, truncated) = truncated_bfs(&g, 0, &VertexSet::new(4), 2).unwrap();
        assert_eq!(reached.len(), 2);
        assert!(truncated);
    }

    #[test]
    fn truncated_bfs_exact_component_not_truncated() {
        let g = path4();
        let (reached, truncated) = truncated_bfs(&g, 0, &VertexSet::new(4), 4).unwrap();
        assert_eq!(reached.len(), 4);
        assert!(!truncated);
    }

    #[test]
    fn truncated_bfs_source_forbidden() {
        let g = path4();
        let forb = VertexSet::from_iter(4, [0]);
        assert_eq!(truncated_bfs(&g, 0, &forb, 4), Err(SourceForbidden(0)));
    }

    #[test]
    fn truncated_bfs_matches_full_bfs_on_random_graphs() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let n = 20;
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if next() % 10 < 3 {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges);
            for s in g.vertices() {
                let (reached, truncated) = truncated_bfs(&g, s, &VertexSet::new(n), n).unwrap();
                assert!(!truncated);
                let comp = components_avoiding(&g, &VertexSet::new(n))
                    .into_iter()
                    .find(|b| b.contains(&s))
                    .unwrap();
                assert_eq!(reached.iter().collect::<Vec<_>>(), comp);
            }
        }
    }

    #[test]
    fn connected_avoiding_basics() {
        let g = path4();
        assert!(connected_avoiding(&g, 2, 2, &VertexSet::new(4)));
        let forb = VertexSet::from_iter(4, [0]);
        assert!(!connected_avoiding(&g, 0, 3, &forb));
        let forb = VertexSet::from_iter(4, [1]);
        assert!(!connected_avoiding(&g, 0, 3, &forb));
        assert!(connected_avoiding(&g, 0, 3, &VertexSet::new(4)));
    }

    #[test]
    fn connected_avoiding_symmetric() {
        let g = k4();
        for s in 0..4 {
            for t in 0..4 {
                for f in 0..4u32 {
                    let forb = VertexSet::from_iter(4, [f]);
                    assert_eq!(
                        connected_avoiding(&g, s, t, &forb),
                        connected_avoiding(&g, t, s, &forb)
                    );
                }
            }
        }
    }

    #[test]
    fn components_examples() {
        let g = path4();
        let forb = VertexSet::from_iter(4, [1]);
        assert_eq!(components_avoiding(&g, &forb), vec![vec![0], vec![2, 3]]);

        let blocks = components_avoiding(&k4(), &VertexSet::new(4));
        assert_eq!(blocks, vec![vec![0, 1, 2, 3]]);

        assert!(components_avoiding(&g, &VertexSet::full(4)).is_empty());
    }

    #[test]
    fn components_agree_with_pairwise_connectivity() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4)]);
        let forb = VertexSet::from_iter(6, [1]);
        let blocks = components_avoiding(&g, &forb);
        for u in g.vertices() {
            for v in g.vertices() {
                if forb.contains(u) || forb.contains(v) {
                    continue;
                }
                let same_block = blocks.iter().any(|b| b.contains(&u) && b.contains(&v));
                assert_eq!(same_block, connected_avoiding(&g, u, v, &forb));
            }
        }
    }
}
