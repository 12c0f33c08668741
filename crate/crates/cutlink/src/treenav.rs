//! Rooted-tree navigation with queries whose cost does not depend on the
//! tree size: lowest common ancestors, directed children, and
//! topmost-marked-node-on-path lookups.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NavError {
    #[error("parent links contain a cycle or unreachable node")]
    CycleDetected,
    #[error("tree must have exactly one root, found {0}")]
    BadRootCount(usize),
    #[error("{ancestor} is not a strict ancestor of {node}")]
    NotStrictAncestor { ancestor: u32, node: u32 },
    #[error("{ancestor} is not an ancestor of {node}")]
    NotAncestor { ancestor: u32, node: u32 },
}

/// Sparse-table range-minimum structure over (value, payload) pairs.
#[derive(Debug, Clone)]
struct Rmq {
    // levels[j][i] = index of minimum in [i, i + 2^j)
    levels: Vec<Vec<u32>>,
    keys: Vec<u32>,
}

impl Rmq {
    fn new(keys: Vec<u32>) -> Rmq {
        let n = keys.len();
        let mut levels = Vec::new();
        let mut base: Vec<u32> = (0..n as u32).collect();
        levels.push(base.clone());
        let mut width = 1;
        while 2 * width <= n {
            let prev = &levels[levels.len() - 1];
            let mut next = Vec::with_capacity(n - 2 * width + 1);
            for i in 0..=(n - 2 * width) {
                let a = prev[i];
                let b = prev[i + width];
                next.push(if keys[a as usize] <= keys[b as usize] { a } else { b });
            }
            width *= 2;
            levels.push(next);
        }
        base.clear();
        Rmq { levels, keys }
    }

    /// Index of the minimum key in the inclusive range [l, r].
    fn argmin(&self, l: usize, r: usize) -> usize {
        debug_assert!(l <= r && r < self.keys.len());
        let span = r - l + 1;
        let j = (usize::BITS - 1 - span.leading_zeros()) as usize;
        let a = self.levels[j][l];
        let b = self.levels[j][r + 1 - (1 << j)];
        if self.keys[a as usize] <= self.keys[b as usize] {
            a as usize
        } else {
            b as usize
        }
    }
}

/// Euler-tour LCA structure over one rooted tree.
#[derive(Debug, Clone)]
struct EulerLca {
    first: Vec<u32>,
    tour: Vec<u32>,
    rmq: Rmq,
    depth: Vec<u32>,
}

impl EulerLca {
    fn build(parent: &[Option<u32>], children: &[Vec<u32>], root: u32, depth: &[u32]) -> EulerLca {
        let n = parent.len();
        let mut tour = Vec::with_capacity(2 * n);
        let mut first = vec![u32::MAX; n];
        // iterative DFS emitting a node each time it is entered or returned to
        let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ci)) = stack.last_mut() {
            if *ci == 0 {
                first[v as usize] = tour.len() as u32;
                tour.push(v);
            }
            if *ci < children[v as usize].len() {
                let c = children[v as usize][*ci];
                *ci += 1;
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&mut (p, _)) = stack.last_mut() {
                    tour.push(p);
                }
            }
        }
        let keys: Vec<u32> = tour.iter().map(|&v| depth[v as usize]).collect();
        EulerLca { first, tour, rmq: Rmq::new(keys), depth: depth.to_vec() }
    }

    fn lca(&self, x: u32, y: u32) -> u32 {
        let (mut a, mut b) = (self.first[x as usize] as usize, self.first[y as usize] as usize);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        self.tour[self.rmq.argmin(a, b)]
    }
}

/// Navigation index for one rooted tree: `lca` and `dir` in constant time.
///
/// `dir` queries go through an auxiliary tree in which every node `x` is
/// expanded into a path `(x,0)..(x,d(x))` with child `i` attached at
/// `(x,i)`; the lca of `(x,0)` and `(y,0)` there reveals which child of
/// `x` leads toward `y`.
#[derive(Debug, Clone)]
pub struct NavIndex {
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    root: u32,
    depth: Vec<u32>,
    lca: EulerLca,
    // auxiliary tree: aux node ids are offset(x) + i for (x, i)
    aux_offset: Vec<u32>,
    aux_lca: EulerLca,
    aux_size: usize,
}

impl NavIndex {
    /// Builds the index from parent links (`None` marks the root).
    pub fn build(parent: &[Option<u32>]) -> Result<NavIndex, NavError> {
        let n = parent.len();
        assert!(n > 0, "empty tree");
        let roots: Vec<u32> =
            (0..n as u32).filter(|&v| parent[v as usize].is_none()).collect();
        if roots.len() != 1 {
            return Err(NavError::BadRootCount(roots.len()));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for v in 0..n as u32 {
            if let Some(p) = parent[v as usize] {
                if p as usize >= n {
                    return Err(NavError::CycleDetected);
                }
                children[p as usize].push(v);
            }
        }
        // depths via BFS from the root; unreached nodes mean a cycle
        let mut depth = vec![u32::MAX; n];
        depth[root as usize] = 0;
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &c in &children[v as usize] {
                depth[c as usize] = depth[v as usize] + 1;
                order.push(c);
            }
        }
        if order.len() != n {
            return Err(NavError::CycleDetected);
        }
        let lca = EulerLca::build(parent, &children, root, &depth);

        // auxiliary tree for dir queries
        let mut aux_offset = vec![0u32; n];
        let mut total = 0u32;
        for v in 0..n {
            aux_offset[v] = total;
            total += children[v].len() as u32 + 1;
        }
        let aux_size = total as usize;
        debug_assert!(aux_size < 2 * n.max(1));
        let mut aux_parent: Vec<Option<u32>> = vec![None; aux_size];
        let mut aux_children: Vec<Vec<u32>> = vec![Vec::new(); aux_size];
        for v in 0..n {
            let off = aux_offset[v] as usize;
            let d = children[v].len();
            // (v, i) is the parent of (v, i-1)
            for i in 1..=d {
                aux_parent[off + i - 1] = Some((off + i) as u32);
                aux_children[off + i].push((off + i - 1) as u32);
            }
            // child i of v hangs from (v, i) by its own top node (c, d(c))
            for (i, &c) in children[v].iter().enumerate() {
                let c_top = aux_offset[c as usize] as usize + children[c as usize].len();
                aux_parent[c_top] = Some((off + i + 1) as u32);
                aux_children[off + i + 1].push(c_top as u32);
            }
        }
        let aux_root = (aux_offset[root as usize] as usize + children[root as usize].len()) as u32;
        let mut aux_depth = vec![0u32; aux_size];
        let mut stack = vec![aux_root];
        while let Some(v) = stack.pop() {
            for &c in &aux_children[v as usize] {
                aux_depth[c as usize] = aux_depth[v as usize] + 1;
                stack.push(c);
            }
        }
        let aux_lca = EulerLca::build(&aux_parent, &aux_children, aux_root, &aux_depth);

        Ok(NavIndex {
            parent: parent.to_vec(),
            children,
            root,
            depth,
            lca,
            aux_offset,
            aux_lca,
            aux_size,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of nodes of the auxiliary tree; always below `2 |T|`.
    pub fn aux_len(&self) -> usize {
        self.aux_size
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        self.parent[v as usize]
    }

    pub fn children(&self, v: u32) -> &[u32] {
        &self.children[v as usize]
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }

    /// Deepest common ancestor of `x` and `y`.
    pub fn lca(&self, x: u32, y: u32) -> u32 {
        self.lca.lca(x, y)
    }

    /// True iff `x` lies on the root path of `y` (every node is its own
    /// ancestor).
    pub fn is_ancestor(&self, x: u32, y: u32) -> bool {
        self.lca(x, y) == x
    }

    /// The y-directed child of `x`: the unique child of `x` that is an
    /// ancestor of `y`. Requires `x` to be a strict ancestor of `y`.
    pub fn dir(&self, x: u32, y: u32) -> Result<u32, NavError> {
        if x == y || !self.is_ancestor(x, y) {
            return Err(NavError::NotStrictAncestor { ancestor: x, node: y });
        }
        let ax = self.aux_offset[x as usize]; // (x, 0)
        let ay = self.aux_offset[y as usize]; // (y, 0)
        let anc = self.aux_lca.lca(ax, ay);
        let i = (anc - self.aux_offset[x as usize]) as usize; // second coordinate
        debug_assert!(i >= 1);
        Ok(self.children[x as usize][i - 1])
    }

    /// Least-common-ancestor closure of `nodes`: the input set together
    /// with all pairwise lcas. The result has at most `2 |nodes| - 1`
    /// elements and is sorted by (depth, id).
    pub fn lca_closure(&self, nodes: &[u32]) -> Vec<u32> {
        assert!(!nodes.is_empty(), "lca closure of an empty set");
        let mut out: Vec<u32> = nodes.to_vec();
        out.sort_unstable();
        out.dedup();
        let base = out.clone();
        for i in 0..base.len() {
            for j in i + 1..base.len() {
                out.push(self.lca(base[i], base[j]));
            }
        }
        out.sort_unstable();
        out.dedup();
        out.sort_by_key(|&v| (self.depth[v as usize], v));
        debug_assert!(out.len() <= 2 * base.len().max(1) - 1);
        out
    }
}

/// Topmost-node-in-`L` queries along ancestor-descendant paths.
///
/// Stores, per node, the deepest strict ancestor belonging to `L`, plus a
/// [`NavIndex`] over the tree contracted to `L` with a fresh root adjoined
/// as parent of all `L`-roots.
#[derive(Debug, Clone)]
pub struct PartitionNavIndex {
    in_set: Vec<bool>,
    // deepest strict ancestor in L; u32::MAX encodes "none"
    anc: Vec<u32>,
    // contracted tree: local id 0 is the adjoined root, L nodes follow in
    // ascending order of their original ids
    local_of: Vec<u32>,
    orig_of: Vec<u32>,
    contracted: NavIndex,
}

const NONE: u32 = u32::MAX;

impl PartitionNavIndex {
    pub fn build(nav: &NavIndex, set: &[u32]) -> PartitionNavIndex {
        let n = nav.len();
        let mut in_set = vec![false; n];
        for &v in set {
            in_set[v as usize] = true;
        }
        // anc links via one pass in depth order (parents precede children)
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&v| nav.depth(v));
        let mut anc = vec![NONE; n];
        for &v in &order {
            if let Some(p) = nav.parent(v) {
                anc[v as usize] =
                    if in_set[p as usize] { p } else { anc[p as usize] };
            }
        }
        let mut orig_of = vec![NONE];
        let mut local_of = vec![NONE; n];
        for v in 0..n as u32 {
            if in_set[v as usize] {
                local_of[v as usize] = orig_of.len() as u32;
                orig_of.push(v);
            }
        }
        let mut parent: Vec<Option<u32>> = vec![None; orig_of.len()];
        for (local, &v) in orig_of.iter().enumerate().skip(1) {
            let a = anc[v as usize];
            parent[local] = Some(if a == NONE { 0 } else { local_of[a as usize] });
        }
        let contracted = NavIndex::build(&parent).expect("contracted tree is well formed");
        PartitionNavIndex { in_set, anc, local_of, orig_of, contracted }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.in_set[v as usize]
    }

    /// Deepest strict ancestor of `v` belonging to the set.
    pub fn anc(&self, v: u32) -> Option<u32> {
        match self.anc[v as usize] {
            NONE => None,
            a => Some(a),
        }
    }

    /// Topmost node on the x-to-y path (both inclusive) that belongs to
    /// the set, or `None`. Requires `x` to be an ancestor of `y`.
    pub fn topmost_in_set(&self, nav: &NavIndex, x: u32, y: u32) -> Result<Option<u32>, NavError> {
        if !nav.is_ancestor(x, y) {
            return Err(NavError::NotAncestor { ancestor: x, node: y });
        }
        let ax = self.anc[x as usize];
        let ay = self.anc[y as usize];
        if ax == ay {
            return Ok(if self.in_set[y as usize] { Some(y) } else { None });
        }
        // locals: the adjoined root stands in for "no ancestor"
        let lx = if ax == NONE { 0 } else { self.local_of[ax as usize] };
        let ly = self.local_of[ay as usize];
        let child = self
            .contracted
            .dir(lx, ly)
            .expect("anc(x) is a strict contracted ancestor of anc(y)");
        Ok(Some(self.orig_of[child as usize]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn parents(list: &[i64]) -> Vec<Option<u32>> {
        list.iter().map(|&p| if p < 0 { None } else { Some(p as u32) }).collect()
    }

    /// Naive lca via explicit ancestor chains.
    fn chain_lca(parent: &[Option<u32>], x: u32, y: u32) -> u32 {
        let chain = |mut v: u32| {
            let mut c = vec![v];
            while let Some(p) = parent[v as usize] {
                c.push(p);
                v = p;
            }
            c
        };
        let cx = chain(x);
        let cy: std::collections::HashSet<u32> = chain(y).into_iter().collect();
        *cx.iter().find(|v| cy.contains(v)).unwrap()
    }

    fn random_tree(rng: &mut StdRng, n: usize) -> Vec<Option<u32>> {
        let mut parent = vec![None; n];
        for v in 1..n {
            parent[v] = Some(rng.gen_range(0..v) as u32);
        }
        parent
    }

    #[test]
    fn single_node() {
        let nav = NavIndex::build(&parents(&[-1])).unwrap();
        assert_eq!(nav.lca(0, 0), 0);
        assert_eq!(nav.lca_closure(&[0]), vec![0]);
    }

    #[test]
    fn path_dir() {
        // r(0) - a(1) - b(2)
        let nav = NavIndex::build(&parents(&[-1, 0, 1])).unwrap();
        assert_eq!(nav.dir(0, 2).unwrap(), 1);
        assert_eq!(nav.dir(1, 2).unwrap(), 2);
        assert_eq!(nav.dir(0, 1).unwrap(), 1);
        assert!(nav.dir(2, 0).is_err());
        assert!(nav.dir(1, 1).is_err());
    }

    #[test]
    fn lca_root_and_self() {
        let mut rng = StdRng::seed_from_u64(7);
        let parent = random_tree(&mut rng, 40);
        let nav = NavIndex::build(&parent).unwrap();
        for v in 0..40 {
            assert_eq!(nav.lca(0, v), 0);
            assert_eq!(nav.lca(v, v), v);
        }
    }

    #[test]
    fn lca_and_dir_match_naive_on_random_trees() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..30 {
            let n = rng.gen_range(2..120);
            let parent = random_tree(&mut rng, n);
            let nav = NavIndex::build(&parent).unwrap();
            assert!(nav.aux_len() < 2 * n);
            for x in 0..n as u32 {
                for y in 0..n as u32 {
                    let expected = chain_lca(&parent, x, y);
                    assert_eq!(nav.lca(x, y), expected, "lca({x},{y}) in {parent:?}");
                    if expected == x && x != y {
                        // walk y upward to just below x
                        let mut w = y;
                        while parent[w as usize] != Some(x) {
                            w = parent[w as usize].unwrap();
                        }
                        assert_eq!(nav.dir(x, y).unwrap(), w);
                        assert_eq!(nav.dir(nav.parent(y).unwrap(), y).unwrap(), y);
                    }
                }
            }
        }
    }

    #[test]
    fn cycle_detection() {
        assert!(matches!(NavIndex::build(&parents(&[-1, 2, 1])), Err(NavError::CycleDetected)));
        assert!(matches!(NavIndex::build(&parents(&[-1, -1])), Err(NavError::BadRootCount(2))));
    }

    #[test]
    fn closure_two_leaves() {
        // binary root: 0 with children 1, 2
        let nav = NavIndex::build(&parents(&[-1, 0, 0])).unwrap();
        assert_eq!(nav.lca_closure(&[1, 2]), vec![0, 1, 2]);
    }

    #[test]
    fn closure_is_minimal_closed_superset() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(2..200);
            let parent = random_tree(&mut rng, n);
            let nav = NavIndex::build(&parent).unwrap();
            let k = rng.gen_range(1..8.min(n));
            let xs: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n) as u32).collect();
            let y = nav.lca_closure(&xs);
            // fixpoint closure oracle
            let mut fix: std::collections::BTreeSet<u32> = xs.iter().copied().collect();
            loop {
                let cur: Vec<u32> = fix.iter().copied().collect();
                let before = fix.len();
                for i in 0..cur.len() {
                    for j in i + 1..cur.len() {
                        fix.insert(chain_lca(&parent, cur[i], cur[j]));
                    }
                }
                if fix.len() == before {
                    break;
                }
            }
            let mut y_sorted = y.clone();
            y_sorted.sort_unstable();
            assert_eq!(y_sorted, fix.into_iter().collect::<Vec<_>>());
            let mut dedup = xs.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert!(y.len() <= 2 * dedup.len() - 1);
        }
    }

    #[test]
    fn topmost_corner_cases() {
        // r(0) - a(1) - b(2) - c(3), L = {b, c}
        let nav = NavIndex::build(&parents(&[-1, 0, 1, 2])).unwrap();
        let pn = PartitionNavIndex::build(&nav, &[2, 3]);
        assert_eq!(pn.topmost_in_set(&nav, 0, 3).unwrap(), Some(2));
        assert_eq!(pn.topmost_in_set(&nav, 2, 3).unwrap(), Some(2));
        assert_eq!(pn.topmost_in_set(&nav, 0, 1).unwrap(), None);
        assert_eq!(pn.topmost_in_set(&nav, 1, 1).unwrap(), None);
        assert_eq!(pn.topmost_in_set(&nav, 3, 3).unwrap(), Some(3));
        assert!(pn.topmost_in_set(&nav, 3, 0).is_err());

        let empty = PartitionNavIndex::build(&nav, &[]);
        for y in 0..4 {
            assert_eq!(empty.topmost_in_set(&nav, 0, y).unwrap(), None);
        }

        let all = PartitionNavIndex::build(&nav, &[0, 1, 2, 3]);
        for y in 0..4 {
            assert_eq!(all.topmost_in_set(&nav, 0, y).unwrap(), Some(0));
        }
    }

    #[test]
    fn topmost_matches_naive_scan() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..40 {
            let n = rng.gen_range(2..150);
            let parent = random_tree(&mut rng, n);
            let nav = NavIndex::build(&parent).unwrap();
            let set: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.3)).collect();
            let pn = PartitionNavIndex::build(&nav, &set);
            let in_set: std::collections::HashSet<u32> = set.iter().copied().collect();
            for y in 0..n as u32 {
                // walk up from y, collecting the path to the root
                let mut path = vec![y];
                let mut v = y;
                while let Some(p) = parent[v as usize] {
                    path.push(p);
                    v = p;
                }
                // path[i] is the i-th ancestor of y
                for (i, &x) in path.iter().enumerate() {
                    let expect = path[..=i].iter().rev().find(|v| in_set.contains(v)).copied();
                    assert_eq!(pn.topmost_in_set(&nav, x, y).unwrap(), expect);
                }
            }
        }
    }
}
