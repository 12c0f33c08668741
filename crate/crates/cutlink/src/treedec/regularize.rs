//! Regularization of valid tree decompositions.
//!
//! Three repairs, applied until none fires:
//!   (a) a non-root node with empty margin is deleted and its children are
//!       spliced onto its parent (sound: its bag is contained in the
//!       parent's bag);
//!   (b) a node whose component induces a disconnected subgraph is split
//!       into one copy per connected component;
//!   (c) an adhesion vertex with no neighbor in the component is removed
//!       from the node's bag and from every bag below.
//!
//! The pass is bottom-up. Once a node is processed its component induces a
//! connected subgraph and all its adhesion vertices have neighbors inside,
//! so each child contributes exactly one component summary (its ports into
//! the parent bag) and a split at the parent moves child subtrees
//! wholesale instead of copying bags.

use crate::graph::Graph;

use super::TreeDecomposition;

const NONE: u32 = u32::MAX;

struct Arena {
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    bag: Vec<Vec<u32>>,
    mrg: Vec<Vec<u32>>,
    alive: Vec<bool>,
    // ports into the parent bag, recorded when a node is finalized
    summary: Vec<Vec<u32>>,
}

impl Arena {
    fn remove_child(&mut self, parent: u32, child: u32) {
        let list = &mut self.children[parent as usize];
        let pos = list.iter().position(|&c| c == child).expect("child link");
        list.swap_remove(pos);
    }

    /// Removes `v` from the bags of the subtree rooted at `node`; descends
    /// only while `v` is present, so total work is amortized by removed
    /// occurrences.
    fn prune_below(&mut self, v: u32, node: u32) {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            let bag = &mut self.bag[x as usize];
            match bag.binary_search(&v) {
                Ok(pos) => {
                    bag.remove(pos);
                    stack.extend_from_slice(&self.children[x as usize]);
                }
                Err(_) => {}
            }
        }
    }
}

/// Tiny union-find over the per-node cells.
struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut r = x;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut c = x;
        while self.parent[c as usize] != r {
            let next = self.parent[c as usize];
            self.parent[c as usize] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Produces a regular decomposition of `g` from a valid one. Every output
/// bag is a subset of an input bag, adhesion sizes do not grow, and the
/// result is a fixpoint of the procedure.
pub fn regularize(g: &Graph, d: &TreeDecomposition) -> TreeDecomposition {
    let n_init = d.len();
    let mut arena = Arena {
        parent: (0..n_init as u32)
            .map(|x| d.parent(x).unwrap_or(NONE))
            .collect(),
        children: (0..n_init as u32).map(|x| d.children(x).to_vec()).collect(),
        bag: (0..n_init as u32).map(|x| d.bag(x).to_vec()).collect(),
        mrg: Vec::with_capacity(n_init),
        alive: vec![true; n_init],
        summary: vec![Vec::new(); n_init],
    };
    for x in 0..n_init as u32 {
        let m = match d.parent(x) {
            None => arena.bag[x as usize].clone(),
            Some(p) => arena.bag[x as usize]
                .iter()
                .copied()
                .filter(|&v| !d.bag_contains(p, v))
                .collect(),
        };
        arena.mrg.push(m);
    }

    // repair (a): deepest-first deletion of empty-margin non-root nodes
    let order = d.topo_order();
    for &x in order.iter().rev() {
        let p = arena.parent[x as usize];
        if p == NONE || !arena.mrg[x as usize].is_empty() {
            continue;
        }
        arena.alive[x as usize] = false;
        arena.remove_child(p, x);
        let moved = std::mem::take(&mut arena.children[x as usize]);
        for &c in &moved {
            arena.parent[c as usize] = p;
        }
        arena.children[p as usize].extend_from_slice(&moved);
    }

    // repairs (b) and (c), bottom-up
    let mut margin_stamp = vec![NONE; g.n()];
    let mut margin_local = vec![0u32; g.n()];
    let mut adh_stamp = vec![NONE; g.n()];
    for &x in order.iter().rev() {
        if !arena.alive[x as usize] {
            continue;
        }
        let par = arena.parent[x as usize];
        if par == NONE {
            continue; // regularity is not required at the root
        }
        let adh: Vec<u32> = arena.bag[x as usize]
            .iter()
            .copied()
            .filter(|v| arena.bag[par as usize].binary_search(v).is_ok())
            .collect();
        let margin = std::mem::take(&mut arena.mrg[x as usize]);
        let kids = std::mem::take(&mut arena.children[x as usize]);
        let k_margin = margin.len();
        for (i, &v) in margin.iter().enumerate() {
            margin_stamp[v as usize] = x;
            margin_local[v as usize] = i as u32;
        }
        for &v in &adh {
            adh_stamp[v as usize] = x;
        }

        let mut dsu = Dsu::new(k_margin + kids.len());
        // edges inside the margin
        for (i, &u) in margin.iter().enumerate() {
            for &w in g.neighbors(u) {
                if w > u && margin_stamp[w as usize] == x {
                    dsu.union(i as u32, margin_local[w as usize]);
                }
            }
        }
        // child ports landing in the margin merge cells; ports landing in
        // the adhesion propagate upward
        let mut pending: Vec<(u32, u32)> = Vec::new(); // (cell element, adhesion port)
        for (j, &y) in kids.iter().enumerate() {
            let elem = (k_margin + j) as u32;
            for &p in &arena.summary[y as usize] {
                if margin_stamp[p as usize] == x {
                    dsu.union(elem, margin_local[p as usize]);
                } else {
                    debug_assert_eq!(adh_stamp[p as usize], x, "port must lie in the bag");
                    pending.push((elem, p));
                }
            }
        }
        for (i, &u) in margin.iter().enumerate() {
            for &w in g.neighbors(u) {
                if adh_stamp[w as usize] == x {
                    pending.push((i as u32, w));
                }
            }
        }

        // group cells
        let total = k_margin + kids.len();
        let mut cell_ids: Vec<u32> = vec![NONE; total];
        let mut cells: Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> = Vec::new(); // (margin verts, children, ports)
        for e in 0..total as u32 {
            let r = dsu.find(e);
            if cell_ids[r as usize] == NONE {
                cell_ids[r as usize] = cells.len() as u32;
                cells.push((Vec::new(), Vec::new(), Vec::new()));
            }
            let c = cell_ids[r as usize] as usize;
            if (e as usize) < k_margin {
                cells[c].0.push(margin[e as usize]);
            } else {
                cells[c].1.push(kids[e as usize - k_margin]);
            }
        }
        for (e, p) in pending {
            let c = cell_ids[dsu.find(e) as usize] as usize;
            cells[c].2.push(p);
        }
        for cell in &mut cells {
            cell.0.sort_unstable();
            cell.2.sort_unstable();
            cell.2.dedup();
        }

        if cells.len() == 1 {
            let (cell_margin, cell_kids, ports) = cells.pop().unwrap();
            // repair (c): drop adhesion vertices with no neighbor inside
            for &v in &adh {
                if ports.binary_search(&v).is_err() {
                    if let Ok(pos) = arena.bag[x as usize].binary_search(&v) {
                        arena.bag[x as usize].remove(pos);
                    }
                    for &y in &cell_kids {
                        arena.prune_below(v, y);
                    }
                }
            }
            arena.mrg[x as usize] = cell_margin;
            arena.children[x as usize] = cell_kids;
            arena.summary[x as usize] = ports;
        } else {
            // repair (b): one copy per component; margin-less copies are
            // spliced away on the spot (repair (a))
            arena.alive[x as usize] = false;
            arena.remove_child(par, x);
            for (cell_margin, cell_kids, ports) in cells {
                for &v in &adh {
                    if ports.binary_search(&v).is_err() {
                        for &y in &cell_kids {
                            arena.prune_below(v, y);
                        }
                    }
                }
                if cell_margin.is_empty() {
                    for &y in &cell_kids {
                        arena.parent[y as usize] = par;
                        arena.children[par as usize].push(y);
                    }
                } else {
                    let id = arena.parent.len() as u32;
                    let mut bag: Vec<u32> = cell_margin.iter().chain(ports.iter()).copied().collect();
                    bag.sort_unstable();
                    for &y in &cell_kids {
                        arena.parent[y as usize] = id;
                    }
                    arena.parent.push(par);
                    arena.children.push(cell_kids);
                    arena.bag.push(bag);
                    arena.mrg.push(cell_margin);
                    arena.alive.push(true);
                    arena.summary.push(ports);
                    arena.children[par as usize].push(id);
                }
            }
        }
    }

    // compact alive nodes, keeping creation order so a regular input maps
    // to itself
    let total = arena.parent.len();
    let mut new_id = vec![NONE; total];
    let mut count = 0u32;
    for x in 0..total {
        if arena.alive[x] {
            new_id[x] = count;
            count += 1;
        }
    }
    let mut parent = Vec::with_capacity(count as usize);
    let mut bags = Vec::with_capacity(count as usize);
    for x in 0..total {
        if arena.alive[x] {
            let p = arena.parent[x];
            parent.push(if p == NONE { None } else { Some(new_id[p as usize]) });
            bags.push(std::mem::take(&mut arena.bag[x]));
        }
    }
    TreeDecomposition::new(parent, bags).expect("regularization preserves tree structure")
}
