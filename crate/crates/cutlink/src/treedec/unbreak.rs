//! Brute-force unbreakability checks and decomposition certification.
//!
//! A set X is (q,k)-unbreakable when every separation (A,B) of order at
//! most k has |A∩X| ≤ q or |B∩X| ≤ q. The check enumerates candidate
//! separators (the sets A∩B) and decides per separator, via subset sums
//! over per-component X-counts, whether both sides can exceed q.

use thiserror::Error;

use crate::graph::{Graph, VertexSet};

use super::{DerivedSets, TreeDecomposition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnbreakError {
    #[error("instance exceeds brute-force budget: C({n},{k})·{n} > {budget}")]
    TooLarge { n: usize, k: usize, budget: u64 },
}

/// Search budget for separator enumeration, roughly `C(n,k)·n` elementary
/// steps.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceBudget(pub u64);

impl Default for BruteForceBudget {
    fn default() -> Self {
        BruteForceBudget(100_000_000)
    }
}

fn binom(n: usize, k: usize) -> u64 {
    let mut r: u64 = 1;
    for i in 0..k.min(n) {
        r = r.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    if k > n {
        0
    } else {
        r
    }
}

/// Largest `min(|A∩X|, |B∩X|)` over all separations (A,B) of `h` of order
/// at most `k`. X is (q,k)-unbreakable iff this threshold is ≤ q.
pub fn breaking_threshold(
    h: &Graph,
    x: &VertexSet,
    k: usize,
    budget: BruteForceBudget,
) -> Result<usize, UnbreakError> {
    let n = h.n();
    let cost = binom(n, k).saturating_mul(n as u64);
    if cost > budget.0 {
        return Err(UnbreakError::TooLarge { n, k, budget: budget.0 });
    }
    let mut best = 0usize;
    let mut sep: Vec<u32> = Vec::with_capacity(k);
    let mut forb = VertexSet::new(n);
    enumerate_separators(h, x, k, 0, &mut sep, &mut forb, &mut best);
    Ok(best)
}

fn enumerate_separators(
    h: &Graph,
    x: &VertexSet,
    k: usize,
    from: usize,
    sep: &mut Vec<u32>,
    forb: &mut VertexSet,
    best: &mut usize,
) {
    let base = sep.iter().filter(|&&v| x.contains(v)).count();
    let comps = crate::graph::components_avoiding(h, forb);
    let counts: Vec<usize> =
        comps.iter().map(|c| c.iter().filter(|&&v| x.contains(v)).count()).collect();
    let total: usize = counts.iter().sum();
    // subset sums of component counts, as a bitset
    let mut reach = vec![0u64; total / 64 + 1];
    reach[0] = 1;
    for &c in &counts {
        if c == 0 {
            continue;
        }
        // shift-or by c bits
        let (words, bits) = (c / 64, c % 64);
        for i in (0..reach.len()).rev() {
            let mut val = if i >= words { reach[i - words] << bits } else { 0 };
            if bits > 0 && i > words {
                val |= reach[i - words - 1] >> (64 - bits);
            }
            reach[i] |= val;
        }
    }
    for s in 0..=total {
        if reach[s / 64] >> (s % 64) & 1 == 1 {
            let side_a = base + s;
            let side_b = base + (total - s);
            *best = (*best).max(side_a.min(side_b));
        }
    }
    if sep.len() == k {
        return;
    }
    for v in from as u32..h.n() as u32 {
        sep.push(v);
        forb.insert(v);
        enumerate_separators(h, x, k, v as usize + 1, sep, forb, best);
        forb.remove(v);
        sep.pop();
    }
}

/// Is `x` (q,k)-unbreakable in `h`? Brute force over all separations of
/// order ≤ k; errors out when the instance exceeds the budget.
pub fn is_unbreakable_set(
    h: &Graph,
    x: &VertexSet,
    q: usize,
    k: usize,
    budget: BruteForceBudget,
) -> Result<bool, UnbreakError> {
    if x.len() <= q {
        return Ok(true);
    }
    Ok(breaking_threshold(h, x, k, budget)? <= q)
}

/// A witness that `x` is not (q,k)-unbreakable in `h`: a separator and the
/// two sides (components assigned greedily), both holding more than q
/// elements of `x`.
pub fn find_breaking_separator(
    h: &Graph,
    x: &VertexSet,
    q: usize,
    k: usize,
    budget: BruteForceBudget,
) -> Result<Option<Vec<u32>>, UnbreakError> {
    let n = h.n();
    let cost = binom(n, k).saturating_mul(n as u64);
    if cost > budget.0 {
        return Err(UnbreakError::TooLarge { n, k, budget: budget.0 });
    }
    fn rec(
        h: &Graph,
        x: &VertexSet,
        q: usize,
        k: usize,
        from: usize,
        sep: &mut Vec<u32>,
        forb: &mut VertexSet,
    ) -> Option<Vec<u32>> {
        let base = sep.iter().filter(|&&v| x.contains(v)).count();
        let comps = crate::graph::components_avoiding(h, forb);
        let counts: Vec<usize> =
            comps.iter().map(|c| c.iter().filter(|&&v| x.contains(v)).count()).collect();
        let total: usize = counts.iter().sum();
        if base + total > q {
            // greedy balance: sort descending, add to the lighter side
            let mut cs = counts.clone();
            cs.sort_unstable_by(|a, b| b.cmp(a));
            let (mut sa, mut sb) = (0usize, 0usize);
            for c in cs {
                if sa <= sb {
                    sa += c;
                } else {
                    sb += c;
                }
            }
            if base + sa > q && base + sb > q {
                return Some(sep.clone());
            }
            // exact check via subset sums when the greedy split misses
            let mut reach = vec![false; total + 1];
            reach[0] = true;
            for &c in &counts {
                if c == 0 {
                    continue;
                }
                for s in (c..=total).rev() {
                    if reach[s - c] {
                        reach[s] = true;
                    }
                }
            }
            for s in 0..=total {
                if reach[s] && base + s > q && base + (total - s) > q {
                    return Some(sep.clone());
                }
            }
        }
        if sep.len() == k {
            return None;
        }
        for v in from as u32..h.n() as u32 {
            sep.push(v);
            forb.insert(v);
            let found = rec(h, x, q, k, v as usize + 1, sep, forb);
            forb.remove(v);
            sep.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
    let mut sep = Vec::with_capacity(k);
    let mut forb = VertexSet::new(n);
    Ok(rec(h, x, q, k, 0, &mut sep, &mut forb))
}

/// Which graph each bag must be unbreakable in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyMode {
    /// `bag(x)` unbreakable in `G[cone(x)]`.
    Strong,
    /// `bag(x)` unbreakable in `G`.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertifyViolation {
    BagBreakable { node: u32, threshold: usize },
    AdhesionTooLarge { node: u32, size: usize },
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub mode: CertifyMode,
    pub q: usize,
    pub k: usize,
    pub violations: Vec<CertifyViolation>,
}

impl CertifyReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks (q,k)-unbreakability of every bag in the requested mode and that
/// no adhesion exceeds q. Bags that are cliques of `g` pass without
/// enumeration whenever q ≥ k: a separation cannot put two clique
/// vertices strictly on opposite sides, so one side meets the bag in at
/// most `order ≤ k ≤ q` vertices.
pub fn certify(
    g: &Graph,
    d: &TreeDecomposition,
    q: usize,
    k: usize,
    mode: CertifyMode,
    budget: BruteForceBudget,
) -> Result<CertifyReport, UnbreakError> {
    let derived = DerivedSets::compute(g, d);
    let mut violations = Vec::new();
    for x in 0..d.len() as u32 {
        let a = derived.adh(x).len();
        if a > q {
            violations.push(CertifyViolation::AdhesionTooLarge { node: x, size: a });
        }
    }
    for x in 0..d.len() as u32 {
        let bag = d.bag(x);
        if bag.len() <= q {
            continue;
        }
        if q >= k && g.is_clique(bag) {
            continue;
        }
        let threshold = match mode {
            CertifyMode::Weak => {
                let xset = VertexSet::from_iter(g.n(), bag.iter().copied());
                breaking_threshold(g, &xset, k, budget)?
            }
            CertifyMode::Strong => {
                let cone = derived.cone_set(d, g.n(), x);
                let (h, names) = g.induced(&cone);
                let mut local = VertexSet::new(h.n());
                for (i, &v) in names.iter().enumerate() {
                    if bag.binary_search(&v).is_ok() {
                        local.insert(i as u32);
                    }
                }
                breaking_threshold(&h, &local, k, budget)?
            }
        };
        if threshold > q {
            violations.push(CertifyViolation::BagBreakable { node: x, threshold });
        }
    }
    Ok(CertifyReport { mode, q, k, violations })
}
