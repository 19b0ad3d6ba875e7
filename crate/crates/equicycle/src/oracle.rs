//! Brute-force ground truth for small graphs: does `G` contain `k` pairwise
//! edge-disjoint cycles on one common vertex set, and how many edges can an
//! `n`-vertex graph have without such a family.
//!
//! The common vertex set `S` is searched in ascending size; inside `G[S]` the
//! cycles are Hamiltonian, so `G[S]` needs minimum degree at least `2k`.

use crate::expander::next_combination;
use crate::graph::Graph;
use crate::pipeline::CycleFamily;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("the oracle handles at most 64 vertices, got {0}")]
    TooLarge(usize),
    #[error("k must be positive")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Largest `|S|` tried. Below `n` a negative answer is not definitive.
    pub max_subset: usize,
    /// Backtracking steps over all subsets.
    pub node_budget: u64,
    pub time_budget: Duration,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_subset: usize::MAX,
            node_budget: 200_000_000,
            time_budget: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exhausted {
    Nodes,
    Time,
    SubsetCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum OracleOutcome {
    Found { family: CycleFamily, nodes: u64 },
    /// The search completed and no family exists.
    None { subsets: u64, nodes: u64 },
    BudgetExceeded { reason: Exhausted, nodes: u64 },
}

struct Search {
    nodes: u64,
    limits: SearchLimits,
    start: Instant,
    stop: Option<Exhausted>,
}

impl Search {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.limits.node_budget {
            self.stop = Some(Exhausted::Nodes);
        } else if self.nodes % 4096 == 0 && self.start.elapsed() > self.limits.time_budget {
            self.stop = Some(Exhausted::Time);
        }
        self.stop.is_none()
    }
}

/// Packs `k` edge-disjoint Hamiltonian cycles of the graph on `verts` given
/// by the adjacency bitmasks `adj`. Every cycle starts at `verts[0]` with
/// its second vertex below its last, and cycles come in increasing
/// lexicographic order.
fn pack(
    search: &mut Search,
    verts: &[usize],
    adj: &mut [u64],
    k: usize,
    found: &mut Vec<Vec<usize>>,
) -> bool {
    if found.len() == k {
        return true;
    }
    let n = verts.len();
    let full: u64 = verts.iter().fold(0, |m, &v| m | 1 << v);
    let start = verts[0];
    let mut path = vec![start];
    let lower = found.last().cloned();

    fn extend(
        search: &mut Search,
        adj: &mut [u64],
        full: u64,
        n: usize,
        k: usize,
        path: &mut Vec<usize>,
        used: u64,
        lower: &Option<Vec<usize>>,
        found: &mut Vec<Vec<usize>>,
        verts: &[usize],
    ) -> bool {
        if !search.tick() {
            return false;
        }
        let last = *path.last().expect("nonempty");
        if path.len() == n {
            let start = path[0];
            if adj[last] >> start & 1 == 0 || path[1] > last {
                return false;
            }
            if lower.as_ref().is_some_and(|l| path.as_slice() <= l.as_slice()) {
                return false;
            }
            let cycle = path.clone();
            let edges: Vec<(usize, usize)> = (0..n).map(|i| (cycle[i], cycle[(i + 1) % n])).collect();
            for &(a, b) in &edges {
                adj[a] &= !(1 << b);
                adj[b] &= !(1 << a);
            }
            found.push(cycle);
            let ok = pack(search, verts, adj, k, found);
            if !ok {
                found.pop();
                for &(a, b) in &edges {
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
            return ok;
        }
        let mut cand = adj[last] & full & !used;
        while cand != 0 {
            let w = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            path.push(w);
            if extend(search, adj, full, n, k, path, used | 1 << w, lower, found, verts) {
                return true;
            }
            path.pop();
            if search.stop.is_some() {
                return false;
            }
        }
        false
    }

    let used = 1u64 << start;
    extend(search, adj, full, n, k, &mut path, used, &lower, found, verts)
}

/// Search for `k` pairwise edge-disjoint cycles on a common vertex set.
pub fn brute_force_cycles(g: &Graph, k: usize, lim: &SearchLimits) -> Result<OracleOutcome, OracleError> {
    let n = g.n();
    if n > 64 {
        return Err(OracleError::TooLarge(n));
    }
    if k == 0 {
        return Err(OracleError::ZeroK);
    }
    let base: Vec<u64> = (0..n).map(|v| g.neighbours(v).iter().fold(0, |m, &w| m | 1 << w)).collect();
    let mut search = Search {
        nodes: 0,
        limits: *lim,
        start: Instant::now(),
        stop: None,
    };
    let mut subsets = 0u64;
    let top = n.min(lim.max_subset);
    for size in 3..=top {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let set: u64 = idx.iter().fold(0, |m, &v| m | 1 << v);
            if idx.iter().all(|&v| (base[v] & set).count_ones() as usize >= 2 * k) {
                subsets += 1;
                let mut adj: Vec<u64> = base.iter().map(|&m| m & set).collect();
                let mut found = Vec::new();
                if pack(&mut search, &idx, &mut adj, k, &mut found) {
                    let mut fam = CycleFamily::new(found);
                    fam.vertex_set = idx.clone();
                    return Ok(OracleOutcome::Found {
                        family: fam,
                        nodes: search.nodes,
                    });
                }
                if let Some(reason) = search.stop {
                    return Ok(OracleOutcome::BudgetExceeded {
                        reason,
                        nodes: search.nodes,
                    });
                }
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    if top < n {
        return Ok(OracleOutcome::BudgetExceeded {
            reason: Exhausted::SubsetCap,
            nodes: search.nodes,
        });
    }
    Ok(OracleOutcome::None {
        subsets,
        nodes: search.nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ExtremalOutcome {
    Found {
        /// Most edges of an `n`-vertex graph with no family.
        edges: usize,
        witness: Vec<(usize, usize)>,
        /// Non-isomorphic graphs checked.
        graphs: u64,
    },
    BudgetExceeded {
        reason: Exhausted,
        /// Every graph missing fewer than this many edges of `K_n` has a
        /// family.
        lower_bound_on_missing: usize,
    },
}

fn pair_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            let j = if k % 2 == 0 { i } else { 0 };
            p.swap(j, k - 1);
        }
    }
    heap(n, &mut p, &mut out);
    out
}

/// Largest `m` such that some `n`-vertex `m`-edge graph has no `k` pairwise
/// edge-disjoint cycles on a common vertex set. Having such a family is
/// preserved by adding edges, so graphs are examined as `K_n` minus `r`
/// edges for `r = 0, 1, …`, one representative per isomorphism class.
pub fn brute_force_extremal(n: usize, k: usize, lim: &SearchLimits) -> Result<ExtremalOutcome, OracleError> {
    if n > 10 {
        return Err(OracleError::TooLarge(n));
    }
    if k == 0 {
        return Err(OracleError::ZeroK);
    }
    let pairs = pair_index(n);
    let slot = |u: usize, v: usize| pairs.iter().position(|&p| p == (u.min(v), u.max(v))).expect("pair");
    let perms: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .map(|p| pairs.iter().map(|&(u, v)| slot(p[u], p[v])).collect())
        .collect();
    let canon = |mask: u64| -> u64 {
        perms
            .iter()
            .map(|map| {
                let mut out = 0u64;
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    m &= m - 1;
                    out |= 1 << map[i];
                }
                out
            })
            .min()
            .unwrap_or(0)
    };
    let start = Instant::now();
    let mut graphs = 0u64;
    let mut level: Vec<u64> = vec![0];
    for r in 0..=pairs.len() {
        for &missing in &level {
            graphs += 1;
            let edges: Vec<(usize, usize)> = (0..pairs.len()).filter(|&i| missing >> i & 1 == 0).map(|i| pairs[i]).collect();
            let g = Graph::from_edges(n, edges.iter().copied()).expect("valid pairs");
            let remaining = SearchLimits {
                time_budget: lim.time_budget.saturating_sub(start.elapsed()),
                ..*lim
            };
            match brute_force_cycles(&g, k, &remaining)? {
                OracleOutcome::None { .. } => {
                    return Ok(ExtremalOutcome::Found {
                        edges: pairs.len() - r,
                        witness: edges,
                        graphs,
                    })
                }
                OracleOutcome::Found { .. } => {}
                OracleOutcome::BudgetExceeded { reason, .. } => {
                    return Ok(ExtremalOutcome::BudgetExceeded {
                        reason,
                        lower_bound_on_missing: r,
                    })
                }
            }
        }
        if start.elapsed() > lim.time_budget {
            return Ok(ExtremalOutcome::BudgetExceeded {
                reason: Exhausted::Time,
                lower_bound_on_missing: r + 1,
            });
        }
        let mut next = HashSet::new();
        for &missing in &level {
            for i in 0..pairs.len() {
                if missing >> i & 1 == 0 {
                    next.insert(canon(missing | 1 << i));
                }
            }
        }
        let mut next: Vec<u64> = next.into_iter().collect();
        next.sort_unstable();
        level = next;
    }
    unreachable!("the empty graph has no cycles")
}
