//! Short internally vertex-disjoint paths through a connecting set.
//!
//! All paths here run between terminals outside `V` and use only vertices
//! of `V` as internal vertices.

use crate::graph::{log2, mask, max_bipartite_matching, Graph};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectError {
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("terminal {0} lies in the connecting set")]
    TerminalInSet(usize),
    #[error("pair {0} joins a vertex to itself")]
    LoopPair(usize),
    #[error("max_len must be at least 2, got {0}")]
    MaxLen(usize),
    #[error("vertex {vertex} of the connecting set has {count} neighbours among the terminals, cap is {cap}")]
    DegreeCap { vertex: usize, count: usize, cap: f64 },
    #[error("no pair can be joined within length {bound}")]
    NoPath { bound: usize },
    #[error("star matching failed Hall's condition")]
    Hall(HallDeficiency),
    #[error("could not connect every pair: {}", .0.diagnosis)]
    Unsolved(Box<ConnectFailure>),
}

/// Terminal clones whose joint neighbourhood in `W` is too small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallDeficiency {
    /// Indices into the terminal list.
    pub terminals: Vec<usize>,
    pub clones: usize,
    pub neighbourhood: Vec<usize>,
}

/// Disjoint sets of `q` neighbours in `W`, one set per terminal (terminals
/// may repeat). Solved as a matching from `q` clones of every terminal into
/// `W`.
pub fn star_matching(g: &Graph, terminals: &[usize], w: &[usize], q: usize) -> Result<Vec<Vec<usize>>, ConnectError> {
    for &x in terminals.iter().chain(w) {
        if x >= g.n() {
            return Err(ConnectError::OutOfRange(x));
        }
    }
    let mut w_sorted = w.to_vec();
    w_sorted.sort_unstable();
    w_sorted.dedup();
    let adj: Vec<Vec<usize>> = terminals
        .iter()
        .flat_map(|&t| {
            let row: Vec<usize> = (0..w_sorted.len()).filter(|&i| g.has_edge(t, w_sorted[i])).collect();
            std::iter::repeat(row).take(q)
        })
        .collect();
    let m = max_bipartite_matching(w_sorted.len(), &adj);
    if let Some(bad) = m.hall_violator(&adj) {
        let mut terms: Vec<usize> = bad.iter().map(|&c| c / q).collect();
        terms.dedup();
        let mut nb: Vec<usize> = bad.iter().flat_map(|&c| adj[c].iter().map(|&i| w_sorted[i])).collect();
        nb.sort_unstable();
        nb.dedup();
        return Err(ConnectError::Hall(HallDeficiency {
            terminals: terms,
            clones: bad.len(),
            neighbourhood: nb,
        }));
    }
    let mut leaves = vec![Vec::with_capacity(q); terminals.len()];
    for (c, r) in m.left.iter().enumerate() {
        leaves[c / q].push(w_sorted[r.expect("perfect on the left")]);
    }
    for l in &mut leaves {
        l.sort_unstable();
    }
    Ok(leaves)
}

/// Shortest `x-y` path whose internal vertices lie in `allowed`, at most
/// `max_len` edges long. Neighbours are scanned in id order.
pub fn shortest_path_through(g: &Graph, x: usize, y: usize, allowed: &[bool], max_len: usize) -> Option<Vec<usize>> {
    if x == y {
        return None;
    }
    let mut prev = vec![usize::MAX; g.n()];
    let mut dist = vec![usize::MAX; g.n()];
    dist[x] = 0;
    let mut queue = VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        if dist[u] >= max_len {
            continue;
        }
        for &w in g.neighbours(u) {
            if dist[w] != usize::MAX {
                continue;
            }
            if w == y {
                let mut path = vec![y, u];
                let mut cur = u;
                while cur != x {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if allowed[w] {
                dist[w] = dist[u] + 1;
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// `⌊4ℓ log n⌋`.
pub fn one_of_many_bound(n: usize, per_hop: usize) -> usize {
    (4.0 * per_hop as f64 * log2(n as f64)).floor() as usize
}

/// The first pair (by index) that can be joined by a path of length at most
/// `4ℓ log n` with internal vertices in `V`, together with a shortest such
/// path.
pub fn find_one_of_many_paths(
    g: &Graph,
    pairs: &[(usize, usize)],
    v: &[usize],
    per_hop: usize,
) -> Result<(usize, Vec<usize>), ConnectError> {
    let bound = one_of_many_bound(g.n(), per_hop);
    let allowed = mask(g.n(), v);
    for (j, &(z, w)) in pairs.iter().enumerate() {
        if z >= g.n() || w >= g.n() {
            return Err(ConnectError::OutOfRange(z.max(w)));
        }
        if let Some(p) = shortest_path_through(g, z, w, &allowed, bound) {
            return Ok((j, p));
        }
    }
    Err(ConnectError::NoPath { bound })
}

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionRequest {
    pub pairs: Vec<(usize, usize)>,
    /// The connecting set.
    pub v: Vec<usize>,
    pub max_len: usize,
    /// Declared bound on the number of neighbours any vertex of `V` has in
    /// the terminal multiset.
    pub degree_cap: f64,
    pub exhaustive_cap: usize,
    /// Rip-up rounds before falling back to exhaustive search.
    pub retry_budget: usize,
}

impl ConnectionRequest {
    /// Length bound `⌈(log n)^6⌉`, an unbounded degree cap and default budgets.
    pub fn new(g: &Graph, pairs: Vec<(usize, usize)>, v: Vec<usize>) -> Self {
        let l = log2(g.n() as f64);
        ConnectionRequest {
            pairs,
            v,
            max_len: (l.powi(6).ceil() as usize).max(2),
            degree_cap: f64::INFINITY,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            retry_budget: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSolution {
    /// Path `i` runs from `pairs[i].0` to `pairs[i].1`.
    pub paths: Vec<Vec<usize>>,
    /// For each vertex of `V` used, the index of the path through it.
    pub usage: Vec<(usize, usize)>,
    /// Whether the exhaustive search produced this solution.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Diagnosis {
    /// Pair cannot be joined even with all of `V` free.
    Isolated { pair: usize },
    /// Exhaustive search completed without a solution.
    NoDisjointSolution { states: usize },
    /// Greedy and rip-up failed and the instance exceeds the exhaustive cap.
    Contention { pair: usize, blocking: Vec<usize> },
}

impl std::fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnosis::Isolated { pair } => write!(f, "pair {pair} has no path through the set"),
            Diagnosis::NoDisjointSolution { states } => {
                write!(f, "no disjoint solution exists ({states} states searched)")
            }
            Diagnosis::Contention { pair, blocking } => {
                write!(f, "pair {pair} blocked by {} used vertices; search space over cap", blocking.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectFailure {
    /// Best partial routing found.
    pub partial: Vec<Option<Vec<usize>>>,
    pub diagnosis: Diagnosis,
}

/// Validate the request against `g`: ranges, terminals outside `V`, and the
/// declared degree cap.
pub fn validate_request(g: &Graph, req: &ConnectionRequest) -> Result<(), ConnectError> {
    let n = g.n();
    if req.max_len < 2 {
        return Err(ConnectError::MaxLen(req.max_len));
    }
    for &x in &req.v {
        if x >= n {
            return Err(ConnectError::OutOfRange(x));
        }
    }
    let in_v = mask(n, &req.v);
    let mut mult = vec![0usize; n];
    for (i, &(x, y)) in req.pairs.iter().enumerate() {
        for t in [x, y] {
            if t >= n {
                return Err(ConnectError::OutOfRange(t));
            }
            if in_v[t] {
                return Err(ConnectError::TerminalInSet(t));
            }
            mult[t] += 1;
        }
        if x == y {
            return Err(ConnectError::LoopPair(i));
        }
    }
    for &v in &req.v {
        let count: usize = g.neighbours(v).iter().map(|&w| mult[w]).sum();
        if count as f64 > req.degree_cap {
            return Err(ConnectError::DegreeCap {
                vertex: v,
                count,
                cap: req.degree_cap,
            });
        }
    }
    Ok(())
}

struct Router<'a> {
    g: &'a Graph,
    req: &'a ConnectionRequest,
    in_v: Vec<bool>,
    /// Path index occupying each vertex of `V`.
    owner: Vec<Option<usize>>,
    paths: Vec<Option<Vec<usize>>>,
}

impl<'a> Router<'a> {
    fn free(&self) -> Vec<bool> {
        (0..self.g.n()).map(|x| self.in_v[x] && self.owner[x].is_none()).collect()
    }

    fn route(&mut self, i: usize) -> bool {
        let (x, y) = self.req.pairs[i];
        match shortest_path_through(self.g, x, y, &self.free(), self.req.max_len) {
            Some(p) => {
                self.place(i, p);
                true
            }
            None => false,
        }
    }

    fn place(&mut self, i: usize, p: Vec<usize>) {
        for &x in &p[1..p.len() - 1] {
            self.owner[x] = Some(i);
        }
        self.paths[i] = Some(p);
    }

    fn rip(&mut self, i: usize) {
        if let Some(p) = self.paths[i].take() {
            for &x in &p[1..p.len() - 1] {
                self.owner[x] = None;
            }
        }
    }

    /// Shortest path for `i` ignoring other paths, or `None` if `i` is
    /// isolated.
    fn unconstrained(&self, i: usize) -> Option<Vec<usize>> {
        let (x, y) = self.req.pairs[i];
        shortest_path_through(self.g, x, y, &self.in_v, self.req.max_len)
    }

    /// Remove the path owning most of `i`'s unconstrained route, route `i`,
    /// then try to re-route the removed path.
    fn repair(&mut self, i: usize) -> bool {
        let Some(ideal) = self.unconstrained(i) else {
            return false;
        };
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for &x in &ideal[1..ideal.len() - 1] {
            if let Some(o) = self.owner[x] {
                match counts.iter_mut().find(|(p, _)| *p == o) {
                    Some(c) => c.1 += 1,
                    None => counts.push((o, 1)),
                }
            }
        }
        // Most overlap first, smallest index on ties.
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let Some(&(hog, _)) = counts.first() else {
            return false;
        };
        let saved = self.paths[hog].clone().expect("owner is routed");
        self.rip(hog);
        if self.route(i) && self.route(hog) {
            return true;
        }
        // Undo.
        self.rip(i);
        self.rip(hog);
        self.place(hog, saved);
        false
    }
}

/// Internally vertex-disjoint paths joining every pair through `V`.
///
/// Pairs are routed greedily by shortest path in order of increasing number
/// of first hops into `V`. A pair that gets stuck rips up the path hogging
/// its ideal route; if that fails the order is rotated to start with the
/// stuck pair. After `retry_budget` rounds the exhaustive search decides,
/// provided its state count stays within `exhaustive_cap`.
pub fn connect_pairs_disjoint(g: &Graph, req: &ConnectionRequest) -> Result<ConnectionSolution, ConnectError> {
    validate_request(g, req)?;
    let n = g.n();
    let in_v = mask(n, &req.v);
    let r = req.pairs.len();

    let hops = |i: usize| {
        let (x, y) = req.pairs[i];
        let a = g.neighbours(x).iter().filter(|&&w| in_v[w]).count();
        let b = g.neighbours(y).iter().filter(|&&w| in_v[w]).count();
        a.min(b) + usize::from(g.has_edge(x, y)) * n
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by_key(|&i| (hops(i), i));

    let mut router = Router {
        g,
        req,
        in_v: in_v.clone(),
        owner: vec![None; n],
        paths: vec![None; r],
    };
    for i in 0..r {
        if router.unconstrained(i).is_none() {
            return Err(ConnectError::Unsolved(Box::new(ConnectFailure {
                partial: vec![None; r],
                diagnosis: Diagnosis::Isolated { pair: i },
            })));
        }
    }

    let mut best: (usize, Vec<Option<Vec<usize>>>) = (0, vec![None; r]);
    let mut stuck = 0;
    for _round in 0..req.retry_budget.max(1) {
        for i in 0..r {
            router.rip(i);
        }
        let mut failed = None;
        for &i in &order {
            if !router.route(i) && !router.repair(i) {
                failed = Some(i);
                break;
            }
        }
        let routed = router.paths.iter().filter(|p| p.is_some()).count();
        if routed > best.0 || best.0 == 0 {
            best = (routed, router.paths.clone());
        }
        match failed {
            None => return Ok(solution(&router.paths, false)),
            Some(i) => {
                stuck = i;
                let pos = order.iter().position(|&x| x == i).expect("in order");
                order.remove(pos);
                order.insert(0, i);
            }
        }
    }

    match exhaustive(g, req, &in_v) {
        Exhaustive::Found(paths) => Ok(solution(&paths.into_iter().map(Some).collect::<Vec<_>>(), true)),
        Exhaustive::None(states) => Err(ConnectError::Unsolved(Box::new(ConnectFailure {
            partial: best.1,
            diagnosis: Diagnosis::NoDisjointSolution { states },
        }))),
        Exhaustive::OverCap => {
            let blocking = match router.unconstrained(stuck) {
                Some(p) => p[1..p.len() - 1]
                    .iter()
                    .copied()
                    .filter(|&x| best.1.iter().flatten().any(|q| q[1..q.len() - 1].contains(&x)))
                    .collect(),
                None => Vec::new(),
            };
            Err(ConnectError::Unsolved(Box::new(ConnectFailure {
                partial: best.1,
                diagnosis: Diagnosis::Contention { pair: stuck, blocking },
            })))
        }
    }
}

fn solution(paths: &[Option<Vec<usize>>], exhaustive: bool) -> ConnectionSolution {
    let paths: Vec<Vec<usize>> = paths.iter().map(|p| p.clone().expect("all routed")).collect();
    let mut usage: Vec<(usize, usize)> = paths
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p[1..p.len() - 1].iter().map(move |&x| (x, i)))
        .collect();
    usage.sort_unstable();
    ConnectionSolution {
        paths,
        usage,
        exhaustive,
    }
}

enum Exhaustive {
    Found(Vec<Vec<usize>>),
    None(usize),
    OverCap,
}

/// All simple `x-y` paths through `V` of length at most `max_len`, or `None`
/// once more than `cap` are found or the walk takes more than `10 cap` steps.
fn all_paths(g: &Graph, x: usize, y: usize, in_v: &[bool], max_len: usize, cap: usize) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut path = vec![x];
    let mut on = vec![false; g.n()];
    on[x] = true;
    let mut stack: Vec<usize> = vec![0];
    let mut steps = 0usize;
    while let Some(top) = stack.last_mut() {
        steps += 1;
        if steps > cap.saturating_mul(10) {
            return None;
        }
        let u = *path.last().expect("nonempty");
        let nb = g.neighbours(u);
        if *top >= nb.len() {
            stack.pop();
            on[u] = false;
            path.pop();
            continue;
        }
        let w = nb[*top];
        *top += 1;
        if w == y {
            let mut p = path.clone();
            p.push(y);
            out.push(p);
            if out.len() > cap {
                return None;
            }
        } else if in_v[w] && !on[w] && path.len() < max_len {
            on[w] = true;
            path.push(w);
            stack.push(0);
        }
    }
    Some(out)
}

fn exhaustive(g: &Graph, req: &ConnectionRequest, in_v: &[bool]) -> Exhaustive {
    let cap = req.exhaustive_cap;
    let mut options = Vec::with_capacity(req.pairs.len());
    let mut total = 0usize;
    for &(x, y) in &req.pairs {
        let Some(mut ps) = all_paths(g, x, y, in_v, req.max_len, cap) else {
            return Exhaustive::OverCap;
        };
        total = total.saturating_add(ps.len());
        if total > cap {
            return Exhaustive::OverCap;
        }
        ps.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        options.push(ps);
    }
    // Fewest options first.
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.sort_by_key(|&i| (options[i].len(), i));

    let mut used = vec![false; g.n()];
    let mut choice = vec![usize::MAX; options.len()];
    let mut states = 0usize;
    let mut depth = 0usize;
    let mut next = vec![0usize; options.len()];
    loop {
        if depth == order.len() {
            let paths = (0..options.len()).map(|i| options[i][choice[i]].clone()).collect();
            return Exhaustive::Found(paths);
        }
        let i = order[depth];
        // Release the previous choice at this depth.
        if choice[i] != usize::MAX {
            for &x in &options[i][choice[i]][1..options[i][choice[i]].len() - 1] {
                used[x] = false;
            }
            choice[i] = usize::MAX;
        }
        let mut placed = false;
        while next[depth] < options[i].len() {
            let c = next[depth];
            next[depth] += 1;
            states += 1;
            if states > cap {
                return Exhaustive::OverCap;
            }
            let p = &options[i][c];
            if p[1..p.len() - 1].iter().all(|&x| !used[x]) {
                for &x in &p[1..p.len() - 1] {
                    used[x] = true;
                }
                choice[i] = c;
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            if depth < order.len() {
                next[depth] = 0;
            }
        } else if depth == 0 {
            return Exhaustive::None(states);
        } else {
            depth -= 1;
        }
    }
}

/// Replay a solution: every path valid in `g`, joins its pair, respects the
/// length bound, runs through `V`, and no internal vertex is shared.
pub fn check_solution(g: &Graph, req: &ConnectionRequest, sol: &ConnectionSolution) -> bool {
    if sol.paths.len() != req.pairs.len() {
        return false;
    }
    let in_v = mask(g.n(), &req.v);
    let mut seen = vec![false; g.n()];
    for (p, &(x, y)) in sol.paths.iter().zip(&req.pairs) {
        if g.check_path(p).is_err() || p.len() < 2 || p[0] != x || p[p.len() - 1] != y || p.len() - 1 > req.max_len {
            return false;
        }
        for &w in &p[1..p.len() - 1] {
            if !in_v[w] || seen[w] {
                return false;
            }
            seen[w] = true;
        }
    }
    true
}

/// Outcome of running a suite of connection queries against a candidate
/// connecting set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectingReport {
    pub degree_cap: f64,
    pub queries: usize,
    pub solved: usize,
    /// Only set once every query in the suite was solved.
    pub connecting: bool,
}

/// Run every query (a list of pairs) through [`connect_pairs_disjoint`].
pub fn check_connecting(
    g: &Graph,
    v: &[usize],
    degree_cap: f64,
    max_len: usize,
    queries: &[Vec<(usize, usize)>],
) -> Result<ConnectingReport, ConnectError> {
    let mut solved = 0;
    for q in queries {
        let req = ConnectionRequest {
            max_len,
            degree_cap,
            ..ConnectionRequest::new(g, q.clone(), v.to_vec())
        };
        match connect_pairs_disjoint(g, &req) {
            Ok(_) => solved += 1,
            Err(ConnectError::Unsolved(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(ConnectingReport {
        degree_cap,
        queries: queries.len(),
        solved,
        connecting: solved == queries.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, SeededRng};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn star_covering_all_of_w() {
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v))).unwrap();
        assert_eq!(star_matching(&g, &[0], &[1, 2, 3, 4], 4).unwrap(), vec![vec![1, 2, 3, 4]]);
    }

    #[test]
    fn star_hall_failure() {
        // 0 and 1 share the single W-vertex 2.
        let g = Graph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        match star_matching(&g, &[0, 1], &[2], 1) {
            Err(ConnectError::Hall(h)) => {
                assert_eq!(h.terminals, vec![0, 1]);
                assert_eq!(h.neighbourhood, vec![2]);
                assert!(h.clones > h.neighbourhood.len());
            }
            other => panic!("{other:?}"),
        }
    }

    /// Backtracking search for a system of distinct representatives.
    fn sdr_exists(g: &Graph, clones: &[usize], w: &[usize], used: &mut Vec<bool>) -> bool {
        let Some((&t, rest)) = clones.split_first() else {
            return true;
        };
        for (i, &x) in w.iter().enumerate() {
            if !used[i] && g.has_edge(t, x) {
                used[i] = true;
                if sdr_exists(g, rest, w, used) {
                    return true;
                }
                used[i] = false;
            }
        }
        false
    }

    proptest! {
        #[test]
        fn star_matches_sdr_oracle(seed in any::<u64>(), q in 1usize..3, nt in 1usize..4) {
            let mut rng = SeededRng::new(seed, "star");
            let n = rng.gen_range(8..=16);
            let g = generate::gnp(n, 0.3, &mut rng);
            let terminals: Vec<usize> = (0..nt).map(|i| i % 2).collect();
            let w: Vec<usize> = (2..n).filter(|_| rng.gen_bool(0.6)).collect();
            let clones: Vec<usize> = terminals.iter().flat_map(|&t| std::iter::repeat(t).take(q)).collect();
            let expect = sdr_exists(&g, &clones, &w, &mut vec![false; w.len()]);
            match star_matching(&g, &terminals, &w, q) {
                Ok(leaves) => {
                    prop_assert!(expect);
                    let mut all: Vec<usize> = leaves.concat();
                    let total = all.len();
                    all.sort_unstable();
                    all.dedup();
                    prop_assert_eq!(all.len(), total);
                    for (t, l) in terminals.iter().zip(&leaves) {
                        prop_assert_eq!(l.len(), q);
                        prop_assert!(l.iter().all(|&x| g.has_edge(*t, x) && w.contains(&x)));
                    }
                }
                Err(ConnectError::Hall(h)) => {
                    prop_assert!(!expect);
                    prop_assert!(h.clones > h.neighbourhood.len());
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }

    #[test]
    fn one_hop_through_v() {
        let g = generate::path(3);
        assert_eq!(find_one_of_many_paths(&g, &[(0, 2)], &[1], 1).unwrap(), (0, vec![0, 1, 2]));
        assert!(matches!(
            find_one_of_many_paths(&g, &[(0, 2)], &[], 1),
            Err(ConnectError::NoPath { .. })
        ));
    }

    #[test]
    fn grid_first_feasible_pair() {
        let g = generate::grid(8, 8);
        let interior: Vec<usize> = (1..7).flat_map(|r| (1..7).map(move |c| r * 8 + c)).collect();
        // Corners have no interior neighbours; the second pair is the first
        // one with border vertices adjacent to the interior.
        let pairs = [(0, 63), (1, 62), (8, 15)];
        let (j, p) = find_one_of_many_paths(&g, &pairs, &interior, 1).unwrap();
        assert_eq!(j, 1);
        assert!(g.check_path(&p).is_ok());
        assert_eq!((p[0], p[p.len() - 1]), (1, 62));
        assert!(p.len() - 1 <= one_of_many_bound(64, 1));
        assert!(p[1..p.len() - 1].iter().all(|x| interior.contains(x)));
        // Oracle: all-pairs BFS through the interior, first feasible index.
        let allowed = mask(64, &interior);
        let first = pairs
            .iter()
            .position(|&(a, b)| shortest_path_through(&g, a, b, &allowed, 24).is_some_and(|q| q.len() - 1 <= 24))
            .unwrap();
        assert_eq!(first, j);
        assert_eq!(p.len() - 1, 12);
    }

    #[test]
    fn single_pair_two_steps() {
        let g = generate::path(3);
        let req = ConnectionRequest::new(&g, vec![(0, 2)], vec![1]);
        let sol = connect_pairs_disjoint(&g, &req).unwrap();
        assert_eq!(sol.paths, vec![vec![0, 1, 2]]);
        assert_eq!(sol.usage, vec![(1, 0)]);
    }

    #[test]
    fn shared_bottleneck_is_diagnosed() {
        // Pairs (0,1) and (2,3) both need vertex 4.
        let g = Graph::from_edges(5, [(0, 4), (1, 4), (2, 4), (3, 4)]).unwrap();
        let req = ConnectionRequest::new(&g, vec![(0, 1), (2, 3)], vec![4]);
        match connect_pairs_disjoint(&g, &req) {
            Err(ConnectError::Unsolved(f)) => {
                assert!(matches!(f.diagnosis, Diagnosis::NoDisjointSolution { .. }));
                assert_eq!(f.partial.iter().filter(|p| p.is_some()).count(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn request_validation() {
        let g = generate::path(3);
        let mut req = ConnectionRequest::new(&g, vec![(0, 1)], vec![1]);
        assert_eq!(connect_pairs_disjoint(&g, &req), Err(ConnectError::TerminalInSet(1)));
        req = ConnectionRequest::new(&g, vec![(0, 2), (0, 2)], vec![1]);
        req.degree_cap = 3.0;
        assert!(matches!(
            connect_pairs_disjoint(&g, &req),
            Err(ConnectError::DegreeCap { vertex: 1, count: 4, .. })
        ));
    }

    #[test]
    fn rip_up_recovers_from_bad_greedy_choice() {
        // Pair A = (0,1) has one first hop on each side, so it is routed
        // first and takes the short route through 2. Pair B = (4,5) can only
        // use 2, so A has to move to its detour 7-9-10-8.
        let g = Graph::from_edges(
            13,
            [(0, 7), (7, 2), (2, 8), (8, 1), (7, 9), (9, 10), (10, 8), (4, 2), (2, 5), (4, 11), (5, 12)],
        )
        .unwrap();
        let req = ConnectionRequest {
            retry_budget: 1,
            ..ConnectionRequest::new(&g, vec![(0, 1), (4, 5)], vec![2, 7, 8, 9, 10, 11, 12])
        };
        let sol = connect_pairs_disjoint(&g, &req).unwrap();
        assert!(check_solution(&g, &req, &sol));
        assert_eq!(sol.paths[1], vec![4, 2, 5]);
        assert_eq!(sol.paths[0], vec![0, 7, 9, 10, 8, 1]);
        assert!(!sol.exhaustive);
    }
}
