use super::check::next_combination;
use super::ExpanderError;
use crate::graph::{edge, log2, mask, Edge, Graph, SeededRng};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

/// `⌈(log n)^4⌉`, capped at `n`.
pub fn ball_radius(n: usize) -> usize {
    let r = log2(n as f64).powi(4).ceil() as usize;
    r.min(n)
}

/// Vertices of `V` reachable from `U` in `g - blocked` by a path of length at
/// most `radius` whose internal vertices all lie in `V`.
pub fn reach_ball(g: &Graph, u: &[usize], v: &[usize], radius: usize, blocked: &[Edge]) -> Vec<usize> {
    let blocked: HashSet<Edge> = blocked.iter().map(|&(a, b)| edge(a, b)).collect();
    reach_ball_with(g, u, &mask(g.n(), v), radius, &blocked)
}

fn reach_ball_with(
    g: &Graph,
    u: &[usize],
    in_v: &[bool],
    radius: usize,
    blocked: &HashSet<Edge>,
) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    for &x in u {
        if dist[x] != 0 {
            dist[x] = 0;
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        // Only starting vertices and vertices of V may be passed through.
        if dist[x] == radius || (dist[x] > 0 && !in_v[x]) {
            continue;
        }
        for &w in g.neighbours(x) {
            if dist[w] == usize::MAX && !blocked.contains(&edge(x, w)) {
                dist[w] = dist[x] + 1;
                queue.push_back(w);
            }
        }
    }
    (0..g.n())
        .filter(|&x| in_v[x] && dist[x] != usize::MAX)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReachMode {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ReachVerdict {
    Reachable {
        /// Every `F` was enumerated for every `U`.
        exhaustive: bool,
        radius: usize,
    },
    Witness {
        u: Vec<usize>,
        f: Vec<Edge>,
        ball: usize,
    },
}

/// Adversarial `F`: repeatedly delete the single edge that shrinks the ball
/// most (smallest edge on ties).
fn greedy_worst_f(
    g: &Graph,
    u: &[usize],
    in_v: &[bool],
    radius: usize,
    budget: usize,
    candidates: &[Edge],
) -> (Vec<Edge>, usize) {
    let mut blocked = HashSet::new();
    let mut f = Vec::new();
    let mut best = reach_ball_with(g, u, in_v, radius, &blocked).len();
    for _ in 0..budget {
        let mut choice: Option<(usize, Edge)> = None;
        for &e in candidates {
            if blocked.contains(&e) {
                continue;
            }
            blocked.insert(e);
            let size = reach_ball_with(g, u, in_v, radius, &blocked).len();
            blocked.remove(&e);
            if choice.map_or(true, |(s, _)| size < s) {
                choice = Some((size, e));
            }
        }
        let Some((size, e)) = choice else { break };
        blocked.insert(e);
        f.push(e);
        best = size;
    }
    f.sort_unstable();
    (f, best)
}

/// Smallest ball over every `F` of at most `budget` candidate edges, or
/// `None` when that would mean more than `cap` subsets.
fn exhaustive_worst_f(
    g: &Graph,
    u: &[usize],
    in_v: &[bool],
    radius: usize,
    budget: usize,
    candidates: &[Edge],
    cap: usize,
) -> Option<(Vec<Edge>, usize)> {
    let m = candidates.len();
    let b = budget.min(m);
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=b {
        if i > 0 {
            c = c.saturating_mul(m - i + 1) / i;
        }
        total = total.saturating_add(c);
    }
    if total > cap {
        return None;
    }
    let mut best = (Vec::new(), reach_ball_with(g, u, in_v, radius, &HashSet::new()).len());
    for size in 1..=b {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let blocked: HashSet<Edge> = idx.iter().map(|&i| candidates[i]).collect();
            let ball = reach_ball_with(g, u, in_v, radius, &blocked).len();
            if ball < best.1 {
                best = (idx.iter().map(|&i| candidates[i]).collect(), ball);
            }
            if !next_combination(&mut idx, m) {
                break;
            }
        }
    }
    Some(best)
}

const EXHAUSTIVE_F_CAP: usize = 20_000;

/// Is `V` λ-reachable: for every `U` and every `F` with `|F| ≤ λ|U|`, does
/// the radius-`⌈(log n)^4⌉` ball from `U` through `V` in `G - F` cover more
/// than half of `V`?
pub fn check_reachable(
    g: &Graph,
    v: &[usize],
    lambda: f64,
    mode: ReachMode,
    n_exact: usize,
) -> Result<ReachVerdict, ExpanderError> {
    let n = g.n();
    let radius = ball_radius(n);
    let in_v = mask(n, v);
    let in_u_or_v = |e: &Edge, in_u: &[bool]| in_u[e.0] || in_u[e.1] || in_v[e.0] || in_v[e.1];
    let mut exhaustive = true;

    let test = |u: &[usize], exhaustive: &mut bool| -> Option<ReachVerdict> {
        let in_u = mask(n, u);
        let budget = (lambda * u.len() as f64 + 1e-9).floor() as usize;
        let candidates: Vec<Edge> = g.edges().iter().copied().filter(|e| in_u_or_v(e, &in_u)).collect();
        let (f, ball) = match exhaustive_worst_f(g, u, &in_v, radius, budget, &candidates, EXHAUSTIVE_F_CAP) {
            Some(r) => r,
            None => {
                *exhaustive = false;
                greedy_worst_f(g, u, &in_v, radius, budget, &candidates)
            }
        };
        (2 * ball <= v.len()).then(|| ReachVerdict::Witness {
            u: u.to_vec(),
            f,
            ball,
        })
    };

    match mode {
        ReachMode::Exact => {
            if n > n_exact {
                return Err(ExpanderError::TooLargeForExact { n, limit: n_exact });
            }
            for k in 1..=n {
                let mut idx: Vec<usize> = (0..k).collect();
                loop {
                    if let Some(w) = test(&idx, &mut exhaustive) {
                        return Ok(w);
                    }
                    if !next_combination(&mut idx, n) {
                        break;
                    }
                }
            }
        }
        ReachMode::Sampled { trials, seed } => {
            exhaustive = false;
            let mut rng = SeededRng::new(seed, "expander/reach");
            let all: Vec<usize> = (0..n).collect();
            for _ in 0..trials {
                let k = rng.gen_range(1..=n.max(1));
                let mut u: Vec<usize> = all.choose_multiple(&mut rng, k).copied().collect();
                u.sort_unstable();
                let mut dummy = false;
                if let Some(w) = test(&u, &mut dummy) {
                    return Ok(w);
                }
            }
        }
    }
    Ok(ReachVerdict::Reachable { exhaustive, radius })
}

/// Greedy pass over `U` in id order, keeping `u` whenever the kept set still
/// satisfies `|N(U')| ≥ λ|U'|`.
pub fn find_well_expanding_subset(g: &Graph, u: &[usize], lambda: f64) -> Result<Vec<usize>, ExpanderError> {
    if !(lambda >= 1.0) {
        return Err(ExpanderError::BadLambda(lambda));
    }
    let mut sorted = u.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut kept: Vec<usize> = Vec::new();
    for &x in &sorted {
        kept.push(x);
        if (g.neighbourhood(&kept).len() as f64) < lambda * kept.len() as f64 {
            kept.pop();
        }
    }
    Ok(kept)
}

/// The size a maximal well-expanding subset is guaranteed to reach inside an
/// `(ε,s)`-expander: `ε|U|/(3λ(log n)^2)`.
pub fn well_expanding_size_bound(epsilon: f64, u_size: usize, lambda: f64, n: usize) -> f64 {
    let l = log2(n as f64);
    epsilon * u_size as f64 / (3.0 * lambda * l * l)
}
