//! Absorbers and the absorbing path.
//!
//! An absorber for `a, b` with endpoints `y, z` is a pair of `y`–`z` paths,
//! one with internal set `S` and one with internal set `S ∪ {a, b}`, and
//! neither path uses an edge among `a, b, y, z`. A grid holds `k` absorbers
//! per pair `p_j` of `K`, all with endpoints `x_j, x_{j+1}` and pairwise
//! disjoint interiors, so concatenating one absorber per pair gives an
//! `x_1`–`x_{s+1}` path that can swallow any matching of `K`.

mod rmbg;

pub use rmbg::{build_rmbg, pair_matching, Rmbg, RmbgConfig, RmbgError, RmbgVerification, RmbgVerify};

use crate::connect::{connect_pairs_disjoint, ConnectError, ConnectionRequest, DEFAULT_EXHAUSTIVE_CAP};
use crate::graph::{edge, log2, mask, path_edges, BipartiteGraph, Edge, Graph, SeededRng, Side};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Absorber {
    pub pair: (usize, usize),
    pub endpoints: (usize, usize),
    pub interior: Vec<usize>,
    pub path_without: Vec<usize>,
    pub path_with: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbsorberClause {
    Distinct,
    TerminalInInterior,
    NotAPath { with: bool },
    Endpoints { with: bool },
    InternalsWithout,
    InternalsWith,
    TerminalEdge { with: bool },
    InteriorSize { size: usize },
}

impl fmt::Display for AbsorberClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let which = |w: &bool| if *w { "path_with" } else { "path_without" };
        match self {
            AbsorberClause::Distinct => write!(f, "a, b, y, z distinct"),
            AbsorberClause::TerminalInInterior => write!(f, "a, b, y, z outside S"),
            AbsorberClause::NotAPath { with } => write!(f, "{} is a path of the graph", which(with)),
            AbsorberClause::Endpoints { with } => write!(f, "{} joins y and z", which(with)),
            AbsorberClause::InternalsWithout => write!(f, "internals = S"),
            AbsorberClause::InternalsWith => write!(f, "internals = S ∪ {{a,b}}"),
            AbsorberClause::TerminalEdge { with } => write!(f, "no edges among a,b,y,z in {}", which(with)),
            AbsorberClause::InteriorSize { size } => write!(f, "|S| = {size} exceeds (log n)^12"),
        }
    }
}

fn append(path: &mut Vec<usize>, seg: impl IntoIterator<Item = usize>) {
    let mut seg = seg.into_iter();
    let first = seg.next();
    debug_assert_eq!(first, path.last().copied());
    path.extend(seg);
}

impl Absorber {
    /// Assemble from two `a`–`b` paths `u = u^1..u^t`, `v = v^1..v^t` and the
    /// links `P^1` (`y` to `v^2`), `P^i` (`u^i` to `v^{i+1}`) and `P^{t-1}`
    /// (`u^{t-1}` to `z`).
    pub fn from_parts(y: usize, z: usize, u: &[usize], v: &[usize], links: &[Vec<usize>]) -> Absorber {
        let t = u.len();
        assert!(t >= 4 && t % 2 == 0 && v.len() == t && links.len() == t - 1);
        let (a, b) = (u[0], u[t - 1]);
        // 1-based accessors.
        let uu = |i: usize| u[i - 1];
        let vv = |i: usize| v[i - 1];
        let link = |i: usize| &links[i - 1];

        let mut with = link(1).clone();
        with.push(a);
        with.push(uu(2));
        let mut i = 2;
        loop {
            append(&mut with, link(i).iter().copied());
            if i + 1 == t - 1 {
                with.push(b);
                with.push(uu(t - 1));
                append(&mut with, link(t - 1).iter().copied());
                break;
            }
            with.push(vv(i + 2));
            append(&mut with, link(i + 1).iter().rev().copied());
            with.push(uu(i + 2));
            i += 2;
        }

        let mut without = link(1).clone();
        let mut i = 2;
        loop {
            without.push(vv(i + 1));
            append(&mut without, link(i).iter().rev().copied());
            without.push(uu(i + 1));
            if i + 1 == t - 1 {
                append(&mut without, link(t - 1).iter().copied());
                break;
            }
            append(&mut without, link(i + 1).iter().copied());
            i += 2;
        }

        let mut interior: Vec<usize> = links
            .iter()
            .flatten()
            .copied()
            .filter(|&x| x != a && x != b && x != y && x != z)
            .collect();
        interior.sort_unstable();
        interior.dedup();
        Absorber {
            pair: (a, b),
            endpoints: (y, z),
            interior,
            path_without: without,
            path_with: with,
        }
    }

    pub fn path(&self, with: bool) -> &[usize] {
        if with {
            &self.path_with
        } else {
            &self.path_without
        }
    }
}

fn internals(p: &[usize]) -> Vec<usize> {
    let mut v = p[1..p.len().saturating_sub(1)].to_vec();
    v.sort_unstable();
    v
}

/// Replay every defining property of an absorber against `g`.
pub fn verify_absorber(g: &Graph, abs: &Absorber) -> Result<(), AbsorberClause> {
    let (a, b) = abs.pair;
    let (y, z) = abs.endpoints;
    let terms = [a, b, y, z];
    let mut sorted_terms = terms;
    sorted_terms.sort_unstable();
    if sorted_terms.windows(2).any(|w| w[0] == w[1]) {
        return Err(AbsorberClause::Distinct);
    }
    let mut s = abs.interior.clone();
    s.sort_unstable();
    s.dedup();
    if terms.iter().any(|t| s.binary_search(t).is_ok()) {
        return Err(AbsorberClause::TerminalInInterior);
    }
    let mut s_ab = s.clone();
    s_ab.extend([a, b]);
    s_ab.sort_unstable();
    for with in [false, true] {
        let p = abs.path(with);
        if p.len() < 2 || (p[0], p[p.len() - 1]) != (y, z) {
            return Err(AbsorberClause::Endpoints { with });
        }
        if path_edges(p).iter().any(|&(x, w)| terms.contains(&x) && terms.contains(&w)) {
            return Err(AbsorberClause::TerminalEdge { with });
        }
        let want = if with { &s_ab } else { &s };
        if &internals(p) != want {
            return Err(if with {
                AbsorberClause::InternalsWith
            } else {
                AbsorberClause::InternalsWithout
            });
        }
        if g.check_path(p).is_err() {
            return Err(AbsorberClause::NotAPath { with });
        }
    }
    if s.len() as f64 > log2(g.n() as f64).powi(12) {
        return Err(AbsorberClause::InteriorSize { size: s.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainStage {
    /// Two `a`–`b` paths through `U_1`.
    PairPaths,
    /// Links through `U_2`.
    Links,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbsorbError {
    #[error("need |X| = |K| + 1, got |X| = {x} and |K| = {pairs}")]
    SizeMismatch { x: usize, pairs: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("pair {pair} is not an (A, B) pair")]
    PairSides { pair: usize },
    #[error("vertex {vertex} appears in more than one of R, X, U1, U2 or twice in X")]
    Overlap { vertex: usize },
    #[error("vertex {vertex} lies in {count} pairs, more than 200")]
    TooManyPairs { vertex: usize, count: usize },
    #[error("degree condition {which} fails: observed {observed}, allowed {cap}")]
    DegreeCondition { which: String, observed: usize, cap: f64 },
    #[error("connection failed in stage {stage:?}: {source}")]
    Connect { stage: ChainStage, source: ConnectError },
    #[error("cannot equalise the two pair paths of cell ({cycle}, {pair})")]
    Padding { cycle: usize, pair: usize },
    #[error("cell ({cycle}, {pair}) fails: {clause}")]
    Invalid { cycle: usize, pair: usize, clause: AbsorberClause },
    #[error("expected {expected} pair lists, got {got}")]
    CycleCount { expected: usize, got: usize },
    #[error("cycle {cycle}: pair {pair:?} is not in K")]
    NotInK { cycle: usize, pair: (usize, usize) },
    #[error("cycle {cycle}: vertex {vertex} lies in two chosen pairs")]
    NotMatching { cycle: usize, vertex: usize },
    #[error("cycle {cycle}: absorbing path has the wrong vertex set")]
    VertexSet { cycle: usize },
    #[error("absorbing paths of cycles {0} and {1} share an edge")]
    SharedEdge(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberConfig {
    /// `a`–`b` paths requested per cell before two of equal length are kept.
    pub multiplicity: usize,
    pub max_len: Option<usize>,
    pub exhaustive_cap: usize,
    pub retry_budget: usize,
    /// Connecting parameters `D_1`, `D_2`. When set, the degree conditions
    /// `d(v,R) ≤ D_1/(200k (log n)^6)` on `U_1` and `d(v,U_1∪X) ≤ D_2/(2k)`
    /// on `U_2` are enforced.
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

impl Default for AbsorberConfig {
    fn default() -> Self {
        AbsorberConfig {
            multiplicity: 2,
            max_len: None,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            retry_budget: 64,
            d1: None,
            d2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberGrid {
    pub k: usize,
    /// `K = p_1..p_s`.
    pub pairs: Vec<(usize, usize)>,
    /// `X = x_1..x_{s+1}`.
    pub x: Vec<usize>,
    /// `absorbers[i][j]` absorbs `p_j` between `x_j` and `x_{j+1}`.
    pub absorbers: Vec<Vec<Absorber>>,
    /// Union of all interiors.
    pub u_abs: Vec<usize>,
    /// Largest number of pairs of `K` at one vertex.
    pub max_pairs_per_vertex: usize,
    /// Largest `d(v, R)` over `U_1`.
    pub max_degree_u1_to_r: usize,
    /// Largest `d(v, U_1 ∪ X)` over `U_2`.
    pub max_degree_u2_to_u1x: usize,
    /// Cells whose two pair paths needed padding.
    pub padded: usize,
}

impl AbsorberGrid {
    pub fn s(&self) -> usize {
        self.pairs.len()
    }
}

fn check_range(n: usize, vs: &[usize]) -> Result<(), AbsorbError> {
    match vs.iter().find(|&&v| v >= n) {
        Some(&v) => Err(AbsorbError::OutOfRange(v)),
        None => Ok(()),
    }
}

/// A path from `s` to `t` with exactly `len` vertices whose internal
/// vertices are allowed, by depth-first search pruned with distances to `t`.
/// Gives up after `budget` steps.
fn path_of_length(g: &Graph, s: usize, t: usize, len: usize, allowed: &[bool], budget: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let mut dist = vec![usize::MAX; n];
    dist[t] = 0;
    let mut queue = std::collections::VecDeque::from([t]);
    while let Some(x) = queue.pop_front() {
        for &w in g.neighbours(x) {
            if dist[w] == usize::MAX && (allowed[w] || w == s) {
                dist[w] = dist[x] + 1;
                if w != s {
                    queue.push_back(w);
                }
            }
        }
    }
    let mut on = vec![false; n];
    let mut path = vec![s];
    on[s] = true;
    let mut steps = 0usize;
    fn go(
        g: &Graph,
        t: usize,
        len: usize,
        allowed: &[bool],
        dist: &[usize],
        on: &mut [bool],
        path: &mut Vec<usize>,
        steps: &mut usize,
        budget: usize,
    ) -> bool {
        let x = *path.last().expect("nonempty");
        if path.len() == len {
            return x == t;
        }
        *steps += 1;
        if *steps > budget {
            return false;
        }
        let left = len - path.len();
        for &w in g.neighbours(x) {
            if on[w] || dist[w] > left || (w == t) != (left == 1) || (w != t && !allowed[w]) {
                continue;
            }
            on[w] = true;
            path.push(w);
            if go(g, t, len, allowed, dist, on, path, steps, budget) {
                return true;
            }
            path.pop();
            on[w] = false;
        }
        false
    }
    go(g, t, len, allowed, &dist, &mut on, &mut path, &mut steps, budget).then_some(path)
}

const PADDING_BUDGET: usize = 200_000;

/// Make `q` and `q2` equally long: reroute the shorter one through free
/// vertices to the longer length, or failing that the longer one to the
/// shorter length.
fn equalise(g: &Graph, q: &mut Vec<usize>, q2: &mut Vec<usize>, free: &mut [bool]) -> bool {
    if (q.len() + q2.len()) % 2 == 1 {
        return false;
    }
    let (short, long) = if q.len() < q2.len() { (q, q2) } else { (q2, q) };
    let (ls, ll) = (short.len(), long.len());
    for (target, other) in [(short, ll), (long, ls)] {
        let inner = target[1..target.len() - 1].to_vec();
        for &v in &inner {
            free[v] = true;
        }
        let (s, t) = (target[0], target[target.len() - 1]);
        if let Some(p) = path_of_length(g, s, t, other, free, PADDING_BUDGET) {
            for &v in &p[1..p.len() - 1] {
                free[v] = false;
            }
            *target = p;
            return true;
        }
        for &v in &inner {
            free[v] = false;
        }
    }
    false
}

/// Build `k` absorbers for every pair of `K` with interiors in `U_1 ∪ U_2`:
/// two equal-length `a`–`b` paths through `U_1` per cell, then all links
/// through `U_2`, each stage routed as one vertex-disjoint request.
pub fn build_absorber_chain(
    bg: &BipartiteGraph,
    pairs: &[(usize, usize)],
    x: &[usize],
    u1: &[usize],
    u2: &[usize],
    k: usize,
    cfg: &AbsorberConfig,
) -> Result<AbsorberGrid, AbsorbError> {
    let g = bg.graph();
    let n = g.n();
    let s = pairs.len();
    if x.len() != s + 1 {
        return Err(AbsorbError::SizeMismatch { x: x.len(), pairs: s });
    }
    if k == 0 {
        return Err(AbsorbError::ZeroK);
    }
    let flat: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    for set in [&flat[..], x, u1, u2] {
        check_range(n, set)?;
    }
    for (j, &(a, b)) in pairs.iter().enumerate() {
        if bg.side(a) != Side::A || bg.side(b) != Side::B {
            return Err(AbsorbError::PairSides { pair: j });
        }
    }
    let mut in_r = vec![false; n];
    let mut pair_count = vec![0usize; n];
    for &v in &flat {
        in_r[v] = true;
        pair_count[v] += 1;
    }
    let mut owner = in_r.clone();
    for set in [x, u1, u2] {
        for &v in set {
            if std::mem::replace(&mut owner[v], true) {
                return Err(AbsorbError::Overlap { vertex: v });
            }
        }
    }
    let max_pairs_per_vertex = pair_count.iter().copied().max().unwrap_or(0);
    if let Some(v) = (0..n).find(|&v| pair_count[v] > 200) {
        return Err(AbsorbError::TooManyPairs { vertex: v, count: pair_count[v] });
    }

    let l = log2(n as f64);
    let max_u1 = u1.iter().map(|&v| g.degree_into(v, &in_r)).max().unwrap_or(0);
    let u1x = {
        let mut m = mask(n, u1);
        for &v in x {
            m[v] = true;
        }
        m
    };
    let max_u2 = u2.iter().map(|&v| g.degree_into(v, &u1x)).max().unwrap_or(0);
    if let Some(d1) = cfg.d1 {
        let cap = d1 / (200.0 * k as f64 * l.powi(6));
        if max_u1 as f64 > cap {
            return Err(AbsorbError::DegreeCondition {
                which: "d(v,R) on U1".into(),
                observed: max_u1,
                cap,
            });
        }
    }
    if let Some(d2) = cfg.d2 {
        let cap = d2 / (2.0 * k as f64);
        if max_u2 as f64 > cap {
            return Err(AbsorbError::DegreeCondition {
                which: "d(v,U1∪X) on U2".into(),
                observed: max_u2,
                cap,
            });
        }
    }

    let request = |host: &Graph, pairs: Vec<(usize, usize)>, v: &[usize]| {
        let mut req = ConnectionRequest::new(host, pairs, v.to_vec());
        if let Some(len) = cfg.max_len {
            req.max_len = len;
        }
        req.exhaustive_cap = cfg.exhaustive_cap;
        req.retry_budget = cfg.retry_budget;
        req
    };

    // Stage one: pair paths through U1, never along an edge between two
    // vertices outside U1, so each has length at least three.
    let in_u1 = mask(n, u1);
    let drop: HashSet<Edge> = g.edges().iter().copied().filter(|&(p, q)| !in_u1[p] && !in_u1[q]).collect();
    let g1 = g.without_edges(&drop);
    let mult = cfg.multiplicity.max(2);
    let stage_one: Vec<(usize, usize)> = (0..k)
        .flat_map(|_| pairs.iter().flat_map(|&p| std::iter::repeat(p).take(mult)))
        .collect();
    let sol = connect_pairs_disjoint(&g1, &request(&g1, stage_one, u1)).map_err(|source| AbsorbError::Connect {
        stage: ChainStage::PairPaths,
        source,
    })?;

    let mut chosen: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(k * s);
    let mut pending = Vec::new();
    for cell in 0..k * s {
        let mut cands: Vec<&Vec<usize>> = sol.paths[cell * mult..(cell + 1) * mult].iter().collect();
        cands.sort_by_key(|p| p.len());
        let equal = cands.windows(2).find(|w| w[0].len() == w[1].len());
        let (q, q2) = match equal {
            Some(w) => (w[0].clone(), w[1].clone()),
            None => {
                pending.push(cell);
                (cands[0].clone(), cands[1].clone())
            }
        };
        chosen.push((q, q2));
    }
    // Vertices on discarded copies are free again for padding.
    let mut free = in_u1.clone();
    for (q, q2) in &chosen {
        for &v in q.iter().chain(q2) {
            free[v] = false;
        }
    }
    for &cell in &pending {
        let (q, q2) = &mut chosen[cell];
        if !equalise(&g1, q, q2, &mut free) {
            return Err(AbsorbError::Padding {
                cycle: cell / s,
                pair: cell % s,
            });
        }
    }

    // Stage two: links through U2.
    let mut links = Vec::new();
    let mut spans = Vec::with_capacity(k * s);
    for (cell, (u, v)) in chosen.iter().enumerate() {
        let j = cell % s;
        let (y, z) = (x[j], x[j + 1]);
        let t = u.len();
        let start = links.len();
        links.push((y, v[1]));
        for i in 2..=t - 2 {
            links.push((u[i - 1], v[i]));
        }
        links.push((u[t - 2], z));
        spans.push(start..links.len());
    }
    let sol2 = connect_pairs_disjoint(g, &request(g, links, u2)).map_err(|source| AbsorbError::Connect {
        stage: ChainStage::Links,
        source,
    })?;

    let mut absorbers = vec![Vec::with_capacity(s); k];
    let mut u_abs = Vec::new();
    for (cell, ((u, v), span)) in chosen.iter().zip(spans).enumerate() {
        let (i, j) = (cell / s, cell % s);
        let abs = Absorber::from_parts(x[j], x[j + 1], u, v, &sol2.paths[span]);
        verify_absorber(g, &abs).map_err(|clause| AbsorbError::Invalid { cycle: i, pair: j, clause })?;
        u_abs.extend_from_slice(&abs.interior);
        absorbers[i].push(abs);
    }
    u_abs.sort_unstable();
    Ok(AbsorberGrid {
        k,
        pairs: pairs.to_vec(),
        x: x.to_vec(),
        absorbers,
        u_abs,
        max_pairs_per_vertex,
        max_degree_u1_to_r: max_u1,
        max_degree_u2_to_u1x: max_u2,
        padded: pending.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberAssignment {
    /// `sigma[j][i]`: the absorber of pair `j` given to cycle `i`.
    pub sigma: Vec<Vec<usize>>,
    /// `U_abs^i`, sorted.
    pub interiors: Vec<Vec<usize>>,
}

impl AbsorberAssignment {
    /// Draw every `σ_j` uniformly, stream `rng/sigma{j}`.
    pub fn draw(grid: &AbsorberGrid, rng: &SeededRng) -> Self {
        let sigma: Vec<Vec<usize>> = (0..grid.s())
            .map(|j| {
                let mut p: Vec<usize> = (0..grid.k).collect();
                p.shuffle(&mut rng.child(&format!("sigma{j}")));
                p
            })
            .collect();
        let interiors = (0..grid.k)
            .map(|i| {
                let mut v: Vec<usize> = (0..grid.s())
                    .flat_map(|j| grid.absorbers[sigma[j][i]][j].interior.iter().copied())
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        AbsorberAssignment { sigma, interiors }
    }

    /// `L_1 … L_s` concatenated for cycle `i`, taking the absorbing route
    /// exactly where `absorb[j]` is set.
    pub fn absorbing_path(&self, grid: &AbsorberGrid, i: usize, absorb: &[bool]) -> Vec<usize> {
        let mut path = vec![grid.x[0]];
        for j in 0..grid.s() {
            let abs = &grid.absorbers[self.sigma[j][i]][j];
            append(&mut path, abs.path(absorb[j]).iter().copied());
        }
        path
    }
}

/// Draw the assignment and build every `P*_i`, absorbing the pairs listed
/// for cycle `i`. Checks that each `P*_i` covers exactly
/// `U_abs^i ∪ X ∪ V(K^i)` and that the paths are pairwise edge-disjoint.
pub fn assign_and_absorb(
    grid: &AbsorberGrid,
    rng: &SeededRng,
    per_cycle_pairs: &[Vec<(usize, usize)>],
) -> Result<(AbsorberAssignment, Vec<Vec<usize>>), AbsorbError> {
    let asg = AbsorberAssignment::draw(grid, rng);
    let paths = absorb_with(grid, &asg, per_cycle_pairs)?;
    Ok((asg, paths))
}

/// [`assign_and_absorb`] for an assignment drawn earlier.
pub fn absorb_with(
    grid: &AbsorberGrid,
    asg: &AbsorberAssignment,
    per_cycle_pairs: &[Vec<(usize, usize)>],
) -> Result<Vec<Vec<usize>>, AbsorbError> {
    if per_cycle_pairs.len() != grid.k {
        return Err(AbsorbError::CycleCount {
            expected: grid.k,
            got: per_cycle_pairs.len(),
        });
    }
    let mut paths = Vec::with_capacity(grid.k);
    let mut edge_owner: std::collections::HashMap<Edge, usize> = std::collections::HashMap::new();
    for (i, ki) in per_cycle_pairs.iter().enumerate() {
        let mut absorb = vec![false; grid.s()];
        let mut seen = HashSet::new();
        for &p in ki {
            let j = grid
                .pairs
                .iter()
                .position(|&q| q == p)
                .ok_or(AbsorbError::NotInK { cycle: i, pair: p })?;
            for v in [p.0, p.1] {
                if !seen.insert(v) {
                    return Err(AbsorbError::NotMatching { cycle: i, vertex: v });
                }
            }
            absorb[j] = true;
        }
        let path = asg.absorbing_path(grid, i, &absorb);
        let mut got = path.clone();
        got.sort_unstable();
        let mut want: Vec<usize> = asg.interiors[i].iter().chain(&grid.x).copied().chain(seen).collect();
        want.sort_unstable();
        if got != want {
            return Err(AbsorbError::VertexSet { cycle: i });
        }
        for e in path_edges(&path) {
            if let Some(&other) = edge_owner.get(&edge(e.0, e.1)) {
                return Err(AbsorbError::SharedEdge(other, i));
            }
            edge_owner.insert(e, i);
        }
        paths.push(path);
    }
    Ok(paths)
}
