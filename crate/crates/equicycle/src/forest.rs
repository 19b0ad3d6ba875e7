//! Layered matchings and the linear forests they make.
//!
//! Consecutive layers `V_j, V_{j+1}` span bipartite graphs; each is properly
//! coloured with exactly `Δ` colours and one colour class is drawn as the
//! matching `M_j`. Vertices missed by a matching on one side are paired
//! across the gap, giving a forest of paths from `V_1` to `V_t`.

use crate::graph::{edge, log2, max_bipartite_matching, BipartiteGraph, Edge, Graph, SeededRng, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForestError {
    #[error("layers must be pairwise disjoint; vertex {0} repeats")]
    Overlap(usize),
    #[error("need at least two layers")]
    TooFewLayers,
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("no draw met both leftover bounds in {attempts} attempts")]
    AttemptsExhausted {
        attempts: usize,
        best: Box<LeftoverOutcome>,
    },
    #[error("layer gap {gap}: {left} unmatched on the left but {right} on the right for side {side:?}")]
    SideCount {
        gap: usize,
        side: Side,
        left: usize,
        right: usize,
    },
    #[error("matching {0} is not a matching between its layers")]
    BadMatching(usize),
}

/// Proper colouring of a bipartite edge list with exactly `Δ` colours by
/// alternating-path recolouring. Edges are processed in the given order.
fn colour_edges(n: usize, edges: &[Edge]) -> Vec<Vec<Edge>> {
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let delta = deg.iter().copied().max().unwrap_or(0);
    // at[v][c] = neighbour joined to v by an edge of colour c.
    let mut at = vec![vec![usize::MAX; delta]; n];
    let free = |at: &Vec<Vec<usize>>, v: usize| at[v].iter().position(|&w| w == usize::MAX).expect("degree <= delta");
    for &(u, v) in edges {
        let a = free(&at, u);
        let b = free(&at, v);
        if at[v][a] != usize::MAX {
            // Swap colours a and b along the a/b path starting at v. In a
            // bipartite graph it cannot reach u.
            let mut path = vec![v];
            let mut cur = v;
            let mut c = a;
            while at[cur][c] != usize::MAX {
                cur = at[cur][c];
                path.push(cur);
                c = if c == a { b } else { a };
            }
            let mut recoloured = Vec::with_capacity(path.len());
            let mut c = a;
            for w in path.windows(2) {
                recoloured.push((w[0], w[1], if c == a { b } else { a }));
                c = if c == a { b } else { a };
            }
            for &(x, y, _) in &recoloured {
                for z in [x, y] {
                    for col in [a, b] {
                        if at[z][col] == x || at[z][col] == y {
                            at[z][col] = usize::MAX;
                        }
                    }
                }
            }
            for &(x, y, col) in &recoloured {
                at[x][col] = y;
                at[y][col] = x;
            }
        }
        at[u][a] = v;
        at[v][a] = u;
    }
    let mut classes = vec![Vec::new(); delta];
    for &(u, v) in edges {
        let c = at[u].iter().position(|&w| w == v).expect("coloured");
        classes[c].push(edge(u, v));
    }
    for class in &mut classes {
        class.sort_unstable();
    }
    classes
}

/// Exactly `Δ(g)` matchings partitioning the edges of `g`.
pub fn bipartite_edge_colouring(g: &BipartiteGraph) -> Vec<Vec<Edge>> {
    colour_edges(g.graph().n(), g.graph().edges())
}

/// Disjoint layers with tracked sets `T_i`; `δ`, `Δ` and `r` are read off
/// the host graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredInstance {
    pub layers: Vec<Vec<usize>>,
    pub tracked: Vec<Vec<usize>>,
    /// Minimum degree over all `G[V_j, V_{j+1}]`.
    pub delta_min: usize,
    /// Maximum degree over all `G[V_j, V_{j+1}]`.
    pub delta_max: usize,
    /// Largest `|T_i ∩ V_j|`.
    pub r: usize,
    /// Host vertex count, used for `log n`.
    pub n: usize,
}

impl LayeredInstance {
    pub fn new(g: &Graph, layers: Vec<Vec<usize>>, tracked: Vec<Vec<usize>>) -> Result<Self, ForestError> {
        if layers.len() < 2 {
            return Err(ForestError::TooFewLayers);
        }
        let n = g.n();
        let mut layer_of = vec![usize::MAX; n];
        for (j, l) in layers.iter().enumerate() {
            for &v in l {
                if v >= n {
                    return Err(ForestError::OutOfRange(v));
                }
                if layer_of[v] != usize::MAX {
                    return Err(ForestError::Overlap(v));
                }
                layer_of[v] = j;
            }
        }
        let (mut lo, mut hi) = (usize::MAX, 0);
        for (j, l) in layers.iter().enumerate() {
            for &v in l {
                for side in [j.checked_sub(1), (j + 1 < layers.len()).then_some(j + 1)]
                    .into_iter()
                    .flatten()
                {
                    let d = g.neighbours(v).iter().filter(|&&w| layer_of[w] == side).count();
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        let mut r = 0;
        for t in &tracked {
            let mut counts = vec![0usize; layers.len()];
            for &v in t {
                if v < n && layer_of[v] != usize::MAX {
                    counts[layer_of[v]] += 1;
                }
            }
            r = r.max(counts.into_iter().max().unwrap_or(0));
        }
        Ok(LayeredInstance {
            layers,
            tracked,
            delta_min: if lo == usize::MAX { 0 } else { lo },
            delta_max: hi,
            r,
            n,
        })
    }

    pub fn t(&self) -> usize {
        self.layers.len()
    }

    /// `1 - δ/Δ ≤ t^{-1/2} log n`.
    pub fn regular_enough(&self) -> bool {
        if self.delta_max == 0 {
            return false;
        }
        1.0 - self.delta_min as f64 / self.delta_max as f64 <= (self.t() as f64).powf(-0.5) * log2(self.n as f64)
    }

    /// `10 |∪V_j| t^{-1/2} log n`.
    pub fn leftover_bound(&self) -> f64 {
        let total: usize = self.layers.iter().map(Vec::len).sum();
        10.0 * total as f64 * (self.t() as f64).powf(-0.5) * log2(self.n as f64)
    }

    /// `10 r t^{1/2} log n`.
    pub fn tracked_bound(&self) -> f64 {
        10.0 * self.r as f64 * (self.t() as f64).sqrt() * log2(self.n as f64)
    }
}

/// Vertices of the layers missed by an adjacent matching: in `V_1` and
/// `V_t` those outside `M_1` resp. `M_{t-1}`, in a middle layer those
/// outside `M_{j-1}` or outside `M_j`.
pub fn leftover_set(n: usize, layers: &[Vec<usize>], matchings: &[Vec<Edge>]) -> Vec<usize> {
    let t = layers.len();
    let mut covered = vec![0u8; n];
    for m in matchings {
        for &(u, v) in m {
            covered[u] += 1;
            covered[v] += 1;
        }
    }
    let mut y: Vec<usize> = layers
        .iter()
        .enumerate()
        .flat_map(|(j, l)| {
            let need = if j == 0 || j == t - 1 { 1 } else { 2 };
            let covered = &covered;
            l.iter().copied().filter(move |&v| covered[v] < need)
        })
        .collect();
    y.sort_unstable();
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftoverReport {
    pub y: Vec<usize>,
    /// `|Y ∩ T_i|` per tracked set.
    pub tracked: Vec<usize>,
    pub bound: f64,
    pub tracked_bound: f64,
}

impl LeftoverReport {
    pub fn holds(&self) -> bool {
        self.y.len() as f64 <= self.bound && self.tracked.iter().all(|&c| c as f64 <= self.tracked_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftoverOutcome {
    pub matchings: Vec<Vec<Edge>>,
    pub report: LeftoverReport,
    /// Colour class drawn per gap.
    pub classes: Vec<usize>,
    pub attempts: usize,
}

/// Colour each `G[V_j, V_{j+1}]` and draw one class per gap uniformly,
/// stream `rng/attempt{a}`. Draws repeat until `|Y|` and every `|Y ∩ T_i|`
/// meet their bounds.
pub fn matchings_with_leftover(
    g: &Graph,
    inst: &LayeredInstance,
    rng: &SeededRng,
    attempts: usize,
) -> Result<LeftoverOutcome, ForestError> {
    let n = g.n();
    let mut layer_of = vec![usize::MAX; n];
    for (j, l) in inst.layers.iter().enumerate() {
        for &v in l {
            layer_of[v] = j;
        }
    }
    let colourings: Vec<Vec<Vec<Edge>>> = (0..inst.t() - 1)
        .map(|j| {
            let edges: Vec<Edge> = inst.layers[j]
                .iter()
                .flat_map(|&u| {
                    let lo = &layer_of;
                    g.neighbours(u).iter().filter(move |&&w| lo[w] == j + 1).map(move |&w| edge(u, w))
                })
                .collect::<Vec<_>>();
            let mut edges = edges;
            edges.sort_unstable();
            colour_edges(n, &edges)
        })
        .collect();

    let mut best: Option<LeftoverOutcome> = None;
    for a in 0..attempts.max(1) {
        let mut stream = rng.child(&format!("attempt{a}"));
        let classes: Vec<usize> = colourings
            .iter()
            .map(|c| if c.is_empty() { 0 } else { stream.gen_range(0..c.len()) })
            .collect();
        let matchings: Vec<Vec<Edge>> = colourings
            .iter()
            .zip(&classes)
            .map(|(c, &k)| c.get(k).cloned().unwrap_or_default())
            .collect();
        let y = leftover_set(n, &inst.layers, &matchings);
        let mut in_y = vec![false; n];
        for &v in &y {
            in_y[v] = true;
        }
        let tracked = inst
            .tracked
            .iter()
            .map(|t| t.iter().filter(|&&v| v < n && in_y[v]).count())
            .collect();
        let outcome = LeftoverOutcome {
            matchings,
            report: LeftoverReport {
                y,
                tracked,
                bound: inst.leftover_bound(),
                tracked_bound: inst.tracked_bound(),
            },
            classes,
            attempts: a + 1,
        };
        if outcome.report.holds() {
            return Ok(outcome);
        }
        if best.as_ref().map_or(true, |b| outcome.report.y.len() < b.report.y.len()) {
            best = Some(outcome);
        }
    }
    Err(ForestError::AttemptsExhausted {
        attempts: attempts.max(1),
        best: Box::new(best.expect("at least one attempt")),
    })
}

/// Maximum matching of every `G[V_j, V_{j+1}]` instead of a colour class.
/// Deterministic; the leftover report is filled in but not enforced.
pub fn maximum_layer_matchings(g: &Graph, inst: &LayeredInstance) -> LeftoverOutcome {
    let n = g.n();
    let mut index = vec![usize::MAX; n];
    let matchings: Vec<Vec<Edge>> = (0..inst.t() - 1)
        .map(|j| {
            let (left, right) = (&inst.layers[j], &inst.layers[j + 1]);
            for (i, &v) in right.iter().enumerate() {
                index[v] = i;
            }
            let adj: Vec<Vec<usize>> = left
                .iter()
                .map(|&u| g.neighbours(u).iter().filter(|&&w| index[w] != usize::MAX).map(|&w| index[w]).collect())
                .collect();
            let m = max_bipartite_matching(right.len(), &adj);
            for &v in right {
                index[v] = usize::MAX;
            }
            let mut out: Vec<Edge> =
                m.left.iter().enumerate().filter_map(|(i, r)| r.map(|r| edge(left[i], right[r]))).collect();
            out.sort_unstable();
            out
        })
        .collect();
    let y = leftover_set(n, &inst.layers, &matchings);
    let mut in_y = vec![false; n];
    for &v in &y {
        in_y[v] = true;
    }
    let tracked = inst.tracked.iter().map(|t| t.iter().filter(|&&v| v < n && in_y[v]).count()).collect();
    LeftoverOutcome {
        matchings,
        report: LeftoverReport {
            y,
            tracked,
            bound: inst.leftover_bound(),
            tracked_bound: inst.tracked_bound(),
        },
        classes: Vec::new(),
        attempts: 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForest {
    /// Each path as a vertex sequence from `V_1` to `V_t`, with real
    /// matching edges and virtual pairs interleaved.
    pub paths: Vec<Vec<usize>>,
    /// Virtual pairs `(left, right)`, left in `V_j`, right in `V_{j+1}`.
    pub virtual_pairs: Vec<(usize, usize)>,
    /// `u_1..u_ℓ` in `V_1` and `v_1..v_ℓ` in `V_t`, `u_j` and `v_j` on the
    /// same path.
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
}

/// Pair up the vertices each matching misses across every gap (A with B,
/// lowest ids first) and follow the resulting links from `V_1` to `V_t`.
pub fn assemble_forest(sides: &[Side], layers: &[Vec<usize>], matchings: &[Vec<Edge>]) -> Result<LinearForest, ForestError> {
    let t = layers.len();
    if t < 2 {
        return Err(ForestError::TooFewLayers);
    }
    let n = sides.len();
    let mut layer_of = vec![usize::MAX; n];
    for (j, l) in layers.iter().enumerate() {
        for &v in l {
            layer_of[v] = j;
        }
    }
    let mut next = vec![usize::MAX; n];
    let mut virtual_pairs = Vec::new();
    for j in 0..t - 1 {
        let m = matchings.get(j).map(Vec::as_slice).unwrap_or(&[]);
        let mut left_used = vec![false; n];
        let mut right_used = vec![false; n];
        for &(u, v) in m {
            let (l, r) = match (layer_of[u], layer_of[v]) {
                (a, b) if a == j && b == j + 1 => (u, v),
                (a, b) if a == j + 1 && b == j => (v, u),
                _ => return Err(ForestError::BadMatching(j)),
            };
            if left_used[l] || right_used[r] {
                return Err(ForestError::BadMatching(j));
            }
            left_used[l] = true;
            right_used[r] = true;
            next[l] = r;
        }
        for side in [Side::A, Side::B] {
            let mut left: Vec<usize> = layers[j].iter().copied().filter(|&v| !left_used[v] && sides[v] == side).collect();
            let mut right: Vec<usize> = layers[j + 1]
                .iter()
                .copied()
                .filter(|&v| !right_used[v] && sides[v] == side.other())
                .collect();
            if left.len() != right.len() {
                return Err(ForestError::SideCount {
                    gap: j,
                    side,
                    left: left.len(),
                    right: right.len(),
                });
            }
            left.sort_unstable();
            right.sort_unstable();
            for (&l, &r) in left.iter().zip(&right) {
                next[l] = r;
                virtual_pairs.push((l, r));
            }
        }
    }
    let mut starts = layers[0].clone();
    starts.sort_unstable();
    let mut paths = Vec::with_capacity(starts.len());
    let mut ends = Vec::with_capacity(starts.len());
    for &u in &starts {
        let mut p = vec![u];
        let mut cur = u;
        while layer_of[cur] + 1 < t {
            cur = next[cur];
            p.push(cur);
        }
        ends.push(cur);
        paths.push(p);
    }
    virtual_pairs.sort_unstable();
    Ok(LinearForest {
        paths,
        virtual_pairs,
        starts,
        ends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use proptest::prelude::*;

    fn check_colouring(g: &Graph, classes: &[Vec<Edge>]) -> bool {
        let mut all: Vec<Edge> = classes.concat();
        all.sort_unstable();
        if all != g.edges() {
            return false;
        }
        classes.iter().all(|c| {
            let mut seen = vec![false; g.n()];
            c.iter().all(|&(u, v)| !std::mem::replace(&mut seen[u], true) && !std::mem::replace(&mut seen[v], true))
        })
    }

    #[test]
    fn even_cycle_two_colours() {
        let g = generate::cycle(6);
        let bg = BipartiteGraph::new(g.clone(), crate::graph::two_colour(&g).unwrap()).unwrap();
        let c = bipartite_edge_colouring(&bg);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|m| m.len() == 3));
        assert!(check_colouring(&g, &c));
    }

    #[test]
    fn k33_three_perfect_matchings() {
        let bg = generate::complete_bipartite(3, 3);
        let c = bipartite_edge_colouring(&bg);
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|m| m.len() == 3));
        assert!(check_colouring(bg.graph(), &c));
    }

    #[test]
    fn single_edge_one_class() {
        let bg = generate::complete_bipartite(1, 1);
        assert_eq!(bipartite_edge_colouring(&bg), vec![vec![(0, 1)]]);
    }

    proptest! {
        #[test]
        fn colouring_is_proper_partition(seed in any::<u64>(), a in 1usize..12, b in 1usize..12, p in 0.1f64..0.9) {
            let bg = generate::bipartite_gnp(a, b, p, &mut SeededRng::new(seed, "col"));
            let c = bipartite_edge_colouring(&bg);
            prop_assert_eq!(c.len(), bg.graph().max_degree());
            prop_assert!(check_colouring(bg.graph(), &c));
        }
    }

    /// Layers of `w` A-vertices then `w` B-vertices each; consecutive layers
    /// joined A to B and B to A by the given edge lists.
    fn layered(t: usize, w: usize, mut gaps: impl FnMut(usize) -> Vec<(usize, usize)>) -> (Graph, Vec<Side>, Vec<Vec<usize>>) {
        let n = t * 2 * w;
        let layers: Vec<Vec<usize>> = (0..t).map(|j| (j * 2 * w..(j + 1) * 2 * w).collect()).collect();
        let sides: Vec<Side> = (0..n).map(|v| if v % (2 * w) < w { Side::A } else { Side::B }).collect();
        let mut edges = Vec::new();
        for j in 0..t - 1 {
            for (x, y) in gaps(j) {
                edges.push((j * 2 * w + x, (j + 1) * 2 * w + y));
            }
        }
        (Graph::from_edges(n, edges).unwrap(), sides, layers)
    }

    fn perfect(w: usize) -> Vec<(usize, usize)> {
        (0..w).flat_map(|i| [(i, w + i), (w + i, i)]).collect()
    }

    #[test]
    fn perfect_layers_have_no_leftover() {
        let (g, sides, layers) = layered(4, 3, |_| perfect(3));
        let inst = LayeredInstance::new(&g, layers.clone(), vec![]).unwrap();
        assert_eq!((inst.delta_min, inst.delta_max), (1, 1));
        let out = matchings_with_leftover(&g, &inst, &SeededRng::new(0, "m"), 1).unwrap();
        assert!(out.report.y.is_empty());
        let f = assemble_forest(&sides, &layers, &out.matchings).unwrap();
        assert!(f.virtual_pairs.is_empty());
        assert_eq!(f.paths.len(), 6);
        assert!(f.paths.iter().all(|p| p.len() == 4));
    }

    #[test]
    fn one_missing_edge() {
        let (g, sides, layers) = layered(2, 2, |_| {
            let mut p = perfect(2);
            p.retain(|&e| e != (0, 2));
            p
        });
        let inst = LayeredInstance::new(&g, layers.clone(), vec![]).unwrap();
        let out = matchings_with_leftover(&g, &inst, &SeededRng::new(0, "m"), 1).unwrap();
        assert_eq!(out.report.y, vec![0, 6]);
        let f = assemble_forest(&sides, &layers, &out.matchings).unwrap();
        assert_eq!(f.virtual_pairs, vec![(0, 6)]);
    }

    #[test]
    fn forest_paths_join_starts_to_ends() {
        let mut rng = SeededRng::new(3, "f");
        let (g, sides, layers) = layered(6, 8, |_| {
            let mut e = Vec::new();
            for x in 0..8 {
                for y in 8..16 {
                    if rand::Rng::gen_bool(&mut rng, 0.4) {
                        e.push((x, y));
                    }
                    if rand::Rng::gen_bool(&mut rng, 0.4) {
                        e.push((y, x));
                    }
                }
            }
            e
        });
        let tracked: Vec<Vec<usize>> = (0..g.n()).map(|v| g.neighbours(v).to_vec()).collect();
        let inst = LayeredInstance::new(&g, layers.clone(), tracked).unwrap();
        let out = match matchings_with_leftover(&g, &inst, &SeededRng::new(3, "m"), 5) {
            Ok(o) => o,
            Err(ForestError::AttemptsExhausted { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        let f = assemble_forest(&sides, &layers, &out.matchings).unwrap();
        assert_eq!(f.paths.len(), 16);
        let mut seen = vec![false; g.n()];
        for (p, (&u, &v)) in f.paths.iter().zip(f.starts.iter().zip(&f.ends)) {
            assert_eq!((p[0], p[p.len() - 1]), (u, v));
            for &x in p {
                assert!(!std::mem::replace(&mut seen[x], true));
            }
            for w in p.windows(2) {
                let real = out.matchings.iter().any(|m| m.contains(&edge(w[0], w[1])));
                assert!(real || f.virtual_pairs.contains(&(w[0], w[1])));
                assert_ne!(sides[w[0]], sides[w[1]]);
            }
        }
        // Y is exactly the set of vertices touching a virtual pair.
        let mut touched: Vec<usize> = f.virtual_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        touched.sort_unstable();
        touched.dedup();
        assert_eq!(touched, out.report.y);
    }

    #[test]
    fn maximum_rule_covers_what_a_colour_class_covers() {
        let mut rng = SeededRng::new(8, "f");
        let (g, sides, layers) = layered(5, 6, |_| {
            let mut e = Vec::new();
            for x in 0..6 {
                for y in 6..12 {
                    if rand::Rng::gen_bool(&mut rng, 0.3) {
                        e.push((x, y));
                    }
                    if rand::Rng::gen_bool(&mut rng, 0.3) {
                        e.push((y, x));
                    }
                }
            }
            e
        });
        let inst = LayeredInstance::new(&g, layers.clone(), vec![]).unwrap();
        let max = maximum_layer_matchings(&g, &inst);
        for a in 0..20 {
            let class = match matchings_with_leftover(&g, &inst, &SeededRng::new(a, "m"), 1) {
                Ok(o) => o,
                Err(ForestError::AttemptsExhausted { best, .. }) => *best,
                Err(e) => panic!("{e}"),
            };
            for (m, c) in max.matchings.iter().zip(&class.matchings) {
                assert!(m.len() >= c.len());
            }
        }
        let f = assemble_forest(&sides, &layers, &max.matchings).unwrap();
        assert_eq!(f.paths.len(), 12);
    }
}
