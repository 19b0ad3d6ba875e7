//! Simple undirected graphs, bipartite labellings, paths and the shared
//! plumbing (file format, seeded streams, sampling) used by every stage.

mod io;
mod matching;
mod parity;
mod rng;
mod sample;

pub mod generate;

pub use io::{load_graph, parse_graph, save_graph, write_graph, LoadedGraph, ParseError};
pub use matching::{max_bipartite_matching, Matching};
pub use parity::{check_path_parity, ParityCase, ParityReport};
pub use rng::SeededRng;
pub use sample::{
    balanced_partition, balanced_subset, p_random, sample, uniform_subset, SampleError,
    SampleSpec, Sampled,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

/// An undirected edge stored with the smaller endpoint first.
pub type Edge = (usize, usize);

/// Normalise an edge so that `u < v`.
#[inline]
pub fn edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// `log2 n`, with `log 1 = 0` and anything smaller clamped to zero.
pub fn log2(n: f64) -> f64 {
    if n <= 1.0 {
        0.0
    } else {
        n.log2()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    OutOfRange { vertex: usize, n: usize },
    #[error("edge {0}-{1} lies within one side")]
    SameSide(usize, usize),
    #[error("side labelling has {got} entries, expected {expected}")]
    SideCount { got: usize, expected: usize },
    #[error("empty graph")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("vertex {0} repeated")]
    Repeated(usize),
    #[error("{0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("cycle needs at least 3 vertices, got {0}")]
    TooShort(usize),
}

/// Immutable simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Graph {
    /// Graph on `n` vertices without edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    /// Build a graph, rejecting loops, duplicates and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (u, v) in edges {
            Self::check_pair(n, u, v)?;
            let e = edge(u, v);
            if !seen.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
            list.push(e);
        }
        Ok(Self::build(n, list))
    }

    /// Build a graph, silently ignoring repeated edges. Loops and range
    /// errors still fail.
    pub fn from_edges_dedup<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            Self::check_pair(n, u, v)?;
            list.push(edge(u, v));
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::build(n, list))
    }

    fn check_pair(n: usize, u: usize, v: usize) -> Result<(), GraphError> {
        if u >= n {
            return Err(GraphError::OutOfRange { vertex: u, n });
        }
        if v >= n {
            return Err(GraphError::OutOfRange { vertex: v, n });
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(())
    }

    fn build(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { adj, edges }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order, each with `u < v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted neighbour list.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// `d(G) = 2e(G)/n`; zero for the empty vertex set.
    pub fn average_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.m() as f64 / self.n() as f64
        }
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of neighbours of `v` inside `set` (given as a membership mask).
    pub fn degree_into(&self, v: usize, set: &[bool]) -> usize {
        self.adj[v].iter().filter(|&&w| set[w]).count()
    }

    /// External neighbourhood `N(U)`: vertices outside `U` with a neighbour in `U`.
    pub fn neighbourhood(&self, set: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.n()];
        for &u in set {
            inside[u] = true;
        }
        let mut mark = vec![false; self.n()];
        let mut out = Vec::new();
        for &u in set {
            for &w in &self.adj[u] {
                if !inside[w] && !mark[w] {
                    mark[w] = true;
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// `G[keep] - drop`, relabelled to `0..keep.len()` in ascending parent order.
    pub fn restrict(&self, keep: &[usize], drop: &[Edge]) -> Restriction {
        let mut to_parent: Vec<usize> = keep.to_vec();
        to_parent.sort_unstable();
        to_parent.dedup();
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in to_parent.iter().enumerate() {
            index[v] = i;
        }
        let dropped: HashSet<Edge> = drop.iter().map(|&(u, v)| edge(u, v)).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| {
                index[u] != usize::MAX && index[v] != usize::MAX && !dropped.contains(&(u, v))
            })
            .map(|&(u, v)| edge(index[u], index[v]))
            .collect();
        Restriction {
            graph: Graph::build(to_parent.len(), edges),
            to_parent,
        }
    }

    /// Induced subgraph on `keep`, relabelled.
    pub fn induced(&self, keep: &[usize]) -> Restriction {
        self.restrict(keep, &[])
    }

    /// Same vertex ids, with the given edges removed.
    pub fn without_edges(&self, drop: &HashSet<Edge>) -> Graph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| !drop.contains(e))
            .collect();
        Graph::build(self.n(), edges)
    }

    /// Same vertex ids, keeping only edges with both ends in `keep`.
    pub fn spanning_on(&self, keep: &[bool]) -> Graph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| keep[u] && keep[v])
            .collect();
        Graph::build(self.n(), edges)
    }

    /// Number of edges with both ends in `set` (membership mask).
    pub fn edges_within(&self, set: &[bool]) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| set[u] && set[v])
            .count()
    }

    pub fn degree_stats(&self) -> Result<DegreeStats, GraphError> {
        if self.n() == 0 {
            return Err(GraphError::Empty);
        }
        let mut histogram = BTreeMap::new();
        for list in &self.adj {
            *histogram.entry(list.len()).or_insert(0) += 1;
        }
        let min = self.min_degree();
        let max = self.max_degree();
        let ratio = if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        };
        Ok(DegreeStats {
            min,
            max,
            average: self.average_degree(),
            ratio,
            histogram,
        })
    }

    /// Check that `p` is a path: distinct vertices, consecutive ones adjacent.
    pub fn check_path(&self, p: &[usize]) -> Result<(), PathError> {
        if p.is_empty() {
            return Err(PathError::Empty);
        }
        let mut seen = HashSet::new();
        for &v in p {
            if v >= self.n() {
                return Err(PathError::OutOfRange(v));
            }
            if !seen.insert(v) {
                return Err(PathError::Repeated(v));
            }
        }
        for w in p.windows(2) {
            if !self.has_edge(w[0], w[1]) {
                return Err(PathError::NotAdjacent(w[0], w[1]));
            }
        }
        Ok(())
    }

    /// Check that `c` (listed once around, without repeating the start) is a cycle.
    pub fn check_cycle(&self, c: &[usize]) -> Result<(), PathError> {
        if c.len() < 3 {
            return Err(PathError::TooShort(c.len()));
        }
        self.check_path(c)?;
        let (first, last) = (c[0], c[c.len() - 1]);
        if !self.has_edge(first, last) {
            return Err(PathError::NotAdjacent(last, first));
        }
        Ok(())
    }
}

/// Edges traversed by a path, normalised.
pub fn path_edges(p: &[usize]) -> Vec<Edge> {
    p.windows(2).map(|w| edge(w[0], w[1])).collect()
}

/// Edges traversed by a closed cycle, normalised.
pub fn cycle_edges(c: &[usize]) -> Vec<Edge> {
    let mut out = path_edges(c);
    if c.len() >= 3 {
        out.push(edge(c[c.len() - 1], c[0]));
    }
    out
}

/// Membership mask of `set` over `0..n`.
pub fn mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

/// Result of [`Graph::restrict`]: the subgraph plus the map back to parent ids.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub graph: Graph,
    pub to_parent: Vec<usize>,
}

impl Restriction {
    pub fn parent_edges(&self) -> Vec<Edge> {
        self.graph
            .edges()
            .iter()
            .map(|&(u, v)| edge(self.to_parent[u], self.to_parent[v]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub average: f64,
    /// `max/min`, infinite when some vertex is isolated.
    pub ratio: f64,
    pub histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// A graph together with a two-sided labelling that every edge respects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    graph: Graph,
    side: Vec<Side>,
}

impl BipartiteGraph {
    pub fn new(graph: Graph, side: Vec<Side>) -> Result<Self, GraphError> {
        if side.len() != graph.n() {
            return Err(GraphError::SideCount {
                got: side.len(),
                expected: graph.n(),
            });
        }
        if let Some(&(u, v)) = graph.edges().iter().find(|&&(u, v)| side[u] == side[v]) {
            return Err(GraphError::SameSide(u, v));
        }
        Ok(BipartiteGraph { graph, side })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn sides(&self) -> &[Side] {
        &self.side
    }

    pub fn side(&self, v: usize) -> Side {
        self.side[v]
    }

    pub fn into_parts(self) -> (Graph, Vec<Side>) {
        (self.graph, self.side)
    }

    /// Number of `A`- and `B`-vertices in `set`.
    pub fn side_counts(&self, set: &[usize]) -> (usize, usize) {
        let a = set.iter().filter(|&&v| self.side[v] == Side::A).count();
        (a, set.len() - a)
    }

    pub fn is_balanced(&self, set: &[usize]) -> bool {
        let (a, b) = self.side_counts(set);
        a == b
    }

    /// Restriction keeping the side labels of surviving vertices.
    pub fn restrict(&self, keep: &[usize], drop: &[Edge]) -> (BipartiteGraph, Vec<usize>) {
        let r = self.graph.restrict(keep, drop);
        let side = r.to_parent.iter().map(|&v| self.side[v]).collect();
        (
            BipartiteGraph {
                graph: r.graph,
                side,
            },
            r.to_parent,
        )
    }

    /// Replace the edge set, keeping labels. Fails if an edge breaks the sides.
    pub fn with_graph(&self, graph: Graph) -> Result<BipartiteGraph, GraphError> {
        BipartiteGraph::new(graph, self.side.clone())
    }
}

/// Greedy two-colouring by BFS; `None` if an odd cycle exists.
pub fn two_colour(g: &Graph) -> Option<Vec<Side>> {
    let mut side: Vec<Option<Side>> = vec![None; g.n()];
    for start in 0..g.n() {
        if side[start].is_some() {
            continue;
        }
        side[start] = Some(Side::A);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let su = side[u].unwrap();
            for &w in g.neighbours(u) {
                match side[w] {
                    None => {
                        side[w] = Some(su.other());
                        queue.push_back(w);
                    }
                    Some(sw) if sw == su => return None,
                    _ => {}
                }
            }
        }
    }
    Some(side.into_iter().map(Option::unwrap).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Graph::from_edges(2, [(0, 0)]),
            Err(GraphError::SelfLoop(0))
        );
        assert_eq!(
            Graph::from_edges(3, [(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert!(matches!(
            Graph::from_edges(2, [(0, 2)]),
            Err(GraphError::OutOfRange { vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn restrict_triangle_minus_edge() {
        let k3 = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let r = k3.restrict(&[0, 1, 2], &[(0, 1)]);
        assert_eq!(r.graph.edges(), &[(0, 2), (1, 2)]);
        assert!(r.graph.check_path(&[0, 2, 1]).is_ok());
    }

    #[test]
    fn restrict_c6_prefix_is_path() {
        let r = cycle(6).induced(&[0, 1, 2, 3]);
        assert_eq!(r.graph.m(), 3);
        assert!(r.graph.check_path(&[0, 1, 2, 3]).is_ok());
    }

    #[test]
    fn restrict_one_side_of_k44_is_empty() {
        let g = generate::complete_bipartite(4, 4);
        let (h, _) = g.restrict(&[0, 1, 2, 3], &[]);
        assert_eq!(h.graph().n(), 4);
        assert_eq!(h.graph().m(), 0);
    }

    #[test]
    fn degree_stats_examples() {
        let k44 = generate::complete_bipartite(4, 4);
        let s = k44.graph().degree_stats().unwrap();
        assert_eq!((s.min, s.max, s.average, s.ratio), (4, 4, 4.0, 1.0));

        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = star.degree_stats().unwrap();
        assert_eq!((s.min, s.max, s.average), (1, 3, 1.5));

        let mut e: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        e.push((0, 2));
        let s = Graph::from_edges(5, e).unwrap().degree_stats().unwrap();
        assert_eq!((s.min, s.max), (2, 3));
        assert!((s.average - 2.4).abs() < 1e-12);
        assert_eq!(s.histogram.get(&3), Some(&2));

        assert_eq!(Graph::empty(0).degree_stats(), Err(GraphError::Empty));
        assert!(Graph::empty(2).degree_stats().unwrap().ratio.is_infinite());
    }

    #[test]
    fn neighbourhood_is_external() {
        let g = cycle(6);
        assert_eq!(g.neighbourhood(&[0, 1]), vec![2, 5]);
    }

    #[test]
    fn cycle_check() {
        let g = cycle(5);
        assert!(g.check_cycle(&[0, 1, 2, 3, 4]).is_ok());
        assert_eq!(g.check_cycle(&[0, 1, 2, 3]), Err(PathError::NotAdjacent(3, 0)));
        assert_eq!(g.check_path(&[0, 1, 0]), Err(PathError::Repeated(0)));
    }

    #[test]
    fn bipartite_rejects_same_side_edge() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert!(BipartiteGraph::new(g.clone(), vec![Side::A, Side::B, Side::A]).is_ok());
        assert_eq!(
            BipartiteGraph::new(g, vec![Side::A, Side::A, Side::B]),
            Err(GraphError::SameSide(0, 1))
        );
    }

    #[test]
    fn two_colour_detects_odd_cycle() {
        assert!(two_colour(&cycle(5)).is_none());
        assert!(two_colour(&cycle(6)).is_some());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = Graph> {
            (1usize..12).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..30).prop_map(move |pairs| {
                    Graph::from_edges_dedup(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn adjacency_matches_edges(g in arb_graph()) {
                let mut rebuilt = Vec::new();
                for u in 0..g.n() {
                    for &v in g.neighbours(u) {
                        prop_assert!(g.neighbours(v).contains(&u));
                        if u < v { rebuilt.push((u, v)); }
                    }
                }
                prop_assert_eq!(rebuilt, g.edges().to_vec());
            }

            #[test]
            fn cut_edges_add_up(g in arb_graph(), bits in proptest::collection::vec(any::<bool>(), 12)) {
                let s: Vec<usize> = (0..g.n()).filter(|&v| bits[v]).collect();
                let rest: Vec<usize> = (0..g.n()).filter(|&v| !bits[v]).collect();
                let inside = g.induced(&s).graph.m();
                let outside = g.induced(&rest).graph.m();
                let across = g.edges().iter().filter(|&&(u, v)| bits[u] != bits[v]).count();
                prop_assert_eq!(inside + outside + across, g.m());
                let again = g.induced(&s);
                prop_assert_eq!(again.graph, g.induced(&s).graph);
            }
        }
    }
}
