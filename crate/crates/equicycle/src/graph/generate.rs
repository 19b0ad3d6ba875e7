//! Fixture and random graph generators.

use super::{BipartiteGraph, Graph, SeededRng, Side};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("complete graph is simple")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
}

/// `K_{a,b}` with `A = 0..a`, `B = a..a+b`.
pub fn complete_bipartite(a: usize, b: usize) -> BipartiteGraph {
    let edges = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v)));
    let g = Graph::from_edges(a + b, edges).expect("simple");
    let side = (0..a + b)
        .map(|v| if v < a { Side::A } else { Side::B })
        .collect();
    BipartiteGraph::new(g, side).expect("sides respected")
}

/// Replace every vertex `v` by clones `t*v .. t*v+t-1` and every edge by
/// a complete bipartite graph between the clone classes.
pub fn blowup(g: &Graph, t: usize) -> Graph {
    let mut edges = Vec::with_capacity(g.m() * t * t);
    for &(u, v) in g.edges() {
        for i in 0..t {
            for j in 0..t {
                edges.push((t * u + i, t * v + j));
            }
        }
    }
    Graph::from_edges(g.n() * t, edges).expect("blowup of a simple graph is simple")
}

/// `rows x cols` grid, vertex `r*cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("grid is simple")
}

pub fn gnp(n: usize, p: f64, rng: &mut SeededRng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("simple")
}

/// Random bipartite graph with sides `0..a` and `a..a+b`.
pub fn bipartite_gnp(a: usize, b: usize, p: f64, rng: &mut SeededRng) -> BipartiteGraph {
    let mut edges = Vec::new();
    for u in 0..a {
        for v in a..a + b {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_edges(a + b, edges).expect("simple");
    let side = (0..a + b)
        .map(|v| if v < a { Side::A } else { Side::B })
        .collect();
    BipartiteGraph::new(g, side).expect("sides respected")
}

/// Union of `d` uniformly random perfect matchings between two sides of
/// size `half` (repeated edges merged), so degrees lie in `[1, d]` and are
/// close to `d` when `d` is small relative to `half`.
pub fn near_regular_bipartite(half: usize, d: usize, rng: &mut SeededRng) -> BipartiteGraph {
    let mut edges = Vec::with_capacity(half * d);
    let mut perm: Vec<usize> = (0..half).collect();
    for _ in 0..d {
        perm.shuffle(rng);
        for (a, &b) in perm.iter().enumerate() {
            edges.push((a, half + b));
        }
    }
    let g = Graph::from_edges_dedup(2 * half, edges).expect("simple");
    let side = (0..2 * half)
        .map(|v| if v < half { Side::A } else { Side::B })
        .collect();
    BipartiteGraph::new(g, side).expect("sides respected")
}

/// Configuration model on the given degree targets; loops and repeated
/// pairs are dropped, so realised degrees are at most the targets.
pub fn configuration(targets: &[usize], rng: &mut SeededRng) -> Graph {
    let mut stubs: Vec<usize> = targets
        .iter()
        .enumerate()
        .flat_map(|(v, &t)| std::iter::repeat(v).take(t))
        .collect();
    stubs.shuffle(rng);
    let pairs = stubs
        .chunks_exact(2)
        .filter(|c| c[0] != c[1])
        .map(|c| (c[0], c[1]));
    Graph::from_edges_dedup(targets.len(), pairs).expect("loops removed")
}

/// Graph whose degree targets are log-uniform on `[lo, hi]`.
pub fn degree_spread(n: usize, lo: usize, hi: usize, rng: &mut SeededRng) -> Graph {
    let (l, h) = ((lo as f64).ln(), (hi as f64).ln());
    let targets: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(l..=h).exp().round() as usize)
        .collect();
    configuration(&targets, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(complete(4).m(), 6);
        assert_eq!(cycle(5).m(), 5);
        assert_eq!(path(4).m(), 3);
        assert_eq!(complete_bipartite(4, 4).graph().m(), 16);
        let b = blowup(&cycle(4), 2);
        assert_eq!((b.n(), b.m()), (8, 16));
        assert!(b.edges().iter().all(|&(u, v)| b.degree(u) == 4 && b.degree(v) == 4));
        assert_eq!(grid(3, 3).m(), 12);
    }

    #[test]
    fn near_regular_degrees() {
        let g = near_regular_bipartite(200, 6, &mut SeededRng::new(1, "g"));
        assert!(g.graph().max_degree() <= 6);
        assert!(g.graph().min_degree() >= 3);
        assert_eq!(g.side_counts(&(0..400).collect::<Vec<_>>()), (200, 200));
    }

    #[test]
    fn configuration_respects_targets() {
        let targets = vec![3; 40];
        let g = configuration(&targets, &mut SeededRng::new(2, "c"));
        assert!(g.max_degree() <= 3);
    }
}
