use crate::graph::{BipartiteGraph, Graph, Restriction, Side};

/// Place vertices in id order on the side opposite to most of their already
/// placed neighbours (ties to `A`) and keep the crossing edges. At least half
/// of the edges survive.
pub fn greedy_bipartition(g: &Graph) -> BipartiteGraph {
    let mut side: Vec<Side> = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let (mut a, mut b) = (0usize, 0usize);
        for &w in g.neighbours(v).iter().take_while(|&&w| w < v) {
            match side[w] {
                Side::A => a += 1,
                Side::B => b += 1,
            }
        }
        side.push(if a > b { Side::B } else { Side::A });
    }
    let crossing = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| side[u] != side[v]);
    let h = Graph::from_edges(g.n(), crossing).expect("subgraph of a simple graph");
    BipartiteGraph::new(h, side).expect("only crossing edges kept")
}

/// Largest induced subgraph whose degrees all lie in `[lo, 6*lo]`, obtained
/// by repeatedly deleting vertices outside the window.
fn windowed_core(g: &Graph, lo: usize) -> Vec<usize> {
    let hi = 6 * lo;
    let mut alive = vec![true; g.n()];
    let mut deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut stack: Vec<usize> = (0..g.n()).filter(|&v| deg[v] < lo || deg[v] > hi).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] || (deg[v] >= lo && deg[v] <= hi) {
            continue;
        }
        alive[v] = false;
        for &w in g.neighbours(v) {
            if alive[w] {
                deg[w] -= 1;
                if deg[w] + 1 == lo {
                    stack.push(w);
                }
            }
        }
    }
    (0..g.n()).filter(|&v| alive[v]).collect()
}

/// A subgraph with `Δ ≤ 6δ`.
///
/// Candidate windows `[lo, 6 lo]` run over half-dyadic values of `lo`; each
/// is pruned to a stable induced subgraph and the one with the most edges is
/// kept (smallest `lo` on ties). If every window empties out, the first edge
/// is returned. The graph is returned unchanged when it already qualifies.
pub fn almost_regular_subgraph(g: &Graph) -> Restriction {
    let all: Vec<usize> = (0..g.n()).collect();
    if g.m() == 0 {
        return g.induced(&[]);
    }
    if g.min_degree() > 0 && g.max_degree() <= 6 * g.min_degree() {
        return g.induced(&all);
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut lo_prev = 0;
    let mut j = 0u32;
    loop {
        let lo = (2f64.powf(j as f64 / 2.0)).floor() as usize;
        j += 1;
        if lo > g.max_degree() {
            break;
        }
        if lo == lo_prev {
            continue;
        }
        lo_prev = lo;
        let keep = windowed_core(g, lo);
        if keep.is_empty() {
            continue;
        }
        let m = g.induced(&keep).graph.m();
        if best.as_ref().map_or(true, |(bm, _)| m > *bm) {
            best = Some((m, keep));
        }
    }
    match best {
        Some((_, keep)) => g.induced(&keep),
        None => {
            let (u, v) = g.edges()[0];
            g.induced(&[u, v])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, SeededRng};
    use proptest::prelude::*;

    #[test]
    fn regular_graph_is_kept() {
        let g = generate::cycle(7);
        let r = almost_regular_subgraph(&g);
        assert_eq!(r.graph, g);
    }

    #[test]
    fn star_gives_single_edge() {
        let g = Graph::from_edges(100, (1..100).map(|v| (0, v))).unwrap();
        let r = almost_regular_subgraph(&g);
        assert_eq!(r.graph.m(), 1);
        assert_eq!(r.to_parent, vec![0, 1]);
        // d(g)/(100 log n) < 1, so a single edge meets the density bound.
        assert!(g.average_degree() / (100.0 * (100f64).log2()) < 1.0);
    }

    #[test]
    fn bipartition_keeps_half() {
        let g = generate::complete(9);
        let b = greedy_bipartition(&g);
        assert!(2 * b.graph().m() >= g.m());
    }

    proptest! {
        #[test]
        fn output_is_six_almost_regular(seed in any::<u64>()) {
            let mut rng = SeededRng::new(seed, "ar");
            let g = generate::degree_spread(80, 1, 40, &mut rng);
            prop_assume!(g.m() > 0);
            let h = almost_regular_subgraph(&g).graph;
            prop_assert!(h.m() > 0);
            prop_assert!(h.min_degree() > 0);
            prop_assert!(h.max_degree() <= 6 * h.min_degree());
        }

        #[test]
        fn bipartition_half_edges(seed in any::<u64>()) {
            let g = generate::gnp(30, 0.3, &mut SeededRng::new(seed, "bp"));
            let b = greedy_bipartition(&g);
            prop_assert!(2 * b.graph().m() >= g.m());
        }
    }
}
