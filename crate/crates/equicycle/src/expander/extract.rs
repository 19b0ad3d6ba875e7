use super::{
    almost_regular_subgraph, check_expander, greedy_bipartition, min_neighbourhood_under_deletion,
    CheckMode, ExpanderError, ExpanderParams, ExpanderVerdict, HeuristicBudget, DEFAULT_N_EXACT,
};
use crate::graph::{log2, mask, two_colour, BipartiteGraph, Graph};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub n_exact: usize,
    pub heuristic: HeuristicBudget,
    /// After certification, delete vertices of degree below `Δ/18` and
    /// resume if the ratio bound fails. Only relevant on small inputs.
    pub repair_ratio: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            n_exact: DEFAULT_N_EXACT,
            heuristic: HeuristicBudget::default(),
            repair_ratio: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    DropLowDegree,
    ShrinkToY,
    ShrinkToX,
    /// Neither density branch held; the denser side was kept.
    ShrinkDenser,
    RepairRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub stage: Stage,
    pub n_before: usize,
    pub d_before: f64,
    pub n_after: usize,
    pub d_after: f64,
    /// Vertices deleted in this step.
    pub removed: usize,
}

impl TraceStep {
    /// `λ = 3/(log n)^2` at the start of the step.
    pub fn lambda(&self) -> f64 {
        let l = log2(self.n_before as f64);
        3.0 / (l * l)
    }

    /// The density and size bounds each stage promises.
    pub fn holds(&self) -> bool {
        let tol = 1e-9;
        match self.stage {
            Stage::DropLowDegree | Stage::ShrinkToX => self.d_after + tol >= self.d_before,
            Stage::ShrinkToY => {
                self.d_after + tol >= (1.0 - self.lambda()) * self.d_before
                    && 4 * self.n_after < 3 * self.n_before
            }
            Stage::ShrinkDenser | Stage::RepairRatio => {
                self.d_after + tol >= (1.0 - self.lambda()) * self.d_before
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub graph: BipartiteGraph,
    /// Output vertex `i` is input vertex `to_parent[i]`.
    pub to_parent: Vec<usize>,
    pub s: f64,
    pub epsilon: f64,
    pub verdict: ExpanderVerdict,
    /// Average degree after bipartition and almost-regular pruning.
    pub d1: f64,
    pub trace: Vec<TraceStep>,
}

fn s_for(g: &Graph) -> f64 {
    let l = log2(g.n() as f64);
    if l == 0.0 {
        0.0
    } else {
        g.average_degree() / (l * l)
    }
}

fn verdict_for(g: &Graph, epsilon: f64, opts: &ExtractOptions) -> ExpanderVerdict {
    let params = ExpanderParams {
        epsilon,
        s: s_for(g),
    };
    let mode = if g.n() <= opts.n_exact {
        CheckMode::Exact
    } else {
        CheckMode::Heuristic(opts.heuristic)
    };
    check_expander(g, &params, &mode, opts.n_exact).expect("mode chosen to fit")
}

/// Working subgraph with the map back to the input ids.
struct Current {
    bg: BipartiteGraph,
    to_parent: Vec<usize>,
}

impl Current {
    fn keep(&mut self, keep: &[usize]) {
        let (bg, map) = self.bg.restrict(keep, &[]);
        self.to_parent = map.iter().map(|&i| self.to_parent[i]).collect();
        self.bg = bg;
    }

    fn g(&self) -> &Graph {
        self.bg.graph()
    }
}

/// Delete, one at a time and smallest id first, vertices of degree below
/// half the current average degree. Returns the survivors.
fn drop_low_degree(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let (mut n_alive, mut m_alive) = (n, g.m());
    loop {
        // deg < d/2 with d = 2m/n  <=>  deg * n < m
        let Some(v) = (0..n).find(|&v| alive[v] && deg[v] * n_alive < m_alive) else {
            break;
        };
        alive[v] = false;
        n_alive -= 1;
        m_alive -= deg[v];
        for &w in g.neighbours(v) {
            if alive[w] {
                deg[w] -= 1;
            }
        }
        if n_alive == 0 {
            break;
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

fn is_almost_regular(g: &Graph, ratio: usize) -> bool {
    g.min_degree() > 0 && g.max_degree() <= ratio * g.min_degree()
}

/// Extract a bipartite, 18-almost-regular `(ε,s)`-expander with
/// `s = d(G')/(log |V(G')|)^2`.
pub fn extract_expander(
    g: &Graph,
    epsilon: f64,
    opts: &ExtractOptions,
) -> Result<Extraction, ExpanderError> {
    if !(epsilon > 0.0 && epsilon < 0.125) {
        return Err(ExpanderError::ExtractEpsilon(epsilon));
    }
    if g.m() == 0 {
        return Err(ExpanderError::NoEdges);
    }
    let identity: Vec<usize> = (0..g.n()).collect();

    // Already what we want: hand it back untouched.
    if let Some(side) = two_colour(g) {
        let low = (0..g.n()).any(|v| g.degree(v) * g.n() < g.m());
        if is_almost_regular(g, 18) && !low {
            let verdict = verdict_for(g, epsilon, opts);
            if verdict.is_certificate() {
                return Ok(Extraction {
                    graph: BipartiteGraph::new(g.clone(), side).expect("two-colouring"),
                    to_parent: identity,
                    s: s_for(g),
                    epsilon,
                    verdict,
                    d1: g.average_degree(),
                    trace: Vec::new(),
                });
            }
        }
    }

    let bip = match two_colour(g) {
        Some(side) => BipartiteGraph::new(g.clone(), side).expect("two-colouring"),
        None => greedy_bipartition(g),
    };
    let reg = almost_regular_subgraph(bip.graph());
    let mut cur = Current {
        bg: bip,
        to_parent: identity,
    };
    cur.keep(&reg.to_parent);
    let d1 = cur.g().average_degree();
    let mut trace = Vec::new();

    loop {
        let (n_i, d_i) = (cur.g().n(), cur.g().average_degree());
        if n_i < 2 || (n_i as f64) < d1 / 2.0 {
            return Err(ExpanderError::Degenerate { n: n_i, trace });
        }
        let survivors = drop_low_degree(cur.g());
        if survivors.len() < n_i {
            cur.keep(&survivors);
            trace.push(TraceStep {
                stage: Stage::DropLowDegree,
                n_before: n_i,
                d_before: d_i,
                n_after: cur.g().n(),
                d_after: cur.g().average_degree(),
                removed: n_i - survivors.len(),
            });
            continue;
        }

        let verdict = verdict_for(cur.g(), epsilon, opts);
        let (keep, stage) = match &verdict {
            ExpanderVerdict::Certificate { .. } => {
                if opts.repair_ratio && !is_almost_regular(cur.g(), 18) {
                    let g = cur.g();
                    let cut = g.max_degree();
                    let keep: Vec<usize> = (0..n_i).filter(|&v| 18 * g.degree(v) >= cut).collect();
                    (keep, Stage::RepairRatio)
                } else {
                    let s = s_for(cur.g());
                    return Ok(Extraction {
                        graph: cur.bg,
                        to_parent: cur.to_parent,
                        s,
                        epsilon,
                        verdict,
                        d1,
                        trace,
                    });
                }
            }
            ExpanderVerdict::Witness { u, f, .. } => split(cur.g(), u, f),
        };
        cur.keep(&keep);
        trace.push(TraceStep {
            stage,
            n_before: n_i,
            d_before: d_i,
            n_after: cur.g().n(),
            d_after: cur.g().average_degree(),
            removed: n_i - cur.g().n(),
        });
    }
}

/// `Y = U ∪ N_{H-F}(U)`, `X = V(H) \ U`; keep whichever side the density
/// dichotomy allows.
fn split(h: &Graph, u: &[usize], f: &[(usize, usize)]) -> (Vec<usize>, Stage) {
    let n = h.n();
    let dropped: HashSet<_> = f.iter().copied().collect();
    let hf = h.without_edges(&dropped);
    let mut y: Vec<usize> = u.to_vec();
    y.extend(hf.neighbourhood(u));
    y.sort_unstable();
    let in_u = mask(n, u);
    let x: Vec<usize> = (0..n).filter(|&v| !in_u[v]).collect();

    let density = |set: &[usize]| {
        if set.is_empty() {
            0.0
        } else {
            2.0 * h.edges_within(&mask(n, set)) as f64 / set.len() as f64
        }
    };
    let (dy, dx, d) = (density(&y), density(&x), h.average_degree());
    let l = log2(n as f64);
    let lambda = 3.0 / (l * l);
    debug_assert!(min_neighbourhood_under_deletion(h, u, f.len()).0 <= y.len() - u.len());
    if dy >= (1.0 - lambda) * d {
        (y, Stage::ShrinkToY)
    } else if dx >= d {
        (x, Stage::ShrinkToX)
    } else if dy >= dx {
        (y, Stage::ShrinkDenser)
    } else {
        (x, Stage::ShrinkDenser)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::Method;
    use crate::graph::{generate, Edge, SeededRng};

    fn two_blocks() -> Graph {
        let a = generate::complete_bipartite(4, 4);
        let mut edges: Vec<Edge> = a.graph().edges().to_vec();
        edges.extend(a.graph().edges().iter().map(|&(u, v)| (u + 8, v + 8)));
        edges.push((0, 12));
        Graph::from_edges(16, edges).unwrap()
    }

    #[test]
    fn regular_bipartite_expander_is_returned_unchanged() {
        let g = generate::complete_bipartite(4, 4);
        let x = extract_expander(g.graph(), 1.0 / 32.0, &ExtractOptions::default()).unwrap();
        assert!(x.trace.is_empty());
        assert_eq!(x.graph.graph(), g.graph());
        assert!(x.verdict.is_exact());
    }

    #[test]
    fn two_blocks_shrink_to_one() {
        let g = two_blocks();
        let x = extract_expander(&g, 1.0 / 32.0, &ExtractOptions::default()).unwrap();
        assert_eq!(x.graph.graph().n(), 8);
        assert_eq!(x.graph.graph().m(), 16);
        assert!(matches!(
            x.verdict,
            ExpanderVerdict::Certificate {
                method: Method::Exact,
                ..
            }
        ));
        assert!(!x.trace.is_empty());
        assert!(x.trace.iter().all(TraceStep::holds));
        assert!(x
            .trace
            .iter()
            .any(|t| matches!(t.stage, Stage::ShrinkToY | Stage::ShrinkToX)));
    }

    #[test]
    fn random_inputs_keep_invariants() {
        for seed in 0..6 {
            let g = generate::gnp(60, 0.15, &mut SeededRng::new(seed, "x"));
            let x = extract_expander(&g, 1.0 / 32.0, &ExtractOptions::default()).unwrap();
            let h = x.graph.graph();
            assert!(h.min_degree() > 0);
            assert!(h.max_degree() <= 18 * h.min_degree());
            assert!(x.trace.iter().all(TraceStep::holds));
            for &(u, v) in h.edges() {
                assert!(g.has_edge(x.to_parent[u], x.to_parent[v]));
            }
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = generate::cycle(6);
        assert_eq!(
            extract_expander(&g, 0.2, &ExtractOptions::default()),
            Err(ExpanderError::ExtractEpsilon(0.2))
        );
    }
}
