use super::config::{JunctionOrder, MatchingRule, PipelineConfig};
use crate::graph::{generate, BipartiteGraph, SeededRng};

/// Vertices per side of the bundled graph.
pub const BUNDLED_HALF: usize = 1000;
pub const BUNDLED_DEGREE: usize = 500;
pub const BUNDLED_GRAPH_SEED: u64 = 1;
/// Pipeline seed known to produce a verified family on the bundled graph
/// for `k = 2`.
pub const BUNDLED_SEED: u64 = 3;

/// A random near-regular bipartite graph on `2 · BUNDLED_HALF` vertices.
pub fn bundled_graph() -> BipartiteGraph {
    generate::near_regular_bipartite(BUNDLED_HALF, BUNDLED_DEGREE, &mut SeededRng::new(BUNDLED_GRAPH_SEED, "bundled"))
}

/// Desk configuration tuned for dense graphs of a few thousand vertices:
/// maximum matchings per gap, adjacency-driven junctions joined by direct
/// edges, a single connector copy through `R_1` and sparse cores for `K`.
pub fn bundled_config(k: usize, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::desk(k, seed);
    cfg.matching = MatchingRule::Maximum;
    cfg.junction_order = JunctionOrder::Adjacent;
    cfg.direct_connectors = true;
    cfg.connector_copies = 1;
    cfg.prune_absorber_edges = true;
    cfg.rmbg.matchings = 4;
    cfg
}
