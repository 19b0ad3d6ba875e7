//! Absolute check of a cycle family: exactly `k` cycles of the graph on one
//! common vertex set, pairwise edge-disjoint. Uses only graph primitives.

use crate::graph::{cycle_edges, Edge, Graph, PathError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Where the pieces of a produced cycle came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleProvenance {
    /// `P^i`, from `x_1` to `x_{s+1}`.
    pub forest_path: Vec<usize>,
    /// `P*_i`, from `x_1` to `x_{s+1}`.
    pub absorbing_path: Vec<usize>,
    /// `M^i_j` per layer gap.
    pub matchings: Vec<Vec<Edge>>,
    /// Connecting paths through `R_1`, one per terminal pair.
    pub connectors: Vec<Vec<usize>>,
    /// `R^i_1`: internal vertices of the connectors.
    pub r1: Vec<usize>,
    /// `K^i`: pairs absorbed.
    pub absorbed: Vec<(usize, usize)>,
    /// Leftover pairs across layer gaps.
    pub leftover_pairs: Vec<(usize, usize)>,
    /// Terminal pairs handed to the connector search.
    pub terminal_pairs: Vec<(usize, usize)>,
    /// Vertices missed by an adjacent matching.
    pub leftover: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleFamily {
    /// Each cycle listed once around, without repeating its start.
    pub cycles: Vec<Vec<usize>>,
    /// Common vertex set, sorted.
    pub vertex_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<CycleProvenance>,
}

impl CycleFamily {
    pub fn new(cycles: Vec<Vec<usize>>) -> Self {
        let mut vertex_set = cycles.first().cloned().unwrap_or_default();
        vertex_set.sort_unstable();
        CycleFamily {
            cycles,
            vertex_set,
            provenance: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "kebab-case")]
pub enum CycleClause {
    Count { expected: usize, got: usize },
    NotACycle { index: usize, reason: String },
    VertexSet { index: usize },
    SharedEdge { first: usize, second: usize, edge: Edge },
}

impl fmt::Display for CycleClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleClause::Count { expected, got } => write!(f, "(a) expected {expected} cycles, got {got}"),
            CycleClause::NotACycle { index, reason } => write!(f, "(b) cycle {index} is invalid: {reason}"),
            CycleClause::VertexSet { index } => write!(f, "(c) cycle {index} has a different vertex set"),
            CycleClause::SharedEdge { first, second, edge } => {
                write!(f, "(d) cycles {first} and {second} share edge {edge:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub ok: bool,
    pub clause: Option<CycleClause>,
    pub cycle_length: usize,
}

fn fail(clause: CycleClause) -> CycleReport {
    CycleReport {
        ok: false,
        clause: Some(clause),
        cycle_length: 0,
    }
}

/// Check (a) exactly `k` cycles, (b) each a cycle of `g`, (c) all on the same
/// vertex set, which also equals the declared one when given, and (d)
/// pairwise edge-disjoint.
pub fn verify_cycles(g: &Graph, fam: &CycleFamily, k: usize) -> CycleReport {
    if fam.cycles.len() != k {
        return fail(CycleClause::Count {
            expected: k,
            got: fam.cycles.len(),
        });
    }
    for (index, c) in fam.cycles.iter().enumerate() {
        if let Err(e) = g.check_cycle(c) {
            let e: PathError = e;
            return fail(CycleClause::NotACycle {
                index,
                reason: e.to_string(),
            });
        }
    }
    let mut reference = if fam.vertex_set.is_empty() {
        fam.cycles.first().cloned().unwrap_or_default()
    } else {
        fam.vertex_set.clone()
    };
    reference.sort_unstable();
    for (index, c) in fam.cycles.iter().enumerate() {
        let mut s = c.clone();
        s.sort_unstable();
        if s != reference {
            return fail(CycleClause::VertexSet { index });
        }
    }
    let mut owner: HashMap<Edge, usize> = HashMap::new();
    for (index, c) in fam.cycles.iter().enumerate() {
        for e in cycle_edges(c) {
            if let Some(&first) = owner.get(&e) {
                return fail(CycleClause::SharedEdge {
                    first,
                    second: index,
                    edge: e,
                });
            }
            owner.insert(e, index);
        }
    }
    CycleReport {
        ok: true,
        clause: None,
        cycle_length: reference.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    fn k44_pair() -> (Graph, CycleFamily) {
        // A = 0..4, B = 4..8.
        let g = generate::complete_bipartite(4, 4).into_parts().0;
        let c1 = vec![0, 4, 1, 5, 2, 6, 3, 7];
        let c2 = vec![0, 5, 3, 4, 2, 7, 1, 6];
        (g, CycleFamily::new(vec![c1, c2]))
    }

    #[test]
    fn k44_two_hamiltonian_cycles() {
        let (g, fam) = k44_pair();
        let r = verify_cycles(&g, &fam, 2);
        assert!(r.ok, "{:?}", r.clause);
        assert_eq!(r.cycle_length, 8);
    }

    #[test]
    fn shared_edge_fails_clause_d() {
        let (g, mut fam) = k44_pair();
        fam.cycles[1] = vec![0, 4, 3, 5, 2, 7, 1, 6];
        let r = verify_cycles(&g, &fam, 2);
        assert!(matches!(r.clause, Some(CycleClause::SharedEdge { first: 0, second: 1, .. })));
        assert!(r.clause.unwrap().to_string().starts_with("(d)"));
    }

    #[test]
    fn single_cycle_and_other_clauses() {
        let g = generate::cycle(5);
        assert!(verify_cycles(&g, &CycleFamily::new(vec![vec![0, 1, 2, 3, 4]]), 1).ok);
        let r = verify_cycles(&g, &CycleFamily::new(vec![vec![0, 1, 2, 3, 4]]), 2);
        assert_eq!(r.clause, Some(CycleClause::Count { expected: 2, got: 1 }));
        let r = verify_cycles(&g, &CycleFamily::new(vec![vec![0, 2, 1, 3, 4]]), 1);
        assert!(matches!(r.clause, Some(CycleClause::NotACycle { index: 0, .. })));
        let (g, mut fam) = k44_pair();
        fam.cycles[1] = vec![0, 5, 1, 4];
        let r = verify_cycles(&g, &fam, 2);
        assert_eq!(r.clause, Some(CycleClause::VertexSet { index: 1 }));
    }
}
