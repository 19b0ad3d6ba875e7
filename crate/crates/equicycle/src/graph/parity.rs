//! Side balance of path interiors in a bipartite graph.
//!
//! For a path from `u` to `v`, the internal vertices are balanced when `u`
//! and `v` lie on different sides, have one extra `B` when both ends are in
//! `A`, and one extra `A` when both ends are in `B`.

use super::{BipartiteGraph, PathError, Side};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityCase {
    Balanced,
    ExtraB,
    ExtraA,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityReport {
    pub internal_a: usize,
    pub internal_b: usize,
    /// `None` when the counts differ by more than one.
    pub case: Option<ParityCase>,
    pub endpoints: (Side, Side),
    /// The observed case is the one forced by the endpoint sides.
    pub consistent: bool,
}

pub fn check_path_parity(bg: &BipartiteGraph, p: &[usize]) -> Result<ParityReport, PathError> {
    bg.graph().check_path(p)?;
    let inner = if p.len() >= 2 { &p[1..p.len() - 1] } else { &[][..] };
    let (internal_a, internal_b) = bg.side_counts(inner);
    let case = if internal_a == internal_b {
        Some(ParityCase::Balanced)
    } else if internal_b == internal_a + 1 {
        Some(ParityCase::ExtraB)
    } else if internal_a == internal_b + 1 {
        Some(ParityCase::ExtraA)
    } else {
        None
    };
    let endpoints = (bg.side(p[0]), bg.side(p[p.len() - 1]));
    let expected = match endpoints {
        (Side::A, Side::A) => ParityCase::ExtraB,
        (Side::B, Side::B) => ParityCase::ExtraA,
        _ => ParityCase::Balanced,
    };
    // A single vertex has no interior; it is its own degenerate case.
    let consistent = p.len() == 1 || case == Some(expected);
    Ok(ParityReport {
        internal_a,
        internal_b,
        case,
        endpoints,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    #[test]
    fn opposite_ends_balanced() {
        let g = generate::complete_bipartite(2, 2);
        let r = check_path_parity(&g, &[0, 2, 1, 3]).unwrap();
        assert_eq!(r.case, Some(ParityCase::Balanced));
        assert!(r.consistent);
    }

    #[test]
    fn a_to_a_has_extra_b() {
        let g = generate::complete_bipartite(2, 2);
        let r = check_path_parity(&g, &[0, 2, 1]).unwrap();
        assert_eq!(r.case, Some(ParityCase::ExtraB));
        assert!(r.consistent);
    }

    #[test]
    fn even_a_to_a_walk_is_invalid() {
        let g = generate::complete_bipartite(2, 2);
        assert!(check_path_parity(&g, &[0, 1]).is_err());
        assert!(check_path_parity(&g, &[0, 2, 1, 3, 0]).is_err());
    }

    mod props {
        use super::*;
        use crate::graph::SeededRng;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn every_valid_path_is_consistent(seed in any::<u64>(), len in 1usize..12) {
                let g = generate::complete_bipartite(6, 6);
                let mut rng = SeededRng::new(seed, "walk");
                let mut p = vec![rng.gen_range(0..12)];
                while p.len() < len {
                    let last = *p.last().unwrap();
                    let opts: Vec<usize> = g.graph().neighbours(last).iter().copied()
                        .filter(|v| !p.contains(v)).collect();
                    if opts.is_empty() { break; }
                    p.push(opts[rng.gen_range(0..opts.len())]);
                }
                let r = check_path_parity(&g, &p).unwrap();
                prop_assert!(r.consistent);
            }
        }
    }
}
