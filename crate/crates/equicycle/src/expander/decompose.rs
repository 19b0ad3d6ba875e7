use super::{check_expander, CheckMode, ExpanderError, ExpanderParams, ExpanderVerdict};
use crate::graph::{log2, Graph, SeededRng};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Edge-disjoint spanning subgraphs whose union is the input.
    pub parts: Vec<Graph>,
    /// Each part's verdict against the weakened parameters, when checked.
    pub verdicts: Vec<Option<ExpanderVerdict>>,
    pub weakened: ExpanderParams,
    /// Draws used, including the accepted one.
    pub attempts: usize,
}

/// `(ε/4, εs/(10^4 k (log n)^2))`.
pub fn weakened_params(params: &ExpanderParams, k: usize, n: usize) -> ExpanderParams {
    let l = log2(n as f64);
    ExpanderParams {
        epsilon: params.epsilon / 4.0,
        s: params.epsilon * params.s / (1e4 * k as f64 * l * l).max(f64::MIN_POSITIVE),
    }
}

/// Assign every edge independently and uniformly to one of `k` parts.
///
/// With `verify` set, each part is checked against the weakened parameters
/// and the draw is repeated on a fresh stream while some part has a witness.
pub fn decompose_into_expanders(
    g: &Graph,
    k: usize,
    params: &ExpanderParams,
    rng: &SeededRng,
    verify: Option<(CheckMode, usize)>,
    max_attempts: usize,
) -> Result<Decomposition, ExpanderError> {
    if k == 0 {
        return Err(ExpanderError::ZeroParts);
    }
    let weakened = weakened_params(params, k, g.n());
    for attempt in 0..max_attempts.max(1) {
        let mut stream = rng.child(&format!("attempt{attempt}"));
        let mut buckets = vec![Vec::new(); k];
        for &e in g.edges() {
            buckets[stream.gen_range(0..k)].push(e);
        }
        let parts: Vec<Graph> = buckets
            .into_iter()
            .map(|b| Graph::from_edges(g.n(), b).expect("subset of a simple graph"))
            .collect();
        let verdicts: Vec<Option<ExpanderVerdict>> = match &verify {
            None => vec![None; k],
            Some((mode, n_exact)) => parts
                .iter()
                .map(|p| check_expander(p, &weakened, mode, *n_exact).map(Some))
                .collect::<Result<_, _>>()?,
        };
        if verdicts
            .iter()
            .all(|v| v.as_ref().map_or(true, ExpanderVerdict::is_certificate))
        {
            return Ok(Decomposition {
                parts,
                verdicts,
                weakened,
                attempts: attempt + 1,
            });
        }
    }
    Err(ExpanderError::RetriesExhausted {
        attempts: max_attempts.max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use proptest::prelude::*;

    #[test]
    fn single_part_is_the_graph() {
        let g = generate::complete(5);
        let p = ExpanderParams::new(0.5, 1.0).unwrap();
        let d = decompose_into_expanders(&g, 1, &p, &SeededRng::new(0, "d"), None, 1).unwrap();
        assert_eq!(d.parts, vec![g]);
    }

    #[test]
    fn k44_two_parts_checked_exactly() {
        let g = generate::complete_bipartite(4, 4);
        let p = ExpanderParams::new(1.0 / 32.0, 1.0).unwrap();
        let d = decompose_into_expanders(
            g.graph(),
            2,
            &p,
            &SeededRng::new(5, "d"),
            Some((CheckMode::Exact, 18)),
            50,
        )
        .unwrap();
        assert_eq!(d.parts.iter().map(Graph::m).sum::<usize>(), 16);
        assert!(d.verdicts.iter().all(|v| v.as_ref().unwrap().is_exact()));
        assert!(d.weakened.s < 1e-4);
    }

    #[test]
    fn zero_parts_rejected() {
        let g = generate::complete(3);
        let p = ExpanderParams::new(0.5, 1.0).unwrap();
        assert_eq!(
            decompose_into_expanders(&g, 0, &p, &SeededRng::new(0, ""), None, 1),
            Err(ExpanderError::ZeroParts)
        );
    }

    proptest! {
        #[test]
        fn parts_partition_edges(seed in any::<u64>(), k in 1usize..5) {
            let g = generate::gnp(15, 0.4, &mut SeededRng::new(seed, "g"));
            let p = ExpanderParams::new(0.5, 1.0).unwrap();
            let d = decompose_into_expanders(&g, k, &p, &SeededRng::new(seed, "d"), None, 1).unwrap();
            let mut all: Vec<_> = d.parts.iter().flat_map(|h| h.edges().iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, g.edges().to_vec());
        }
    }
}
