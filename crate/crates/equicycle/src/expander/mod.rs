//! Robust sublinear expansion: certification, witness search, extraction of
//! almost-regular bipartite expanders, random edge decomposition and
//! reachability balls.
//!
//! A graph on `n` vertices is an `(ε,s)`-expander when every `U` with
//! `1 ≤ |U| ≤ 2n/3` keeps `|N_{G-F}(U)| ≥ ε|U|/(log n)^2` for every edge set
//! `F` with `|F| ≤ s|U|`.

mod almost_regular;
mod check;
mod decompose;
mod extract;
mod reach;

pub(crate) use check::next_combination;

pub use almost_regular::{almost_regular_subgraph, greedy_bipartition};
pub use check::{
    check_expander, expansion_threshold, min_neighbourhood_under_deletion, replay_witness,
    CheckMode, HeuristicBudget, DEFAULT_N_EXACT,
};
pub use decompose::{decompose_into_expanders, Decomposition};
pub use extract::{extract_expander, Extraction, ExtractOptions, Stage, TraceStep};
pub use reach::{
    ball_radius, check_reachable, find_well_expanding_subset, reach_ball, well_expanding_size_bound,
    ReachMode, ReachVerdict,
};

use crate::graph::Edge;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpanderError {
    #[error("epsilon must lie in (0,1), got {0}")]
    BadEpsilon(f64),
    #[error("s must be non-negative, got {0}")]
    BadS(f64),
    #[error("exact mode needs n <= {limit}, graph has {n} vertices")]
    TooLargeForExact { n: usize, limit: usize },
    #[error("extraction needs 0 < epsilon < 1/8, got {0}")]
    ExtractEpsilon(f64),
    #[error("graph has no edges")]
    NoEdges,
    #[error("extraction degenerated to {n} vertices before certification")]
    Degenerate { n: usize, trace: Vec<TraceStep> },
    #[error("every one of {attempts} decompositions had a refuted part")]
    RetriesExhausted { attempts: usize },
    #[error("k must be at least 1")]
    ZeroParts,
    #[error("lambda must be at least 1, got {0}")]
    BadLambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub epsilon: f64,
    pub s: f64,
}

impl ExpanderParams {
    pub fn new(epsilon: f64, s: f64) -> Result<Self, ExpanderError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ExpanderError::BadEpsilon(epsilon));
        }
        if !(s >= 0.0) {
            return Err(ExpanderError::BadS(s));
        }
        Ok(ExpanderParams { epsilon, s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Every admissible `U` was enumerated; the certificate is a proof.
    Exact,
    /// A bounded search found no witness; the certificate is empirical.
    HeuristicNoWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ExpanderVerdict {
    Certificate {
        params: ExpanderParams,
        method: Method,
        /// Number of candidate sets examined.
        budget: usize,
    },
    Witness {
        u: Vec<usize>,
        f: Vec<Edge>,
        neighbourhood: usize,
    },
}

impl ExpanderVerdict {
    pub fn is_certificate(&self) -> bool {
        matches!(self, ExpanderVerdict::Certificate { .. })
    }

    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            ExpanderVerdict::Certificate {
                method: Method::Exact,
                ..
            }
        )
    }
}
