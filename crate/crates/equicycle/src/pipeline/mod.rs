//! End-to-end search for `k` edge-disjoint cycles on a common vertex set.

mod config;
mod run;
mod scenario;
mod select;
mod verify;

pub use config::{
    rmbg_pair_bound, DeskSizes, Exponents, Hypothesis, JunctionOrder, MatchingRule, Mode, PipelineConfig, Retries, SizeLaw,
    Thresholds,
};
pub use run::{run_pipeline, Certificate, FailureReport, PipelinePlan, PipelineRun};
pub use scenario::{bundled_config, bundled_graph, BUNDLED_DEGREE, BUNDLED_GRAPH_SEED, BUNDLED_HALF, BUNDLED_SEED};
pub use select::{degree_window, nearly_regular_centre, select_sets, SelectError, SelectedSets, Window, SET_NAMES};
pub use verify::{verify_cycles, CycleClause, CycleFamily, CycleProvenance, CycleReport};
