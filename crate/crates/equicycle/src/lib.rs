//! Constructive graph procedures around packing edge-disjoint cycles that
//! share one vertex set: sublinear expanders, near-regularisation,
//! connecting paths, absorbers, leftover-bounded matchings and an
//! end-to-end pipeline, plus a brute-force oracle for small graphs.

pub mod graph;
pub mod expander;
pub mod regularize;
pub mod connect;
pub mod forest;
pub mod absorb;
pub mod pipeline;
pub mod oracle;
