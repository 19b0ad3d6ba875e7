//! Degree flattening by random deletions.
//!
//! One step takes a graph whose degrees lie in `[d, (1+γ)d]`, splits the
//! vertices at `(1+γ/2)d` into low (`U_L`) and high (`U_H`), and then
//! deletes independently
//!
//! * edges inside `U_H` with probability `2ε-ε²`,
//! * edges between `U_L` and `U_H` with probability `ε`,
//! * vertices of `U_L` with probability `ε`,
//!
//! so every surviving edge at a low vertex stays with probability `1-ε` and
//! at a high vertex with probability `(1-ε)²`. The step is kept when all
//! degrees land in `[d', (1-ε/2)(1+γ)d']` with `d' = (1-5ε/4)d`. Iterating
//! shrinks the ratio `1+γ` geometrically while only `U_L` vertices are ever
//! removed, so a tracked vertex set survives at rate at least `1-ε` a step.

use crate::graph::{log2, Edge, Graph, Restriction, SeededRng};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularizeError {
    #[error("graph has no vertices")]
    Empty,
    #[error("lambda must be at least 1, got {0}")]
    BadLambda(f64),
    #[error("epsilon must lie in [0,1), got {0}")]
    BadEpsilon(f64),
    #[error("paper mode needs epsilon <= 1/100 and gamma >= 10 epsilon (epsilon {epsilon}, gamma {gamma})")]
    PaperHypothesis { epsilon: f64, gamma: f64 },
    #[error("vertex {vertex} has degree {degree}, outside [{lo}, {hi}]")]
    DegreeOutsideWindow {
        vertex: usize,
        degree: usize,
        lo: f64,
        hi: f64,
    },
    #[error("step {step} was rejected {attempts} times in a row")]
    RetriesExhausted {
        step: usize,
        attempts: usize,
        log: Vec<StepRecord>,
    },
    #[error("paper-mode check failed: {check}")]
    PaperAssertion { check: String, log: Vec<StepRecord> },
}

/// How the per-step `ε` is set and which guarantees are asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RegularizeMode {
    /// `ε = 10^4 λ^5 log n / d`; below `d = C log n` the input is returned
    /// unchanged and flagged vacuous. On completion `d' ≥ d/C` and a spread
    /// of at most `10^5 λ^5 log n` are asserted.
    Paper { c: f64 },
    /// Fixed `ε`, any value in `[0,1)`.
    Desk { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularisationConfig {
    /// Input degrees must lie in `[d, λd]`.
    pub lambda: f64,
    pub mode: RegularizeMode,
    /// Lower degree bound; `None` centres the window `[d, λd]` on the
    /// observed degrees (geometrically).
    pub d: Option<f64>,
    pub max_steps: usize,
    /// Rejected attempts allowed for a single step.
    pub max_retries: usize,
}

impl RegularisationConfig {
    pub fn desk(lambda: f64, epsilon: f64, max_steps: usize) -> Self {
        RegularisationConfig {
            lambda,
            mode: RegularizeMode::Desk { epsilon },
            d: None,
            max_steps,
            max_retries: 32,
        }
    }

    pub fn paper(lambda: f64, c: f64) -> Self {
        RegularisationConfig {
            lambda,
            mode: RegularizeMode::Paper { c },
            d: None,
            max_steps: usize::MAX,
            max_retries: 32,
        }
    }
}

/// One attempted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub attempt: usize,
    /// Label of the stream that made every draw of this attempt.
    pub stream: String,
    pub epsilon: f64,
    pub d: f64,
    pub gamma: f64,
    pub low: usize,
    pub high: usize,
    pub deleted_vertices: usize,
    pub deleted_high_high: usize,
    pub deleted_low_high: usize,
    pub new_d: f64,
    /// Upper end of the acceptance window, `(1-ε/2)(1+γ)d'`.
    pub new_hi: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// `1+γ ≤ 1+10ε`.
    Converged,
    MaxSteps,
    /// Paper mode with `d < C log n`: nothing was done.
    Vacuous,
}

#[derive(Debug, Clone)]
pub struct Regularisation {
    /// Output graph and the map back to input ids.
    pub graph: Restriction,
    /// Final lower degree bound `d'`.
    pub d_prime: f64,
    /// Final spread: degrees lie in `[d', (1+γ)d']`.
    pub gamma: f64,
    /// Tracked vertices still present, in input ids.
    pub survivors: Vec<usize>,
    /// Every attempt, rejected ones included.
    pub log: Vec<StepRecord>,
    /// Accepted steps.
    pub steps: usize,
    pub epsilon: f64,
    pub spread_before: usize,
    pub spread_after: usize,
    pub stop: StopReason,
    pub vacuous: bool,
}

fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

fn low_cut(d: f64, gamma: f64) -> f64 {
    (1.0 + gamma / 2.0) * d
}

/// Split into `U_L = {deg ≤ (1+γ/2)d}` and `U_H`, after checking every degree
/// lies in `[d, (1+γ)d]`.
pub fn classify_degrees(g: &Graph, d: f64, gamma: f64) -> Result<(Vec<usize>, Vec<usize>), RegularizeError> {
    let (lo, hi) = (d, (1.0 + gamma) * d);
    let cut = low_cut(d, gamma);
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for v in 0..g.n() {
        let deg = g.degree(v);
        let x = deg as f64;
        if x < lo - tol(lo) || x > hi + tol(hi) {
            return Err(RegularizeError::DegreeOutsideWindow {
                vertex: v,
                degree: deg,
                lo,
                hi,
            });
        }
        if x <= cut + tol(cut) {
            low.push(v);
        } else {
            high.push(v);
        }
    }
    Ok((low, high))
}

/// Working state: edges in input ids plus the live vertices.
struct Work {
    n: usize,
    edges: Vec<Edge>,
    alive: Vec<bool>,
}

impl Work {
    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    fn spread(&self) -> usize {
        let deg = self.degrees();
        let live = (0..self.n).filter(|&v| self.alive[v]).map(|v| deg[v]);
        let (lo, hi) = live.fold((usize::MAX, 0), |(a, b), x| (a.min(x), b.max(x)));
        hi.saturating_sub(lo)
    }

    /// One attempt. Returns the next state and its record; the record says
    /// whether the degree window held.
    fn step(&self, d: f64, gamma: f64, epsilon: f64, rng: &mut SeededRng) -> (Work, StepRecord) {
        let deg = self.degrees();
        let cut = low_cut(d, gamma);
        let high: Vec<bool> = (0..self.n)
            .map(|v| self.alive[v] && deg[v] as f64 > cut + tol(cut))
            .collect();
        let n_high = high.iter().filter(|&&h| h).count();
        let n_low = self.alive.iter().filter(|&&a| a).count() - n_high;

        let mut alive = self.alive.clone();
        let mut deleted_vertices = 0;
        for v in 0..self.n {
            if self.alive[v] && !high[v] && rng.gen_bool(epsilon) {
                alive[v] = false;
                deleted_vertices += 1;
            }
        }
        let p_hh = 2.0 * epsilon - epsilon * epsilon;
        let (mut del_hh, mut del_lh) = (0, 0);
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            let keep = match (high[u], high[v]) {
                (true, true) => {
                    let gone = rng.gen_bool(p_hh);
                    del_hh += gone as usize;
                    !gone
                }
                (false, false) => true,
                _ => {
                    let gone = rng.gen_bool(epsilon);
                    del_lh += gone as usize;
                    !gone
                }
            };
            if keep && alive[u] && alive[v] {
                edges.push((u, v));
            }
        }
        let next = Work {
            n: self.n,
            edges,
            alive,
        };

        let new_d = (1.0 - 1.25 * epsilon) * d;
        let new_hi = (1.0 - epsilon / 2.0) * (1.0 + gamma) * new_d;
        let deg = next.degrees();
        let live = (0..self.n).filter(|&v| next.alive[v]).map(|v| deg[v]);
        let (min_degree, max_degree) = live.fold((usize::MAX, 0), |(a, b), x| (a.min(x), b.max(x)));
        let accepted = min_degree as f64 >= new_d - tol(new_d) && max_degree as f64 <= new_hi + tol(new_hi);
        let record = StepRecord {
            step: 0,
            attempt: 0,
            stream: rng.label().to_string(),
            epsilon,
            d,
            gamma,
            low: n_low,
            high: n_high,
            deleted_vertices,
            deleted_high_high: del_hh,
            deleted_low_high: del_lh,
            new_d,
            new_hi,
            min_degree: if min_degree == usize::MAX { 0 } else { min_degree },
            max_degree,
            accepted,
        };
        (next, record)
    }

    fn finish(self) -> Restriction {
        let to_parent: Vec<usize> = (0..self.n).filter(|&v| self.alive[v]).collect();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in to_parent.iter().enumerate() {
            index[v] = i;
        }
        let edges = self.edges.iter().map(|&(u, v)| (index[u], index[v]));
        Restriction {
            graph: Graph::from_edges(to_parent.len(), edges).expect("subgraph of a simple graph"),
            to_parent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub graph: Restriction,
    pub accepted: bool,
    pub new_d: f64,
    pub record: StepRecord,
}

/// A single attempt of the three random deletions on `g`.
pub fn regularize_step(
    g: &Graph,
    d: f64,
    gamma: f64,
    epsilon: f64,
    rng: &mut SeededRng,
) -> Result<StepOutcome, RegularizeError> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(RegularizeError::BadEpsilon(epsilon));
    }
    classify_degrees(g, d, gamma)?;
    let work = Work {
        n: g.n(),
        edges: g.edges().to_vec(),
        alive: vec![true; g.n()],
    };
    let (next, record) = work.step(d, gamma, epsilon, rng);
    Ok(StepOutcome {
        graph: next.finish(),
        accepted: record.accepted,
        new_d: record.new_d,
        record,
    })
}

/// Iterate [`regularize_step`] until `1+γ ≤ 1+10ε` or `max_steps` steps were
/// accepted. Each attempt draws from `rng/step{i}/attempt{j}`.
pub fn regularize(
    g: &Graph,
    cfg: &RegularisationConfig,
    tracked: &[usize],
    rng: &SeededRng,
) -> Result<Regularisation, RegularizeError> {
    let n = g.n();
    if n == 0 {
        return Err(RegularizeError::Empty);
    }
    if !(cfg.lambda >= 1.0) {
        return Err(RegularizeError::BadLambda(cfg.lambda));
    }
    let (min, max) = (g.min_degree() as f64, g.max_degree() as f64);
    let d = cfg.d.unwrap_or_else(|| (min * max / cfg.lambda).sqrt().min(min));
    let gamma0 = cfg.lambda - 1.0;
    classify_degrees(g, d, gamma0)?;

    let mut tracked: Vec<usize> = tracked.to_vec();
    tracked.sort_unstable();
    tracked.dedup();
    let spread_before = g.max_degree() - g.min_degree();
    let ln = log2(n as f64);

    let epsilon = match cfg.mode {
        RegularizeMode::Desk { epsilon } => {
            if !(0.0..1.0).contains(&epsilon) {
                return Err(RegularizeError::BadEpsilon(epsilon));
            }
            epsilon
        }
        RegularizeMode::Paper { c } => {
            if d < c * ln {
                return Ok(Regularisation {
                    graph: g.induced(&(0..n).collect::<Vec<_>>()),
                    d_prime: d,
                    gamma: gamma0,
                    survivors: tracked,
                    log: Vec::new(),
                    steps: 0,
                    epsilon: 0.0,
                    spread_before,
                    spread_after: spread_before,
                    stop: StopReason::Vacuous,
                    vacuous: true,
                });
            }
            let e = 1e4 * cfg.lambda.powi(5) * ln / d;
            if e > 0.01 {
                return Err(RegularizeError::PaperHypothesis {
                    epsilon: e,
                    gamma: gamma0,
                });
            }
            e
        }
    };

    let mut work = Work {
        n,
        edges: g.edges().to_vec(),
        alive: vec![true; n],
    };
    let (mut d_i, mut gamma_i) = (d, gamma0);
    let mut log = Vec::new();
    let mut steps = 0;
    let converged = |gamma: f64| gamma <= 10.0 * epsilon + 1e-12;
    while !converged(gamma_i) && steps < cfg.max_steps && epsilon > 0.0 {
        if let RegularizeMode::Paper { .. } = cfg.mode {
            if gamma_i < 10.0 * epsilon {
                return Err(RegularizeError::PaperHypothesis {
                    epsilon,
                    gamma: gamma_i,
                });
            }
        }
        let mut accepted = None;
        for attempt in 0..cfg.max_retries.max(1) {
            let mut stream = rng.child(&format!("step{steps}/attempt{attempt}"));
            let (next, mut record) = work.step(d_i, gamma_i, epsilon, &mut stream);
            record.step = steps;
            record.attempt = attempt;
            let ok = record.accepted;
            log.push(record);
            if ok {
                accepted = Some(next);
                break;
            }
        }
        let Some(next) = accepted else {
            return Err(RegularizeError::RetriesExhausted {
                step: steps,
                attempts: cfg.max_retries.max(1),
                log,
            });
        };
        work = next;
        d_i *= 1.0 - 1.25 * epsilon;
        gamma_i = (1.0 - epsilon / 2.0) * (1.0 + gamma_i) - 1.0;
        steps += 1;
    }

    let stop = if converged(gamma_i) || epsilon == 0.0 {
        StopReason::Converged
    } else {
        StopReason::MaxSteps
    };
    let spread_after = work.spread();
    let survivors: Vec<usize> = tracked.into_iter().filter(|&v| work.alive[v]).collect();

    if let RegularizeMode::Paper { c } = cfg.mode {
        if d_i < d / c - tol(d / c) {
            return Err(RegularizeError::PaperAssertion {
                check: format!("d' = {d_i} < d/C = {}", d / c),
                log,
            });
        }
        let bound = 1e5 * cfg.lambda.powi(5) * ln;
        if spread_after as f64 > bound {
            return Err(RegularizeError::PaperAssertion {
                check: format!("spread {spread_after} > 10^5 lambda^5 log n = {bound}"),
                log,
            });
        }
    }

    Ok(Regularisation {
        graph: work.finish(),
        d_prime: d_i,
        gamma: gamma_i,
        survivors,
        log,
        steps,
        epsilon,
        spread_before,
        spread_after,
        stop,
        vacuous: false,
    })
}
