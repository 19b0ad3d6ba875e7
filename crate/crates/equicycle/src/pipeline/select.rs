use super::config::{Mode, PipelineConfig, Thresholds};
use crate::connect::{check_connecting, ConnectingReport, ConnectionRequest};
use crate::graph::{log2, mask, p_random, uniform_subset, BipartiteGraph, Graph, SeededRng, Side};
use crate::regularize::{regularize, RegularisationConfig, RegularizeMode};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SET_NAMES: [&str; 5] = ["R1", "R2", "X", "U1", "U2"];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{property}: {detail}")]
pub struct SelectError {
    pub property: String,
    pub detail: String,
    pub stream: String,
}

/// Degrees observed against a window `centre ± radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub centre: f64,
    pub radius: f64,
    pub min: usize,
    pub max: usize,
}

impl Window {
    pub fn holds(&self) -> bool {
        self.min as f64 >= self.centre - self.radius - 1e-9 && self.max as f64 <= self.centre + self.radius + 1e-9
    }
}

/// Smallest `c` with `c + f c^{2/3} ≥ max`, if then also `c - f c^{2/3} ≤ min`.
pub fn nearly_regular_centre(min: usize, max: usize, f: f64) -> Option<f64> {
    let up = |c: f64| c + f * c.powf(2.0 / 3.0);
    let (mut lo, mut hi) = (0.0, max as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if up(mid) >= max as f64 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi - f * hi.powf(2.0 / 3.0) <= min as f64 + 1e-9).then_some(hi)
}

/// Degree window of `g[set]` centred by [`nearly_regular_centre`].
pub fn degree_window(g: &Graph, set: &[usize], f: f64) -> Window {
    let in_set = mask(g.n(), set);
    let degs: Vec<usize> = set.iter().map(|&v| g.degree_into(v, &in_set)).collect();
    let (min, max) = (
        degs.iter().copied().min().unwrap_or(0),
        degs.iter().copied().max().unwrap_or(0),
    );
    let centre = nearly_regular_centre(min, max, f).unwrap_or((min + max) as f64 / 2.0);
    Window {
        centre,
        radius: f * centre.powf(2.0 / 3.0),
        min,
        max,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapCheck {
    pub set: String,
    pub max: usize,
    pub cap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectedSets {
    /// `R_1, R_2, X, U_1, U_2`, sorted.
    pub sets: [Vec<usize>; 5],
    /// `G'` as a spanning subgraph on the vertex ids of `G`.
    #[serde(skip)]
    pub g_prime: Graph,
    pub g_prime_vertices: Vec<usize>,
    /// Lower degree bound of the regularised graph.
    pub d_prime: f64,
    pub regularisation_steps: usize,
    pub tracked: usize,
    pub tracked_survivors: usize,
    /// `G'[U_1 ∪ U_2]` against `d' ± 2 d'^{2/3}`.
    pub u_window: Window,
    pub caps: Vec<CapCheck>,
    pub connecting: Vec<ConnectingReport>,
    pub attempts: usize,
    pub stream: String,
}

impl SelectedSets {
    pub fn u(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.sets[3].iter().chain(&self.sets[4]).copied().collect();
        u.sort_unstable();
        u
    }
}

fn err(property: &str, detail: String, stream: &SeededRng) -> SelectError {
    SelectError {
        property: property.into(),
        detail,
        stream: stream.label().into(),
    }
}

/// Regularise, draw disjoint `R_i, T_i` inside `G'`, top up to balanced sets
/// of size `2m_i`, then check sizes, the degree window on `U_1 ∪ U_2` and
/// the degree caps by counting. Fresh stream per attempt.
pub fn select_sets(
    bg: &BipartiteGraph,
    cfg: &PipelineConfig,
    th: &Thresholds,
    rng: &SeededRng,
) -> Result<SelectedSets, SelectError> {
    let g = bg.graph();
    let n = g.n();
    let all: Vec<usize> = (0..n).collect();
    let tracked_rng = rng.child("tracked");
    let tracked = p_random(&all, 1.0 / cfg.c0, &mut tracked_rng.clone())
        .map_err(|e| err("tracked set", e.to_string(), &tracked_rng))?;

    let reg_rng = rng.child("regularize");
    let (min, max) = (g.min_degree() as f64, g.max_degree() as f64);
    // One standard deviation of slack on either side of the degree range, so
    // that a step is not rejected over a single edge.
    let floor = (min - min.sqrt()).max(1.0);
    let ceil = max + max.sqrt();
    let reg_cfg = match cfg.mode {
        Mode::Paper => RegularisationConfig::paper(18.0, cfg.c0),
        Mode::Desk => RegularisationConfig {
            lambda: ceil / floor,
            mode: RegularizeMode::Desk {
                epsilon: cfg.regularize_epsilon,
            },
            d: Some(floor),
            max_steps: cfg.regularize_steps,
            max_retries: 32,
        },
    };
    let reg = regularize(g, &reg_cfg, &tracked, &reg_rng).map_err(|e| err("regularisation", e.to_string(), &reg_rng))?;
    if cfg.mode == Mode::Paper && reg.survivors.len() < tracked.len() {
        return Err(err(
            "tracked set inside G'",
            format!("{} of {} tracked vertices survived", reg.survivors.len(), tracked.len()),
            &reg_rng,
        ));
    }
    let map = &reg.graph.to_parent;
    let g_prime = Graph::from_edges(
        n,
        reg.graph.graph.edges().iter().map(|&(u, v)| (map[u], map[v])),
    )
    .expect("subgraph of a simple graph");
    let mut vp = map.clone();
    vp.sort_unstable();

    let (np, dp, l) = (vp.len() as f64, reg.d_prime, log2(n as f64));
    let probs: Vec<(f64, f64)> = th
        .m
        .iter()
        .map(|&mi| {
            let m = mi as f64;
            let r = 2.0 * m / np - 4.0 * cfg.c0 * m * l / (dp * np) - m.powf(0.6) / np;
            let t = 10.0 * cfg.c0 * m * l / (dp * np) + 2.0 * m.powf(0.6) / np;
            (r, t)
        })
        .collect();
    let total: f64 = probs.iter().map(|(r, t)| r + t).sum();
    if let Some(i) = probs.iter().position(|&(r, _)| r < 0.0) {
        return Err(err(
            "R/T probabilities",
            format!("probability for {} is {}", SET_NAMES[i], probs[i].0),
            rng,
        ));
    }
    if total > 1.0 {
        return Err(err("R/T probabilities", format!("probabilities sum to {total}"), rng));
    }

    let d = g.average_degree();
    let mut last = None;
    for a in 0..cfg.retries.sets.max(1) {
        let mut stream = rng.child(&format!("attempt{a}"));
        // Category 2i is R_i, 2i+1 is T_i, 10 is neither.
        let cat: Vec<usize> = vp
            .iter()
            .map(|_| {
                let mut x: f64 = stream.gen();
                for (i, &(r, t)) in probs.iter().enumerate() {
                    if x < r {
                        return 2 * i;
                    }
                    x -= r;
                    if x < t {
                        return 2 * i + 1;
                    }
                    x -= t;
                }
                10
            })
            .collect();
        let mut sets: [Vec<usize>; 5] = Default::default();
        let mut short = None;
        for (i, &mi) in th.m.iter().enumerate() {
            for side in [Side::A, Side::B] {
                let pick = |c: usize| -> Vec<usize> {
                    vp.iter()
                        .zip(&cat)
                        .filter(|&(&v, &k)| k == c && bg.side(v) == side)
                        .map(|(&v, _)| v)
                        .collect()
                };
                let (r, t) = (pick(2 * i), pick(2 * i + 1));
                if r.len() > mi || r.len() + t.len() < mi {
                    short = Some(format!(
                        "{} side {side:?}: |R| = {}, |R ∪ T| = {}, need {mi}",
                        SET_NAMES[i],
                        r.len(),
                        r.len() + t.len()
                    ));
                    break;
                }
                let have = r.len();
                sets[i].extend(r);
                sets[i].extend(&t[..mi - have]);
            }
            if short.is_some() {
                break;
            }
            sets[i].sort_unstable();
        }
        if let Some(detail) = short {
            last = Some(err("sizes", detail, &stream));
            continue;
        }

        let u: Vec<usize> = {
            let mut u: Vec<usize> = sets[3].iter().chain(&sets[4]).copied().collect();
            u.sort_unstable();
            u
        };
        let u_window = degree_window(&g_prime, &u, 2.0);
        if !u_window.holds() {
            last = Some(err(
                "G'[U1 ∪ U2] nearly regular",
                format!("degrees {}..{} outside {:.1} ± {:.1}", u_window.min, u_window.max, u_window.centre, u_window.radius),
                &stream,
            ));
            continue;
        }
        let mut caps = Vec::new();
        let mut over = None;
        for (i, set) in sets.iter().enumerate() {
            let in_set = mask(n, set);
            let max = (0..n).map(|v| g.degree_into(v, &in_set)).max().unwrap_or(0);
            let cap = cfg.cap_constant * d * th.m[i] as f64 / n as f64;
            if max as f64 > cap {
                over = Some(format!("max d(v, {}) = {max} > {cap:.2}", SET_NAMES[i]));
            }
            caps.push(CapCheck {
                set: SET_NAMES[i].into(),
                max,
                cap,
            });
        }
        if let Some(detail) = over {
            last = Some(err("degree caps", detail, &stream));
            continue;
        }

        let mut connecting = Vec::new();
        let mut q_rng = stream.child("connecting");
        for set in &sets {
            let in_set = mask(n, set);
            let outside: Vec<usize> = (0..n).filter(|&v| !in_set[v]).collect();
            let per = (set.len() / 8).max(1).min(outside.len() / 2);
            let queries: Vec<Vec<(usize, usize)>> = (0..cfg.connect_queries)
                .map(|_| {
                    let mut ends = uniform_subset(&outside, 2 * per, &mut q_rng).expect("enough vertices");
                    ends.shuffle(&mut q_rng);
                    ends.chunks_exact(2).map(|c| (c[0], c[1])).collect()
                })
                .collect();
            let max_len = ConnectionRequest::new(g, vec![], vec![]).max_len;
            let report = check_connecting(g, set, f64::INFINITY, max_len, &queries)
                .map_err(|e| err("connecting queries", e.to_string(), &q_rng))?;
            connecting.push(report);
        }

        return Ok(SelectedSets {
            sets,
            g_prime,
            g_prime_vertices: vp,
            d_prime: dp,
            regularisation_steps: reg.steps,
            tracked: tracked.len(),
            tracked_survivors: reg.survivors.len(),
            u_window,
            caps,
            connecting,
            attempts: a + 1,
            stream: stream.label().into(),
        });
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    #[test]
    fn centre_of_a_regular_graph_is_its_degree() {
        let c = nearly_regular_centre(8, 8, 2.0).unwrap();
        assert!(c <= 8.0 && c + 2.0 * c.powf(2.0 / 3.0) >= 8.0 - 1e-6);
        assert!(nearly_regular_centre(1, 100, 2.0).is_none());
    }

    #[test]
    fn toy_desk_sets_are_balanced_disjoint_and_sized() {
        let bg = generate::near_regular_bipartite(1000, 60, &mut SeededRng::new(4, "g"));
        let mut cfg = PipelineConfig::desk(2, 4);
        cfg.sizes.x = Some(40);
        cfg.sizes.u1 = 200;
        cfg.sizes.u2 = 250;
        cfg.c0 = 1.0;
        // Sets of 20 vertices at degree 60 see about one neighbour each.
        cfg.cap_constant = 20.0;
        cfg.connect_queries = 1;
        let g = bg.graph();
        let l = log2(2000.0);
        let th = Thresholds::resolve(&cfg, 2000, g.average_degree(), g.average_degree() / (l * l));
        let sel = select_sets(&bg, &cfg, &th, &SeededRng::new(4, "sets")).unwrap();
        let mut seen = vec![false; 2000];
        for (set, &m) in sel.sets.iter().zip(&th.m) {
            assert_eq!(set.len(), 2 * m);
            assert!(bg.is_balanced(set));
            for &v in set {
                assert!(!std::mem::replace(&mut seen[v], true));
            }
        }
        assert!(sel.u_window.holds());
        assert!(sel.caps.iter().all(|c| c.max as f64 <= c.cap));
    }
}
