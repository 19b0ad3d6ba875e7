use super::config::{JunctionOrder, MatchingRule, Mode, PipelineConfig, Thresholds};
use super::select::{select_sets, SelectedSets, Window};
use super::verify::{verify_cycles, CycleFamily, CycleProvenance};
use crate::absorb::{
    absorb_with, build_absorber_chain, build_rmbg, pair_matching, verify_absorber, AbsorberAssignment, AbsorberGrid,
    RmbgVerify,
};
use crate::connect::{connect_pairs_disjoint, ConnectionRequest};
use crate::expander::{extract_expander, ExtractOptions};
use crate::forest::{
    assemble_forest, matchings_with_leftover, maximum_layer_matchings, ForestError, LayeredInstance, LeftoverOutcome,
    LinearForest,
};
use crate::graph::{
    balanced_partition, balanced_subset, edge, log2, mask, path_edges, BipartiteGraph, Edge, Graph, SeededRng, Side,
};
use serde::{Deserialize, Serialize};
use rand::Rng;
use serde_json::json;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub stage: String,
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("stage {stage}: {bound}: {detail} (seed {seed}, stream {stream})")]
pub struct FailureReport {
    pub stage: String,
    /// The property or bound that failed.
    pub bound: String,
    pub detail: String,
    pub seed: u64,
    pub stream: String,
}

/// Every named set of the construction, in input vertex ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelinePlan {
    pub thresholds: Option<Thresholds>,
    /// `R_1, R_2, X, U_1, U_2` before `X` is truncated.
    pub sets: Vec<Vec<usize>>,
    pub d_prime: f64,
    /// Centre of the degree window of `G'[U_1 ∪ U_2]`.
    pub d_u: f64,
    /// `(1 - 1/k) d_u`.
    pub d_double_prime: f64,
    /// `K`, the pairs of the robustly matchable graph.
    pub k_pairs: Vec<(usize, usize)>,
    /// `x_1 … x_{s+1}`.
    pub x: Vec<usize>,
    pub u_abs: Vec<usize>,
    /// `U_abs^i` per cycle.
    pub u_abs_per_cycle: Vec<Vec<usize>>,
    pub w: Vec<usize>,
    /// `V^i` per cycle.
    pub v: Vec<Vec<usize>>,
    /// `V^i_1 … V^i_t` per cycle.
    pub layers: Vec<Vec<Vec<usize>>>,
    /// Vertices of `V^i` left over by the balanced partition; each becomes a
    /// one-vertex path of the forest.
    pub remainders: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub certificates: Vec<Certificate>,
    pub plan: PipelinePlan,
    pub outcome: Result<CycleFamily, FailureReport>,
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    root: SeededRng,
    certs: Vec<Certificate>,
    plan: PipelinePlan,
    /// Extraction ids to input ids.
    up: Vec<usize>,
}

/// One cycle's forest: paths with their ends, and the leftover pairing.
struct CycleForest {
    layers: Vec<Vec<usize>>,
    outcome: Option<LeftoverOutcome>,
    forest: Option<LinearForest>,
    /// `(start, end, path)`, one-vertex paths for the remainder included.
    items: Vec<(usize, usize, Vec<usize>)>,
}

impl<'a> Runner<'a> {
    fn cert(&mut self, stage: &str, data: serde_json::Value) {
        self.certs.push(Certificate {
            stage: stage.into(),
            data,
        });
    }

    fn fail(&self, stage: &str, bound: &str, detail: impl Into<String>, stream: &str) -> FailureReport {
        FailureReport {
            stage: stage.into(),
            bound: bound.into(),
            detail: detail.into(),
            seed: self.cfg.seed,
            stream: stream.into(),
        }
    }

    fn lift(&self, vs: &[usize]) -> Vec<usize> {
        vs.iter().map(|&v| self.up[v]).collect()
    }

    fn lift_sorted(&self, vs: &[usize]) -> Vec<usize> {
        let mut out = self.lift(vs);
        out.sort_unstable();
        out
    }

    fn lift_pairs(&self, ps: &[(usize, usize)]) -> Vec<(usize, usize)> {
        ps.iter().map(|&(a, b)| (self.up[a], self.up[b])).collect()
    }
}

/// Run every stage on `g`. Certificates of completed stages are kept when a
/// later stage fails.
pub fn run_pipeline(g: &Graph, cfg: &PipelineConfig) -> PipelineRun {
    let mut r = Runner {
        cfg,
        root: SeededRng::new(cfg.seed, "pipeline"),
        certs: Vec::new(),
        plan: PipelinePlan::default(),
        up: (0..g.n()).collect(),
    };
    let outcome = run_stages(&mut r, g);
    PipelineRun {
        certificates: r.certs,
        plan: r.plan,
        outcome,
    }
}

fn absorber_edge_set(grid: &AbsorberGrid) -> HashSet<Edge> {
    grid.absorbers
        .iter()
        .flatten()
        .flat_map(|a| path_edges(&a.path_with).into_iter().chain(path_edges(&a.path_without)))
        .collect()
}

fn side_split(bg: &BipartiteGraph, set: &[usize]) -> (Vec<usize>, Vec<usize>) {
    set.iter().partition(|&&v| bg.side(v) == Side::A)
}

fn window_of(degrees: impl Iterator<Item = usize>, centre: f64, radius: f64) -> Window {
    let (mut min, mut max) = (usize::MAX, 0);
    for d in degrees {
        min = min.min(d);
        max = max.max(d);
    }
    Window {
        centre,
        radius,
        min: if min == usize::MAX { 0 } else { min },
        max,
    }
}

/// Order forest paths for concatenation from `start` to `target`. The
/// adjacent rule runs `trials` greedy walks along unreserved edges of
/// `host`, preferring paths that keep the side parity completable and then
/// paths with the fewest onward options, with random tie-breaks after the
/// first walk. The walk with the fewest non-adjacent junctions wins and its
/// junction edges are added to `reserved`.
#[allow(clippy::too_many_arguments)]
fn order_items(
    items: &[(usize, usize, Vec<usize>)],
    start: usize,
    target: usize,
    host: &Graph,
    bg: &BipartiteGraph,
    rule: JunctionOrder,
    trials: usize,
    rng: &SeededRng,
    reserved: &mut HashSet<Edge>,
) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by_key(|&i| items[i].0);
    if rule == JunctionOrder::ById {
        return idx;
    }
    let mut stream = rng.clone();
    let mut best: Option<(usize, Vec<usize>, Vec<Edge>)> = None;
    for trial in 0..trials.max(1) {
        let (order, used, misses) = greedy_walk(items, idx.clone(), start, target, host, bg, reserved, (trial > 0).then_some(&mut stream));
        if best.as_ref().is_none_or(|b| misses < b.0) {
            best = Some((misses, order, used));
        }
        if misses == 0 {
            break;
        }
    }
    let (_, order, used) = best.expect("at least one trial");
    reserved.extend(used);
    order
}

#[allow(clippy::too_many_arguments)]
fn greedy_walk(
    items: &[(usize, usize, Vec<usize>)],
    mut idx: Vec<usize>,
    start: usize,
    target: usize,
    host: &Graph,
    bg: &BipartiteGraph,
    reserved: &HashSet<Edge>,
    mut rng: Option<&mut SeededRng>,
) -> (Vec<usize>, Vec<Edge>, usize) {
    let mut used: HashSet<Edge> = HashSet::new();
    let free = |a: usize, b: usize, used: &HashSet<Edge>| {
        host.has_edge(a, b) && !reserved.contains(&edge(a, b)) && !used.contains(&edge(a, b))
    };
    let mut order = Vec::with_capacity(idx.len());
    let mut junctions = Vec::new();
    let mut misses = 0;
    let mut cur = start;
    while !idx.is_empty() {
        let mut best: Option<((bool, usize, u32), usize)> = None;
        for (p, &i) in idx.iter().enumerate() {
            if !free(cur, items[i].0, &used) {
                continue;
            }
            let end = items[i].1;
            let key = if idx.len() == 1 {
                (false, usize::from(!free(end, target, &used)), 0)
            } else {
                let rest = idx.iter().copied().filter(|&j| j != i);
                let stuck = !parity_completable(items, rest.clone(), end, target, bg);
                let onward = rest.filter(|&j| free(end, items[j].0, &used)).count();
                (stuck, onward, rng.as_mut().map_or(0, |r| r.gen()))
            };
            if best.is_none_or(|(k, _)| key < k) {
                best = Some((key, p));
            }
        }
        let pos = match best {
            Some((_, p)) => {
                let e = edge(cur, items[idx[p]].0);
                used.insert(e);
                junctions.push(e);
                p
            }
            None => {
                misses += 1;
                idx.iter().position(|&i| bg.side(items[i].0) == bg.side(cur)).unwrap_or(0)
            }
        };
        let i = idx.remove(pos);
        cur = items[i].1;
        order.push(i);
    }
    if free(cur, target, &used) {
        junctions.push(edge(cur, target));
    } else {
        misses += 1;
    }
    (order, junctions, misses)
}

/// Whether `rest` can follow `cur` and precede `target` using only
/// junctions between opposite sides. Paths keep the side of the current
/// end; one-vertex paths flip it.
fn parity_completable(
    items: &[(usize, usize, Vec<usize>)],
    rest: impl Iterator<Item = usize>,
    cur: usize,
    target: usize,
    bg: &BipartiteGraph,
) -> bool {
    let (mut same, mut flip_from_cur, mut flip_to_cur, mut other) = (0usize, 0usize, 0usize, 0usize);
    let c = bg.side(cur);
    for i in rest {
        let (a, b, _) = &items[i];
        match (bg.side(*a) == bg.side(*b), bg.side(*a) == c) {
            (true, false) => flip_from_cur += 1,
            (true, true) => flip_to_cur += 1,
            (false, false) => same += 1,
            (false, true) => other += 1,
        }
    }
    let _ = same;
    // Flips alternate starting with one onto the opposite side.
    let end_on_cur = bg.side(target) != c;
    let balanced = if end_on_cur {
        flip_from_cur == flip_to_cur
    } else {
        flip_from_cur == flip_to_cur + 1
    };
    balanced && (other == 0 || flip_from_cur >= 1)
}

fn run_stages(r: &mut Runner, g: &Graph) -> Result<CycleFamily, FailureReport> {
    let cfg = r.cfg;
    cfg.validate().map_err(|e| r.fail("config", "configuration", e, r.root.label()))?;
    let k = cfg.k;

    // Expander extraction.
    let opts = ExtractOptions {
        n_exact: cfg.n_exact,
        ..ExtractOptions::default()
    };
    let ext = extract_expander(g, cfg.epsilon, &opts).map_err(|e| r.fail("extract", "expander extraction", e.to_string(), ""))?;
    let trace_ok = ext.trace.iter().all(|s| s.holds());
    r.up = ext.to_parent.clone();
    let bg = ext.graph;
    let gg = bg.graph();
    let n = gg.n();
    r.cert(
        "extract",
        json!({
            "n": n, "m": gg.m(), "average_degree": gg.average_degree(),
            "min_degree": gg.min_degree(), "max_degree": gg.max_degree(),
            "epsilon": ext.epsilon, "s": ext.s, "verdict": ext.verdict,
            "exact": ext.verdict.is_exact(), "trace_steps": ext.trace.len(), "trace_holds": trace_ok,
        }),
    );
    if !trace_ok {
        return Err(r.fail("extract", "trace step bounds", "a trace step broke its density bound", ""));
    }
    if gg.max_degree() > 18 * gg.min_degree() {
        return Err(r.fail("extract", "18-almost-regular", format!("degrees {}..{}", gg.min_degree(), gg.max_degree()), ""));
    }

    // Hypotheses and thresholds.
    let th = Thresholds::resolve(cfg, n, gg.average_degree(), ext.s);
    let failed: Vec<String> = th.failed().iter().map(|h| h.name.clone()).collect();
    r.cert(
        "hypotheses",
        json!({ "mode": cfg.mode, "thresholds": th, "waived": if cfg.mode == Mode::Desk { failed.clone() } else { vec![] } }),
    );
    r.plan.thresholds = Some(th.clone());
    if cfg.mode == Mode::Paper && !failed.is_empty() {
        return Err(r.fail("hypotheses", &failed[0], format!("failed: {}", failed.join(", ")), ""));
    }

    // Sets R1, R2, X, U1, U2 inside a nearly regular G'.
    let sets_rng = r.root.child("sets");
    let sel: SelectedSets = select_sets(&bg, cfg, &th, &sets_rng).map_err(|e| r.fail("select-sets", &e.property, e.detail, &e.stream))?;
    r.cert("select-sets", serde_json::to_value(&sel).expect("serialisable"));
    r.plan.sets = sel.sets.iter().map(|s| r.lift_sorted(s)).collect();
    r.plan.d_prime = sel.d_prime;
    r.plan.d_u = sel.u_window.centre;
    let [r1, r2, x_all, u1, u2] = &sel.sets;

    // K on R1 ∪ R2.
    let rmbg_rng = r.root.child("rmbg");
    let verify = if cfg.rmbg_exact {
        RmbgVerify::Exact
    } else {
        RmbgVerify::Sampled {
            trials: cfg.rmbg.fallback_trials,
        }
    };
    let rmbg = build_rmbg(th.rmbg_m, &rmbg_rng, verify, &cfg.rmbg)
        .map_err(|e| r.fail("rmbg", "robust matchability", e.to_string(), rmbg_rng.label()))?;
    let (a1, b1) = side_split(&bg, r1);
    let (a2, b2) = side_split(&bg, r2);
    let k_pairs = rmbg
        .embed(&a1, &a2, &b1, &b2)
        .map_err(|e| r.fail("rmbg", "embedding sizes", e.to_string(), rmbg_rng.label()))?;
    let s = k_pairs.len();
    r.cert(
        "rmbg",
        json!({ "m": rmbg.m, "pairs": s, "max_degree": rmbg.max_degree, "verification": rmbg.verification }),
    );
    if rmbg.max_degree > 102 || s % 2 == 0 {
        return Err(r.fail("rmbg", "at most 102 pairs per vertex and |K| odd", format!("max degree {}, |K| = {s}", rmbg.max_degree), rmbg_rng.label()));
    }
    r.plan.k_pairs = r.lift_pairs(&k_pairs);

    // X truncated to s+1 vertices, alternating sides from A.
    let (xa, xb) = side_split(&bg, x_all);
    let half = (s + 1) / 2;
    if xa.len() < half || xb.len() < half {
        return Err(r.fail("truncate-x", "|X| >= |K| + 1", format!("X has {} per side, need {half}", xa.len()), ""));
    }
    let x: Vec<usize> = (0..half).flat_map(|j| [xa[j], xb[j]]).collect();
    r.cert("truncate-x", json!({ "s": s, "x": r.lift(&x) }));
    r.plan.x = r.lift(&x);

    // Absorber grid.
    let mut acfg = cfg.absorber.clone();
    if cfg.mode == Mode::Paper {
        acfg.d1 = Some(th.big_d[1]);
        acfg.d2 = Some(th.big_d[2]);
    }
    let grid = build_absorber_chain(&bg, &k_pairs, &x, u1, u2, k, &acfg)
        .map_err(|e| r.fail("absorbers", "absorber grid", e.to_string(), ""))?;
    let mut owner = vec![false; n];
    for (i, row) in grid.absorbers.iter().enumerate() {
        for (j, abs) in row.iter().enumerate() {
            if let Err(c) = verify_absorber(gg, abs) {
                return Err(r.fail("absorbers", &c.to_string(), format!("cell ({i}, {j})"), ""));
            }
            if !bg.is_balanced(&abs.interior) {
                return Err(r.fail("absorbers", "balanced interior", format!("cell ({i}, {j})"), ""));
            }
            for &v in &abs.interior {
                if std::mem::replace(&mut owner[v], true) {
                    return Err(r.fail("absorbers", "disjoint interiors", format!("vertex {}", r.up[v]), ""));
                }
            }
        }
    }
    let sizes: Vec<usize> = grid.absorbers.iter().flatten().map(|a| a.interior.len()).collect();
    r.cert(
        "absorbers",
        json!({
            "k": k, "s": s, "u_abs": grid.u_abs.len(), "max_pairs_per_vertex": grid.max_pairs_per_vertex,
            "max_degree_u1_to_r": grid.max_degree_u1_to_r, "max_degree_u2_to_u1x": grid.max_degree_u2_to_u1x,
            "padded": grid.padded, "min_interior": sizes.iter().min(), "max_interior": sizes.iter().max(),
        }),
    );
    r.plan.u_abs = r.lift_sorted(&grid.u_abs);
    let abs_edges = absorber_edge_set(&grid);

    // σ: which absorbers each cycle gets.
    let assign_rng = r.root.child("assign");
    let asg = AbsorberAssignment::draw(&grid, &assign_rng);
    r.cert("assign", json!({ "sigma": asg.sigma }));
    r.plan.u_abs_per_cycle = asg.interiors.iter().map(|v| r.lift_sorted(v)).collect();

    // W and the sets V^i.
    let u = sel.u();
    let in_abs = mask(n, &grid.u_abs);
    let unused: Vec<usize> = u.iter().copied().filter(|&v| !in_abs[v]).collect();
    let unused_a = unused.iter().filter(|&&v| bg.side(v) == Side::A).count();
    let w_half = ((1.0 - 1.0 / k as f64) * unused_a as f64).floor() as usize;
    let w_rng = r.root.child("w");
    let w = balanced_subset(&unused, bg.sides(), 2 * w_half, &mut w_rng.clone())
        .map_err(|e| r.fail("w", "balanced W", e.to_string(), w_rng.label()))?;
    let d2 = (1.0 - 1.0 / k as f64) * sel.u_window.centre;
    r.plan.d_double_prime = d2;
    r.plan.w = r.lift(&w);
    let vs: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let own = mask(n, &asg.interiors[i]);
            let mut v: Vec<usize> = w.iter().copied().chain(grid.u_abs.iter().copied().filter(|&x| !own[x])).collect();
            v.sort_unstable();
            v
        })
        .collect();
    for (i, v) in vs.iter().enumerate() {
        if !bg.is_balanced(v) {
            return Err(r.fail("w", "balanced V^i", format!("cycle {i}"), w_rng.label()));
        }
    }
    r.cert(
        "w",
        json!({ "u_unused": unused.len(), "w": w.len(), "v_sizes": vs.iter().map(Vec::len).collect::<Vec<_>>(), "d_double_prime": d2 }),
    );
    r.plan.v = vs.iter().map(|v| r.lift(v)).collect();

    // Per cycle: layers, matchings in G'', forest.
    let t = th.t;
    let tracked: Vec<Vec<usize>> = (0..n).map(|v| gg.neighbours(v).to_vec()).collect();
    let mut removed: HashSet<Edge> = abs_edges.clone();
    let mut forests: Vec<CycleForest> = Vec::with_capacity(k);
    let lg = log2(n as f64);
    for (i, vi) in vs.iter().enumerate() {
        let g2 = sel.g_prime.without_edges(&removed);
        let layer_rng = r.root.child(&format!("layers{i}"));
        if vi.is_empty() {
            r.cert(&format!("cycle{i}/layers"), json!({ "v": 0 }));
            r.plan.layers.push(Vec::new());
            r.plan.remainders.push(Vec::new());
            forests.push(CycleForest {
                layers: Vec::new(),
                outcome: None,
                forest: None,
                items: Vec::new(),
            });
            continue;
        }
        let in_v = mask(n, vi);
        let vw = window_of(vi.iter().map(|&v| g2.degree_into(v, &in_v)), d2, 3.0 * d2.powf(2.0 / 3.0));
        let (layers, remainder) = balanced_partition(vi, bg.sides(), t, &mut layer_rng.clone())
            .map_err(|e| r.fail(&format!("cycle{i}/layers"), "balanced partition", e.to_string(), layer_rng.label()))?;
        let mut layer_of = vec![usize::MAX; n];
        for (j, l) in layers.iter().enumerate() {
            for &v in l {
                layer_of[v] = j;
            }
        }
        let lw = window_of(
            layers.iter().enumerate().flat_map(|(j, l)| {
                let (g2, lo) = (&g2, &layer_of);
                l.iter().flat_map(move |&v| {
                    [j.checked_sub(1), (j + 1 < t).then_some(j + 1)]
                        .into_iter()
                        .flatten()
                        .map(move |o| g2.neighbours(v).iter().filter(|&&x| lo[x] == o).count())
                })
            }),
            d2 / t as f64,
            5.0 * d2.powf(2.0 / 3.0),
        );
        r.cert(
            &format!("cycle{i}/layers"),
            json!({
                "v": vi.len(), "t": t, "layer_size": layers[0].len(), "remainder": remainder.len(),
                "v_window": vw, "v_window_holds": vw.holds(), "layer_window": lw, "layer_window_holds": lw.holds(),
            }),
        );
        r.plan.layers.push(layers.iter().map(|l| r.lift(l)).collect());
        r.plan.remainders.push(r.lift(&remainder));
        if !vw.holds() {
            return Err(r.fail(&format!("cycle{i}/layers"), "G''[V^i] degree window d'' ± 3d''^(2/3)", format!("{vw:?}"), layer_rng.label()));
        }
        if !lw.holds() {
            return Err(r.fail(&format!("cycle{i}/layers"), "layer degree window d''/t ± 5d''^(2/3)", format!("{lw:?}"), layer_rng.label()));
        }
        if cfg.mode == Mode::Paper && !remainder.is_empty() {
            return Err(r.fail(&format!("cycle{i}/layers"), "divisibility", format!("{} vertices left over", remainder.len()), layer_rng.label()));
        }

        let inst = LayeredInstance::new(&g2, layers.clone(), tracked.clone())
            .map_err(|e| r.fail(&format!("cycle{i}/matchings"), "layered instance", e.to_string(), layer_rng.label()))?;
        let m_rng = r.root.child(&format!("matchings{i}"));
        let outcome = match cfg.matching {
            MatchingRule::ColourClass => match matchings_with_leftover(&g2, &inst, &m_rng, cfg.retries.matchings) {
                Ok(o) => o,
                Err(ForestError::AttemptsExhausted { attempts, best }) => {
                    return Err(r.fail(
                        &format!("cycle{i}/matchings"),
                        "leftover bounds |Y| <= 10|V|t^(-1/2)log n and |Y ∩ N(v)| <= 10rt^(1/2)log n",
                        format!("{attempts} attempts, best |Y| = {} against {:.1}", best.report.y.len(), best.report.bound),
                        m_rng.label(),
                    ))
                }
                Err(e) => return Err(r.fail(&format!("cycle{i}/matchings"), "matchings", e.to_string(), m_rng.label())),
            },
            MatchingRule::Maximum => maximum_layer_matchings(&g2, &inst),
        };
        let max_tracked = outcome.report.tracked.iter().copied().max().unwrap_or(0);
        let asymptotic_cap = 250.0 * th.d.powf(0.9) * lg;
        r.cert(
            &format!("cycle{i}/matchings"),
            json!({
                "rule": cfg.matching, "attempts": outcome.attempts, "y": outcome.report.y.len(),
                "bound": outcome.report.bound, "max_y_in_neighbourhood": max_tracked,
                "tracked_bound": outcome.report.tracked_bound, "asymptotic_cap": asymptotic_cap,
                "edges": outcome.matchings.iter().map(Vec::len).sum::<usize>(),
                "delta_min": inst.delta_min, "delta_max": inst.delta_max,
            }),
        );
        if !outcome.report.holds() {
            return Err(r.fail(
                &format!("cycle{i}/matchings"),
                "leftover bounds",
                format!("|Y| = {} against {:.1}", outcome.report.y.len(), outcome.report.bound),
                m_rng.label(),
            ));
        }
        if cfg.mode == Mode::Paper && max_tracked as f64 > asymptotic_cap {
            return Err(r.fail(&format!("cycle{i}/matchings"), "|Y ∩ N_G(v)| <= 250 d^(9/10) log n", format!("{max_tracked}"), m_rng.label()));
        }
        for m in &outcome.matchings {
            for &e in m {
                if !g2.has_edge(e.0, e.1) {
                    return Err(r.fail(&format!("cycle{i}/matchings"), "matching edges in G''", format!("{e:?}"), m_rng.label()));
                }
                removed.insert(e);
            }
        }
        let forest = assemble_forest(bg.sides(), &layers, &outcome.matchings)
            .map_err(|e| r.fail(&format!("cycle{i}/forest"), "linear forest", e.to_string(), m_rng.label()))?;
        let mut items: Vec<(usize, usize, Vec<usize>)> = forest
            .paths
            .iter()
            .zip(forest.starts.iter().zip(&forest.ends))
            .map(|(p, (&a, &b))| (a, b, p.clone()))
            .collect();
        items.extend(remainder.iter().map(|&w| (w, w, vec![w])));
        forests.push(CycleForest {
            layers,
            outcome: Some(outcome),
            forest: Some(forest),
            items,
        });
    }

    // Terminal pairs, junction order and connectors.
    let (x1, xs) = (x[0], x[x.len() - 1]);
    let mut matching_edges: HashSet<Edge> = HashSet::new();
    for f in &forests {
        if let Some(o) = &f.outcome {
            matching_edges.extend(o.matchings.iter().flatten().copied());
        }
    }
    let mut drop_direct = matching_edges.clone();
    drop_direct.extend(abs_edges.iter().copied());
    let host_direct = gg.without_edges(&drop_direct);
    let mut orders = Vec::with_capacity(k);
    let mut leftover_pairs: Vec<Vec<(usize, usize)>> = Vec::with_capacity(k);
    let mut terminal_pairs: Vec<Vec<(usize, usize)>> = Vec::with_capacity(k);
    let mut junctions: HashSet<Edge> = HashSet::new();
    for f in &forests {
        let order = order_items(
            &f.items,
            x1,
            xs,
            &host_direct,
            &bg,
            cfg.junction_order,
            cfg.junction_trials,
            &r.root.child(&format!("junctions{}", orders.len())),
            &mut junctions,
        );
        let mut kstar = Vec::new();
        if order.is_empty() {
            kstar.push((x1, xs));
        } else {
            let it = |j: usize| &f.items[order[j]];
            kstar.push((it(0).0, x1));
            kstar.push((it(order.len() - 1).1, xs));
            for j in 0..order.len() - 1 {
                kstar.push((it(j + 1).0, it(j).1));
            }
        }
        leftover_pairs.push(f.forest.as_ref().map(|fo| fo.virtual_pairs.clone()).unwrap_or_default());
        terminal_pairs.push(kstar);
        orders.push(order);
    }
    let all_pairs: Vec<(usize, (usize, usize))> = (0..k)
        .flat_map(|i| leftover_pairs[i].iter().chain(&terminal_pairs[i]).map(move |&p| (i, p)))
        .collect();
    let mut connector: Vec<Option<Vec<usize>>> = vec![None; all_pairs.len()];
    let mut direct_used: HashSet<Edge> = HashSet::new();
    if cfg.direct_connectors {
        for (slot, &(_, (a, b))) in all_pairs.iter().enumerate() {
            if host_direct.has_edge(a, b) && direct_used.insert(edge(a, b)) {
                connector[slot] = Some(vec![a, b]);
            }
        }
    }
    let routed: Vec<usize> = (0..all_pairs.len()).filter(|&j| connector[j].is_none()).collect();
    let in_r1 = mask(n, r1);
    let mut drop_r1: HashSet<Edge> = gg.edges().iter().copied().filter(|&(p, q)| !in_r1[p] && !in_r1[q]).collect();
    drop_r1.extend(matching_edges.iter().copied());
    if cfg.prune_absorber_edges {
        drop_r1.extend(abs_edges.iter().copied());
    }
    let host_r1 = gg.without_edges(&drop_r1);
    let copies = cfg.connector_copies;
    let mut discarded = 0usize;
    if !routed.is_empty() {
        let pairs: Vec<(usize, usize)> = routed
            .iter()
            .flat_map(|&j| std::iter::repeat(all_pairs[j].1).take(copies))
            .collect();
        let mut req = ConnectionRequest::new(&host_r1, pairs, r1.clone());
        req.exhaustive_cap = cfg.absorber.exhaustive_cap;
        req.retry_budget = cfg.absorber.retry_budget;
        let sol = connect_pairs_disjoint(&host_r1, &req).map_err(|e| {
            r.fail("connect", "connecting paths through R1", format!("{} pairs x {copies} copies: {e}", routed.len()), "")
        })?;
        for (c, &j) in routed.iter().enumerate() {
            let copies_of = &sol.paths[c * copies..(c + 1) * copies];
            let keep = copies_of
                .iter()
                .find(|p| !path_edges(p).iter().any(|e| abs_edges.contains(e)));
            discarded += copies_of.iter().take_while(|p| Some(*p) != keep).count();
            match keep {
                Some(p) => connector[j] = Some(p.clone()),
                None => {
                    return Err(r.fail(
                        "connect",
                        "at most copies-1 connecting paths meet an absorber",
                        format!("pair {:?} of cycle {}", all_pairs[j].1, all_pairs[j].0),
                        "",
                    ))
                }
            }
        }
    }
    let mut r1_per_cycle: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (slot, &(i, _)) in all_pairs.iter().enumerate() {
        let p = connector[slot].as_ref().expect("every pair joined");
        r1_per_cycle[i].extend_from_slice(&p[1..p.len() - 1]);
    }
    for v in &mut r1_per_cycle {
        v.sort_unstable();
    }
    let m1 = th.m[0];
    r.cert(
        "connect",
        json!({
            "pairs": all_pairs.len(), "direct": all_pairs.len() - routed.len(), "routed": routed.len(),
            "copies": copies, "discarded": discarded,
            "leftover_pairs": leftover_pairs.iter().map(Vec::len).collect::<Vec<_>>(),
            "terminal_pairs": terminal_pairs.iter().map(Vec::len).collect::<Vec<_>>(),
            "r1_sizes": r1_per_cycle.iter().map(Vec::len).collect::<Vec<_>>(), "m1": m1,
        }),
    );
    for (i, ri) in r1_per_cycle.iter().enumerate() {
        if ri.len() > m1 || !bg.is_balanced(ri) {
            return Err(r.fail(
                "connect",
                "|R^i_1| <= m1 and balanced",
                format!("cycle {i}: |R^i_1| = {} ({:?} per side), m1 = {m1}", ri.len(), bg.side_counts(ri)),
                "",
            ));
        }
    }

    // P^i.
    let mut by_pair: Vec<HashMap<(usize, usize), Vec<usize>>> = vec![HashMap::new(); k];
    for (slot, &(i, p)) in all_pairs.iter().enumerate() {
        by_pair[i].insert(p, connector[slot].clone().expect("joined"));
    }
    let join = |i: usize, a: usize, b: usize| -> Vec<usize> {
        match by_pair[i].get(&(a, b)) {
            Some(p) => p.clone(),
            None => {
                let mut p = by_pair[i][&(b, a)].clone();
                p.reverse();
                p
            }
        }
    };
    let extend = |path: &mut Vec<usize>, seg: Vec<usize>| {
        debug_assert_eq!(path.last(), seg.first());
        path.extend_from_slice(&seg[1..]);
    };
    let mut forest_paths = Vec::with_capacity(k);
    for i in 0..k {
        let f = &forests[i];
        let virt: HashSet<(usize, usize)> = leftover_pairs[i].iter().copied().collect();
        let mut p = vec![x1];
        let mut cur = x1;
        for &o in &orders[i] {
            let (a, b, ref body) = f.items[o];
            extend(&mut p, join(i, cur, a));
            for w in body.windows(2) {
                if virt.contains(&(w[0], w[1])) {
                    extend(&mut p, join(i, w[0], w[1]));
                } else {
                    p.push(w[1]);
                }
            }
            cur = b;
        }
        extend(&mut p, join(i, cur, xs));
        let mut want: Vec<usize> = vs[i].iter().chain(&r1_per_cycle[i]).copied().collect();
        want.sort_unstable();
        let mut got = p[1..p.len() - 1].to_vec();
        got.sort_unstable();
        if let Err(e) = gg.check_path(&p) {
            return Err(r.fail("paths", "P^i is a path", format!("cycle {i}: {e}"), ""));
        }
        if got != want {
            return Err(r.fail("paths", "internal vertices of P^i = V^i ∪ R^i_1", format!("cycle {i}"), ""));
        }
        forest_paths.push(p);
    }
    r.cert(
        "paths",
        json!({ "lengths": forest_paths.iter().map(|p| p.len() - 1).collect::<Vec<_>>() }),
    );

    // K^i and absorption.
    let mut absorbed = Vec::with_capacity(k);
    for (i, ri) in r1_per_cycle.iter().enumerate() {
        let used = mask(n, ri);
        let mut rest: Vec<usize> = r1.iter().chain(r2).copied().filter(|&v| !used[v]).collect();
        rest.sort_unstable();
        let idx = pair_matching(&k_pairs, &rest).ok_or_else(|| {
            r.fail("absorb", "(l) perfect matching of K on (R1 ∪ R2) minus R^i_1", format!("cycle {i}"), rmbg_rng.label())
        })?;
        absorbed.push(idx.iter().map(|&j| k_pairs[j]).collect::<Vec<_>>());
    }
    let star = absorb_with(&grid, &asg, &absorbed).map_err(|e| r.fail("absorb", "(l) absorbing paths", e.to_string(), assign_rng.label()))?;
    r.cert(
        "absorb",
        json!({ "absorbed": absorbed.iter().map(Vec::len).collect::<Vec<_>>(), "lengths": star.iter().map(|p| p.len() - 1).collect::<Vec<_>>() }),
    );

    // Cycles.
    let mut expected: Vec<usize> = w.iter().chain(&grid.u_abs).chain(&x).chain(r1).chain(r2).copied().collect();
    expected.sort_unstable();
    let mut cycles = Vec::with_capacity(k);
    for i in 0..k {
        let mut c = forest_paths[i].clone();
        let back: Vec<usize> = star[i].iter().rev().copied().collect();
        c.extend_from_slice(&back[1..back.len() - 1]);
        let mut sorted = c.clone();
        sorted.sort_unstable();
        if sorted != expected {
            return Err(r.fail("cycles", "vertex set W ∪ U_abs ∪ X ∪ R1 ∪ R2", format!("cycle {i}"), ""));
        }
        cycles.push(c);
    }
    let mut fam = CycleFamily::new(cycles.iter().map(|c| r.lift(c)).collect());
    fam.provenance = (0..k)
        .map(|i| {
            let f = &forests[i];
            CycleProvenance {
                forest_path: r.lift(&forest_paths[i]),
                absorbing_path: r.lift(&star[i]),
                matchings: f
                    .outcome
                    .as_ref()
                    .map(|o| o.matchings.iter().map(|m| m.iter().map(|&(a, b)| edge(r.up[a], r.up[b])).collect()).collect())
                    .unwrap_or_default(),
                connectors: all_pairs
                    .iter()
                    .zip(&connector)
                    .filter(|((j, _), _)| *j == i)
                    .map(|(_, p)| r.lift(p.as_ref().expect("joined")))
                    .collect(),
                r1: r.lift_sorted(&r1_per_cycle[i]),
                absorbed: r.lift_pairs(&absorbed[i]),
                leftover_pairs: r.lift_pairs(&leftover_pairs[i]),
                terminal_pairs: r.lift_pairs(&terminal_pairs[i]),
                leftover: f.outcome.as_ref().map(|o| r.lift_sorted(&o.report.y)).unwrap_or_default(),
            }
        })
        .collect();
    debug_assert!(forests.iter().all(|f| f.layers.len() == t || f.layers.is_empty()));
    let report = verify_cycles(g, &fam, k);
    r.cert("verify", serde_json::to_value(&report).expect("serialisable"));
    if !report.ok {
        let clause = report.clause.map(|c| c.to_string()).unwrap_or_default();
        return Err(r.fail("verify", "k edge-disjoint cycles on one vertex set", clause, ""));
    }
    Ok(fam)
}
