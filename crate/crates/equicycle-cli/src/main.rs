use clap::{Args, Parser, Subcommand, ValueEnum};
use equicycle::absorb::{build_absorber_chain, build_rmbg, verify_absorber, AbsorberConfig, AbsorberGrid, RmbgConfig, RmbgVerify};
use equicycle::connect::{connect_pairs_disjoint, ConnectError, ConnectionRequest, Diagnosis};
use equicycle::expander::{
    check_expander, decompose_into_expanders, extract_expander, CheckMode, ExpanderError, ExpanderParams, ExtractOptions,
    HeuristicBudget, DEFAULT_N_EXACT,
};
use equicycle::forest::{assemble_forest, matchings_with_leftover, maximum_layer_matchings, ForestError, LayeredInstance};
use equicycle::graph::{
    balanced_partition, generate, load_graph, p_random, two_colour, write_graph, BipartiteGraph, Graph, LoadedGraph,
    SeededRng,
};
use equicycle::oracle::{brute_force_cycles, brute_force_extremal, ExtremalOutcome, OracleOutcome, SearchLimits};
use equicycle::pipeline::{
    bundled_config, bundled_graph, run_pipeline, verify_cycles, CycleFamily, Mode,
    PipelineConfig,
};
use equicycle::regularize::{regularize, RegularisationConfig, RegularizeMode};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use thiserror::Error;

const EXIT_NEGATIVE: u8 = 1;
const EXIT_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "equicycle", version, about = "Edge-disjoint cycles on a common vertex set")]
struct Cli {
    /// Directory for artifacts; without it the main result goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Every procedure is sequential; the value is recorded
    /// in the run log.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pass to a bipartite 18-almost-regular expander subgraph.
    ExtractExpander(ExtractArgs),
    /// Decide the expander property, exactly or heuristically.
    CheckExpander(CheckArgs),
    /// Near-regular subgraph by iterated random deletion.
    Regularize(RegularizeArgs),
    /// Random edge split into k parts, optionally checked.
    Decompose(DecomposeArgs),
    /// Internally vertex-disjoint paths through a connecting set.
    Connect(ConnectArgs),
    /// Robustly matchable bipartite pair graphs.
    #[command(subcommand)]
    Rmbg(RmbgCommand),
    /// Absorber grids: build and check.
    #[command(subcommand)]
    Absorbers(AbsorbersCommand),
    /// Layered matchings with leftover bounds, assembled into a linear forest.
    Forest(ForestArgs),
    /// The end-to-end pipeline.
    Run(RunArgs),
    /// Check a cycle family against a graph.
    Verify(VerifyArgs),
    /// Exhaustive search on small graphs.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Write a fixture graph.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct GraphArg {
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    g: GraphArg,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_N_EXACT)]
    n_exact: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckKind {
    Exact,
    Heuristic,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    g: GraphArg,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    epsilon: f64,
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: CheckKind,
    #[arg(long, default_value_t = DEFAULT_N_EXACT)]
    n_exact: usize,
    /// Heuristic start vertices (BFS balls and greedy growth runs each).
    #[arg(long, default_value_t = 32)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RunMode {
    Desk,
    Paper,
}

#[derive(Debug, Args)]
struct RegularizeArgs {
    #[command(flatten)]
    g: GraphArg,
    #[arg(long, default_value_t = 18.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "desk")]
    mode: RunMode,
    /// Per-step ε in desk mode.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// `C` of paper mode.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Lower degree bound; defaults to centring on the observed degrees.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Each vertex is tracked with this probability.
    #[arg(long, default_value_t = 0.5)]
    tracked_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecomposeCheck {
    None,
    Exact,
    Heuristic,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    g: GraphArg,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    epsilon: f64,
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "none")]
    verify: DecomposeCheck,
    #[arg(long, default_value_t = DEFAULT_N_EXACT)]
    n_exact: usize,
    #[arg(long, default_value_t = 16)]
    attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ConnectArgs {
    #[command(flatten)]
    g: GraphArg,
    /// JSON list of `[u, v]` terminal pairs.
    #[arg(long)]
    pairs: PathBuf,
    /// JSON list of vertices of the connecting set.
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    exhaustive_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RmbgCheck {
    Exact,
    Sampled,
}

#[derive(Debug, Subcommand)]
enum RmbgCommand {
    /// Build a robustly matchable bipartite graph.
    Build {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "exact")]
        verify: RmbgCheck,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        /// Random matchings per core.
        #[arg(long)]
        matchings: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
enum AbsorbersCommand {
    /// Build the k × |K| absorber grid.
    Build {
        #[command(flatten)]
        g: GraphArg,
        /// JSON list of `[a, b]` pairs.
        #[arg(long)]
        pairs: PathBuf,
        /// JSON list `x_1 … x_{s+1}`.
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        u1: PathBuf,
        #[arg(long)]
        u2: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Check every absorber of a grid file.
    Verify {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        grid: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    ColourClass,
    Maximum,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[command(flatten)]
    g: GraphArg,
    /// JSON list of layers; without it all vertices are split into `--t`
    /// balanced layers.
    #[arg(long)]
    layers: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    t: usize,
    #[arg(long, value_enum, default_value = "colour-class")]
    rule: Rule,
    #[arg(long, default_value_t = 64)]
    attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Input graph; omit with `--bundled`.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value = "desk")]
    mode: RunMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON pipeline configuration; `--k`, `--mode` and `--seed` override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the bundled graph and its tuned configuration.
    #[arg(long)]
    bundled: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    g: GraphArg,
    /// JSON cycle family.
    #[arg(long)]
    cycles: PathBuf,
    #[arg(long)]
    k: usize,
}

#[derive(Debug, Args)]
struct Limits {
    #[arg(long)]
    max_subset: Option<usize>,
    #[arg(long, default_value_t = 200_000_000)]
    node_budget: u64,
    #[arg(long, default_value_t = 60)]
    time_budget_secs: u64,
}

impl Limits {
    fn get(&self) -> SearchLimits {
        SearchLimits {
            max_subset: self.max_subset.unwrap_or(usize::MAX),
            node_budget: self.node_budget,
            time_budget: Duration::from_secs(self.time_budget_secs),
        }
    }
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Search for k edge-disjoint cycles on one vertex set.
    Cycles {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        limits: Limits,
    },
    /// Most edges of an n-vertex graph without such a family.
    Extremal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        limits: Limits,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Output graph file; stdout when absent.
    #[arg(long, global = true)]
    to: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// `K_{4,4}` with its bipartition.
    K44,
    /// `K_n`.
    Complete {
        #[arg(long)]
        n: usize,
    },
    /// `C_n`.
    Cycle {
        #[arg(long)]
        n: usize,
    },
    /// `t`-blowup of the cycle `C_n`.
    Blowup {
        #[arg(long)]
        cycle: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
    },
    /// Random bipartite graph with `half` vertices per side and degrees near `d`.
    NearRegular {
        #[arg(long)]
        half: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Erdős–Rényi `G(n, p)`.
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The graph of the bundled pipeline scenario.
    Bundled,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) | CliError::Write { .. } => EXIT_FAILURE,
        }
    }
}

/// Main JSON result plus extra files, and the exit code it implies.
struct Outcome {
    name: &'static str,
    result: Value,
    files: Vec<(String, String)>,
    code: u8,
}

impl Outcome {
    fn new(name: &'static str, result: Value, code: u8) -> Self {
        Outcome {
            name,
            result,
            files: Vec::new(),
            code,
        }
    }

    fn with_file(mut self, name: impl Into<String>, body: String) -> Self {
        self.files.push((name.into(), body));
        self
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn load(p: &Path) -> Result<LoadedGraph, CliError> {
    load_graph(p).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn load_plain(p: &Path) -> Result<Graph, CliError> {
    Ok(load(p)?.graph().clone())
}

fn load_bipartite(p: &Path) -> Result<BipartiteGraph, CliError> {
    match load(p)? {
        LoadedGraph::Bipartite(bg) => Ok(bg),
        LoadedGraph::Plain(g) => {
            let side = two_colour(&g).ok_or_else(|| usage(format!("{}: graph is not bipartite", p.display())))?;
            BipartiteGraph::new(g, side).map_err(usage)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn to_value(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn params(epsilon: f64, s: f64) -> Result<ExpanderParams, CliError> {
    ExpanderParams::new(epsilon, s).map_err(usage)
}

fn extract(a: &ExtractArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let opts = ExtractOptions {
        n_exact: a.n_exact,
        ..ExtractOptions::default()
    };
    let x = extract_expander(&g, a.epsilon, &opts).map_err(|e| match e {
        ExpanderError::ExtractEpsilon(_) => usage(e),
        _ => CliError::Failure(e.to_string()),
    })?;
    let h = x.graph.graph();
    let result = json!({
        "n": h.n(), "m": h.m(), "s": x.s, "epsilon": x.epsilon, "d1": x.d1,
        "verdict": x.verdict, "trace": x.trace, "to_parent": x.to_parent,
    });
    Ok(Outcome::new("extraction", result, 0).with_file("expander.g", write_graph(h, Some(x.graph.sides()))))
}

fn check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let p = params(a.epsilon, a.s)?;
    let mode = match a.mode {
        CheckKind::Exact => CheckMode::Exact,
        CheckKind::Heuristic => CheckMode::Heuristic(HeuristicBudget {
            starts: a.budget,
            local_rounds: a.budget,
            seed: a.seed,
        }),
    };
    match check_expander(&g, &p, &mode, a.n_exact) {
        Ok(v) => {
            let code = if v.is_certificate() { 0 } else { EXIT_NEGATIVE };
            Ok(Outcome::new("verdict", to_value(&v), code))
        }
        Err(e @ ExpanderError::TooLargeForExact { .. }) => Ok(Outcome::new("verdict", json!({ "error": e.to_string() }), EXIT_FAILURE)),
        Err(e) => Err(usage(e)),
    }
}

fn regularise(a: &RegularizeArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let cfg = RegularisationConfig {
        lambda: a.lambda,
        mode: match a.mode {
            RunMode::Desk => RegularizeMode::Desk { epsilon: a.epsilon },
            RunMode::Paper => RegularizeMode::Paper { c: a.c },
        },
        d: a.d,
        max_steps: a.steps,
        max_retries: 32,
    };
    let all: Vec<usize> = (0..g.n()).collect();
    let rng = SeededRng::new(a.seed, "regularize");
    let tracked = p_random(&all, a.tracked_p, &mut rng.child("tracked")).map_err(usage)?;
    let r = regularize(&g, &cfg, &tracked, &rng).map_err(|e| CliError::Failure(e.to_string()))?;
    let result = json!({
        "d_prime": r.d_prime, "gamma": r.gamma, "steps": r.steps, "epsilon": r.epsilon,
        "spread_before": r.spread_before, "spread_after": r.spread_after, "stop": r.stop, "vacuous": r.vacuous,
        "tracked": tracked.len(), "survivors": r.survivors, "log": r.log, "to_parent": r.graph.to_parent,
    });
    Ok(Outcome::new("regularisation", result, 0).with_file("regularized.g", write_graph(&r.graph.graph, None)))
}

fn decompose(a: &DecomposeArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let p = params(a.epsilon, a.s)?;
    let verify = match a.verify {
        DecomposeCheck::None => None,
        DecomposeCheck::Exact => Some((CheckMode::Exact, a.n_exact)),
        DecomposeCheck::Heuristic => Some((
            CheckMode::Heuristic(HeuristicBudget {
                seed: a.seed,
                ..HeuristicBudget::default()
            }),
            a.n_exact,
        )),
    };
    let d = decompose_into_expanders(&g, a.k, &p, &SeededRng::new(a.seed, "decompose"), verify, a.attempts).map_err(|e| match e {
        ExpanderError::ZeroParts | ExpanderError::TooLargeForExact { .. } => usage(e),
        _ => CliError::Failure(e.to_string()),
    })?;
    let result = json!({
        "weakened": d.weakened, "attempts": d.attempts, "verdicts": d.verdicts,
        "edges": d.parts.iter().map(Graph::m).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new("decomposition", result, 0);
    for (i, part) in d.parts.iter().enumerate() {
        out = out.with_file(format!("part{i}.g"), write_graph(part, None));
    }
    Ok(out)
}

fn connect(a: &ConnectArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let pairs: Vec<(usize, usize)> = read_json(&a.pairs)?;
    let set: Vec<usize> = read_json(&a.set)?;
    let mut req = ConnectionRequest::new(&g, pairs, set);
    if let Some(l) = a.max_len {
        req.max_len = l;
    }
    if let Some(c) = a.exhaustive_cap {
        req.exhaustive_cap = c;
    }
    match connect_pairs_disjoint(&g, &req) {
        Ok(sol) => Ok(Outcome::new("solution", json!({ "request": req, "solution": sol }), 0)),
        Err(ConnectError::Unsolved(f)) => {
            let code = match f.diagnosis {
                Diagnosis::Isolated { .. } | Diagnosis::NoDisjointSolution { .. } => EXIT_NEGATIVE,
                Diagnosis::Contention { .. } => EXIT_FAILURE,
            };
            Ok(Outcome::new("solution", json!({ "request": req, "failure": f }), code))
        }
        Err(ConnectError::NoPath { bound }) => {
            Ok(Outcome::new("solution", json!({ "request": req, "failure": { "no_path_within": bound } }), EXIT_NEGATIVE))
        }
        Err(e) => Err(usage(e)),
    }
}

fn rmbg(c: &RmbgCommand) -> Result<Outcome, CliError> {
    let RmbgCommand::Build {
        m,
        verify,
        trials,
        matchings,
        seed,
    } = c;
    let mut cfg = RmbgConfig::default();
    if let Some(x) = matchings {
        cfg.matchings = *x;
    }
    let mode = match verify {
        RmbgCheck::Exact => RmbgVerify::Exact,
        RmbgCheck::Sampled => RmbgVerify::Sampled { trials: *trials },
    };
    let r = build_rmbg(*m, &SeededRng::new(*seed, "rmbg"), mode, &cfg).map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(Outcome::new("rmbg", to_value(&r), 0))
}

fn absorbers(c: &AbsorbersCommand) -> Result<Outcome, CliError> {
    match c {
        AbsorbersCommand::Build { g, pairs, x, u1, u2, k } => {
            let bg = load_bipartite(&g.graph)?;
            let pairs: Vec<(usize, usize)> = read_json(pairs)?;
            let (x, u1, u2): (Vec<usize>, Vec<usize>, Vec<usize>) = (read_json(x)?, read_json(u1)?, read_json(u2)?);
            let grid = build_absorber_chain(&bg, &pairs, &x, &u1, &u2, *k, &AbsorberConfig::default())
                .map_err(|e| CliError::Failure(e.to_string()))?;
            Ok(Outcome::new("grid", to_value(&grid), 0))
        }
        AbsorbersCommand::Verify { g, grid } => {
            let g = load_plain(&g.graph)?;
            let grid: AbsorberGrid = read_json(grid)?;
            let mut failures = Vec::new();
            for (i, row) in grid.absorbers.iter().enumerate() {
                for (j, a) in row.iter().enumerate() {
                    if let Err(clause) = verify_absorber(&g, a) {
                        failures.push(json!({ "cycle": i, "pair": j, "clause": clause.to_string() }));
                    }
                }
            }
            let code = if failures.is_empty() { 0 } else { EXIT_NEGATIVE };
            Ok(Outcome::new("absorber-check", json!({ "ok": failures.is_empty(), "failures": failures }), code))
        }
    }
}

fn forest(a: &ForestArgs) -> Result<Outcome, CliError> {
    let bg = load_bipartite(&a.g.graph)?;
    let g = bg.graph();
    let rng = SeededRng::new(a.seed, "forest");
    let layers: Vec<Vec<usize>> = match &a.layers {
        Some(p) => read_json(p)?,
        None => {
            let all: Vec<usize> = (0..g.n()).collect();
            balanced_partition(&all, bg.sides(), a.t, &mut rng.child("layers")).map_err(usage)?.0
        }
    };
    let tracked = (0..g.n()).map(|v| g.neighbours(v).to_vec()).collect();
    let inst = LayeredInstance::new(g, layers.clone(), tracked).map_err(usage)?;
    let outcome = match a.rule {
        Rule::ColourClass => match matchings_with_leftover(g, &inst, &rng.child("matchings"), a.attempts) {
            Ok(o) => o,
            Err(ForestError::AttemptsExhausted { attempts, best }) => {
                let result = json!({ "attempts": attempts, "best": best });
                return Ok(Outcome::new("forest", result, EXIT_FAILURE));
            }
            Err(e) => return Err(CliError::Failure(e.to_string())),
        },
        Rule::Maximum => maximum_layer_matchings(g, &inst),
    };
    let forest = assemble_forest(bg.sides(), &layers, &outcome.matchings).map_err(|e| CliError::Failure(e.to_string()))?;
    let code = if outcome.report.holds() { 0 } else { EXIT_FAILURE };
    Ok(Outcome::new("forest", json!({ "layers": layers, "outcome": outcome, "forest": forest }), code))
}

fn run(a: &RunArgs) -> Result<Outcome, CliError> {
    let (g, mut cfg) = if a.bundled {
        if a.graph.is_some() {
            return Err(usage("--bundled and --graph are exclusive"));
        }
        (bundled_graph().graph().clone(), bundled_config(a.k, a.seed))
    } else {
        let path = a.graph.as_ref().ok_or_else(|| usage("--graph is required without --bundled"))?;
        let g = load_plain(path)?;
        let cfg = match &a.config {
            Some(p) => read_json(p)?,
            None => PipelineConfig::desk(a.k, a.seed),
        };
        (g, cfg)
    };
    cfg.k = a.k;
    cfg.seed = a.seed;
    cfg.mode = match a.mode {
        RunMode::Desk => Mode::Desk,
        RunMode::Paper => Mode::Paper,
    };
    cfg.validate().map_err(usage)?;
    let run = run_pipeline(&g, &cfg);
    let mut out = match &run.outcome {
        Ok(fam) => Outcome::new("cycles", to_value(fam), 0),
        Err(f) => Outcome::new("failure", to_value(f), EXIT_FAILURE),
    };
    for (i, c) in run.certificates.iter().enumerate() {
        out = out.with_file(format!("certificates/{i:02}-{}.json", c.stage.replace('/', "-")), pretty(&c.data));
    }
    Ok(out.with_file("plan.json", pretty(&run.plan)).with_file("config.json", pretty(&cfg)))
}

fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let g = load_plain(&a.g.graph)?;
    let fam: CycleFamily = read_json(&a.cycles)?;
    let r = verify_cycles(&g, &fam, a.k);
    let code = if r.ok { 0 } else { EXIT_NEGATIVE };
    Ok(Outcome::new("report", to_value(&r), code))
}

fn oracle(c: &OracleCommand) -> Result<Outcome, CliError> {
    match c {
        OracleCommand::Cycles { g, k, limits } => {
            let g = load_plain(&g.graph)?;
            let o = brute_force_cycles(&g, *k, &limits.get()).map_err(usage)?;
            let code = match o {
                OracleOutcome::Found { .. } => 0,
                OracleOutcome::None { .. } => EXIT_NEGATIVE,
                OracleOutcome::BudgetExceeded { .. } => EXIT_FAILURE,
            };
            Ok(Outcome::new("oracle", to_value(&o), code))
        }
        OracleCommand::Extremal { n, k, limits } => {
            let o = brute_force_extremal(*n, *k, &limits.get()).map_err(usage)?;
            let code = match o {
                ExtremalOutcome::Found { .. } => 0,
                ExtremalOutcome::BudgetExceeded { .. } => EXIT_FAILURE,
            };
            Ok(Outcome::new("extremal", to_value(&o), code))
        }
    }
}

fn gen(a: &GenArgs) -> Result<Outcome, CliError> {
    let text = match &a.kind {
        GenKind::K44 => {
            let bg = generate::complete_bipartite(4, 4);
            write_graph(bg.graph(), Some(bg.sides()))
        }
        GenKind::Complete { n } => write_graph(&generate::complete(*n), None),
        GenKind::Cycle { n } => {
            if *n < 3 {
                return Err(usage("a cycle needs at least 3 vertices"));
            }
            write_graph(&generate::cycle(*n), None)
        }
        GenKind::Blowup { cycle, t } => {
            if *cycle < 3 {
                return Err(usage("a cycle needs at least 3 vertices"));
            }
            write_graph(&generate::blowup(&generate::cycle(*cycle), *t), None)
        }
        GenKind::NearRegular { half, d, seed } => {
            if d > half {
                return Err(usage("degree exceeds the side size"));
            }
            let bg = generate::near_regular_bipartite(*half, *d, &mut SeededRng::new(*seed, "near-regular"));
            write_graph(bg.graph(), Some(bg.sides()))
        }
        GenKind::Gnp { n, p, seed } => {
            if !(0.0..=1.0).contains(p) {
                return Err(usage("p must lie in [0, 1]"));
            }
            write_graph(&generate::gnp(*n, *p, &mut SeededRng::new(*seed, "gnp")), None)
        }
        GenKind::Bundled => {
            let bg = bundled_graph();
            write_graph(bg.graph(), Some(bg.sides()))
        }
    };
    let mut out = Outcome::new("graph", Value::Null, 0);
    match &a.to {
        Some(p) => std::fs::write(p, &text).map_err(|source| CliError::Write { path: p.clone(), source })?,
        None => out = out.with_file("-", text),
    }
    Ok(out)
}

fn seed_of(c: &Command) -> Option<u64> {
    match c {
        Command::CheckExpander(a) => Some(a.seed),
        Command::Regularize(a) => Some(a.seed),
        Command::Decompose(a) => Some(a.seed),
        Command::Rmbg(RmbgCommand::Build { seed, .. }) => Some(*seed),
        Command::Forest(a) => Some(a.seed),
        Command::Run(a) => Some(a.seed),
        Command::Gen(GenArgs {
            kind: GenKind::NearRegular { seed, .. } | GenKind::Gnp { seed, .. },
            ..
        }) => Some(*seed),
        _ => None,
    }
}

fn dispatch(c: &Command) -> Result<Outcome, CliError> {
    match c {
        Command::ExtractExpander(a) => extract(a),
        Command::CheckExpander(a) => check(a),
        Command::Regularize(a) => regularise(a),
        Command::Decompose(a) => decompose(a),
        Command::Connect(a) => connect(a),
        Command::Rmbg(c) => rmbg(c),
        Command::Absorbers(c) => absorbers(c),
        Command::Forest(a) => forest(a),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Oracle(c) => oracle(c),
        Command::Gen(a) => gen(a),
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    let fail = |source| CliError::Write { path: path.clone(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(fail)?;
    }
    std::fs::write(&path, body).map_err(fail)
}

fn emit(cli: &Cli, out: Outcome) -> Result<u8, CliError> {
    let config = format!("{:?}", cli.command);
    let hash: String = Sha256::digest(config.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let log = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed_of(&cli.command),
        "config_hash": hash,
        "threads": cli.threads,
        "exit": out.code,
    });
    eprintln!("equicycle {} seed={} config={}", env!("CARGO_PKG_VERSION"), log["seed"], &hash[..16]);
    match &cli.out {
        Some(dir) => {
            write(dir, "log.json", &pretty(&log))?;
            if !out.result.is_null() {
                write(dir, &format!("{}.json", out.name), &pretty(&out.result))?;
            }
            for (name, body) in &out.files {
                if name == "-" {
                    print!("{body}");
                } else {
                    write(dir, name, body)?;
                }
            }
        }
        None => {
            for (name, body) in &out.files {
                if name == "-" {
                    print!("{body}");
                }
            }
            if !out.result.is_null() {
                print!("{}", pretty(&out.result));
            }
        }
    }
    Ok(out.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command).and_then(|out| emit(&cli, out)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
