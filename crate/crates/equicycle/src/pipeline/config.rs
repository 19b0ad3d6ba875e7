use crate::absorb::{AbsorberConfig, RmbgConfig};
use crate::expander::DEFAULT_N_EXACT;
use crate::graph::log2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Set sizes and thresholds from the asymptotic formulas; every
    /// hypothesis is asserted.
    Paper,
    /// Explicit sizes; failing hypotheses are recorded as waived.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingRule {
    /// A uniformly random colour class of a `Δ`-edge-colouring, redrawn until
    /// the leftover bounds hold.
    ColourClass,
    /// A maximum matching per gap.
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JunctionOrder {
    /// Forest paths in order of their start vertex.
    ById,
    /// Greedy: next path is one whose start is adjacent to the current end.
    Adjacent,
}

/// `m = coef · n / d^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeLaw {
    pub coef: f64,
    pub exp: f64,
}

impl SizeLaw {
    pub fn eval(&self, n: f64, d: f64) -> f64 {
        self.coef * n / d.powf(self.exp)
    }
}

/// Asymptotic size and threshold laws used in paper mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    /// `m_1 … m_5` for `R_1, R_2, X, U_1, U_2`.
    pub m: [SizeLaw; 5],
    /// `D, D_1, D_2 = d^e (log n)^10`.
    pub big_d: [f64; 3],
    /// `t = d^e`.
    pub t: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        let law = |coef, exp| SizeLaw { coef, exp };
        Exponents {
            m: [
                law(2.0, 0.01),
                law(5.0, 0.01),
                law(1000.0, 0.01),
                law(1.0, 0.001),
                law(1.0, 0.0001),
            ],
            big_d: [0.9, 0.99, 0.999],
            t: 0.2,
        }
    }
}

/// Per-side sizes in desk mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskSizes {
    /// `m` of the robustly matchable graph; `R_1` gets `2m` and `R_2` gets
    /// `5m` vertices per side.
    pub rmbg_m: usize,
    /// Per side; `None` sizes `X` from the largest possible `|K|`.
    pub x: Option<usize>,
    pub u1: usize,
    pub u2: usize,
    /// Layers per cycle.
    pub layers: usize,
}

impl Default for DeskSizes {
    fn default() -> Self {
        DeskSizes {
            rmbg_m: 2,
            x: None,
            u1: 250,
            u2: 300,
            layers: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retries {
    pub sets: usize,
    pub matchings: usize,
}

impl Default for Retries {
    fn default() -> Self {
        Retries { sets: 64, matchings: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub mode: Mode,
    pub epsilon: f64,
    pub seed: u64,
    pub n_exact: usize,
    /// `d ≥ (log n)^C`.
    pub c_exponent: f64,
    /// `C` of the caps `d_G(v, S_i) ≤ C d m_i / n`.
    pub cap_constant: f64,
    /// The tracked set is `1/C_0`-random; `C_0` also enters the draw
    /// probabilities of `R_i` and `T_i`.
    pub c0: f64,
    pub exponents: Exponents,
    pub sizes: DeskSizes,
    /// Per-step `ε` of the desk regularisation.
    pub regularize_epsilon: f64,
    pub regularize_steps: usize,
    pub rmbg: RmbgConfig,
    pub rmbg_exact: bool,
    pub absorber: AbsorberConfig,
    pub matching: MatchingRule,
    pub junction_order: JunctionOrder,
    /// Greedy walks tried by the adjacent junction order.
    pub junction_trials: usize,
    /// Join adjacent connector pairs by their edge instead of through `R_1`.
    pub direct_connectors: bool,
    /// Copies of each connector pair routed through `R_1`.
    pub connector_copies: usize,
    /// Remove absorber edges from the connector host graph.
    pub prune_absorber_edges: bool,
    /// Random queries per set for the empirical connecting check.
    pub connect_queries: usize,
    pub retries: Retries,
}

impl PipelineConfig {
    pub fn desk(k: usize, seed: u64) -> Self {
        PipelineConfig {
            k,
            mode: Mode::Desk,
            epsilon: 1.0 / 32.0,
            seed,
            n_exact: DEFAULT_N_EXACT,
            c_exponent: 100.0,
            cap_constant: 8.0,
            c0: 2.0,
            exponents: Exponents::default(),
            sizes: DeskSizes::default(),
            regularize_epsilon: 0.01,
            regularize_steps: 8,
            rmbg: RmbgConfig::default(),
            rmbg_exact: true,
            absorber: AbsorberConfig::default(),
            matching: MatchingRule::ColourClass,
            junction_order: JunctionOrder::ById,
            junction_trials: 64,
            direct_connectors: false,
            connector_copies: 5,
            prune_absorber_edges: false,
            connect_queries: 4,
            retries: Retries::default(),
        }
    }

    pub fn paper(k: usize, seed: u64) -> Self {
        PipelineConfig {
            mode: Mode::Paper,
            ..PipelineConfig::desk(k, seed)
        }
    }

    /// Configuration problems that make a run meaningless.
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.125) {
            return Err(format!("epsilon must lie in (0, 1/8), got {}", self.epsilon));
        }
        if self.mode == Mode::Desk {
            if self.sizes.rmbg_m == 0 {
                return Err("rmbg_m must be positive".into());
            }
            if self.sizes.layers < 2 {
                return Err("need at least two layers".into());
            }
        }
        if self.connector_copies == 0 {
            return Err("connector_copies must be positive".into());
        }
        if !(self.c0 >= 1.0) {
            return Err(format!("c0 must be at least 1, got {}", self.c0));
        }
        Ok(())
    }
}

/// Upper bound on `|K|` for the robustly matchable graph with parameter `m`
/// built from `c` random matchings per core.
pub fn rmbg_pair_bound(m: usize, c: usize) -> usize {
    2 * 3 * m * c.min(4 * m) + 2 * m + 1
}

/// One hypothesis with its observed and required values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub observed: f64,
    pub required: f64,
    pub holds: bool,
}

/// Sizes and thresholds resolved for a graph with `n` vertices and average
/// degree `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub n: usize,
    pub d: f64,
    /// Per-side sizes `m_1 … m_5`.
    pub m: [usize; 5],
    pub rmbg_m: usize,
    pub t: usize,
    /// `D, D_1, D_2`.
    pub big_d: [f64; 3],
    pub hypotheses: Vec<Hypothesis>,
}

impl Thresholds {
    pub fn resolve(cfg: &PipelineConfig, n: usize, d: f64, s: f64) -> Thresholds {
        let (nf, l) = (n as f64, log2(n as f64));
        let big_d = cfg.exponents.big_d.map(|e| d.powf(e) * l.powi(10));
        let (m, rmbg_m, t) = match cfg.mode {
            Mode::Paper => {
                let m = cfg.exponents.m.map(|law| law.eval(nf, d).floor() as usize);
                let rmbg_m = (nf / d.powf(0.01)).floor() as usize;
                (m, rmbg_m, d.powf(cfg.exponents.t).floor().max(2.0) as usize)
            }
            Mode::Desk => {
                let z = &cfg.sizes;
                let x = z.x.unwrap_or_else(|| rmbg_pair_bound(z.rmbg_m, cfg.rmbg.matchings).div_ceil(2) + 1);
                ([2 * z.rmbg_m, 5 * z.rmbg_m, x, z.u1, z.u2], z.rmbg_m, z.layers)
            }
        };
        let mut hypotheses = Vec::new();
        let mut check = |name: &str, observed: f64, required: f64, holds: bool| {
            hypotheses.push(Hypothesis {
                name: name.into(),
                observed,
                required,
                holds,
            })
        };
        check("d >= (log n)^C", d, l.powf(cfg.c_exponent), d >= l.powf(cfg.c_exponent));
        check("s >= d/(log n)^2", s, d / (l * l), s + 1e-9 >= d / (l * l));
        let lo = nf / d.powf(0.1);
        let hi = nf / (5.0 * l);
        for (i, &mi) in m.iter().enumerate() {
            check(&format!("m{} > n/d^(1/10)", i + 1), mi as f64, lo, mi as f64 > lo);
            check(&format!("m{} < n/(t log n)", i + 1), mi as f64, hi, (mi as f64) < hi);
        }
        let total: usize = 2 * m.iter().sum::<usize>();
        check("sum of set sizes <= n", total as f64, nf, total <= n);
        Thresholds {
            n,
            d,
            m,
            rmbg_m,
            t,
            big_d,
            hypotheses,
        }
    }

    pub fn failed(&self) -> Vec<&Hypothesis> {
        self.hypotheses.iter().filter(|h| !h.holds).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_sizes_follow_rmbg() {
        let cfg = PipelineConfig::desk(2, 0);
        let th = Thresholds::resolve(&cfg, 2000, 400.0, 400.0 / 121.0);
        assert_eq!(&th.m[..2], &[4, 10]);
        assert_eq!(th.m[2], rmbg_pair_bound(2, 60).div_ceil(2) + 1);
        assert_eq!(th.t, 10);
        assert!(!th.failed().is_empty());
    }

    #[test]
    fn asymptotic_laws() {
        let cfg = PipelineConfig::paper(2, 0);
        let th = Thresholds::resolve(&cfg, 1 << 20, 1e6, 1e6 / 400.0);
        let d: f64 = 1e6;
        assert_eq!(th.m[0], (2.0 * (1u64 << 20) as f64 / d.powf(0.01)).floor() as usize);
        assert_eq!(th.t, 15);
        assert!(th.failed().iter().any(|h| h.name == "d >= (log n)^C"));
    }

    #[test]
    fn pair_bound_covers_complete_cores() {
        // m = 1: cores are at most K_{3,4}, so |K| <= 2*12 + 2 + 1.
        assert_eq!(rmbg_pair_bound(1, 60), 27);
        assert_eq!(rmbg_pair_bound(2, 3), 2 * 18 + 5);
    }
}
