//! Robustly matchable bipartite pair graphs.
//!
//! The core is a random bipartite graph between `X` (`3m`) and `Y ∪ Z`
//! (`2m` each) checked to have a perfect matching between `X` and `Y ∪ Z'`
//! for every `m`-subset `Z'` of `Z`. Two cores are glued with a perfect
//! matching between their `Z` sides, plus one extra edge if needed for odd
//! parity.
//!
//! Local ids: `A_1 = 0..2m`, `A_2 = 2m..7m`, `B_1 = 7m..9m`, `B_2 = 9m..14m`.

use crate::expander::next_combination;
use crate::graph::{max_bipartite_matching, SeededRng};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmbgError {
    #[error("m must be positive")]
    ZeroM,
    #[error("{matchings} matchings would exceed degree 100")]
    TooManyMatchings { matchings: usize },
    #[error("no robust core found in {attempts} attempts")]
    CoreFailed { attempts: usize },
    #[error("combined graph fails for A1' = {a1:?}, B1' = {b1:?}")]
    CombinedFailed { a1: Vec<usize>, b1: Vec<usize> },
    #[error("maximum degree {0} exceeds 102")]
    Degree(usize),
    #[error("embedding sizes do not match 2m/5m")]
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RmbgVerify {
    /// Enumerate every subset when the count is within the cap, otherwise
    /// fall back to sampling.
    Exact,
    Sampled { trials: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmbgConfig {
    /// Random matchings per core.
    pub matchings: usize,
    pub exhaustive_cap: usize,
    /// Trials when an exact check falls back to sampling.
    pub fallback_trials: usize,
    pub attempts: usize,
}

impl Default for RmbgConfig {
    fn default() -> Self {
        RmbgConfig {
            matchings: 60,
            exhaustive_cap: 200_000,
            fallback_trials: 2000,
            attempts: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmbgVerification {
    pub mode: RmbgVerify,
    /// Every admissible `(A'_1, B'_1)` was checked.
    pub exhaustive: bool,
    pub checked: usize,
    pub core_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rmbg {
    pub m: usize,
    /// Edges `(a, b)` with `a < 7m ≤ b`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub max_degree: usize,
    pub verification: RmbgVerification,
}

impl Rmbg {
    pub fn a1(&self) -> std::ops::Range<usize> {
        0..2 * self.m
    }
    pub fn a2(&self) -> std::ops::Range<usize> {
        2 * self.m..7 * self.m
    }
    pub fn b1(&self) -> std::ops::Range<usize> {
        7 * self.m..9 * self.m
    }
    pub fn b2(&self) -> std::ops::Range<usize> {
        9 * self.m..14 * self.m
    }

    /// Relabel onto host vertices, `A_1, A_2, B_1, B_2` in order.
    pub fn embed(&self, a1: &[usize], a2: &[usize], b1: &[usize], b2: &[usize]) -> Result<Vec<(usize, usize)>, RmbgError> {
        let m = self.m;
        if a1.len() != 2 * m || b1.len() != 2 * m || a2.len() != 5 * m || b2.len() != 5 * m {
            return Err(RmbgError::Embedding);
        }
        let map: Vec<usize> = a1.iter().chain(a2).chain(b1).chain(b2).copied().collect();
        let mut out: Vec<(usize, usize)> = self.pairs.iter().map(|&(a, b)| (map[a], map[b])).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Is there a perfect matching between `A'_1 ∪ A_2` and `B'_1 ∪ B_2`?
    pub fn matches(&self, a1: &[usize], b1: &[usize]) -> bool {
        let mut keep: Vec<usize> = a1.iter().chain(b1).copied().collect();
        keep.extend(self.a2());
        keep.extend(self.b2());
        pair_matching(&self.pairs, &keep).is_some()
    }
}

/// Indices of pairs forming a perfect matching of exactly `vertices`, using
/// only pairs inside it.
pub fn pair_matching(pairs: &[(usize, usize)], vertices: &[usize]) -> Option<Vec<usize>> {
    let left: Vec<usize> = {
        let firsts: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
        vertices.iter().copied().filter(|v| firsts.contains(v)).collect()
    };
    let keep: BTreeSet<usize> = vertices.iter().copied().collect();
    let right: Vec<usize> = keep.iter().copied().filter(|v| !left.contains(v)).collect();
    if left.len() != right.len() {
        return None;
    }
    let li: HashMap<usize, usize> = left.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let ri: HashMap<usize, usize> = right.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); left.len()];
    let mut which = HashMap::new();
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        if let (Some(&i), Some(&j)) = (li.get(&a), ri.get(&b)) {
            adj[i].push(j);
            which.entry((i, j)).or_insert(idx);
        }
    }
    let m = max_bipartite_matching(right.len(), &adj);
    if !m.is_left_perfect() {
        return None;
    }
    let mut out: Vec<usize> = m
        .left
        .iter()
        .enumerate()
        .map(|(i, r)| which[&(i, r.expect("perfect"))])
        .collect();
    out.sort_unstable();
    Some(out)
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Adjacency from `X = 0..3m` into `Y = 0..2m` and `Z = 2m..4m`.
fn random_core(m: usize, matchings: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); 3 * m];
    let mut targets: Vec<usize> = (0..4 * m).collect();
    for _ in 0..matchings {
        targets.shuffle(rng);
        for x in 0..3 * m {
            adj[x].insert(targets[x]);
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

fn core_matches(m: usize, adj: &[Vec<usize>], z_prime: &[usize]) -> bool {
    // Right side: Y = 0..2m, then Z' in order.
    let mut index = vec![usize::MAX; 4 * m];
    for (i, r) in index.iter_mut().enumerate().take(2 * m) {
        *r = i;
    }
    for (i, &z) in z_prime.iter().enumerate() {
        index[2 * m + z] = 2 * m + i;
    }
    let local: Vec<Vec<usize>> = adj
        .iter()
        .map(|ns| ns.iter().map(|&w| index[w]).filter(|&w| w != usize::MAX).collect())
        .collect();
    max_bipartite_matching(3 * m, &local).is_left_perfect()
}

/// Check the core against `m`-subsets of `Z`; returns whether the check
/// was exhaustive.
fn verify_core(m: usize, adj: &[Vec<usize>], mode: RmbgVerify, cfg: &RmbgConfig, rng: &mut SeededRng) -> Option<bool> {
    let total = binom(2 * m, m);
    let trials = match mode {
        RmbgVerify::Exact if total <= cfg.exhaustive_cap => {
            let mut idx: Vec<usize> = (0..m).collect();
            loop {
                if !core_matches(m, adj, &idx) {
                    return None;
                }
                if !next_combination(&mut idx, 2 * m) {
                    return Some(true);
                }
            }
        }
        RmbgVerify::Exact => cfg.fallback_trials,
        RmbgVerify::Sampled { trials } => trials,
    };
    let all: Vec<usize> = (0..2 * m).collect();
    for _ in 0..trials {
        let mut z: Vec<usize> = all.choose_multiple(rng, m).copied().collect();
        z.sort_unstable();
        if !core_matches(m, adj, &z) {
            return None;
        }
    }
    Some(false)
}

fn robust_core(m: usize, mode: RmbgVerify, cfg: &RmbgConfig, rng: &SeededRng) -> Result<(Vec<Vec<usize>>, usize, bool), RmbgError> {
    for a in 0..cfg.attempts.max(1) {
        let mut r = rng.child(&format!("attempt{a}"));
        let adj = random_core(m, cfg.matchings, &mut r);
        if let Some(exhaustive) = verify_core(m, &adj, mode, cfg, &mut r) {
            return Ok((adj, a + 1, exhaustive));
        }
    }
    Err(RmbgError::CoreFailed { attempts: cfg.attempts.max(1) })
}

/// Build two robust cores, glue them and check the combined property over
/// all admissible `(A'_1, B'_1)` (or a sample when there are too many).
pub fn build_rmbg(m: usize, rng: &SeededRng, verify: RmbgVerify, cfg: &RmbgConfig) -> Result<Rmbg, RmbgError> {
    if m == 0 {
        return Err(RmbgError::ZeroM);
    }
    if cfg.matchings > 100 {
        return Err(RmbgError::TooManyMatchings { matchings: cfg.matchings });
    }
    let (h1, t1, e1) = robust_core(m, verify, cfg, &rng.child("core1"))?;
    let (h2, t2, e2) = robust_core(m, verify, cfg, &rng.child("core2"))?;

    // Copy one: X1 ⊂ B2, Y1 ⊂ A2, Z1 = A1. Copy two: X2 ⊂ A2, Y2 ⊂ B2,
    // Z2 = B1.
    let x1 = |i: usize| 9 * m + i;
    let y1 = |i: usize| 5 * m + i;
    let z1 = |i: usize| i;
    let x2 = |i: usize| 2 * m + i;
    let y2 = |i: usize| 12 * m + i;
    let z2 = |i: usize| 7 * m + i;
    let mut pairs = BTreeSet::new();
    for (x, ns) in h1.iter().enumerate() {
        for &w in ns {
            let a = if w < 2 * m { y1(w) } else { z1(w - 2 * m) };
            pairs.insert((a, x1(x)));
        }
    }
    for (x, ns) in h2.iter().enumerate() {
        for &w in ns {
            let b = if w < 2 * m { y2(w) } else { z2(w - 2 * m) };
            pairs.insert((x2(x), b));
        }
    }
    for i in 0..2 * m {
        pairs.insert((z1(i), z2(i)));
    }
    let mut deg = vec![0usize; 14 * m];
    for &(a, b) in &pairs {
        deg[a] += 1;
        deg[b] += 1;
    }
    if pairs.len() % 2 == 0 {
        let extra = (0..7 * m)
            .flat_map(|a| (7 * m..14 * m).map(move |b| (a, b)))
            .find(|&(a, b)| !pairs.contains(&(a, b)) && deg[a] < 102 && deg[b] < 102);
        if let Some((a, b)) = extra {
            pairs.insert((a, b));
            deg[a] += 1;
            deg[b] += 1;
        }
    }
    let max_degree = deg.iter().copied().max().unwrap_or(0);
    if max_degree > 102 {
        return Err(RmbgError::Degree(max_degree));
    }
    let mut rmbg = Rmbg {
        m,
        pairs: pairs.into_iter().collect(),
        max_degree,
        verification: RmbgVerification {
            mode: verify,
            exhaustive: false,
            checked: 0,
            core_attempts: t1 + t2,
        },
    };

    let total: usize = (m..=2 * m).map(|s| binom(2 * m, s).saturating_mul(binom(2 * m, s))).fold(0, usize::saturating_add);
    let a1: Vec<usize> = rmbg.a1().collect();
    let b1: Vec<usize> = rmbg.b1().collect();
    let exhaustive = matches!(verify, RmbgVerify::Exact) && total <= cfg.exhaustive_cap;
    let mut checked = 0;
    if exhaustive {
        for s in m..=2 * m {
            let mut ia: Vec<usize> = (0..s).collect();
            loop {
                let sa: Vec<usize> = ia.iter().map(|&i| a1[i]).collect();
                let mut ib: Vec<usize> = (0..s).collect();
                loop {
                    let sb: Vec<usize> = ib.iter().map(|&i| b1[i]).collect();
                    checked += 1;
                    if !rmbg.matches(&sa, &sb) {
                        return Err(RmbgError::CombinedFailed { a1: sa, b1: sb });
                    }
                    if !next_combination(&mut ib, 2 * m) {
                        break;
                    }
                }
                if !next_combination(&mut ia, 2 * m) {
                    break;
                }
            }
        }
    } else {
        let trials = match verify {
            RmbgVerify::Exact => cfg.fallback_trials,
            RmbgVerify::Sampled { trials } => trials,
        };
        let mut r = rng.child("combined");
        for _ in 0..trials {
            let s = r.gen_range(m..=2 * m);
            let mut sa: Vec<usize> = a1.choose_multiple(&mut r, s).copied().collect();
            let mut sb: Vec<usize> = b1.choose_multiple(&mut r, s).copied().collect();
            sa.sort_unstable();
            sb.sort_unstable();
            checked += 1;
            if !rmbg.matches(&sa, &sb) {
                return Err(RmbgError::CombinedFailed { a1: sa, b1: sb });
            }
        }
    }
    rmbg.verification.exhaustive = exhaustive && e1 && e2;
    rmbg.verification.checked = checked;
    Ok(rmbg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_matching_finds_perfect() {
        let pairs = [(0, 3), (0, 4), (1, 3), (2, 5)];
        assert_eq!(pair_matching(&pairs, &[0, 1, 3, 4]), Some(vec![1, 2]));
        assert_eq!(pair_matching(&pairs, &[0, 1, 2, 3, 4, 5]), Some(vec![1, 2, 3]));
        assert_eq!(pair_matching(&pairs, &[0, 1, 3, 5]), None);
        assert_eq!(pair_matching(&pairs, &[]), Some(vec![]));
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), 6);
        assert_eq!(binom(10, 5), 252);
        assert_eq!(binom(5, 0), 1);
    }

    #[test]
    fn sizes_degree_and_parity() {
        for m in [1, 2, 3] {
            let h = build_rmbg(m, &SeededRng::new(7, "rmbg"), RmbgVerify::Exact, &RmbgConfig::default()).unwrap();
            assert_eq!((h.a1().len(), h.b1().len(), h.a2().len(), h.b2().len()), (2 * m, 2 * m, 5 * m, 5 * m));
            assert!(h.max_degree <= 102);
            assert_eq!(h.pairs.len() % 2, 1);
            assert!(h.pairs.iter().all(|&(a, b)| a < 7 * m && b >= 7 * m));
            assert!(h.verification.exhaustive);
        }
    }

    #[test]
    fn large_m_is_sampled() {
        let cfg = RmbgConfig {
            fallback_trials: 50,
            ..RmbgConfig::default()
        };
        let h = build_rmbg(12, &SeededRng::new(1, "rmbg"), RmbgVerify::Exact, &cfg).unwrap();
        assert!(!h.verification.exhaustive);
        assert!(h.max_degree <= 102);
    }
}
