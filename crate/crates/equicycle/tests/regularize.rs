use equicycle::graph::{generate, Graph, SeededRng};
use equicycle::regularize::{classify_degrees, regularize, regularize_step, RegularisationConfig};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-vertex retention rates match `1-ε` on low vertices and `(1-ε)²` on
/// high ones, averaged over 200 seeds.
#[test]
fn one_step_retention_rates() {
    let (d, gamma, eps) = (200.0, 0.2, 0.02);
    // A-vertex a joins B-vertices a, a+1, ... (mod 1000); the first half of
    // A has degree 200, the rest 240, so every degree lies in [200, 240].
    let edges = (0..1000usize).flat_map(|a| {
        let deg = if a < 500 { 200 } else { 240 };
        (0..deg).map(move |j| (a, 1000 + (a + j) % 1000))
    });
    let g = Graph::from_edges(2000, edges).unwrap();
    let (low, high) = classify_degrees(&g, d, gamma).unwrap();
    assert!(!low.is_empty() && !high.is_empty());

    let (mut low_rates, mut high_rates) = (Vec::new(), Vec::new());
    for seed in 0..200 {
        let out = regularize_step(&g, d, gamma, eps, &mut SeededRng::new(seed, "retention")).unwrap();
        let h = &out.graph.graph;
        let mut pos = vec![usize::MAX; g.n()];
        for (i, &v) in out.graph.to_parent.iter().enumerate() {
            pos[v] = i;
        }
        let rate = |set: &[usize]| {
            let kept: Vec<f64> = set
                .iter()
                .filter(|&&v| pos[v] != usize::MAX)
                .map(|&v| h.degree(pos[v]) as f64 / g.degree(v) as f64)
                .collect();
            kept.iter().sum::<f64>() / kept.len() as f64
        };
        low_rates.push(rate(&low));
        high_rates.push(rate(&high));
    }
    let (ml, sl) = mean_sd(&low_rates);
    let (mh, sh) = mean_sd(&high_rates);
    let se = |s: f64| s / (200f64).sqrt();
    assert!((ml - (1.0 - eps)).abs() <= 3.0 * se(sl), "low {ml} ± {}", se(sl));
    assert!((mh - (1.0 - eps).powi(2)).abs() <= 3.0 * se(sh), "high {mh} ± {}", se(sh));
}

/// Full survival of the tracked set is at least `(1-ε)^k` in expectation.
#[test]
fn tracked_survival_in_expectation() {
    let g = generate::degree_spread(800, 40, 400, &mut SeededRng::new(4, "survival/graph"));
    let lambda = 1.05 * g.max_degree() as f64 / g.min_degree() as f64;
    let cfg = RegularisationConfig::desk(lambda, 0.01, 15);
    let all: Vec<usize> = (0..g.n()).collect();
    let mut fractions = Vec::new();
    let mut bound = 0.0;
    for seed in 0..20 {
        let r = regularize(&g, &cfg, &all, &SeededRng::new(seed, "survival")).unwrap();
        fractions.push(r.survivors.len() as f64 / g.n() as f64);
        bound = (1.0 - r.epsilon).powi(r.steps as i32);
        assert!(bound >= 1.0 / lambda.powi(5));
    }
    let (mean, _) = mean_sd(&fractions);
    assert!(mean >= bound, "{mean} < {bound}");
}
