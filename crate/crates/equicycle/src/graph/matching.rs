//! Maximum bipartite matching (Hopcroft-Karp) with Hall-violator extraction.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// A matching between left vertices `0..left.len()` and right vertices
/// `0..right.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    pub fn is_left_perfect(&self) -> bool {
        self.size == self.left.len()
    }

    /// Left vertices reachable from unmatched left vertices by alternating
    /// paths. When the matching is maximum and not left-perfect this set `S`
    /// has `|N(S)| < |S|`.
    pub fn hall_violator(&self, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
        if self.is_left_perfect() {
            return None;
        }
        let mut seen_left = vec![false; self.left.len()];
        let mut seen_right = vec![false; self.right.len()];
        let mut queue: VecDeque<usize> = (0..self.left.len())
            .filter(|&u| self.left[u].is_none())
            .collect();
        for &u in &queue {
            seen_left[u] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &r in &adj[u] {
                if seen_right[r] {
                    continue;
                }
                seen_right[r] = true;
                if let Some(w) = self.right[r] {
                    if !seen_left[w] {
                        seen_left[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        Some((0..self.left.len()).filter(|&u| seen_left[u]).collect())
    }
}

/// Maximum matching; neighbours are tried in the order given.
pub fn max_bipartite_matching(n_right: usize, adj: &[Vec<usize>]) -> Matching {
    let n_left = adj.len();
    let mut pair_l = vec![NIL; n_left];
    let mut pair_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;

    loop {
        // Layer the graph from free left vertices.
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if pair_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &r in &adj[u] {
                let w = pair_r[r];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut iter = vec![0usize; n_left];
        for u in 0..n_left {
            if pair_l[u] == NIL && augment(u, adj, &mut pair_l, &mut pair_r, &mut dist, &mut iter) {
                size += 1;
            }
        }
    }

    let opt = |x: usize| if x == NIL { None } else { Some(x) };
    Matching {
        left: pair_l.into_iter().map(opt).collect(),
        right: pair_r.into_iter().map(opt).collect(),
        size,
    }
}

/// Iterative DFS along the layered graph.
fn augment(
    root: usize,
    adj: &[Vec<usize>],
    pair_l: &mut [usize],
    pair_r: &mut [usize],
    dist: &mut [usize],
    iter: &mut [usize],
) -> bool {
    let mut stack = vec![root];
    while let Some(&u) = stack.last() {
        if iter[u] == adj[u].len() {
            dist[u] = usize::MAX;
            stack.pop();
            continue;
        }
        let r = adj[u][iter[u]];
        iter[u] += 1;
        let w = pair_r[r];
        if w == NIL {
            // Flip the path recorded on the stack.
            let mut right = r;
            while let Some(x) = stack.pop() {
                let prev = pair_l[x];
                pair_l[x] = right;
                pair_r[right] = x;
                right = prev;
            }
            return true;
        }
        if dist[w] != usize::MAX && dist[w] == dist[u] + 1 {
            stack.push(w);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(n_right: usize, adj: &[Vec<usize>]) -> usize {
        fn go(i: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if i == adj.len() {
                return 0;
            }
            let mut best = go(i + 1, adj, used);
            for &r in &adj[i] {
                if !used[r] {
                    used[r] = true;
                    best = best.max(1 + go(i + 1, adj, used));
                    used[r] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; n_right])
    }

    #[test]
    fn perfect_on_k33() {
        let adj = vec![vec![0, 1, 2]; 3];
        let m = max_bipartite_matching(3, &adj);
        assert!(m.is_left_perfect());
        assert!(m.hall_violator(&adj).is_none());
    }

    #[test]
    fn violator_on_shared_neighbour() {
        let adj = vec![vec![0], vec![0]];
        let m = max_bipartite_matching(1, &adj);
        assert_eq!(m.size, 1);
        assert_eq!(m.hall_violator(&adj), Some(vec![0, 1]));
    }

    proptest! {
        #[test]
        fn size_matches_brute_force(
            edges in proptest::collection::vec((0usize..6, 0usize..6), 0..20)
        ) {
            let mut adj = vec![Vec::new(); 6];
            for (l, r) in edges {
                if !adj[l].contains(&r) { adj[l].push(r); }
            }
            let m = max_bipartite_matching(6, &adj);
            prop_assert_eq!(m.size, brute(6, &adj));
            for (l, r) in m.left.iter().enumerate() {
                if let Some(r) = r {
                    prop_assert!(adj[l].contains(r));
                    prop_assert_eq!(m.right[*r], Some(l));
                }
            }
            if let Some(s) = m.hall_violator(&adj) {
                let mut nbr: Vec<usize> = s.iter().flat_map(|&u| adj[u].iter().copied()).collect();
                nbr.sort_unstable();
                nbr.dedup();
                prop_assert!(nbr.len() < s.len());
            }
        }
    }
}
