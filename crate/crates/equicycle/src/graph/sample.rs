//! Seeded vertex sampling. Every output is sorted.

use super::{SeededRng, Side};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("requested {requested} vertices from a universe of {available}")]
    TooMany { requested: usize, available: usize },
    #[error("balanced size {0} is odd")]
    OddBalanced(usize),
    #[error("side {side:?} has {available} vertices, {requested} requested")]
    SideExhausted {
        side: Side,
        requested: usize,
        available: usize,
    },
    #[error("balanced sampling needs a side labelling")]
    NoSides,
    #[error("cannot split into zero parts")]
    ZeroParts,
    #[error("probability {0} outside [0,1]")]
    BadProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSpec {
    /// Keep each vertex independently with probability `p`.
    PRandom(f64),
    /// Uniform subset of the given size.
    Uniform(usize),
    /// Split into `t` parts with equal A/B counts; leftovers are excluded.
    BalancedPartition(usize),
    /// Uniform balanced subset of the given (even) total size.
    BalancedSubset(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sampled {
    Set(Vec<usize>),
    Partition {
        parts: Vec<Vec<usize>>,
        excluded: Vec<usize>,
    },
}

pub fn sample(
    universe: &[usize],
    spec: SampleSpec,
    side: Option<&[Side]>,
    rng: &mut SeededRng,
) -> Result<Sampled, SampleError> {
    match spec {
        SampleSpec::PRandom(p) => p_random(universe, p, rng).map(Sampled::Set),
        SampleSpec::Uniform(k) => uniform_subset(universe, k, rng).map(Sampled::Set),
        SampleSpec::BalancedSubset(k) => {
            balanced_subset(universe, side.ok_or(SampleError::NoSides)?, k, rng).map(Sampled::Set)
        }
        SampleSpec::BalancedPartition(t) => {
            let (parts, excluded) =
                balanced_partition(universe, side.ok_or(SampleError::NoSides)?, t, rng)?;
            Ok(Sampled::Partition { parts, excluded })
        }
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

pub fn p_random(universe: &[usize], p: f64, rng: &mut SeededRng) -> Result<Vec<usize>, SampleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SampleError::BadProbability(p));
    }
    let mut u = universe.to_vec();
    u.sort_unstable();
    Ok(u.into_iter().filter(|_| rng.gen_bool(p)).collect())
}

pub fn uniform_subset(
    universe: &[usize],
    k: usize,
    rng: &mut SeededRng,
) -> Result<Vec<usize>, SampleError> {
    if k > universe.len() {
        return Err(SampleError::TooMany {
            requested: k,
            available: universe.len(),
        });
    }
    let mut u = universe.to_vec();
    u.sort_unstable();
    let (chosen, _) = u.partial_shuffle(rng, k);
    Ok(sorted(chosen.to_vec()))
}

fn split_sides(universe: &[usize], side: &[Side]) -> (Vec<usize>, Vec<usize>) {
    let mut u = universe.to_vec();
    u.sort_unstable();
    u.into_iter().partition(|&v| side[v] == Side::A)
}

pub fn balanced_subset(
    universe: &[usize],
    side: &[Side],
    k: usize,
    rng: &mut SeededRng,
) -> Result<Vec<usize>, SampleError> {
    if k % 2 == 1 {
        return Err(SampleError::OddBalanced(k));
    }
    let half = k / 2;
    let (a, b) = split_sides(universe, side);
    for (s, pool) in [(Side::A, &a), (Side::B, &b)] {
        if pool.len() < half {
            return Err(SampleError::SideExhausted {
                side: s,
                requested: half,
                available: pool.len(),
            });
        }
    }
    let mut out = uniform_subset(&a, half, rng)?;
    out.extend(uniform_subset(&b, half, rng)?);
    Ok(sorted(out))
}

/// Split into `t` balanced parts of `min(|A|,|B|)/t` per side each. Vertices
/// that do not fit are returned separately.
pub fn balanced_partition(
    universe: &[usize],
    side: &[Side],
    t: usize,
    rng: &mut SeededRng,
) -> Result<(Vec<Vec<usize>>, Vec<usize>), SampleError> {
    if t == 0 {
        return Err(SampleError::ZeroParts);
    }
    let (mut a, mut b) = split_sides(universe, side);
    a.shuffle(rng);
    b.shuffle(rng);
    let per = a.len().min(b.len()) / t;
    let mut parts = Vec::with_capacity(t);
    for i in 0..t {
        let mut part = a[i * per..(i + 1) * per].to_vec();
        part.extend_from_slice(&b[i * per..(i + 1) * per]);
        parts.push(sorted(part));
    }
    let mut excluded = a[t * per..].to_vec();
    excluded.extend_from_slice(&b[t * per..]);
    Ok((parts, sorted(excluded)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sides(n: usize) -> Vec<Side> {
        (0..n)
            .map(|v| if v < n / 2 { Side::A } else { Side::B })
            .collect()
    }

    #[test]
    fn uniform_is_deterministic() {
        let u: Vec<usize> = (0..10).collect();
        let a = uniform_subset(&u, 3, &mut SeededRng::new(11, "s")).unwrap();
        let b = uniform_subset(&u, 3, &mut SeededRng::new(11, "s")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn balanced_partition_of_4_4() {
        let side = sides(8);
        let u: Vec<usize> = (0..8).collect();
        let (parts, excluded) = balanced_partition(&u, &side, 2, &mut SeededRng::new(1, "p")).unwrap();
        assert!(excluded.is_empty());
        for p in parts {
            let a = p.iter().filter(|&&v| side[v] == Side::A).count();
            assert_eq!((a, p.len() - a), (2, 2));
        }
    }

    #[test]
    fn balanced_partition_parks_leftovers() {
        let side = sides(10);
        let u: Vec<usize> = (0..9).collect();
        let (parts, excluded) = balanced_partition(&u, &side, 2, &mut SeededRng::new(1, "p")).unwrap();
        assert_eq!(parts.iter().map(Vec::len).sum::<usize>() + excluded.len(), 9);
        assert!(parts.iter().all(|p| p.len() == 4));
    }

    #[test]
    fn balanced_errors() {
        let side = sides(6);
        let u: Vec<usize> = (0..6).collect();
        let mut r = SeededRng::new(0, "");
        assert_eq!(balanced_subset(&u, &side, 3, &mut r), Err(SampleError::OddBalanced(3)));
        assert!(matches!(
            balanced_subset(&u, &side, 8, &mut r),
            Err(SampleError::SideExhausted { .. })
        ));
        assert_eq!(
            sample(&u, SampleSpec::BalancedSubset(2), None, &mut r),
            Err(SampleError::NoSides)
        );
        let s = balanced_subset(&u, &side, 4, &mut r).unwrap();
        assert_eq!(s.iter().filter(|&&v| v < 3).count(), 2);
    }

    #[test]
    fn p_random_size_concentrates() {
        // Binomial(10^4, 0.3) has sd ~ 45.8, so +-300 is > 6 sd.
        let u: Vec<usize> = (0..10_000).collect();
        let inside = (0..1000u64)
            .filter(|&seed| {
                let s = p_random(&u, 0.3, &mut SeededRng::new(seed, "p")).unwrap();
                (2700..=3300).contains(&s.len())
            })
            .count();
        assert!(inside >= 990, "{inside}");
    }
}
