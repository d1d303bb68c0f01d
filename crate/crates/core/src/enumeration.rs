//! Enumeration of the local minimizers of a sampled path by dyadic
//! intervals.
//!
//! Intervals are numbered from 2: `n = 2^k + i` with `1 <= i <= 2^k` names
//! `((i-1)/2^k, i/2^k)`. `X_1` is the argmin over `(0,1)`; for `n >= 2`,
//! `X_n` is the argmin of whichever half of `I_n` has the larger minimum.

use serde::{Deserialize, Serialize};

use crate::brownian::{argmin_index_on, BrownianPath, DyadicInterval};
use crate::error::{Error, Result};

/// Grid levels kept between the enumeration level and the path depth.
pub const GUARD_LEVELS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex(u64);

impl DyadicIndex {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dyadic index must be >= 2, got {n}")));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `(k, i)` with `n = 2^k + i`, `1 <= i <= 2^k`.
    pub fn decompose(self) -> (u32, u64) {
        let k = 63 - (self.0 - 1).leading_zeros();
        (k, self.0 - (1u64 << k))
    }

    pub fn interval(self) -> DyadicInterval {
        let (level, position) = self.decompose();
        DyadicInterval { level, position }
    }

    pub fn children(self) -> (Self, Self) {
        (Self(2 * self.0 - 1), Self(2 * self.0))
    }
}

pub fn interval_of_index(n: u64) -> Result<DyadicInterval> {
    Ok(DyadicIndex::new(n)?.interval())
}

pub fn index_of_interval(interval: DyadicInterval) -> u64 {
    (1u64 << interval.level) + interval.position
}

pub fn children(n: u64) -> Result<(u64, u64)> {
    let (l, r) = DyadicIndex::new(n)?.children();
    Ok((l.get(), r.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerEnumeration {
    /// `xs[j]` is `X_{j+1}`.
    pub xs: Vec<f64>,
    /// Interval in which each `X_n` was selected (`(0,1)` for `X_1`).
    pub intervals: Vec<DyadicInterval>,
    pub source: String,
}

impl MinimizerEnumeration {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// True if no two entries are closer than half a grid step.
    pub fn pairwise_distinct(&self, step: f64) -> bool {
        let mut sorted = self.xs.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).all(|w| w[1] - w[0] >= 0.5 * step)
    }

    /// CSV with header `n,x_n,interval_level,interval_position`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,x_n,interval_level,interval_position\n");
        for (j, (x, iv)) in self.xs.iter().zip(&self.intervals).enumerate() {
            out.push_str(&format!("{},{},{},{}\n", j + 1, x, iv.level, iv.position));
        }
        out
    }
}

fn max_count(path: &BrownianPath) -> Result<u64> {
    if path.depth() < GUARD_LEVELS {
        return Err(Error::Resolution(format!(
            "path depth {} is below the guard of {GUARD_LEVELS} levels",
            path.depth()
        )));
    }
    Ok(1u64 << (path.depth() - GUARD_LEVELS))
}

/// Which half of `I_n` holds `X_n`: `true` for the left half.
///
/// Errors with [`Error::Degenerate`] when the two half-minima are equal.
pub fn select_half(path: &BrownianPath, n: u64) -> Result<(bool, usize)> {
    let iv = interval_of_index(n)?;
    let (li, lm) = argmin_index_on(path, iv.left_half())?;
    let (ri, rm) = argmin_index_on(path, iv.right_half())?;
    if lm > rm {
        Ok((true, li))
    } else if lm < rm {
        Ok((false, ri))
    } else {
        Err(Error::Degenerate(format!(
            "equal half-minima {lm} on interval I_{n} = ({}, {})",
            iv.left(),
            iv.right()
        )))
    }
}

/// `X_1, ..., X_m` for `path`.
pub fn enumerate_minimizers(path: &BrownianPath, m: u64) -> Result<MinimizerEnumeration> {
    let cap = max_count(path)?;
    if m > cap {
        return Err(Error::Resolution(format!(
            "m = {m} needs depth >= {} but the path has depth {}",
            64 - (m - 1).max(1).leading_zeros() + GUARD_LEVELS,
            path.depth()
        )));
    }
    let mut xs = Vec::with_capacity(m as usize);
    let mut intervals = Vec::with_capacity(m as usize);
    if m >= 1 {
        let (idx, _) = argmin_index_on(path, DyadicInterval::unit())?;
        xs.push(path.time(idx));
        intervals.push(DyadicInterval::unit());
    }
    for n in 2..=m {
        let (left, idx) = select_half(path, n)?;
        let iv = interval_of_index(n)?;
        xs.push(path.time(idx));
        intervals.push(if left { iv.left_half() } else { iv.right_half() });
    }
    let source = match path.seed() {
        Some(s) => format!("seed={s},depth={}", path.depth()),
        None => format!("synthetic,depth={}", path.depth()),
    };
    Ok(MinimizerEnumeration { xs, intervals, source })
}

/// Grid argmins of the `2^k` level-`k` intervals, left to right.
pub fn level_argmins(path: &BrownianPath, k: u32) -> Result<Vec<f64>> {
    let cap = max_count(path)?;
    if k > 62 || (1u64 << k) > cap {
        return Err(Error::Resolution(format!(
            "level {k} needs depth >= {} but the path has depth {}",
            k + GUARD_LEVELS,
            path.depth()
        )));
    }
    (1..=(1u64 << k))
        .map(|pos| {
            let (idx, _) = argmin_index_on(path, DyadicInterval { level: k, position: pos })?;
            Ok(path.time(idx))
        })
        .collect()
}

/// The event `{X_n in I'_n}` recomputed from `X_1..X_{n-1}` alone: it holds
/// iff some earlier minimizer lies in the right half of `I_n`.
pub fn left_half_from_history(n: u64, history: &[f64]) -> Result<bool> {
    let right = interval_of_index(n)?.right_half();
    Ok(history.iter().any(|&x| right.left() < x && x <= right.right()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;

    fn iv(n: u64) -> (f64, f64) {
        let i = interval_of_index(n).unwrap();
        (i.left(), i.right())
    }

    #[test]
    fn index_table() {
        assert_eq!(iv(2), (0.0, 1.0));
        assert_eq!(iv(3), (0.0, 0.5));
        assert_eq!(iv(4), (0.5, 1.0));
        assert_eq!(iv(5), (0.0, 0.25));
        assert_eq!(iv(6), (0.25, 0.5));
        assert_eq!(iv(7), (0.5, 0.75));
        assert_eq!(iv(8), (0.75, 1.0));
        assert_eq!(iv(9), (0.0, 0.125));
        assert!(matches!(interval_of_index(1), Err(Error::Domain(_))));
        assert!(matches!(children(0), Err(Error::Domain(_))));
    }

    #[test]
    fn children_halve_the_parent() {
        assert_eq!(children(2).unwrap(), (3, 4));
        assert_eq!(children(3).unwrap(), (5, 6));
        for n in 2..=16 {
            let (l, r) = children(n).unwrap();
            let (pl, pr) = iv(n);
            let (ll, lr) = iv(l);
            let (rl, rr) = iv(r);
            assert_eq!(ll, pl);
            assert_eq!(rr, pr);
            assert_eq!(lr, rl);
            assert_eq!(lr, 0.5 * (pl + pr));
        }
    }

    #[test]
    fn index_bijection_per_level() {
        for k in 0..=12u32 {
            let mut seen = vec![false; 1 << k];
            for n in (1u64 << k) + 1..=(1u64 << (k + 1)) {
                let i = interval_of_index(n).unwrap();
                assert_eq!(i.level, k);
                assert!(!seen[i.position as usize - 1]);
                seen[i.position as usize - 1] = true;
                assert_eq!(index_of_interval(i), n);
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn increasing_path() {
        let p = BrownianPath::from_fn(6, |t| t).unwrap();
        let e = enumerate_minimizers(&p, 2).unwrap();
        let h = p.step();
        assert_eq!(e.xs, vec![h, 0.5 + h]);
        assert_eq!(level_argmins(&p, 0).unwrap(), vec![h]);
        assert_eq!(level_argmins(&p, 1).unwrap(), vec![h, 0.5 + h]);
    }

    #[test]
    fn level_property_on_sampled_paths() {
        for seed in 0..20 {
            let p = sample_path(10, seed).unwrap();
            let e = enumerate_minimizers(&p, 256).unwrap();
            assert!(e.pairwise_distinct(p.step()));
            for k in 0..=8u32 {
                let mut a = e.xs[..1 << k].to_vec();
                let mut b = level_argmins(&p, k).unwrap();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                assert_eq!(a, b, "seed {seed} level {k}");
            }
        }
    }

    #[test]
    fn selection_event_is_measurable_in_history() {
        for seed in 0..20 {
            let p = sample_path(10, seed).unwrap();
            let e = enumerate_minimizers(&p, 128).unwrap();
            for n in 2..=128u64 {
                let (left, _) = select_half(&p, n).unwrap();
                assert_eq!(left, left_half_from_history(n, &e.xs[..n as usize - 1]).unwrap());
            }
        }
    }

    #[test]
    fn constant_path_is_degenerate() {
        let p = BrownianPath::from_fn(5, |_| 1.0).unwrap();
        assert!(matches!(enumerate_minimizers(&p, 2), Err(Error::Degenerate(_))));
        assert_eq!(enumerate_minimizers(&p, 1).unwrap().xs.len(), 1);
    }

    #[test]
    fn resolution_guard() {
        let p = sample_path(6, 1).unwrap();
        assert!(enumerate_minimizers(&p, 16).is_ok());
        assert!(matches!(enumerate_minimizers(&p, 17), Err(Error::Resolution(_))));
        assert!(matches!(level_argmins(&p, 5), Err(Error::Resolution(_))));
    }

    #[test]
    fn csv_rows() {
        let p = BrownianPath::from_fn(4, |t| t).unwrap();
        let csv = enumerate_minimizers(&p, 2).unwrap().to_csv();
        assert_eq!(csv, "n,x_n,interval_level,interval_position\n1,0.0625,0,1\n2,0.5625,1,2\n");
    }
}
