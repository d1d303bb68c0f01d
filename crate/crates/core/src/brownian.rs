//! Brownian paths and bridges on dyadic grids.
//!
//! Paths are built by midpoint refinement. The Gaussian for a level-`j`
//! midpoint is drawn from ChaCha stream `j` of the path seed, in left to
//! right order, so a path sampled at depth `k + 1` agrees bit-exactly with the
//! depth-`k` path on the coarse grid.
//!
//! Grid points belonging to the dyadic interval `((i-1)/2^k, i/2^k)` are the
//! ones with `(i-1)/2^k < t <= i/2^k`, except `t = 1` which is outside
//! `(0,1)`. These sets partition the interior grid points at every level, and
//! the two halves of an interval partition the interval.

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{hashed_uniform, stream_rng};

/// Largest supported grid depth (2^24 + 1 values).
pub const MAX_DEPTH: u32 = 24;

/// Default depth used by the experiment suites.
pub const DEFAULT_DEPTH: u32 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    depth: u32,
    values: Vec<f64>,
    origin: f64,
    /// Present for sampled paths; synthetic paths cannot be refined.
    seed: Option<u64>,
    /// Right endpoint for bridges; `None` for free paths.
    pinned_end: Option<f64>,
}

/// The open dyadic interval `((position-1)/2^level, position/2^level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub position: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, position: u64) -> Result<Self> {
        if level > 62 || position == 0 || position > 1u64 << level {
            return Err(Error::Domain(format!(
                "no dyadic interval at level {level}, position {position}"
            )));
        }
        Ok(Self { level, position })
    }

    pub fn unit() -> Self {
        Self { level: 0, position: 1 }
    }

    pub fn width(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn left(&self) -> f64 {
        (self.position - 1) as f64 * self.width()
    }

    pub fn right(&self) -> f64 {
        self.position as f64 * self.width()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left() < x && x < self.right()
    }

    pub fn left_half(&self) -> Self {
        Self { level: self.level + 1, position: 2 * self.position - 1 }
    }

    pub fn right_half(&self) -> Self {
        Self { level: self.level + 1, position: 2 * self.position }
    }

    /// Inclusive range of grid indices owned by this interval at `depth`.
    pub fn grid_indices(&self, depth: u32) -> Result<std::ops::RangeInclusive<usize>> {
        if self.level > depth {
            return Err(Error::Resolution(format!(
                "interval level {} exceeds path depth {depth}",
                self.level
            )));
        }
        let stride = 1usize << (depth - self.level);
        let last = 1usize << depth;
        let lo = (self.position as usize - 1) * stride + 1;
        let mut hi = self.position as usize * stride;
        if hi == last {
            hi -= 1;
        }
        if lo > hi {
            return Err(Error::Resolution(format!(
                "interval ({}, {}) owns no grid point at depth {depth}",
                self.left(),
                self.right()
            )));
        }
        Ok(lo..=hi)
    }
}

impl BrownianPath {
    /// Wraps explicit grid values; `values.len()` must be `2^k + 1`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !(n - 1).is_power_of_two() {
            return Err(Error::Usage(format!("path length {n} is not 2^k + 1")));
        }
        let depth = (n - 1).trailing_zeros();
        if depth > MAX_DEPTH {
            return Err(Error::Usage(format!("depth {depth} exceeds maximum {MAX_DEPTH}")));
        }
        let origin = values[0];
        Ok(Self { depth, values, origin, seed: None, pinned_end: None })
    }

    /// Samples `t -> f(t)` on the depth-`depth` grid.
    pub fn from_fn(depth: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = 1usize << depth;
        Self::from_values((0..=n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Grid spacing `2^-depth`.
    pub fn step(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step()
    }

    /// Value at the grid point `t`; errors if `t` is not on the grid.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let scaled = t * (1u64 << self.depth) as f64;
        if scaled.fract() != 0.0 || !(0.0..=(1u64 << self.depth) as f64).contains(&scaled) {
            return Err(Error::Resolution(format!("t = {t} is not a grid point at depth {}", self.depth)));
        }
        Ok(self.values[scaled as usize])
    }

    /// The same realization one level finer.
    pub fn refine(&self) -> Result<Self> {
        let seed = self
            .seed
            .ok_or_else(|| Error::Usage("synthetic paths cannot be refined".into()))?;
        if self.depth >= MAX_DEPTH {
            return Err(Error::Usage(format!("depth {} is already maximal", self.depth)));
        }
        let mut values = vec![0.0; (1usize << (self.depth + 1)) + 1];
        for (i, v) in self.values.iter().enumerate() {
            values[2 * i] = *v;
        }
        fill_level(&mut values, self.depth + 1, self.depth + 1, seed);
        Ok(Self { depth: self.depth + 1, values, ..self.clone() })
    }

    /// CSV with header `t,value`, ascending in `t`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        out.push_str("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.time(i), v));
        }
        out
    }
}

/// Fills the odd multiples of `2^(depth-level)` from their neighbours.
fn fill_level(values: &mut [f64], level: u32, depth: u32, seed: u64) {
    let stride = 1usize << (depth - level);
    let sd = (-((level + 1) as f64)).exp2().sqrt();
    let mut rng = stream_rng(seed, level as u64);
    let mut idx = stride;
    let last = values.len() - 1;
    while idx < last {
        let z: f64 = StandardNormal.sample(&mut rng);
        values[idx] = 0.5 * (values[idx - stride] + values[idx + stride]) + sd * z;
        idx += 2 * stride;
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Usage(format!("depth {depth} exceeds maximum {MAX_DEPTH}")));
    }
    Ok(())
}

fn build(start: f64, end: Option<f64>, depth: u32, seed: u64) -> Result<BrownianPath> {
    check_depth(depth)?;
    let n = 1usize << depth;
    let mut values = vec![0.0; n + 1];
    values[0] = start;
    values[n] = match end {
        Some(b) => b,
        None => {
            let z: f64 = StandardNormal.sample(&mut stream_rng(seed, 0));
            start + z
        }
    };
    for level in 1..=depth {
        fill_level(&mut values, level, depth, seed);
    }
    Ok(BrownianPath { depth, values, origin: start, seed: Some(seed), pinned_end: end })
}

/// Standard Brownian motion on `[0,1]` started at 0.
pub fn sample_path(depth: u32, seed: u64) -> Result<BrownianPath> {
    build(0.0, None, depth, seed)
}

/// Brownian bridge from `a` at `t = 0` to `b` at `t = 1`.
pub fn sample_bridge(a: f64, b: f64, depth: u32, seed: u64) -> Result<BrownianPath> {
    build(a, Some(b), depth, seed)
}

/// Grid argmin over the grid points owned by `interval`; ties go to the
/// smallest index. Returns the grid index and the minimum.
pub fn argmin_index_on(path: &BrownianPath, interval: DyadicInterval) -> Result<(usize, f64)> {
    let range = interval.grid_indices(path.depth)?;
    let start = *range.start();
    let vals = &path.values[range];
    let mut best = 0;
    for (j, v) in vals.iter().enumerate().skip(1) {
        if *v < vals[best] {
            best = j;
        }
    }
    Ok((start + best, vals[best]))
}

/// `(t*, m)`: grid argmin and minimum of the path over `interval`.
pub fn argmin_on(path: &BrownianPath, interval: DyadicInterval) -> Result<(f64, f64)> {
    let (idx, m) = argmin_index_on(path, interval)?;
    Ok((path.time(idx), m))
}

/// Largest Exp(1) variate `hashed_uniform` can produce is below this, so a
/// cell whose threshold exceeds it can never hold the running minimum.
const EXP_CEILING: f64 = 40.0;

/// Minimum and its location for the continuous path that interpolates the
/// grid skeleton by independent Brownian bridges, restricted to the closed
/// interval `[left, right]` of `interval`.
///
/// Given the grid values, the continuous minimum of each cell is sampled
/// exactly, and the argmin inside the winning cell is drawn from its exact
/// conditional law. Randomness is keyed by `(seed, depth, cell)`.
pub fn continuum_argmin_on(path: &BrownianPath, interval: DyadicInterval, seed: u64) -> Result<(f64, f64)> {
    if interval.level > path.depth {
        return Err(Error::Resolution(format!(
            "interval level {} exceeds path depth {}",
            interval.level, path.depth
        )));
    }
    let stride = 1usize << (path.depth - interval.level);
    let first = (interval.position as usize - 1) * stride;
    let h = path.step();
    let v = &path.values;
    let mut best_val = v[first..=first + stride]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut best_cell = None;
    let depth_key = (path.depth as u64) << 40;
    for cell in first..first + stride {
        let (x, y) = (v[cell], v[cell + 1]);
        let lo = x.min(y);
        if lo > best_val {
            let threshold = 2.0 * (x - best_val) * (y - best_val) / h;
            if threshold > EXP_CEILING {
                continue;
            }
        }
        let e = -hashed_uniform(seed, depth_key | cell as u64).ln();
        let d = x - y;
        let m = 0.5 * (x + y - (d * d + 2.0 * h * e).sqrt());
        if m < best_val || best_cell.is_none() && m <= best_val {
            best_val = m;
            best_cell = Some((cell, x - m, y - m));
        }
    }
    let (cell, above_left, above_right) =
        best_cell.ok_or_else(|| Error::Internal("no cell attained the minimum".into()))?;
    let mut rng = stream_rng(seed ^ depth_key, cell as u64 + 1);
    let s = bridge_argmin_fraction(above_left / h.sqrt(), above_right / h.sqrt(), &mut rng);
    Ok(((cell as f64 + s) * h, best_val))
}

/// Position in `(0,1)` of the minimum of a unit-length Brownian bridge whose
/// endpoints lie `alpha` and `beta` above its minimum.
///
/// With `r = s / (1 - s)` the density of `r` is a two-component mixture of
/// inverse Gaussians: weight `beta / (alpha + beta)` on IG(alpha/beta, alpha^2),
/// the rest on the reciprocal of IG(beta/alpha, beta^2).
pub fn bridge_argmin_fraction<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let alpha = alpha.max(1e-300);
    let beta = beta.max(1e-300);
    let u: f64 = rng.random();
    let r = if u * (alpha + beta) < beta {
        sample_ig(alpha / beta, alpha * alpha, rng)
    } else {
        1.0 / sample_ig(beta / alpha, beta * beta, rng)
    };
    if r.is_infinite() {
        return 1.0;
    }
    r / (1.0 + r)
}

fn sample_ig<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    match InverseGaussian::new(mean, shape) {
        Ok(ig) => ig.sample(rng),
        // parameters underflowed; the variate is degenerate at its mean
        Err(_) => mean,
    }
}
