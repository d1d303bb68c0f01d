//! Conditional densities of an interval argmin of Brownian motion.
//!
//! `phi(a, b, t)` is the density on `(0,1)` of the argmin of a Brownian
//! bridge from `a` to `b` conditioned to stay above 0, where the conditioning
//! level is the minimum of the competing half-interval. Two integrands are
//! provided:
//!
//! * [`PhiVariant::Printed`]: `(a-y)(b-y) exp(-(a-y)^2/2t - (b-y)^2/2(1-t))`
//!   integrated over `y in (0, min(a,b))`.
//! * [`PhiVariant::JointDensity`]: the same integrand times `(t - t^2)^{-3/2}`,
//!   i.e. the joint (argmin, min) density of the bridge integrated over the
//!   admissible minima.
//!
//! The Monte Carlo adjudication run (`suites::density`) accepts
//! `JointDensity` and rejects `Printed`: the `t`-dependent factor cannot be
//! absorbed into the normalizing constant. `JointDensity` is the default.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::brownian::{argmin_index_on, BrownianPath, DyadicInterval};
use crate::enumeration::select_half;
use crate::error::{Error, Result};
use crate::quad::{integrate_unit_cosine, integrate_with_breaks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiVariant {
    Printed,
    JointDensity,
}

impl PhiVariant {
    pub fn name(self) -> &'static str {
        match self {
            PhiVariant::Printed => "printed",
            PhiVariant::JointDensity => "joint-density",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// Adaptive Gauss-Kronrod 7/15 with global bisection.
    GaussKronrod15,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Subinterval budget per adaptive integration.
    pub nodes: usize,
    pub scheme: QuadratureScheme,
    /// Bound on the reported normalization defect.
    pub tolerance: f64,
    /// Relative target for the inner `y`-integral.
    pub inner_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 2000,
            scheme: QuadratureScheme::GaussKronrod15,
            tolerance: 1e-6,
            inner_tolerance: 1e-8,
        }
    }
}

/// Boundary gaps above the competing minimum on the interval `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub a: f64,
    pub b: f64,
    pub u: f64,
    pub v: f64,
}

impl BoundaryData {
    pub fn new(a: f64, b: f64, u: f64, v: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!(
                "boundary values must exceed the competing minimum (a = {a}, b = {b})"
            )));
        }
        if !(u < v) {
            return Err(Error::Domain(format!("empty interval ({u}, {v})")));
        }
        Ok(Self { a, b, u, v })
    }

    pub fn width(&self) -> f64 {
        self.v - self.u
    }

    /// True if `x` is in the middle half `[u + w/4, v - w/4]`.
    pub fn in_inner_half(&self, x: f64) -> bool {
        let w = self.width();
        x >= self.u + 0.25 * w && x <= self.v - 0.25 * w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub constant: f64,
    /// Relative error bound of the integral behind `constant`.
    pub defect: f64,
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("phi needs a, b > 0 (got {a}, {b})")));
    }
    Ok(())
}

/// Evaluator for one `phi` variant, caching normalizing constants per `(a,b)`.
#[derive(Debug)]
pub struct PhiEvaluator {
    variant: PhiVariant,
    quad: QuadratureSpec,
    cache: RwLock<HashMap<(u64, u64), Normalization>>,
}

impl PhiEvaluator {
    pub fn new(variant: PhiVariant, quad: QuadratureSpec) -> Self {
        Self { variant, quad, cache: RwLock::new(HashMap::new()) }
    }

    pub fn variant(&self) -> PhiVariant {
        self.variant
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quad
    }

    /// Unnormalized `phi(a, b, t)`.
    pub fn integrand(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Ok(0.0);
        }
        let c = a.min(b);
        let (ta, tb) = (2.0 * t, 2.0 * (1.0 - t));
        // Gaussian in y with mean a(1-t) + bt and sd sqrt(t(1-t)), cut at c
        let sd = (t * (1.0 - t)).sqrt();
        let mean = a * (1.0 - t) + b * t;
        let mut breaks = Vec::with_capacity(16);
        for k in [0.25, 1.0, 4.0, 16.0] {
            breaks.extend([c - k * sd, mean - k * sd, mean + k * sd]);
        }
        let inner = integrate_with_breaks(
            |y| {
                let (p, q) = (a - y, b - y);
                p * q * (-(p * p) / ta - q * q / tb).exp()
            },
            0.0,
            c,
            &breaks,
            1e-300,
            self.quad.inner_tolerance,
            self.quad.nodes,
        )?;
        Ok(match self.variant {
            PhiVariant::Printed => inner.value,
            PhiVariant::JointDensity => inner.value * (t * (1.0 - t)).powf(-1.5),
        })
    }

    pub fn normalization(&self, a: f64, b: f64) -> Result<Normalization> {
        check_ab(a, b)?;
        let key = (a.to_bits(), b.to_bits());
        if let Some(n) = self.cache.read().expect("cache poisoned").get(&key) {
            return Ok(*n);
        }
        let failed = std::cell::Cell::new(None);
        let total = integrate_unit_cosine(
            |t| match self.integrand(a, b, t) {
                Ok(v) => v,
                Err(e) => {
                    failed.set(Some(e));
                    0.0
                }
            },
            1e-300,
            self.quad.tolerance * 1e-3,
        )?;
        if let Some(e) = failed.take() {
            return Err(e);
        }
        if !(total.value > 0.0) {
            return Err(Error::Numeric {
                message: format!("phi({a}, {b}, .) integrates to {}", total.value),
                achieved: 1.0,
            });
        }
        let defect = total.error / total.value;
        if defect > self.quad.tolerance {
            return Err(Error::Numeric {
                message: format!("normalization of phi({a}, {b}, .) not resolved"),
                achieved: defect,
            });
        }
        let n = Normalization { constant: 1.0 / total.value, defect };
        self.cache.write().expect("cache poisoned").insert(key, n);
        Ok(n)
    }

    pub fn phi(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        check_ab(a, b)?;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("phi needs 0 < t < 1 (got {t})")));
        }
        let n = self.normalization(a, b)?;
        Ok(n.constant * self.integrand(a, b, t)?)
    }

    /// `g(x) = phi(a/sqrt(w), b/sqrt(w), (x-u)/w) / w` with `w = v - u`.
    pub fn g_n_density(&self, bd: &BoundaryData, x: f64) -> Result<f64> {
        let bd = BoundaryData::new(bd.a, bd.b, bd.u, bd.v)?;
        if !(bd.u < x && x < bd.v) {
            return Err(Error::Domain(format!("x = {x} outside ({}, {})", bd.u, bd.v)));
        }
        let w = bd.width();
        let s = w.sqrt();
        Ok(self.phi(bd.a / s, bd.b / s, (x - bd.u) / w)? / w)
    }

    /// Minimum of `phi(a, b, .)` over `[1/4, 3/4]`: dense scan, then golden
    /// section around the best node.
    pub fn psi(&self, a: f64, b: f64) -> Result<f64> {
        let f = |t: f64| self.phi(a, b, t);
        let nodes = 64;
        let mut best = (0.25, f(0.25)?);
        for j in 1..=nodes {
            let t = 0.25 + 0.5 * j as f64 / nodes as f64;
            let v = f(t)?;
            if v < best.1 {
                best = (t, v);
            }
        }
        let h = 0.5 / nodes as f64;
        let (mut lo, mut hi) = ((best.0 - h).max(0.25), (best.0 + h).min(0.75));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if f(m1)? < f(m2)? {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        Ok(best.1.min(f(0.5 * (lo + hi))?))
    }

    /// Cumulative distribution of `phi(a, b, .)` tabulated for KS tests.
    pub fn cdf_table(&self, a: f64, b: f64, cells: usize) -> Result<PhiCdf> {
        let n = self.normalization(a, b)?;
        let map = |s: f64| 0.5 * (1.0 - (std::f64::consts::PI * s).cos());
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for j in 0..cells {
            let (s0, s1) = (j as f64 / cells as f64, (j + 1) as f64 / cells as f64);
            let piece = crate::quad::integrate(
                |s| {
                    let t = map(s);
                    let jac = 0.5 * std::f64::consts::PI * (std::f64::consts::PI * s).sin();
                    self.integrand(a, b, t).unwrap_or(f64::NAN) * jac
                },
                s0,
                s1,
                1e-300,
                1e-9,
            )?;
            acc += piece.value * n.constant;
            cum.push(acc);
        }
        Ok(PhiCdf { cum })
    }

    /// CSV table of `phi(a, b, t)` on `points` interior nodes, with a
    /// metadata header.
    pub fn table_csv(&self, a: f64, b: f64, points: usize) -> Result<String> {
        let n = self.normalization(a, b)?;
        let mut out = format!(
            "# variant={} a={a} b={b} interval=(0,1) tolerance={} defect={:e}\nt,value\n",
            self.variant.name(),
            self.quad.tolerance,
            n.defect
        );
        for j in 1..=points {
            let t = j as f64 / (points + 1) as f64;
            out.push_str(&format!("{t},{}\n", self.phi(a, b, t)?));
        }
        Ok(out)
    }
}

impl Default for PhiEvaluator {
    fn default() -> Self {
        Self::new(PhiVariant::JointDensity, QuadratureSpec::default())
    }
}

/// Piecewise-linear CDF on the cosine-mapped grid.
#[derive(Debug, Clone)]
pub struct PhiCdf {
    cum: Vec<f64>,
}

impl PhiCdf {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let cells = self.cum.len() - 1;
        let s = (1.0 - 2.0 * t).acos() / std::f64::consts::PI * cells as f64;
        let j = (s.floor() as usize).min(cells - 1);
        let frac = s - j as f64;
        (self.cum[j] + frac * (self.cum[j + 1] - self.cum[j])).clamp(0.0, 1.0)
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().expect("nonempty")
    }
}

/// Joint density of (argmin, min) of a Brownian bridge from `a` to `b` on
/// `[0,1]`.
pub fn minmin_joint_density(a: f64, b: f64, t: f64, y: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) || !(y < a.min(b)) {
        return Err(Error::Domain(format!(
            "joint density needs 0 < t < 1 and y < min(a, b) (t = {t}, y = {y})"
        )));
    }
    let (p, q) = (a - y, b - y);
    let d = a - b;
    Ok((2.0 / std::f64::consts::PI).sqrt() * p * q / (t - t * t).powf(1.5)
        * (0.5 * d * d - p * p / (2.0 * t) - q * q / (2.0 * (1.0 - t))).exp())
}

/// Probability of the cell `[t0,t1] x [y0,y1]` under [`minmin_joint_density`].
/// `y0` may be `-inf`.
pub fn minmin_cell_probability(a: f64, b: f64, t0: f64, t1: f64, y0: f64, y1: f64) -> Result<f64> {
    use std::f64::consts::PI;
    let top = a.min(b);
    let hi = y1.min(top);
    let lo = if y0.is_finite() { y0 } else { hi - 40.0 };
    if lo >= hi || t0 >= t1 {
        return Ok(0.0);
    }
    // the y-integrand lives within a few sqrt(t) of `top`
    let inner = |t: f64| -> f64 {
        let scale = t.min(1.0 - t).sqrt();
        let mut breaks = vec![0.0];
        for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let w = top - hi + k * scale;
            if w > top - hi && w < top - lo {
                breaks.push(w - (top - hi));
            }
        }
        breaks.push(hi - lo);
        breaks
            .windows(2)
            .map(|w| {
                crate::quad::integrate(
                    |d| minmin_joint_density(a, b, t, hi - d).unwrap_or(0.0),
                    w[0],
                    w[1],
                    1e-16,
                    1e-10,
                )
                .map(|i| i.value)
                .unwrap_or(f64::NAN)
            })
            .sum()
    };
    let span = t1 - t0;
    let r = crate::quad::integrate(
        |s| {
            let t = t0 + span * 0.5 * (1.0 - (PI * s).cos());
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            inner(t) * span * 0.5 * PI * (PI * s).sin()
        },
        0.0,
        1.0,
        1e-13,
        1e-9,
    )?;
    Ok(r.value)
}

/// Boundary data of `g_n` for a sampled path and the half of `I_n` that
/// holds `X_n`, from grid minima.
pub fn boundary_data_for(path: &BrownianPath, n: u64) -> Result<(BoundaryData, DyadicInterval)> {
    let iv = crate::enumeration::interval_of_index(n)?;
    let (left, _) = select_half(path, n)?;
    let (chosen, other) = if left {
        (iv.left_half(), iv.right_half())
    } else {
        (iv.right_half(), iv.left_half())
    };
    let (_, competing) = argmin_index_on(path, other)?;
    let bu = path.value_at(chosen.left())?;
    let bv = path.value_at(chosen.right())?;
    Ok((BoundaryData::new(bu - competing, bv - competing, chosen.left(), chosen.right())?, chosen))
}

/// Realized `g_n(x, omega)`: zero when `x` lies in the half that does not
/// hold `X_n`.
pub fn g_n_from_path(eval: &PhiEvaluator, path: &BrownianPath, n: u64, x: f64) -> Result<f64> {
    let (bd, chosen) = boundary_data_for(path, n)?;
    if chosen.contains(x) {
        eval.g_n_density(&bd, x)
    } else {
        Ok(0.0)
    }
}

/// Empirical `eps -> Pr{0 < g < eps}` of a sample of density values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProfile {
    positives: Vec<f64>,
    total: usize,
}

impl TailProfile {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Usage("tail profile of an empty sample".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("density sample {bad} is negative or NaN")));
        }
        let mut positives: Vec<f64> = samples.iter().copied().filter(|v| *v > 0.0).collect();
        positives.sort_by(f64::total_cmp);
        Ok(Self { positives, total: samples.len() })
    }

    pub fn eval(&self, eps: f64) -> f64 {
        let below = self.positives.partition_point(|v| *v < eps);
        below as f64 / self.total as f64
    }

    pub fn sample_size(&self) -> usize {
        self.total
    }

    /// Fraction of strictly positive samples.
    pub fn positive_fraction(&self) -> f64 {
        self.positives.len() as f64 / self.total as f64
    }
}

/// Pointwise supremum of several profiles on an `eps` grid.
pub fn envelope(profiles: &[TailProfile], eps_grid: &[f64]) -> Vec<f64> {
    eps_grid
        .iter()
        .map(|&e| profiles.iter().map(|p| p.eval(e)).fold(0.0, f64::max))
        .collect()
}
