#![allow(dead_code)]

use num::rational::BigRational;
use num::{One, Signed, Zero};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erf;

pub type Q = BigRational;

/// `sup |F_n - F|` by direct scan.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic Kolmogorov tail with Stephens' finite-n adjustment.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn ks_p(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_p_value(ks_distance(sample, cdf), sample.len())
}

/// Pearson statistic and its upper tail.
pub fn chi_square_p(observed: &[u64], expected: &[f64], df: usize) -> (f64, f64) {
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    (stat, ChiSquared::new(df as f64).unwrap().sf(stat))
}

/// Two-sided index-of-dispersion p-value.
pub fn dispersion_p(counts: &[u64]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / mean;
    let chi = ChiSquared::new(n - 1.0).unwrap();
    (2.0 * chi.cdf(stat).min(chi.sf(stat))).min(1.0)
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Adaptive Simpson on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // split first so that narrow features near the ends are seen
    let pieces = 64;
    (0..pieces)
        .map(|i| {
            let (l, r) = (a + (b - a) * i as f64 / pieces as f64, a + (b - a) * (i + 1) as f64 / pieces as f64);
            let (fl, fm, fr) = (f(l), f(0.5 * (l + r)), f(r));
            rec(f, l, r, fl, fm, fr, (r - l) / 6.0 * (fl + 4.0 * fm + fr), tol / pieces as f64, 40)
        })
        .sum()
}

/// Density in `t` of `{argmin = t, y0 < min < y1}` for the Brownian bridge
/// from `a` to `b` on `[0,1]`: twice the product of the two first-passage
/// densities to the level `y` over the bridge transition density. (The
/// first-passage convolution identity makes its `t`-marginal
/// `2 (a+b-2y) exp(-2 (a-y)(b-y))`, the derivative of the reflection law.)
/// The `y`-integral is done in closed form.
pub fn argmin_density_in_band(a: f64, b: f64, t: f64, y0: f64, y1: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let d = b - a;
    let s2 = t * (1.0 - t);
    let s = s2.sqrt();
    let (c1, c0) = (d * (1.0 - 2.0 * t), -s2 * d * d);
    // antiderivative of (u^2 + c1 u + c0) exp(-u^2 / 2 s^2)
    let anti = |u: f64| -> f64 {
        if u == f64::INFINITY {
            return (s2 + c0) * s * (std::f64::consts::PI / 2.0).sqrt();
        }
        let e = (-u * u / (2.0 * s2)).exp();
        let g = s * (std::f64::consts::PI / 2.0).sqrt() * erf(u / (s * std::f64::consts::SQRT_2));
        -s2 * u * e + s2 * g - c1 * s2 * e + c0 * g
    };
    let u = |y: f64| if y == f64::NEG_INFINITY { f64::INFINITY } else { a - y + t * d };
    let top = y1.min(a.min(b));
    if y0 >= top {
        return 0.0;
    }
    2.0 * (anti(u(y0)) - anti(u(top))) / ((2.0 * std::f64::consts::PI).sqrt() * s2 * s)
}

pub fn bridge_cell_probability(a: f64, b: f64, t0: f64, t1: f64, y0: f64, y1: f64) -> f64 {
    integrate(&|t| argmin_density_in_band(a, b, t, y0, y1), t0, t1, 1e-12)
}

/// Exact maximum of `sum m_xy` over `m >= 0` on `cells` with row sums
/// `<= mu` and column sums `<= nu`, by a dense rational simplex with
/// Bland's rule from the slack basis.
pub fn lp_max_mass(mu: &[Q], nu: &[Q], cells: &[(usize, usize)]) -> Q {
    let n = mu.len();
    let vars = cells.len();
    let rows = 2 * n;
    let cols = vars + rows;
    // tableau rows: constraints; last row: reduced costs (maximize)
    let mut t = vec![vec![Q::zero(); cols + 1]; rows + 1];
    for (j, &(x, y)) in cells.iter().enumerate() {
        t[x][j] = Q::one();
        t[n + y][j] = Q::one();
        t[rows][j] = -Q::one();
    }
    for i in 0..rows {
        t[i][vars + i] = Q::one();
        t[i][cols] = if i < n { mu[i].clone() } else { nu[i - n].clone() };
    }
    let mut basis: Vec<usize> = (vars..cols).collect();
    while let Some(enter) = (0..cols).find(|&j| t[rows][j].is_negative()) {
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..rows {
            if t[i][enter].is_positive() {
                let ratio = &t[i][cols] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.expect("bounded: all variables are capped by the marginals");
        let p = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
        basis[r] = enter;
    }
    t[rows][cols].clone()
}

/// Grid argmin of the owned points `(i-1) s + 1 ..= i s` (last point
/// excluded) for each level-`k` interval, by direct scan.
pub fn scan_level_argmins(values: &[f64], depth: u32, k: u32) -> Vec<f64> {
    let stride = 1usize << (depth - k);
    let last = 1usize << depth;
    (1..=(1usize << k))
        .map(|i| {
            let lo = (i - 1) * stride + 1;
            let hi = (i * stride).min(last - 1);
            let mut best = lo;
            for j in lo..=hi {
                if values[j] < values[best] {
                    best = j;
                }
            }
            best as f64 / last as f64
        })
        .collect()
}
