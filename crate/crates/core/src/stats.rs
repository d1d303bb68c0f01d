//! Goodness-of-fit and dispersion tests used by the verification suites.
//!
//! p-values are asymptotic: the Kolmogorov series (with Stephens' finite-n
//! scaling) for KS, the chi-square survival function for Pearson and
//! dispersion statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Per-test significance used throughout the suites.
pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_id: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub significance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestReport {
    pub fn new(test_id: impl Into<String>, statistic: f64, p_value: f64, n: usize) -> Self {
        let p_value = if p_value.is_nan() { 0.0 } else { p_value.clamp(0.0, 1.0) };
        Self {
            test_id: test_id.into(),
            statistic,
            p_value,
            n,
            significance: DEFAULT_SIGNIFICANCE,
            pass: p_value > DEFAULT_SIGNIFICANCE,
            note: None,
        }
    }

    pub fn at(mut self, significance: f64) -> Self {
        self.significance = significance;
        self.pass = self.p_value > significance;
        self
    }

    pub fn named(mut self, test_id: impl Into<String>) -> Self {
        self.test_id = test_id.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// `Pr{K > lambda}` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    use std::f64::consts::PI;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (c * j * j).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += sign * term;
            if term < 1e-300 {
                break;
            }
            sign = -sign;
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let rn = n_eff.sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

fn sorted_finite(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Usage("empty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `sup |F_n - F|` for a continuous `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let s = sorted_finite(sample)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov test.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestReport> {
    let d = ks_statistic(sample, cdf)?;
    Ok(TestReport::new("ks", d, ks_p(d, sample.len() as f64), sample.len()))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<TestReport> {
    let (a, b) = (sorted_finite(x)?, sorted_finite(y)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(TestReport::new("ks2", d, ks_p(d, n_eff), a.len() + b.len()))
}

pub fn chi_square_sf(statistic: f64, df: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|c| c.sf(statistic)).unwrap_or(f64::NAN)
}

pub fn chi_square_cdf(statistic: f64, df: f64) -> f64 {
    if statistic <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(df).map(|c| c.cdf(statistic)).unwrap_or(f64::NAN)
}

/// Pearson statistic of `observed` against `expected` counts, `df` degrees of
/// freedom.
pub fn chi_square_counts(observed: &[u64], expected: &[f64], df: usize) -> Result<TestReport> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::Usage("observed/expected length mismatch".into()));
    }
    if df == 0 {
        return Err(Error::Usage("chi-square needs df >= 1".into()));
    }
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if !(e > 0.0) {
            return Err(Error::Domain(format!("expected count {e} must be positive")));
        }
        let d = o as f64 - e;
        stat += d * d / e;
    }
    let n = observed.iter().sum::<u64>() as usize;
    Ok(TestReport::new("chi2", stat, chi_square_sf(stat, df as f64), n))
}

/// Equal-width bin counts of a sample in `[0,1)`.
pub fn unit_histogram(sample: &[f64], bins: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; bins];
    for &x in sample {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(format!("value {x} outside [0,1)")));
        }
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    Ok(counts)
}

/// Pearson test of uniformity on `bins` equal cells of `[0,1)`.
pub fn chi_square_uniform(sample: &[f64], bins: usize) -> Result<TestReport> {
    if sample.is_empty() {
        return Err(Error::Usage("empty sample".into()));
    }
    if bins < 2 {
        return Err(Error::Usage("need at least 2 bins".into()));
    }
    let counts = unit_histogram(sample, bins)?;
    let e = sample.len() as f64 / bins as f64;
    Ok(chi_square_counts(&counts, &vec![e; bins], bins - 1)?.named("chi2-uniform"))
}

/// Index-of-dispersion test for Poisson counts: `sum (x - mean)^2 / mean`
/// against chi-square(n - 1), two-sided.
pub fn poisson_dispersion(counts: &[u64]) -> Result<TestReport> {
    if counts.len() < 2 {
        return Err(Error::Usage("dispersion test needs at least 2 counts".into()));
    }
    let n = counts.len();
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    if mean == 0.0 {
        return Ok(TestReport::new("poisson-dispersion", 0.0, 0.0, n).with_note("degenerate: zero mean"));
    }
    let stat = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / mean;
    let df = (n - 1) as f64;
    let lower = chi_square_cdf(stat, df);
    let upper = chi_square_sf(stat, df);
    let p = (2.0 * lower.min(upper)).min(1.0);
    let mut r = TestReport::new("poisson-dispersion", stat, p, n);
    if !r.pass {
        r = r.with_note(if stat < df { "underdispersed" } else { "overdispersed" });
    }
    Ok(r)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation; 0 when either input is constant.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage("correlation needs two equal-length samples of size >= 2".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        Ok(Self { sorted: sorted_finite(sample)? })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        ks_statistic(&self.sorted, cdf).expect("nonempty")
    }
}

/// CSV summary `test_id,statistic,p,pass`.
pub fn reports_to_csv(reports: &[TestReport]) -> String {
    let mut out = String::from("test_id,statistic,p,pass\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{}\n", r.test_id, r.statistic, r.p_value, r.pass));
    }
    out
}

pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Arcsine law `2/pi * asin(sqrt(t))`.
pub fn arcsine_cdf(t: f64) -> f64 {
    2.0 / std::f64::consts::PI * t.clamp(0.0, 1.0).sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn ks_hand_values() {
        let r = ks_test(&[0.5], uniform_cdf).unwrap();
        assert_eq!(r.statistic, 0.5);
        let n = 100;
        let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&q, uniform_cdf).unwrap();
        assert!((d - 0.005).abs() < 1e-15);
        let mut rev = q.clone();
        rev.reverse();
        assert_eq!(ks_statistic(&rev, uniform_cdf).unwrap(), d);
        assert!(matches!(ks_test(&[], uniform_cdf), Err(Error::Usage(_))));
    }

    #[test]
    fn kolmogorov_reference_points() {
        // tabulated quantiles of the Kolmogorov distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(1.9495) - 0.001).abs() < 2e-5);
        // both series agree at the switch point
        let l = 1.18;
        let mut s = 0.0;
        for k in 1..=50 {
            s += (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * l * l).exp();
        }
        assert!((kolmogorov_sf(l - 1e-12) - 2.0 * s).abs() < 1e-10);
    }

    #[test]
    fn chi_square_hand_values() {
        let balanced: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let r = chi_square_uniform(&balanced, 4).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let lumped = vec![0.1; 100];
        let r = chi_square_uniform(&lumped, 4).unwrap();
        assert_eq!(r.statistic, 300.0);
        assert!(!r.pass);
        assert!(chi_square_uniform(&[], 4).is_err());
        assert!(chi_square_uniform(&[1.0], 4).is_err());
    }

    #[test]
    fn chi_square_uniform_sample_passes() {
        let mut rng = stream_rng(42, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        assert!(chi_square_uniform(&xs, 20).unwrap().pass);
    }

    #[test]
    fn dispersion_cases() {
        let r = poisson_dispersion(&[5; 50]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.pass);
        assert_eq!(r.note.as_deref(), Some("underdispersed"));

        let alternating: Vec<u64> = (0..50).map(|i| if i % 2 == 0 { 0 } else { 20 }).collect();
        let r = poisson_dispersion(&alternating).unwrap();
        assert!(!r.pass);
        assert_eq!(r.note.as_deref(), Some("overdispersed"));

        let r = poisson_dispersion(&[0, 0, 0]).unwrap();
        assert!(!r.pass);
        assert!(r.note.unwrap().contains("degenerate"));

        let pois = Poisson::new(10.0).unwrap();
        let mut rng = stream_rng(1, 1);
        let c: Vec<u64> = (0..1000).map(|_| pois.sample(&mut rng) as u64).collect();
        assert!(poisson_dispersion(&c).unwrap().pass);
    }

    #[test]
    fn null_p_values_roughly_uniform() {
        let reps = 1000;
        let mut rejections = [0usize; 3];
        let pois = Poisson::new(7.0).unwrap();
        for r in 0..reps {
            let mut rng = stream_rng(900 + r as u64, 0);
            let xs: Vec<f64> = (0..200).map(|_| rng.random()).collect();
            if ks_test(&xs, uniform_cdf).unwrap().p_value < 0.05 {
                rejections[0] += 1;
            }
            if chi_square_uniform(&xs, 10).unwrap().p_value < 0.05 {
                rejections[1] += 1;
            }
            let c: Vec<u64> = (0..200).map(|_| pois.sample(&mut rng) as u64).collect();
            if poisson_dispersion(&c).unwrap().p_value < 0.05 {
                rejections[2] += 1;
            }
        }
        for (i, r) in rejections.iter().enumerate() {
            let f = *r as f64 / reps as f64;
            assert!((f - 0.05).abs() <= 0.02, "test {i}: rejection rate {f}");
        }
    }

    #[test]
    fn two_sample_detects_shift() {
        let mut rng = stream_rng(5, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() * 0.9).collect();
        assert!(ks_two_sample(&a, &b).unwrap().pass);
        assert!(!ks_two_sample(&a, &c).unwrap().pass);
    }

    #[test]
    fn correlation_and_ecdf() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson_correlation(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pearson_correlation(&x, &[1.0; 4]).unwrap(), 0.0);
        let e = EmpiricalCdf::new(&[0.2, 0.4]).unwrap();
        assert_eq!(e.eval(0.3), 0.5);
        assert!((e.sup_distance(uniform_cdf) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn csv_and_json() {
        let r = TestReport::new("x", 1.5, 0.2, 10);
        assert_eq!(reports_to_csv(std::slice::from_ref(&r)), "test_id,statistic,p,pass\nx,1.5,0.2,true\n");
        let js = serde_json::to_string(&r).unwrap();
        let back: TestReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
        assert!(!r.at(0.5).pass);
    }
}
