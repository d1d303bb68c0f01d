//! Bridge argmin/minimum laws against the closed-form densities, the
//! `phi` variant adjudication, and tail profiles of realized `g_n`.

use rayon::prelude::*;
use serde::Serialize;

use super::{suite_seed, Artifact, Check, SuiteOutput};
use crate::brownian::{continuum_argmin_on, sample_bridge, sample_path, DyadicInterval};
use crate::config::RunConfig;
use crate::densities::{boundary_data_for, envelope, minmin_cell_probability, PhiEvaluator, PhiVariant, QuadratureSpec, TailProfile};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::{chi_square_counts, ks_test, TestReport};

/// `(argmin, min)` of `samples` bridges from `a` to `b`.
pub fn bridge_minima(a: f64, b: f64, depth: u32, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, r);
            let path = sample_bridge(a, b, depth, s)?;
            continuum_argmin_on(&path, DyadicInterval::unit(), s ^ 0x5eed)
        })
        .collect()
}

/// Level `y` with `Pr{min < y} = p` for the bridge from `a` to `b`.
pub fn min_quantile(a: f64, b: f64, p: f64) -> f64 {
    let c = -p.ln() / 2.0;
    0.5 * ((a + b) - ((a - b).powi(2) + 4.0 * c).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
    pub observed: u64,
    pub expected: f64,
}

/// Pearson test of the `(argmin, min)` sample on a `g x g` grid: uniform in
/// `t`, deciles of the minimum in `y`.
pub fn joint_histogram_test(a: f64, b: f64, sample: &[(f64, f64)], g: usize) -> Result<(TestReport, Vec<GridCell>)> {
    if g < 2 {
        return Err(Error::Usage("density grid needs at least 2 cells per side".into()));
    }
    let top = a.min(b);
    let mut y_edges = vec![f64::NEG_INFINITY];
    y_edges.extend((1..g).map(|j| min_quantile(a, b, j as f64 / g as f64)));
    y_edges.push(top);
    let n = sample.len() as f64;
    let mut cells = Vec::with_capacity(g * g);
    for i in 0..g {
        let (t0, t1) = (i as f64 / g as f64, (i + 1) as f64 / g as f64);
        for j in 0..g {
            let (y0, y1) = (y_edges[j], y_edges[j + 1]);
            let p = minmin_cell_probability(a, b, t0, t1, y0, y1)?;
            cells.push(GridCell { t0, t1, y0, y1, observed: 0, expected: n * p });
        }
    }
    for &(t, y) in sample {
        let i = ((t * g as f64) as usize).min(g - 1);
        let j = y_edges[1..g].partition_point(|e| *e <= y);
        cells[i * g + j].observed += 1;
    }
    let observed: Vec<u64> = cells.iter().map(|c| c.observed).collect();
    let expected: Vec<f64> = cells.iter().map(|c| c.expected).collect();
    let r = chi_square_counts(&observed, &expected, g * g - 1)?.named("joint-density-chi2");
    Ok((r, cells))
}

#[derive(Debug, Clone, Serialize)]
pub struct Adjudication {
    pub reports: Vec<(String, TestReport)>,
    /// The single variant that passes, if exactly one does.
    pub winner: Option<String>,
    pub conditioned_samples: usize,
}

/// KS of argmin locations of bridges whose minimum stays above 0 against
/// each `phi` variant.
pub fn adjudicate(a: f64, b: f64, sample: &[(f64, f64)], significance: f64) -> Result<Adjudication> {
    let ts: Vec<f64> = sample.iter().filter(|(_, y)| *y > 0.0).map(|(t, _)| *t).collect();
    let mut reports = Vec::new();
    for variant in [PhiVariant::JointDensity, PhiVariant::Printed] {
        let eval = PhiEvaluator::new(variant, QuadratureSpec::default());
        let cdf = eval.cdf_table(a, b, 512)?;
        let r = ks_test(&ts, |t| cdf.eval(t))?.named(format!("phi-{}-ks", variant.name())).at(significance);
        reports.push((variant.name().to_string(), r));
    }
    let passing: Vec<&String> = reports.iter().filter(|(_, r)| r.pass).map(|(v, _)| v).collect();
    let winner = if passing.len() == 1 { Some(passing[0].clone()) } else { None };
    Ok(Adjudication { reports, winner, conditioned_samples: ts.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailResult {
    pub levels: Vec<u64>,
    pub eps: Vec<f64>,
    /// `profiles[i][j] = Pr{0 < |I_n| g_n(x) < eps[j]}` for `n = levels[i]`.
    pub profiles: Vec<Vec<f64>>,
    pub envelope: Vec<f64>,
    /// Largest `eps` on the grid where the envelope is below `0.05`.
    pub threshold: Option<f64>,
    pub monotone: bool,
    pub samples_per_level: Vec<usize>,
    pub skipped: usize,
}

pub fn tail_levels(kmax: u32) -> Vec<u64> {
    let mut levels = vec![2u64];
    for k in 1..=kmax {
        levels.push((1 << k) + 1);
        levels.push(1 << (k + 1));
    }
    levels.dedup();
    levels
}

pub fn tail_eps_grid() -> Vec<f64> {
    (0..=12).map(|j| 10f64.powf(-3.0 + j as f64 / 4.0)).collect()
}

/// Scaled realized densities `|I_n| g_n(x)` at the quartiles of both halves
/// of `I_n`, over `paths` free paths.
pub fn tail_profiles(depth: u32, paths: usize, kmax: u32, seed: u64) -> Result<TailResult> {
    let levels = tail_levels(kmax);
    let eval = PhiEvaluator::default();
    let per_path = (0..paths as u64)
        .into_par_iter()
        .map(|r| {
            let path = sample_path(depth, derive_seed(seed, r))?;
            let mut vals: Vec<Option<Vec<f64>>> = Vec::with_capacity(levels.len());
            for &n in &levels {
                let (bd, _) = match boundary_data_for(&path, n) {
                    Ok(v) => v,
                    Err(Error::Domain(_)) | Err(Error::Degenerate(_)) => {
                        vals.push(None);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let w = bd.width();
                let s = w.sqrt();
                let mut v = vec![0.0; 6];
                for (i, f) in [0.25, 0.5, 0.75].into_iter().enumerate() {
                    v[i] = 2.0 * eval.phi(bd.a / s, bd.b / s, f)?;
                }
                vals.push(Some(v));
            }
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = tail_eps_grid();
    let mut profiles = Vec::new();
    let mut tails = Vec::new();
    let mut sizes = Vec::new();
    let mut skipped = 0;
    for i in 0..levels.len() {
        let mut sample = Vec::new();
        for p in &per_path {
            match &p[i] {
                Some(v) => sample.extend_from_slice(v),
                None => skipped += 1,
            }
        }
        let tp = TailProfile::new(&sample)?;
        profiles.push(eps.iter().map(|&e| tp.eval(e)).collect::<Vec<_>>());
        sizes.push(tp.sample_size());
        tails.push(tp);
    }
    let env = envelope(&tails, &eps);
    let monotone = env.windows(2).all(|w| w[0] <= w[1]);
    let threshold = eps.iter().zip(&env).filter(|(_, v)| **v < 0.05).map(|(e, _)| *e).next_back();
    Ok(TailResult { levels, eps, profiles, envelope: env, threshold, monotone, samples_per_level: sizes, skipped })
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::new("density");
    let (a, b) = (cfg.a, cfg.b);
    let joint = PhiEvaluator::default();
    let printed = PhiEvaluator::new(PhiVariant::Printed, QuadratureSpec::default());
    let nj = joint.normalization(a, b)?;
    let np = printed.normalization(a, b)?;
    out.checks.push(Check::new("normalization-defect", nj.defect, "<=", 1e-4));
    out.detail(
        "normalization",
        serde_json::json!({
            "joint-density": { "constant": nj.constant, "defect": nj.defect },
            "printed": { "constant": np.constant, "defect": np.defect },
        }),
    );

    let samples = cfg.count(cfg.density_samples);
    let sample = bridge_minima(a, b, cfg.density_depth, samples, suite_seed(cfg, 3))?;
    let (chi, cells) = joint_histogram_test(a, b, &sample, cfg.density_grid)?;
    out.push_report(chi, cfg.significance);
    let mut csv = String::from("t0,t1,y0,y1,observed,expected\n");
    for c in &cells {
        csv.push_str(&format!("{},{},{},{},{},{}\n", c.t0, c.t1, c.y0, c.y1, c.observed, c.expected));
    }
    out.artifacts.push(Artifact::new("joint_histogram.csv", csv));

    let adj = adjudicate(a, b, &sample, cfg.significance)?;
    let expected_frac = 1.0 - (-2.0 * a * b).exp();
    out.detail("bridges", samples);
    out.detail("bridge_depth", cfg.density_depth);
    out.detail("conditioned_fraction", adj.conditioned_samples as f64 / samples as f64);
    out.detail("conditioned_fraction_expected", expected_frac);
    out.detail("phi_winner", adj.winner.clone().unwrap_or_else(|| "none".into()));
    let mut csv = String::from("variant,D,p,pass\n");
    for (v, r) in &adj.reports {
        csv.push_str(&format!("{v},{},{},{}\n", r.statistic, r.p_value, r.pass));
    }
    out.artifacts.push(Artifact::new("phi_adjudication.csv", csv));
    out.details["phi_variants"] = serde_json::to_value(&adj.reports).expect("serializable");
    out.checks.push(Check::flag("phi-single-winner", adj.winner.is_some()));
    if let Some((_, r)) = adj.reports.iter().find(|(v, _)| Some(v) == adj.winner.as_ref()) {
        out.reports.push(r.clone());
    }
    for (name, eval) in [("joint-density", &joint), ("printed", &printed)] {
        out.artifacts.push(Artifact::new(format!("phi_{name}.csv"), eval.table_csv(a, b, 99)?));
    }

    if cfg.tail_paths > 0 {
        let tail = tail_profiles(cfg.depth, cfg.tail_paths, cfg.tail_kmax, suite_seed(cfg, 4))?;
        out.checks.push(Check::flag("tail-envelope-monotone", tail.monotone));
        out.checks.push(Check::flag("tail-threshold-found", tail.threshold.is_some()));
        let mut csv = String::from("eps,envelope");
        for n in &tail.levels {
            csv.push_str(&format!(",n{n}"));
        }
        csv.push('\n');
        for (j, e) in tail.eps.iter().enumerate() {
            csv.push_str(&format!("{e},{}", tail.envelope[j]));
            for p in &tail.profiles {
                csv.push_str(&format!(",{}", p[j]));
            }
            csv.push('\n');
        }
        out.artifacts.push(Artifact::new("tail_profile.csv", csv));
        out.detail("tail", &tail);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_quantiles_invert_the_reflection_law() {
        for (a, b) in [(1.0, 1.0), (0.3, 2.0)] {
            for p in [0.1, 0.5, 0.9] {
                let y = min_quantile(a, b, p);
                assert!(y < f64::min(a, b));
                assert!(((-2.0 * (a - y) * (b - y)).exp() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tail_levels_cover_each_depth() {
        assert_eq!(tail_levels(2), vec![2, 3, 4, 5, 8]);
    }
}
