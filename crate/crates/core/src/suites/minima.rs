//! Minimizer enumeration on sampled paths: the level property, the
//! history-measurability of the half selection, and the arcsine law of the
//! global argmin.

use rayon::prelude::*;

use super::{histogram_csv, suite_seed, Artifact, Check, SuiteOutput};
use crate::brownian::{continuum_argmin_on, sample_path, DyadicInterval};
use crate::config::RunConfig;
use crate::enumeration::{enumerate_minimizers, left_half_from_history, level_argmins, select_half};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::stats::{arcsine_cdf, ks_test};

struct PathResult {
    rows: String,
    mismatches: usize,
    selection_mismatches: usize,
}

fn check_path(depth: u32, kmax: u32, seed: u64, replica: usize) -> Result<PathResult> {
    let path = sample_path(depth, seed)?;
    let m = 1u64 << kmax;
    let e = enumerate_minimizers(&path, m)?;
    let mut mismatches = 0;
    for k in 0..=kmax {
        let mut a = e.xs[..1 << k].to_vec();
        let mut b = level_argmins(&path, k)?;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        if a != b {
            mismatches += 1;
        }
    }
    let mut selection_mismatches = 0;
    for n in 2..=m {
        let (left, _) = select_half(&path, n)?;
        if left != left_half_from_history(n, &e.xs[..n as usize - 1])? {
            selection_mismatches += 1;
        }
    }
    let rows = e
        .to_csv()
        .lines()
        .skip(1)
        .map(|l| format!("{replica},{l}\n"))
        .collect();
    Ok(PathResult { rows, mismatches, selection_mismatches })
}

/// Continuum argmin locations of `samples` free paths.
pub fn arcsine_sample(depth: u32, samples: usize, seed: u64) -> Result<Vec<f64>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, r);
            let path = sample_path(depth, s)?;
            Ok(continuum_argmin_on(&path, DyadicInterval::unit(), s ^ 0x5eed)?.0)
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::new("minima");
    let paths = cfg.count(cfg.minima_paths);
    let seed = suite_seed(cfg, 1);
    let results = (0..paths)
        .into_par_iter()
        .map(|r| check_path(cfg.depth, cfg.minima_kmax, derive_seed(seed, r as u64), r))
        .collect::<Result<Vec<_>>>()?;
    let mismatches: usize = results.iter().map(|r| r.mismatches).sum();
    let selection: usize = results.iter().map(|r| r.selection_mismatches).sum();
    out.checks.push(Check::new("level-property-mismatches", mismatches as f64, "==", 0.0));
    out.checks.push(Check::new("selection-history-mismatches", selection as f64, "==", 0.0));
    out.detail("paths", paths);
    out.detail("depth", cfg.depth);
    out.detail("kmax", cfg.minima_kmax);
    out.detail("comparisons", paths * (cfg.minima_kmax as usize + 1));
    let mut csv = String::from("replica,n,x_n,interval_level,interval_position\n");
    results.iter().for_each(|r| csv.push_str(&r.rows));
    out.artifacts.push(Artifact::new("minimizers.csv", csv));

    if cfg.arcsine_samples > 0 {
        let ts = arcsine_sample(cfg.depth, cfg.arcsine_samples, suite_seed(cfg, 2))?;
        out.push_report(ks_test(&ts, arcsine_cdf)?.named("arcsine-ks"), cfg.significance);
        out.detail("arcsine_samples", ts.len());
        out.artifacts.push(Artifact::new("arcsine_histogram.csv", histogram_csv(&ts, 50, arcsine_cdf)));
    }
    Ok(out)
}
