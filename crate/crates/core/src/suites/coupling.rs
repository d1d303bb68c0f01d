//! Racing-extraction battery: Exp(1) race times, location laws, time/location
//! independence, on-graph consumption and the projection below a level.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{suite_seed, Artifact, Check, SuiteOutput};
use crate::config::RunConfig;
use crate::coupling::{
    divergence_diagnostics, run_replicas, CouplingOptions, CouplingTrace, DensityOracle, NormalizationCheck,
};
use crate::error::{Error, Result};
use crate::stats::{
    chi_square_uniform, exp1_cdf, ks_test, ks_two_sample, pearson_correlation, poisson_dispersion, uniform_cdf,
    TestReport,
};

pub const ON_GRAPH_TOLERANCE: f64 = 1e-9;
pub const PROJECTION_BINS: usize = 20;
pub const CORRELATION_LIMIT: f64 = 0.05;

/// Per-replica locations of consumed points below `level`, and how many
/// replicas did not reach it.
pub fn projections(traces: &[CouplingTrace], level: f64) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut sets = Vec::with_capacity(traces.len());
    let mut short = 0;
    for t in traces {
        match t.consumed_below(level) {
            Ok(mut xs) => {
                xs.sort_by(f64::total_cmp);
                sets.push(xs);
            }
            Err(Error::Resolution(_)) => short += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((sets, short))
}

/// Two-sided test of `sum counts ~ Poisson(n * level)`.
pub fn poisson_mean_test(counts: &[u64], level: f64) -> TestReport {
    let n = counts.len();
    let expected = n as f64 * level;
    let total = counts.iter().sum::<u64>() as f64;
    let z = (total - expected) / expected.sqrt();
    let p = 2.0 * Normal::standard().sf(z.abs());
    TestReport::new("poisson-mean", z, p.min(1.0), n)
}

/// Largest `|corr(T_i, Y_j)|` for `i, j <= k`, plus a Bonferroni-combined
/// Fisher-z report.
#[allow(clippy::needless_range_loop)]
pub fn time_location_correlation(traces: &[CouplingTrace], k: usize) -> Result<(f64, Vec<Vec<f64>>, TestReport)> {
    let full: Vec<&CouplingTrace> = traces.iter().filter(|t| t.steps.len() >= k).collect();
    let n = full.len();
    if n < 4 {
        return Err(Error::Degenerate(format!("only {n} replicas reached step {k}")));
    }
    let mut matrix = vec![vec![0.0; k]; k];
    let mut max_abs: f64 = 0.0;
    let mut min_p: f64 = 1.0;
    let normal = Normal::standard();
    for i in 0..k {
        let ts: Vec<f64> = full.iter().map(|t| t.steps[i].t).collect();
        for j in 0..k {
            let ys: Vec<f64> = full.iter().map(|t| t.steps[j].y).collect();
            let r = pearson_correlation(&ts, &ys)?;
            matrix[i][j] = r;
            max_abs = max_abs.max(r.abs());
            let z = r.clamp(-0.999_999, 0.999_999).atanh() * ((n - 3) as f64).sqrt();
            min_p = min_p.min(2.0 * normal.sf(z.abs()));
        }
    }
    let pairs = (k * k) as f64;
    let report = TestReport::new("time-location-independence", max_abs, (min_p * pairs).min(1.0), n)
        .with_note(format!("Bonferroni over {} pairs", k * k));
    Ok((max_abs, matrix, report))
}

/// Probability-integral transforms of `(T_n, Y_n)` over replicas whose step
/// `n` is unaffected by the strip's finite height. `T_n` is Exp(1) censored
/// at the predictable `cap`, so `F(T)/F(cap)` is uniform on the kept
/// replicas; `Y_n` is transformed by its conditional law given the history.
pub fn race_pit(traces: &[CouplingTrace], oracle: &dyn DensityOracle, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut tu = Vec::new();
    let mut yu = Vec::new();
    for tr in traces {
        if tr.steps_below_height + 1 < n || tr.steps.len() < n {
            continue;
        }
        let s = &tr.steps[n - 1];
        if s.t > s.cap {
            continue;
        }
        tu.push(exp1_cdf(s.t) / exp1_cdf(s.cap));
        yu.push(oracle.conditional_cdf(&tr.history(n), s.y));
    }
    (tu, yu)
}

struct OracleRun {
    id: String,
    projections: Vec<Vec<f64>>,
}

fn run_one(cfg: &RunConfig, id: &str, out: &mut SuiteOutput) -> Result<OracleRun> {
    let oracle = cfg.oracle_spec(id).build()?;
    let oracle: &dyn DensityOracle = oracle.as_ref();
    let replicas = cfg.count(cfg.coupling_replicas);
    let seed = suite_seed(cfg, 5);
    let traces = run_replicas(oracle, cfg.height, CouplingOptions::for_height(cfg.height), seed, replicas)?;
    let sig = cfg.significance;

    let race_steps = oracle.max_steps().map_or(cfg.race_steps, |m| m.min(cfg.race_steps));
    for n in 1..=race_steps {
        let (tu, yu) = race_pit(&traces, oracle, n);
        out.push_report(ks_test(&tu, uniform_cdf)?.named(format!("{id}/T{n}-exp1-ks")), sig);
        out.push_report(ks_test(&yu, uniform_cdf)?.named(format!("{id}/Y{n}-conditional-ks")), sig);
    }

    let violations: usize = traces.iter().map(|t| t.on_graph_violations(oracle, ON_GRAPH_TOLERANCE).len()).sum();
    let steps: usize = traces.iter().map(|t| t.steps.len()).sum();
    let max_gap = traces
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.graph_gap() / s.h.max(1.0)))
        .fold(0.0, f64::max);
    out.checks.push(Check::new(format!("{id}/on-graph-violations"), violations as f64, "==", 0.0));
    let missed: usize =
        traces.iter().map(|t| t.unconsumed.iter().filter(|p| p.h < t.l_star).count()).sum();
    out.checks.push(Check::new(format!("{id}/unconsumed-below-lstar"), missed as f64, "==", 0.0));

    let (sets, short) = projections(&traces, cfg.level)?;
    out.checks.push(Check::new(format!("{id}/level-not-reached"), short as f64, "==", 0.0));
    let pooled: Vec<f64> = sets.iter().flatten().copied().collect();
    let counts: Vec<u64> = sets.iter().map(|s| s.len() as u64).collect();
    if !pooled.is_empty() {
        out.push_report(chi_square_uniform(&pooled, PROJECTION_BINS)?.named(format!("{id}/projection-chi2")), sig);
    }
    if counts.len() >= 2 {
        out.push_report(poisson_dispersion(&counts)?.named(format!("{id}/projection-dispersion")), sig);
        out.push_report(poisson_mean_test(&counts, cfg.level).named(format!("{id}/projection-mean")), sig);
    }

    let corr_steps = oracle.max_steps().map_or(cfg.corr_steps, |m| m.min(cfg.corr_steps));
    let corr_replicas = cfg.count(cfg.corr_replicas).max(replicas);
    let short_traces = run_replicas(
        oracle,
        cfg.height,
        CouplingOptions { n_max: corr_steps, normalization_check: NormalizationCheck::FirstStep },
        seed,
        corr_replicas,
    )?;
    let (max_corr, matrix, indep) = time_location_correlation(&short_traces, corr_steps)?;
    out.checks.push(Check::new(format!("{id}/max-abs-corr"), max_corr, "<", CORRELATION_LIMIT));
    out.push_report(indep.named(format!("{id}/time-location-independence")), sig);

    let div_steps = traces.iter().map(|t| t.steps.len()).min().unwrap_or(0).min(cfg.race_steps.max(1));
    let divergence = if div_steps > 0 {
        let m: Vec<Vec<f64>> = traces.iter().map(|t| t.steps[..div_steps].iter().map(|s| s.g).collect()).collect();
        Some(divergence_diagnostics(&m, &[1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5])?)
    } else {
        None
    };

    out.detail(
        id,
        serde_json::json!({
            "oracle": oracle.id(),
            "replicas": replicas,
            "height": cfg.height,
            "steps": steps,
            "max_scaled_graph_gap": max_gap,
            "ties": traces.iter().map(|t| t.ties).sum::<usize>(),
            "exhausted": traces.iter().filter(|t| t.exhausted).count(),
            "mean_l_star": traces.iter().map(|t| t.l_star).sum::<f64>() / replicas as f64,
            "level": cfg.level,
            "mean_projected_count": counts.iter().sum::<u64>() as f64 / counts.len().max(1) as f64,
            "correlation_replicas": corr_replicas,
            "correlation_matrix": matrix,
            "density_diagnostics": divergence,
        }),
    );

    let mut csv = String::from("replica,n,T,Y,point_id,h\n");
    for (r, t) in traces.iter().enumerate().take(20) {
        for line in t.to_csv().lines().skip(1) {
            csv.push_str(&format!("{r},{line}\n"));
        }
    }
    out.artifacts.push(Artifact::new(format!("traces_{id}.csv"), csv));
    if let Some(t) = traces.first() {
        out.artifacts.push(Artifact::new(format!("trace_{id}.json"), t.to_json().to_string()));
    }
    Ok(OracleRun { id: id.into(), projections: sets })
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::new("coupling");
    let mut ids = vec![cfg.oracle.clone()];
    if !cfg.oracle2.is_empty() {
        if cfg.oracle2 == cfg.oracle {
            return Err(Error::Config("oracle2 must differ from oracle".into()));
        }
        ids.push(cfg.oracle2.clone());
    }
    let runs = ids.iter().map(|id| run_one(cfg, id, &mut out)).collect::<Result<Vec<_>>>()?;
    if let [a, b] = runs.as_slice() {
        let xa: Vec<f64> = a.projections.iter().flatten().copied().collect();
        let xb: Vec<f64> = b.projections.iter().flatten().copied().collect();
        if !xa.is_empty() && !xb.is_empty() {
            let r = ks_two_sample(&xa, &xb)?.named(format!("paired/{}-vs-{}-ks2", a.id, b.id));
            out.push_report(r, cfg.significance);
        }
        let same = a.projections.iter().zip(&b.projections).filter(|(p, q)| p == q).count();
        let pairs = a.projections.len().min(b.projections.len());
        out.detail(
            "paired",
            serde_json::json!({
                "oracles": [a.id, b.id],
                "replica_pairs": pairs,
                "identical_projection_fraction": if pairs > 0 { same as f64 / pairs as f64 } else { 0.0 },
            }),
        );
    }
    Ok(out)
}
