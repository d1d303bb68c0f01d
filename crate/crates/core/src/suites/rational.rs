//! Greedy shift joining of the uniform and truncated exponential densities.

use super::{Artifact, Check, SuiteOutput};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::joining::{demo_densities, greedy_join, plan_marginals, shift_range, verify_rationality, GridDensity};

pub const RESIDUAL_LIMIT: f64 = 1e-3;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

fn add(a: &GridDensity, b: &GridDensity) -> GridDensity {
    let mut s = a.clone();
    s.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x += y);
    s
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::new("rational");
    if cfg.grid_l < 1 || cfg.shift_lo > cfg.shift_hi {
        return Err(Error::Config(format!(
            "need grid_l >= 1 and shift_lo <= shift_hi, got {}, [{}, {}]",
            cfg.grid_l, cfg.shift_lo, cfg.shift_hi
        )));
    }
    let (f, g) = demo_densities(cfg.grid_l)?;
    let plan = greedy_join(&f, &g, &shift_range(cfg.grid_l, cfg.shift_lo, cfg.shift_hi), cfg.sweeps)?;
    let (first, second) = plan_marginals(&plan);
    let err_f = add(&first, &plan.f_res).l1_distance(&f);
    let err_g = add(&second, &plan.g_res).l1_distance(&g);
    let rat = verify_rationality(&plan);

    out.checks.push(Check::new("residual-mass", plan.residual_mass(), "<", RESIDUAL_LIMIT));
    out.checks.push(Check::new("reconstruction-error", err_f.max(err_g), "<=", RECONSTRUCTION_TOLERANCE));
    out.checks.push(Check::flag("shifts-rational", rat.all_rational && rat.grid_aligned));
    out.detail("grid_l", cfg.grid_l);
    out.detail("final_residual", plan.residual_mass());
    out.detail("sweeps_used", plan.sweeps());
    out.detail("stalled", plan.stalled);
    out.detail("reconstruction_error", serde_json::json!({ "first": err_f, "second": err_g }));
    out.detail("rationality", &rat);

    out.artifacts.push(Artifact::new("residual_curve.csv", plan.residual_curve_csv()));
    out.artifacts.push(Artifact::new("plan.json", plan.to_json().to_string()));
    out.artifacts.push(Artifact::new("f.csv", f.to_csv()));
    out.artifacts.push(Artifact::new("g.csv", g.to_csv()));
    Ok(out)
}
