//! Exact max-mass / min-cover sweep over random rational instances, plus the
//! threshold-cover and maximal-join constructions on the same instances.

use num::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use super::{suite_seed, Artifact, Check, SuiteOutput};
use crate::config::RunConfig;
use crate::duality::{
    best_threshold, max_mass, maximal_join, min_cover, q, saturate, threshold_average, BlockSet, FiniteMeasure,
    FinitePartition, Instance, JoinOutcome, Q,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Cheapest cover by enumerating `U`; the best `V` for a given `U` is forced.
pub fn brute_force_cover(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Q {
    let n = w.ground();
    let cells = w.cells();
    let mut best: Option<Q> = None;
    for mask in 0u64..1 << n {
        let mut v = vec![false; n];
        for &(x, y) in &cells {
            if mask >> x & 1 == 0 {
                v[y] = true;
            }
        }
        let u: Vec<usize> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
        let v: Vec<usize> = (0..n).filter(|&y| v[y]).collect();
        let c = mu.mass(&u) + nu.mass(&v);
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    }
    best.expect("at least the empty U")
}

#[derive(Debug, Default)]
struct InstanceResult {
    ground: usize,
    max_mass: Q,
    min_cover: Q,
    equal: bool,
    cover_valid: bool,
    brute_equal: bool,
    plan_feasible: bool,
    threshold_ok: bool,
    join_ok: bool,
    plan_json: serde_json::Value,
}

fn normalized(m: &FiniteMeasure) -> Option<FiniteMeasure> {
    let t = m.total();
    if t.is_zero() {
        return None;
    }
    FiniteMeasure::new(m.weights().iter().map(|w| w / &t).collect()).ok()
}

fn check_instance(inst: &Instance, seed: u64) -> Result<InstanceResult> {
    let (mu, nu, w) = (&inst.mu, &inst.nu, &inst.w);
    let n = w.ground();
    let mm = max_mass(mu, nu, w)?;
    let cover = min_cover(mu, nu, w)?;
    let (a, b) = mm.plan.marginals();
    let plan_feasible = mm.plan.supported_on(w)
        && mm.plan.total() == mm.value
        && (0..n).all(|i| &a[i] <= mu.weight(i) && &b[i] <= nu.weight(i));

    // Fractional feasible pair built from the cover; thresholding must do
    // no worse than its average cost and no better than the max mass.
    let mut rng = stream_rng(seed, 2);
    let alpha = q(rng.random_range(0..=6), 6);
    let in_u: Vec<bool> = (0..n).map(|x| cover.u.contains(&x)).collect();
    let in_v: Vec<bool> = (0..n).map(|y| cover.v.contains(&y)).collect();
    let f: Vec<Q> = (0..n).map(|x| if in_u[x] { Q::one() } else { alpha.clone() }).collect();
    let g: Vec<Q> = (0..n).map(|y| if in_v[y] { Q::one() } else { Q::one() - &alpha }).collect();
    let (_, tu, tv, cost) = best_threshold(mu, nu, &f, &g, w)?;
    let fractional = threshold_average(mu, &f) + threshold_average(nu, &g);
    let threshold_cover = crate::duality::Cover { u: tu, v: tv, value: cost.clone() };
    let threshold_ok = threshold_cover.covers(w) && cost <= fractional && cost >= mm.value;

    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n.max(1).div_ceil(2))).collect();
    let e = FinitePartition::new(labels);
    let join_ok = match (normalized(mu), normalized(nu)) {
        (Some(pm), Some(pn)) => match maximal_join(&pm, &pn, &e)? {
            JoinOutcome::Plan(p) => {
                let (a, b) = p.marginals();
                p.supported_on(&e.relation()) && a == pm.weights() && b == pn.weights()
            }
            JoinOutcome::Witness { set, mu_mass, nu_mass } => {
                saturate(&set, &e) == set && mu_mass == pm.mass(&set) && nu_mass == pn.mass(&set) && mu_mass != nu_mass
            }
        },
        _ => true,
    };

    Ok(InstanceResult {
        ground: n,
        equal: mm.value == cover.value,
        cover_valid: cover.covers(w),
        brute_equal: brute_force_cover(mu, nu, w) == cover.value,
        plan_feasible,
        threshold_ok,
        join_ok,
        plan_json: mm.plan.to_json(),
        max_mass: mm.value,
        min_cover: cover.value,
    })
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::new("duality");
    if cfg.max_ground == 0 || cfg.max_ground > 16 {
        return Err(Error::Config(format!("max_ground {} must lie in 1..=16", cfg.max_ground)));
    }
    let seed = suite_seed(cfg, 6);
    let instances: Vec<(Instance, u64)> = if cfg.instance_file.is_empty() {
        let count = cfg.count(cfg.instances);
        (0..count)
            .map(|i| {
                let s = derive_seed(seed, i as u64);
                (Instance::random(1 + i % cfg.max_ground, s), s)
            })
            .collect()
    } else {
        let text = std::fs::read_to_string(&cfg.instance_file)
            .map_err(|e| Error::Config(format!("cannot read instance file '{}': {e}", cfg.instance_file)))?;
        vec![(Instance::from_json(&text)?, seed)]
    };
    let results = instances
        .par_iter()
        .map(|(inst, s)| check_instance(inst, *s))
        .collect::<Result<Vec<_>>>()?;

    let count = |f: fn(&InstanceResult) -> bool| results.iter().filter(|r| !f(r)).count() as f64;
    out.checks.push(Check::new("equality-failures", count(|r| r.equal), "==", 0.0));
    out.checks.push(Check::new("invalid-covers", count(|r| r.cover_valid), "==", 0.0));
    out.checks.push(Check::new("brute-force-mismatches", count(|r| r.brute_equal), "==", 0.0));
    out.checks.push(Check::new("infeasible-plans", count(|r| r.plan_feasible), "==", 0.0));
    out.checks.push(Check::new("threshold-failures", count(|r| r.threshold_ok), "==", 0.0));
    out.checks.push(Check::new("join-failures", count(|r| r.join_ok), "==", 0.0));
    out.detail("instances", results.len());
    out.detail("max_ground", results.iter().map(|r| r.ground).max().unwrap_or(0));
    out.detail("source", if cfg.instance_file.is_empty() { "random" } else { "file" });

    let mut csv = String::from("instance,ground,max_mass,min_cover,equal,brute_force_equal\n");
    for (i, r) in results.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            r.ground, r.max_mass, r.min_cover, r.equal, r.brute_equal
        ));
    }
    out.artifacts.push(Artifact::new("instances.csv", csv));
    let plans: Vec<serde_json::Value> = instances
        .iter()
        .zip(&results)
        .map(|((inst, _), r)| serde_json::json!({ "instance": inst.to_json(), "max_mass": r.max_mass.to_string(), "plan": r.plan_json }))
        .collect();
    out.artifacts.push(Artifact::new("plans.json", serde_json::json!({ "instances": plans }).to_string()));
    Ok(out)
}
