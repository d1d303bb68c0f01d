//! Every suite on a reduced configuration, for a quick end-to-end check.

use super::{coupling, density, duality, minima, rational, SuiteOutput};
use crate::config::RunConfig;
use crate::error::Result;

pub fn reduced(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        depth: cfg.depth.min(12),
        minima_paths: 10,
        minima_kmax: cfg.minima_kmax.min(4),
        arcsine_samples: 2000,
        density_samples: 5000,
        tail_paths: 40,
        tail_kmax: 3,
        coupling_replicas: 100,
        corr_replicas: 2000,
        oracle2: if cfg.oracle2.is_empty() && cfg.oracle != "markov-cosine" { "markov-cosine".into() } else { cfg.oracle2.clone() },
        instances: 40,
        grid_l: cfg.grid_l.min(64),
        ..cfg.clone()
    }
}

pub fn run(cfg: &RunConfig) -> Result<Vec<SuiteOutput>> {
    let r = reduced(cfg);
    let mut out = vec![minima::run(&r)?, density::run(&r)?, coupling::run(&r)?, duality::run(&r)?, rational::run(&r)?];
    for s in &mut out {
        s.name = format!("selftest-{}", s.name);
    }
    Ok(out)
}
