//! Exponential racing over the strip: step `n` picks the unconsumed point
//! minimizing `(h - S_{n-1}(y)) / g_n(y)`.

use rayon::prelude::*;
use serde::Serialize;

use super::oracle::{DensityOracle, NORMALIZATION_TOLERANCE};
use super::strip::{sample_strip, PoissonStrip, StripPoint};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Grid size used (together with the unconsumed points) to locate
/// `min_y S_n(y)`.
pub const GRAPH_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationCheck {
    EveryStep,
    FirstStep,
    Off,
}

#[derive(Debug, Clone, Copy)]
pub struct CouplingOptions {
    pub n_max: usize,
    pub normalization_check: NormalizationCheck,
}

impl CouplingOptions {
    /// `n_max = 10 H`, normalization checked at every step.
    pub fn for_height(height: f64) -> Self {
        Self { n_max: ((10.0 * height).ceil() as usize).max(1), normalization_check: NormalizationCheck::EveryStep }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub point_id: usize,
    pub h: f64,
    /// `S_{n-1}(Y_n)` as tracked by the engine.
    pub s_prev: f64,
    /// `g_n(history, Y_n)`.
    pub g: f64,
    /// Largest race time keeping `S_n` below `H` on the graph grid; the
    /// step matches the unbounded strip exactly when `t <= cap`.
    pub cap: f64,
}

impl Step {
    pub fn graph_gap(&self) -> f64 {
        (self.h - self.s_prev - self.t * self.g).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrace {
    pub seed: Option<u64>,
    pub height: f64,
    pub oracle: String,
    pub steps: Vec<Step>,
    pub unconsumed: Vec<StripPoint>,
    /// `min_y S_n(y)` at termination, capped at the strip height.
    pub l_star: f64,
    /// Number of leading steps whose graph stayed below the strip height
    /// (on the evaluation grid), i.e. unaffected by truncation.
    pub steps_below_height: usize,
    pub exhausted: bool,
    pub ties: usize,
}

impl CouplingTrace {
    pub fn ts(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.y).collect()
    }

    pub fn history(&self, n: usize) -> Vec<f64> {
        self.steps[..n.saturating_sub(1)].iter().map(|s| s.y).collect()
    }

    /// `S_n(y) = sum_{k <= n} T_k g_k(history, y)`, recomputed from the oracle.
    pub fn graph(&self, oracle: &dyn DensityOracle, n: usize, y: f64) -> f64 {
        let ys = self.ys();
        self.steps[..n].iter().enumerate().map(|(k, s)| s.t * oracle.density(&ys[..k], y)).sum()
    }

    /// Steps whose consumed point misses the graph by more than
    /// `tol * max(1, h)`, with `S_{n-1}` and `g_n` recomputed independently.
    pub fn on_graph_violations(&self, oracle: &dyn DensityOracle, tol: f64) -> Vec<usize> {
        let ys = self.ys();
        self.steps
            .iter()
            .enumerate()
            .filter(|(k, s)| {
                let prev = self.graph(oracle, *k, s.y);
                let g = oracle.density(&ys[..*k], s.y);
                (s.h - prev - s.t * g).abs() > tol * s.h.max(1.0)
            })
            .map(|(_, s)| s.n)
            .collect()
    }

    /// Locations of consumed points below `level`; errors when the run did
    /// not reach that level.
    pub fn consumed_below(&self, level: f64) -> Result<Vec<f64>> {
        if level > self.l_star && !(self.unconsumed.is_empty() && level <= self.height) {
            return Err(Error::Resolution(format!(
                "level {level} exceeds the consumption level {} of this run",
                self.l_star
            )));
        }
        Ok(self.steps.iter().filter(|s| s.h < level).map(|s| s.y).collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "H": self.height,
            "oracle": self.oracle,
            "n_steps": self.steps.len(),
            "L_star": self.l_star,
            "steps_below_height": self.steps_below_height,
            "exhausted": self.exhausted,
            "ties": self.ties,
            "steps": self.steps.iter().map(|s| serde_json::json!({
                "n": s.n, "T": s.t, "Y": s.y, "point_id": s.point_id
            })).collect::<Vec<_>>(),
            "unconsumed": self.unconsumed,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,T,Y,point_id,h\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{},{},{}\n", s.n, s.t, s.y, s.point_id, s.h));
        }
        out
    }
}

/// Race state for one strip.
pub struct CouplingEngine<'a> {
    strip: PoissonStrip,
    oracle: &'a dyn DensityOracle,
    /// `S_{n-1}` at every point.
    graph_at_point: Vec<f64>,
    grid: Vec<f64>,
    graph_on_grid: Vec<f64>,
    history: Vec<f64>,
    steps: Vec<Step>,
    steps_below_height: usize,
    ties: usize,
    check: NormalizationCheck,
}

impl<'a> CouplingEngine<'a> {
    pub fn new(strip: PoissonStrip, oracle: &'a dyn DensityOracle, check: NormalizationCheck) -> Self {
        let grid: Vec<f64> = (0..GRAPH_GRID).map(|i| (i as f64 + 0.5) / GRAPH_GRID as f64).collect();
        Self {
            graph_at_point: vec![0.0; strip.len()],
            graph_on_grid: vec![0.0; grid.len()],
            grid,
            strip,
            oracle,
            history: Vec::new(),
            steps: Vec::new(),
            steps_below_height: 0,
            ties: 0,
            check,
        }
    }

    pub fn strip(&self) -> &PoissonStrip {
        &self.strip
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Runs step `n = steps + 1`; `None` when no candidate remains.
    pub fn extract_next(&mut self) -> Result<Option<Step>> {
        let n = self.steps.len() + 1;
        if let Some(m) = self.oracle.max_steps() {
            if n > m {
                return Ok(None);
            }
        }
        let check = match self.check {
            NormalizationCheck::EveryStep => true,
            NormalizationCheck::FirstStep => n == 1,
            NormalizationCheck::Off => false,
        };
        if check {
            let defect = self.oracle.normalization_defect(&self.history);
            if !(defect <= NORMALIZATION_TOLERANCE) {
                return Err(Error::Config(format!(
                    "oracle {} has normalization defect {defect:e} at step {n}",
                    self.oracle.id()
                )));
            }
        }
        let mut dens = vec![0.0; self.strip.len()];
        let mut best: Option<(f64, usize)> = None;
        for (id, p) in self.strip.unconsumed() {
            let g = self.oracle.density(&self.history, p.y);
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("oracle {} returned {g} at y = {}", self.oracle.id(), p.y)));
            }
            dens[id] = g;
            let gap = p.h - self.graph_at_point[id];
            if gap < -1e-12 * p.h.max(1.0) {
                return Err(Error::Internal(format!(
                    "unconsumed point {id} lies {} below the graph at step {n}",
                    -gap
                )));
            }
            if g == 0.0 {
                continue;
            }
            let t = gap.max(0.0) / g;
            match best {
                Some((bt, _)) if t > bt => {}
                Some((bt, bid)) if t == bt => {
                    self.ties += 1;
                    log::debug!("tie at step {n} between points {bid} and {id}; keeping {bid}");
                }
                _ => best = Some((t, id)),
            }
        }
        let Some((t, id)) = best else {
            return Ok(None);
        };
        let p = self.strip.points()[id];
        let cap = self
            .graph_on_grid
            .iter()
            .zip(&self.grid)
            .map(|(s, &y)| {
                let d = self.oracle.density(&self.history, y);
                if d > 0.0 {
                    (self.strip.height() - s) / d
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        let step = Step { n, t, y: p.y, point_id: id, h: p.h, s_prev: self.graph_at_point[id], g: dens[id], cap };
        self.strip.mark_consumed(id)?;
        for (j, _) in self.strip.unconsumed() {
            self.graph_at_point[j] += t * dens[j];
        }
        self.graph_at_point[id] = p.h;
        let mut top: f64 = 0.0;
        for (s, &y) in self.graph_on_grid.iter_mut().zip(&self.grid) {
            *s += t * self.oracle.density(&self.history, y);
            top = top.max(*s);
        }
        if self.steps_below_height == self.steps.len() && top <= self.strip.height() {
            self.steps_below_height += 1;
        }
        self.history.push(p.y);
        self.steps.push(step);
        Ok(Some(step))
    }

    /// `min_y S_n(y)` over the grid and the unconsumed points, capped at `H`.
    pub fn consumption_level(&self) -> f64 {
        let grid_min = self.graph_on_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let point_min = self.strip.unconsumed().map(|(i, _)| self.graph_at_point[i]).fold(f64::INFINITY, f64::min);
        grid_min.min(point_min).min(self.strip.height())
    }

    pub fn finish(self, exhausted: bool) -> CouplingTrace {
        let l_star = self.consumption_level();
        CouplingTrace {
            seed: self.strip.seed(),
            height: self.strip.height(),
            oracle: self.oracle.id(),
            unconsumed: self.strip.unconsumed().map(|(_, p)| p).collect(),
            steps: self.steps,
            l_star,
            steps_below_height: self.steps_below_height,
            exhausted,
            ties: self.ties,
        }
    }
}

pub fn run_on_strip(strip: PoissonStrip, oracle: &dyn DensityOracle, options: CouplingOptions) -> Result<CouplingTrace> {
    if options.n_max == 0 {
        return Err(Error::Usage("n_max must be >= 1".into()));
    }
    let mut engine = CouplingEngine::new(strip, oracle, options.normalization_check);
    let mut exhausted = false;
    while engine.steps().len() < options.n_max {
        if engine.extract_next()?.is_none() {
            exhausted = true;
            break;
        }
    }
    Ok(engine.finish(exhausted))
}

pub fn run_coupling(oracle: &dyn DensityOracle, height: f64, options: CouplingOptions, seed: u64) -> Result<CouplingTrace> {
    run_on_strip(sample_strip(height, seed)?, oracle, options)
}

/// Independent replicas with seeds `derive_seed(seed, r)`, in replica order.
pub fn run_replicas(
    oracle: &dyn DensityOracle,
    height: f64,
    options: CouplingOptions,
    seed: u64,
    replicas: usize,
) -> Result<Vec<CouplingTrace>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_coupling(oracle, height, options, derive_seed(seed, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::oracle::{CosineMarkov, HalfIndicator, Scaled, Uniform};
    use super::*;

    fn two_points() -> PoissonStrip {
        PoissonStrip::from_points(
            1.0,
            vec![StripPoint { y: 0.25, h: 0.3 }, StripPoint { y: 0.75, h: 0.1 }],
        )
        .unwrap()
    }

    #[test]
    fn uniform_density_takes_lowest_point() {
        let mut e = CouplingEngine::new(two_points(), &Uniform, NormalizationCheck::EveryStep);
        let s = e.extract_next().unwrap().unwrap();
        assert_eq!((s.t, s.y, s.point_id), (0.1, 0.75, 1));
        let s = e.extract_next().unwrap().unwrap();
        assert!((s.t - 0.2).abs() < 1e-15);
        assert!(e.extract_next().unwrap().is_none());
    }

    #[test]
    fn indicator_density_skips_zero_region() {
        let mut e = CouplingEngine::new(two_points(), &HalfIndicator, NormalizationCheck::EveryStep);
        let s = e.extract_next().unwrap().unwrap();
        assert_eq!((s.t, s.y), (0.15, 0.25));
        assert!(e.extract_next().unwrap().is_none());
        let trace = e.finish(true);
        assert_eq!(trace.l_star, 0.0);
        assert_eq!(trace.unconsumed, vec![StripPoint { y: 0.75, h: 0.1 }]);
    }

    #[test]
    fn ties_go_to_the_smaller_id() {
        let strip = PoissonStrip::from_points(
            1.0,
            vec![StripPoint { y: 0.6, h: 0.2 }, StripPoint { y: 0.3, h: 0.2 }],
        )
        .unwrap();
        let mut e = CouplingEngine::new(strip, &Uniform, NormalizationCheck::Off);
        assert_eq!(e.extract_next().unwrap().unwrap().point_id, 0);
        assert_eq!(e.finish(false).ties, 1);
    }

    #[test]
    fn broken_normalization_is_a_config_error() {
        let o = Scaled::new(Box::new(Uniform), 1.2);
        let r = run_coupling(&o, 5.0, CouplingOptions::for_height(5.0), 1);
        assert!(matches!(r, Err(Error::Config(_))));
        assert!(run_coupling(&Uniform, 5.0, CouplingOptions { n_max: 0, ..CouplingOptions::for_height(5.0) }, 1).is_err());
    }

    #[test]
    fn points_below_consumption_level_are_consumed() {
        let o = CosineMarkov::new(0.8).unwrap();
        for seed in 0..20 {
            let tr = run_coupling(&o, 20.0, CouplingOptions::for_height(20.0), seed).unwrap();
            assert!(tr.unconsumed.iter().all(|p| p.h > tr.l_star));
            assert!(tr.on_graph_violations(&o, 1e-9).is_empty());
            for w in tr.steps.windows(2) {
                assert!(w[1].n == w[0].n + 1);
            }
            let ids: std::collections::HashSet<_> = tr.steps.iter().map(|s| s.point_id).collect();
            assert_eq!(ids.len(), tr.steps.len());
        }
    }

    #[test]
    fn exports() {
        let tr = run_on_strip(two_points(), &Uniform, CouplingOptions::for_height(1.0)).unwrap();
        let js = tr.to_json();
        assert_eq!(js["n_steps"], 2);
        assert_eq!(js["steps"][0]["Y"], 0.75);
        assert_eq!(js["unconsumed"].as_array().unwrap().len(), 0);
        assert!(tr.to_csv().starts_with("n,T,Y,point_id,h\n1,0.1,0.75,1,0.1\n"));
        assert!(tr.exhausted);
        assert!((tr.l_star - 0.3).abs() < 1e-12);
        assert_eq!(tr.consumed_below(1.0).unwrap().len(), 2);
    }
}
