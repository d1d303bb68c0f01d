//! Conditional densities `g_n(y_1..y_{n-1}, x)` on `(0,1)` driving the race.

use std::f64::consts::PI;

use crate::brownian::sample_path;
use crate::densities::{boundary_data_for, PhiEvaluator};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::arcsine_cdf;

pub const NORMALIZATION_CELLS: usize = 4096;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

pub trait DensityOracle: Send + Sync {
    fn id(&self) -> String;

    /// `g_n(history, x)` with `n = history.len() + 1`.
    fn density(&self, history: &[f64], x: f64) -> f64;

    /// `|int_0^1 g_n(history, x) dx - 1|` by the midpoint rule.
    fn normalization_defect(&self, history: &[f64]) -> f64 {
        let c = NORMALIZATION_CELLS;
        let s: f64 = (0..c).map(|i| self.density(history, (i as f64 + 0.5) / c as f64)).sum();
        (s / c as f64 - 1.0).abs()
    }

    /// `int_0^x g_n(history, u) du`; midpoint rule unless overridden.
    fn conditional_cdf(&self, history: &[f64], x: f64) -> f64 {
        let c = NORMALIZATION_CELLS as f64;
        let pos = x.clamp(0.0, 1.0) * c;
        let full = pos.floor() as usize;
        let mut s: f64 = (0..full).map(|i| self.density(history, (i as f64 + 0.5) / c)).sum();
        if full < NORMALIZATION_CELLS {
            s += (pos - full as f64) * self.density(history, (full as f64 + 0.5) / c);
        }
        s / c
    }

    /// Largest `n` the oracle is defined for.
    fn max_steps(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uniform;

impl DensityOracle for Uniform {
    fn id(&self) -> String {
        "iid-uniform".into()
    }

    fn density(&self, _: &[f64], _: f64) -> f64 {
        1.0
    }

    fn conditional_cdf(&self, _: &[f64], x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

/// i.i.d. `f(x) = 1 + slope (x - 1/2)`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    slope: f64,
}

impl Linear {
    pub fn new(slope: f64) -> Result<Self> {
        if !(slope.abs() <= 2.0) {
            return Err(Error::Domain(format!("linear slope {slope} gives a negative density")));
        }
        Ok(Self { slope })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        x + 0.5 * self.slope * (x * x - x)
    }
}

impl DensityOracle for Linear {
    fn id(&self) -> String {
        format!("iid-linear(slope={})", self.slope)
    }

    fn density(&self, _: &[f64], x: f64) -> f64 {
        1.0 + self.slope * (x - 0.5)
    }

    fn conditional_cdf(&self, _: &[f64], x: f64) -> f64 {
        self.cdf(x)
    }
}

/// i.i.d. `2 * 1[x < 1/2]`.
#[derive(Debug, Clone, Copy)]
pub struct HalfIndicator;

impl DensityOracle for HalfIndicator {
    fn id(&self) -> String {
        "half-indicator".into()
    }

    fn density(&self, _: &[f64], x: f64) -> f64 {
        if x < 0.5 {
            2.0
        } else {
            0.0
        }
    }

    fn conditional_cdf(&self, _: &[f64], x: f64) -> f64 {
        (2.0 * x).clamp(0.0, 1.0)
    }
}

/// Markov tilt `1 + c cos(2 pi (x - y_{n-1}))`, with `y_0 = 0`.
#[derive(Debug, Clone, Copy)]
pub struct CosineMarkov {
    c: f64,
}

impl CosineMarkov {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.abs() <= 1.0) {
            return Err(Error::Domain(format!("cosine tilt {c} gives a negative density")));
        }
        Ok(Self { c })
    }
}

impl DensityOracle for CosineMarkov {
    fn id(&self) -> String {
        format!("markov-cosine(c={})", self.c)
    }

    fn density(&self, history: &[f64], x: f64) -> f64 {
        let prev = history.last().copied().unwrap_or(0.0);
        1.0 + self.c * (2.0 * PI * (x - prev)).cos()
    }

    fn conditional_cdf(&self, history: &[f64], x: f64) -> f64 {
        let prev = history.last().copied().unwrap_or(0.0);
        let x = x.clamp(0.0, 1.0);
        x + self.c * ((2.0 * PI * (x - prev)).sin() + (2.0 * PI * prev).sin()) / (2.0 * PI)
    }
}

impl CosineMarkov {
    /// Unconditional law of `Y_n`: density `1 + c (c/2)^(n-1) cos(2 pi x)`.
    pub fn marginal_cdf(&self, n: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let amp = self.c * (0.5 * self.c).powi(n as i32 - 1);
        x + amp * (2.0 * PI * x).sin() / (2.0 * PI)
    }
}

/// Multiplies another oracle by a constant; any factor other than 1 breaks
/// normalization.
pub struct Scaled {
    inner: Box<dyn DensityOracle>,
    factor: f64,
}

impl Scaled {
    pub fn new(inner: Box<dyn DensityOracle>, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl DensityOracle for Scaled {
    fn id(&self) -> String {
        format!("{}*{}", self.inner.id(), self.factor)
    }

    fn density(&self, history: &[f64], x: f64) -> f64 {
        self.factor * self.inner.density(history, x)
    }

    fn max_steps(&self) -> Option<usize> {
        self.inner.max_steps()
    }
}

/// Piecewise-constant stand-in for the Brownian `f_n`: the marginal average
/// of realized `g_n` over `paths` independent paths (the arcsine law for
/// `n = 1`). History is ignored.
#[derive(Debug, Clone)]
pub struct BrownianNested {
    cells: usize,
    tables: Vec<Vec<f64>>,
    paths: usize,
    depth: u32,
    skipped: usize,
}

impl BrownianNested {
    pub fn build(levels: usize, paths: usize, depth: u32, cells: usize, seed: u64) -> Result<Self> {
        if levels == 0 || paths == 0 || cells == 0 {
            return Err(Error::Usage("nested oracle needs levels, paths and cells >= 1".into()));
        }
        let eval = PhiEvaluator::default();
        let mut tables = Vec::with_capacity(levels);
        tables.push(
            (0..cells)
                .map(|i| (arcsine_cdf((i + 1) as f64 / cells as f64) - arcsine_cdf(i as f64 / cells as f64)) * cells as f64)
                .collect(),
        );
        let sample: Vec<_> = (0..paths)
            .map(|p| sample_path(depth, derive_seed(seed, p as u64)))
            .collect::<Result<_>>()?;
        let mut skipped = 0;
        for n in 2..=levels as u64 {
            let mut mass = vec![0.0; cells];
            let mut used = 0usize;
            for path in &sample {
                let (bd, chosen) = match boundary_data_for(path, n) {
                    Ok(v) => v,
                    Err(Error::Domain(_)) | Err(Error::Degenerate(_)) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let w = bd.width();
                let cdf = eval.cdf_table(bd.a / w.sqrt(), bd.b / w.sqrt(), 32)?;
                let total = cdf.total();
                let first = ((chosen.left() * cells as f64).floor() as usize).min(cells - 1);
                let last = ((chosen.right() * cells as f64).ceil() as usize).clamp(first + 1, cells);
                for (c, m) in mass.iter_mut().enumerate().take(last).skip(first) {
                    let lo = ((c as f64 / cells as f64 - bd.u) / w).clamp(0.0, 1.0);
                    let hi = (((c + 1) as f64 / cells as f64 - bd.u) / w).clamp(0.0, 1.0);
                    *m += (cdf.eval(hi) - cdf.eval(lo)) / total;
                }
                used += 1;
            }
            if used == 0 {
                return Err(Error::Degenerate(format!("no usable path for level n = {n}")));
            }
            let s: f64 = mass.iter().sum();
            tables.push(mass.iter().map(|m| m / s * cells as f64).collect());
        }
        Ok(Self { cells, tables, paths, depth, skipped })
    }

    /// Paths dropped because a grid boundary value tied the competing minimum.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn table(&self, n: usize) -> Option<&[f64]> {
        self.tables.get(n.checked_sub(1)?).map(|v| v.as_slice())
    }
}

impl DensityOracle for BrownianNested {
    fn id(&self) -> String {
        format!("brownian-nested(paths={},depth={},cells={})", self.paths, self.depth, self.cells)
    }

    fn density(&self, history: &[f64], x: f64) -> f64 {
        let Some(t) = self.tables.get(history.len()) else {
            return 0.0;
        };
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        t[((x * self.cells as f64) as usize).min(self.cells - 1)]
    }

    fn conditional_cdf(&self, history: &[f64], x: f64) -> f64 {
        let Some(t) = self.tables.get(history.len()) else {
            return 0.0;
        };
        let pos = x.clamp(0.0, 1.0) * self.cells as f64;
        let i = (pos as usize).min(self.cells - 1);
        let below: f64 = t[..i].iter().sum();
        ((below + (pos - i as f64) * t[i]) / self.cells as f64).min(1.0)
    }

    fn max_steps(&self) -> Option<usize> {
        Some(self.tables.len())
    }
}

/// Oracle selection by id, as used in run configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub id: String,
    pub slope: f64,
    pub tilt: f64,
    pub scale: f64,
    pub nested_levels: usize,
    pub nested_paths: usize,
    pub nested_depth: u32,
    pub nested_cells: usize,
    pub seed: u64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            id: "iid-uniform".into(),
            slope: 1.0,
            tilt: 0.8,
            scale: 1.0,
            nested_levels: 8,
            nested_paths: 32,
            nested_depth: 12,
            nested_cells: 256,
            seed: 0,
        }
    }
}

pub const ORACLE_IDS: [&str; 5] = ["iid-uniform", "iid-linear", "half-indicator", "markov-cosine", "brownian-nested"];

impl OracleSpec {
    pub fn with_id(id: &str) -> Self {
        Self { id: id.into(), ..Self::default() }
    }

    pub fn build(&self) -> Result<Box<dyn DensityOracle>> {
        let base: Box<dyn DensityOracle> = match self.id.as_str() {
            "iid-uniform" => Box::new(Uniform),
            "iid-linear" => Box::new(Linear::new(self.slope)?),
            "half-indicator" => Box::new(HalfIndicator),
            "markov-cosine" => Box::new(CosineMarkov::new(self.tilt)?),
            "brownian-nested" => Box::new(BrownianNested::build(
                self.nested_levels,
                self.nested_paths,
                self.nested_depth,
                self.nested_cells,
                self.seed,
            )?),
            other => {
                return Err(Error::Config(format!(
                    "unknown oracle '{other}' (expected one of {})",
                    ORACLE_IDS.join(", ")
                )))
            }
        };
        Ok(if self.scale == 1.0 { base } else { Box::new(Scaled::new(base, self.scale)) })
    }
}
