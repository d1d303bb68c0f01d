//! Joinings concentrated on `{x - y rational}` built from grid densities by
//! greedy mass transfer along rational translations.

use num::rational::Ratio;
use num::Integer;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Shift = Ratio<i64>;

/// Cell values of a density on the grid `k / L`; cell `i` is
/// `[(offset + i) / L, (offset + i + 1) / L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub l: i64,
    pub offset: i64,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(l: i64, offset: i64, values: Vec<f64>) -> Result<Self> {
        if l <= 0 {
            return Err(Error::Usage(format!("grid resolution L must be positive, got {l}")));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("grid density value {v} is negative or not finite")));
        }
        Ok(Self { l, offset, values })
    }

    pub fn zeros(l: i64, offset: i64, cells: usize) -> Self {
        Self { l, offset, values: vec![0.0; cells] }
    }

    /// Exact cell averages of a law with distribution function `cdf` on
    /// `[lo / L, hi / L)`.
    pub fn from_cdf(l: i64, lo: i64, hi: i64, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::Usage("empty grid range".into()));
        }
        let lf = l as f64;
        let values = (lo..hi).map(|k| lf * (cdf((k + 1) as f64 / lf) - cdf(k as f64 / lf))).collect();
        Self::new(l, lo, values)
    }

    pub fn step(&self) -> Shift {
        Shift::new(1, self.l)
    }

    pub fn origin(&self) -> Shift {
        Shift::new(self.offset, self.l)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.l as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 / self.l as f64
    }

    /// Value on the cell with global index `k`, zero off the grid.
    pub fn at(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn l1_distance(&self, other: &GridDensity) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.values.len() as i64).max(other.offset + other.values.len() as i64);
        (lo..hi).map(|k| (self.at(k) - other.at(k)).abs()).sum::<f64>() / self.l as f64
    }

    /// Nonzero cells as `[left, right]` of their union's hull.
    pub fn support_range(&self) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|v| *v > 0.0)?;
        let last = self.values.iter().rposition(|v| *v > 0.0)?;
        Some((self.x(first), self.x(last + 1)))
    }

    /// CSV `x,value` with `x` the left cell edge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.x(i), v));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEntry {
    /// `y - x` along this entry.
    pub q: Shift,
    /// First-coordinate density of the transported mass.
    pub m: GridDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPlan {
    pub l: i64,
    pub entries: Vec<ShiftEntry>,
    pub f_res: GridDensity,
    pub g_res: GridDensity,
    /// Residual mass after each completed sweep.
    pub sweep_log: Vec<f64>,
    /// Residual mass after each individual transfer.
    pub transfer_log: Vec<f64>,
    pub stalled: bool,
}

impl ShiftPlan {
    pub fn empty(l: i64) -> Self {
        Self {
            l,
            entries: Vec::new(),
            f_res: GridDensity::zeros(l, 0, 0),
            g_res: GridDensity::zeros(l, 0, 0),
            sweep_log: Vec::new(),
            transfer_log: Vec::new(),
            stalled: false,
        }
    }

    pub fn residual_mass(&self) -> f64 {
        self.f_res.mass()
    }

    pub fn sweeps(&self) -> usize {
        self.sweep_log.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "step": format!("1/{}", self.l),
            "entries": self.entries.iter().map(|e| {
                let k = e.q * self.l;
                let range = e.m.support_range();
                serde_json::json!({
                    "q": if k.is_integer() { format!("{}/{}", k.to_integer(), self.l) } else { e.q.to_string() },
                    "mass": e.m.mass(),
                    "support_range": range.map(|(a, b)| vec![a, b]),
                })
            }).collect::<Vec<_>>(),
            "residual_mass": self.residual_mass(),
            "sweeps": self.sweeps(),
            "stalled": self.stalled,
            "sweep_log": self.sweep_log,
        })
    }

    /// CSV `sweep,residual_mass`.
    pub fn residual_curve_csv(&self) -> String {
        let mut out = String::from("sweep,residual_mass\n");
        for (i, r) in self.sweep_log.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, r));
        }
        out
    }
}

/// Transfers `min(f_res(x), g_res(x + q))` for each shift in turn, for up
/// to `sweeps` passes; stops early once nothing is left or a pass moves no
/// mass.
pub fn greedy_join(f: &GridDensity, g: &GridDensity, shifts: &[Shift], sweeps: usize) -> Result<ShiftPlan> {
    if f.l != g.l {
        return Err(Error::Usage(format!("grids differ: 1/{} vs 1/{}", f.l, g.l)));
    }
    let (mf, mg) = (f.mass(), g.mass());
    if (mf - mg).abs() > 1e-9 * mf.max(mg).max(1.0) {
        return Err(Error::Usage(format!("masses differ: {mf} vs {mg}")));
    }
    let l = f.l;
    let ks = shifts
        .iter()
        .map(|q| {
            let k = q * l;
            if k.is_integer() {
                Ok(k.to_integer())
            } else {
                Err(Error::Usage(format!("shift {q} is not a multiple of 1/{l}")))
            }
        })
        .collect::<Result<Vec<i64>>>()?;
    let mut f_res = f.clone();
    let mut g_res = g.clone();
    let mut entries: Vec<ShiftEntry> = ks
        .iter()
        .map(|&k| ShiftEntry { q: Shift::new(k, l), m: GridDensity::zeros(l, f.offset, f.values.len()) })
        .collect();
    let mut sweep_log = Vec::new();
    let mut transfer_log = Vec::new();
    let mut stalled = false;
    let mut residual = f_res.mass();
    for _ in 0..sweeps {
        if residual == 0.0 {
            break;
        }
        let mut moved = false;
        for (e, &k) in entries.iter_mut().zip(&ks) {
            let mut transferred = 0.0;
            for i in 0..f_res.values.len() {
                let fv = f_res.values[i];
                if fv == 0.0 {
                    continue;
                }
                let j = f_res.offset + i as i64 + k - g_res.offset;
                if j < 0 || j as usize >= g_res.values.len() {
                    continue;
                }
                let gv = &mut g_res.values[j as usize];
                let m = fv.min(*gv);
                if m > 0.0 {
                    *gv = if m == *gv { 0.0 } else { *gv - m };
                    f_res.values[i] = if m == fv { 0.0 } else { fv - m };
                    e.m.values[i] += m;
                    transferred += m;
                }
            }
            if transferred > 0.0 {
                moved = true;
                residual = f_res.mass();
            }
            transfer_log.push(residual);
        }
        sweep_log.push(residual);
        if !moved {
            stalled = residual > 0.0;
            if stalled {
                log::warn!("greedy join stalled with residual mass {residual}");
            }
            break;
        }
    }
    entries.retain(|e| e.m.values.iter().any(|v| *v > 0.0));
    Ok(ShiftPlan { l, entries, f_res, g_res, sweep_log, transfer_log, stalled })
}

/// `(sum_q m_q, sum_q translate(m_q, q))` on the residuals' grids; residuals
/// themselves are not included.
pub fn plan_marginals(plan: &ShiftPlan) -> (GridDensity, GridDensity) {
    let mut first = GridDensity::zeros(plan.l, plan.f_res.offset, plan.f_res.values.len());
    let mut second = GridDensity::zeros(plan.l, plan.g_res.offset, plan.g_res.values.len());
    for e in &plan.entries {
        let k = (e.q * plan.l).to_integer();
        for (i, &v) in e.m.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let gx = e.m.offset + i as i64;
            first.values[(gx - first.offset) as usize] += v;
            second.values[(gx + k - second.offset) as usize] += v;
        }
    }
    (first, second)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalityReport {
    pub entries: usize,
    pub shifts: Vec<String>,
    pub all_rational: bool,
    /// Every shift is a multiple of the plan's grid step.
    pub grid_aligned: bool,
    /// Least common multiple of the reduced shift denominators.
    pub denominator_lcm: i64,
    pub grid_denominator: i64,
}

pub fn verify_rationality(plan: &ShiftPlan) -> RationalityReport {
    let lcm = plan.entries.iter().fold(1i64, |acc, e| acc.lcm(e.q.denom()));
    RationalityReport {
        entries: plan.entries.len(),
        shifts: plan.entries.iter().map(|e| e.q.to_string()).collect(),
        all_rational: plan.entries.iter().all(|e| *e.q.denom() > 0),
        grid_aligned: plan.entries.iter().all(|e| (e.q * plan.l).is_integer()),
        denominator_lcm: lcm,
        grid_denominator: plan.l,
    }
}

pub const DEMO_XMAX: f64 = 5.0;

/// Uniform(0,1) and Exp(1) truncated to `(0, 5)` and renormalized, on the
/// `1/L` grid.
pub fn demo_densities(l: i64) -> Result<(GridDensity, GridDensity)> {
    let f = GridDensity::from_cdf(l, 0, l, |x| x.clamp(0.0, 1.0))?;
    let z = -(-DEMO_XMAX).exp_m1();
    let g = GridDensity::from_cdf(l, 0, 5 * l, |x| -(-x.clamp(0.0, DEMO_XMAX)).exp_m1() / z)?;
    Ok((f, g))
}

/// All multiples of `1/L` in `[lo, hi]`.
pub fn shift_range(l: i64, lo: i64, hi: i64) -> Vec<Shift> {
    (lo * l..=hi * l).map(|k| Shift::new(k, l)).collect()
}

pub fn uniform_exponential_demo(l: i64, sweeps: usize) -> Result<ShiftPlan> {
    let (f, g) = demo_densities(l)?;
    greedy_join(&f, &g, &shift_range(l, -1, 5), sweeps)
}
