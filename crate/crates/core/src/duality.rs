//! Finite marriage-lemma duality in exact rational arithmetic.
//!
//! `max_mass` and `min_cover` solve the same bipartite network
//! (source -> x with capacity `mu(x)`, y -> sink with `nu(y)`, x -> y with
//! effectively infinite capacity on `W`), so their values agree exactly.

use std::collections::VecDeque;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use rand::Rng;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"`, or an exact decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Config(format!("'{s}' is not a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str(if digits == "-" || digits == "+" { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Q::from_integer(n * num::pow(ten, scale as usize))
    } else {
        Q::new(n, num::pow(ten, (-scale) as usize))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMeasure {
    weights: Vec<Q>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<Q>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::Domain(format!("negative weight {w}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![q(1, n.max(1) as i64); n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Q {
        &self.weights[i]
    }

    pub fn total(&self) -> Q {
        self.weights.iter().sum()
    }

    pub fn mass(&self, set: &[usize]) -> Q {
        set.iter().map(|&i| &self.weights[i]).sum()
    }
}

/// `W = U_1 x V_1 u ... u U_k x V_k` over a ground set `{0..n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSet {
    ground: usize,
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
    cells: Vec<bool>,
}

impl BlockSet {
    pub fn new(ground: usize, blocks: Vec<(Vec<usize>, Vec<usize>)>) -> Result<Self> {
        let mut cells = vec![false; ground * ground];
        for (u, v) in &blocks {
            if let Some(i) = u.iter().chain(v).find(|i| **i >= ground) {
                return Err(Error::Usage(format!("block index {i} outside ground set of size {ground}")));
            }
            for &x in u {
                for &y in v {
                    cells[x * ground + y] = true;
                }
            }
        }
        Ok(Self { ground, blocks, cells })
    }

    pub fn full(ground: usize) -> Self {
        let all: Vec<usize> = (0..ground).collect();
        Self::new(ground, vec![(all.clone(), all)]).expect("in range")
    }

    pub fn empty(ground: usize) -> Self {
        Self::new(ground, Vec::new()).expect("in range")
    }

    /// One singleton block per cell.
    pub fn from_cells(ground: usize, cells: &[(usize, usize)]) -> Result<Self> {
        Self::new(ground, cells.iter().map(|&(x, y)| (vec![x], vec![y])).collect())
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn blocks(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.blocks
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.ground && y < self.ground && self.cells[x * self.ground + y]
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.ground)
            .flat_map(|x| (0..self.ground).map(move |y| (x, y)))
            .filter(|&(x, y)| self.contains(x, y))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePartition {
    labels: Vec<usize>,
}

impl FinitePartition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn identity(n: usize) -> Self {
        Self { labels: (0..n).collect() }
    }

    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn equivalent(&self, x: usize, y: usize) -> bool {
        self.labels[x] == self.labels[y]
    }

    /// Classes in order of first appearance.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = Vec::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            match order.iter().position(|o| o == l) {
                Some(k) => classes[k].push(i),
                None => {
                    order.push(*l);
                    classes.push(vec![i]);
                }
            }
        }
        classes
    }

    /// `E` as a block set: the union of `C x C` over classes.
    pub fn relation(&self) -> BlockSet {
        BlockSet::new(self.len(), self.classes().into_iter().map(|c| (c.clone(), c)).collect()).expect("in range")
    }
}

/// Union of the classes meeting `a`, sorted.
pub fn saturate(a: &[usize], e: &FinitePartition) -> Vec<usize> {
    (0..e.len()).filter(|&x| a.iter().any(|&y| e.equivalent(x, y))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub ground: usize,
    /// Sparse `(x, y, mass)` with positive masses.
    pub entries: Vec<(usize, usize, Q)>,
}

impl Plan {
    pub fn total(&self) -> Q {
        self.entries.iter().map(|e| &e.2).sum()
    }

    pub fn marginals(&self) -> (Vec<Q>, Vec<Q>) {
        let mut a = vec![Q::zero(); self.ground];
        let mut b = vec![Q::zero(); self.ground];
        for (x, y, m) in &self.entries {
            a[*x] += m;
            b[*y] += m;
        }
        (a, b)
    }

    pub fn supported_on(&self, w: &BlockSet) -> bool {
        self.entries.iter().all(|(x, y, _)| w.contains(*x, *y))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|(x, y, m)| serde_json::json!([x, y, m.to_string()]))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub value: Q,
}

impl Cover {
    /// `W` inside `(U x B) u (B x V)`, by a full scan.
    pub fn covers(&self, w: &BlockSet) -> bool {
        let n = w.ground();
        let mut in_u = vec![false; n];
        let mut in_v = vec![false; n];
        self.u.iter().for_each(|&i| in_u[i] = true);
        self.v.iter().for_each(|&i| in_v[i] = true);
        w.cells().into_iter().all(|(x, y)| in_u[x] || in_v[y])
    }
}

fn check_dims(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Result<()> {
    if mu.len() != nu.len() || mu.len() != w.ground() {
        return Err(Error::Usage(format!(
            "dimension mismatch: |mu| = {}, |nu| = {}, ground of W = {}",
            mu.len(),
            nu.len(),
            w.ground()
        )));
    }
    Ok(())
}

struct FlowResult {
    value: Q,
    plan: Plan,
    reachable: Vec<bool>,
}

/// Edmonds-Karp on the bipartite network. Nodes: source 0, left `1..=n`,
/// right `n+1..=2n`, sink `2n+1`.
fn bipartite_flow(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> FlowResult {
    let n = mu.len();
    let nodes = 2 * n + 2;
    let (s, t) = (0, 2 * n + 1);
    let big = mu.total() + nu.total() + Q::one();
    let mut cap = vec![vec![Q::zero(); nodes]; nodes];
    for x in 0..n {
        cap[s][1 + x] = mu.weight(x).clone();
        cap[1 + n + x][t] = nu.weight(x).clone();
    }
    for (x, y) in w.cells() {
        cap[1 + x][1 + n + y] = big.clone();
    }
    let original = cap.clone();
    let mut value = Q::zero();
    let reachable = loop {
        let mut prev = vec![usize::MAX; nodes];
        let mut seen = vec![false; nodes];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(a) = queue.pop_front() {
            for b in 0..nodes {
                if !seen[b] && cap[a][b].is_positive() {
                    seen[b] = true;
                    prev[b] = a;
                    queue.push_back(b);
                }
            }
        }
        if !seen[t] {
            break seen;
        }
        let mut bottleneck = big.clone();
        let mut b = t;
        while b != s {
            let a = prev[b];
            if cap[a][b] < bottleneck {
                bottleneck = cap[a][b].clone();
            }
            b = a;
        }
        let mut b = t;
        while b != s {
            let a = prev[b];
            cap[a][b] -= &bottleneck;
            cap[b][a] += &bottleneck;
            b = a;
        }
        value += bottleneck;
    };
    let mut entries = Vec::new();
    for (x, y) in w.cells() {
        let f = &original[1 + x][1 + n + y] - &cap[1 + x][1 + n + y];
        if f.is_positive() {
            entries.push((x, y, f));
        }
    }
    FlowResult { value, plan: Plan { ground: n, entries }, reachable }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxMass {
    pub value: Q,
    pub plan: Plan,
}

/// Largest `m(W)` over `m` on `W` with marginals `<= mu`, `<= nu`.
pub fn max_mass(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Result<MaxMass> {
    check_dims(mu, nu, w)?;
    let r = bipartite_flow(mu, nu, w);
    Ok(MaxMass { value: r.value, plan: r.plan })
}

/// Cheapest `mu(U) + nu(V)` with `W` inside `(U x B) u (B x V)`, from the
/// minimum cut.
pub fn min_cover(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Result<Cover> {
    check_dims(mu, nu, w)?;
    let n = mu.len();
    let r = bipartite_flow(mu, nu, w);
    let u: Vec<usize> = (0..n).filter(|&x| !r.reachable[1 + x]).collect();
    let v: Vec<usize> = (0..n).filter(|&y| r.reachable[1 + n + y]).collect();
    let value = mu.mass(&u) + nu.mass(&v);
    if value != r.value {
        return Err(Error::Internal(format!("cut value {value} differs from flow value {}", r.value)));
    }
    Ok(Cover { u, v, value })
}

/// Whether some cover of `W` has zero cost.
pub fn zero_cover_exists(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Result<bool> {
    Ok(min_cover(mu, nu, w)?.value.is_zero())
}

/// `U = {f >= theta}`, `V = {g >= 1 - theta}`; requires `f(x) + g(y) >= 1`
/// on `W`.
pub fn threshold_cover(f: &[Q], g: &[Q], w: &BlockSet, theta: &Q) -> Result<(Vec<usize>, Vec<usize>)> {
    if f.len() != w.ground() || g.len() != w.ground() {
        return Err(Error::Usage("f, g and W must share the ground set".into()));
    }
    if let Some(v) = f.iter().chain(g).find(|v| v.is_negative()) {
        return Err(Error::Domain(format!("negative value {v} in (f, g)")));
    }
    if let Some((x, y)) = w.cells().into_iter().find(|&(x, y)| &f[x] + &g[y] < Q::one()) {
        return Err(Error::Domain(format!("f({x}) + g({y}) = {} < 1 on W", &f[x] + &g[y])));
    }
    let one_minus = Q::one() - theta;
    let u = (0..f.len()).filter(|&x| &f[x] >= theta).collect();
    let v = (0..g.len()).filter(|&y| g[y] >= one_minus).collect();
    Ok((u, v))
}

/// `int_0^1 mu({f >= theta}) d theta`, exactly, by sorting breakpoints.
pub fn threshold_average(mu: &FiniteMeasure, f: &[Q]) -> Q {
    let mut pts: Vec<Q> = f.iter().map(|v| v.clone().min(Q::one())).collect();
    pts.push(Q::zero());
    pts.sort();
    pts.dedup();
    let mut acc = Q::zero();
    for pair in pts.windows(2) {
        let upper = &pair[1];
        let level: Vec<usize> = (0..f.len()).filter(|&x| &f[x] >= upper).collect();
        acc += mu.mass(&level) * (upper - &pair[0]);
    }
    acc
}

/// Scans the breakpoints of `theta -> mu(U_theta) + nu(V_theta)` and returns
/// the cheapest `(theta, U, V, cost)`.
pub fn best_threshold(
    mu: &FiniteMeasure,
    nu: &FiniteMeasure,
    f: &[Q],
    g: &[Q],
    w: &BlockSet,
) -> Result<(Q, Vec<usize>, Vec<usize>, Q)> {
    let mut cands: Vec<Q> = f
        .iter()
        .cloned()
        .chain(g.iter().map(|v| Q::one() - v))
        .filter(|t| t.is_positive() && *t < Q::one())
        .collect();
    cands.push(q(1, 2));
    cands.sort();
    cands.dedup();
    // Left-closed pieces: also try just above each breakpoint.
    let mut all = cands.clone();
    let mut bounds = cands.clone();
    bounds.insert(0, Q::zero());
    bounds.push(Q::one());
    for pair in bounds.windows(2) {
        all.push((&pair[0] + &pair[1]) / q(2, 1));
    }
    let mut best: Option<(Q, Vec<usize>, Vec<usize>, Q)> = None;
    for theta in all {
        let (u, v) = threshold_cover(f, g, w, &theta)?;
        let cost = mu.mass(&u) + nu.mass(&v);
        if best.as_ref().is_none_or(|b| cost < b.3) {
            best = Some((theta, u, v, cost));
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinOutcome {
    Plan(Plan),
    /// A saturated set on which the two measures differ.
    Witness { set: Vec<usize>, mu_mass: Q, nu_mass: Q },
}

/// Per-class product plan concentrated on `E`, or a separating saturated set.
pub fn maximal_join(mu: &FiniteMeasure, nu: &FiniteMeasure, e: &FinitePartition) -> Result<JoinOutcome> {
    if mu.len() != nu.len() || mu.len() != e.len() {
        return Err(Error::Usage("mu, nu and E must share the ground set".into()));
    }
    if !mu.total().is_one() || !nu.total().is_one() {
        return Err(Error::Usage("maximal_join expects probability measures".into()));
    }
    let mut entries = Vec::new();
    for class in e.classes() {
        let (a, b) = (mu.mass(&class), nu.mass(&class));
        if a != b {
            return Ok(JoinOutcome::Witness { set: class, mu_mass: a, nu_mass: b });
        }
        if a.is_zero() {
            continue;
        }
        for &x in &class {
            for &y in &class {
                let m = mu.weight(x) * nu.weight(y) / &a;
                if m.is_positive() {
                    entries.push((x, y, m));
                }
            }
        }
    }
    Ok(JoinOutcome::Plan(Plan { ground: mu.len(), entries }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub mu: FiniteMeasure,
    pub nu: FiniteMeasure,
    pub w: BlockSet,
}

fn json_rational(v: &Value) -> Result<Q> {
    match v {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        other => Err(Error::Config(format!("weight {other} is neither a number nor a string"))),
    }
}

fn json_indices(v: &Value, ground: usize) -> Result<Vec<usize>> {
    let arr = v.as_array().ok_or_else(|| Error::Config(format!("expected an index list, got {v}")))?;
    arr.iter()
        .map(|i| {
            i.as_u64()
                .map(|i| i as usize)
                .filter(|i| *i < ground)
                .ok_or_else(|| Error::Config(format!("bad index {i} for ground size {ground}")))
        })
        .collect()
}

impl Instance {
    /// `{ground: n, mu: [...], nu: [...], blocks: [[[U], [V]], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("instance JSON: {e}")))?;
        let ground = v["ground"].as_u64().ok_or_else(|| Error::Config("missing integer 'ground'".into()))? as usize;
        let measure = |key: &str| -> Result<FiniteMeasure> {
            let arr = v[key].as_array().ok_or_else(|| Error::Config(format!("missing array '{key}'")))?;
            if arr.len() != ground {
                return Err(Error::Config(format!("'{key}' has {} weights, ground is {ground}", arr.len())));
            }
            FiniteMeasure::new(arr.iter().map(json_rational).collect::<Result<_>>()?)
                .map_err(|e| Error::Config(e.to_string()))
        };
        let (mu, nu) = (measure("mu")?, measure("nu")?);
        let blocks = v["blocks"].as_array().ok_or_else(|| Error::Config("missing array 'blocks'".into()))?;
        let blocks = blocks
            .iter()
            .map(|b| match b.as_array().map(|a| a.as_slice()) {
                Some([u, w]) => Ok((json_indices(u, ground)?, json_indices(w, ground)?)),
                _ => Err(Error::Config(format!("block {b} is not a [U, V] pair"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu, nu, w: BlockSet::new(ground, blocks)? })
    }

    pub fn to_json(&self) -> Value {
        let weights = |m: &FiniteMeasure| m.weights().iter().map(|w| Value::String(w.to_string())).collect::<Vec<_>>();
        serde_json::json!({
            "ground": self.w.ground(),
            "mu": weights(&self.mu),
            "nu": weights(&self.nu),
            "blocks": self.w.blocks().iter().map(|(u, v)| serde_json::json!([u, v])).collect::<Vec<_>>(),
        })
    }

    /// Random instance with weights `p/q`, `q <= 12`, and up to four blocks.
    pub fn random(ground: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let mut weights = || -> FiniteMeasure {
            FiniteMeasure::new((0..ground).map(|_| q(rng.random_range(0..=12), rng.random_range(1..=12))).collect())
                .expect("nonnegative")
        };
        let (mu, nu) = (weights(), weights());
        let mut rng = stream_rng(seed, 1);
        let k = rng.random_range(0..=4);
        let blocks = (0..k)
            .map(|_| {
                let mut pick = || (0..ground).filter(|_| rng.random_bool(0.4)).collect::<Vec<_>>();
                (pick(), pick())
            })
            .collect();
        Self { mu, nu, w: BlockSet::new(ground, blocks).expect("in range") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> FiniteMeasure {
        FiniteMeasure::new(vec![q(1, 2), q(1, 2)]).unwrap()
    }

    /// Exhaustive minimum over all `(U, V)` pairs.
    fn enumerate_covers(mu: &FiniteMeasure, nu: &FiniteMeasure, w: &BlockSet) -> Q {
        let n = w.ground();
        let mut best: Option<Q> = None;
        for um in 0u32..1 << n {
            for vm in 0u32..1 << n {
                if w.cells().iter().all(|&(x, y)| um >> x & 1 == 1 || vm >> y & 1 == 1) {
                    let u: Vec<usize> = (0..n).filter(|i| um >> i & 1 == 1).collect();
                    let v: Vec<usize> = (0..n).filter(|i| vm >> i & 1 == 1).collect();
                    let c = mu.mass(&u) + nu.mass(&v);
                    if best.as_ref().is_none_or(|b| c < *b) {
                        best = Some(c);
                    }
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert_eq!(parse_rational("1.5e-1").unwrap(), q(3, 20));
        assert_eq!(parse_rational("-.5").unwrap(), q(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn two_point_examples() {
        let (mu, nu) = (half(), half());
        let full = BlockSet::full(2);
        assert_eq!(max_mass(&mu, &nu, &full).unwrap().value, q(1, 1));
        let c = min_cover(&mu, &nu, &full).unwrap();
        assert_eq!(c.value, q(1, 1));
        assert!(c.u.len() == 2 || c.v.len() == 2);

        let diag = BlockSet::from_cells(2, &[(0, 0)]).unwrap();
        let m = max_mass(&mu, &nu, &diag).unwrap();
        assert_eq!(m.value, q(1, 2));
        assert_eq!(m.plan.entries, vec![(0, 0, q(1, 2))]);
        let c = min_cover(&mu, &nu, &diag).unwrap();
        assert_eq!(c.value, q(1, 2));
        assert!((c.u == vec![0] && c.v.is_empty()) || (c.u.is_empty() && c.v == vec![0]));
        assert_eq!(enumerate_covers(&mu, &nu, &full), q(1, 1));
        assert_eq!(enumerate_covers(&mu, &nu, &diag), q(1, 2));

        let empty = BlockSet::empty(2);
        assert!(max_mass(&mu, &nu, &empty).unwrap().value.is_zero());
        assert!(zero_cover_exists(&mu, &nu, &empty).unwrap());
        assert!(!zero_cover_exists(&mu, &nu, &diag).unwrap());
        assert!(matches!(max_mass(&mu, &FiniteMeasure::uniform(3), &full), Err(Error::Usage(_))));
    }

    #[test]
    fn duality_on_random_instances() {
        for seed in 0..60 {
            let inst = Instance::random(1 + (seed as usize % 6), seed);
            let m = max_mass(&inst.mu, &inst.nu, &inst.w).unwrap();
            let c = min_cover(&inst.mu, &inst.nu, &inst.w).unwrap();
            assert_eq!(m.value, c.value);
            assert!(c.covers(&inst.w));
            assert_eq!(c.value, enumerate_covers(&inst.mu, &inst.nu, &inst.w));
            let (a, b) = m.plan.marginals();
            assert!(m.plan.supported_on(&inst.w));
            assert!(a.iter().zip(inst.mu.weights()).all(|(x, y)| x <= y));
            assert!(b.iter().zip(inst.nu.weights()).all(|(x, y)| x <= y));
            assert_eq!(m.plan.total(), m.value);
        }
    }

    #[test]
    fn thresholds() {
        let w = BlockSet::full(3);
        let f = vec![q(1, 1), q(0, 1), q(1, 1)];
        let g = vec![q(1, 1); 3];
        let (u, _) = threshold_cover(&f, &g, &w, &q(1, 2)).unwrap();
        assert_eq!(u, vec![0, 2]);
        let bad = threshold_cover(&f, &vec![q(0, 1); 3], &w, &q(1, 2));
        assert!(matches!(bad, Err(Error::Domain(m)) if m.contains("f(1) + g(0)")));

        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let n = 5;
            let inst = Instance::random(n, rng.random());
            let f: Vec<Q> = (0..n).map(|_| q(rng.random_range(0..=8), 8)).collect();
            let g: Vec<Q> = f.iter().map(|v| Q::one() - v + q(rng.random_range(0..=2), 8)).collect();
            let w = BlockSet::new(n, (0..n).map(|x| (vec![x], (0..n).filter(|&y| &f[x] + &g[y] >= Q::one()).collect())).collect()).unwrap();
            let int_f: Q = (0..n).map(|x| inst.mu.weight(x) * &f[x]).sum();
            let int_g: Q = (0..n).map(|x| inst.nu.weight(x) * g[x].clone().min(Q::one())).sum();
            assert_eq!(threshold_average(&inst.mu, &f), int_f);
            let (theta, u, v, cost) = best_threshold(&inst.mu, &inst.nu, &f, &g, &w).unwrap();
            assert!(theta.is_positive() && theta < Q::one());
            assert!(cost <= int_f + int_g);
            assert!(Cover { u, v, value: cost }.covers(&w));
        }
    }

    #[test]
    fn saturation() {
        let e = FinitePartition::new(vec![7, 7, 3]);
        assert!(saturate(&[], &e).is_empty());
        assert_eq!(saturate(&[0], &e), vec![0, 1]);
        let mut rng = stream_rng(9, 0);
        for _ in 0..100 {
            let e = FinitePartition::new((0..8).map(|_| rng.random_range(0..3)).collect());
            let a: Vec<usize> = (0..8).filter(|_| rng.random_bool(0.3)).collect();
            let s = saturate(&a, &e);
            assert_eq!(saturate(&s, &e), s);
            assert!(a.iter().all(|x| s.contains(x)));
        }
    }

    #[test]
    fn joins() {
        let mu = FiniteMeasure::new(vec![q(1, 4), q(3, 4)]).unwrap();
        let nu = FiniteMeasure::new(vec![q(1, 2), q(1, 2)]).unwrap();
        let JoinOutcome::Plan(p) = maximal_join(&mu, &nu, &FinitePartition::single(2)).unwrap() else {
            panic!("single class always joins")
        };
        assert_eq!(p.total(), q(1, 1));
        assert_eq!(p.marginals(), (mu.weights().to_vec(), nu.weights().to_vec()));

        let JoinOutcome::Plan(p) = maximal_join(&nu, &nu, &FinitePartition::identity(2)).unwrap() else {
            panic!("equal measures join on the diagonal")
        };
        assert!(p.entries.iter().all(|(x, y, _)| x == y));
        assert_eq!(p.total(), q(1, 1));

        let e = FinitePartition::identity(2);
        match maximal_join(&mu, &nu, &e).unwrap() {
            JoinOutcome::Witness { set, mu_mass, nu_mass } => {
                assert_eq!(saturate(&set, &e), set);
                assert_ne!(mu_mass, nu_mass);
            }
            JoinOutcome::Plan(_) => panic!("measures differ on a class"),
        }
        assert!(maximal_join(&FiniteMeasure::uniform(2), &FiniteMeasure::new(vec![q(1, 1), q(1, 1)]).unwrap(), &e).is_err());
    }

    #[test]
    fn instance_json() {
        let text = r#"{"ground": 2, "mu": ["1/2", 0.5], "nu": [0.25, "3/4"], "blocks": [[[0], [0, 1]]]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.mu.weights(), &[q(1, 2), q(1, 2)]);
        assert_eq!(inst.nu.weights(), &[q(1, 4), q(3, 4)]);
        assert!(inst.w.contains(0, 1) && !inst.w.contains(1, 0));
        assert_eq!(Instance::from_json(&inst.to_json().to_string()).unwrap(), inst);
        for bad in [
            "{",
            r#"{"ground": 2, "mu": [1], "nu": [1, 1], "blocks": []}"#,
            r#"{"ground": 2, "mu": [1, -1], "nu": [1, 1], "blocks": []}"#,
            r#"{"ground": 2, "mu": [1, 1], "nu": [1, 1], "blocks": [[[5], [0]]]}"#,
            r#"{"ground": 2, "mu": [1, 1], "nu": [1, 1], "blocks": [[[0]]]}"#,
        ] {
            assert!(matches!(Instance::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
        let p = max_mass(&inst.mu, &inst.nu, &inst.w).unwrap().plan;
        assert_eq!(p.to_json(), serde_json::json!([[0, 0, "1/4"], [0, 1, "1/4"]]));
    }
}
