use serde::Serialize;

use crate::error::{Error, Result};

/// Empirical small-value profile and partial-sum growth of a replica x n
/// matrix of nonnegative values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub eps: Vec<f64>,
    /// `profile[n][j] = Pr{0 < Y_{n+1} < eps[j]}`.
    pub profile: Vec<Vec<f64>>,
    pub sup_profile: Vec<f64>,
    /// Mean of `Y_1 + ... + Y_n` over replicas.
    pub partial_sums: Vec<f64>,
    /// Sup profile nondecreasing in `eps` and below `0.05` at the smallest `eps`.
    pub small_values_controlled: bool,
    /// Second-half growth rate of the mean partial sums is at least half the
    /// first-half rate, and positive.
    pub partial_sums_grow: bool,
}

pub fn divergence_diagnostics(samples: &[Vec<f64>], eps_grid: &[f64]) -> Result<DivergenceReport> {
    if samples.is_empty() || samples[0].is_empty() {
        return Err(Error::Usage("empty sample matrix".into()));
    }
    let cols = samples[0].len();
    if samples.iter().any(|r| r.len() != cols) {
        return Err(Error::Usage("sample matrix is not rectangular".into()));
    }
    if let Some(v) = samples.iter().flatten().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("negative or NaN entry {v}")));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Usage("eps grid must be nonempty and positive".into()));
    }
    let mut eps = eps_grid.to_vec();
    eps.sort_by(f64::total_cmp);
    let reps = samples.len() as f64;
    let profile: Vec<Vec<f64>> = (0..cols)
        .map(|n| {
            eps.iter()
                .map(|&e| samples.iter().filter(|r| r[n] > 0.0 && r[n] < e).count() as f64 / reps)
                .collect()
        })
        .collect();
    let sup_profile: Vec<f64> =
        (0..eps.len()).map(|j| profile.iter().map(|p| p[j]).fold(0.0, f64::max)).collect();
    let mut partial_sums = Vec::with_capacity(cols);
    let mut acc = 0.0;
    for n in 0..cols {
        acc += samples.iter().map(|r| r[n]).sum::<f64>() / reps;
        partial_sums.push(acc);
    }
    let small_values_controlled = sup_profile.windows(2).all(|w| w[0] <= w[1]) && sup_profile[0] < 0.05;
    let half = cols.div_ceil(2);
    let early = partial_sums[half - 1] / half as f64;
    let late = if cols > half { (partial_sums[cols - 1] - partial_sums[half - 1]) / (cols - half) as f64 } else { early };
    let partial_sums_grow = late > 0.0 && late >= 0.5 * early;
    Ok(DivergenceReport { eps, profile, sup_profile, partial_sums, small_values_controlled, partial_sums_grow })
}
