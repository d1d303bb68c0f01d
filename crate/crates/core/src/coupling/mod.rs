//! Poisson strip coupling: a planar Poisson set is consumed by exponential
//! racing against the accumulated graph `S_n(y) = sum T_k g_k(y)`.

pub mod diagnostics;
pub mod engine;
pub mod oracle;
pub mod strip;

pub use diagnostics::{divergence_diagnostics, DivergenceReport};
pub use engine::{
    run_coupling, run_on_strip, run_replicas, CouplingEngine, CouplingOptions, CouplingTrace, NormalizationCheck, Step,
};
pub use oracle::{
    BrownianNested, CosineMarkov, DensityOracle, HalfIndicator, Linear, OracleSpec, Scaled, Uniform, ORACLE_IDS,
};
pub use strip::{sample_strip, PoissonStrip, StripPoint};
