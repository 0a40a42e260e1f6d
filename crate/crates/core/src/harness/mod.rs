//! Experiment driver: geometry generators, the dense reference product,
//! configuration and report types, the cross-vs-Chebyshev table and the
//! self-test suite.

mod bounds;
mod config;
mod generators;
mod oracle;
mod run;
mod selftest;
mod table1;

pub use bounds::{check_shell_bound, ShellBoundCheck};
pub use config::{ConfigError, ExperimentConfig, GeometrySpec, Method, SCHEMA_VERSION};
pub use generators::{gen_cube_grid, gen_cube_grid_scaled, gen_ellipsoid_surface};
pub use oracle::{DenseOracle, MAX_ORACLE_N};
pub use run::{
    norm2, probe_vectors, relative_error, run_experiment, BasisSummary, BlockCounts, ConvergenceCurve,
    ExhaustedCluster, ExperimentReport, Guard, MatvecErrors, MethodReport, OracleStatus, ProblemSummary,
    RankCount, RunError, Side, Timing,
};
pub use selftest::{selftest, SelfCheck};
pub use table1::{table1_experiment, Table1Options, Table1Report, Table1Row};
