//! Experiment configs, seeded parallel sweeps, and their CSV outputs.

mod config;
mod output;
mod runner;
mod tools;

pub use config::{
    expand_grid, AcSection, BanditSection, BaselineKind, Cell, ChainMetric, ChainSection, Command,
    ExperimentConfig, FieldBaseline, FixedPointSection, GoalMoveConfig, GridConfig, NamedBaseline,
    PolicyChoice, PolicyKind, SimplexFieldSection, TreeBenchSection,
};
pub use output::{
    best_cells, best_csv, code_version, manifest, mean_and_se, run_csv, sha256_hex, summarize,
    summary_csv, write_atomic, write_sweep, SummaryRow, BEST_HEADER, RUN_HEADER, SUMMARY_HEADER,
    TIE_BREAK,
};
pub use runner::{
    derive_seed, run_cell, run_sweep, sweep_cells, sweep_windows, CellResult, LogRow, RunLog,
    RunOptions, SweepResult, Window, WindowRule, SEED_RULE,
};
pub use tools::{
    bench_csv, fixed_point_verify, kl_csv, simplex_field, tree_bench, BenchRow, FixedPointReport,
    KlRow, Trend, BENCH_HEADER, KL_CONVERGED, KL_HEADER,
};
