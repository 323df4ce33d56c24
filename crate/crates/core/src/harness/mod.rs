//! Experiment runner: specs, cells, metrics, CSV, plots and grid search.

mod grid;
mod metrics;
mod plot;
mod run;
mod seed;
mod spec;

pub use grid::{grid_search, write_grid_table, GridPoint, GridResult, GridScore, HyperGrid};
pub use metrics::{
    aggregate, mean_se, metrics_from_rows, read_episode_csv, read_episode_csv_file, seed_task_sums,
    seed_totals, write_episode_csv, AggregateSeries, MetricsRecord,
};
pub use plot::{render_plots, PlotMode};
pub use run::{
    run_cell, run_cells, run_experiment, run_experiment_with, CellResult, CellSpec, EpisodeRow,
    Execution, ExperimentResult,
};
pub use seed::derive_seed;
pub use spec::{AgentOverrides, ExperimentSpec, Sweep, SweepParam, SweepPoint};
