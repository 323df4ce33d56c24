use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sfnec::agents::{AgentKind, Neighbours};
use sfnec::env::{build_layout, EnvConfig};
use sfnec::harness::{
    aggregate, grid_search, metrics_from_rows, read_episode_csv_file, render_plots,
    run_experiment_with, write_episode_csv, write_grid_table, Execution, ExperimentSpec,
    HyperGrid, PlotMode, Sweep, SweepParam,
};

#[derive(Parser)]
#[command(name = "sfnec", version, about = "Episodic successor-feature agents on the four-room task")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (agent, seed) cell of a spec and write episodes.csv.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run a spec once per value of one agent parameter. Without `--param`
    /// the spec's own `[sweep]` table is used.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, requires = "values")]
        param: Option<ParamArg>,
        /// Values to sweep, e.g. `100 1000 10000` or `1 20 all`.
        #[arg(long, num_args = 1.., requires = "param")]
        values: Vec<String>,
    },
    /// Grid search at reduced budget; writes a ranking and a best-config table.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1..)]
        epsilon: Option<Vec<f64>>,
        #[arg(long, num_args = 1..)]
        net_lr: Option<Vec<f64>>,
        #[arg(long, num_args = 1..)]
        neighbours: Option<Vec<Neighbours>>,
        #[arg(long, num_args = 1..)]
        dnd_lr: Option<Vec<f64>>,
        #[arg(long, num_args = 1..)]
        horizon: Option<Vec<usize>>,
        /// Tasks per grid cell.
        #[arg(long, default_value_t = 3)]
        tasks: usize,
        /// Transitions per task per grid cell.
        #[arg(long, default_value_t = 2_000)]
        transitions: u64,
    },
    /// Render an SVG figure and its backing CSV from an episodes CSV.
    Plot {
        csv: PathBuf,
        #[arg(short, long, default_value = "plots")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "per-task-return")]
        mode: ModeArg,
    },
    /// Print the grid layout.
    Layout {
        /// Environment TOML (the `[env]` table of a spec, at top level).
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment spec (TOML). Omitted: the desk-scale four-agent spec.
    spec: Option<PathBuf>,
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// 50 tasks × 20,000 transitions × 10 seeds.
    #[arg(long)]
    full_scale: bool,
    /// Use seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    /// Comma-separated agent kinds.
    #[arg(long, value_delimiter = ',')]
    agents: Option<Vec<AgentKind>>,
    /// Run cells one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    Capacity,
    Neighbours,
    LearnW,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerTaskReturn,
    CapacitySweep,
    NeighbourSweep,
    LearnW,
}

impl From<ModeArg> for PlotMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerTaskReturn => PlotMode::PerTaskReturn,
            ModeArg::CapacitySweep => PlotMode::CapacitySweep,
            ModeArg::NeighbourSweep => PlotMode::NeighbourSweep,
            ModeArg::LearnW => PlotMode::LearnW,
        }
    }
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.spec {
            Some(p) => ExperimentSpec::from_file(p)
                .with_context(|| format!("reading spec {}", p.display()))?,
            None => ExperimentSpec::default(),
        };
        if self.full_scale {
            spec.into_full_scale();
        }
        if let Some(n) = self.seeds {
            spec.seeds = (0..n).collect();
        }
        if let Some(a) = &self.agents {
            spec.agents = a.clone();
        }
        Ok(spec)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn run_and_write(spec: &ExperimentSpec, common: &Common, mode: PlotMode) -> Result<()> {
    spec.validate()?;
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join("spec.toml"), spec.to_toml_string())?;
    let started = Instant::now();
    let result = run_experiment_with(spec, common.execution())?;
    let rows: Vec<_> = result.rows().cloned().collect();
    let csv_path = common.out.join("episodes.csv");
    write_episode_csv(&rows, BufWriter::new(File::create(&csv_path)?))?;
    for f in result.failures() {
        eprintln!(
            "cell failed: {} {} seed {}: {}",
            f.cell.experiment,
            f.cell.agent,
            f.cell.seed,
            f.failure.as_deref().unwrap_or("")
        );
    }
    summarize(&rows)?;
    println!("{} cells in {:.1?}", result.cells.len(), started.elapsed());
    println!("wrote {}", csv_path.display());
    match render_plots(&rows, mode, &common.out) {
        Ok(files) => files.iter().for_each(|f| println!("wrote {}", f.display())),
        Err(e) => eprintln!("no plot: {e}"),
    }
    Ok(())
}

fn summarize(rows: &[sfnec::harness::EpisodeRow]) -> Result<()> {
    let aggs = aggregate(&metrics_from_rows(rows))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{:<32} {:<12} {:>12} {:>10}", "experiment", "agent", "total", "se")?;
    for a in &aggs {
        writeln!(
            out,
            "{:<32} {:<12} {:>12.3} {:>10.3}",
            a.experiment,
            a.agent.as_str(),
            a.total_mean,
            a.total_se
        )?;
    }
    Ok(())
}

fn write_ranking(results: &[sfnec::harness::GridResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "agent", "rank", "grid_index", "epsilon", "net_lr", "neighbours", "dnd_lr", "horizon",
        "total_mean", "total_se",
    ])?;
    for r in results {
        for (rank, s) in r.ranked.iter().enumerate() {
            let p = &s.point;
            w.write_record([
                r.agent.to_string(),
                (rank + 1).to_string(),
                s.index.to_string(),
                p.epsilon.to_string(),
                p.net_lr.to_string(),
                p.neighbours.to_string(),
                p.dnd_lr.to_string(),
                p.horizon.to_string(),
                s.total_mean.to_string(),
                s.total_se.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common } => {
            let spec = common.spec()?;
            run_and_write(&spec, &common, PlotMode::PerTaskReturn)
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let mut spec = common.spec()?;
            if let Some(param) = param {
                let param = match param {
                    ParamArg::Capacity => SweepParam::Capacity,
                    ParamArg::Neighbours => SweepParam::Neighbours,
                    ParamArg::LearnW => SweepParam::LearnW,
                };
                let values: Vec<&str> = values.iter().map(String::as_str).collect();
                spec.sweep = Some(Sweep::new(param, &values));
            }
            let mode = match spec.sweep.as_ref().map(|s| s.param) {
                Some(SweepParam::Capacity) => PlotMode::CapacitySweep,
                Some(SweepParam::Neighbours) => PlotMode::NeighbourSweep,
                Some(SweepParam::LearnW) => PlotMode::LearnW,
                None => bail!("no sweep: pass --param and --values or add a [sweep] table"),
            };
            run_and_write(&spec, &common, mode)
        }
        Command::Gridsearch {
            common,
            epsilon,
            net_lr,
            neighbours,
            dnd_lr,
            horizon,
            tasks,
            transitions,
        } => {
            let mut spec = common.spec()?;
            if common.agents.is_none() {
                spec.agents = vec![AgentKind::Sfnec, AgentKind::Nec];
            }
            spec.env.schedule.num_tasks = tasks;
            spec.env.schedule.transitions_per_task = transitions;
            let d = HyperGrid::default();
            let grid = HyperGrid {
                epsilon: epsilon.unwrap_or(d.epsilon),
                net_lr: net_lr.unwrap_or(d.net_lr),
                neighbours: neighbours.unwrap_or(d.neighbours),
                dnd_lr: dnd_lr.unwrap_or(d.dnd_lr),
                horizon: horizon.unwrap_or(d.horizon),
            };
            if grid.is_empty() {
                bail!("grid has no points");
            }
            println!(
                "{} points × {} agents × {} seeds",
                grid.len(),
                spec.agents.len(),
                spec.seeds.len()
            );
            let started = Instant::now();
            let results = grid_search(&spec, &grid, common.execution())?;
            fs::create_dir_all(&common.out)?;
            write_ranking(&results, &common.out.join("grid_ranking.csv"))?;
            let mut table = Vec::new();
            write_grid_table(&results, &mut table)?;
            fs::write(common.out.join("grid_table.md"), &table)?;
            io::stdout().write_all(&table)?;
            println!("done in {:.1?}", started.elapsed());
            Ok(())
        }
        Command::Plot { csv, out, mode } => {
            let rows = read_episode_csv_file(&csv)
                .with_context(|| format!("reading {}", csv.display()))?;
            for f in render_plots(&rows, mode.into(), &out)? {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Layout { config } => {
            let env = match config {
                Some(p) => EnvConfig::from_file(&p)?,
                None => EnvConfig::default(),
            };
            print!("{}", build_layout(&env.layout)?.ascii_map());
            Ok(())
        }
    }
}
