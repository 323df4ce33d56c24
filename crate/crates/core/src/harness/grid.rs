//! Exhaustive grid search over agent hyperparameters.

use std::collections::BTreeMap;
use std::io;

use super::metrics::{mean_se, metrics_from_rows};
use super::run::{run_cells, Execution};
use super::spec::{AgentOverrides, ExperimentSpec};
use crate::agents::{AgentKind, Neighbours};
use crate::{Error, Result};

/// Candidate values per hyperparameter. Points are the cartesian product,
/// with `epsilon` varying slowest and `horizon` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperGrid {
    pub epsilon: Vec<f64>,
    pub net_lr: Vec<f64>,
    pub neighbours: Vec<Neighbours>,
    pub dnd_lr: Vec<f64>,
    pub horizon: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            epsilon: vec![0.05, 0.15],
            net_lr: vec![0.01, 0.05, 0.1],
            neighbours: [1, 4, 10, 20, 50].map(Neighbours::Count).to_vec(),
            dnd_lr: vec![0.1, 0.3, 0.5],
            horizon: vec![8, 16, 32],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub epsilon: f64,
    pub net_lr: f64,
    pub neighbours: Neighbours,
    pub dnd_lr: f64,
    pub horizon: usize,
}

impl GridPoint {
    fn overrides(&self) -> AgentOverrides {
        AgentOverrides {
            epsilon: Some(self.epsilon),
            net_lr: Some(self.net_lr),
            neighbours: Some(self.neighbours),
            dnd_lr: Some(self.dnd_lr),
            horizon: Some(self.horizon),
            ..AgentOverrides::default()
        }
    }
}

impl HyperGrid {
    pub fn len(&self) -> usize {
        self.epsilon.len()
            * self.net_lr.len()
            * self.neighbours.len()
            * self.dnd_lr.len()
            * self.horizon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &epsilon in &self.epsilon {
            for &net_lr in &self.net_lr {
                for &neighbours in &self.neighbours {
                    for &dnd_lr in &self.dnd_lr {
                        for &horizon in &self.horizon {
                            out.push(GridPoint {
                                epsilon,
                                net_lr,
                                neighbours,
                                dnd_lr,
                                horizon,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One grid point's score for one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct GridScore {
    pub index: usize,
    pub point: GridPoint,
    pub total_mean: f64,
    pub total_se: f64,
}

/// Ranking for one agent, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub agent: AgentKind,
    pub ranked: Vec<GridScore>,
}

impl GridResult {
    pub fn best(&self) -> &GridScore {
        &self.ranked[0]
    }
}

/// Runs every grid point for every agent of `base` and ranks the points by
/// mean total return. Ties keep grid order.
pub fn grid_search(base: &ExperimentSpec, grid: &HyperGrid, execution: Execution) -> Result<Vec<GridResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("grid has no points".into()));
    }
    let points = grid.points();
    let mut specs = Vec::with_capacity(points.len());
    let mut cells = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut spec = base.clone();
        spec.name = format!("{}@g{i:04}", base.name);
        for &kind in &base.agents {
            let mut o = spec.agent.remove(&kind).unwrap_or_default();
            let g = p.overrides();
            o.epsilon = g.epsilon;
            o.net_lr = g.net_lr;
            o.neighbours = g.neighbours;
            o.dnd_lr = g.dnd_lr;
            o.horizon = g.horizon;
            spec.agent.insert(kind, o);
        }
        cells.extend(spec.cells()?);
        specs.push(spec);
    }
    let results = run_cells(&cells, execution);
    if let Some(f) = results.iter().find_map(|r| r.failure.as_ref()) {
        return Err(Error::InvalidConfig(format!("grid cell failed: {f}")));
    }
    let records = metrics_from_rows(results.iter().flat_map(|r| r.episodes.iter()));

    base.agents
        .iter()
        .map(|&agent| {
            let mut ranked = specs
                .iter()
                .zip(&points)
                .enumerate()
                .map(|(index, (spec, &point))| {
                    // a seed that finished no episode scores zero
                    let mut totals: BTreeMap<u64, f64> = spec.seeds.iter().map(|&s| (s, 0.0)).collect();
                    for r in records.iter().filter(|r| r.experiment == spec.name && r.agent == agent) {
                        *totals.entry(r.seed).or_default() += r.total_return;
                    }
                    let totals: Vec<f64> = totals.into_values().collect();
                    let (total_mean, total_se) = mean_se(&totals)?;
                    Ok(GridScore {
                        index,
                        point,
                        total_mean,
                        total_se,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rank(&mut ranked);
            Ok(GridResult { agent, ranked })
        })
        .collect()
}

fn rank(scores: &mut [GridScore]) {
    scores.sort_by(|a, b| b.total_mean.total_cmp(&a.total_mean));
}

/// Markdown table with one row per agent holding its best point.
pub fn write_grid_table(results: &[GridResult], mut out: impl io::Write) -> io::Result<()> {
    writeln!(
        out,
        "| Agent | epsilon | Network learning rate | Neighbours | DND learning rate | N | Total return |"
    )?;
    writeln!(out, "|---|---|---|---|---|---|---|")?;
    for r in results {
        let best = r.best();
        let p = &best.point;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {:.3} ± {:.3} |",
            r.agent, p.epsilon, p.net_lr, p.neighbours, p.dnd_lr, p.horizon, best.total_mean, best.total_se
        )?;
    }
    Ok(())
}
