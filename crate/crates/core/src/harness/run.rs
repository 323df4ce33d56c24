use serde::{Deserialize, Serialize};

use super::seed::derive_seed;
use super::spec::{ExperimentSpec, SweepPoint};
use crate::agents::{Agent, AgentConfig, AgentKind, AnyAgent};
use crate::env::{EnvConfig, FourRoomEnv};
use crate::Result;

/// One (agent, sweep point, seed) run.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSpec {
    pub experiment: String,
    pub agent: AgentKind,
    pub point: Option<SweepPoint>,
    pub seed: u64,
    pub agent_config: AgentConfig,
    pub env: EnvConfig,
    pub agent_seed: u64,
}

/// One row of the episode CSV. `task` and `episode` are empty on failure rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub experiment: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub task: Option<usize>,
    pub episode: Option<usize>,
    #[serde(rename = "return")]
    pub episode_return: f64,
    /// Environment transitions elapsed in the run when the episode ended.
    pub transitions: u64,
}

impl EpisodeRow {
    pub fn is_failure(&self) -> bool {
        self.task.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub cell: CellSpec,
    pub episodes: Vec<EpisodeRow>,
    pub transitions: u64,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; sequential when the `parallel` feature is off.
    Parallel,
}

impl ExperimentSpec {
    /// Expands the spec into cells, agent-major then sweep point then seed.
    pub fn cells(&self) -> Result<Vec<CellSpec>> {
        self.validate()?;
        let mut cells = Vec::new();
        for &agent in &self.agents {
            for point in self.sweep_points()? {
                for &seed in &self.seeds {
                    let mut env = self.env.clone();
                    env.schedule.seed = derive_seed(&[
                        "schedule",
                        &self.master_seed.to_string(),
                        &self.env.schedule.seed.to_string(),
                        &seed.to_string(),
                    ]);
                    // Points an agent ignores do not perturb its stream.
                    let point_key = point
                        .filter(|p| p.affects(agent))
                        .map_or(String::new(), |p| p.to_string());
                    let agent_seed = derive_seed(&[
                        "agent",
                        &self.master_seed.to_string(),
                        agent.as_str(),
                        &seed.to_string(),
                        &point_key,
                    ]);
                    cells.push(CellSpec {
                        experiment: self.experiment_label(point.as_ref()),
                        agent,
                        point,
                        seed,
                        agent_config: self.agent_config(agent, point.as_ref()),
                        env,
                        agent_seed,
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// Runs one cell to its transition budget. Errors become a failure marker.
pub fn run_cell(cell: &CellSpec) -> CellResult {
    let mut episodes = Vec::new();
    let mut transitions = 0;
    let failure = drive(cell, &mut episodes, &mut transitions).err();
    if failure.is_some() {
        episodes.push(EpisodeRow {
            experiment: cell.experiment.clone(),
            agent: cell.agent,
            seed: cell.seed,
            task: None,
            episode: None,
            episode_return: f64::NAN,
            transitions,
        });
    }
    CellResult {
        cell: cell.clone(),
        episodes,
        transitions,
        failure: failure.map(|e| e.to_string()),
    }
}

fn drive(cell: &CellSpec, episodes: &mut Vec<EpisodeRow>, transitions: &mut u64) -> Result<()> {
    let mut env = FourRoomEnv::new(&cell.env)?;
    let mut agent = AnyAgent::new(
        cell.agent,
        cell.agent_config.clone(),
        env.observation_dim(),
        cell.agent_seed,
    )?;
    let budget = env.schedule().budget();
    let mut next_task = 0;
    let mut episode = 0;
    while env.total_transitions() < budget {
        let mut observation = env.reset();
        let task = env.task_index();
        while next_task <= task {
            agent.begin_task(next_task, env.schedule().weights(next_task))?;
            next_task += 1;
        }
        let mut episode_return = 0.0;
        loop {
            let record = agent.act_and_learn(&mut env, &observation)?;
            *transitions = env.total_transitions();
            episode_return += record.outcome.reward;
            if record.outcome.done {
                episodes.push(EpisodeRow {
                    experiment: cell.experiment.clone(),
                    agent: cell.agent,
                    seed: cell.seed,
                    task: Some(task),
                    episode: Some(episode),
                    episode_return,
                    transitions: env.total_transitions(),
                });
                break;
            }
            if env.total_transitions() >= budget {
                // the unfinished final episode is dropped
                break;
            }
            observation = record.outcome.observation;
        }
        episode += 1;
    }
    Ok(())
}

/// Runs every cell; results come back in cell order either way.
pub fn run_cells(cells: &[CellSpec], execution: Execution) -> Vec<CellResult> {
    match execution {
        Execution::Sequential => cells.iter().map(run_cell).collect(),
        Execution::Parallel => parallel_map(cells),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map(cells: &[CellSpec]) -> Vec<CellResult> {
    use rayon::prelude::*;
    cells.par_iter().map(run_cell).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map(cells: &[CellSpec]) -> Vec<CellResult> {
    cells.iter().map(run_cell).collect()
}

/// Completed run of a whole spec.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn rows(&self) -> impl Iterator<Item = &EpisodeRow> {
        self.cells.iter().flat_map(|c| c.episodes.iter())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.failure.is_some())
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with(spec, Execution::Parallel)
}

pub fn run_experiment_with(spec: &ExperimentSpec, execution: Execution) -> Result<ExperimentResult> {
    let cells = spec.cells()?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        cells: run_cells(&cells, execution),
    })
}
