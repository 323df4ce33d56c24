//! Four-room object-collection gridworld.
//!
//! The agent walks a deterministic grid from the bottom-left start to the
//! top-right goal, picking up objects of three classes on the way. Each
//! transition emits a binary feature vector φ and the reward `φᵀw` for the
//! active task. Observations are RBF activations of the agent position
//! followed by twelve object-presence bits.

mod layout;
mod schedule;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use layout::{
    build_layout, Cell, GridLayout, LayoutConfig, ObjectSlot, NUM_CLASSES, NUM_OBJECTS,
    OBJECTS_PER_CLASS,
};
pub use schedule::{
    dot, FeatureVector, ScheduleConfig, TaskSchedule, TaskWeights, FEATURE_DIM, GOAL_FEATURE,
};

use crate::{Error, Result};

pub const NUM_ACTIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfConfig {
    /// Centres per axis.
    pub grid: usize,
    /// Gaussian width in cell units.
    pub sigma: f64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig {
            grid: 10,
            sigma: 1.0,
        }
    }
}

/// Full environment configuration, loadable from TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub layout: LayoutConfig,
    pub rbf: RbfConfig,
    pub schedule: ScheduleConfig,
    pub max_episode_steps: Option<u64>,
}

impl EnvConfig {
    pub const DEFAULT_MAX_EPISODE_STEPS: u64 = 1_000;

    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn max_steps(&self) -> u64 {
        self.max_episode_steps
            .unwrap_or(Self::DEFAULT_MAX_EPISODE_STEPS)
    }
}

/// Agent state vector: `grid²` RBF activations then one presence bit per object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation(Box<[f64]>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Self {
        Observation(values.into_boxed_slice())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent_cell: Cell,
    pub objects_present: [bool; NUM_OBJECTS],
    pub steps_in_episode: u64,
    pub total_transitions: u64,
    pub task_start_transition: u64,
    pub task_index: usize,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub features: FeatureVector,
    pub reward: f64,
    pub done: bool,
    /// Episode ended by the step limit rather than at the goal.
    pub truncated: bool,
}

/// RBF activation table, one row per cell.
#[derive(Debug)]
struct RbfTable {
    width: usize,
    rows: Vec<f64>,
}

impl RbfTable {
    fn new(layout: &GridLayout, config: &RbfConfig) -> Result<Self> {
        if config.grid < 2 || !(config.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rbf grid must be >= 2 and sigma > 0, got {} / {}",
                config.grid, config.sigma
            )));
        }
        let g = config.grid;
        // Centres span the interior (inside the boundary wall).
        let axis = |extent: usize| -> Vec<f64> {
            let (lo, hi) = (1.0, (extent - 2) as f64);
            (0..g)
                .map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64)
                .collect()
        };
        let rows_c = axis(layout.height());
        let cols_c = axis(layout.width());
        let denom = 2.0 * config.sigma * config.sigma;
        let mut rows = Vec::with_capacity(layout.num_cells() * g * g);
        for idx in 0..layout.num_cells() {
            let cell = layout.cell(idx);
            let (r, c) = (cell.row as f64, cell.col as f64);
            for &cr in &rows_c {
                for &cc in &cols_c {
                    let d2 = (r - cr).powi(2) + (c - cc).powi(2);
                    rows.push((-d2 / denom).exp());
                }
            }
        }
        Ok(RbfTable {
            width: g * g,
            rows,
        })
    }

    fn row(&self, cell_index: usize) -> &[f64] {
        &self.rows[cell_index * self.width..(cell_index + 1) * self.width]
    }
}

/// One environment instance. Cheap to clone the configuration, not shared.
#[derive(Debug, Clone)]
pub struct FourRoomEnv {
    layout: Arc<GridLayout>,
    rbf: Arc<RbfTable>,
    schedule: Arc<TaskSchedule>,
    max_steps: u64,
    state: EnvState,
}

impl FourRoomEnv {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        let layout = build_layout(&config.layout)?;
        let rbf = RbfTable::new(&layout, &config.rbf)?;
        let schedule = TaskSchedule::new(&config.schedule)?;
        if config.max_steps() == 0 {
            return Err(Error::InvalidConfig("max_episode_steps must be >= 1".into()));
        }
        let state = EnvState {
            agent_cell: layout.start(),
            objects_present: [true; NUM_OBJECTS],
            steps_in_episode: 0,
            total_transitions: 0,
            task_start_transition: 0,
            task_index: 0,
            // a fresh environment must be reset before stepping
            done: true,
        };
        Ok(FourRoomEnv {
            layout: Arc::new(layout),
            rbf: Arc::new(rbf),
            schedule: Arc::new(schedule),
            max_steps: config.max_steps(),
            state,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn schedule(&self) -> &TaskSchedule {
        &self.schedule
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn observation_dim(&self) -> usize {
        self.rbf.width + NUM_OBJECTS
    }

    pub fn task_index(&self) -> usize {
        self.state.task_index
    }

    pub fn total_transitions(&self) -> u64 {
        self.state.total_transitions
    }

    pub fn transitions_in_task(&self) -> u64 {
        self.state.total_transitions - self.state.task_start_transition
    }

    pub fn active_weights(&self) -> &TaskWeights {
        self.schedule.weights(self.state.task_index)
    }

    pub fn observation(&self) -> Observation {
        let mut v = Vec::with_capacity(self.observation_dim());
        v.extend_from_slice(self.rbf.row(self.layout.index(self.state.agent_cell)));
        v.extend(
            self.state
                .objects_present
                .iter()
                .map(|&p| if p { 1.0 } else { 0.0 }),
        );
        Observation::new(v)
    }

    /// Starts a new episode. The task switches here once the schedule says so.
    pub fn reset(&mut self) -> Observation {
        let due = self
            .schedule
            .task_for_transition(self.state.total_transitions);
        if due > self.state.task_index {
            self.state.task_index = due;
            self.state.task_start_transition = self.state.total_transitions;
        }
        self.state.agent_cell = self.layout.start();
        self.state.objects_present = [true; NUM_OBJECTS];
        self.state.steps_in_episode = 0;
        self.state.done = false;
        self.observation()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let Cell { row, col } = self.state.agent_cell;
        let target = match action {
            Action::Up => row.checked_sub(1).map(|r| Cell::new(r, col)),
            Action::Down => Some(Cell::new(row + 1, col)),
            Action::Left => col.checked_sub(1).map(|c| Cell::new(row, c)),
            Action::Right => Some(Cell::new(row, col + 1)),
        };
        if let Some(next) = target.filter(|&c| !self.layout.is_wall(c)) {
            self.state.agent_cell = next;
        }

        let mut features = FeatureVector::default();
        let cell = self.state.agent_cell;
        if let Some(slot) = self.layout.object_at(cell) {
            if self.state.objects_present[slot] {
                self.state.objects_present[slot] = false;
                features.0[self.layout.objects()[slot].class] = 1.0;
            }
        }
        let at_goal = cell == self.layout.goal();
        if at_goal {
            features.0[GOAL_FEATURE] = 1.0;
        }
        let reward = features.reward(self.active_weights());

        self.state.steps_in_episode += 1;
        self.state.total_transitions += 1;
        let truncated = !at_goal && self.state.steps_in_episode >= self.max_steps;
        self.state.done = at_goal || truncated;

        Ok(StepOutcome {
            observation: self.observation(),
            features,
            reward,
            done: self.state.done,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> FourRoomEnv {
        FourRoomEnv::new(&EnvConfig::default()).unwrap()
    }

    #[test]
    fn observation_shape() {
        let mut e = env();
        let obs = e.reset();
        assert_eq!(obs.len(), 112);
        assert!(obs[..100].iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(obs[100..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn reset_is_idempotent() {
        let mut e = env();
        let a = e.reset();
        let b = e.reset();
        assert_eq!(a, b);
    }

    #[test]
    fn step_before_reset_fails() {
        let mut e = env();
        assert!(matches!(e.step(Action::Up), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn blocked_move_stays() {
        let mut e = env();
        let before = e.reset();
        // start (11, 1) sits against the bottom and left boundary
        let out = e.step(Action::Down).unwrap();
        assert_eq!(e.state().agent_cell, Cell::new(11, 1));
        assert_eq!(out.features, FeatureVector::default());
        assert_eq!(out.reward, 0.0);
        assert!(!out.done);
        assert_eq!(out.observation, before);
        let out = e.step(Action::Left).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(e.state().agent_cell, Cell::new(11, 1));
    }

    #[test]
    fn picking_up_class_one_object() {
        let mut config = EnvConfig::default();
        // put a class-1 object right above the start
        config.layout.objects[8] = [10, 1, 1];
        let mut e = FourRoomEnv::new(&config).unwrap();
        e.reset();
        let w = *e.active_weights();
        let out = e.step(Action::Up).unwrap();
        assert_eq!(out.features.0, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(out.reward, w.0[1]);
        assert_eq!(out.observation[100 + 8], 0.0);
        // moving away and back does not collect twice
        e.step(Action::Down).unwrap();
        let again = e.step(Action::Up).unwrap();
        assert_eq!(again.reward, 0.0);
    }

    #[test]
    fn reaching_goal_ends_episode() {
        let mut config = EnvConfig::default();
        config.layout.goal = [10, 1];
        config.layout.objects[8] = [10, 4, 1];
        let mut e = FourRoomEnv::new(&config).unwrap();
        e.reset();
        let out = e.step(Action::Up).unwrap();
        assert_eq!(out.features.0, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(out.reward, 1.0);
        assert!(out.done && !out.truncated);
        assert!(e.step(Action::Up).is_err());
    }

    #[test]
    fn timeout_truncates_without_goal_bit() {
        let config = EnvConfig {
            max_episode_steps: Some(3),
            ..EnvConfig::default()
        };
        let mut e = FourRoomEnv::new(&config).unwrap();
        e.reset();
        for _ in 0..2 {
            assert!(!e.step(Action::Down).unwrap().done);
        }
        let out = e.step(Action::Down).unwrap();
        assert!(out.done && out.truncated);
        assert_eq!(out.features.0[GOAL_FEATURE], 0.0);
    }

    #[test]
    fn task_switches_only_at_reset() {
        let config = EnvConfig {
            schedule: ScheduleConfig {
                num_tasks: 3,
                transitions_per_task: 5,
                seed: 1,
            },
            ..EnvConfig::default()
        };
        let mut e = FourRoomEnv::new(&config).unwrap();
        e.reset();
        for _ in 0..7 {
            e.step(Action::Down).unwrap();
        }
        assert_eq!(e.task_index(), 0);
        e.reset();
        assert_eq!(e.task_index(), 1);
        assert_eq!(e.transitions_in_task(), 0);
        assert_eq!(e.active_weights(), e.schedule().weights(1));
    }

    #[test]
    fn rbf_peaks_at_centre() {
        let e = env();
        // (1, 1) coincides with the first lattice centre
        let row = e.rbf.row(e.layout().index(Cell::new(1, 1)));
        assert_eq!(row[0], 1.0);
        assert!(row[1..].iter().all(|&x| x < 1.0));
    }

    #[test]
    fn config_from_toml() {
        let text = r#"
            max_episode_steps = 500
            [schedule]
            num_tasks = 4
            transitions_per_task = 100
            seed = 9
            [rbf]
            sigma = 1.5
        "#;
        let config = EnvConfig::from_toml_str(text).unwrap();
        assert_eq!(config.max_steps(), 500);
        assert_eq!(config.schedule.num_tasks, 4);
        assert_eq!(config.rbf.grid, 10);
        assert_eq!(config.layout, LayoutConfig::default());
        assert!(EnvConfig::from_toml_str("bogus = 1").is_err());
    }
}
