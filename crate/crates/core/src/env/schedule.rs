use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Three object classes plus the goal.
pub const FEATURE_DIM: usize = 4;
pub const GOAL_FEATURE: usize = 3;

/// Binary transition features: `[class 0, class 1, class 2, goal]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

/// Reward weights defining one task; `r = φᵀw`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskWeights(pub [f64; FEATURE_DIM]);

/// Fixed-order inner product. Every reward and every ψᵀw score goes through this.
#[inline]
pub fn dot(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

impl FeatureVector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn reward(&self, w: &TaskWeights) -> f64 {
        dot(&self.0, &w.0)
    }
}

impl TaskWeights {
    pub fn score(&self, psi: &[f64; FEATURE_DIM]) -> f64 {
        dot(psi, &self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub num_tasks: usize,
    pub transitions_per_task: u64,
    pub seed: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            num_tasks: 10,
            transitions_per_task: 5_000,
            seed: 0,
        }
    }
}

/// Sequence of reward weights; object weights uniform in [-1, 1], goal weight +1.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSchedule {
    transitions_per_task: u64,
    seed: u64,
    weights: Vec<TaskWeights>,
}

impl TaskSchedule {
    pub fn new(config: &ScheduleConfig) -> Result<Self> {
        if config.num_tasks == 0 {
            return Err(Error::InvalidConfig("num_tasks must be at least 1".into()));
        }
        if config.transitions_per_task == 0 {
            return Err(Error::InvalidConfig(
                "transitions_per_task must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let weights = (0..config.num_tasks)
            .map(|_| {
                let mut w = [1.0; FEATURE_DIM];
                for x in &mut w[..GOAL_FEATURE] {
                    *x = rng.random_range(-1.0..=1.0);
                }
                TaskWeights(w)
            })
            .collect();
        Ok(TaskSchedule {
            transitions_per_task: config.transitions_per_task,
            seed: config.seed,
            weights,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.weights.len()
    }

    pub fn transitions_per_task(&self) -> u64 {
        self.transitions_per_task
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total transition budget over all tasks.
    pub fn budget(&self) -> u64 {
        self.transitions_per_task * self.weights.len() as u64
    }

    /// Task active once `total_transitions` transitions have elapsed.
    pub fn task_for_transition(&self, total_transitions: u64) -> usize {
        let i = (total_transitions / self.transitions_per_task) as usize;
        i.min(self.weights.len() - 1)
    }

    pub fn weights(&self, task: usize) -> &TaskWeights {
        &self.weights[task]
    }

    pub fn all_weights(&self) -> &[TaskWeights] {
        &self.weights
    }
}
