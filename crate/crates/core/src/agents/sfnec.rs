use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gpi::{gpi_action, greedy_action, Psi, SuccessorFeatures};
use super::nstep::{nstep_psi_target, NStepBuffer};
use super::reward_weights::{initial_weights, learn_w_step};
use super::train::gradient_train_step;
use super::{check_obs, epsilon_greedy, Agent, AgentConfig, AgentKind, StepRecord};
use crate::dnd::Dnd;
use crate::env::{Action, FourRoomEnv, Observation, TaskWeights, FEATURE_DIM, NUM_ACTIONS};
use crate::{Error, Result};

/// One task's policy: a ψ-valued DND per action plus the task's weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DndPolicy {
    pub stores: Vec<Dnd>,
    pub weights: TaskWeights,
    neighbours: usize,
}

impl DndPolicy {
    pub fn new(config: &AgentConfig, obs_dim: usize, weights: TaskWeights) -> Result<Self> {
        let stores = (0..NUM_ACTIONS)
            .map(|_| Dnd::new(obs_dim, FEATURE_DIM, config.capacity, config.kernel_delta))
            .collect::<Result<_>>()?;
        Ok(DndPolicy {
            stores,
            weights,
            neighbours: config.neighbours.get(),
        })
    }
}

impl SuccessorFeatures for DndPolicy {
    fn psi(&mut self, observation: &[f64], action: usize) -> Option<Psi> {
        let store = &mut self.stores[action];
        if store.is_empty() {
            return None;
        }
        let r = store
            .lookup(observation, self.neighbours)
            .expect("observation dimension checked by the agent");
        Some([r.estimate[0], r.estimate[1], r.estimate[2], r.estimate[3]])
    }

    fn task_weights(&self) -> &TaskWeights {
        &self.weights
    }
}

/// Successor-feature episodic control.
///
/// Each task gets fresh per-action DNDs holding N-step ψ targets. With GPI
/// enabled, actions come from the best policy in the whole library under the
/// current weights, and the policy that was followed receives a one-step
/// off-policy write for the transition. Without GPI only the current task's
/// policy is consulted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SfnecAgent {
    config: AgentConfig,
    use_gpi: bool,
    obs_dim: usize,
    library: Vec<DndPolicy>,
    buffer: NStepBuffer,
    rng: ChaCha8Rng,
}

impl SfnecAgent {
    pub fn new(config: AgentConfig, use_gpi: bool, obs_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(SfnecAgent {
            buffer: NStepBuffer::new(config.horizon),
            config,
            use_gpi,
            obs_dim,
            library: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn library(&self) -> &[DndPolicy] {
        &self.library
    }

    pub fn uses_gpi(&self) -> bool {
        self.use_gpi
    }

    fn store_target(&mut self, task: usize, observation: &[f64], action: usize, value: &[f64]) -> Result<()> {
        let store = &mut self.library[task].stores[action];
        store.write(observation, value, self.config.dnd_lr)?;
        gradient_train_step(
            store,
            observation,
            value,
            self.config.neighbours.get(),
            self.config.net_lr,
        )
    }
}

impl Agent for SfnecAgent {
    fn kind(&self) -> AgentKind {
        if self.use_gpi {
            AgentKind::Sfnec
        } else {
            AgentKind::SfnecNoGpi
        }
    }

    fn begin_task(&mut self, _task: usize, weights: &TaskWeights) -> Result<()> {
        let w = if self.config.learn_w {
            initial_weights(&mut self.rng)
        } else {
            *weights
        };
        self.library
            .push(DndPolicy::new(&self.config, self.obs_dim, w)?);
        self.buffer.clear();
        Ok(())
    }

    fn act_and_learn(
        &mut self,
        env: &mut FourRoomEnv,
        observation: &Observation,
    ) -> Result<StepRecord> {
        check_obs(self.obs_dim, observation)?;
        let current = self
            .library
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidConfig("begin_task must precede acting".into()))?;
        let w = self.library[current].weights;
        let first = if self.use_gpi { 0 } else { current };
        let choice = gpi_action(&mut self.library[first..], observation, &w);
        let greedy = match choice {
            Some(c) => c.action,
            None => self.rng.random_range(0..NUM_ACTIONS),
        };
        let source = choice.map_or(current, |c| c.policy + first);
        let action = epsilon_greedy(greedy, self.config.epsilon, &mut self.rng);

        let outcome = env.step(Action::from_index(action))?;

        if self.config.learn_w {
            learn_w_step(
                &mut self.library[current].weights,
                &outcome.features,
                outcome.reward,
                self.config.alpha_w,
            );
        }

        self.buffer
            .push(observation.clone(), action, outcome.features.0.to_vec());
        if outcome.done || self.buffer.is_mature() {
            let w = self.library[current].weights;
            let policy = &mut self.library[current];
            let next = &outcome.observation;
            let targets = nstep_psi_target(
                &mut self.buffer,
                self.config.gamma,
                &w,
                outcome.done,
                |a| policy.psi(next, a),
            )?;
            for t in targets {
                self.store_target(current, &t.observation, t.action, &t.value)?;
            }
        }

        if source != current {
            let policy = &mut self.library[source];
            let wj = policy.weights;
            let bootstrap = if outcome.done {
                [0.0; FEATURE_DIM]
            } else {
                greedy_action(policy, &outcome.observation, &wj).map_or([0.0; FEATURE_DIM], |c| c.psi)
            };
            let target: Vec<f64> = (0..FEATURE_DIM)
                .map(|f| outcome.features.0[f] + self.config.gamma * bootstrap[f])
                .collect();
            policy.stores[action].write(observation, &target, self.config.dnd_lr)?;
        }

        Ok(StepRecord {
            action,
            source_policy: Some(source),
            outcome,
        })
    }

    fn current_weights(&self) -> Option<TaskWeights> {
        self.library.last().map(|p| p.weights)
    }
}
