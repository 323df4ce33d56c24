use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nstep::{nstep_q_target, NStepBuffer};
use super::train::gradient_train_step;
use super::{check_obs, epsilon_greedy, Agent, AgentConfig, AgentKind, StepRecord};
use crate::dnd::Dnd;
use crate::env::{Action, FourRoomEnv, Observation, TaskWeights, NUM_ACTIONS};
use crate::Result;

/// Neural episodic control with scalar N-step Q values, one DND per action.
///
/// The memory persists across tasks; NEC never sees the reward weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NecAgent {
    config: AgentConfig,
    obs_dim: usize,
    stores: Vec<Dnd>,
    buffer: NStepBuffer,
    rng: ChaCha8Rng,
}

impl NecAgent {
    pub fn new(config: AgentConfig, obs_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let stores = (0..NUM_ACTIONS)
            .map(|_| Dnd::new(obs_dim, 1, config.capacity, config.kernel_delta))
            .collect::<Result<_>>()?;
        Ok(NecAgent {
            buffer: NStepBuffer::new(config.horizon),
            config,
            obs_dim,
            stores,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn stores(&self) -> &[Dnd] {
        &self.stores
    }

    pub fn q_value(&mut self, observation: &[f64], action: usize) -> Option<f64> {
        q_lookup(&mut self.stores[action], observation, self.config.neighbours.get())
    }

    /// Greedy action, or `None` when every action's memory is empty.
    pub fn greedy(&mut self, observation: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        let mut any = false;
        for a in 0..NUM_ACTIONS {
            let q = match self.q_value(observation, a) {
                Some(q) => {
                    any = true;
                    q
                }
                None => 0.0,
            };
            if best.map_or(true, |(_, b)| q > b) {
                best = Some((a, q));
            }
        }
        best.filter(|_| any).map(|(a, _)| a)
    }
}

fn q_lookup(store: &mut Dnd, observation: &[f64], k: usize) -> Option<f64> {
    if store.is_empty() {
        return None;
    }
    let r = store
        .lookup(observation, k)
        .expect("observation dimension checked by the agent");
    Some(r.estimate[0])
}

impl Agent for NecAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Nec
    }

    fn begin_task(&mut self, _task: usize, _weights: &TaskWeights) -> Result<()> {
        self.buffer.clear();
        Ok(())
    }

    fn act_and_learn(
        &mut self,
        env: &mut FourRoomEnv,
        observation: &Observation,
    ) -> Result<StepRecord> {
        check_obs(self.obs_dim, observation)?;
        let greedy = match self.greedy(observation) {
            Some(a) => a,
            None => self.rng.random_range(0..NUM_ACTIONS),
        };
        let action = epsilon_greedy(greedy, self.config.epsilon, &mut self.rng);
        let outcome = env.step(Action::from_index(action))?;

        self.buffer.push(observation.clone(), action, vec![outcome.reward]);
        if outcome.done || self.buffer.is_mature() {
            let k = self.config.neighbours.get();
            let stores = &mut self.stores;
            let next = &outcome.observation;
            let targets = nstep_q_target(&mut self.buffer, self.config.gamma, outcome.done, |a| {
                q_lookup(&mut stores[a], next, k)
            })?;
            for t in targets {
                let store = &mut self.stores[t.action];
                store.write(&t.observation, &t.value, self.config.dnd_lr)?;
                gradient_train_step(store, &t.observation, &t.value, k, self.config.net_lr)?;
            }
        }

        Ok(StepRecord {
            action,
            source_policy: None,
            outcome,
        })
    }

    fn current_weights(&self) -> Option<TaskWeights> {
        None
    }
}
