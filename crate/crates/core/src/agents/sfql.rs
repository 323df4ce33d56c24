use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gpi::gpi_action;
use super::linear_sf::{sfql_td_step, LinearPolicy, LinearSf};
use super::reward_weights::{initial_weights, learn_w_step};
use super::{check_obs, epsilon_greedy, Agent, AgentConfig, AgentKind, StepRecord};
use crate::env::{Action, FourRoomEnv, Observation, TaskWeights, NUM_ACTIONS};
use crate::{Error, Result};

/// SF&GPI with linear successor features learned by one-step TD.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SfqlAgent {
    config: AgentConfig,
    obs_dim: usize,
    library: Vec<LinearPolicy>,
    rng: ChaCha8Rng,
}

impl SfqlAgent {
    pub fn new(config: AgentConfig, obs_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(SfqlAgent {
            config,
            obs_dim,
            library: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn library(&self) -> &[LinearPolicy] {
        &self.library
    }
}

impl Agent for SfqlAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Sfql
    }

    fn begin_task(&mut self, _task: usize, weights: &TaskWeights) -> Result<()> {
        let sf = LinearSf::random(
            self.obs_dim,
            NUM_ACTIONS,
            self.config.sfql_init_scale,
            &mut self.rng,
        );
        let weights = if self.config.learn_w {
            initial_weights(&mut self.rng)
        } else {
            *weights
        };
        self.library.push(LinearPolicy { sf, weights });
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
        let choice = gpi_action(&mut self.library, observation, &w)
            .expect("linear policies always produce an estimate");
        let action = epsilon_greedy(choice.action, self.config.epsilon, &mut self.rng);
        let outcome = env.step(Action::from_index(action))?;

        if self.config.learn_w {
            learn_w_step(
                &mut self.library[current].weights,
                &outcome.features,
                outcome.reward,
                self.config.alpha_w,
            );
        }
        let next = (!outcome.done).then_some(outcome.observation.as_slice());
        for p in [current, choice.policy] {
            sfql_td_step(
                &mut self.library[p],
                observation,
                action,
                &outcome.features,
                next,
                self.config.gamma,
                self.config.net_lr,
            );
            if choice.policy == current {
                break;
            }
        }

        Ok(StepRecord {
            action,
            source_policy: Some(choice.policy),
            outcome,
        })
    }

    fn current_weights(&self) -> Option<TaskWeights> {
        self.library.last().map(|p| p.weights)
    }
}
