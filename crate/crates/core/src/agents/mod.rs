//! SFNEC, SFNEC without GPI, NEC and SFQL.
//!
//! All agents drive a [`FourRoomEnv`] one transition at a time through
//! [`Agent::act_and_learn`]. The harness calls [`Agent::begin_task`] at the
//! first episode of every task.

mod explore;
mod gpi;
mod linear_sf;
mod nec;
mod nstep;
mod reward_weights;
mod sfnec;
mod sfql;
mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use explore::epsilon_greedy;
pub use gpi::{gpi_action, greedy_action, GpiChoice, Psi, SuccessorFeatures, TabularSf};
pub use linear_sf::{sfql_td_step, LinearPolicy, LinearSf};
pub use nec::NecAgent;
pub use nstep::{discounted_target, nstep_psi_target, nstep_q_target, NStepBuffer, Target};
pub use reward_weights::{initial_weights, learn_w_step};
pub use sfnec::{DndPolicy, SfnecAgent};
pub use sfql::SfqlAgent;
pub use train::gradient_train_step;

use crate::dnd::DEFAULT_DELTA;
use crate::env::{FourRoomEnv, Observation, StepOutcome, TaskWeights};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Sfql,
    Nec,
    Sfnec,
    #[serde(rename = "sfnec_nogpi")]
    SfnecNoGpi,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Sfql,
        AgentKind::Nec,
        AgentKind::Sfnec,
        AgentKind::SfnecNoGpi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Sfql => "sfql",
            AgentKind::Nec => "nec",
            AgentKind::Sfnec => "sfnec",
            AgentKind::SfnecNoGpi => "sfnec_nogpi",
        }
    }

    /// Whether the agent's behaviour depends on reward weights at all.
    pub fn uses_weights(self) -> bool {
        !matches!(self, AgentKind::Nec)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown agent kind `{s}`")))
    }
}

/// Neighbour count for DND lookups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Neighbours {
    Count(usize),
    All,
}

impl Neighbours {
    pub fn get(self) -> usize {
        match self {
            Neighbours::Count(k) => k,
            Neighbours::All => usize::MAX,
        }
    }
}

impl fmt::Display for Neighbours {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighbours::Count(k) => write!(f, "{k}"),
            Neighbours::All => f.write_str("all"),
        }
    }
}

impl FromStr for Neighbours {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Neighbours::All);
        }
        s.parse()
            .map(Neighbours::Count)
            .map_err(|_| Error::InvalidConfig(format!("bad neighbour count `{s}`")))
    }
}

impl Serialize for Neighbours {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Neighbours::Count(k) => s.serialize_u64(*k as u64),
            Neighbours::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for Neighbours {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(k) => Ok(Neighbours::Count(k as usize)),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Hyperparameters shared by all agents; each agent ignores what it has no use for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub epsilon: f64,
    pub gamma: f64,
    /// Gradient step size (SFQL TD, DND value training).
    pub net_lr: f64,
    /// Fast update rate for re-encountered DND keys.
    pub dnd_lr: f64,
    pub neighbours: Neighbours,
    pub horizon: usize,
    pub capacity: usize,
    pub alpha_w: f64,
    pub learn_w: bool,
    pub kernel_delta: f64,
    /// Half-width of the uniform initialisation of SFQL's linear weights.
    pub sfql_init_scale: f64,
}

impl AgentConfig {
    /// Tuned defaults for each agent kind.
    pub fn defaults(kind: AgentKind) -> Self {
        let net_lr = match kind {
            AgentKind::Sfql | AgentKind::Nec => 0.01,
            AgentKind::Sfnec | AgentKind::SfnecNoGpi => 0.05,
        };
        AgentConfig {
            epsilon: 0.15,
            gamma: 0.95,
            net_lr,
            dnd_lr: 0.1,
            neighbours: Neighbours::Count(20),
            horizon: 8,
            capacity: 10_000,
            alpha_w: 0.1,
            learn_w: false,
            kernel_delta: DEFAULT_DELTA,
            sfql_init_scale: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        for (name, v) in [
            ("net_lr", self.net_lr),
            ("dnd_lr", self.dnd_lr),
            ("alpha_w", self.alpha_w),
        ] {
            if !unit(v) {
                return bad(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.capacity == 0 {
            return bad("capacity must be >= 1".into());
        }
        if self.neighbours == Neighbours::Count(0) {
            return bad("neighbours must be >= 1".into());
        }
        if !(self.kernel_delta > 0.0) {
            return bad(format!("kernel_delta must be > 0, got {}", self.kernel_delta));
        }
        if !(self.sfql_init_scale >= 0.0) {
            return bad("sfql_init_scale must be >= 0".into());
        }
        Ok(())
    }
}

/// What happened on one agent step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub action: usize,
    /// Library index of the policy GPI followed (SF agents only).
    pub source_policy: Option<usize>,
    pub outcome: StepOutcome,
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Called at the start of the first episode of task `task`. `weights` are
    /// the true task weights; agents learning `w` ignore them.
    fn begin_task(&mut self, task: usize, weights: &TaskWeights) -> Result<()>;

    /// Acts from `observation`, steps `env` once and learns from the transition.
    fn act_and_learn(&mut self, env: &mut FourRoomEnv, observation: &Observation)
        -> Result<StepRecord>;

    /// Weights the agent currently scores actions with, if any.
    fn current_weights(&self) -> Option<TaskWeights>;
}

/// Any agent, serialisable as a checkpoint (library, config and RNG state).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnyAgent {
    Sfql(SfqlAgent),
    Nec(NecAgent),
    Sfnec(SfnecAgent),
}

impl AnyAgent {
    pub fn new(kind: AgentKind, config: AgentConfig, obs_dim: usize, seed: u64) -> Result<Self> {
        Ok(match kind {
            AgentKind::Sfql => AnyAgent::Sfql(SfqlAgent::new(config, obs_dim, seed)?),
            AgentKind::Nec => AnyAgent::Nec(NecAgent::new(config, obs_dim, seed)?),
            AgentKind::Sfnec => AnyAgent::Sfnec(SfnecAgent::new(config, true, obs_dim, seed)?),
            AgentKind::SfnecNoGpi => {
                AnyAgent::Sfnec(SfnecAgent::new(config, false, obs_dim, seed)?)
            }
        })
    }

    fn inner(&self) -> &dyn Agent {
        match self {
            AnyAgent::Sfql(a) => a,
            AnyAgent::Nec(a) => a,
            AnyAgent::Sfnec(a) => a,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Agent {
        match self {
            AnyAgent::Sfql(a) => a,
            AnyAgent::Nec(a) => a,
            AnyAgent::Sfnec(a) => a,
        }
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}

impl Agent for AnyAgent {
    fn kind(&self) -> AgentKind {
        self.inner().kind()
    }

    fn begin_task(&mut self, task: usize, weights: &TaskWeights) -> Result<()> {
        self.inner_mut().begin_task(task, weights)
    }

    fn act_and_learn(
        &mut self,
        env: &mut FourRoomEnv,
        observation: &Observation,
    ) -> Result<StepRecord> {
        self.inner_mut().act_and_learn(env, observation)
    }

    fn current_weights(&self) -> Option<TaskWeights> {
        self.inner().current_weights()
    }
}

fn check_obs(expected: usize, observation: &[f64]) -> Result<()> {
    if observation.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: observation.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let s = AgentConfig::defaults(AgentKind::Sfnec);
        assert_eq!(
            (s.epsilon, s.net_lr, s.neighbours, s.dnd_lr, s.horizon, s.capacity),
            (0.15, 0.05, Neighbours::Count(20), 0.1, 8, 10_000)
        );
        assert_eq!(AgentConfig::defaults(AgentKind::Nec).net_lr, 0.01);
        assert_eq!(AgentConfig::defaults(AgentKind::Sfql).net_lr, 0.01);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let base = AgentConfig::defaults(AgentKind::Nec);
        for c in [
            AgentConfig { gamma: 1.0, ..base.clone() },
            AgentConfig { net_lr: 0.0, ..base.clone() },
            AgentConfig { dnd_lr: 1.5, ..base.clone() },
            AgentConfig { horizon: 0, ..base.clone() },
            AgentConfig { epsilon: -0.1, ..base.clone() },
            AgentConfig { neighbours: Neighbours::Count(0), ..base.clone() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AgentKind::ALL {
            assert_eq!(k.as_str().parse::<AgentKind>().unwrap(), k);
        }
        assert!("dqn".parse::<AgentKind>().is_err());
    }

    #[test]
    fn neighbours_serde() {
        #[derive(Serialize, Deserialize)]
        struct W {
            k: Neighbours,
        }
        let a: W = toml::from_str("k = \"all\"").unwrap();
        assert_eq!(a.k, Neighbours::All);
        let b: W = toml::from_str("k = 4").unwrap();
        assert_eq!(b.k, Neighbours::Count(4));
        assert!(toml::from_str::<W>("k = \"many\"").is_err());
    }
}
