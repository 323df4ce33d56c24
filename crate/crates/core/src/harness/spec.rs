use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentKind, Neighbours};
use crate::env::{EnvConfig, ScheduleConfig};
use crate::{Error, Result};

/// Partial [`AgentConfig`]; set fields replace the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentOverrides {
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub net_lr: Option<f64>,
    pub dnd_lr: Option<f64>,
    pub neighbours: Option<Neighbours>,
    pub horizon: Option<usize>,
    pub capacity: Option<usize>,
    pub alpha_w: Option<f64>,
    pub learn_w: Option<bool>,
    pub kernel_delta: Option<f64>,
    pub sfql_init_scale: Option<f64>,
}

impl AgentOverrides {
    pub fn apply(&self, config: &mut AgentConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f { config.$f = v; }
            )*};
        }
        set!(
            epsilon,
            gamma,
            net_lr,
            dnd_lr,
            neighbours,
            horizon,
            capacity,
            alpha_w,
            learn_w,
            kernel_delta,
            sfql_init_scale
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Capacity,
    Neighbours,
    LearnW,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Capacity => "capacity",
            SweepParam::Neighbours => "neighbours",
            SweepParam::LearnW => "learn_w",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity" => Ok(SweepParam::Capacity),
            "neighbours" | "neighbors" => Ok(SweepParam::Neighbours),
            "learn_w" => Ok(SweepParam::LearnW),
            _ => Err(Error::InvalidConfig(format!("unknown sweep parameter `{s}`"))),
        }
    }
}

/// One value of a swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepPoint {
    Capacity(usize),
    Neighbours(Neighbours),
    LearnW(bool),
}

impl SweepPoint {
    pub fn parse(param: SweepParam, value: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad {} value `{value}`", param.as_str()));
        Ok(match param {
            SweepParam::Capacity => SweepPoint::Capacity(value.parse().map_err(|_| bad())?),
            SweepParam::Neighbours => SweepPoint::Neighbours(value.parse().map_err(|_| bad())?),
            SweepParam::LearnW => SweepPoint::LearnW(value.parse().map_err(|_| bad())?),
        })
    }

    pub fn param(&self) -> SweepParam {
        match self {
            SweepPoint::Capacity(_) => SweepParam::Capacity,
            SweepPoint::Neighbours(_) => SweepParam::Neighbours,
            SweepPoint::LearnW(_) => SweepParam::LearnW,
        }
    }

    pub fn value_string(&self) -> String {
        match self {
            SweepPoint::Capacity(c) => c.to_string(),
            SweepPoint::Neighbours(k) => k.to_string(),
            SweepPoint::LearnW(b) => b.to_string(),
        }
    }

    /// Whether `kind` reads this parameter at all.
    pub fn affects(&self, kind: AgentKind) -> bool {
        match self {
            SweepPoint::Capacity(_) | SweepPoint::Neighbours(_) => kind != AgentKind::Sfql,
            SweepPoint::LearnW(_) => kind.uses_weights(),
        }
    }

    pub fn apply(&self, config: &mut AgentConfig) {
        match *self {
            SweepPoint::Capacity(c) => config.capacity = c,
            SweepPoint::Neighbours(k) => config.neighbours = k,
            SweepPoint::LearnW(b) => config.learn_w = b,
        }
    }
}

impl fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.param().as_str(), self.value_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<toml::Value>,
}

impl Sweep {
    pub fn new(param: SweepParam, values: &[&str]) -> Self {
        Sweep {
            param,
            values: values
                .iter()
                .map(|v| toml::Value::String(v.to_string()))
                .collect(),
        }
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        self.values
            .iter()
            .map(|v| {
                let s = match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                SweepPoint::parse(self.param, &s)
            })
            .collect()
    }
}

/// Everything needed to reproduce a set of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub agents: Vec<AgentKind>,
    /// Seed indices; each index yields one run per agent and sweep point.
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub env: EnvConfig,
    /// Overrides applied to every agent.
    pub all_agents: AgentOverrides,
    /// Per-kind overrides, applied after `all_agents`.
    pub agent: BTreeMap<AgentKind, AgentOverrides>,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::desk_scale("fig3")
    }
}

impl ExperimentSpec {
    /// 10 tasks × 5,000 transitions × 3 seeds, all four agents.
    pub fn desk_scale(name: &str) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            agents: AgentKind::ALL.to_vec(),
            seeds: (0..3).collect(),
            master_seed: 0,
            env: EnvConfig {
                schedule: ScheduleConfig {
                    num_tasks: 10,
                    transitions_per_task: 5_000,
                    seed: 0,
                },
                ..EnvConfig::default()
            },
            all_agents: AgentOverrides::default(),
            agent: BTreeMap::new(),
            sweep: None,
        }
    }

    /// 50 tasks × 20,000 transitions × 10 seeds.
    pub fn full_scale(name: &str) -> Self {
        let mut spec = Self::desk_scale(name);
        spec.into_full_scale();
        spec
    }

    pub fn into_full_scale(&mut self) {
        self.env.schedule.num_tasks = 50;
        self.env.schedule.transitions_per_task = 20_000;
        self.seeds = (0..10).collect();
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("spec is always representable")
    }

    pub fn sweep_points(&self) -> Result<Vec<Option<SweepPoint>>> {
        Ok(match &self.sweep {
            None => vec![None],
            Some(s) => s.points()?.into_iter().map(Some).collect(),
        })
    }

    /// Effective configuration of one agent at one sweep point.
    pub fn agent_config(&self, kind: AgentKind, point: Option<&SweepPoint>) -> AgentConfig {
        let mut config = AgentConfig::defaults(kind);
        self.all_agents.apply(&mut config);
        if let Some(o) = self.agent.get(&kind) {
            o.apply(&mut config);
        }
        if let Some(p) = point {
            p.apply(&mut config);
        }
        config
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidConfig("spec lists no agents".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("spec lists no seeds".into()));
        }
        crate::env::FourRoomEnv::new(&self.env)?;
        for point in self.sweep_points()? {
            for &kind in &self.agents {
                self.agent_config(kind, point.as_ref()).validate()?;
            }
        }
        Ok(())
    }

    /// Label written to the CSV `experiment` column for a sweep point.
    pub fn experiment_label(&self, point: Option<&SweepPoint>) -> String {
        match point {
            None => self.name.clone(),
            Some(p) => format!("{}:{p}", self.name),
        }
    }
}
