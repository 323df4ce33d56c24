//! Per-task metrics and cross-seed aggregation.
//!
//! Standard errors use the sample standard deviation (n − 1 denominator)
//! divided by √n; a single seed has SE 0.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use super::run::EpisodeRow;
use crate::agents::AgentKind;
use crate::{Error, Result};

/// Episodes of one task in one run.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub experiment: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub task_index: usize,
    pub returns: Vec<f64>,
    /// Mean of `returns`; 0 for a task without completed episodes.
    pub average_return: f64,
    pub total_return: f64,
}

/// Groups episode rows by (experiment, agent, seed, task). Failure rows are skipped.
pub fn metrics_from_rows<'a>(rows: impl IntoIterator<Item = &'a EpisodeRow>) -> Vec<MetricsRecord> {
    let mut groups: BTreeMap<(String, AgentKind, u64, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(task) = r.task {
            groups
                .entry((r.experiment.clone(), r.agent, r.seed, task))
                .or_default()
                .push(r.episode_return);
        }
    }
    groups
        .into_iter()
        .map(|((experiment, agent, seed, task_index), returns)| {
            let total_return: f64 = returns.iter().sum();
            let average_return = if returns.is_empty() {
                0.0
            } else {
                total_return / returns.len() as f64
            };
            MetricsRecord {
                experiment,
                agent,
                seed,
                task_index,
                returns,
                average_return,
                total_return,
            }
        })
        .collect()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyGroup("no values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Mean ± SE of the per-task average return across seeds, for one group.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSeries {
    pub experiment: String,
    pub agent: AgentKind,
    pub tasks: Vec<usize>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub seeds: Vec<usize>,
    /// Mean ± SE across seeds of each seed's total return.
    pub total_mean: f64,
    pub total_se: f64,
}

/// Aggregates per (experiment, agent) across seeds.
pub fn aggregate(records: &[MetricsRecord]) -> Result<Vec<AggregateSeries>> {
    type Key = (String, AgentKind);
    let mut per_task: BTreeMap<Key, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut totals: BTreeMap<Key, BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records {
        let key = (r.experiment.clone(), r.agent);
        per_task
            .entry(key.clone())
            .or_default()
            .entry(r.task_index)
            .or_default()
            .push(r.average_return);
        *totals.entry(key).or_default().entry(r.seed).or_default() += r.total_return;
    }
    per_task
        .into_iter()
        .map(|(key, tasks)| {
            let mut series = AggregateSeries {
                experiment: key.0.clone(),
                agent: key.1,
                tasks: Vec::new(),
                mean: Vec::new(),
                se: Vec::new(),
                seeds: Vec::new(),
                total_mean: 0.0,
                total_se: 0.0,
            };
            for (task, values) in tasks {
                let (m, s) = mean_se(&values)?;
                series.tasks.push(task);
                series.mean.push(m);
                series.se.push(s);
                series.seeds.push(values.len());
            }
            let seed_totals: Vec<f64> = totals[&key].values().copied().collect();
            (series.total_mean, series.total_se) = mean_se(&seed_totals)?;
            Ok(series)
        })
        .collect()
}

/// For each seed of (experiment, agent), the sum of per-task average returns
/// over `tasks` (0-based, inclusive range).
pub fn seed_task_sums(
    records: &[MetricsRecord],
    experiment: &str,
    agent: AgentKind,
    tasks: std::ops::RangeInclusive<usize>,
) -> Vec<f64> {
    let mut sums: BTreeMap<u64, f64> = BTreeMap::new();
    for r in records {
        if r.experiment == experiment && r.agent == agent && tasks.contains(&r.task_index) {
            *sums.entry(r.seed).or_default() += r.average_return;
        }
    }
    sums.into_values().collect()
}

/// For each seed of (experiment, agent), the run's total return.
pub fn seed_totals(records: &[MetricsRecord], experiment: &str, agent: AgentKind) -> Vec<f64> {
    let mut sums: BTreeMap<u64, f64> = BTreeMap::new();
    for r in records {
        if r.experiment == experiment && r.agent == agent {
            *sums.entry(r.seed).or_default() += r.total_return;
        }
    }
    sums.into_values().collect()
}

/// Episode CSV with header `experiment,agent,seed,task,episode,return,transitions`.
pub fn write_episode_csv<'a>(
    rows: impl IntoIterator<Item = &'a EpisodeRow>,
    out: impl io::Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut wrote = false;
    for r in rows {
        w.serialize(r)?;
        wrote = true;
    }
    if !wrote {
        w.write_record(["experiment", "agent", "seed", "task", "episode", "return", "transitions"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episode_csv(input: impl io::Read) -> Result<Vec<EpisodeRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let expected = ["experiment", "agent", "seed", "task", "episode", "return", "transitions"];
    if headers.iter().ne(expected) {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_episode_csv_file(path: impl AsRef<Path>) -> Result<Vec<EpisodeRow>> {
    read_episode_csv(std::fs::File::open(path)?)
}
