use std::collections::BTreeMap;

use sfnec::agents::{AgentKind, Neighbours};
use sfnec::harness::{
    aggregate, metrics_from_rows, read_episode_csv, render_plots, run_cell, run_experiment_with,
    write_episode_csv, AgentOverrides, Execution, ExperimentSpec, PlotMode, Sweep, SweepParam,
};

fn small(name: &str, agents: &[AgentKind], seeds: u64, tasks: usize, tpt: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::desk_scale(name);
    spec.agents = agents.to_vec();
    spec.seeds = (0..seeds).collect();
    spec.env.schedule.num_tasks = tasks;
    spec.env.schedule.transitions_per_task = tpt;
    spec
}

fn csv_bytes(spec: &ExperimentSpec, exec: Execution) -> Vec<u8> {
    let res = run_experiment_with(spec, exec).unwrap();
    let mut buf = Vec::new();
    write_episode_csv(res.rows(), &mut buf).unwrap();
    buf
}

#[test]
fn same_spec_same_csv_bytes() {
    let spec = small("det", &AgentKind::ALL, 2, 2, 400);
    let a = csv_bytes(&spec, Execution::Sequential);
    assert_eq!(a, csv_bytes(&spec, Execution::Sequential));
    assert_eq!(a, csv_bytes(&spec, Execution::Parallel));
    let header = std::str::from_utf8(&a).unwrap().lines().next().unwrap();
    assert_eq!(header, "experiment,agent,seed,task,episode,return,transitions");
}

#[test]
fn two_seeds_three_tasks_give_six_records() {
    // budgets above twice the episode cap guarantee a finished episode per task
    let spec = small("count", &[AgentKind::Sfql], 2, 3, 2_100);
    let res = run_experiment_with(&spec, Execution::Sequential).unwrap();
    let records = metrics_from_rows(res.rows());
    assert!(records.len() >= 6, "{}", records.len());
    for seed in 0..2 {
        for task in 0..3 {
            assert!(records.iter().any(|r| r.seed == seed && r.task_index == task));
        }
    }
}

#[test]
fn per_task_totals_add_up_to_run_total() {
    let spec = small("sum", &[AgentKind::Nec, AgentKind::Sfnec], 2, 3, 500);
    let res = run_experiment_with(&spec, Execution::Sequential).unwrap();
    let rows: Vec<_> = res.rows().cloned().collect();
    let records = metrics_from_rows(&rows);
    for agent in [AgentKind::Nec, AgentKind::Sfnec] {
        for seed in 0..2 {
            // same summation order as the per-task sums
            let mut by_task: BTreeMap<usize, f64> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.agent == agent && r.seed == seed) {
                *by_task.entry(r.task.unwrap()).or_default() += r.episode_return;
            }
            let from_rows: f64 = by_task.values().sum();
            let from_records: f64 = records
                .iter()
                .filter(|r| r.agent == agent && r.seed == seed)
                .map(|r| r.total_return)
                .sum();
            assert_eq!(from_rows, from_records);
            for r in records.iter().filter(|r| r.agent == agent && r.seed == seed) {
                let mean = r.returns.iter().sum::<f64>() / r.returns.len() as f64;
                assert_eq!(r.average_return, mean);
            }
        }
    }
}

#[test]
fn episodes_are_attributed_to_their_start_task() {
    let spec = small("attr", &[AgentKind::Sfql], 1, 3, 700);
    let res = run_experiment_with(&spec, Execution::Sequential).unwrap();
    let mut prev_end = 0;
    for r in res.rows() {
        let task = r.task.unwrap() as u64;
        // an episode starts at the transition after the previous one ended
        assert_eq!(task, (prev_end / 700).min(2), "episode {:?}", r.episode);
        prev_end = r.transitions;
    }
}

#[test]
fn failed_cell_writes_marker_row() {
    let spec = small("fail", &[AgentKind::Nec], 1, 1, 100);
    let mut cell = spec.cells().unwrap().remove(0);
    cell.agent_config.dnd_lr = 2.0;
    let res = run_cell(&cell);
    assert!(res.failure.is_some());
    let last = res.episodes.last().unwrap();
    assert!(last.is_failure());
    assert!(last.episode_return.is_nan());

    let mut buf = Vec::new();
    write_episode_csv(&res.episodes, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.lines().last().unwrap().starts_with("fail,nec,0,,,NaN,"));
    let back = read_episode_csv(&buf[..]).unwrap();
    assert!(back.last().unwrap().is_failure());
    // failure rows carry no metrics
    assert!(metrics_from_rows(&back).is_empty());
}

#[test]
fn sweep_points_the_agent_ignores_keep_its_stream() {
    // NEC ignores reward weights, so learn_w leaves its cells unchanged
    let plain = small("lw", &[AgentKind::Nec], 1, 2, 300);
    let mut swept = plain.clone();
    swept.sweep = Some(Sweep::new(SweepParam::LearnW, &["true"]));
    let a = run_experiment_with(&plain, Execution::Sequential).unwrap();
    let b = run_experiment_with(&swept, Execution::Sequential).unwrap();
    let ra: Vec<_> = a.rows().map(|r| (r.episode_return.to_bits(), r.transitions)).collect();
    let rb: Vec<_> = b.rows().map(|r| (r.episode_return.to_bits(), r.transitions)).collect();
    assert_eq!(ra, rb);
    assert!(b.rows().all(|r| r.experiment == "lw:learn_w=true"));

    // SFNEC is affected, and sweep points get distinct streams
    let mut cap = small("cap", &[AgentKind::Sfnec], 1, 1, 100);
    cap.sweep = Some(Sweep::new(SweepParam::Capacity, &["100", "200"]));
    let cells = cap.cells().unwrap();
    assert_ne!(cells[0].agent_seed, cells[1].agent_seed);
    assert_eq!(cells[0].env.schedule.seed, cells[1].env.schedule.seed);
    assert_eq!(cells[0].agent_config.capacity, 100);
}

#[test]
fn spec_toml_round_trip() {
    let mut spec = small("rt", &[AgentKind::Sfnec, AgentKind::Sfql], 3, 4, 250);
    spec.agent.insert(
        AgentKind::Sfnec,
        AgentOverrides {
            neighbours: Some(Neighbours::All),
            capacity: Some(500),
            ..AgentOverrides::default()
        },
    );
    spec.all_agents.epsilon = Some(0.05);
    spec.sweep = Some(Sweep::new(SweepParam::Neighbours, &["1", "all"]));
    let text = spec.to_toml_string();
    let back = ExperimentSpec::from_toml_str(&text).unwrap();
    assert_eq!(back, spec);
    let c = back.agent_config(AgentKind::Sfnec, None);
    assert_eq!((c.neighbours, c.capacity, c.epsilon), (Neighbours::All, 500, 0.05));
}

#[test]
fn example_spec_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig3.toml");
    let spec = ExperimentSpec::from_file(path).unwrap();
    assert_eq!(spec, ExperimentSpec::desk_scale("fig3"));
}

#[test]
fn csv_to_plots() {
    let mut spec = small("plot", &[AgentKind::Sfql, AgentKind::SfnecNoGpi], 2, 2, 300);
    spec.sweep = Some(Sweep::new(SweepParam::Capacity, &["50", "500"]));
    let bytes = csv_bytes(&spec, Execution::Sequential);
    let rows = read_episode_csv(&bytes[..]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = render_plots(&rows, PlotMode::CapacitySweep, dir.path()).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let aggs = aggregate(&metrics_from_rows(&rows)).unwrap();
    assert_eq!(aggs.len(), 4);
    assert!(render_plots(&rows, PlotMode::NeighbourSweep, dir.path()).is_err());
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = ExperimentSpec::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            spec.cells().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
