use sfnec::agents::{
    Agent, AgentConfig, AgentKind, AnyAgent, NecAgent, SfnecAgent, StepRecord,
};
use sfnec::env::{EnvConfig, FourRoomEnv, ScheduleConfig, NUM_ACTIONS};

fn env(num_tasks: usize, transitions_per_task: u64, seed: u64) -> FourRoomEnv {
    FourRoomEnv::new(&EnvConfig {
        schedule: ScheduleConfig {
            num_tasks,
            transitions_per_task,
            seed,
        },
        ..EnvConfig::default()
    })
    .unwrap()
}

/// Drives `agent` for `steps` transitions, starting tasks as the env reaches
/// them, and hands every record to `inspect`.
fn drive<A: Agent>(
    agent: &mut A,
    env: &mut FourRoomEnv,
    steps: u64,
    started: &mut usize,
    mut inspect: impl FnMut(&mut A, &StepRecord),
) {
    let end = env.total_transitions() + steps;
    let mut obs = env.reset();
    while env.total_transitions() < end {
        while *started <= env.task_index() {
            let w = *env.schedule().weights(*started);
            agent.begin_task(*started, &w).unwrap();
            *started += 1;
        }
        let rec = agent.act_and_learn(env, &obs).unwrap();
        inspect(agent, &rec);
        obs = if rec.outcome.done {
            env.reset()
        } else {
            rec.outcome.observation.clone()
        };
    }
}

fn values(agent: &SfnecAgent, policy: usize, action: usize) -> Vec<Vec<f64>> {
    let store = &agent.library()[policy].stores[action];
    (0..store.len()).map(|i| store.value(i).to_vec()).collect()
}

#[test]
fn off_policy_write_only_touches_source_policy_and_taken_action() {
    let mut e = env(2, 2_000, 3);
    let mut a = SfnecAgent::new(AgentConfig::defaults(AgentKind::Sfnec), true, e.observation_dim(), 11).unwrap();
    let mut started = 0;
    drive(&mut a, &mut e, 2_000, &mut started, |_, _| {});
    assert_eq!(a.library().len(), 1);

    // into the second task; policy 0 is frozen apart from off-policy writes
    let mut cross = 0;
    let mut before: Vec<Vec<Vec<f64>>> = (0..NUM_ACTIONS).map(|b| values(&a, 0, b)).collect();
    drive(&mut a, &mut e, 1_500, &mut started, |agent, rec| {
        if agent.library().len() < 2 {
            return;
        }
        let after: Vec<Vec<Vec<f64>>> = (0..NUM_ACTIONS).map(|b| values(agent, 0, b)).collect();
        for b in 0..NUM_ACTIONS {
            let touched = after[b] != before[b];
            let expected = rec.source_policy == Some(0) && b == rec.action;
            assert!(!touched || expected, "policy 0 action {b} changed without a source write");
            if expected {
                assert!(touched, "source write missing");
                cross += 1;
            }
        }
        before = after;
    });
    assert!(cross > 0, "GPI never followed the old policy");
}

#[test]
fn episode_end_flushes_pending_targets() {
    // horizon longer than any episode: every write comes from the terminal flush
    let mut config = AgentConfig::defaults(AgentKind::SfnecNoGpi);
    config.horizon = 5_000;
    let mut e = env(1, 3_000, 1);
    let mut a = SfnecAgent::new(config, false, e.observation_dim(), 5).unwrap();
    let mut started = 0;
    let mut episode_steps = 0usize;
    let mut checked = 0;
    drive(&mut a, &mut e, 3_000, &mut started, |agent, rec| {
        episode_steps += 1;
        let stored: usize = agent.library()[0].stores.iter().map(|s| s.len()).sum();
        if rec.outcome.done {
            assert!(stored > 0);
            checked += 1;
            episode_steps = 0;
        } else if checked == 0 {
            assert_eq!(stored, 0, "write before the episode ended");
        }
    });
    assert!(checked > 0);
}

#[test]
fn nec_with_empty_memory_acts_uniformly() {
    let e = env(1, 100, 0);
    let mut config = AgentConfig::defaults(AgentKind::Nec);
    config.epsilon = 0.0;
    let mut counts = [0usize; NUM_ACTIONS];
    for seed in 0..400 {
        let mut env = e.clone();
        let mut a = NecAgent::new(config.clone(), env.observation_dim(), seed).unwrap();
        a.begin_task(0, &env.schedule().weights(0).clone()).unwrap();
        let obs = env.reset();
        assert_eq!(a.greedy(&obs), None);
        counts[a.act_and_learn(&mut env, &obs).unwrap().action] += 1;
    }
    for c in counts {
        // 400 draws, p = 1/4: mean 100, sd ≈ 8.7
        assert!((70..=130).contains(&c), "{counts:?}");
    }
}

#[test]
fn nec_memory_persists_across_tasks() {
    let mut e = env(2, 1_000, 2);
    let mut a = NecAgent::new(AgentConfig::defaults(AgentKind::Nec), e.observation_dim(), 9).unwrap();
    let mut started = 0;
    drive(&mut a, &mut e, 1_000, &mut started, |_, _| {});
    let before: usize = a.stores().iter().map(|s| s.len()).sum();
    assert!(before > 0);
    drive(&mut a, &mut e, 10, &mut started, |_, _| {});
    assert_eq!(started, 2);
    let after: usize = a.stores().iter().map(|s| s.len()).sum();
    assert!(after >= before);
}

#[test]
fn checkpoint_resume_matches_uninterrupted_run() {
    for kind in AgentKind::ALL {
        let mut e = env(2, 800, 4);
        let mut a = AnyAgent::new(kind, AgentConfig::defaults(kind), e.observation_dim(), 21).unwrap();
        let mut started = 0;
        drive(&mut a, &mut e, 900, &mut started, |_, _| {});

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        a.save_checkpoint(&path).unwrap();
        let mut b = AnyAgent::load_checkpoint(&path).unwrap();
        assert_eq!(b.kind(), kind);

        let mut e2 = e.clone();
        let mut started2 = started;
        let mut trace_a = Vec::new();
        let mut trace_b = Vec::new();
        drive(&mut a, &mut e, 500, &mut started, |_, r| trace_a.push(r.action));
        drive(&mut b, &mut e2, 500, &mut started2, |_, r| trace_b.push(r.action));
        assert_eq!(trace_a, trace_b, "{kind}");
    }
}

#[test]
fn agents_reject_wrong_observation_width() {
    let mut e = env(1, 10, 0);
    for kind in AgentKind::ALL {
        let mut a = AnyAgent::new(kind, AgentConfig::defaults(kind), 5, 0).unwrap();
        a.begin_task(0, &e.schedule().weights(0).clone()).unwrap();
        let obs = e.reset();
        assert!(a.act_and_learn(&mut e, &obs).is_err());
    }
}
