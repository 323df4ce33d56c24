//! N-step bootstrapped targets.
//!
//! `target(t) = Σ_{j<n} γ^j x_{t+j} + γ^N · bootstrap(s_{t+N})` where `x` is
//! the per-step signal: the feature vector φ for ψ targets or the scalar
//! reward for Q targets. Terminal tails (`n < N`) carry no bootstrap term.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::{dot, Observation, TaskWeights, FEATURE_DIM};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Pending {
    observation: Observation,
    action: usize,
    signal: Vec<f64>,
}

/// A matured target for the transition taken from `observation` with `action`.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub observation: Observation,
    pub action: usize,
    pub value: Vec<f64>,
}

/// Discounted sum of `signals` plus `γ^len · bootstrap`.
pub fn discounted_target<'a>(
    signals: impl IntoIterator<Item = &'a [f64]>,
    gamma: f64,
    bootstrap: Option<&[f64]>,
) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut discount = 1.0;
    for s in signals {
        if out.is_empty() {
            out.resize(s.len(), 0.0);
        }
        for (o, x) in out.iter_mut().zip(s) {
            *o += discount * x;
        }
        discount *= gamma;
    }
    if let Some(b) = bootstrap {
        if out.is_empty() {
            out.resize(b.len(), 0.0);
        }
        for (o, x) in out.iter_mut().zip(b) {
            *o += discount * x;
        }
    }
    out
}

/// Sliding window over the last `horizon` transitions of the current episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStepBuffer {
    horizon: usize,
    pending: VecDeque<Pending>,
}

impl NStepBuffer {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon >= 1, "n-step horizon must be >= 1");
        NStepBuffer {
            horizon,
            pending: VecDeque::with_capacity(horizon),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// True once the oldest pending transition has `horizon` observed steps.
    pub fn is_mature(&self) -> bool {
        self.pending.len() >= self.horizon
    }

    pub fn push(&mut self, observation: Observation, action: usize, signal: Vec<f64>) {
        debug_assert!(self.pending.len() < self.horizon, "mature target not consumed");
        self.pending.push_back(Pending {
            observation,
            action,
            signal,
        });
    }

    /// Pops the oldest transition's target, bootstrapping from the state
    /// `horizon` steps after it.
    pub fn pop_mature(&mut self, gamma: f64, bootstrap: &[f64]) -> Result<Target> {
        if !self.is_mature() {
            return Err(Error::TargetNotReady);
        }
        let value = discounted_target(
            self.pending.iter().map(|p| p.signal.as_slice()),
            gamma,
            Some(bootstrap),
        );
        let p = self.pending.pop_front().expect("mature buffer is nonempty");
        Ok(Target {
            observation: p.observation,
            action: p.action,
            value,
        })
    }

    /// Episode ended: every pending transition gets a bootstrap-free tail target.
    pub fn drain_terminal(&mut self, gamma: f64) -> Vec<Target> {
        let mut out = Vec::with_capacity(self.pending.len());
        while !self.pending.is_empty() {
            let value =
                discounted_target(self.pending.iter().map(|p| p.signal.as_slice()), gamma, None);
            let p = self.pending.pop_front().expect("checked nonempty");
            out.push(Target {
                observation: p.observation,
                action: p.action,
                value,
            });
        }
        out
    }

    pub fn clear(&mut self) {
        self.pending.clear();
    }
}

/// ψ target: `Σ γ^j φ_{t+j} + γ^N ψ(s_{t+N}, a*)`, `a* = argmax_b ψ(s_{t+N}, b)ᵀw`.
///
/// `bootstrap` returns the ψ estimate for an action of the state `horizon`
/// steps ahead, or `None` if it has none (treated as zero). It is not called
/// on terminal tails.
pub fn nstep_psi_target(
    buffer: &mut NStepBuffer,
    gamma: f64,
    weights: &TaskWeights,
    episode_ended: bool,
    mut bootstrap: impl FnMut(usize) -> Option<[f64; FEATURE_DIM]>,
) -> Result<Vec<Target>> {
    if episode_ended {
        return Ok(buffer.drain_terminal(gamma));
    }
    let best = (0..crate::env::NUM_ACTIONS)
        .map(|a| bootstrap(a).unwrap_or([0.0; FEATURE_DIM]))
        .fold(None::<[f64; FEATURE_DIM]>, |best, psi| match best {
            Some(b) if dot(&b, &weights.0) >= dot(&psi, &weights.0) => Some(b),
            _ => Some(psi),
        })
        .expect("at least one action");
    Ok(vec![buffer.pop_mature(gamma, &best)?])
}

/// Scalar analogue of [`nstep_psi_target`] with `max_b Q(s_{t+N}, b)`.
pub fn nstep_q_target(
    buffer: &mut NStepBuffer,
    gamma: f64,
    episode_ended: bool,
    mut bootstrap: impl FnMut(usize) -> Option<f64>,
) -> Result<Vec<Target>> {
    if episode_ended {
        return Ok(buffer.drain_terminal(gamma));
    }
    let best = (0..crate::env::NUM_ACTIONS)
        .map(|a| bootstrap(a).unwrap_or(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![buffer.pop_mature(gamma, &[best])?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(x: f64) -> Observation {
        Observation::new(vec![x])
    }

    #[test]
    fn one_step_terminal_goal() {
        let mut b = NStepBuffer::new(1);
        b.push(obs(0.0), 2, vec![0.0, 0.0, 0.0, 1.0]);
        let w = TaskWeights([0.0; 4]);
        let t = nstep_psi_target(&mut b, 0.95, &w, true, |_| unreachable!()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].value, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t[0].action, 2);
    }

    #[test]
    fn two_step_hand_unrolled() {
        let mut b = NStepBuffer::new(2);
        b.push(obs(0.0), 0, vec![1.0, 0.0, 0.0, 0.0]);
        b.push(obs(1.0), 1, vec![0.0, 1.0, 0.0, 0.0]);
        let w = TaskWeights([0.0, 0.0, 1.0, 0.0]);
        let t = nstep_psi_target(&mut b, 0.5, &w, false, |a| {
            Some(if a == 3 { [0.0, 0.0, 1.0, 0.0] } else { [0.0; 4] })
        })
        .unwrap();
        assert_eq!(t[0].value, vec![1.0, 0.5, 0.25, 0.0]);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn scalar_three_step() {
        let mut b = NStepBuffer::new(3);
        for i in 0..3 {
            b.push(obs(i as f64), 0, vec![1.0]);
        }
        let t = nstep_q_target(&mut b, 0.9, false, |a| Some(if a == 1 { 10.0 } else { -1.0 })).unwrap();
        assert!((t[0].value[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_terminal_reward() {
        let mut b = NStepBuffer::new(1);
        b.push(obs(0.0), 0, vec![1.0]);
        let t = nstep_q_target(&mut b, 0.9, true, |_| Some(5.0)).unwrap();
        assert_eq!(t[0].value, vec![1.0]);
    }

    #[test]
    fn immature_buffer_errors() {
        let mut b = NStepBuffer::new(3);
        b.push(obs(0.0), 0, vec![1.0]);
        assert!(matches!(
            nstep_q_target(&mut b, 0.9, false, |_| None),
            Err(Error::TargetNotReady)
        ));
    }

    #[test]
    fn terminal_drain_truncates_tails() {
        let mut b = NStepBuffer::new(4);
        for r in [1.0, 2.0, 3.0] {
            b.push(obs(r), 0, vec![r]);
        }
        let t = b.drain_terminal(0.5);
        let v: Vec<f64> = t.iter().map(|t| t.value[0]).collect();
        assert_eq!(v, vec![1.0 + 1.0 + 0.75, 2.0 + 1.5, 3.0]);
        assert!(b.is_empty());
    }

    #[test]
    fn empty_bootstrap_counts_as_zero() {
        let mut b = NStepBuffer::new(1);
        b.push(obs(0.0), 0, vec![0.0, 1.0, 0.0, 0.0]);
        let w = TaskWeights([1.0; 4]);
        let t = nstep_psi_target(&mut b, 0.5, &w, false, |_| None).unwrap();
        assert_eq!(t[0].value, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn bootstrap_ties_take_lowest_action() {
        let mut b = NStepBuffer::new(1);
        b.push(obs(0.0), 0, vec![0.0; 4]);
        let w = TaskWeights([1.0, 1.0, 0.0, 0.0]);
        let t = nstep_psi_target(&mut b, 1.0 - 1e-9, &w, false, |a| {
            Some(match a {
                1 => [1.0, 0.0, 0.0, 0.0],
                2 => [0.0, 1.0, 0.0, 0.0],
                _ => [0.0; 4],
            })
        })
        .unwrap();
        assert!(t[0].value[0] > 0.0 && t[0].value[1] == 0.0);
    }

    proptest! {
        #[test]
        fn psi_targets_project_onto_q_targets(
            phis in prop::collection::vec(prop::array::uniform4(0u8..2), 1..10),
            w in prop::array::uniform4(-1.0f64..1.0),
            boot in prop::array::uniform4(-2.0f64..2.0),
            gamma in 0.0f64..0.999,
        ) {
            let n = phis.len();
            let w = TaskWeights(w);
            let mut pb = NStepBuffer::new(n);
            let mut qb = NStepBuffer::new(n);
            for p in &phis {
                let phi: Vec<f64> = p.iter().map(|&x| x as f64).collect();
                let arr = [phi[0], phi[1], phi[2], phi[3]];
                qb.push(obs(0.0), 0, vec![dot(&arr, &w.0)]);
                pb.push(obs(0.0), 0, phi);
            }
            let pt = nstep_psi_target(&mut pb, gamma, &w, false, |_| Some(boot)).unwrap();
            let qt = nstep_q_target(&mut qb, gamma, false, |_| Some(dot(&boot, &w.0))).unwrap();
            let v = &pt[0].value;
            let projected = dot(&[v[0], v[1], v[2], v[3]], &w.0);
            prop_assert!((projected - qt[0].value[0]).abs() <= 1e-12);
        }
    }
}
