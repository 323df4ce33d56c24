use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gpi::{greedy_action, Psi, SuccessorFeatures};
use crate::env::{FeatureVector, TaskWeights, FEATURE_DIM};

/// Linear successor features: `ψ̃(s, a) = W_a · s`, one `FEATURE_DIM × obs_dim`
/// matrix per action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSf {
    obs_dim: usize,
    num_actions: usize,
    weights: Vec<f64>,
}

impl LinearSf {
    pub fn zeros(obs_dim: usize, num_actions: usize) -> Self {
        LinearSf {
            obs_dim,
            num_actions,
            weights: vec![0.0; num_actions * FEATURE_DIM * obs_dim],
        }
    }

    /// Entries uniform in `[-scale, scale]`.
    pub fn random(obs_dim: usize, num_actions: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut sf = Self::zeros(obs_dim, num_actions);
        if scale > 0.0 {
            for w in &mut sf.weights {
                *w = rng.random_range(-scale..=scale);
            }
        }
        sf
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    fn row(&self, action: usize, feature: usize) -> &[f64] {
        let start = (action * FEATURE_DIM + feature) * self.obs_dim;
        &self.weights[start..start + self.obs_dim]
    }

    pub fn evaluate(&self, observation: &[f64], action: usize) -> Psi {
        debug_assert_eq!(observation.len(), self.obs_dim);
        std::array::from_fn(|f| {
            self.row(action, f)
                .iter()
                .zip(observation)
                .map(|(w, x)| w * x)
                .sum()
        })
    }

    /// `W_a += lr · δ sᵀ`.
    pub fn add_outer(&mut self, action: usize, error: &Psi, observation: &[f64], lr: f64) {
        for (f, &e) in error.iter().enumerate() {
            let step = lr * e;
            if step == 0.0 {
                continue;
            }
            let start = (action * FEATURE_DIM + f) * self.obs_dim;
            for (w, x) in self.weights[start..start + self.obs_dim]
                .iter_mut()
                .zip(observation)
            {
                *w += step * x;
            }
        }
    }
}

/// A linear ψ paired with the weights of the task it serves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPolicy {
    pub sf: LinearSf,
    pub weights: TaskWeights,
}

impl SuccessorFeatures for LinearPolicy {
    fn psi(&mut self, observation: &[f64], action: usize) -> Option<Psi> {
        (action < self.sf.num_actions).then(|| self.sf.evaluate(observation, action))
    }

    fn task_weights(&self) -> &TaskWeights {
        &self.weights
    }
}

/// One-step TD update of `policy`'s ψ for the action taken.
///
/// `δ = φ + γ ψ̃(s′, a′) − ψ̃(s, a)` with `a′` greedy under the policy's own
/// weights; `next_observation` is `None` on terminal transitions. Returns δ.
pub fn sfql_td_step(
    policy: &mut LinearPolicy,
    observation: &[f64],
    action: usize,
    features: &FeatureVector,
    next_observation: Option<&[f64]>,
    gamma: f64,
    net_lr: f64,
) -> Psi {
    let bootstrap = match next_observation {
        Some(next) => {
            let w = policy.weights;
            greedy_action(policy, next, &w).map_or([0.0; FEATURE_DIM], |c| c.psi)
        }
        None => [0.0; FEATURE_DIM],
    };
    let current = policy.sf.evaluate(observation, action);
    let error: Psi = std::array::from_fn(|f| features.0[f] + gamma * bootstrap[f] - current[f]);
    policy.sf.add_outer(action, &error, observation, net_lr);
    error
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(i: usize, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn terminal_goal_error() {
        let mut p = LinearPolicy {
            sf: LinearSf::zeros(3, 4),
            weights: TaskWeights([0.0, 0.0, 0.0, 1.0]),
        };
        let d = sfql_td_step(
            &mut p,
            &one_hot(1, 3),
            2,
            &FeatureVector([0.0, 0.0, 0.0, 1.0]),
            None,
            0.9,
            0.5,
        );
        assert_eq!(d, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(p.sf.evaluate(&one_hot(1, 3), 2), [0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn zero_rate_no_change() {
        let mut p = LinearPolicy {
            sf: LinearSf::zeros(3, 4),
            weights: TaskWeights([1.0; 4]),
        };
        let before = p.clone();
        sfql_td_step(
            &mut p,
            &one_hot(0, 3),
            0,
            &FeatureVector([1.0, 0.0, 0.0, 0.0]),
            Some(&one_hot(1, 3)),
            0.9,
            0.0,
        );
        assert_eq!(p, before);
    }

    #[test]
    fn three_state_chain_fixed_point() {
        // s0 -> s1 -> s2 -> terminal, single action, φ = e0, e1, goal.
        let n = 3;
        let gamma = 0.9;
        let phis = [
            FeatureVector([1.0, 0.0, 0.0, 0.0]),
            FeatureVector([0.0, 1.0, 0.0, 0.0]),
            FeatureVector([0.0, 0.0, 0.0, 1.0]),
        ];
        let mut p = LinearPolicy {
            sf: LinearSf::zeros(n, 1),
            weights: TaskWeights([0.0, 0.0, 0.0, 1.0]),
        };
        for _ in 0..2000 {
            for s in 0..n {
                let next = (s + 1 < n).then(|| one_hot(s + 1, n));
                sfql_td_step(&mut p, &one_hot(s, n), 0, &phis[s], next.as_deref(), gamma, 0.3);
            }
        }
        // (I − γP)⁻¹Φ
        let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
        for s in 0..n - 1 {
            m[(s, s + 1)] = -gamma;
        }
        let phi = nalgebra::DMatrix::from_fn(n, 4, |s, f| phis[s].0[f]);
        let psi = m.try_inverse().unwrap() * phi;
        for s in 0..n {
            let got = p.sf.evaluate(&one_hot(s, n), 0);
            for f in 0..4 {
                assert!((got[f] - psi[(s, f)]).abs() < 1e-3, "s{s} f{f}");
            }
        }
    }
}
