//! Generalized policy improvement over a library of successor features.

use serde::{Deserialize, Serialize};

use crate::env::{TaskWeights, FEATURE_DIM, NUM_ACTIONS};

pub type Psi = [f64; FEATURE_DIM];

/// Anything that can estimate ψ(s, a) for one policy.
pub trait SuccessorFeatures {
    /// `None` when the policy has nothing stored for `action` yet.
    fn psi(&mut self, observation: &[f64], action: usize) -> Option<Psi>;

    /// The reward weights this policy was trained for.
    fn task_weights(&self) -> &TaskWeights;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpiChoice {
    pub action: usize,
    /// Index of the maximizing policy within the slice passed in.
    pub policy: usize,
    pub psi: Psi,
    pub score: f64,
}

/// `argmax_b max_k ψ_k(s, b)ᵀw`.
///
/// Ties go to the lower policy index, then the lower action index. Actions
/// without an estimate score as ψ = 0; if no policy has any estimate at all
/// the result is `None` and the caller picks its own fallback.
pub fn gpi_action<P: SuccessorFeatures>(
    library: &mut [P],
    observation: &[f64],
    weights: &TaskWeights,
) -> Option<GpiChoice> {
    let mut best: Option<GpiChoice> = None;
    let mut any_estimate = false;
    for (k, policy) in library.iter_mut().enumerate() {
        for b in 0..NUM_ACTIONS {
            let psi = match policy.psi(observation, b) {
                Some(p) => {
                    any_estimate = true;
                    p
                }
                None => [0.0; FEATURE_DIM],
            };
            let score = weights.score(&psi);
            if best.map_or(true, |c| score > c.score) {
                best = Some(GpiChoice {
                    action: b,
                    policy: k,
                    psi,
                    score,
                });
            }
        }
    }
    best.filter(|_| any_estimate)
}

/// Greedy action of a single policy under `weights`.
pub fn greedy_action<P: SuccessorFeatures>(
    policy: &mut P,
    observation: &[f64],
    weights: &TaskWeights,
) -> Option<GpiChoice> {
    gpi_action(std::slice::from_mut(policy), observation, weights)
}

/// Tabular ψ table, handy for tests and small worked examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularSf {
    /// `table[state][action]`; state is `observation[0] as usize`.
    pub table: Vec<[Option<Psi>; NUM_ACTIONS]>,
    pub weights: TaskWeights,
}

impl SuccessorFeatures for TabularSf {
    fn psi(&mut self, observation: &[f64], action: usize) -> Option<Psi> {
        self.table[observation[0] as usize][action]
    }

    fn task_weights(&self) -> &TaskWeights {
        &self.weights
    }
}
