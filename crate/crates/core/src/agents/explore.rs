use rand::Rng;

use crate::env::NUM_ACTIONS;

/// With probability `epsilon` a uniformly random action, otherwise `greedy`.
pub fn epsilon_greedy(greedy: usize, epsilon: f64, rng: &mut impl Rng) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..NUM_ACTIONS)
    } else {
        greedy
    }
}
