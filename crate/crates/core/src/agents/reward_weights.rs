use rand::Rng;

use crate::env::{FeatureVector, TaskWeights, FEATURE_DIM};

/// Delta-rule step `w ← w + α (r − φᵀw) φ`.
pub fn learn_w_step(w: &mut TaskWeights, phi: &FeatureVector, reward: f64, alpha_w: f64) {
    if phi.is_zero() {
        return;
    }
    let error = reward - phi.reward(w);
    for (wi, &f) in w.0.iter_mut().zip(&phi.0) {
        *wi += alpha_w * error * f;
    }
}

/// Small random starting weights for a task whose reward must be learned.
pub fn initial_weights(rng: &mut impl Rng) -> TaskWeights {
    TaskWeights(std::array::from_fn::<_, FEATURE_DIM, _>(|_| {
        rng.random_range(-0.01..0.01)
    }))
}
