use crate::dnd::Dnd;
use crate::Result;

/// One gradient step on `‖lookup(key) − target‖²` with respect to the values
/// of the neighbours that produced the lookup.
///
/// Keys are fixed, so the kernel weights are constants and each neighbour
/// value moves by `−lr · 2 wᵢ (estimate − target)`. An empty store is a no-op.
pub fn gradient_train_step(
    store: &mut Dnd,
    key: &[f64],
    target: &[f64],
    k: usize,
    net_lr: f64,
) -> Result<()> {
    if store.is_empty() {
        return Ok(());
    }
    let lookup = store.lookup(key, k)?;
    let residual: Vec<f64> = lookup
        .estimate
        .iter()
        .zip(target)
        .map(|(e, t)| 2.0 * (e - t))
        .collect();
    for (&i, &w) in lookup.indices.iter().zip(&lookup.weights) {
        for (v, g) in store.value_mut(i).iter_mut().zip(&residual) {
            *v -= net_lr * w * g;
        }
    }
    Ok(())
}
