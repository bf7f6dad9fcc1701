//! Stratified k-fold cross-validation with a seeded deterministic shuffle.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MlError;

/// Assign each item to a fold: per-class shuffled indices are dealt
/// round-robin with a cursor shared across classes, keeping fold sizes within
/// one of each other.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, MlError> {
    if k < 2 {
        return Err(MlError::TooFewSamples { need: 2, got: k });
    }
    if y.len() < k {
        return Err(MlError::TooFewSamples { need: k, got: y.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; y.len()];
    let mut cursor = 0usize;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(assignment)
}

/// Fold models plus out-of-fold predictions.
pub struct CrossValidation<M> {
    pub models: Vec<M>,
    /// Fold id per item, as produced by [`stratified_folds`].
    pub folds: Vec<usize>,
    /// Out-of-fold score per item (each item scored by the model that did not
    /// see it).
    pub oof: Vec<f64>,
}

/// Train `k` models, each on all folds but one, and score every item with the
/// model that held it out.
pub fn kfold_cross_validate<M>(
    trainer: impl Fn(&[Vec<f64>], &[bool]) -> Result<M, MlError>,
    scorer: impl Fn(&M, &[f64]) -> f64,
    x: &[Vec<f64>],
    y: &[bool],
    k: usize,
    seed: u64,
) -> Result<CrossValidation<M>, MlError> {
    let folds = stratified_folds(y, k, seed)?;
    let mut models = Vec::with_capacity(k);
    let mut oof = vec![0.0; x.len()];
    for fold in 0..k {
        let mut tx = Vec::new();
        let mut ty = Vec::new();
        for i in 0..x.len() {
            if folds[i] != fold {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        let model = trainer(&tx, &ty)?;
        for i in 0..x.len() {
            if folds[i] == fold {
                oof[i] = scorer(&model, &x[i]);
            }
        }
        models.push(model);
    }
    Ok(CrossValidation { models, folds, oof })
}
