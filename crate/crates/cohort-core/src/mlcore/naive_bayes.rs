//! Multinomial naive Bayes with Laplace smoothing.

use serde::{Deserialize, Serialize};

use super::{check_two_classes, MlError};

/// Class order is [negative, positive].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_log_priors: [f64; 2],
    pub feature_log_likelihood: [Vec<f64>; 2],
    pub alpha: f64,
}

/// Train on non-negative count features.
pub fn train_naive_bayes(
    x: &[Vec<f64>],
    y: &[bool],
    alpha: f64,
) -> Result<NaiveBayesModel, MlError> {
    check_two_classes(y)?;
    assert!(alpha > 0.0, "alpha must be positive");
    let dim = x.first().map(|r| r.len()).unwrap_or(0);
    let mut counts = [vec![0.0f64; dim], vec![0.0f64; dim]];
    let mut class_n = [0usize; 2];
    for (xi, yi) in x.iter().zip(y) {
        let c = usize::from(*yi);
        class_n[c] += 1;
        for (acc, v) in counts[c].iter_mut().zip(xi) {
            if *v < 0.0 {
                return Err(MlError::NegativeCount);
            }
            *acc += v;
        }
    }
    let n = x.len() as f64;
    let mut feature_log_likelihood = [vec![0.0; dim], vec![0.0; dim]];
    for c in 0..2 {
        let total: f64 = counts[c].iter().sum();
        let denom = total + alpha * dim as f64;
        for (ll, cf) in feature_log_likelihood[c].iter_mut().zip(&counts[c]) {
            *ll = ((cf + alpha) / denom).ln();
        }
    }
    Ok(NaiveBayesModel {
        class_log_priors: [
            (class_n[0] as f64 / n).ln(),
            (class_n[1] as f64 / n).ln(),
        ],
        feature_log_likelihood,
        alpha,
    })
}

/// Normalized posterior [P(neg|x), P(pos|x)].
pub fn nb_posterior(model: &NaiveBayesModel, x: &[f64]) -> [f64; 2] {
    let mut logp = [0.0f64; 2];
    for c in 0..2 {
        logp[c] = model.class_log_priors[c]
            + model.feature_log_likelihood[c]
                .iter()
                .zip(x)
                .map(|(ll, v)| ll * v)
                .sum::<f64>();
    }
    let m = logp[0].max(logp[1]);
    let e0 = (logp[0] - m).exp();
    let e1 = (logp[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}
