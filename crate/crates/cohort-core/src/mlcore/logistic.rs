//! L2-regularized logistic regression by full-batch gradient descent with
//! backtracking line search. Zero-initialized, so training is deterministic.

use serde::{Deserialize, Serialize};

use super::{check_two_classes, sigmoid, LinearKind, LinearModel, MlError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// L2 penalty on the weights (bias unpenalized).
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop when the gradient infinity norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1.0,
            max_epochs: 500,
            tolerance: 1e-6,
        }
    }
}

/// Mean negative log-likelihood plus (l2/2)||w||^2.
pub fn logistic_objective(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len() as f64;
    let mut nll = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z: f64 = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        let sign = if *yi { 1.0 } else { -1.0 };
        // ln(1 + exp(-sign * z)), computed stably.
        let m = -sign * z;
        nll += if m > 30.0 { m } else { (1.0 + m.exp()).ln() };
    }
    nll / n + 0.5 * l2 * w.iter().map(|a| a * a).sum::<f64>()
}

/// Analytic gradient of [`logistic_objective`]: returns (d/dw, d/db).
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z: f64 = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        let residual = sigmoid(z) - if *yi { 1.0 } else { 0.0 };
        for (g, v) in gw.iter_mut().zip(xi) {
            *g += residual * v;
        }
        gb += residual;
    }
    for (g, a) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * a;
    }
    (gw, gb / n)
}

/// Train to gradient-norm tolerance. Errors on single-class input.
pub fn train_logistic(
    x: &[Vec<f64>],
    y: &[bool],
    config: &LogisticConfig,
) -> Result<LinearModel, MlError> {
    check_two_classes(y)?;
    let dim = x.first().map(|r| r.len()).unwrap_or(0);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut step = 1.0f64;
    let mut obj = logistic_objective(x, y, &w, b, config.l2);

    for _ in 0..config.max_epochs {
        let (gw, gb) = logistic_gradient(x, y, &w, b, config.l2);
        let gnorm_inf = gw
            .iter()
            .chain(std::iter::once(&gb))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm_inf < config.tolerance {
            break;
        }
        let gsq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        // Backtracking with the Armijo condition; grow the step back between
        // epochs so flat regions do not pin it small forever.
        step = (step * 2.0).min(1e6);
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let bt = b - step * gb;
            let ot = logistic_objective(x, y, &wt, bt, config.l2);
            if ot <= obj - 0.5 * step * gsq || step < 1e-12 {
                w = wt;
                b = bt;
                obj = ot;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        kind: LinearKind::Logistic,
    })
}
