//! Primal linear SVM: hinge loss plus L2, minimized by deterministic
//! subgradient descent with backtracking, so the recorded objective trace is
//! non-increasing.

use super::{check_two_classes, LinearKind, LinearModel, MlError};

/// (lambda/2)||w||^2 + mean hinge, with lambda = 1 / (c * n).
pub fn svm_objective(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, c: f64) -> f64 {
    let n = x.len() as f64;
    let lambda = 1.0 / (c * n);
    let mut hinge = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let sign = if *yi { 1.0 } else { -1.0 };
        let z: f64 = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        hinge += (1.0 - sign * z).max(0.0);
    }
    0.5 * lambda * w.iter().map(|a| a * a).sum::<f64>() + hinge / n
}

fn subgradient(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, c: f64) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let lambda = 1.0 / (c * n);
    let mut gw: Vec<f64> = w.iter().map(|a| lambda * a).collect();
    let mut gb = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let sign = if *yi { 1.0 } else { -1.0 };
        let z: f64 = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        if sign * z < 1.0 {
            for (g, v) in gw.iter_mut().zip(xi) {
                *g -= sign * v / n;
            }
            gb -= sign / n;
        }
    }
    (gw, gb)
}

/// Train and return the per-epoch objective trace alongside the model.
pub fn train_linear_svm_traced(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    epochs: usize,
) -> Result<(LinearModel, Vec<f64>), MlError> {
    check_two_classes(y)?;
    let dim = x.first().map(|r| r.len()).unwrap_or(0);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut obj = svm_objective(x, y, &w, b, c);
    let mut trace = vec![obj];
    let mut step = 1.0f64;

    for _ in 0..epochs {
        let (gw, gb) = subgradient(x, y, &w, b, c);
        let gsq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gsq < 1e-24 {
            break;
        }
        step = (step * 2.0).min(1e6);
        let mut moved = false;
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let bt = b - step * gb;
            let ot = svm_objective(x, y, &wt, bt, c);
            if ot < obj {
                w = wt;
                b = bt;
                obj = ot;
                moved = true;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        trace.push(obj);
        if !moved {
            break;
        }
    }
    Ok((
        LinearModel {
            weights: w,
            bias: b,
            kind: LinearKind::LinearSvm,
        },
        trace,
    ))
}

pub fn train_linear_svm(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    epochs: usize,
) -> Result<LinearModel, MlError> {
    train_linear_svm_traced(x, y, c, epochs).map(|(m, _)| m)
}
