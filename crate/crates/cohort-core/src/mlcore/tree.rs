//! Binary decision tree with greedy Gini splits. Ties break toward the lower
//! feature index, then the lower threshold; thresholds are midpoints of
//! sorted distinct feature values.

use serde::{Deserialize, Serialize};

use super::{check_two_classes, MlError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Class counts [negative, positive] of the training rows in the leaf.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub root: TreeNode,
    pub max_depth: usize,
    pub min_leaf: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

fn class_counts(idx: &[usize], y: &[bool]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &i in idx {
        c[usize::from(y[i])] += 1;
    }
    c
}

/// Best (feature, threshold, reduction) over midpoint candidates, honoring
/// min_leaf. Returns None when no split strictly reduces impurity.
fn best_split(
    x: &[Vec<f64>],
    y: &[bool],
    idx: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let dim = x[idx[0]].len();
    let parent = gini(class_counts(idx, y));
    let n = idx.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None; // (reduction, feature, threshold)
    for f in 0..dim {
        let mut values: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            let (mut lc, mut rc) = ([0usize; 2], [0usize; 2]);
            for &i in idx {
                if x[i][f] <= thr {
                    lc[usize::from(y[i])] += 1;
                } else {
                    rc[usize::from(y[i])] += 1;
                }
            }
            let ln = lc[0] + lc[1];
            let rn = rc[0] + rc[1];
            if ln < min_leaf || rn < min_leaf {
                continue;
            }
            let reduction =
                parent - (ln as f64 / n) * gini(lc) - (rn as f64 / n) * gini(rc);
            // Strict improvement keeps the first (lowest feature, lowest
            // threshold) candidate on ties.
            let better = match best {
                None => reduction > 1e-12,
                Some((r, _, _)) => reduction > r + 1e-12,
            };
            if better {
                best = Some((reduction, f, thr));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn grow(
    x: &[Vec<f64>],
    y: &[bool],
    idx: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> TreeNode {
    let counts = class_counts(idx, y);
    if depth >= max_depth || counts[0] == 0 || counts[1] == 0 || idx.len() < 2 * min_leaf {
        return TreeNode::Leaf { counts };
    }
    let Some((feature, threshold)) = best_split(x, y, idx, min_leaf) else {
        return TreeNode::Leaf { counts };
    };
    let (mut li, mut ri) = (Vec::new(), Vec::new());
    for &i in idx {
        if x[i][feature] <= threshold {
            li.push(i);
        } else {
            ri.push(i);
        }
    }
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, &li, depth + 1, max_depth, min_leaf)),
        right: Box::new(grow(x, y, &ri, depth + 1, max_depth, min_leaf)),
    }
}

pub fn train_decision_tree(
    x: &[Vec<f64>],
    y: &[bool],
    max_depth: usize,
    min_leaf: usize,
) -> Result<DecisionTreeModel, MlError> {
    check_two_classes(y)?;
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok(DecisionTreeModel {
        root: grow(x, y, &idx, 0, max_depth, min_leaf.max(1)),
        max_depth,
        min_leaf: min_leaf.max(1),
    })
}

impl DecisionTreeModel {
    pub fn predict(&self, row: &[f64]) -> bool {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { counts } => {
                    // Ties go to the negative class.
                    return counts[1] > counts[0];
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn training_accuracy(&self, x: &[Vec<f64>], y: &[bool]) -> f64 {
        let correct = x
            .iter()
            .zip(y)
            .filter(|(xi, yi)| self.predict(xi) == **yi)
            .count();
        correct as f64 / x.len() as f64
    }
}
