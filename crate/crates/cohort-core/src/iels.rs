//! Model-driven lexicon curation: rank in-corpus n-grams by cross-validated
//! logistic-regression coefficients, keep those above a learned threshold,
//! then grow the list outward through embedding neighborhoods.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingTable;
use crate::lexicon::{LexTerm, Lexicon, Polarity, Provenance};
use crate::mlcore::{
    kfold_cross_validate, stratified_folds, train_logistic, FeatureMatrix, LinearModel,
    LogisticConfig, MlError,
};
use crate::record::{CriterionId, Label, PatientRecord};
use crate::scoring::{confusion, metrics_from_counts};
use crate::textproc::{split_sentences, tokenize};

/// How the coefficient threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoefThreshold {
    Fixed(f64),
    /// Search the configured grid, or deciles of the |coefficient|
    /// distribution when no grid is given.
    AutoGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IelsConfig {
    pub max_ngram_order: usize,
    pub folds: usize,
    pub coef_threshold: CoefThreshold,
    pub sim_threshold: f64,
    pub expansion_iterations: usize,
    pub min_doc_freq: usize,
    /// Candidate thresholds; empty means derive deciles.
    pub grid: Vec<f64>,
    /// Neighbor cap per seed term during expansion.
    pub neighbors_per_seed: usize,
    /// Seed for the fold shuffle; recorded in the result.
    pub seed: u64,
    pub logistic: LogisticConfig,
}

impl Default for IelsConfig {
    fn default() -> Self {
        IelsConfig {
            max_ngram_order: 4,
            folds: 5,
            coef_threshold: CoefThreshold::AutoGrid,
            sim_threshold: 0.6,
            expansion_iterations: 2,
            min_doc_freq: 2,
            grid: Vec::new(),
            neighbors_per_seed: 25,
            seed: 0xC0110,
            logistic: LogisticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IelsResult {
    /// Terms kept by coefficient magnitude; weight = averaged coefficient.
    pub internal_terms: Vec<LexTerm>,
    /// Embedding-derived terms; weight = similarity, neighbors_of = seed.
    pub expanded_terms: Vec<LexTerm>,
    pub chosen_threshold: f64,
    /// (threshold, out-of-fold overall F) per grid candidate.
    pub cv_scores: Vec<(f64, f64)>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum IelsError {
    #[error("no records carry a gold label for {0}")]
    NoGoldLabels(CriterionId),
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Ml(#[from] MlError),
}

fn is_wordlike(tok: &str) -> bool {
    tok.chars().any(|c| c.is_alphanumeric())
}

/// Count in-sentence token n-grams (orders 1..=max) per patient, pooled over
/// the patient's notes. N-grams containing punctuation-only tokens are
/// skipped; n-grams under the document-frequency floor are dropped.
pub fn build_ngram_features(
    records: &[PatientRecord],
    criterion: CriterionId,
    config: &IelsConfig,
) -> Result<(FeatureMatrix, Vec<bool>), IelsError> {
    let labeled: Vec<(&PatientRecord, bool)> = records
        .iter()
        .filter_map(|r| {
            r.gold
                .as_ref()
                .and_then(|g| g.get(&criterion))
                .map(|l| (r, *l == Label::Met))
        })
        .collect();
    if labeled.is_empty() {
        return Err(IelsError::NoGoldLabels(criterion));
    }

    let mut per_record: Vec<HashMap<String, f64>> = Vec::with_capacity(labeled.len());
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    for (record, _) in &labeled {
        let mut counts: HashMap<String, f64> = HashMap::new();
        for note in &record.notes {
            let tokens = tokenize(&note.text);
            let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
            for sentence in split_sentences(&note.text, &tokens) {
                let (lo, hi) = sentence.token_range;
                for n in 1..=config.max_ngram_order {
                    if lo + n > hi {
                        continue;
                    }
                    for start in lo..=(hi - n) {
                        let gram = &lowered[start..start + n];
                        if !gram.iter().all(|t| is_wordlike(t)) {
                            continue;
                        }
                        *counts.entry(gram.join(" ")).or_insert(0.0) += 1.0;
                    }
                }
            }
        }
        for name in counts.keys() {
            *doc_freq.entry(name.clone()).or_insert(0) += 1;
        }
        per_record.push(counts);
    }

    let mut names: Vec<String> = doc_freq
        .into_iter()
        .filter(|(_, df)| *df >= config.min_doc_freq)
        .map(|(name, _)| name)
        .collect();
    names.sort();

    let rows: Vec<Vec<f64>> = per_record
        .iter()
        .map(|counts| names.iter().map(|n| *counts.get(n).unwrap_or(&0.0)).collect())
        .collect();
    let y: Vec<bool> = labeled.iter().map(|(_, l)| *l).collect();
    Ok((FeatureMatrix { names, rows }, y))
}

/// Fold models plus per-feature coefficients averaged across folds.
pub struct CvCoefficients {
    pub averaged: BTreeMap<String, f64>,
    pub fold_models: Vec<LinearModel>,
    pub folds: Vec<usize>,
}

pub fn average_cv_coefficients(
    features: &FeatureMatrix,
    y: &[bool],
    config: &IelsConfig,
) -> Result<CvCoefficients, IelsError> {
    features.validate()?;
    let cv = kfold_cross_validate(
        |tx, ty| train_logistic(tx, ty, &config.logistic),
        |m, xi| m.probability(xi),
        &features.rows,
        y,
        config.folds,
        config.seed,
    )?;
    let k = cv.models.len() as f64;
    let mut averaged = BTreeMap::new();
    for (j, name) in features.names.iter().enumerate() {
        let mean: f64 = cv.models.iter().map(|m| m.weights[j]).sum::<f64>() / k;
        averaged.insert(name.clone(), mean);
    }
    Ok(CvCoefficients {
        averaged,
        fold_models: cv.models,
        folds: cv.folds,
    })
}

/// Tenths of the |coefficient| range. Quantile deciles bunch up in the noise
/// floor on long-tailed coefficient distributions and never reach the band
/// separating discriminative terms; range deciles do.
fn deciles(magnitudes: Vec<f64>) -> Vec<f64> {
    let max = magnitudes.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut grid: Vec<f64> = (1..=9).map(|k| max * k as f64 / 10.0).collect();
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    grid
}

/// Presence-scoring stub: score = sum of sign(coef) over kept n-grams present
/// in the row; predict met iff score > 0. The kept set is thresholded on the
/// averaged magnitudes (the candidate lexicon); each sign vote comes from the
/// fold model that held the row out.
fn stub_predict(row: &[f64], avg: &[f64], fold_weights: &[f64], threshold: f64) -> bool {
    let mut score = 0i64;
    for ((v, a), w) in row.iter().zip(avg).zip(fold_weights) {
        if *v > 0.0 && a.abs() >= threshold && a.abs() > 0.0 {
            score += if *w >= 0.0 { 1 } else { -1 };
        }
    }
    score > 0
}

/// Pick the grid threshold maximizing out-of-fold overall F (mean of met and
/// not-met F). Each fold's rows are scored with the coefficients of the model
/// that held that fold out, so the measurement stays out-of-fold. Ties take
/// the larger threshold (smaller lexicon).
pub fn select_threshold(
    cv: &CvCoefficients,
    features: &FeatureMatrix,
    y: &[bool],
    config: &IelsConfig,
) -> Result<(f64, Vec<String>, Vec<(f64, f64)>), IelsError> {
    let grid: Vec<f64> = match config.coef_threshold {
        CoefThreshold::Fixed(t) => vec![t],
        CoefThreshold::AutoGrid => {
            if !config.grid.is_empty() {
                let mut g = config.grid.clone();
                g.sort_by(|a, b| a.partial_cmp(b).unwrap());
                g
            } else {
                deciles(cv.averaged.values().map(|w| w.abs()).collect())
            }
        }
    };
    if grid.is_empty() {
        return Err(IelsError::EmptyGrid);
    }

    let avg_by_index: Vec<f64> = features
        .names
        .iter()
        .map(|n| cv.averaged.get(n).copied().unwrap_or(0.0))
        .collect();
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None; // (f, threshold)
    for &t in &grid {
        let mut gold = Vec::with_capacity(y.len());
        let mut sys = Vec::with_capacity(y.len());
        for (i, row) in features.rows.iter().enumerate() {
            let model = &cv.fold_models[cv.folds[i]];
            let pred = stub_predict(row, &avg_by_index, &model.weights, t);
            gold.push(if y[i] { Label::Met } else { Label::NotMet });
            sys.push(if pred { Label::Met } else { Label::NotMet });
        }
        let f = metrics_from_counts(&confusion(&gold, &sys).expect("same length")).overall_f1;
        scores.push((t, f));
        let better = match best {
            None => true,
            Some((bf, bt)) => f > bf || (f == bf && t > bt),
        };
        if better {
            best = Some((f, t));
        }
    }
    let (_, threshold) = best.expect("grid non-empty");
    let kept: Vec<String> = cv
        .averaged
        .iter()
        .filter(|(_, w)| w.abs() >= threshold && w.abs() > 0.0)
        .map(|(name, _)| name.clone())
        .collect();
    Ok((threshold, kept, scores))
}

/// Iteratively add embedding neighbors of every current term. Terms without
/// vectors are skipped; existing terms are never re-added. Output is sorted
/// by similarity descending.
pub fn expand_terms(
    kept: &[LexTerm],
    table: &EmbeddingTable,
    config: &IelsConfig,
) -> Vec<LexTerm> {
    let mut seen: BTreeSet<String> = kept.iter().map(|t| t.text.clone()).collect();
    let mut frontier: Vec<String> = kept.iter().map(|t| t.text.clone()).collect();
    let mut expanded: Vec<LexTerm> = Vec::new();

    for _ in 0..config.expansion_iterations {
        let mut next = Vec::new();
        for seed in &frontier {
            let neighbors = match table.neighbors(seed, config.sim_threshold, config.neighbors_per_seed)
            {
                Ok(n) => n,
                Err(_) => {
                    log::debug!("no vector for {seed:?}; skipped in expansion");
                    continue;
                }
            };
            for (token, sim) in neighbors {
                let text = token.replace('_', " ");
                if !seen.insert(text.clone()) {
                    continue;
                }
                expanded.push(LexTerm {
                    text: text.clone(),
                    weight: Some(sim),
                    neighbors_of: Some(seed.clone()),
                });
                next.push(text);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    expanded.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.text.cmp(&b.text))
    });
    expanded
}

/// Full pipeline: n-gram features, cross-validated coefficients, threshold
/// selection, and optional embedding expansion.
pub fn curate_lexicon(
    records: &[PatientRecord],
    criterion: CriterionId,
    table: Option<&EmbeddingTable>,
    config: &IelsConfig,
) -> Result<IelsResult, IelsError> {
    let (features, y) = build_ngram_features(records, criterion, config)?;
    let cv = average_cv_coefficients(&features, &y, config)?;
    let (chosen_threshold, kept, cv_scores) = select_threshold(&cv, &features, &y, config)?;
    let internal_terms: Vec<LexTerm> = kept
        .iter()
        .map(|name| LexTerm {
            text: name.clone(),
            weight: Some(cv.averaged[name]),
            neighbors_of: None,
        })
        .collect();
    let expanded_terms = match table {
        Some(t) => expand_terms(&internal_terms, t, config),
        None => Vec::new(),
    };
    Ok(IelsResult {
        internal_terms,
        expanded_terms,
        chosen_threshold,
        cv_scores,
        seed: config.seed,
    })
}

impl IelsResult {
    /// Split into positive- and negative-polarity lexicons. Expanded terms
    /// follow their seed's polarity; seeds chain back to internal terms.
    pub fn to_lexicons(&self, name: &str, semantic_type: crate::textproc::SemanticType) -> (Lexicon, Lexicon) {
        let mut polarity_of: BTreeMap<&str, Polarity> = BTreeMap::new();
        for t in &self.internal_terms {
            let p = if t.weight.unwrap_or(0.0) >= 0.0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            polarity_of.insert(&t.text, p);
        }
        // Resolve seed chains for expansions; iterate until no progress,
        // then default any dangling seeds to positive.
        let mut unresolved: Vec<&LexTerm> = self.expanded_terms.iter().collect();
        loop {
            let before = unresolved.len();
            unresolved.retain(|t| {
                let seed = t.neighbors_of.as_deref().unwrap_or("");
                match polarity_of.get(seed).copied() {
                    Some(p) => {
                        polarity_of.insert(&t.text, p);
                        false
                    }
                    None => true,
                }
            });
            if unresolved.is_empty() || unresolved.len() == before {
                for t in &unresolved {
                    polarity_of.insert(&t.text, Polarity::Positive);
                }
                break;
            }
        }

        let provenance = if self.expanded_terms.is_empty() {
            Provenance::IelsInternal
        } else {
            Provenance::IelsExpanded
        };
        let mut pos = Lexicon::new(
            format!("{name}-positive"),
            semantic_type,
            Polarity::Positive,
            provenance,
        );
        let mut neg = Lexicon::new(
            format!("{name}-negative"),
            semantic_type,
            Polarity::Negative,
            provenance,
        );
        for t in self.internal_terms.iter().chain(&self.expanded_terms) {
            let target = match polarity_of.get(t.text.as_str()) {
                Some(Polarity::Negative) => &mut neg,
                _ => &mut pos,
            };
            target.insert(t.clone());
        }
        (pos, neg)
    }
}

/// Fold assignment re-export used by callers that only need the split.
pub fn fold_assignment(y: &[bool], config: &IelsConfig) -> Result<Vec<usize>, IelsError> {
    Ok(stratified_folds(y, config.folds, config.seed)?)
}
