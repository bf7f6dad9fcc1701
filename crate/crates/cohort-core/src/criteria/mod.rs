//! The 13 criterion evaluators and their orchestration over a patient record.

mod rules;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mlcore::{DecisionTreeModel, LinearModel, NaiveBayesModel};
use crate::record::{CriterionId, Label, PatientRecord};
use crate::resources::ResourceSet;
use crate::textproc::AnnotatedNote;

pub use rules::*;

/// A span of supporting text plus a short reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evidence {
    pub note: usize,
    pub start: usize,
    pub end: usize,
    pub reason: String,
}

impl Evidence {
    pub fn new(note: usize, start: usize, end: usize, reason: impl Into<String>) -> Self {
        Evidence {
            note,
            start,
            end,
            reason: reason.into(),
        }
    }
}

/// Decision for one criterion with its supporting spans; Advanced-CAD fills
/// `trace` with its four sub-criteria, classifier criteria fill `score`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionDecision {
    pub criterion: CriterionId,
    pub label: Label,
    pub evidence: Vec<Evidence>,
    pub trace: BTreeMap<String, bool>,
    pub score: Option<f64>,
    /// True when a deterministic fallback rule decided (no trained model).
    pub fallback: bool,
}

impl CriterionDecision {
    fn new(criterion: CriterionId, label: Label) -> Self {
        CriterionDecision {
            criterion,
            label,
            evidence: Vec::new(),
            trace: BTreeMap::new(),
            score: None,
            fallback: false,
        }
    }
}

/// Patient sex inferred from pronoun majority; creatinine limits fall back to
/// male (higher) when unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatientSex {
    Male,
    Female,
    Unknown,
}

/// Tunable thresholds and windows, pinned to the task definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriteriaConfig {
    /// Inclusive HbA1c band.
    pub hba1c_range: (f64, f64),
    pub mi_window_months: u32,
    pub keto_window_months: u32,
    pub dietsupp_window_months: u32,
    /// (low, high) of the accepted serum creatinine band, adult male.
    pub creat_norm_male: (f64, f64),
    pub creat_norm_female: (f64, f64),
    /// Added to the general upper limit when the note gives no range.
    pub creat_margin: f64,
    /// Met requires P(met) at or above this under the trained model.
    pub makes_decisions_threshold: f64,
    /// Sub-criteria needed for Advanced-CAD.
    pub advanced_cad_min: usize,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig {
            hba1c_range: (6.5, 9.5),
            mi_window_months: 6,
            keto_window_months: 12,
            dietsupp_window_months: 2,
            creat_norm_male: (0.6, 1.2),
            creat_norm_female: (0.5, 1.1),
            creat_margin: 0.5,
            makes_decisions_threshold: 0.9,
            advanced_cad_min: 2,
        }
    }
}

/// Optional trained models for the four classifier-backed criteria.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub makes_decisions: Option<NaiveBayesModel>,
    pub major_diabetes: Option<LinearModel>,
    pub asp_for_mi: Option<DecisionTreeModel>,
    pub hba1c: Option<LinearModel>,
}

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("required lexicon missing from resources: {0}")]
    MissingLexicon(String),
}

/// Lexicon names the evaluators require.
pub const REQUIRED_LEXICONS: &[&str] = &[
    "abused-drugs",
    "alcohol-abuse",
    "languages",
    "interpreter-cues",
    "abdominal",
    "diabetes-skin",
    "diabetes-kidney",
    "diabetes-neuropathy",
    "diabetes-nephropathy",
    "diabetes-retinopathy",
    "cad-meds",
    "cad-problems",
    "mi-terms",
    "mi-symptoms",
    "angina",
    "ischemia",
    "aspirin",
    "supplements",
    "supplement-exclusions",
    "hemoglobin-keywords",
    "keto-variants",
    "elevated-creatinine",
    "lab-names",
];

/// Count pronoun/title cues over the notes; majority wins, ties male.
pub fn infer_sex(notes: &[AnnotatedNote]) -> PatientSex {
    const FEMALE: &[&str] = &["she", "her", "hers", "female", "woman", "mrs", "ms"];
    const MALE: &[&str] = &["he", "his", "him", "male", "man", "mr"];
    let mut f = 0usize;
    let mut m = 0usize;
    for note in notes {
        for tok in &note.tokens {
            let t = tok.text.to_lowercase();
            if FEMALE.contains(&t.as_str()) {
                f += 1;
            } else if MALE.contains(&t.as_str()) {
                m += 1;
            }
        }
    }
    if f > m {
        PatientSex::Female
    } else if m > 0 {
        PatientSex::Male
    } else {
        PatientSex::Unknown
    }
}

/// Evaluate all 13 criteria. Total: every record yields 13 decisions, with
/// deterministic fallback rules standing in for absent models.
pub fn evaluate_all(
    record: &PatientRecord,
    notes: &[AnnotatedNote],
    resources: &ResourceSet,
    models: &ModelSet,
    config: &CriteriaConfig,
) -> Result<BTreeMap<CriterionId, CriterionDecision>, CriteriaError> {
    for name in REQUIRED_LEXICONS {
        if resources.lexicon(name).is_none() {
            return Err(CriteriaError::MissingLexicon(name.to_string()));
        }
    }
    let sex = infer_sex(notes);
    let mut out = BTreeMap::new();
    out.insert(
        CriterionId::Abdominal,
        rules::eval_abdominal(notes, resources),
    );
    out.insert(
        CriterionId::AdvancedCad,
        rules::eval_advanced_cad(notes, resources, config),
    );
    out.insert(
        CriterionId::AlcoholAbuse,
        rules::eval_alcohol_abuse(notes, resources),
    );
    out.insert(
        CriterionId::AspForMi,
        rules::eval_asp_for_mi(notes, resources, models.asp_for_mi.as_ref()),
    );
    out.insert(
        CriterionId::Creatinine,
        rules::eval_creatinine(notes, resources, sex, config),
    );
    out.insert(
        CriterionId::Dietsupp2mos,
        rules::eval_dietsupp_2mos(record, notes, resources, config),
    );
    out.insert(
        CriterionId::DrugAbuse,
        rules::eval_drug_abuse(notes, resources),
    );
    out.insert(CriterionId::English, rules::eval_english(notes, resources));
    out.insert(
        CriterionId::Hba1c,
        rules::eval_hba1c(notes, resources, models.hba1c.as_ref(), config),
    );
    out.insert(
        CriterionId::Keto1yr,
        rules::eval_keto_1yr(record, notes, resources, config),
    );
    out.insert(
        CriterionId::MajorDiabetes,
        rules::eval_major_diabetes(notes, resources, models.major_diabetes.as_ref()),
    );
    out.insert(
        CriterionId::MakesDecisions,
        rules::eval_makes_decisions(notes, models.makes_decisions.as_ref(), config),
    );
    out.insert(
        CriterionId::Mi6mos,
        rules::eval_mi_6mos(record, notes, resources, config),
    );
    debug_assert_eq!(out.len(), 13);
    Ok(out)
}
