//! Challenge-compatible evaluation: per-criterion met/not-met precision,
//! recall, specificity, F1, overall F1 and AUC (mean of sensitivity and
//! specificity), plus micro and macro aggregates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{CriterionId, Label};

/// 2x2 counts with Met as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, false_pos: u64, false_neg: u64, true_neg: u64) -> Self {
        ConfusionCounts {
            true_pos,
            false_pos,
            false_neg,
            true_neg,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }
}

/// Metrics for one class of one criterion.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CriterionMetrics {
    pub met: ClassMetrics,
    /// Specificity of the met decision = recall on the not-met class.
    pub specificity: f64,
    pub notmet: ClassMetrics,
    /// (met.f1 + notmet.f1) / 2.
    pub overall_f1: f64,
    /// (met.recall + specificity) / 2, the challenge's AUC.
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_criterion: BTreeMap<CriterionId, CriterionMetrics>,
    /// Metrics over the pooled counts of all 13 criteria.
    pub micro: CriterionMetrics,
    /// Unweighted column means of the 13 per-criterion metrics.
    pub macro_avg: CriterionMetrics,
    pub patients_scored: u64,
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("gold has {gold} labels, system has {system}")]
    LengthMismatch { gold: usize, system: usize },
    #[error("counts missing for criterion {0}")]
    MissingCriterion(CriterionId),
}

/// 0/0 divisions score 0, matching the challenge tables' all-zero rows.
fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn f_measure(p: f64, r: f64) -> f64 {
    safe_div(2.0 * p * r, p + r)
}

pub fn confusion(gold: &[Label], system: &[Label]) -> Result<ConfusionCounts, ScoringError> {
    if gold.len() != system.len() {
        return Err(ScoringError::LengthMismatch {
            gold: gold.len(),
            system: system.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (g, s) in gold.iter().zip(system) {
        match (g, s) {
            (Label::Met, Label::Met) => c.true_pos += 1,
            (Label::NotMet, Label::Met) => c.false_pos += 1,
            (Label::Met, Label::NotMet) => c.false_neg += 1,
            (Label::NotMet, Label::NotMet) => c.true_neg += 1,
        }
    }
    Ok(c)
}

pub fn metrics_from_counts(c: &ConfusionCounts) -> CriterionMetrics {
    let (tp, fp, fneg, tn) = (
        c.true_pos as f64,
        c.false_pos as f64,
        c.false_neg as f64,
        c.true_neg as f64,
    );
    let met_p = safe_div(tp, tp + fp);
    let met_r = safe_div(tp, tp + fneg);
    let specificity = safe_div(tn, tn + fp);
    let notmet_p = safe_div(tn, tn + fneg);
    let notmet_r = specificity;
    let met = ClassMetrics {
        precision: met_p,
        recall: met_r,
        f1: f_measure(met_p, met_r),
    };
    let notmet = ClassMetrics {
        precision: notmet_p,
        recall: notmet_r,
        f1: f_measure(notmet_p, notmet_r),
    };
    CriterionMetrics {
        met,
        specificity,
        notmet,
        overall_f1: (met.f1 + notmet.f1) / 2.0,
        auc: (met.recall + specificity) / 2.0,
    }
}

/// Micro metrics over pooled counts, macro as unweighted column means.
pub fn aggregate(
    per_criterion: &BTreeMap<CriterionId, ConfusionCounts>,
) -> Result<MetricsReport, ScoringError> {
    for id in CriterionId::ALL {
        if !per_criterion.contains_key(&id) {
            return Err(ScoringError::MissingCriterion(id));
        }
    }
    let mut pooled = ConfusionCounts::default();
    let mut metrics = BTreeMap::new();
    for (id, counts) in per_criterion {
        pooled.add(counts);
        metrics.insert(*id, metrics_from_counts(counts));
    }
    let n = metrics.len() as f64;
    let mut macro_avg = CriterionMetrics::default();
    for m in metrics.values() {
        macro_avg.met.precision += m.met.precision / n;
        macro_avg.met.recall += m.met.recall / n;
        macro_avg.met.f1 += m.met.f1 / n;
        macro_avg.specificity += m.specificity / n;
        macro_avg.notmet.precision += m.notmet.precision / n;
        macro_avg.notmet.recall += m.notmet.recall / n;
        macro_avg.notmet.f1 += m.notmet.f1 / n;
        macro_avg.overall_f1 += m.overall_f1 / n;
        macro_avg.auc += m.auc / n;
    }
    let patients_scored = per_criterion
        .values()
        .next()
        .map(|c| c.total())
        .unwrap_or(0);
    Ok(MetricsReport {
        per_criterion: metrics,
        micro: metrics_from_counts(&pooled),
        macro_avg,
        patients_scored,
    })
}

fn row(out: &mut String, name: &str, m: &CriterionMetrics) {
    let _ = writeln!(
        out,
        "{name:<18}{:>8.4}{:>8.4}{:>8.4}{:>8.4}  {:>8.4}{:>8.4}{:>8.4}  {:>8.4}{:>8.4}",
        m.met.precision,
        m.met.recall,
        m.specificity,
        m.met.f1,
        m.notmet.precision,
        m.notmet.recall,
        m.notmet.f1,
        m.overall_f1,
        m.auc
    );
}

/// Fixed-width report mirroring the challenge score table layout.
pub fn format_report(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("***** TRACK 1 *****\n");
    out.push_str(
        "                  ------------- met -------------  ---------- not met ---------  ---- overall ----\n",
    );
    out.push_str(
        "                     Prec.    Rec.  Speci.  F(b=1)     Prec.    Rec.  F(b=1)      F(b=1)     AUC\n",
    );
    for (id, m) in &report.per_criterion {
        row(&mut out, id.table_name(), m);
    }
    row(&mut out, "Overall (micro)", &report.micro);
    row(&mut out, "Overall (macro)", &report.macro_avg);
    let _ = writeln!(out, "\n{:>26} patients scored", report.patients_scored);
    out
}

/// Confusion counts consistent with the challenge submission's score table;
/// used by the scorer-reproduction tests.
pub fn submission_table_counts() -> BTreeMap<CriterionId, ConfusionCounts> {
    use CriterionId::*;
    [
        (Abdominal, ConfusionCounts::new(24, 2, 6, 54)),
        (AdvancedCad, ConfusionCounts::new(36, 8, 9, 33)),
        (AlcoholAbuse, ConfusionCounts::new(0, 1, 3, 82)),
        (AspForMi, ConfusionCounts::new(63, 12, 5, 6)),
        (Creatinine, ConfusionCounts::new(20, 7, 4, 55)),
        (Dietsupp2mos, ConfusionCounts::new(40, 7, 4, 35)),
        (DrugAbuse, ConfusionCounts::new(2, 1, 1, 82)),
        (English, ConfusionCounts::new(73, 3, 0, 10)),
        (Hba1c, ConfusionCounts::new(29, 1, 6, 50)),
        (Keto1yr, ConfusionCounts::new(0, 0, 0, 86)),
        (MajorDiabetes, ConfusionCounts::new(31, 2, 12, 41)),
        (MakesDecisions, ConfusionCounts::new(82, 1, 1, 2)),
        (Mi6mos, ConfusionCounts::new(6, 10, 2, 68)),
    ]
    .into_iter()
    .collect()
}
