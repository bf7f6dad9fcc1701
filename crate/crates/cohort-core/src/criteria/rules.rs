//! Per-criterion decision rules. Classifier-backed criteria take an optional
//! trained model and otherwise apply a deterministic fallback rule.

use super::{CriteriaConfig, CriterionDecision, Evidence, PatientSex};
use crate::lexicon::{surface_in_lexicon, MatchMode};
use crate::mlcore::{nb_posterior, DecisionTreeModel, LinearModel, NaiveBayesModel};
use crate::record::{CriterionId, Label, PatientRecord};
use crate::resources::ResourceSet;
use crate::temporal::{within_window, EventDating, TemporalWindow, TimexKind};
use crate::textproc::{AnnotatedNote, AssertionStatus, Entity, SectionKind, SemanticType};

fn met(b: bool) -> Label {
    if b {
        Label::Met
    } else {
        Label::NotMet
    }
}

/// (note index, entity index, entity) for every entity from `lexicon`.
fn mentions<'a>(
    notes: &'a [AnnotatedNote],
    lexicon: &'a str,
) -> impl Iterator<Item = (usize, usize, &'a Entity)> + 'a {
    notes.iter().enumerate().flat_map(move |(ni, note)| {
        note.entities
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.source_lexicon == lexicon)
            .map(move |(ei, e)| (ni, ei, e))
    })
}

fn has_attached_dosage(note: &AnnotatedNote, entity_index: usize) -> bool {
    note.entities
        .iter()
        .any(|e| e.semantic_type == SemanticType::Dosage && e.attached_drug == Some(entity_index))
}

fn present_or_historical(a: AssertionStatus) -> bool {
    matches!(a, AssertionStatus::Present | AssertionStatus::Historical)
}

/// Window check for one mention: an in-sentence timex dates it when present,
/// otherwise the note date does.
fn mention_within(
    note: &AnnotatedNote,
    entity: &Entity,
    present_day: chrono::NaiveDate,
    window: TemporalWindow,
) -> bool {
    let timexes = note.timexes_in_sentence(entity.sentence);
    if timexes.is_empty() {
        return within_window(
            EventDating::NoTimex,
            entity.section,
            entity.assertion,
            note.record_date,
            present_day,
            window,
        );
    }
    timexes.iter().any(|t| {
        let dating = match (&t.kind, t.resolved) {
            (TimexKind::VagueHistory, _) => EventDating::Vague,
            (_, Some(d)) => EventDating::Resolved(d),
            (_, None) => EventDating::Vague,
        };
        within_window(
            dating,
            entity.section,
            entity.assertion,
            note.record_date,
            present_day,
            window,
        )
    })
}

/// Drug abuse, past or present: an abused-drug mention counts unless negated
/// or carrying a dosage (dosage implies prescribed use).
pub fn eval_drug_abuse(notes: &[AnnotatedNote], _res: &ResourceSet) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::DrugAbuse, Label::NotMet);
    for (ni, ei, e) in mentions(notes, "abused-drugs") {
        if !present_or_historical(e.assertion) {
            continue;
        }
        if has_attached_dosage(&notes[ni], ei) {
            continue;
        }
        d.label = Label::Met;
        d.evidence
            .push(Evidence::new(ni, e.start, e.end, "abused drug mention without dosage"));
    }
    d
}

const CONCERN_CUES: &[&str] = &["concern", "concerned", "concerns", "worried", "worry", "worries"];
const DRINK_CUES: &[&str] = &["drinking", "drinks", "drink", "alcohol", "etoh"];
const KINSHIP_CUES: &[&str] = &[
    "wife", "husband", "family", "daughter", "son", "mother", "father", "spouse", "partner",
    "sister", "brother",
];

/// Current alcohol abuse: a present-asserted abuse phrase (with an uppercase
/// guard on the bare "AA" initialism), or a family member voicing concern
/// about the patient's drinking. Historical/ceased mentions do not count.
pub fn eval_alcohol_abuse(notes: &[AnnotatedNote], _res: &ResourceSet) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::AlcoholAbuse, Label::NotMet);
    for (ni, _, e) in mentions(notes, "alcohol-abuse") {
        if e.assertion != AssertionStatus::Present {
            continue;
        }
        if e.matched_term == "aa" && e.surface != "AA" {
            continue;
        }
        d.label = Label::Met;
        d.evidence
            .push(Evidence::new(ni, e.start, e.end, "alcohol abuse phrase"));
    }
    // Family-concern pattern: kinship + concern + drinking in one sentence.
    for (ni, note) in notes.iter().enumerate() {
        for sentence in &note.sentences {
            let (lo, hi) = sentence.token_range;
            let lowered: Vec<String> = note.tokens[lo..hi]
                .iter()
                .map(|t| t.text.to_lowercase())
                .collect();
            let has = |cues: &[&str]| lowered.iter().any(|t| cues.contains(&t.as_str()));
            if has(KINSHIP_CUES) && has(CONCERN_CUES) && has(DRINK_CUES) {
                d.label = Label::Met;
                d.evidence.push(Evidence::new(
                    ni,
                    sentence.start,
                    sentence.end,
                    "family concern about drinking",
                ));
            }
        }
    }
    d
}

const SPOKEN_CUES: &[&str] = &["speaks", "speaking", "speak", "spoken", "language"];

/// English speaking: met by default; flipped by a non-English language plus a
/// spoken-language cue in the same sentence, or a non-negated interpreter
/// mention.
pub fn eval_english(notes: &[AnnotatedNote], _res: &ResourceSet) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::English, Label::Met);
    for (ni, _, e) in mentions(notes, "languages") {
        if e.assertion == AssertionStatus::Absent {
            continue;
        }
        let note = &notes[ni];
        let (lo, hi) = note.sentences[e.sentence].token_range;
        let spoken_cue = note.tokens[lo..hi]
            .iter()
            .any(|t| SPOKEN_CUES.contains(&t.text.to_lowercase().as_str()));
        if spoken_cue {
            d.label = Label::NotMet;
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "non-English language spoken"));
        }
    }
    for (ni, _, e) in mentions(notes, "interpreter-cues") {
        if e.assertion == AssertionStatus::Absent {
            continue;
        }
        d.label = Label::NotMet;
        d.evidence
            .push(Evidence::new(ni, e.start, e.end, "interpreter mentioned"));
    }
    d
}

/// Counts of the three decision-capacity patterns over raw note text:
/// "dementia"; "retard" not preceded by "psychomotor"; "altered mental" or
/// "mental stat". Returns (counts, match spans per note).
pub fn makes_decisions_features(
    notes: &[AnnotatedNote],
) -> ([f64; 3], Vec<(usize, usize, usize)>) {
    let mut counts = [0f64; 3];
    let mut spans = Vec::new();
    for (ni, note) in notes.iter().enumerate() {
        let lower = note.text.to_lowercase();
        for (pat, feature) in [("dementia", 0usize), ("altered mental", 2), ("mental stat", 2)] {
            let mut from = 0;
            while let Some(rel) = lower[from..].find(pat) {
                let at = from + rel;
                counts[feature] += 1.0;
                spans.push((ni, at, at + pat.len()));
                from = at + pat.len();
            }
        }
        let mut from = 0;
        while let Some(rel) = lower[from..].find("retard") {
            let at = from + rel;
            from = at + "retard".len();
            // Skip matches directly preceded by "psychomotor".
            let before = lower[..at].trim_end();
            if before.ends_with("psychomotor") {
                continue;
            }
            counts[1] += 1.0;
            spans.push((ni, at, at + "retard".len()));
        }
    }
    (counts, spans)
}

/// Makes own medical decisions. Fallback: met iff no incapacity pattern
/// occurs. Model path: met iff P(met) clears the configured threshold.
pub fn eval_makes_decisions(
    notes: &[AnnotatedNote],
    model: Option<&NaiveBayesModel>,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let (counts, spans) = makes_decisions_features(notes);
    let mut d = CriterionDecision::new(CriterionId::MakesDecisions, Label::Met);
    for (ni, s, e) in &spans {
        d.evidence
            .push(Evidence::new(*ni, *s, *e, "decision-capacity pattern"));
    }
    match model {
        Some(m) => {
            let p_met = nb_posterior(m, &counts)[1];
            d.score = Some(p_met);
            d.label = met(p_met >= config.makes_decisions_threshold);
        }
        None => {
            d.fallback = true;
            d.label = met(counts.iter().sum::<f64>() == 0.0);
        }
    }
    d
}

/// History of intra-abdominal surgery / bowel obstruction: an abdominal-term
/// mention inside PMH or HPI, not negated.
pub fn eval_abdominal(notes: &[AnnotatedNote], _res: &ResourceSet) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::Abdominal, Label::NotMet);
    for (ni, _, e) in mentions(notes, "abdominal") {
        let in_scope = matches!(
            e.section,
            SectionKind::PastMedicalHistory | SectionKind::HistoryPresentIllness
        );
        if in_scope && present_or_historical(e.assertion) {
            d.label = Label::Met;
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "abdominal procedure/problem in history"));
        }
    }
    d
}

const DIABETES_GROUPS: [&str; 5] = [
    "diabetes-skin",
    "diabetes-kidney",
    "diabetes-neuropathy",
    "diabetes-nephropathy",
    "diabetes-retinopathy",
];

/// Per-group complication counts, excluding family-history and negated
/// mentions.
pub fn major_diabetes_features(
    notes: &[AnnotatedNote],
) -> ([f64; 5], Vec<(usize, usize, usize)>) {
    let mut counts = [0f64; 5];
    let mut spans = Vec::new();
    for (gi, group) in DIABETES_GROUPS.iter().enumerate() {
        for (ni, _, e) in mentions(notes, group) {
            if e.section == SectionKind::FamilyHistory || e.assertion == AssertionStatus::Family {
                continue;
            }
            if !present_or_historical(e.assertion) {
                continue;
            }
            counts[gi] += 1.0;
            spans.push((ni, e.start, e.end));
        }
    }
    (counts, spans)
}

/// Major diabetes complication. Fallback: met iff any of the five
/// complication groups matches. Model path: linear decision over the counts.
pub fn eval_major_diabetes(
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    model: Option<&LinearModel>,
) -> CriterionDecision {
    let (counts, spans) = major_diabetes_features(notes);
    let mut d = CriterionDecision::new(CriterionId::MajorDiabetes, Label::NotMet);
    for (ni, s, e) in &spans {
        d.evidence
            .push(Evidence::new(*ni, *s, *e, "diabetes complication mention"));
    }
    match model {
        Some(m) => {
            let z = m.decision(&counts);
            d.score = Some(z);
            d.label = met(z > 0.0);
        }
        None => {
            d.fallback = true;
            d.label = met(counts.iter().sum::<f64>() >= 1.0);
        }
    }
    d
}

/// Advanced CAD: two or more of (a) ischemia, (b) MI history, (c) angina in
/// the most recent note whose final mention stays un-negated, (d) two or more
/// CAD medications together with a CAD diagnosis. Social-history mentions are
/// ignored throughout.
pub fn eval_advanced_cad(
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::AdvancedCad, Label::NotMet);
    let usable = |e: &Entity| e.section != SectionKind::SocialHistory;

    let mut ischemia = false;
    for (ni, _, e) in mentions(notes, "ischemia") {
        if usable(e) && present_or_historical(e.assertion) {
            ischemia = true;
            d.evidence.push(Evidence::new(ni, e.start, e.end, "ischemia"));
        }
    }

    let mut mi = false;
    for (ni, _, e) in mentions(notes, "mi-terms") {
        if usable(e) && present_or_historical(e.assertion) {
            mi = true;
            d.evidence.push(Evidence::new(ni, e.start, e.end, "myocardial infarction"));
        }
    }

    // (c) considers only the most recent note; a later negation inside that
    // note overrides an earlier positive mention.
    let mut angina = false;
    if let Some(last) = notes.len().checked_sub(1) {
        let note = &notes[last];
        let mut angina_mentions: Vec<&Entity> = note
            .entities
            .iter()
            .filter(|e| e.source_lexicon == "angina" && usable(e))
            .collect();
        angina_mentions.sort_by_key(|e| e.start);
        if let Some(final_mention) = angina_mentions.last() {
            if final_mention.assertion == AssertionStatus::Present {
                angina = true;
                d.evidence.push(Evidence::new(
                    last,
                    final_mention.start,
                    final_mention.end,
                    "angina in most recent note",
                ));
            }
        }
    }

    let mut distinct_meds: std::collections::BTreeMap<String, (usize, usize, usize)> =
        std::collections::BTreeMap::new();
    for (ni, _, e) in mentions(notes, "cad-meds") {
        if usable(e) && e.assertion == AssertionStatus::Present {
            distinct_meds
                .entry(e.matched_term.clone())
                .or_insert((ni, e.start, e.end));
        }
    }
    let cad_dx = mentions(notes, "cad-problems")
        .find(|(_, _, e)| usable(e) && present_or_historical(e.assertion));
    let meds = distinct_meds.len() >= 2 && cad_dx.is_some();
    if meds {
        for (term, (ni, s, e)) in &distinct_meds {
            d.evidence
                .push(Evidence::new(*ni, *s, *e, format!("CAD medication {term}")));
        }
        if let Some((ni, _, e)) = cad_dx {
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "CAD diagnosis"));
        }
    }

    d.trace.insert("ischemia".into(), ischemia);
    d.trace.insert("mi".into(), mi);
    d.trace.insert("angina_recent".into(), angina);
    d.trace.insert("cad_meds".into(), meds);
    let count = [ischemia, mi, angina, meds].iter().filter(|b| **b).count();
    d.label = met(count >= config.advanced_cad_min);
    d
}

/// MI within the window: an MI mention dated by an in-sentence timex (else
/// the note date), present-asserted, outside PMH.
pub fn eval_mi_6mos(
    record: &PatientRecord,
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let window = TemporalWindow {
        length_months: config.mi_window_months,
        criterion: CriterionId::Mi6mos,
    };
    let mut d = CriterionDecision::new(CriterionId::Mi6mos, Label::NotMet);
    for (ni, _, e) in mentions(notes, "mi-terms") {
        if mention_within(&notes[ni], e, record.present_day, window) {
            d.label = Label::Met;
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "recent MI mention"));
        }
    }
    d
}

/// Ketoacidosis within a year: a variant mention or a positive urine-ketones
/// reading inside the window.
pub fn eval_keto_1yr(
    record: &PatientRecord,
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let window = TemporalWindow {
        length_months: config.keto_window_months,
        criterion: CriterionId::Keto1yr,
    };
    let mut d = CriterionDecision::new(CriterionId::Keto1yr, Label::NotMet);
    for (ni, _, e) in mentions(notes, "keto-variants") {
        if mention_within(&notes[ni], e, record.present_day, window) {
            d.label = Label::Met;
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "ketoacidosis mention"));
        }
    }
    for (ni, note) in notes.iter().enumerate() {
        for (s, e) in &note.ketone_positives {
            let ok = within_window(
                EventDating::NoTimex,
                SectionKind::Other,
                AssertionStatus::Present,
                note.record_date,
                record.present_day,
                window,
            );
            if ok {
                d.label = Label::Met;
                d.evidence
                    .push(Evidence::new(ni, *s, *e, "positive urine ketones"));
            }
        }
    }
    d
}

/// Dietary supplement in the window, by two-way substring match against the
/// supplement list, with the Vitamin D forms excluded.
pub fn eval_dietsupp_2mos(
    record: &PatientRecord,
    notes: &[AnnotatedNote],
    res: &ResourceSet,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let window = TemporalWindow {
        length_months: config.dietsupp_window_months,
        criterion: CriterionId::Dietsupp2mos,
    };
    let supplements = res.lexicon("supplements").expect("checked by evaluate_all");
    let exclusions = res
        .lexicon("supplement-exclusions")
        .expect("checked by evaluate_all");
    let mut d = CriterionDecision::new(CriterionId::Dietsupp2mos, Label::NotMet);
    for (ni, note) in notes.iter().enumerate() {
        for e in &note.entities {
            if !matches!(e.semantic_type, SemanticType::Drug | SemanticType::Treatment) {
                continue;
            }
            if !surface_in_lexicon(&e.surface, supplements, MatchMode::TwoWaySubstring) {
                continue;
            }
            if surface_in_lexicon(&e.surface, exclusions, MatchMode::TwoWaySubstring) {
                continue;
            }
            if mention_within(note, e, record.present_day, window) {
                d.label = Label::Met;
                d.evidence
                    .push(Evidence::new(ni, e.start, e.end, "dietary supplement in window"));
            }
        }
    }
    d
}

/// Aspirin feature vector: [aspirin mentioned, aspirin dose value, MI
/// diagnosis, MI symptom count].
pub fn asp_for_mi_features(notes: &[AnnotatedNote]) -> ([f64; 4], Vec<(usize, usize, usize)>) {
    let mut spans = Vec::new();
    let mut has_aspirin = false;
    let mut dose = 0f64;
    for (ni, note) in notes.iter().enumerate() {
        for (ei, e) in note.entities.iter().enumerate() {
            if e.source_lexicon != "aspirin" || e.assertion != AssertionStatus::Present {
                continue;
            }
            has_aspirin = true;
            spans.push((ni, e.start, e.end));
            for dos in &note.entities {
                if dos.semantic_type == SemanticType::Dosage && dos.attached_drug == Some(ei) {
                    dose = dose.max(dos.dose_value.unwrap_or(0.0));
                }
            }
        }
    }
    let mut mi_dx = false;
    for (ni, _, e) in mentions(notes, "mi-terms") {
        if present_or_historical(e.assertion) {
            mi_dx = true;
            spans.push((ni, e.start, e.end));
        }
    }
    let mut symptoms = 0f64;
    for (ni, _, e) in mentions(notes, "mi-symptoms") {
        if e.assertion == AssertionStatus::Present {
            symptoms += 1.0;
            spans.push((ni, e.start, e.end));
        }
    }
    (
        [
            if has_aspirin { 1.0 } else { 0.0 },
            dose,
            if mi_dx { 1.0 } else { 0.0 },
            symptoms,
        ],
        spans,
    )
}

/// Aspirin for MI prevention. Fallback: aspirin plus an MI diagnosis or MI
/// symptoms. Model path: decision tree over the four features.
pub fn eval_asp_for_mi(
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    model: Option<&DecisionTreeModel>,
) -> CriterionDecision {
    let (features, spans) = asp_for_mi_features(notes);
    let mut d = CriterionDecision::new(CriterionId::AspForMi, Label::NotMet);
    for (ni, s, e) in &spans {
        d.evidence.push(Evidence::new(*ni, *s, *e, "aspirin/MI cue"));
    }
    match model {
        Some(m) => {
            d.label = met(m.predict(&features));
        }
        None => {
            d.fallback = true;
            d.label = met(features[0] > 0.0 && (features[2] > 0.0 || features[3] >= 1.0));
        }
    }
    d
}

fn is_a1c_lab(name: &str) -> bool {
    let n = name.to_lowercase();
    n.contains("a1c") || n.contains("glycated") || n.contains("glycosylated")
}

/// HbA1c in range. Fallback: any A1c lab value inside the inclusive band.
/// Model path: linear decision over [keyword presence, value presence,
/// below/in/above bucket flags].
pub fn eval_hba1c(
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    model: Option<&LinearModel>,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let (lo, hi) = config.hba1c_range;
    let mut d = CriterionDecision::new(CriterionId::Hba1c, Label::NotMet);
    let has_keyword = mentions(notes, "hemoglobin-keywords").next().is_some();
    let mut values = Vec::new();
    for (ni, note) in notes.iter().enumerate() {
        for lab in &note.labs {
            if is_a1c_lab(&lab.test_name) {
                values.push(lab.value);
                d.evidence
                    .push(Evidence::new(ni, lab.start, lab.end, format!("A1c value {}", lab.value)));
            }
        }
    }
    let in_range = values.iter().any(|v| *v >= lo && *v <= hi);
    match model {
        Some(m) => {
            let below = values.iter().any(|v| *v < lo);
            let above = values.iter().any(|v| *v > hi);
            let features = [
                if has_keyword { 1.0 } else { 0.0 },
                if values.is_empty() { 0.0 } else { 1.0 },
                if below { 1.0 } else { 0.0 },
                if in_range { 1.0 } else { 0.0 },
                if above { 1.0 } else { 0.0 },
            ];
            let z = m.decision(&features);
            d.score = Some(z);
            d.label = met(z > 0.0);
        }
        None => {
            d.fallback = true;
            d.label = met(in_range);
        }
    }
    d
}

fn is_creatinine_lab(name: &str) -> bool {
    let n = name.to_lowercase();
    n.contains("creatinin") || n == "creat"
}

/// Elevated serum creatinine: in-note reference range wins when supplied,
/// otherwise the sex-specific general upper limit plus the margin; urine
/// values are ignored; a non-negated "elevated creatinine" phrase counts.
pub fn eval_creatinine(
    notes: &[AnnotatedNote],
    _res: &ResourceSet,
    sex: PatientSex,
    config: &CriteriaConfig,
) -> CriterionDecision {
    let mut d = CriterionDecision::new(CriterionId::Creatinine, Label::NotMet);
    let general_high = match sex {
        PatientSex::Female => config.creat_norm_female.1,
        PatientSex::Male | PatientSex::Unknown => config.creat_norm_male.1,
    };
    for (ni, note) in notes.iter().enumerate() {
        for lab in &note.labs {
            if !is_creatinine_lab(&lab.test_name) {
                continue;
            }
            if lab.specimen == crate::textproc::Specimen::Urine {
                continue;
            }
            let elevated = match lab.reference_range {
                Some((_, high)) => lab.value > high,
                None => lab.value > general_high + config.creat_margin,
            };
            if elevated {
                d.label = Label::Met;
                d.evidence.push(Evidence::new(
                    ni,
                    lab.start,
                    lab.end,
                    format!("creatinine {} above limit", lab.value),
                ));
            }
        }
    }
    for (ni, _, e) in mentions(notes, "elevated-creatinine") {
        if present_or_historical(e.assertion) {
            d.label = Label::Met;
            d.evidence
                .push(Evidence::new(ni, e.start, e.end, "elevated creatinine phrase"));
        }
    }
    d
}
