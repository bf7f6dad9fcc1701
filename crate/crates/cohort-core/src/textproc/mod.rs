//! Lightweight clinical text processing: tokens, sentences, sections,
//! dictionary-tagged entities with assertion status, dosages, lab values,
//! and urine-ketone cues. Stands in for a full biomedical NLP pipeline.

pub mod assertion;
pub mod entities;
pub mod labs;
pub mod sections;
pub mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;
use crate::record::ClinicalNote;
use crate::temporal::{self, Timex};

pub use assertion::{detect_assertion, TriggerSet};
pub use entities::{extract_dosages, tag_entities};
pub use labs::{detect_urine_ketone_positives, extract_lab_results};
pub use sections::{identify_sections, section_of_sentence, SectionSynonyms};
pub use tokenize::{split_sentences, tokenize};

/// A token with byte offsets into the owning note's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// A sentence as a half-open token range plus byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub token_range: (usize, usize),
    pub start: usize,
    pub end: usize,
}

/// Note section kinds referenced by the criterion rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionKind {
    PastMedicalHistory,
    HistoryPresentIllness,
    SocialHistory,
    FamilyHistory,
    Medications,
    Labs,
    Allergies,
    Other,
}

impl FromStr for SectionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PastMedicalHistory" => Ok(SectionKind::PastMedicalHistory),
            "HistoryPresentIllness" => Ok(SectionKind::HistoryPresentIllness),
            "SocialHistory" => Ok(SectionKind::SocialHistory),
            "FamilyHistory" => Ok(SectionKind::FamilyHistory),
            "Medications" => Ok(SectionKind::Medications),
            "Labs" => Ok(SectionKind::Labs),
            "Allergies" => Ok(SectionKind::Allergies),
            "Other" => Ok(SectionKind::Other),
            _ => Err(()),
        }
    }
}

/// A contiguous run of sentences under one header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub sentence_range: (usize, usize),
}

/// Semantic type carried by a lexicon and stamped onto its entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemanticType {
    Problem,
    Drug,
    Treatment,
    LabTest,
    LabValue,
    Dosage,
    Language,
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemanticType::Problem => "problem",
            SemanticType::Drug => "drug",
            SemanticType::Treatment => "treatment",
            SemanticType::LabTest => "labtest",
            SemanticType::LabValue => "labvalue",
            SemanticType::Dosage => "dosage",
            SemanticType::Language => "language",
        };
        f.write_str(s)
    }
}

impl FromStr for SemanticType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "problem" => Ok(SemanticType::Problem),
            "drug" => Ok(SemanticType::Drug),
            "treatment" => Ok(SemanticType::Treatment),
            "labtest" => Ok(SemanticType::LabTest),
            "labvalue" => Ok(SemanticType::LabValue),
            "dosage" => Ok(SemanticType::Dosage),
            "language" => Ok(SemanticType::Language),
            _ => Err(()),
        }
    }
}

/// Assertion status of a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssertionStatus {
    Present,
    Absent,
    Hypothetical,
    Family,
    Historical,
}

/// A tagged mention. Dosage entities carry `attached_drug` (index into the
/// note's entity list) and `dose_value`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub semantic_type: SemanticType,
    pub source_lexicon: String,
    pub matched_term: String,
    pub assertion: AssertionStatus,
    pub section: SectionKind,
    pub sentence: usize,
    pub token_range: (usize, usize),
    pub attached_drug: Option<usize>,
    pub dose_value: Option<f64>,
}

/// Specimen source for a lab value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Specimen {
    Serum,
    Urine,
    Unknown,
}

/// A numeric lab result with optional in-note reference range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabResult {
    pub test_name: String,
    pub value: f64,
    pub unit: String,
    pub reference_range: Option<(f64, f64)>,
    pub specimen: Specimen,
    pub start: usize,
    pub end: usize,
}

/// All annotation layers for one note.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedNote {
    pub note_index: usize,
    pub record_date: chrono::NaiveDate,
    pub text: String,
    pub tokens: Vec<Token>,
    pub sentences: Vec<Sentence>,
    pub sections: Vec<Section>,
    pub entities: Vec<Entity>,
    pub labs: Vec<LabResult>,
    pub timexes: Vec<Timex>,
    pub ketone_positives: Vec<(usize, usize)>,
}

impl AnnotatedNote {
    /// Sentence index containing byte position `pos`, if any.
    pub fn sentence_at(&self, pos: usize) -> Option<usize> {
        self.sentences
            .iter()
            .position(|s| s.start <= pos && pos < s.end.max(s.start + 1))
    }

    /// Timexes whose span lies inside sentence `idx`.
    pub fn timexes_in_sentence(&self, idx: usize) -> Vec<&Timex> {
        let Some(s) = self.sentences.get(idx) else {
            return Vec::new();
        };
        self.timexes
            .iter()
            .filter(|t| t.start >= s.start && t.end <= s.end)
            .collect()
    }
}

/// Run the full annotation stack over one note.
pub fn annotate(
    note_index: usize,
    note: &ClinicalNote,
    tagging_lexicons: &[&Lexicon],
    lab_names: &Lexicon,
    synonyms: &SectionSynonyms,
    triggers: &TriggerSet,
) -> AnnotatedNote {
    let text = &note.text;
    let tokens = tokenize(text);
    let sentences = split_sentences(text, &tokens);
    let sections = identify_sections(text, &sentences, synonyms);
    let mut entities = tag_entities(text, &tokens, &sentences, &sections, tagging_lexicons, triggers);
    let dosages = extract_dosages(text, &tokens, &sentences, &sections, &entities, triggers);
    entities.extend(dosages);
    let labs = extract_lab_results(text, lab_names);
    let ketone_positives = detect_urine_ketone_positives(text);
    let mut timexes = Vec::new();
    for sentence in &sentences {
        let slice = &text[sentence.start..sentence.end];
        for mut tx in temporal::extract_timexes(slice) {
            tx.start += sentence.start;
            tx.end += sentence.start;
            tx.resolved = temporal::resolve(&tx, note.record_date);
            timexes.push(tx);
        }
    }
    AnnotatedNote {
        note_index,
        record_date: note.record_date,
        text: text.clone(),
        tokens,
        sentences,
        sections,
        entities,
        labs,
        timexes,
        ketone_positives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{LexTerm, Polarity, Provenance};
    use chrono::NaiveDate;

    #[test]
    fn annotate_produces_consistent_offsets() {
        let note = ClinicalNote {
            record_date: NaiveDate::from_ymd_opt(2089, 11, 15).unwrap(),
            text: "Record date: 2089-11-15\nPMH:\nMI 9 months ago.\nCreatinine 1.8 (0.6-1.3)\n"
                .to_string(),
            char_offset: 0,
        };
        let mut mi = Lexicon::new("mi-terms", SemanticType::Problem, Polarity::Positive, Provenance::Manual);
        mi.insert(LexTerm::new("mi"));
        let mut lab_names = Lexicon::new("lab-names", SemanticType::LabTest, Polarity::Positive, Provenance::Manual);
        lab_names.insert(LexTerm::new("creatinine"));
        let syns = SectionSynonyms::parse("pmh\tPastMedicalHistory\n");
        let trig = TriggerSet::parse("no\tneg_pre\n");
        let ann = annotate(0, &note, &[&mi], &lab_names, &syns, &trig);

        for e in &ann.entities {
            assert_eq!(&ann.text[e.start..e.end], e.surface);
        }
        for t in &ann.timexes {
            assert_eq!(&ann.text[t.start..t.end], t.raw);
        }
        assert_eq!(ann.labs.len(), 1);
        // "9 months ago" resolves against the note date.
        let rel = ann
            .timexes
            .iter()
            .find(|t| t.raw.contains("months ago"))
            .unwrap();
        assert_eq!(rel.resolved, NaiveDate::from_ymd_opt(2089, 2, 15));
    }

    #[test]
    fn determinism_same_bytes_same_annotations() {
        let note = ClinicalNote {
            record_date: NaiveDate::from_ymd_opt(2089, 1, 1).unwrap(),
            text: "Meds:\naspirin 81mg daily\nmetoprolol 50 mg bid\n".to_string(),
            char_offset: 0,
        };
        let mut drugs = Lexicon::new("drugs", SemanticType::Drug, Polarity::Positive, Provenance::Manual);
        drugs.insert(LexTerm::new("aspirin"));
        drugs.insert(LexTerm::new("metoprolol"));
        let lab_names = Lexicon::new("lab-names", SemanticType::LabTest, Polarity::Positive, Provenance::Manual);
        let syns = SectionSynonyms::parse("meds\tMedications\n");
        let trig = TriggerSet::parse("no\tneg_pre\n");
        let a = annotate(0, &note, &[&drugs], &lab_names, &syns, &trig);
        let b = annotate(0, &note, &[&drugs], &lab_names, &syns, &trig);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
