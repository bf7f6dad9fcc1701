//! Patient record files: parsing, note splitting, gold tags, and decision output.
//!
//! A record file is an XML-like wrapper with a `<TEXT>` CDATA body holding the
//! clinical notes (separated by lines of asterisks, each opening with a
//! `Record date: YYYY-MM-DD` header) and an optional `<TAGS>` block of 13
//! self-closing criterion elements. A plain directory of `<patientid>_<seq>.txt`
//! note files is accepted as well.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::CriterionDecision;

/// Binary eligibility label. Serialized as `"met"` / `"not met"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "met")]
    Met,
    #[serde(rename = "not met")]
    NotMet,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Met => "met",
            Label::NotMet => "not met",
        }
    }
}

impl FromStr for Label {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "met" => Ok(Label::Met),
            "not met" => Ok(Label::NotMet),
            other => Err(RecordError::BadLabel(other.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The 13 selection criteria, in canonical (alphabetical) order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum CriterionId {
    Abdominal,
    AdvancedCad,
    AlcoholAbuse,
    AspForMi,
    Creatinine,
    Dietsupp2mos,
    DrugAbuse,
    English,
    Hba1c,
    Keto1yr,
    MajorDiabetes,
    MakesDecisions,
    Mi6mos,
}

impl CriterionId {
    pub const ALL: [CriterionId; 13] = [
        CriterionId::Abdominal,
        CriterionId::AdvancedCad,
        CriterionId::AlcoholAbuse,
        CriterionId::AspForMi,
        CriterionId::Creatinine,
        CriterionId::Dietsupp2mos,
        CriterionId::DrugAbuse,
        CriterionId::English,
        CriterionId::Hba1c,
        CriterionId::Keto1yr,
        CriterionId::MajorDiabetes,
        CriterionId::MakesDecisions,
        CriterionId::Mi6mos,
    ];

    /// Row spelling used in the challenge score tables, e.g. `Advanced-cad`.
    pub fn table_name(&self) -> &'static str {
        match self {
            CriterionId::Abdominal => "Abdominal",
            CriterionId::AdvancedCad => "Advanced-cad",
            CriterionId::AlcoholAbuse => "Alcohol-abuse",
            CriterionId::AspForMi => "Asp-for-mi",
            CriterionId::Creatinine => "Creatinine",
            CriterionId::Dietsupp2mos => "Dietsupp-2mos",
            CriterionId::DrugAbuse => "Drug-abuse",
            CriterionId::English => "English",
            CriterionId::Hba1c => "Hba1c",
            CriterionId::Keto1yr => "Keto-1yr",
            CriterionId::MajorDiabetes => "Major-diabetes",
            CriterionId::MakesDecisions => "Makes-decisions",
            CriterionId::Mi6mos => "Mi-6mos",
        }
    }

    /// Uppercase element name used in the TAGS block, e.g. `ADVANCED-CAD`.
    pub fn tag_name(&self) -> String {
        self.table_name().to_ascii_uppercase()
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.table_name())
    }
}

impl FromStr for CriterionId {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        for id in CriterionId::ALL {
            if norm == id.table_name().to_ascii_lowercase() {
                return Ok(id);
            }
        }
        Err(RecordError::UnknownCriterionTag(s.to_string()))
    }
}

/// One clinical note inside a record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClinicalNote {
    pub record_date: NaiveDate,
    /// Note body, exactly as it appears between separators (header line included).
    pub text: String,
    /// Byte offset of the note body within the record's TEXT body.
    pub char_offset: usize,
}

/// A patient's record: notes in ascending date order plus optional gold tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub notes: Vec<ClinicalNote>,
    pub gold: Option<BTreeMap<CriterionId, Label>>,
    /// Date of the latest clinical note; anchor for all temporal windows.
    pub present_day: NaiveDate,
    /// Raw TEXT body the notes were split from.
    pub text: String,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("note without a parseable record date: {0}")]
    MalformedHeader(String),
    #[error("record contains no notes")]
    EmptyRecord,
    #[error("unknown criterion tag: {0}")]
    UnknownCriterionTag(String),
    #[error("bad label value: {0:?} (expected \"met\" or \"not met\")")]
    BadLabel(String),
    #[error("decision missing for criterion {0}")]
    MissingCriterion(CriterionId),
    #[error("record file has no TEXT body")]
    MissingTextBody,
    #[error("record file is not valid UTF-8")]
    NotUtf8,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A line counts as a note separator when it is nothing but 20+ asterisks.
fn is_separator_line(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 20 && t.bytes().all(|b| b == b'*')
}

fn header_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*record\s+date\s*:\s*(\d{4})-(\d{1,2})-(\d{1,2})").unwrap())
}

fn tag_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"<([A-Za-z0-9-]+)\s+met\s*=\s*"([^"]*)"\s*/?>"#).unwrap())
}

/// Extract the TEXT body (CDATA unwrapped) from a record file, or the whole
/// input when no wrapper is present.
fn extract_text_body(raw: &str) -> Result<String, RecordError> {
    if let (Some(open), Some(close)) = (raw.find("<TEXT>"), raw.find("</TEXT>")) {
        let mut body = &raw[open + "<TEXT>".len()..close];
        if let Some(stripped) = body.strip_prefix("<![CDATA[") {
            body = stripped;
        }
        if let Some(stripped) = body.strip_suffix("]]>") {
            body = stripped;
        }
        return Ok(body.to_string());
    }
    if header_regex().is_match(raw) {
        // Headerless plain dump: treat the whole file as the body.
        return Ok(raw.to_string());
    }
    Err(RecordError::MissingTextBody)
}

fn parse_gold_tags(raw: &str) -> Result<Option<BTreeMap<CriterionId, Label>>, RecordError> {
    let (open, close) = match (raw.find("<TAGS>"), raw.find("</TAGS>")) {
        (Some(o), Some(c)) => (o, c),
        _ => return Ok(None),
    };
    let block = &raw[open..close];
    let mut gold = BTreeMap::new();
    for cap in tag_regex().captures_iter(block) {
        let id: CriterionId = cap[1].parse()?;
        let label: Label = cap[2].parse()?;
        gold.insert(id, label);
    }
    Ok(Some(gold))
}

/// Split a TEXT body into notes at separator lines and parse each header date.
fn split_notes(body: &str) -> Result<Vec<ClinicalNote>, RecordError> {
    let mut notes = Vec::new();
    let mut seg_start = 0usize;
    let mut cursor = 0usize;
    let mut segments: Vec<(usize, &str)> = Vec::new();
    for line in body.split_inclusive('\n') {
        if is_separator_line(line.trim_end_matches('\n')) {
            segments.push((seg_start, &body[seg_start..cursor]));
            seg_start = cursor + line.len();
        }
        cursor += line.len();
    }
    segments.push((seg_start, &body[seg_start..]));

    for (offset, seg) in segments {
        if seg.trim().is_empty() {
            continue;
        }
        let first_line = seg
            .lines()
            .find(|l| !l.trim().is_empty())
            .unwrap_or_default();
        let caps = header_regex()
            .captures(first_line)
            .ok_or_else(|| RecordError::MalformedHeader(first_line.trim().to_string()))?;
        let (y, m, d) = (
            caps[1].parse::<i32>().unwrap(),
            caps[2].parse::<u32>().unwrap(),
            caps[3].parse::<u32>().unwrap(),
        );
        let record_date = NaiveDate::from_ymd_opt(y, m, d)
            .ok_or_else(|| RecordError::MalformedHeader(first_line.trim().to_string()))?;
        notes.push(ClinicalNote {
            record_date,
            text: seg.to_string(),
            char_offset: offset,
        });
    }
    Ok(notes)
}

/// Parse a record file (TEXT body + optional TAGS) into a [`PatientRecord`].
pub fn parse_record_file(patient_id: &str, bytes: &[u8]) -> Result<PatientRecord, RecordError> {
    let raw = std::str::from_utf8(bytes).map_err(|_| RecordError::NotUtf8)?;
    let body = extract_text_body(raw)?;
    let mut notes = split_notes(&body)?;
    if notes.is_empty() {
        return Err(RecordError::EmptyRecord);
    }
    if !(3..=5).contains(&notes.len()) {
        log::warn!(
            "patient {}: {} notes (challenge records carry 3-5)",
            patient_id,
            notes.len()
        );
    }
    // Stable sort keeps file order for same-day notes.
    notes.sort_by_key(|n| n.record_date);
    let present_day = notes.last().unwrap().record_date;
    let gold = parse_gold_tags(raw)?;
    Ok(PatientRecord {
        patient_id: patient_id.to_string(),
        notes,
        gold,
        present_day,
        text: body,
    })
}

/// Serialize a record plus its 13 decisions back into the record file format.
pub fn write_decisions(
    record: &PatientRecord,
    decisions: &BTreeMap<CriterionId, CriterionDecision>,
) -> Result<Vec<u8>, RecordError> {
    for id in CriterionId::ALL {
        if !decisions.contains_key(&id) {
            return Err(RecordError::MissingCriterion(id));
        }
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PatientMatching>\n<TEXT><![CDATA[");
    out.push_str(&record.text);
    out.push_str("]]></TEXT>\n<TAGS>\n");
    for id in CriterionId::ALL {
        let d = &decisions[&id];
        out.push_str(&format!("<{} met=\"{}\" />\n", id.tag_name(), d.label));
    }
    out.push_str("</TAGS>\n</PatientMatching>\n");
    Ok(out.into_bytes())
}

/// Sidecar evidence report: spans and sub-criterion traces, one entry per criterion.
pub fn evidence_report_json(
    record: &PatientRecord,
    decisions: &BTreeMap<CriterionId, CriterionDecision>,
) -> Vec<u8> {
    #[derive(Serialize)]
    struct Report<'a> {
        patient_id: &'a str,
        present_day: NaiveDate,
        decisions: BTreeMap<String, &'a CriterionDecision>,
    }
    let report = Report {
        patient_id: &record.patient_id,
        present_day: record.present_day,
        decisions: decisions
            .iter()
            .map(|(id, d)| (id.table_name().to_string(), d))
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

fn read_file(path: &Path) -> Result<Vec<u8>, RecordError> {
    fs::read(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load one or many records from a file or directory.
///
/// Directories of `.xml` files yield one record per file; directories of
/// `.txt` files are grouped by the `<patientid>_<seq>.txt` naming scheme.
pub fn load_records(path: &Path) -> Result<Vec<PatientRecord>, RecordError> {
    if path.is_file() {
        let id = path.file_stem().unwrap_or_default().to_string_lossy();
        return Ok(vec![parse_record_file(&id, &read_file(path)?)?]);
    }
    let mut entries: Vec<_> = fs::read_dir(path)
        .map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();

    let xml_files: Vec<_> = entries
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    if !xml_files.is_empty() {
        let mut records = Vec::new();
        for p in xml_files {
            let id = p.file_stem().unwrap_or_default().to_string_lossy();
            records.push(parse_record_file(&id, &read_file(p)?)?);
        }
        return Ok(records);
    }

    // Plain-directory layout: <patientid>_<seq>.txt, one note per file.
    let mut grouped: BTreeMap<String, Vec<(u32, String)>> = BTreeMap::new();
    for p in entries.iter().filter(|p| p.extension().is_some_and(|e| e == "txt")) {
        let stem = p.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let (id, seq) = match stem.rsplit_once('_') {
            Some((id, seq)) if seq.chars().all(|c| c.is_ascii_digit()) => {
                (id.to_string(), seq.parse::<u32>().unwrap_or(0))
            }
            _ => (stem.clone(), 0),
        };
        let text = String::from_utf8(read_file(p)?).map_err(|_| RecordError::NotUtf8)?;
        grouped.entry(id).or_default().push((seq, text));
    }
    let mut records = Vec::new();
    for (id, mut parts) in grouped {
        parts.sort_by_key(|(seq, _)| *seq);
        let sep = format!("\n{}\n", "*".repeat(40));
        let body: String = parts
            .iter()
            .map(|(_, t)| t.as_str())
            .collect::<Vec<_>>()
            .join(&sep);
        records.push(parse_record_file(&id, body.as_bytes())?);
    }
    Ok(records)
}
