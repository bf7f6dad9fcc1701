//! Lab result extraction: name/value pairs, colon style, and table rows with
//! parenthesized reference ranges, plus the urine-ketone positivity cue.

use std::sync::OnceLock;

use regex::Regex;

use super::{LabResult, Specimen};
use crate::lexicon::Lexicon;

const URINE_CUES: &[&str] = &["urine", "ua", "u/a", "urinalysis"];
const SERUM_CUES: &[&str] = &["serum", "chem", "chemistry", "bmp", "cmp", "chem7", "chem-7"];

fn value_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // : or whitespace, value, optional unit, optional (low-high) / [low-high]
    RE.get_or_init(|| {
        Regex::new(
            r"^[ \t]*:?[ \t]*(\d+(?:\.\d+)?)[ \t]*(%|[A-Za-z][A-Za-z/%0-9]*)?[ \t]*(?:[(\[][ \t]*(\d+(?:\.\d+)?)[ \t]*[-\u{2013}][ \t]*(\d+(?:\.\d+)?)[ \t]*[)\]])?",
        )
        .unwrap()
    })
}

/// Units we accept on a lab value; anything else is treated as prose and the
/// unit field left empty.
fn is_lab_unit(u: &str) -> bool {
    let u = u.to_lowercase();
    u.contains('/')
        || u == "%"
        || matches!(
            u.as_str(),
            "mgdl" | "mmol" | "meq" | "mg" | "gm" | "g" | "iu" | "u" | "units"
        )
}

fn line_has_cue(line_lower: &str, cues: &[&str]) -> bool {
    for cue in cues {
        if cue.contains('/') {
            if line_lower.contains(cue) {
                return true;
            }
            continue;
        }
        // Whole-word containment.
        for piece in line_lower.split(|c: char| !c.is_ascii_alphanumeric()) {
            if piece == *cue {
                return true;
            }
        }
    }
    false
}

fn looks_like_header(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() || t.len() > 60 {
        return false;
    }
    t.ends_with(':') || (t.chars().any(|c| c.is_uppercase()) && !t.chars().any(|c| c.is_lowercase()))
}

/// Scan each line for known lab names followed by a numeric value. Specimen is
/// Urine when a urine cue appears on the line or the nearest preceding
/// header-like line, Serum on a serum cue, else Unknown.
pub fn extract_lab_results(text: &str, lab_names: &Lexicon) -> Vec<LabResult> {
    let mut results = Vec::new();
    // Longest names first so "hemoglobin a1c" beats "hemoglobin".
    let mut names: Vec<&str> = lab_names.iter().map(|t| t.text.as_str()).collect();
    names.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));

    let mut offset = 0usize;
    let mut current_header = String::new();
    for line in text.split_inclusive('\n') {
        let content = line.trim_end_matches('\n');
        let lower = content.to_lowercase();
        if looks_like_header(content) {
            current_header = lower.clone();
        }
        let mut claimed: Vec<(usize, usize)> = Vec::new();
        for name in &names {
            let mut from = 0usize;
            while let Some(rel) = lower[from..].find(*name) {
                let at = from + rel;
                from = at + name.len().max(1);
                // Word boundaries around the name.
                let before_ok = at == 0
                    || !lower.as_bytes()[at - 1].is_ascii_alphanumeric();
                let after = at + name.len();
                let after_ok = after >= lower.len()
                    || !lower.as_bytes()[after].is_ascii_alphanumeric();
                if !before_ok || !after_ok {
                    continue;
                }
                if claimed.iter().any(|&(a, b)| at < b && a < after) {
                    continue;
                }
                let Some(caps) = value_regex().captures(&content[after..]) else {
                    continue;
                };
                let value: f64 = caps[1].parse().unwrap_or(f64::NAN);
                if !value.is_finite() || value < 0.0 {
                    continue;
                }
                let unit = caps
                    .get(2)
                    .map(|m| m.as_str())
                    .filter(|u| is_lab_unit(u))
                    .unwrap_or("")
                    .to_string();
                let reference_range = match (caps.get(3), caps.get(4)) {
                    (Some(lo), Some(hi)) => {
                        let lo: f64 = lo.as_str().parse().unwrap_or(f64::NAN);
                        let hi: f64 = hi.as_str().parse().unwrap_or(f64::NAN);
                        if lo.is_finite() && hi.is_finite() && lo < hi {
                            Some((lo, hi))
                        } else {
                            log::debug!("skipping degenerate range {lo}-{hi}");
                            None
                        }
                    }
                    _ => None,
                };
                let specimen = if line_has_cue(&lower, URINE_CUES)
                    || line_has_cue(&current_header, URINE_CUES)
                {
                    Specimen::Urine
                } else if line_has_cue(&lower, SERUM_CUES)
                    || line_has_cue(&current_header, SERUM_CUES)
                {
                    Specimen::Serum
                } else {
                    Specimen::Unknown
                };
                let span_end = after + caps.get(0).unwrap().end();
                claimed.push((at, span_end));
                results.push(LabResult {
                    test_name: name.to_string(),
                    value,
                    unit,
                    reference_range,
                    specimen,
                    start: offset + at,
                    end: offset + span_end,
                });
            }
        }
        offset += line.len();
    }
    results.sort_by_key(|r| r.start);
    results
}

const KETONE_POSITIVE_CUES: &[&str] = &["positive", "pos", "+", "1+", "2+", "3+", "moderate", "large"];
const KETONE_NEGATIVE_CUES: &[&str] = &["negative", "neg", "trace"];

/// Spans of positive urine-ketone cues ("UA: ketones positive"). A urine cue
/// must appear on the line or its enclosing header; negative readings and
/// readings without urine context are ignored.
pub fn detect_urine_ketone_positives(text: &str) -> Vec<(usize, usize)> {
    let mut flags = Vec::new();
    let mut offset = 0usize;
    let mut current_header = String::new();
    for line in text.split_inclusive('\n') {
        let content = line.trim_end_matches('\n');
        let lower = content.to_lowercase();
        if looks_like_header(content) {
            current_header = lower.clone();
        }
        let urine_ctx =
            line_has_cue(&lower, URINE_CUES) || line_has_cue(&current_header, URINE_CUES);
        if urine_ctx {
            if let Some(at) = lower.find("keton") {
                let tail = &lower[at..];
                let tail_words: Vec<&str> = tail
                    .split(|c: char| c.is_whitespace() || c == ':' || c == ',')
                    .filter(|w| !w.is_empty())
                    .take(5)
                    .collect();
                let negative = tail_words
                    .iter()
                    .any(|w| KETONE_NEGATIVE_CUES.contains(&w.trim_matches('.')));
                let positive = tail_words
                    .iter()
                    .any(|w| KETONE_POSITIVE_CUES.contains(&w.trim_matches('.')));
                if positive && !negative {
                    let end = at + tail.find('\n').unwrap_or(tail.len());
                    flags.push((offset + at, offset + end));
                }
            }
        }
        offset += line.len();
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{LexTerm, Lexicon, Polarity, Provenance};
    use crate::textproc::SemanticType;

    fn names() -> Lexicon {
        let mut l = Lexicon::new(
            "lab-names",
            SemanticType::LabTest,
            Polarity::Positive,
            Provenance::Manual,
        );
        for t in ["creatinine", "hba1c", "a1c", "hemoglobin a1c", "glucose"] {
            l.insert(LexTerm::new(t));
        }
        l
    }

    #[test]
    fn inline_value_with_range() {
        let labs = extract_lab_results("Creatinine 1.8 (0.6-1.3)\n", &names());
        assert_eq!(labs.len(), 1);
        assert_eq!(labs[0].test_name, "creatinine");
        assert_eq!(labs[0].value, 1.8);
        assert_eq!(labs[0].reference_range, Some((0.6, 1.3)));
        assert_eq!(labs[0].specimen, Specimen::Unknown);
    }

    #[test]
    fn colon_style() {
        let labs = extract_lab_results("HbA1c: 7.2\n", &names());
        assert_eq!(labs.len(), 1);
        assert_eq!(labs[0].test_name, "hba1c");
        assert_eq!(labs[0].value, 7.2);
    }

    #[test]
    fn urine_context_sets_specimen() {
        let labs = extract_lab_results("urine creatinine 150\n", &names());
        assert_eq!(labs[0].specimen, Specimen::Urine);
        let labs = extract_lab_results("URINALYSIS:\ncreatinine 42\n", &names());
        assert_eq!(labs[0].specimen, Specimen::Urine);
    }

    #[test]
    fn serum_context_sets_specimen() {
        let labs = extract_lab_results("serum creatinine 2.5 mg/dL\n", &names());
        assert_eq!(labs[0].specimen, Specimen::Serum);
        assert_eq!(labs[0].unit, "mg/dL");
    }

    #[test]
    fn prose_word_not_taken_as_unit() {
        let labs = extract_lab_results("creatinine 1.8 and rising\n", &names());
        assert_eq!(labs.len(), 1);
        assert_eq!(labs[0].unit, "");
    }

    #[test]
    fn ketones_positive_flagged_without_numeric_result() {
        let text = "UA: ketones positive\n";
        let labs = extract_lab_results(text, &names());
        assert!(labs.is_empty());
        let flags = detect_urine_ketone_positives(text);
        assert_eq!(flags.len(), 1);
    }

    #[test]
    fn ketones_negative_or_non_urine_not_flagged() {
        assert!(detect_urine_ketone_positives("UA: ketones negative\n").is_empty());
        assert!(detect_urine_ketone_positives("ketones positive\n").is_empty());
        assert!(detect_urine_ketone_positives("urine ketones: trace\n").is_empty());
    }

    #[test]
    fn longest_name_wins() {
        let labs = extract_lab_results("hemoglobin a1c 8.1\n", &names());
        assert_eq!(labs.len(), 1);
        assert_eq!(labs[0].test_name, "hemoglobin a1c");
    }

    #[test]
    fn degenerate_range_dropped() {
        let labs = extract_lab_results("glucose 100 (200-100)\n", &names());
        assert_eq!(labs[0].reference_range, None);
    }
}
