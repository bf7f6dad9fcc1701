//! Section identification from header lines and a synonym table.

use std::collections::HashMap;
use std::str::FromStr;

use super::{Section, SectionKind, Sentence};

/// Maps lowercase header surfaces ("pmh", "past medical history") to kinds.
#[derive(Debug, Clone, Default)]
pub struct SectionSynonyms {
    map: HashMap<String, SectionKind>,
}

impl SectionSynonyms {
    /// Parse `surface<TAB>kind` lines; '#' lines are comments.
    pub fn parse(source: &str) -> Self {
        let mut map = HashMap::new();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((surface, kind)) = line.split_once('\t') {
                if let Ok(kind) = SectionKind::from_str(kind.trim()) {
                    map.insert(surface.trim().to_lowercase(), kind);
                }
            }
        }
        SectionSynonyms { map }
    }

    pub fn lookup(&self, surface: &str) -> Option<SectionKind> {
        self.map.get(&surface.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn is_fully_capitalized(line: &str) -> bool {
    let mut has_upper = false;
    for c in line.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            has_upper = true;
        }
    }
    has_upper
}

/// A header either ends in ':' (content may follow the colon) or is a fully
/// capitalized synonym line on its own.
fn header_kind(line: &str, synonyms: &SectionSynonyms) -> Option<SectionKind> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return None;
    }
    if let Some(prefix) = trimmed.split(':').next() {
        if trimmed.contains(':') {
            if let Some(kind) = synonyms.lookup(prefix) {
                return Some(kind);
            }
        }
    }
    if is_fully_capitalized(trimmed) {
        return synonyms.lookup(trimmed);
    }
    None
}

/// Assign every sentence to the section opened by the closest preceding
/// header line; leading material is `Other`. Sections partition sentences.
pub fn identify_sections(
    text: &str,
    sentences: &[Sentence],
    synonyms: &SectionSynonyms,
) -> Vec<Section> {
    // (byte offset of line start, kind)
    let mut headers: Vec<(usize, SectionKind)> = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let content = line.trim_end_matches('\n');
        if let Some(kind) = header_kind(content, synonyms) {
            headers.push((offset, kind));
        }
        offset += line.len();
    }

    let mut sections: Vec<Section> = Vec::new();
    if sentences.is_empty() {
        return sections;
    }
    let kind_at = |pos: usize| -> SectionKind {
        headers
            .iter()
            .rev()
            .find(|(h, _)| *h <= pos)
            .map(|(_, k)| *k)
            .unwrap_or(SectionKind::Other)
    };
    let mut run_start = 0usize;
    let mut run_kind = kind_at(sentences[0].start);
    for (i, s) in sentences.iter().enumerate().skip(1) {
        let kind = kind_at(s.start);
        if kind != run_kind {
            sections.push(Section {
                kind: run_kind,
                sentence_range: (run_start, i),
            });
            run_start = i;
            run_kind = kind;
        }
    }
    sections.push(Section {
        kind: run_kind,
        sentence_range: (run_start, sentences.len()),
    });
    sections
}

/// Kind of the section containing sentence `idx`.
pub fn section_of_sentence(sections: &[Section], idx: usize) -> SectionKind {
    sections
        .iter()
        .find(|s| s.sentence_range.0 <= idx && idx < s.sentence_range.1)
        .map(|s| s.kind)
        .unwrap_or(SectionKind::Other)
}
