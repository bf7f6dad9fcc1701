//! Criterion-specific term lists: storage format, loading, and matching.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{Entity, SemanticType};

/// Term polarity: whether occurrences argue for or against the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Where a lexicon's terms came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Manual,
    IelsInternal,
    IelsExpanded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Manual => "manual",
            Provenance::IelsInternal => "iels-internal",
            Provenance::IelsExpanded => "iels-expanded",
        };
        f.write_str(s)
    }
}

impl FromStr for Provenance {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "manual" => Ok(Provenance::Manual),
            "iels-internal" => Ok(Provenance::IelsInternal),
            "iels-expanded" => Ok(Provenance::IelsExpanded),
            other => Err(LexiconError::BadHeader(format!("provenance={other}"))),
        }
    }
}

/// A single lexicon entry. Weight and seed are present on IELS-derived terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexTerm {
    pub text: String,
    pub weight: Option<f64>,
    pub neighbors_of: Option<String>,
}

impl LexTerm {
    pub fn new(text: impl Into<String>) -> Self {
        LexTerm {
            text: text.into(),
            weight: None,
            neighbors_of: None,
        }
    }
}

/// A named list of lowercase n-gram terms sharing a semantic type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    pub semantic_type: SemanticType,
    pub polarity: Polarity,
    pub provenance: Provenance,
    /// Keyed by term text; keeps the set unique and the file order canonical.
    pub terms: BTreeMap<String, LexTerm>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("bad or missing lexicon header: {0}")]
    BadHeader(String),
    #[error("term exceeds 4-gram order: {0:?}")]
    TermTooLong(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Lexicon {
    pub fn new(
        name: impl Into<String>,
        semantic_type: SemanticType,
        polarity: Polarity,
        provenance: Provenance,
    ) -> Self {
        Lexicon {
            name: name.into(),
            semantic_type,
            polarity,
            provenance,
            terms: BTreeMap::new(),
        }
    }

    /// Insert a term, lowercased and trimmed. Returns false on duplicates.
    pub fn insert(&mut self, term: LexTerm) -> bool {
        let text = term.text.trim().to_lowercase();
        if text.is_empty() {
            return false;
        }
        let mut term = term;
        term.text = text.clone();
        self.terms.insert(text, term).is_none()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains_key(&term.trim().to_lowercase())
    }

    pub fn iter(&self) -> impl Iterator<Item = &LexTerm> {
        self.terms.values()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// True iff one string contains the other, after lowercasing and trimming.
pub fn two_way_substring_match(s1: &str, s2: &str) -> bool {
    let a = s1.trim().to_lowercase();
    let b = s2.trim().to_lowercase();
    a.contains(&b) || b.contains(&a)
}

/// How [`match_lexicon`] compares entity surfaces against terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    Exact,
    TwoWaySubstring,
}

/// Below this length, TwoWaySubstring falls back to equality to curb
/// spurious containment ("iron" in "irony").
pub const MIN_SUBSTRING_LEN: usize = 3;

fn surface_matches(surface: &str, term: &str, mode: MatchMode, min_len: usize) -> bool {
    let s = normalize_words(surface);
    let t = normalize_words(term);
    match mode {
        MatchMode::Exact => s == t,
        MatchMode::TwoWaySubstring => {
            if s.len() < min_len || t.len() < min_len {
                s == t
            } else {
                two_way_substring_match(&s, &t)
            }
        }
    }
}

/// Lowercase and collapse internal whitespace so token-joined surfaces compare
/// cleanly against file terms.
pub fn normalize_words(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Filter entities whose surface matches any term of the lexicon under `mode`.
pub fn match_lexicon<'a>(
    entities: &'a [Entity],
    lexicon: &Lexicon,
    mode: MatchMode,
) -> Vec<&'a Entity> {
    entities
        .iter()
        .filter(|e| {
            lexicon
                .iter()
                .any(|t| surface_matches(&e.surface, &t.text, mode, MIN_SUBSTRING_LEN))
        })
        .collect()
}

/// True if the surface matches any term of the lexicon under `mode`.
pub fn surface_in_lexicon(surface: &str, lexicon: &Lexicon, mode: MatchMode) -> bool {
    lexicon
        .iter()
        .any(|t| surface_matches(surface, &t.text, mode, MIN_SUBSTRING_LEN))
}

fn ngram_order(term: &str) -> usize {
    term.split_whitespace().count()
}

/// Parse the lexicon file format: `#key=value` headers, then one term per
/// line with optional `<TAB>weight<TAB>seed` columns.
pub fn parse_lexicon(source: &str, origin: &str) -> Result<Lexicon, LexiconError> {
    let mut name = None;
    let mut semantic_type = None;
    let mut polarity = None;
    let mut provenance = Provenance::Manual;
    let mut body: Vec<(String, Option<f64>, Option<String>)> = Vec::new();

    for line in source.lines() {
        let line = line.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| LexiconError::BadHeader(line.to_string()))?;
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "type" => {
                    semantic_type = Some(value.trim().parse::<SemanticType>().map_err(|_| {
                        LexiconError::BadHeader(format!("type={}", value.trim()))
                    })?)
                }
                "polarity" => {
                    polarity = Some(match value.trim().to_ascii_lowercase().as_str() {
                        "positive" => Polarity::Positive,
                        "negative" => Polarity::Negative,
                        other => {
                            return Err(LexiconError::BadHeader(format!("polarity={other}")))
                        }
                    })
                }
                "provenance" => provenance = value.parse()?,
                other => return Err(LexiconError::BadHeader(format!("{other}="))),
            }
            continue;
        }
        let mut cols = line.split('\t');
        let text = cols.next().unwrap_or_default().trim().to_string();
        let weight = cols.next().and_then(|w| w.trim().parse::<f64>().ok());
        let seed = cols.next().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
        body.push((text, weight, seed));
    }

    let name = name.ok_or_else(|| LexiconError::BadHeader(format!("{origin}: missing #name=")))?;
    let semantic_type = semantic_type
        .ok_or_else(|| LexiconError::BadHeader(format!("{origin}: missing #type=")))?;
    let polarity = polarity.unwrap_or(Polarity::Positive);

    let mut lex = Lexicon::new(name, semantic_type, polarity, provenance);
    for (text, weight, seed) in body {
        if ngram_order(&text) > 4 {
            return Err(LexiconError::TermTooLong(text));
        }
        let inserted = lex.insert(LexTerm {
            text: text.clone(),
            weight,
            neighbors_of: seed,
        });
        if !inserted {
            log::warn!("{origin}: duplicate term {text:?} dropped");
        }
    }
    Ok(lex)
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let source = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lexicon(&source, &path.display().to_string())
}

pub fn lexicon_to_string(lex: &Lexicon) -> String {
    let mut out = String::new();
    out.push_str(&format!("#name={}\n", lex.name));
    out.push_str(&format!("#type={}\n", lex.semantic_type));
    let pol = match lex.polarity {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
    };
    out.push_str(&format!("#polarity={pol}\n"));
    out.push_str(&format!("#provenance={}\n", lex.provenance));
    for term in lex.iter() {
        out.push_str(&term.text);
        match (&term.weight, &term.neighbors_of) {
            (Some(w), Some(seed)) => out.push_str(&format!("\t{w}\t{seed}")),
            (Some(w), None) => out.push_str(&format!("\t{w}")),
            (None, Some(seed)) => out.push_str(&format!("\t\t{seed}")),
            (None, None) => {}
        }
        out.push('\n');
    }
    out
}

pub fn save_lexicon(lex: &Lexicon, path: &Path) -> Result<(), LexiconError> {
    std::fs::write(path, lexicon_to_string(lex)).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_way_substring_basics() {
        assert!(two_way_substring_match("fish oil", "oil"));
        assert!(two_way_substring_match("Vitamin D", "vitamin d3"));
        assert!(!two_way_substring_match("iron", "zinc"));
    }

    #[test]
    fn two_way_substring_symmetric_and_reflexive() {
        let words = ["aspirin", "fish oil", "oil", "Vitamin D", "vitamin d3", ""];
        for a in words {
            assert!(two_way_substring_match(a, a));
            for b in words {
                assert_eq!(
                    two_way_substring_match(a, b),
                    two_way_substring_match(b, a)
                );
            }
        }
    }

    #[test]
    fn parse_and_round_trip() {
        let src = "#name=demo\n#type=drug\n#polarity=positive\n#provenance=manual\naspirin\nfish oil\t0.5\tomega\n";
        let lex = parse_lexicon(src, "test").unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("Fish Oil"));
        assert_eq!(lex.terms["fish oil"].weight, Some(0.5));
        assert_eq!(lex.terms["fish oil"].neighbors_of.as_deref(), Some("omega"));

        let rendered = lexicon_to_string(&lex);
        let again = parse_lexicon(&rendered, "round-trip").unwrap();
        assert_eq!(again.terms, lex.terms);
        assert_eq!(again.semantic_type, lex.semantic_type);
        assert_eq!(again.polarity, lex.polarity);
    }

    #[test]
    fn missing_type_header_rejected() {
        let src = "#name=demo\naspirin\n";
        assert!(matches!(
            parse_lexicon(src, "test"),
            Err(LexiconError::BadHeader(_))
        ));
    }

    #[test]
    fn duplicates_deduplicated() {
        let src = "#name=demo\n#type=drug\naspirin\nAspirin\n";
        let lex = parse_lexicon(src, "test").unwrap();
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn five_gram_rejected() {
        let src = "#name=demo\n#type=drug\none two three four five\n";
        assert!(matches!(
            parse_lexicon(src, "test"),
            Err(LexiconError::TermTooLong(_))
        ));
    }

    fn entity(surface: &str) -> Entity {
        Entity {
            start: 0,
            end: surface.len(),
            surface: surface.to_string(),
            semantic_type: SemanticType::Treatment,
            source_lexicon: "test".into(),
            matched_term: surface.to_lowercase(),
            assertion: crate::textproc::AssertionStatus::Present,
            section: crate::textproc::SectionKind::Other,
            sentence: 0,
            token_range: (0, 1),
            attached_drug: None,
            dose_value: None,
        }
    }

    #[test]
    fn match_lexicon_modes() {
        let mut lex = Lexicon::new("supp", SemanticType::Treatment, Polarity::Positive, Provenance::Manual);
        lex.insert(LexTerm::new("ginkgo"));
        lex.insert(LexTerm::new("fish oil"));
        let entities = vec![entity("ginkgo biloba"), entity("Fish Oil"), entity("zinc")];
        let exact = match_lexicon(&entities, &lex, MatchMode::Exact);
        assert_eq!(exact.len(), 1);
        assert_eq!(exact[0].surface, "Fish Oil");
        let substring = match_lexicon(&entities, &lex, MatchMode::TwoWaySubstring);
        assert_eq!(substring.len(), 2);
        // Exact matches are always a subset of substring matches.
        for e in &exact {
            assert!(substring.iter().any(|s| s.surface == e.surface));
        }
    }

    #[test]
    fn short_terms_require_equality_in_substring_mode() {
        // "aa" is shorter than MIN_SUBSTRING_LEN: containment must not fire.
        assert!(!surface_matches("aargh", "aa", MatchMode::TwoWaySubstring, 3));
        assert!(surface_matches("AA", "aa", MatchMode::TwoWaySubstring, 3));
        assert!(!surface_matches("irony", "iron", MatchMode::TwoWaySubstring, 5));
        assert!(surface_matches("irony", "iron", MatchMode::TwoWaySubstring, 3));
    }
}
