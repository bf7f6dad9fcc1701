//! Dictionary-based entity tagging and dosage extraction.

use std::collections::HashMap;

use super::assertion::{detect_assertion, TriggerSet};
use super::sections::section_of_sentence;
use super::{Entity, Section, SemanticType, Sentence, Token};
use crate::lexicon::Lexicon;

fn term_tokens(term: &str) -> Vec<String> {
    super::tokenize::tokenize(term)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

/// Tag entities by longest-match, case-insensitive n-gram lookup over token
/// sequences. Overlaps are resolved longest-first then leftmost, per lexicon;
/// entities from different lexicons may overlap. Every entity carries its
/// section kind and assertion status.
pub fn tag_entities(
    text: &str,
    tokens: &[Token],
    sentences: &[Sentence],
    sections: &[Section],
    lexicons: &[&Lexicon],
    triggers: &TriggerSet,
) -> Vec<Entity> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let mut entities = Vec::new();

    for lexicon in lexicons {
        // Index term token sequences by first token.
        let mut by_first: HashMap<String, Vec<(Vec<String>, &str)>> = HashMap::new();
        for term in lexicon.iter() {
            let toks = term_tokens(&term.text);
            if toks.is_empty() {
                continue;
            }
            by_first
                .entry(toks[0].clone())
                .or_default()
                .push((toks, term.text.as_str()));
        }
        // Longest candidates first so greedy acceptance below is longest-match.
        for cands in by_first.values_mut() {
            cands.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(b.1)));
        }

        let mut matches: Vec<(usize, usize, &str)> = Vec::new();
        for (sent_idx, sentence) in sentences.iter().enumerate() {
            let (lo, hi) = sentence.token_range;
            let _ = sent_idx;
            for i in lo..hi {
                let Some(cands) = by_first.get(lowered[i].as_str()) else {
                    continue;
                };
                for (toks, term) in cands {
                    let j = i + toks.len();
                    if j <= hi && lowered[i..j] == toks[..] {
                        matches.push((i, j, term));
                    }
                }
            }
        }
        // Longest-first, then leftmost; drop overlaps within this lexicon.
        matches.sort_by(|a, b| {
            (b.1 - b.0)
                .cmp(&(a.1 - a.0))
                .then(a.0.cmp(&b.0))
                .then(a.2.cmp(b.2))
        });
        let mut taken: Vec<(usize, usize)> = Vec::new();
        for (i, j, term) in matches {
            if taken.iter().any(|&(a, b)| i < b && a < j) {
                continue;
            }
            taken.push((i, j));
            let sent_idx = sentences
                .iter()
                .position(|s| s.token_range.0 <= i && i < s.token_range.1)
                .expect("match lies in a sentence");
            let sentence = &sentences[sent_idx];
            let section = section_of_sentence(sections, sent_idx);
            let start = tokens[i].start;
            let end = tokens[j - 1].end;
            let assertion = detect_assertion(tokens, sentence, i, j, section, triggers);
            entities.push(Entity {
                start,
                end,
                surface: text[start..end].to_string(),
                semantic_type: lexicon.semantic_type,
                source_lexicon: lexicon.name.clone(),
                matched_term: term.to_string(),
                assertion,
                section,
                sentence: sent_idx,
                token_range: (i, j),
                attached_drug: None,
                dose_value: None,
            });
        }
    }
    entities.sort_by_key(|e| (e.start, e.end));
    entities
}

const DOSE_UNITS: &[&str] = &["mg", "mcg", "g", "ml", "units", "unit", "tabs", "tab"];

fn parse_fused_dose(tok: &str) -> Option<(f64, usize)> {
    // "81mg" -> (81.0, split point)
    let split = tok.find(|c: char| c.is_ascii_alphabetic())?;
    let (num, unit) = tok.split_at(split);
    if DOSE_UNITS.contains(&unit.to_lowercase().as_str()) {
        num.parse::<f64>().ok().map(|v| (v, split))
    } else {
        None
    }
}

/// Extract dosage mentions (number + dose unit) and attach each to the
/// nearest preceding Drug entity within five tokens in the same sentence.
/// Returned entities reference attachment targets by index into `entities`.
pub fn extract_dosages(
    text: &str,
    tokens: &[Token],
    sentences: &[Sentence],
    sections: &[Section],
    entities: &[Entity],
    triggers: &TriggerSet,
) -> Vec<Entity> {
    let mut dosages = Vec::new();
    for (sent_idx, sentence) in sentences.iter().enumerate() {
        let (lo, hi) = sentence.token_range;
        let mut i = lo;
        while i < hi {
            let tok = &tokens[i].text;
            let mut found: Option<(usize, usize, f64)> = None; // token span + value
            if let Ok(v) = tok.parse::<f64>() {
                if i + 1 < hi && DOSE_UNITS.contains(&tokens[i + 1].text.to_lowercase().as_str())
                {
                    found = Some((i, i + 2, v));
                }
            }
            if found.is_none() {
                if let Some((v, _)) = parse_fused_dose(tok) {
                    found = Some((i, i + 1, v));
                }
            }
            let Some((ti, tj, value)) = found else {
                i += 1;
                continue;
            };
            if value < 0.0 || !value.is_finite() {
                i = tj;
                continue;
            }
            // Nearest preceding drug in scope.
            let attached = entities
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    e.semantic_type == SemanticType::Drug
                        && e.sentence == sent_idx
                        && e.token_range.1 <= ti
                        && ti - e.token_range.1 <= 5
                })
                .max_by_key(|(_, e)| e.token_range.1)
                .map(|(idx, _)| idx);
            let start = tokens[ti].start;
            let end = tokens[tj - 1].end;
            let section = section_of_sentence(sections, sent_idx);
            let assertion = detect_assertion(tokens, sentence, ti, tj, section, triggers);
            dosages.push(Entity {
                start,
                end,
                surface: text[start..end].to_string(),
                semantic_type: SemanticType::Dosage,
                source_lexicon: "dosage".to_string(),
                matched_term: text[start..end].to_lowercase(),
                assertion,
                section,
                sentence: sent_idx,
                token_range: (ti, tj),
                attached_drug: attached,
                dose_value: Some(value),
            });
            i = tj;
        }
    }
    dosages
}
