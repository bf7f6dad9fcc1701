//! NegEx-style assertion detection over trigger-word lists.
//!
//! Priority when several cues apply: Absent > Family > Hypothetical >
//! Historical > Present. Scope is six tokens before / after the entity,
//! clipped to the sentence.

use super::{AssertionStatus, SectionKind, Sentence, Token};

/// Trigger scope: NegEx-style six-token window on either side of the entity.
pub const SCOPE_TOKENS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerCategory {
    NegPre,
    NegPost,
    Hypothetical,
    Kinship,
    HistoricalPre,
    Cessation,
}

impl TriggerCategory {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neg_pre" => Some(TriggerCategory::NegPre),
            "neg_post" => Some(TriggerCategory::NegPost),
            "hypothetical" => Some(TriggerCategory::Hypothetical),
            "kinship" => Some(TriggerCategory::Kinship),
            "historical_pre" => Some(TriggerCategory::HistoricalPre),
            "cessation" => Some(TriggerCategory::Cessation),
            _ => None,
        }
    }
}

/// Trigger phrases, pre-tokenized (lowercase) per category.
#[derive(Debug, Clone, Default)]
pub struct TriggerSet {
    neg_pre: Vec<Vec<String>>,
    neg_post: Vec<Vec<String>>,
    hypothetical: Vec<Vec<String>>,
    kinship: Vec<Vec<String>>,
    historical_pre: Vec<Vec<String>>,
    cessation: Vec<Vec<String>>,
}

impl TriggerSet {
    /// Parse `surface<TAB>category` lines; '#' lines are comments.
    pub fn parse(source: &str) -> Self {
        let mut set = TriggerSet::default();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((surface, cat)) = line.split_once('\t') else {
                continue;
            };
            let Some(cat) = TriggerCategory::parse(cat) else {
                log::warn!("unknown trigger category in line {line:?}");
                continue;
            };
            let toks: Vec<String> = super::tokenize::tokenize(surface)
                .into_iter()
                .map(|t| t.text.to_lowercase())
                .collect();
            if toks.is_empty() {
                continue;
            }
            match cat {
                TriggerCategory::NegPre => set.neg_pre.push(toks),
                TriggerCategory::NegPost => set.neg_post.push(toks),
                TriggerCategory::Hypothetical => set.hypothetical.push(toks),
                TriggerCategory::Kinship => set.kinship.push(toks),
                TriggerCategory::HistoricalPre => set.historical_pre.push(toks),
                TriggerCategory::Cessation => set.cessation.push(toks),
            }
        }
        set
    }

    pub fn is_empty(&self) -> bool {
        self.neg_pre.is_empty() && self.neg_post.is_empty()
    }
}

fn window_contains(tokens: &[Token], range: (usize, usize), phrases: &[Vec<String>]) -> bool {
    let (lo, hi) = range;
    if lo >= hi {
        return false;
    }
    let lowered: Vec<String> = tokens[lo..hi].iter().map(|t| t.text.to_lowercase()).collect();
    phrases.iter().any(|p| {
        !p.is_empty()
            && p.len() <= lowered.len()
            && lowered.windows(p.len()).any(|w| w == p.as_slice())
    })
}

/// Decide the assertion status of an entity spanning tokens
/// `[ent_start, ent_end)` inside `sentence`.
pub fn detect_assertion(
    tokens: &[Token],
    sentence: &Sentence,
    ent_start: usize,
    ent_end: usize,
    section: SectionKind,
    triggers: &TriggerSet,
) -> AssertionStatus {
    let (s_lo, s_hi) = sentence.token_range;
    let pre = (ent_start.saturating_sub(SCOPE_TOKENS).max(s_lo), ent_start);
    let post = (ent_end, (ent_end + SCOPE_TOKENS).min(s_hi));

    if window_contains(tokens, pre, &triggers.neg_pre)
        || window_contains(tokens, post, &triggers.neg_post)
    {
        return AssertionStatus::Absent;
    }
    if section == SectionKind::FamilyHistory
        || window_contains(tokens, (s_lo, s_hi), &triggers.kinship)
    {
        return AssertionStatus::Family;
    }
    if window_contains(tokens, pre, &triggers.hypothetical) {
        return AssertionStatus::Hypothetical;
    }
    if section == SectionKind::PastMedicalHistory
        || window_contains(tokens, pre, &triggers.historical_pre)
        || window_contains(tokens, pre, &triggers.cessation)
        || window_contains(tokens, post, &triggers.cessation)
    {
        return AssertionStatus::Historical;
    }
    AssertionStatus::Present
}
