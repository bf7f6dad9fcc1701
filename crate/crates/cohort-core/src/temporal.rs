//! Temporal expressions: extraction, anchoring to note dates, and window
//! checks against the record's present day.

use std::sync::OnceLock;

use chrono::{Datelike, Days, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::record::CriterionId;
use crate::textproc::{AssertionStatus, SectionKind};

/// Kind of temporal expression, with the data needed to resolve it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimexKind {
    AbsoluteDate {
        date: NaiveDate,
    },
    /// Partial date such as "3/78" (month + two-digit year) or "4/12/78".
    PartialDate {
        month: u32,
        day: Option<u32>,
        yy: u32,
    },
    /// "N months ago", "last week", "yesterday"; weeks normalized to days,
    /// years to months.
    RelativeOffset {
        days: i64,
        months: i64,
    },
    /// "years ago", "remote history": never resolves.
    VagueHistory,
}

/// A temporal expression with byte span into the note text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timex {
    pub start: usize,
    pub end: usize,
    pub kind: TimexKind,
    pub resolved: Option<NaiveDate>,
    pub raw: String,
}

/// Look-back window for a temporal criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalWindow {
    pub length_months: u32,
    pub criterion: CriterionId,
}

fn last_day_of_month(year: i32, month: u32) -> u32 {
    for d in [31, 30, 29, 28] {
        if NaiveDate::from_ymd_opt(year, month, d).is_some() {
            return d;
        }
    }
    unreachable!("every month has at least 28 days")
}

/// Calendar-aware month shift; day-of-month clamps to the target month.
pub fn shift_months(date: NaiveDate, delta_months: i64) -> NaiveDate {
    let total = date.year() as i64 * 12 + (date.month() as i64 - 1) + delta_months;
    let year = total.div_euclid(12) as i32;
    let month = (total.rem_euclid(12) + 1) as u32;
    let day = date.day().min(last_day_of_month(year, month));
    NaiveDate::from_ymd_opt(year, month, day).expect("clamped day is valid")
}

struct Patterns {
    mdy4: Regex,
    iso: Regex,
    month_name: Regex,
    mdy2: Regex,
    myy: Regex,
    rel: Regex,
    rel_bounded: Regex,
    last: Regex,
    yesterday: Regex,
    vague: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        mdy4: Regex::new(r"\b(\d{1,2})/(\d{1,2})/(\d{4})\b").unwrap(),
        iso: Regex::new(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b").unwrap(),
        month_name: Regex::new(
            r"(?i)\b(january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sep|sept|oct|nov|dec)\.?\s+(?:(\d{1,2})(?:st|nd|rd|th)?,?\s+)?(\d{4})\b",
        )
        .unwrap(),
        mdy2: Regex::new(r"\b(\d{1,2})/(\d{1,2})/(\d{2})\b").unwrap(),
        myy: Regex::new(r"\b(\d{1,2})/(\d{2})\b").unwrap(),
        rel: Regex::new(
            r"(?i)\b(\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|an?)\s+(day|week|month|year)s?\s+ago\b",
        )
        .unwrap(),
        rel_bounded: Regex::new(
            r"(?i)\b(?:in|within|over|during)\s+the\s+(?:past|last)\s+(?:(\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\s+)?(day|week|month|year)s?\b",
        )
        .unwrap(),
        last: Regex::new(r"(?i)\blast\s+(week|month|year)\b").unwrap(),
        yesterday: Regex::new(r"(?i)\byesterday\b").unwrap(),
        vague: Regex::new(
            r"(?i)\b(?:(?:several|many|few|a few|some)\s+(?:days|weeks|months|years)\s+(?:ago|prior|back)|years\s+ago|years\s+prior|remote\s+history|distant\s+past|in\s+the\s+past|long\s+ago)\b",
        )
        .unwrap(),
    })
}

fn month_number(name: &str) -> u32 {
    match &name.to_lowercase()[..3] {
        "jan" => 1,
        "feb" => 2,
        "mar" => 3,
        "apr" => 4,
        "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => 0,
    }
}

fn word_number(w: &str) -> Option<i64> {
    match w.to_lowercase().as_str() {
        "a" | "an" | "one" => Some(1),
        "two" => Some(2),
        "three" => Some(3),
        "four" => Some(4),
        "five" => Some(5),
        "six" => Some(6),
        "seven" => Some(7),
        "eight" => Some(8),
        "nine" => Some(9),
        "ten" => Some(10),
        "eleven" => Some(11),
        "twelve" => Some(12),
        other => other.parse::<i64>().ok(),
    }
}

fn offset_kind(n: i64, unit: &str) -> TimexKind {
    match unit.to_lowercase().as_str() {
        "day" => TimexKind::RelativeOffset { days: n, months: 0 },
        "week" => TimexKind::RelativeOffset { days: 7 * n, months: 0 },
        "month" => TimexKind::RelativeOffset { days: 0, months: n },
        _ => TimexKind::RelativeOffset { days: 0, months: 12 * n },
    }
}

/// Extract temporal expressions from a sentence. Spans are byte offsets into
/// `text`; overlaps resolve earliest-start then longest-match.
pub fn extract_timexes(text: &str) -> Vec<Timex> {
    let p = patterns();
    // (start, end, kind); collected per pattern, most specific first.
    let mut found: Vec<(usize, usize, TimexKind)> = Vec::new();

    for c in p.mdy4.captures_iter(text) {
        let m = c.get(0).unwrap();
        let (mm, dd, yy): (u32, u32, i32) =
            (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap());
        if let Some(date) = NaiveDate::from_ymd_opt(yy, mm, dd) {
            found.push((m.start(), m.end(), TimexKind::AbsoluteDate { date }));
        }
    }
    for c in p.iso.captures_iter(text) {
        let m = c.get(0).unwrap();
        let (yy, mm, dd): (i32, u32, u32) =
            (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap());
        if let Some(date) = NaiveDate::from_ymd_opt(yy, mm, dd) {
            found.push((m.start(), m.end(), TimexKind::AbsoluteDate { date }));
        }
    }
    for c in p.month_name.captures_iter(text) {
        let m = c.get(0).unwrap();
        let month = month_number(&c[1]);
        let day: u32 = c.get(2).map(|d| d.as_str().parse().unwrap()).unwrap_or(1);
        let year: i32 = c[3].parse().unwrap();
        if let Some(date) = NaiveDate::from_ymd_opt(year, month, day) {
            found.push((m.start(), m.end(), TimexKind::AbsoluteDate { date }));
        }
    }
    for c in p.mdy2.captures_iter(text) {
        let m = c.get(0).unwrap();
        let (mm, dd, yy): (u32, u32, u32) =
            (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap());
        if (1..=12).contains(&mm) && (1..=31).contains(&dd) {
            found.push((
                m.start(),
                m.end(),
                TimexKind::PartialDate { month: mm, day: Some(dd), yy },
            ));
        }
    }
    for c in p.myy.captures_iter(text) {
        let m = c.get(0).unwrap();
        let (mm, yy): (u32, u32) = (c[1].parse().unwrap(), c[2].parse().unwrap());
        // Two-digit tail below 32 is ambiguous with a day-of-month; skip it.
        if (1..=12).contains(&mm) && yy >= 32 {
            found.push((m.start(), m.end(), TimexKind::PartialDate { month: mm, day: None, yy }));
        }
    }
    for c in p.rel.captures_iter(text) {
        let m = c.get(0).unwrap();
        if let Some(n) = word_number(&c[1]) {
            found.push((m.start(), m.end(), offset_kind(n, &c[2])));
        }
    }
    for c in p.rel_bounded.captures_iter(text) {
        let m = c.get(0).unwrap();
        let n = c.get(1).and_then(|w| word_number(w.as_str())).unwrap_or(1);
        found.push((m.start(), m.end(), offset_kind(n, &c[2])));
    }
    for c in p.last.captures_iter(text) {
        let m = c.get(0).unwrap();
        found.push((m.start(), m.end(), offset_kind(1, &c[1])));
    }
    for m in p.yesterday.find_iter(text) {
        found.push((m.start(), m.end(), TimexKind::RelativeOffset { days: 1, months: 0 }));
    }
    for m in p.vague.find_iter(text) {
        found.push((m.start(), m.end(), TimexKind::VagueHistory));
    }

    // Pattern priority is insertion order; earliest-start then longest wins.
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..found.len()).collect();
        idx.sort_by(|&a, &b| {
            found[a]
                .0
                .cmp(&found[b].0)
                .then(found[b].1.cmp(&found[a].1))
                .then(a.cmp(&b))
        });
        idx
    };
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut timexes = Vec::new();
    for i in order {
        let (s, e, ref kind) = found[i];
        if taken.iter().any(|&(a, b)| s < b && a < e) {
            continue;
        }
        taken.push((s, e));
        timexes.push(Timex {
            start: s,
            end: e,
            kind: kind.clone(),
            resolved: None,
            raw: text[s..e].to_string(),
        });
    }
    timexes.sort_by_key(|t| t.start);
    timexes
}

/// Resolve a timex against its note's record date. Partial dates pick the
/// century among {19xx, 20xx, 21xx} closest to the anchor, ties to the
/// earlier century. Vague history never resolves.
pub fn resolve(timex: &Timex, anchor: NaiveDate) -> Option<NaiveDate> {
    match &timex.kind {
        TimexKind::AbsoluteDate { date } => Some(*date),
        TimexKind::PartialDate { month, day, yy } => {
            let mut best: Option<(i64, NaiveDate)> = None;
            for century in [1900, 2000, 2100] {
                let year = century + *yy as i32;
                let d = day.unwrap_or(1).min(last_day_of_month(year, *month));
                let Some(date) = NaiveDate::from_ymd_opt(year, *month, d) else {
                    continue;
                };
                let dist = (date - anchor).num_days().abs();
                // Strict comparison keeps the earlier century on ties.
                if best.map(|(b, _)| dist < b).unwrap_or(true) {
                    best = Some((dist, date));
                }
            }
            best.map(|(_, d)| d)
        }
        TimexKind::RelativeOffset { days, months } => {
            let shifted = shift_months(anchor, -months);
            if *days >= 0 {
                shifted.checked_sub_days(Days::new(*days as u64))
            } else {
                shifted.checked_add_days(Days::new((-days) as u64))
            }
        }
        TimexKind::VagueHistory => None,
    }
}

/// How a mention is dated for window checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDating {
    /// No timex in the sentence: the mention inherits the note date.
    NoTimex,
    /// A vague-history timex: the mention is discarded.
    Vague,
    Resolved(NaiveDate),
}

/// Window test used by the temporal criteria. A mention counts only when its
/// assertion is Present, it is outside the past-medical-history section, and
/// its date (resolved timex, else note date) falls within `window` months
/// before the present day.
pub fn within_window(
    dating: EventDating,
    section: SectionKind,
    assertion: AssertionStatus,
    note_date: NaiveDate,
    present_day: NaiveDate,
    window: TemporalWindow,
) -> bool {
    if assertion != AssertionStatus::Present {
        return false;
    }
    if section == SectionKind::PastMedicalHistory {
        return false;
    }
    let cutoff = shift_months(present_day, -(window.length_months as i64));
    match dating {
        EventDating::Vague => false,
        EventDating::Resolved(d) => d >= cutoff,
        EventDating::NoTimex => note_date >= cutoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn first(text: &str) -> Timex {
        extract_timexes(text).into_iter().next().expect("timex found")
    }

    fn window(months: u32) -> TemporalWindow {
        TemporalWindow {
            length_months: months,
            criterion: CriterionId::Mi6mos,
        }
    }

    #[test]
    fn nine_months_ago_case() {
        let tx = first("patient had MI 9 months ago per report");
        assert_eq!(tx.kind, TimexKind::RelativeOffset { days: 0, months: 9 });
        assert_eq!(resolve(&tx, date(2089, 11, 15)), Some(date(2089, 2, 15)));
    }

    #[test]
    fn partial_date_closest_century() {
        let tx = first("MI in 3/78");
        assert_eq!(tx.kind, TimexKind::PartialDate { month: 3, day: None, yy: 78 });
        assert_eq!(resolve(&tx, date(2078, 6, 1)), Some(date(2078, 3, 1)));
        // Anchor in the 1990s pulls the same text to 1978.
        assert_eq!(resolve(&tx, date(1990, 6, 1)), Some(date(1978, 3, 1)));
    }

    #[test]
    fn month_end_clamps() {
        let tx = Timex {
            start: 0,
            end: 0,
            kind: TimexKind::RelativeOffset { days: 0, months: 1 },
            resolved: None,
            raw: String::new(),
        };
        assert_eq!(resolve(&tx, date(2080, 3, 31)), Some(date(2080, 2, 29)));
        assert_eq!(resolve(&tx, date(2081, 3, 31)), Some(date(2081, 2, 28)));
    }

    #[test]
    fn vague_never_resolves() {
        for text in ["years ago", "remote history of MI", "several months ago"] {
            let tx = first(text);
            assert_eq!(tx.kind, TimexKind::VagueHistory, "{text}");
            assert_eq!(resolve(&tx, date(2089, 1, 1)), None);
        }
    }

    #[test]
    fn absolute_formats() {
        assert_eq!(
            first("on 11/15/2089.").kind,
            TimexKind::AbsoluteDate { date: date(2089, 11, 15) }
        );
        assert_eq!(
            first("on 2089-11-15.").kind,
            TimexKind::AbsoluteDate { date: date(2089, 11, 15) }
        );
        assert_eq!(
            first("September 10, 2074 visit").kind,
            TimexKind::AbsoluteDate { date: date(2074, 9, 10) }
        );
        assert_eq!(
            first("in March 2074").kind,
            TimexKind::AbsoluteDate { date: date(2074, 3, 1) }
        );
    }

    #[test]
    fn two_digit_year_slash_forms() {
        assert_eq!(
            first("seen 4/12/78 in clinic").kind,
            TimexKind::PartialDate { month: 4, day: Some(12), yy: 78 }
        );
        // 3/15 is ambiguous with a day-of-month: skipped.
        assert!(extract_timexes("ratio 3/15 stable").is_empty());
    }

    #[test]
    fn relative_word_numbers_and_last() {
        assert_eq!(
            first("two weeks ago").kind,
            TimexKind::RelativeOffset { days: 14, months: 0 }
        );
        assert_eq!(
            first("last year he was well").kind,
            TimexKind::RelativeOffset { days: 0, months: 12 }
        );
        assert_eq!(
            first("seen yesterday").kind,
            TimexKind::RelativeOffset { days: 1, months: 0 }
        );
    }

    #[test]
    fn numeric_relative_beats_vague_overlap() {
        let txs = extract_timexes("MI 3 years ago");
        assert_eq!(txs.len(), 1);
        assert_eq!(txs[0].kind, TimexKind::RelativeOffset { days: 0, months: 36 });
    }

    #[test]
    fn bounded_past_phrase_is_relative_not_vague() {
        let txs = extract_timexes("angioplasty in the past 2 months");
        assert_eq!(txs.len(), 1);
        assert_eq!(txs[0].kind, TimexKind::RelativeOffset { days: 0, months: 2 });
        // Bare "in the past" stays vague.
        assert_eq!(first("happened in the past.").kind, TimexKind::VagueHistory);
    }

    #[test]
    fn partial_year_candidates() {
        let tx = first("9/45");
        for anchor in [date(1950, 1, 1), date(2040, 6, 15), date(2130, 12, 31)] {
            let resolved = resolve(&tx, anchor).unwrap();
            assert!([1945, 2045, 2145].contains(&resolved.year()));
            assert_eq!(resolved.month(), 9);
            assert_eq!(resolved.day(), 1);
        }
    }

    #[test]
    fn resolve_monotone_in_anchor_for_relative() {
        let tx = Timex {
            start: 0,
            end: 0,
            kind: TimexKind::RelativeOffset { days: 3, months: 7 },
            resolved: None,
            raw: String::new(),
        };
        let mut anchors: Vec<NaiveDate> = Vec::new();
        let mut d = date(2079, 1, 1);
        for _ in 0..500 {
            anchors.push(d);
            d = d.succ_opt().unwrap();
        }
        let mut prev = None;
        for a in anchors {
            let r = resolve(&tx, a).unwrap();
            if let Some(p) = prev {
                assert!(r >= p, "resolve not monotone at {a}");
            }
            prev = Some(r);
        }
    }

    #[test]
    fn within_window_rules() {
        let present = date(2089, 11, 1);
        let w = window(6);
        // Two months back: inside.
        assert!(within_window(
            EventDating::Resolved(date(2089, 9, 1)),
            SectionKind::Other,
            AssertionStatus::Present,
            present,
            present,
            w
        ));
        // PMH section: discarded.
        assert!(!within_window(
            EventDating::Resolved(date(2089, 9, 1)),
            SectionKind::PastMedicalHistory,
            AssertionStatus::Present,
            present,
            present,
            w
        ));
        // Absent assertion: discarded.
        assert!(!within_window(
            EventDating::NoTimex,
            SectionKind::Other,
            AssertionStatus::Absent,
            present,
            present,
            w
        ));
        // Note eight months old, no timex: outside.
        assert!(!within_window(
            EventDating::NoTimex,
            SectionKind::Other,
            AssertionStatus::Present,
            date(2089, 3, 1),
            present,
            w
        ));
        // Vague: discarded even in-window.
        assert!(!within_window(
            EventDating::Vague,
            SectionKind::Other,
            AssertionStatus::Present,
            present,
            present,
            w
        ));
    }

    #[test]
    fn window_antitone_in_event_age() {
        let present = date(2089, 11, 1);
        let w = window(6);
        let mut last = true;
        let mut d = present;
        for _ in 0..400 {
            let now = within_window(
                EventDating::Resolved(d),
                SectionKind::Other,
                AssertionStatus::Present,
                present,
                present,
                w,
            );
            // Once false (too old), it stays false as the event moves older.
            assert!(last || !now);
            last = now;
            d = d.pred_opt().unwrap();
        }
        assert!(!last);
    }
}
