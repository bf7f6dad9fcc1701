//! Synthetic corpora: a 20-patient record set whose gold labels are fixed by
//! construction (every rule path exercised), and planted-discriminator
//! corpora for exercising the lexicon-curation pipeline. The real challenge
//! data is access-restricted, so these stand in for it.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::record::{ClinicalNote, CriterionId, Label, PatientRecord};

/// One generated patient: record-file bytes plus its by-construction gold.
pub struct SynthPatient {
    pub id: String,
    pub xml: Vec<u8>,
    pub gold: BTreeMap<CriterionId, Label>,
}

struct PatientSpec {
    /// Criteria that are Met; everything else defaults (English and
    /// Makes-Decisions met, the rest not met).
    met: &'static [CriterionId],
    not_met_defaults: &'static [CriterionId],
    /// Note bodies oldest-first; the last is the present-day note.
    notes: [&'static str; 3],
}

fn full_gold(spec: &PatientSpec) -> BTreeMap<CriterionId, Label> {
    let mut gold = BTreeMap::new();
    for id in CriterionId::ALL {
        let default_met = matches!(id, CriterionId::English | CriterionId::MakesDecisions);
        let value = if spec.met.contains(&id) {
            Label::Met
        } else if spec.not_met_defaults.contains(&id) {
            Label::NotMet
        } else if default_met {
            Label::Met
        } else {
            Label::NotMet
        };
        gold.insert(id, value);
    }
    gold
}

const FILLER_OLD: &str = "Patient seen in clinic for routine follow-up.\nVital signs within normal limits.";
const FILLER_MID: &str = "Interval visit. Doing well overall.\nPlan reviewed with patient.";
const FILLER_NEW: &str = "Seen today for scheduled visit.\nContinue current regimen.";

use CriterionId::*;

fn roster() -> Vec<PatientSpec> {
    vec![
        // synth-00: pure defaults.
        PatientSpec {
            met: &[],
            not_met_defaults: &[],
            notes: [FILLER_OLD, FILLER_MID, FILLER_NEW],
        },
        // synth-01: abdominal surgery in PMH; supplement only in the oldest
        // note (outside the two-month window).
        PatientSpec {
            met: &[Abdominal],
            not_met_defaults: &[Dietsupp2mos],
            notes: [
                "Medications:\nginkgo biloba daily\n\nPlan reviewed with patient.",
                FILLER_MID,
                "Past Medical History:\ns/p appendectomy in childhood.\n\nSeen today for scheduled visit.",
            ],
        },
        // synth-02: the same abdominal phrase outside PMH/HPI does not count.
        PatientSpec {
            met: &[],
            not_met_defaults: &[Abdominal],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Seen today for scheduled visit.\n\nAssessment:\nsmall bowel obstruction suspected, imaging ordered.",
            ],
        },
        // synth-03: ischemia plus recent MI (two sub-criteria, and the MI is
        // inside the six-month window); negated drug abuse stays out.
        PatientSpec {
            met: &[AdvancedCad, Mi6mos],
            not_met_defaults: &[DrugAbuse],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "History of Present Illness:\nReversible defect on stress testing, consistent with ongoing ischemia.\nSuffered NSTEMI 2 months ago.\nDenies drug abuse.",
            ],
        },
        // synth-04: angina mentioned, then negated later in the same (most
        // recent) note.
        PatientSpec {
            met: &[],
            not_met_defaults: &[AdvancedCad],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Reported angina early this morning.\nNo further angina after medication adjustment.\nContinue current regimen.",
            ],
        },
        // synth-05: MI only in past medical history: discarded for MI-6mos.
        PatientSpec {
            met: &[],
            not_met_defaults: &[Mi6mos, AdvancedCad],
            notes: [
                FILLER_OLD,
                "Past Medical History:\nMyocardial infarction in 2085.\n\nInterval visit. Doing well overall.",
                FILLER_NEW,
            ],
        },
        // synth-06: family concern about drinking; prescribed oxycodone (with
        // dosage) is not drug abuse; A1c at the inclusive lower bound.
        PatientSpec {
            met: &[AlcoholAbuse, Hba1c],
            not_met_defaults: &[DrugAbuse],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "His wife is concerned about his drinking.\nOxycodone 5 mg prn for back pain.\n\nLabs:\nA1C: 6.5",
            ],
        },
        // synth-07: past cocaine use meets drug abuse; ceased drinking does
        // not meet alcohol abuse.
        PatientSpec {
            met: &[DrugAbuse],
            not_met_defaults: &[AlcoholAbuse],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "SOCIAL HISTORY\nHistory of cocaine use.\nQuit drinking in 2080.\n\nSeen today for scheduled visit.",
            ],
        },
        // synth-08: interpreter request flips English.
        PatientSpec {
            met: &[],
            not_met_defaults: &[English],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Spanish interpreter requested for today's visit.\nContinue current regimen.",
            ],
        },
        // synth-09: non-English language with a spoken cue; heavy drinking in
        // social history.
        PatientSpec {
            met: &[AlcoholAbuse],
            not_met_defaults: &[English],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "SOCIAL HISTORY\nPatient is Spanish speaking only.\nDrinks heavily on weekends.",
            ],
        },
        // synth-10: dementia flips decision capacity; negated interpreter
        // leaves English met.
        PatientSpec {
            met: &[],
            not_met_defaults: &[MakesDecisions],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Advanced dementia with worsening confusion.\nNo interpreter needed.",
            ],
        },
        // synth-11: psychomotor retardation does not count against decision
        // capacity; attending AA meets alcohol abuse.
        PatientSpec {
            met: &[AlcoholAbuse],
            not_met_defaults: &[],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Psychomotor retardation noted on exam.\nAttends AA meetings weekly.",
            ],
        },
        // synth-12: retinopathy meets major diabetes; in-range A1c.
        PatientSpec {
            met: &[MajorDiabetes, Hba1c],
            not_met_defaults: &[],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "History of Present Illness:\nDiabetic retinopathy noted on ophthalmology exam.\n\nLabs:\nHbA1c: 7.2",
            ],
        },
        // synth-13: A1c above the band; positive urine ketones meet Keto-1yr.
        PatientSpec {
            met: &[Keto1yr],
            not_met_defaults: &[Hba1c],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "Labs:\nHbA1c: 9.6\nUA: ketones positive",
            ],
        },
        // synth-14: aspirin plus MI symptoms meet ASP-for-MI; creatinine over
        // the male limit plus margin; nephropathy only in family history.
        PatientSpec {
            met: &[AspForMi, Creatinine],
            not_met_defaults: &[MajorDiabetes],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "He reports intermittent pain radiating to arm.\n\nFAMILY HISTORY: nephropathy\n\nMedications:\nAspirin 325 mg daily\n\nLabs:\nCreatinine 2.5",
            ],
        },
        // synth-15: urine creatinine ignored; serum value normal; negative
        // ketones not flagged.
        PatientSpec {
            met: &[],
            not_met_defaults: &[Creatinine, Keto1yr],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "URINALYSIS:\nurine creatinine 150\nUA: ketones negative\n\nLabs:\nCreatinine 1.1",
            ],
        },
        // synth-16: CAD diagnosis with two CAD medications plus current
        // angina (two sub-criteria); creatinine above the in-note range.
        PatientSpec {
            met: &[AdvancedCad, Creatinine],
            not_met_defaults: &[],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "History of Present Illness:\nKnown CAD, continues to have exertional angina.\n\nMedications:\nmetoprolol 50 mg bid\nlisinopril 10 mg daily\n\nLabs:\nCreatinine 1.5 (0.5-1.4)",
            ],
        },
        // synth-17: fish oil in the window; female creatinine limit applies.
        PatientSpec {
            met: &[Dietsupp2mos, Creatinine],
            not_met_defaults: &[],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "She reports feeling well.\n\nMedications:\nfish oil 1000 mg daily\n\nLabs:\nCreatinine 1.65",
            ],
        },
        // synth-18: recent DKA meets Keto-1yr; Vitamin D alone does not meet
        // DietSupp.
        PatientSpec {
            met: &[Keto1yr],
            not_met_defaults: &[Dietsupp2mos],
            notes: [
                FILLER_OLD,
                FILLER_MID,
                "History of Present Illness:\nAdmitted with DKA two weeks ago.\n\nMedications:\nVitamin D 1000 units daily",
            ],
        },
        // synth-19: aspirin plus an MI history meets ASP-for-MI; the PMH MI
        // stays out of MI-6mos.
        PatientSpec {
            met: &[AspForMi],
            not_met_defaults: &[Mi6mos, AdvancedCad],
            notes: [
                FILLER_OLD,
                "Past Medical History:\nh/o MI in 2082.\n\nInterval visit. Doing well overall.",
                "Medications:\nAspirin 81mg daily\n\nSeen today for scheduled visit.",
            ],
        },
    ]
}

fn separator() -> String {
    "*".repeat(40)
}

fn render_xml(notes: &[(NaiveDate, String)], gold: &BTreeMap<CriterionId, Label>) -> Vec<u8> {
    let sep = separator();
    let mut body = String::new();
    for (i, (date, text)) in notes.iter().enumerate() {
        if i > 0 {
            body.push_str(&format!("\n{sep}\n"));
        }
        body.push_str(&format!("\nRecord date: {date}\n\n{text}\n"));
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PatientMatching>\n<TEXT><![CDATA[");
    out.push_str(&body);
    out.push_str("]]></TEXT>\n<TAGS>\n");
    for id in CriterionId::ALL {
        out.push_str(&format!("<{} met=\"{}\" />\n", id.tag_name(), gold[&id]));
    }
    out.push_str("</TAGS>\n</PatientMatching>\n");
    out.into_bytes()
}

/// Generate the 20-patient corpus. The seed jitters note dates by a few days;
/// labels and evidence are fixed by construction.
pub fn generate_corpus(seed: u64) -> Vec<SynthPatient> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = NaiveDate::from_ymd_opt(2090, 6, 15).unwrap();
    let mut patients = Vec::new();
    for (i, spec) in roster().into_iter().enumerate() {
        let jitter = rng.random_range(0..6i64);
        let present = base + chrono::Days::new((i as u64 * 3) + jitter as u64);
        let dates = [
            present - chrono::Days::new(300),
            present - chrono::Days::new(120),
            present,
        ];
        let notes: Vec<(NaiveDate, String)> = dates
            .iter()
            .zip(spec.notes.iter())
            .map(|(d, t)| (*d, t.to_string()))
            .collect();
        let gold = full_gold(&spec);
        patients.push(SynthPatient {
            id: format!("synth-{i:02}"),
            xml: render_xml(&notes, &gold),
            gold,
        });
    }
    patients
}

/// Write the corpus as one XML record file per patient; returns the count.
pub fn write_corpus(dir: &Path, seed: u64) -> io::Result<usize> {
    std::fs::create_dir_all(dir)?;
    let patients = generate_corpus(seed);
    for p in &patients {
        std::fs::write(dir.join(format!("{}.xml", p.id)), &p.xml)?;
    }
    Ok(patients.len())
}

/// Planted-discriminator corpus for the lexicon-curation pipeline.
pub struct IelsCorpus {
    pub records: Vec<PatientRecord>,
    /// Terms present in every positive record and no negative record.
    pub planted: Vec<String>,
    /// Balanced filler vocabulary (equal positive and negative placements).
    pub noise: Vec<String>,
}

/// Five planted n-grams of orders 1 through 4.
pub const PLANTED_TERMS: [&str; 5] = [
    "xanthoma",
    "velum fibrosis",
    "ulnar drift sign",
    "quixotic plantar arch pattern",
    "zygoma",
];

/// Build `n_records` single-note records (half met, half not met) for
/// `criterion`: planted terms in every positive, noise terms placed in equal
/// numbers of positive and negative records.
pub fn generate_iels_corpus(
    seed: u64,
    n_records: usize,
    n_noise: usize,
    criterion: CriterionId,
) -> IelsCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = n_records / 2;
    let n_neg = n_records - n_pos;
    let noise: Vec<String> = (0..n_noise).map(|j| format!("noiseterm{j:03}")).collect();

    let mut pos_lines: Vec<Vec<String>> = vec![Vec::new(); n_pos];
    let mut neg_lines: Vec<Vec<String>> = vec![Vec::new(); n_neg];
    for term in PLANTED_TERMS {
        for lines in pos_lines.iter_mut() {
            lines.push(format!("Exam shows {term}."));
        }
    }
    for term in &noise {
        let k = rng.random_range(1..=3usize);
        for _ in 0..k {
            let p = rng.random_range(0..n_pos);
            pos_lines[p].push(format!("Exam shows {term}."));
            let n = rng.random_range(0..n_neg);
            neg_lines[n].push(format!("Exam shows {term}."));
        }
    }

    let date = NaiveDate::from_ymd_opt(2090, 1, 1).unwrap();
    let mut records = Vec::with_capacity(n_records);
    let mut build = |id: String, lines: &[String], label: Label| {
        let text = format!("Record date: {date}\n\n{}\n", lines.join("\n"));
        records.push(PatientRecord {
            patient_id: id,
            notes: vec![ClinicalNote {
                record_date: date,
                text: text.clone(),
                char_offset: 0,
            }],
            gold: Some([(criterion, label)].into_iter().collect()),
            present_day: date,
            text,
        });
    };
    for (i, lines) in pos_lines.iter().enumerate() {
        build(format!("pos-{i:03}"), lines, Label::Met);
    }
    for (i, lines) in neg_lines.iter().enumerate() {
        build(format!("neg-{i:03}"), lines, Label::NotMet);
    }
    IelsCorpus {
        records,
        planted: PLANTED_TERMS.iter().map(|s| s.to_string()).collect(),
        noise,
    }
}
