//! Record serialization round trips: parse -> write -> parse preserves gold
//! labels, note count, and record dates.

use std::collections::BTreeMap;

use cohort_core::criteria::{evaluate_all, CriteriaConfig, ModelSet};
use cohort_core::record::{
    evidence_report_json, parse_record_file, write_decisions, CriterionId, Label,
};
use cohort_core::resources::ResourceSet;
use cohort_core::synth::generate_corpus;

#[test]
fn parse_write_parse_is_identity_on_labels_and_dates() {
    for patient in generate_corpus(11) {
        let record = parse_record_file(&patient.id, &patient.xml).unwrap();
        let resources = ResourceSet::embedded();
        let annotated = resources.annotate_record(&record);
        let decisions = evaluate_all(
            &record,
            &annotated,
            &resources,
            &ModelSet::default(),
            &CriteriaConfig::default(),
        )
        .unwrap();

        let written = write_decisions(&record, &decisions).unwrap();
        let reparsed = parse_record_file(&patient.id, &written).unwrap();

        assert_eq!(reparsed.notes.len(), record.notes.len());
        for (a, b) in reparsed.notes.iter().zip(&record.notes) {
            assert_eq!(a.record_date, b.record_date);
        }
        let reparsed_gold = reparsed.gold.expect("written file carries tags");
        let expected: BTreeMap<CriterionId, Label> =
            decisions.iter().map(|(id, d)| (*id, d.label)).collect();
        assert_eq!(reparsed_gold, expected);
        assert_eq!(reparsed.present_day, record.present_day);
    }
}

#[test]
fn missing_criterion_rejected_on_write() {
    let patient = &generate_corpus(11)[0];
    let record = parse_record_file(&patient.id, &patient.xml).unwrap();
    let resources = ResourceSet::embedded();
    let annotated = resources.annotate_record(&record);
    let mut decisions = evaluate_all(
        &record,
        &annotated,
        &resources,
        &ModelSet::default(),
        &CriteriaConfig::default(),
    )
    .unwrap();
    decisions.remove(&CriterionId::Hba1c);
    assert!(write_decisions(&record, &decisions).is_err());
}

#[test]
fn evidence_report_carries_spans() {
    let patient = generate_corpus(11)
        .into_iter()
        .find(|p| p.gold[&CriterionId::Mi6mos] == Label::Met)
        .expect("corpus has a recent-MI patient");
    let record = parse_record_file(&patient.id, &patient.xml).unwrap();
    let resources = ResourceSet::embedded();
    let annotated = resources.annotate_record(&record);
    let decisions = evaluate_all(
        &record,
        &annotated,
        &resources,
        &ModelSet::default(),
        &CriteriaConfig::default(),
    )
    .unwrap();
    let json = evidence_report_json(&record, &decisions);
    let value: serde_json::Value = serde_json::from_slice(&json).unwrap();
    let mi = &value["decisions"]["Mi-6mos"];
    assert_eq!(mi["label"], "met");
    let evidence = mi["evidence"].as_array().unwrap();
    assert!(!evidence.is_empty());
    let first = &evidence[0];
    let note = first["note"].as_u64().unwrap() as usize;
    let (start, end) = (
        first["start"].as_u64().unwrap() as usize,
        first["end"].as_u64().unwrap() as usize,
    );
    // The span indexes into that note's text.
    assert!(end > start);
    assert!(end <= record.notes[note].text.len());
}
