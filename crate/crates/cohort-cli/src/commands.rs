//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cohort_core::criteria::{evaluate_all, CriteriaConfig, ModelSet};
use cohort_core::embeddings::load_embeddings_auto;
use cohort_core::iels::curate_lexicon;
use cohort_core::lexicon::{lexicon_to_string, load_lexicon, LexTerm, Lexicon, Provenance};
use cohort_core::mlcore::{load_model, SavedModel};
use cohort_core::record::{
    evidence_report_json, load_records, parse_record_file, write_decisions, CriterionId, Label,
    PatientRecord,
};
use cohort_core::resources::ResourceSet;
use cohort_core::scoring::{aggregate, confusion, format_report, ConfusionCounts};
use cohort_core::synth::write_corpus;

use crate::{EXIT_CONFIG, EXIT_PARSE};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
}

type CliResult = Result<(), CliError>;

fn load_resources(dir: Option<&Path>) -> Result<ResourceSet, CliError> {
    match dir {
        None => Ok(ResourceSet::embedded()),
        Some(d) => ResourceSet::load_dir(d).map_err(|e| CliError::config(e.to_string())),
    }
}

fn load_models(dir: Option<&Path>) -> Result<ModelSet, CliError> {
    let mut set = ModelSet::default();
    let Some(dir) = dir else {
        return Ok(set);
    };
    if !dir.is_dir() {
        return Err(CliError::config(format!(
            "model directory {} does not exist",
            dir.display()
        )));
    }
    let expect = |name: &str| dir.join(format!("{name}.json"));
    for (name, slot) in [
        ("makes-decisions", 0usize),
        ("major-diabetes", 1),
        ("asp-for-mi", 2),
        ("hba1c", 3),
    ] {
        let path = expect(name);
        if !path.is_file() {
            continue;
        }
        let file = load_model(&path).map_err(|e| CliError::config(e.to_string()))?;
        let kind = match file.model {
            SavedModel::Logistic(_) => "logistic",
            SavedModel::LinearSvm(_) => "linear_svm",
            SavedModel::NaiveBayes(_) => "naive_bayes",
            SavedModel::DecisionTree(_) => "decision_tree",
        };
        match (slot, file.model) {
            (0, SavedModel::NaiveBayes(m)) => set.makes_decisions = Some(m),
            (1, SavedModel::LinearSvm(m)) | (1, SavedModel::Logistic(m)) => {
                set.major_diabetes = Some(m)
            }
            (2, SavedModel::DecisionTree(m)) => set.asp_for_mi = Some(m),
            (3, SavedModel::LinearSvm(m)) | (3, SavedModel::Logistic(m)) => set.hba1c = Some(m),
            _ => {
                return Err(CliError::config(format!(
                    "{}: model kind {kind} does not fit the {name} criterion",
                    path.display()
                )))
            }
        }
    }
    Ok(set)
}

/// Load records, attaching file names to parse failures.
fn load_inputs(input: &Path) -> Result<Vec<PatientRecord>, CliError> {
    if input.is_file() {
        let bytes = std::fs::read(input)
            .map_err(|e| CliError::parse(format!("{}: {e}", input.display())))?;
        let id = input.file_stem().unwrap_or_default().to_string_lossy();
        return parse_record_file(&id, &bytes)
            .map(|r| vec![r])
            .map_err(|e| CliError::parse(format!("{}: {e}", input.display())));
    }
    if !input.is_dir() {
        return Err(CliError::parse(format!(
            "input {} does not exist",
            input.display()
        )));
    }
    let mut xml_files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| CliError::parse(format!("{}: {e}", input.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    xml_files.sort();
    if !xml_files.is_empty() {
        let mut records = Vec::new();
        for path in xml_files {
            let bytes = std::fs::read(&path)
                .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            let id = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
            let rec = parse_record_file(&id, &bytes)
                .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            records.push(rec);
        }
        return Ok(records);
    }
    load_records(input).map_err(|e| CliError::parse(e.to_string()))
}

pub fn cmd_run(
    input: &Path,
    output: &Path,
    resources: Option<&Path>,
    models: Option<&Path>,
    config: Option<&Path>,
    workers: usize,
) -> CliResult {
    let cfg = crate::config::load_config(config).map_err(CliError::config)?;
    let resources = load_resources(resources)?;
    let models = load_models(models)?;
    let criteria_cfg: CriteriaConfig = cfg.criteria;
    let workers = cfg.workers.unwrap_or(workers).max(1);

    let mut records = load_inputs(input)?;
    if records.is_empty() {
        return Err(CliError::parse(format!(
            "no patient records found under {}",
            input.display()
        )));
    }
    records.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));

    std::fs::create_dir_all(output)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", output.display())))?;

    struct PatientOutput {
        id: String,
        xml: Vec<u8>,
        evidence: Vec<u8>,
        met: usize,
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<PatientOutput>>> =
        Mutex::new((0..records.len()).map(|_| None).collect());
    let failure: Mutex<Option<String>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers.min(records.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= records.len() {
                    break;
                }
                let record = &records[i];
                let annotated = resources.annotate_record(record);
                match evaluate_all(record, &annotated, &resources, &models, &criteria_cfg) {
                    Ok(decisions) => {
                        let xml = write_decisions(record, &decisions)
                            .expect("all 13 decisions present");
                        let evidence = evidence_report_json(record, &decisions);
                        let met = decisions.values().filter(|d| d.label == Label::Met).count();
                        results.lock().unwrap()[i] = Some(PatientOutput {
                            id: record.patient_id.clone(),
                            xml,
                            evidence,
                            met,
                        });
                    }
                    Err(e) => {
                        let mut f = failure.lock().unwrap();
                        if f.is_none() {
                            *f = Some(format!("{}: {e}", record.patient_id));
                        }
                    }
                }
            });
        }
    });

    if let Some(msg) = failure.into_inner().unwrap() {
        return Err(CliError::config(msg));
    }
    let results = results.into_inner().unwrap();
    let mut met_total = 0usize;
    let mut n = 0usize;
    for out in results.into_iter().flatten() {
        std::fs::write(output.join(format!("{}.xml", out.id)), &out.xml)
            .map_err(|e| CliError::config(format!("write failed: {e}")))?;
        std::fs::write(output.join(format!("{}.evidence.json", out.id)), &out.evidence)
            .map_err(|e| CliError::config(format!("write failed: {e}")))?;
        met_total += out.met;
        n += 1;
    }
    println!(
        "processed {n} patients: {met_total} met decisions, {} not met",
        n * 13 - met_total
    );
    Ok(())
}

fn gold_of(record: &PatientRecord) -> Result<&BTreeMap<CriterionId, Label>, CliError> {
    record.gold.as_ref().ok_or_else(|| {
        CliError::parse(format!("patient {} carries no TAGS block", record.patient_id))
    })
}

pub fn cmd_score(gold_dir: &Path, system_dir: &Path, json: Option<&Path>) -> CliResult {
    let gold_records = load_inputs(gold_dir)?;
    let system_records = load_inputs(system_dir)?;
    if gold_records.is_empty() {
        return Err(CliError::parse(format!(
            "no gold records under {}",
            gold_dir.display()
        )));
    }
    let mut system: BTreeMap<&str, &PatientRecord> = BTreeMap::new();
    for r in &system_records {
        system.insert(r.patient_id.as_str(), r);
    }
    let mut per_criterion: BTreeMap<CriterionId, ConfusionCounts> = BTreeMap::new();
    for id in CriterionId::ALL {
        let mut gold_labels = Vec::new();
        let mut sys_labels = Vec::new();
        for g in &gold_records {
            let sys = system.get(g.patient_id.as_str()).ok_or_else(|| {
                CliError::parse(format!(
                    "patient {} missing from system directory",
                    g.patient_id
                ))
            })?;
            let gt = gold_of(g)?;
            let st = gold_of(sys)?;
            let (Some(gl), Some(sl)) = (gt.get(&id), st.get(&id)) else {
                return Err(CliError::parse(format!(
                    "patient {} lacks a tag for {id}",
                    g.patient_id
                )));
            };
            gold_labels.push(*gl);
            sys_labels.push(*sl);
        }
        let counts = confusion(&gold_labels, &sys_labels)
            .map_err(|e| CliError::parse(e.to_string()))?;
        per_criterion.insert(id, counts);
    }
    let report = aggregate(&per_criterion).map_err(|e| CliError::parse(e.to_string()))?;
    print!("{}", format_report(&report));
    if let Some(path) = json {
        let mut bytes = serde_json::to_vec_pretty(&report)
            .map_err(|e| CliError::config(e.to_string()))?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_lexicon_build(
    input: &Path,
    criterion: CriterionId,
    output: &Path,
    embeddings: Option<&Path>,
    config: Option<&Path>,
) -> CliResult {
    let cfg = crate::config::load_config(config).map_err(CliError::config)?;
    let records = load_inputs(input)?;
    let table = match embeddings {
        Some(p) => Some(load_embeddings_auto(p).map_err(|e| CliError::config(e.to_string()))?),
        None => {
            log::warn!("no embeddings configured; writing internal-only lexicon");
            None
        }
    };
    let result = curate_lexicon(&records, criterion, table.as_ref(), &cfg.iels)
        .map_err(|e| CliError::config(e.to_string()))?;

    std::fs::create_dir_all(output)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", output.display())))?;
    let stem = criterion.table_name().to_lowercase();
    let (pos, neg) = result.to_lexicons(&stem, cohort_core::textproc::SemanticType::Problem);
    for lex in [&pos, &neg] {
        let path = output.join(format!("{}.lex", lex.name));
        std::fs::write(&path, lexicon_to_string(lex))
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    }
    let report_path = output.join(format!("{stem}-cv.json"));
    let mut bytes = serde_json::to_vec_pretty(&result)
        .map_err(|e| CliError::config(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(&report_path, bytes)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", report_path.display())))?;
    println!(
        "{criterion}: {} internal terms, {} expanded terms, threshold {:.6}",
        result.internal_terms.len(),
        result.expanded_terms.len(),
        result.chosen_threshold
    );
    Ok(())
}

pub fn cmd_lexicon_expand(
    lexicon_path: &Path,
    embeddings: &Path,
    output: &Path,
    sim_threshold: f64,
    iterations: usize,
) -> CliResult {
    let lexicon = load_lexicon(lexicon_path).map_err(|e| CliError::parse(e.to_string()))?;
    let table = load_embeddings_auto(embeddings).map_err(|e| CliError::config(e.to_string()))?;
    let iels_cfg = cohort_core::iels::IelsConfig {
        sim_threshold,
        expansion_iterations: iterations,
        ..Default::default()
    };
    let seeds: Vec<LexTerm> = lexicon.iter().cloned().collect();
    let expanded = cohort_core::iels::expand_terms(&seeds, &table, &iels_cfg);
    let mut out = Lexicon::new(
        format!("{}-expanded", lexicon.name),
        lexicon.semantic_type,
        lexicon.polarity,
        Provenance::IelsExpanded,
    );
    for term in seeds.into_iter().chain(expanded.into_iter()) {
        out.insert(term);
    }
    std::fs::write(output, lexicon_to_string(&out))
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", output.display())))?;
    println!("{}: {} terms after expansion", out.name, out.len());
    Ok(())
}

pub fn cmd_debug_preprocess(input: &Path, resources: Option<&Path>) -> CliResult {
    let resources = load_resources(resources)?;
    let bytes =
        std::fs::read(input).map_err(|e| CliError::parse(format!("{}: {e}", input.display())))?;
    let id = input.file_stem().unwrap_or_default().to_string_lossy();
    let record = parse_record_file(&id, &bytes)
        .map_err(|e| CliError::parse(format!("{}: {e}", input.display())))?;
    let annotated = resources.annotate_record(&record);
    let dump = serde_json::json!({
        "patient_id": record.patient_id,
        "present_day": record.present_day,
        "notes": annotated,
    });
    let json = serde_json::to_string_pretty(&dump).map_err(|e| CliError::config(e.to_string()))?;
    println!("{json}");
    Ok(())
}

pub fn cmd_gen_corpus(output: &Path, seed: u64) -> CliResult {
    let n = write_corpus(output, seed)
        .map_err(|e| CliError::config(format!("cannot write corpus: {e}")))?;
    println!("wrote {n} synthetic patients to {}", output.display());
    Ok(())
}
