//! Resource bundle: lexicons, section synonyms, and assertion triggers.
//! Default copies of the shipped files are embedded so the pipeline runs
//! without a resource directory; a directory overrides them wholesale.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::lexicon::{load_lexicon, parse_lexicon, Lexicon, LexiconError};
use crate::record::PatientRecord;
use crate::textproc::{annotate, AnnotatedNote, SectionSynonyms, TriggerSet};

/// Lexicons that feed extractors directly instead of tagging entities.
const NON_TAGGING: &[&str] = &["lab-names", "supplement-exclusions"];

const EMBEDDED_LEXICONS: &[&str] = &[
    include_str!("../resources/lexicons/abused-drugs.lex"),
    include_str!("../resources/lexicons/alcohol-abuse.lex"),
    include_str!("../resources/lexicons/languages.lex"),
    include_str!("../resources/lexicons/interpreter-cues.lex"),
    include_str!("../resources/lexicons/abdominal.lex"),
    include_str!("../resources/lexicons/diabetes-skin.lex"),
    include_str!("../resources/lexicons/diabetes-kidney.lex"),
    include_str!("../resources/lexicons/diabetes-neuropathy.lex"),
    include_str!("../resources/lexicons/diabetes-nephropathy.lex"),
    include_str!("../resources/lexicons/diabetes-retinopathy.lex"),
    include_str!("../resources/lexicons/cad-meds.lex"),
    include_str!("../resources/lexicons/cad-problems.lex"),
    include_str!("../resources/lexicons/mi-terms.lex"),
    include_str!("../resources/lexicons/mi-symptoms.lex"),
    include_str!("../resources/lexicons/angina.lex"),
    include_str!("../resources/lexicons/ischemia.lex"),
    include_str!("../resources/lexicons/aspirin.lex"),
    include_str!("../resources/lexicons/supplements.lex"),
    include_str!("../resources/lexicons/supplement-exclusions.lex"),
    include_str!("../resources/lexicons/hemoglobin-keywords.lex"),
    include_str!("../resources/lexicons/keto-variants.lex"),
    include_str!("../resources/lexicons/elevated-creatinine.lex"),
    include_str!("../resources/lexicons/lab-names.lex"),
];

const EMBEDDED_SECTIONS: &str = include_str!("../resources/sections.tsv");
const EMBEDDED_TRIGGERS: &str = include_str!("../resources/triggers.tsv");

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("resource directory {0} is missing or unreadable")]
    BadDirectory(String),
    #[error("missing resource file: {0}")]
    MissingFile(String),
}

#[derive(Debug, Clone)]
pub struct ResourceSet {
    lexicons: BTreeMap<String, Lexicon>,
    pub sections: SectionSynonyms,
    pub triggers: TriggerSet,
}

impl ResourceSet {
    /// The compiled-in copies of the shipped resource files.
    pub fn embedded() -> ResourceSet {
        let mut lexicons = BTreeMap::new();
        for source in EMBEDDED_LEXICONS {
            let lex = parse_lexicon(source, "embedded").expect("embedded lexicon parses");
            lexicons.insert(lex.name.clone(), lex);
        }
        ResourceSet {
            lexicons,
            sections: SectionSynonyms::parse(EMBEDDED_SECTIONS),
            triggers: TriggerSet::parse(EMBEDDED_TRIGGERS),
        }
    }

    /// Load `*.lex`, `sections.tsv`, and `triggers.tsv` from a directory.
    pub fn load_dir(dir: &Path) -> Result<ResourceSet, ResourceError> {
        if !dir.is_dir() {
            return Err(ResourceError::BadDirectory(dir.display().to_string()));
        }
        let mut lexicons = BTreeMap::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|_| ResourceError::BadDirectory(dir.display().to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        // A lexicons/ subdirectory is accepted as well.
        let sub = dir.join("lexicons");
        if sub.is_dir() {
            if let Ok(rd) = std::fs::read_dir(&sub) {
                paths.extend(rd.filter_map(|e| e.ok().map(|e| e.path())));
            }
        }
        paths.sort();
        for path in &paths {
            if path.extension().is_some_and(|e| e == "lex") {
                let lex = load_lexicon(path)?;
                lexicons.insert(lex.name.clone(), lex);
            }
        }
        let read = |name: &str| -> Result<String, ResourceError> {
            let p = dir.join(name);
            std::fs::read_to_string(&p)
                .map_err(|_| ResourceError::MissingFile(p.display().to_string()))
        };
        let sections = SectionSynonyms::parse(&read("sections.tsv")?);
        let triggers = TriggerSet::parse(&read("triggers.tsv")?);
        Ok(ResourceSet {
            lexicons,
            sections,
            triggers,
        })
    }

    pub fn lexicon(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }

    /// Add or replace a lexicon (curated lexicons slot in over shipped ones).
    pub fn insert_lexicon(&mut self, lexicon: Lexicon) {
        self.lexicons.insert(lexicon.name.clone(), lexicon);
    }

    pub fn remove_lexicon(&mut self, name: &str) -> Option<Lexicon> {
        self.lexicons.remove(name)
    }

    pub fn lexicon_names(&self) -> impl Iterator<Item = &str> {
        self.lexicons.keys().map(|s| s.as_str())
    }

    /// Lexicons used for dictionary entity tagging.
    pub fn tagging_lexicons(&self) -> Vec<&Lexicon> {
        self.lexicons
            .values()
            .filter(|l| !NON_TAGGING.contains(&l.name.as_str()))
            .collect()
    }

    /// Annotate every note of a record with this bundle.
    pub fn annotate_record(&self, record: &PatientRecord) -> Vec<AnnotatedNote> {
        let tagging = self.tagging_lexicons();
        let empty = Lexicon::new(
            "lab-names",
            crate::textproc::SemanticType::LabTest,
            crate::lexicon::Polarity::Positive,
            crate::lexicon::Provenance::Manual,
        );
        let lab_names = self.lexicon("lab-names").unwrap_or(&empty);
        record
            .notes
            .iter()
            .enumerate()
            .map(|(i, note)| annotate(i, note, &tagging, lab_names, &self.sections, &self.triggers))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::REQUIRED_LEXICONS;

    #[test]
    fn embedded_resources_cover_required_lexicons() {
        let res = ResourceSet::embedded();
        for name in REQUIRED_LEXICONS {
            assert!(res.lexicon(name).is_some(), "missing {name}");
        }
        assert!(!res.sections.is_empty());
        assert!(!res.triggers.is_empty());
    }

    #[test]
    fn non_tagging_lexicons_excluded_from_tagging() {
        let res = ResourceSet::embedded();
        let tagging = res.tagging_lexicons();
        assert!(tagging.iter().all(|l| l.name != "lab-names"));
        assert!(tagging.iter().all(|l| l.name != "supplement-exclusions"));
        assert!(tagging.iter().any(|l| l.name == "mi-terms"));
    }

    #[test]
    fn directory_round_trip_matches_embedded() {
        let res = ResourceSet::embedded();
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("lexicons")).unwrap();
        for name in res.lexicon_names().collect::<Vec<_>>() {
            let lex = res.lexicon(name).unwrap();
            crate::lexicon::save_lexicon(
                lex,
                &dir.path().join("lexicons").join(format!("{name}.lex")),
            )
            .unwrap();
        }
        std::fs::write(dir.path().join("sections.tsv"), super::EMBEDDED_SECTIONS).unwrap();
        std::fs::write(dir.path().join("triggers.tsv"), super::EMBEDDED_TRIGGERS).unwrap();
        let loaded = ResourceSet::load_dir(dir.path()).unwrap();
        assert_eq!(
            loaded.lexicon_names().count(),
            res.lexicon_names().count()
        );
        for name in res.lexicon_names() {
            assert_eq!(
                loaded.lexicon(name).unwrap().terms,
                res.lexicon(name).unwrap().terms,
                "{name}"
            );
        }
    }

    #[test]
    fn missing_directory_errors() {
        assert!(matches!(
            ResourceSet::load_dir(Path::new("/nonexistent/res")),
            Err(ResourceError::BadDirectory(_))
        ));
    }
}
