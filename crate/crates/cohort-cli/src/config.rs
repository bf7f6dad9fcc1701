//! Flat key=value configuration file shared by the subcommands.

use std::path::Path;

use cohort_core::criteria::CriteriaConfig;
use cohort_core::iels::{CoefThreshold, IelsConfig};

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub criteria: CriteriaConfig,
    pub iels: IelsConfig,
    pub workers: Option<usize>,
}

/// Parse `key = value` lines; '#' lines are comments. Unknown keys error so
/// typos do not silently fall back to defaults.
pub fn parse_config(source: &str) -> Result<FileConfig, String> {
    let mut criteria = CriteriaConfig::default();
    let mut iels = IelsConfig::default();
    let mut workers = None;
    for (lineno, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |e: &str| format!("line {}: {key}: {e}", lineno + 1);
        let f64v = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        let u32v = || value.parse::<u32>().map_err(|_| bad("expected an integer"));
        let usizev = || value.parse::<usize>().map_err(|_| bad("expected an integer"));
        match key {
            "hba1c_min" => criteria.hba1c_range.0 = f64v()?,
            "hba1c_max" => criteria.hba1c_range.1 = f64v()?,
            "mi_window_months" => criteria.mi_window_months = u32v()?,
            "keto_window_months" => criteria.keto_window_months = u32v()?,
            "dietsupp_window_months" => criteria.dietsupp_window_months = u32v()?,
            "creat_margin" => criteria.creat_margin = f64v()?,
            "creat_norm_male_high" => criteria.creat_norm_male.1 = f64v()?,
            "creat_norm_female_high" => criteria.creat_norm_female.1 = f64v()?,
            "makes_decisions_threshold" => criteria.makes_decisions_threshold = f64v()?,
            "advanced_cad_min" => criteria.advanced_cad_min = usizev()?,
            "workers" => workers = Some(usizev()?),
            "max_ngram_order" => iels.max_ngram_order = usizev()?,
            "folds" => iels.folds = usizev()?,
            "coef_threshold" => iels.coef_threshold = CoefThreshold::Fixed(f64v()?),
            "sim_threshold" => iels.sim_threshold = f64v()?,
            "expansion_iterations" => iels.expansion_iterations = usizev()?,
            "min_doc_freq" => iels.min_doc_freq = usizev()?,
            "grid" => {
                iels.grid = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
                    .collect::<Result<_, _>>()?
            }
            "neighbors_per_seed" => iels.neighbors_per_seed = usizev()?,
            "seed" => iels.seed = value.parse::<u64>().map_err(|_| bad("expected an integer"))?,
            other => return Err(format!("line {}: unknown key {other:?}", lineno + 1)),
        }
    }
    Ok(FileConfig {
        criteria,
        iels,
        workers,
    })
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig, String> {
    match path {
        None => Ok(FileConfig {
            criteria: CriteriaConfig::default(),
            iels: IelsConfig::default(),
            workers: None,
        }),
        Some(p) => {
            let source = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            parse_config(&source)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let cfg = parse_config("# comment\nhba1c_max = 9.0\nworkers=4\nmi_window_months=12\n").unwrap();
        assert_eq!(cfg.criteria.hba1c_range.1, 9.0);
        assert_eq!(cfg.workers, Some(4));
        assert_eq!(cfg.criteria.mi_window_months, 12);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config("bogus_key=1\n").is_err());
    }

    #[test]
    fn missing_file_is_default() {
        let cfg = load_config(None).unwrap();
        assert_eq!(cfg.criteria.hba1c_range, (6.5, 9.5));
    }
}
