use std::collections::BTreeMap;

use super::cohort::resolve_cohort;
use super::{load_triples, RunConfig, Scope};
use crate::error::Result;
use crate::eval::{
    eda_stats, read_metrics, severity_bins, write_eda_report, write_severity_report, EdaReport, SeverityBinReport,
    DEFAULT_BIN_EDGES, DEFAULT_TOP_K,
};
use crate::ids::SideEffectId;
use crate::ingest::{parse_mono_records, parse_saedr_file};

/// Bins the side effects of `scope/metrics.csv` by AUROC and writes
/// `scope/severity_report.csv`; the comment line also carries the excluded
/// counts so the totals can be reconciled.
pub fn cmd_analyze_severity(config: &RunConfig, scope: Scope) -> Result<SeverityBinReport> {
    config.validate()?;
    let dir = config.scope_dir(scope);
    let metrics = read_metrics(dir.join("metrics.csv"))?;
    // names for the examples column, when the interaction table is at hand
    let names: BTreeMap<String, String> = match &config.inputs.ddi {
        Some(_) => load_triples(config)?
            .into_iter()
            .map(|t| (t.side_effect.code, t.side_effect.name))
            .collect(),
        None => BTreeMap::new(),
    };
    let auroc: BTreeMap<SideEffectId, f64> = metrics
        .rows
        .iter()
        .filter_map(|r| {
            let name = names.get(&r.side_effect.code).cloned().unwrap_or_default();
            let se = SideEffectId::new(r.side_effect.code.clone(), name)?;
            Some((se, r.auroc?))
        })
        .collect();
    let saedr = parse_saedr_file(config.require(&config.inputs.saedr, "saedr")?)?.records;
    let report = severity_bins(&auroc, &saedr, &DEFAULT_BIN_EDGES)?;
    let comment = format!(
        "{} excluded_below={} excluded_above={} missing_score={}",
        config.provenance(),
        report.excluded_below,
        report.excluded_above,
        report.missing_score
    );
    write_severity_report(dir.join("severity_report.csv"), &report, Some(&comment))?;
    Ok(report)
}

/// Interaction-count medians and top mono side effects; writes `eda.json`.
pub fn cmd_analyze_eda(config: &RunConfig) -> Result<EdaReport> {
    config.validate()?;
    let triples = load_triples(config)?;
    let mono = parse_mono_records(config.require(&config.inputs.mono, "mono")?)?.records;
    let cohort = resolve_cohort(config, &triples)?;
    let report = eda_stats(&triples, &mono, &cohort.spec, DEFAULT_TOP_K);
    write_eda_report(config.out_dir.join("eda.json"), &report)?;
    Ok(report)
}
