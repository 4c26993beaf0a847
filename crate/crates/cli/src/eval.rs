//! `sreds eval`: joins metric files to the manifest, z-scores each metric
//! over the dataset and writes the intra-subject summary and per-label
//! histograms.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::anyhow;
use serde::Serialize;
use sreds_core::eval::{label_histograms, summarize_metric, MetricSummary};
use sreds_core::{Metric, MetricRecord};

use crate::args::EvalArgs;
use crate::manifest::Manifest;
use crate::{metrics_csv, write_file, Failure, Outcome, Provenance};

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub tool_version: Option<String>,
    pub config_hash: Option<String>,
    pub records: usize,
}

#[derive(Debug, Serialize)]
pub struct Excluded {
    pub image_id: String,
    pub metric: Metric,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub config_hash: String,
    pub dataset_id: String,
    pub inputs: Vec<InputFile>,
    pub metrics: Vec<MetricSummary>,
    pub excluded: Vec<Excluded>,
    /// Metrics that could not be summarized, with the reason.
    pub failed: BTreeMap<Metric, String>,
}

/// The shared config hash of the inputs; mixed hashes need `force`.
fn common_hash(inputs: &[InputFile], force: bool) -> Outcome<String> {
    let hashes: BTreeSet<&str> = inputs.iter().map(|i| i.config_hash.as_deref().unwrap_or("unknown")).collect();
    match hashes.len() {
        1 => Ok(hashes.into_iter().next().unwrap_or_default().to_string()),
        _ if force => {
            eprintln!("warning: merging metric files from different configs: {hashes:?}");
            Ok("mixed".into())
        }
        _ => Err(Failure::usage(anyhow!(
            "metric files come from different configs {hashes:?}; use --force to merge"
        ))),
    }
}

pub fn run(args: &EvalArgs) -> Outcome<()> {
    let cfg = crate::load_config(args.config.as_deref(), None)?;
    let manifest = Manifest::load(&args.manifest)?;
    let subjects = manifest.subjects();
    let labels = manifest.labels();

    let mut inputs = Vec::new();
    let mut by_metric: BTreeMap<Metric, Vec<MetricRecord>> = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut seen = BTreeSet::new();
    for path in &args.metrics {
        let (prov, records) = metrics_csv::read(path)?;
        inputs.push(InputFile {
            path: path.display().to_string(),
            tool_version: prov.as_ref().map(|p| p.version.clone()),
            config_hash: prov.map(|p| p.config_hash),
            records: records.len(),
        });
        for r in records {
            let reason = match subjects.get(&r.image_id) {
                None => Some("image not in manifest".to_string()),
                Some(s) if *s != r.subject_id => Some(format!("subject {} disagrees with manifest ({s})", r.subject_id)),
                _ if !seen.insert((r.metric, r.image_id.clone())) => Some("duplicate record".to_string()),
                _ => None,
            };
            match reason {
                Some(reason) => {
                    eprintln!("warning: excluded {} ({}): {reason}", r.image_id, r.metric);
                    excluded.push(Excluded { image_id: r.image_id, metric: r.metric, reason });
                }
                None => by_metric.entry(r.metric).or_default().push(r),
            }
        }
    }
    let config_hash = common_hash(&inputs, args.force)?;
    let prov = Provenance {
        version: crate::VERSION.to_string(),
        config_hash,
    };
    if by_metric.is_empty() {
        return Err(Failure::empty(anyhow!("no metric record joined the manifest")));
    }

    let mut summaries = Vec::new();
    let mut failed = BTreeMap::new();
    for (metric, records) in &by_metric {
        let (summary, normalized) = match summarize_metric(*metric, records, &labels) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("warning: {metric} not summarized: {e}");
                failed.insert(*metric, e.to_string());
                continue;
            }
        };
        let labelled: Vec<(String, f64)> = normalized
            .records
            .iter()
            .filter_map(|r| labels.get(&r.image_id).map(|l| (l.clone(), r.value)))
            .collect();
        match label_histograms(&labelled, cfg.histogram_bins) {
            Ok(h) => {
                write_file(&args.out.join(format!("histogram_{metric}.csv")), format!("{}\n{}", prov.comment_line(), h.to_csv()))?;
                if args.plots {
                    let svg = h.to_svg(&format!("{metric} (normalized)"));
                    let svg = svg.replacen('\n', &format!("\n<!-- sreds {} config={} -->\n", prov.version, prov.config_hash), 1);
                    write_file(&args.out.join(format!("histogram_{metric}.svg")), svg)?;
                }
            }
            Err(e) => eprintln!("warning: no {metric} histogram: {e}"),
        }
        summaries.push(summary);
    }

    write_file(&args.out.join("summary.csv"), summary_table(&prov, &summaries)?)?;
    let report = EvalReport {
        tool_version: prov.version.clone(),
        config_hash: prov.config_hash.clone(),
        dataset_id: manifest.dataset_id.clone(),
        inputs,
        metrics: summaries,
        excluded,
        failed,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    json.push('\n');
    write_file(&args.out.join("summary.json"), json)?;
    if report.metrics.is_empty() {
        return Err(Failure::empty(anyhow!("no metric could be summarized")));
    }
    Ok(())
}

/// One row per metric, in the layout of an intra-subject variability table.
pub fn summary_table(prov: &Provenance, summaries: &[MetricSummary]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "metric",
        "raw_mean",
        "raw_std",
        "intra_subject_std",
        "intra_subject_std_weighted",
        "subjects_used",
        "subjects_excluded",
        "images_used",
    ])?;
    for s in summaries {
        let i = &s.intra_subject;
        w.write_record([
            s.metric.to_string(),
            s.raw_mean.to_string(),
            s.raw_std.to_string(),
            i.mean_std.to_string(),
            i.weighted_mean_std.to_string(),
            i.subjects_used.to_string(),
            i.subjects_excluded.to_string(),
            i.images_used.to_string(),
        ])?;
    }
    Ok(format!("{}\n{}", prov.comment_line(), String::from_utf8(w.into_inner()?)?))
}
