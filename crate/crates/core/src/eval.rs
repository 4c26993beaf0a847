//! Evaluation protocol: per-metric z-scoring over a dataset, mean
//! intra-subject standard deviation, and per-label histograms.
//!
//! Standard deviations are population (divide by `n`) throughout. The
//! headline intra-subject figure weights every subject equally; an
//! image-count-weighted figure is reported alongside.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Metric, MetricRecord};

/// Population mean and standard deviation.
pub fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub records: Vec<MetricRecord>,
    pub raw_mean: f64,
    pub raw_std: f64,
}

/// Z-scores the record values (population standard deviation).
pub fn normalize_metric(records: &[MetricRecord]) -> Result<Normalized> {
    if records.len() < 2 {
        return Err(Error::DegenerateMetric(format!(
            "{} record(s); at least two are required",
            records.len()
        )));
    }
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (mean, std) = moments(&values);
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateMetric("metric has zero variance".into()));
    }
    let records = records
        .iter()
        .map(|r| MetricRecord {
            value: (r.value - mean) / std,
            ..r.clone()
        })
        .collect();
    Ok(Normalized {
        records,
        raw_mean: mean,
        raw_std: std,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraSubject {
    /// Unweighted mean over subjects of each subject's population std.
    pub mean_std: f64,
    /// Same, weighted by each subject's image count.
    pub weighted_mean_std: f64,
    pub subjects_used: usize,
    pub subjects_excluded: usize,
    pub images_used: usize,
}

pub fn intra_subject_variability(records: &[MetricRecord]) -> Result<IntraSubject> {
    let mut by_subject: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_subject.entry(&r.subject_id).or_default().push(r.value);
    }
    let (mut sum, mut wsum, mut weight) = (0.0, 0.0, 0usize);
    let (mut used, mut excluded) = (0usize, 0usize);
    for values in by_subject.values_mut() {
        if values.len() < 2 {
            excluded += 1;
            continue;
        }
        // Fixed summation order makes the result independent of record order.
        values.sort_by(|a, b| a.total_cmp(b));
        let (_, std) = moments(values);
        sum += std;
        wsum += std * values.len() as f64;
        weight += values.len();
        used += 1;
    }
    if used == 0 {
        return Err(Error::NoRepeatedSubjects);
    }
    Ok(IntraSubject {
        mean_std: sum / used as f64,
        weighted_mean_std: wsum / weight as f64,
        subjects_used: used,
        subjects_excluded: excluded,
        images_used: weight,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    /// `bins + 1` shared bin edges.
    pub edges: Vec<f64>,
    pub counts: BTreeMap<String, Vec<usize>>,
}

impl Histograms {
    /// Rows of `label, bin_left, bin_right, count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,bin_left,bin_right,count\n");
        for (label, counts) in &self.counts {
            for (i, c) in counts.iter().enumerate() {
                let _ = writeln!(out, "{label},{},{},{c}", self.edges[i], self.edges[i + 1]);
            }
        }
        out
    }

    /// Overlaid per-label bar chart.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 360.0;
        const PAD: f64 = 40.0;
        const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
        let bins = self.edges.len() - 1;
        let top = self.counts.values().flatten().copied().max().unwrap_or(1).max(1) as f64;
        let bw = (W - 2.0 * PAD) / bins as f64;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#);
        for (li, (label, counts)) in self.counts.iter().enumerate() {
            let colour = PALETTE[li % PALETTE.len()];
            for (i, &c) in counts.iter().enumerate() {
                let h = (H - 2.0 * PAD) * c as f64 / top;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}" fill-opacity="0.5"/>"#,
                    PAD + i as f64 * bw,
                    H - PAD - h,
                    bw,
                    h
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{colour}">{label}</text>"#,
                W - PAD - 80.0,
                PAD + 16.0 * li as f64
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{PAD}" y="{:.2}" font-family="sans-serif" font-size="11">{:.3}</text><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"#,
            H - PAD + 16.0,
            self.edges[0],
            W - PAD,
            H - PAD + 16.0,
            self.edges[bins]
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Per-label counts on a shared grid of `bins` equal bins over `[min, max]`.
pub fn label_histograms(values: &[(String, f64)], bins: usize) -> Result<Histograms> {
    let mut labels: Vec<&str> = values.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::NotEnoughLabels(labels.len()));
    }
    let bins = bins.max(1);
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * width }).collect();
    let mut counts: BTreeMap<String, Vec<usize>> =
        labels.iter().map(|l| (l.to_string(), vec![0; bins])).collect();
    for (label, v) in values {
        let i = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts.get_mut(label).expect("label collected above")[i] += 1;
    }
    Ok(Histograms { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub raw_mean: f64,
    pub raw_std: f64,
    pub normalized_mean: f64,
    pub normalized_std: f64,
    pub intra_subject: IntraSubject,
    /// Mean normalized value per label, when labels are present.
    pub label_means: BTreeMap<String, f64>,
    pub std_kind: String,
}

/// Normalizes one metric's records and summarizes them.
pub fn summarize_metric(
    metric: Metric,
    records: &[MetricRecord],
    labels: &BTreeMap<String, String>,
) -> Result<(MetricSummary, Normalized)> {
    let norm = normalize_metric(records)?;
    let values: Vec<f64> = norm.records.iter().map(|r| r.value).collect();
    let (nm, ns) = moments(&values);
    let intra = intra_subject_variability(&norm.records)?;
    let mut by_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &norm.records {
        if let Some(l) = labels.get(&r.image_id) {
            by_label.entry(l.clone()).or_default().push(r.value);
        }
    }
    let label_means = by_label.into_iter().map(|(l, v)| (l, moments(&v).0)).collect();
    Ok((
        MetricSummary {
            metric,
            raw_mean: norm.raw_mean,
            raw_std: norm.raw_std,
            normalized_mean: nm,
            normalized_std: ns,
            intra_subject: intra,
            label_means,
            std_kind: "population".into(),
        },
        norm,
    ))
}
