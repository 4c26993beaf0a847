//! Metrics CSV: a provenance comment line, then
//! `image_id,subject_id,metric,value,flags,fit_id`. Flags are `;`-joined.

use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context};
use sreds_core::{Metric, MetricRecord};

use crate::Provenance;

pub const HEADER: [&str; 6] = ["image_id", "subject_id", "metric", "value", "flags", "fit_id"];

pub fn render(prov: &Provenance, records: &[MetricRecord]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.image_id.as_str(),
            r.subject_id.as_str(),
            r.metric.as_str(),
            &r.value.to_string(),
            &r.flags_field(),
            r.fit_id.as_deref().unwrap_or(""),
        ])?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(format!("{}\n{body}", prov.comment_line()))
}

/// Records and the provenance line, when present.
pub fn read(path: &Path) -> anyhow::Result<(Option<Provenance>, Vec<MetricRecord>)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first)?;
    let prov = Provenance::parse_comment(&first);

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if reader.headers()?.iter().collect::<Vec<_>>() != HEADER {
        bail!("{}: header must be {}", path.display(), HEADER.join(","));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 1))?;
        let bad = |what: &str| format!("{} row {}: bad {what}", path.display(), i + 1);
        let metric: Metric = row[2].parse().with_context(|| bad("metric"))?;
        let value: f64 = row[3].parse().with_context(|| bad("value"))?;
        let mut r = MetricRecord::new(&row[0], &row[1], metric, value);
        r.flags = row[4].split(';').filter(|f| !f.is_empty()).map(str::to_string).collect();
        r.fit_id = Some(row[5].to_string()).filter(|s| !s.is_empty());
        records.push(r);
    }
    Ok((prov, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let prov = Provenance {
            version: "0.1.0".into(),
            config_hash: "00ff".into(),
        };
        let mut a = MetricRecord::new("images/a.png", "s1", Metric::Sreds, 0.1 + 0.2);
        a.flags = vec!["regions-failed:forehead".into(), "nmf-unconverged".into()];
        a.fit_id = Some("abc".into());
        let b = MetricRecord::new("b,c.png", "s2", Metric::Sreds, -1e-300);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, render(&prov, &[a.clone(), b.clone()]).unwrap()).unwrap();
        let (p, recs) = read(&path).unwrap();
        assert_eq!(p, Some(prov));
        assert_eq!(recs, vec![a, b]);
    }
}
