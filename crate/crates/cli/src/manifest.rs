//! Dataset manifests: CSV with `image_path,subject_id,landmarks_path,label`.
//! Lines starting with `#` are comments. Paths resolve against the
//! manifest's directory; the image id is `image_path` as written.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 4] = ["image_path", "subject_id", "landmarks_path", "label"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_path: String,
    pub subject_id: String,
    pub landmarks_path: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dataset_id: String,
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let headers = reader.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != HEADER && names != HEADER[..3] {
            bail!("manifest {}: header must be {}", path.display(), HEADER.join(","));
        }
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
            let row = row.with_context(|| format!("manifest {} row {}", path.display(), i + 1))?;
            if row.image_path.is_empty() || row.subject_id.is_empty() || row.landmarks_path.is_empty() {
                bail!("manifest {} row {}: empty image_path, subject_id or landmarks_path", path.display(), i + 1);
            }
            if !seen.insert(row.image_path.clone()) {
                bail!("manifest {}: duplicate image_path {}", path.display(), row.image_path);
            }
            rows.push(row);
        }
        let dataset_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Manifest { dataset_id, root, rows })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }

    /// Non-empty labels keyed by image id.
    pub fn labels(&self) -> BTreeMap<String, String> {
        self.rows
            .iter()
            .filter(|r| !r.label.is_empty())
            .map(|r| (r.image_path.clone(), r.label.clone()))
            .collect()
    }

    pub fn subjects(&self) -> BTreeMap<String, String> {
        self.rows.iter().map(|r| (r.image_path.clone(), r.subject_id.clone())).collect()
    }
}

/// Manifest text with a leading comment line.
pub fn render(comment: &str, rows: &[ManifestRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    let body = if rows.is_empty() { format!("{}\n", HEADER.join(",")) } else { body };
    Ok(format!("{comment}\n{body}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> anyhow::Result<Manifest> {
        let dir = tempfile::tempdir()?;
        let path = dir.path().join("faces.csv");
        std::fs::write(&path, text)?;
        Manifest::load(&path)
    }

    #[test]
    fn parses_rows_comments_and_optional_labels() {
        let m = load("# made by hand\nimage_path,subject_id,landmarks_path,label\na.png,s1,a.json,W\nb.png,s1,b.json,\n").unwrap();
        assert_eq!(m.dataset_id, "faces");
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.labels().len(), 1);
        let m = load("image_path,subject_id,landmarks_path\na.png,s1,a.json\n").unwrap();
        assert_eq!(m.rows[0].label, "");
    }

    #[test]
    fn rejects_bad_manifests() {
        assert!(load("path,subject\na,b\n").is_err());
        assert!(load("image_path,subject_id,landmarks_path,label\na.png,,a.json,\n").is_err());
        assert!(load("image_path,subject_id,landmarks_path,label\na.png,s,a.json,\na.png,t,b.json,\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        let rows = vec![ManifestRow {
            image_path: "images/x.png".into(),
            subject_id: "s".into(),
            landmarks_path: "landmarks/x.json".into(),
            label: "lighter".into(),
        }];
        let text = render("# c", &rows).unwrap();
        assert_eq!(load(&text).unwrap().rows, rows);
    }
}
