//! `sreds synth`: renders subjects under an illumination sweep and writes
//! them as a dataset (`images/`, `landmarks/`, `manifest.csv`) plus
//! `ground_truth.json` with each subject's body color.

use anyhow::anyhow;
use serde::Serialize;
use sreds_core::roi::save_landmarks;
use sreds_core::synth::{derived_seed, render_face, sweep_angles, SynthSubject};

use crate::args::SynthArgs;
use crate::manifest::{self, ManifestRow};
use crate::{write_file, Failure, Outcome, Provenance};

#[derive(Debug, Serialize)]
pub struct GroundTruthImage {
    pub image_path: String,
    pub angle: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct GroundTruthSubject {
    #[serde(flatten)]
    pub subject: SynthSubject,
    pub images: Vec<GroundTruthImage>,
}

#[derive(Debug, Serialize)]
pub struct GroundTruth {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub interface_color: [f64; 3],
    pub subjects: Vec<GroundTruthSubject>,
}

/// Evenly spaced tones from dark to light.
pub fn subject_tones(count: usize) -> Vec<f64> {
    (0..count).map(|i| (i as f64 + 0.5) / count as f64).collect()
}

pub fn run(args: &SynthArgs) -> Outcome<()> {
    if args.subjects == 0 || args.images_per_subject == 0 {
        return Err(Failure::usage(anyhow!("--subjects and --images-per-subject must be positive")));
    }
    let cfg = crate::load_config(args.config.as_deref(), args.seed)?;
    let prov = Provenance::current(&cfg);
    let angles = sweep_angles(args.images_per_subject);
    let width = (args.subjects - 1).to_string().len().max(2);

    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (si, tone) in subject_tones(args.subjects).into_iter().enumerate() {
        let subject = SynthSubject::from_tone(format!("s{si:0width$}"), tone);
        let mut images = Vec::new();
        for (ai, &angle) in angles.iter().enumerate() {
            let name = format!("{}_a{ai}", subject.subject_id);
            let seed = derived_seed(cfg.seed, (si * angles.len() + ai) as u64);
            let (img, lm) = render_face(&subject, angle, seed, &cfg.render).map_err(|e| Failure::usage(anyhow!("{name}: {e}")))?;
            let image_path = format!("images/{name}.png");
            let landmarks_path = format!("landmarks/{name}.json");
            std::fs::create_dir_all(args.out.join("landmarks")).map_err(anyhow::Error::from)?;
            std::fs::create_dir_all(args.out.join("images")).map_err(anyhow::Error::from)?;
            img.save_png(&args.out.join(&image_path)).map_err(Failure::usage)?;
            save_landmarks(&args.out.join(&landmarks_path), &image_path, &lm).map_err(Failure::usage)?;
            rows.push(ManifestRow {
                image_path: image_path.clone(),
                subject_id: subject.subject_id.clone(),
                landmarks_path,
                label: subject.label.clone(),
            });
            images.push(GroundTruthImage { image_path, angle, seed });
        }
        truth.push(GroundTruthSubject { subject, images });
    }

    write_file(&args.out.join("manifest.csv"), manifest::render(&prov.comment_line(), &rows)?)?;
    let gt = GroundTruth {
        tool_version: prov.version.clone(),
        config_hash: prov.config_hash.clone(),
        seed: cfg.seed,
        interface_color: cfg.render.interface_color,
        subjects: truth,
    };
    let mut json = serde_json::to_string_pretty(&gt).map_err(anyhow::Error::from)?;
    json.push('\n');
    write_file(&args.out.join("ground_truth.json"), json)?;
    Ok(())
}
