//! `sreds compute`: per-image metric values for a manifest.
//!
//! Images are processed on a pool of `--jobs` workers; results are gathered
//! in manifest order before any fit or output, so the output does not depend
//! on the worker count.

use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use sreds_core::image::ImageGrid;
use sreds_core::ita::compute_ita;
use sreds_core::kpca::fit_kpca;
use sreds_core::roi::{extract_crops, load_landmarks, FaceSample, LandmarkSet, Region};
use sreds_core::rsr::{fit_rsr, project_rsr, RsrVariant};
use sreds_core::skinseg::{adaptive_segmentation, SkinPixelSet};
use sreds_core::sreds::{decompose_sample, sreds_from_decompositions, DichromaticDecomposition};
use sreds_core::{Metric, MetricRecord, RunConfig};

use crate::args::ComputeArgs;
use crate::fitfile::{FitFile, FitModel};
use crate::manifest::{Manifest, ManifestRow};
use crate::{metrics_csv, Failure, Outcome, Provenance};

/// Per-image product of the parallel stage.
enum Prepared {
    Done(MetricRecord),
    Pixels(SkinPixelSet, Vec<String>),
    Bases(Vec<(Region, sreds_core::Result<DichromaticDecomposition>)>),
}

struct Item<'a> {
    row: &'a ManifestRow,
    data: Prepared,
}

fn load_sample(manifest: &Manifest, row: &ManifestRow, cfg: &RunConfig) -> anyhow::Result<(ImageGrid, LandmarkSet, FaceSample)> {
    let image = ImageGrid::load(&manifest.resolve(&row.image_path))?;
    let lm = load_landmarks(&manifest.resolve(&row.landmarks_path))?;
    let sample = extract_crops(&row.image_path, &row.subject_id, &image, &lm, &cfg.roi)?;
    Ok((image, lm, sample))
}

fn prepare(manifest: &Manifest, row: &ManifestRow, metric: Metric, cfg: &RunConfig) -> anyhow::Result<Prepared> {
    let (image, lm, sample) = load_sample(manifest, row, cfg)?;
    Ok(match metric {
        Metric::Ita => {
            let r = compute_ita(&sample, &cfg.ita)?;
            let mut rec = MetricRecord::new(&row.image_path, &row.subject_id, Metric::Ita, r.value);
            rec.region_values = r.per_region;
            Prepared::Done(rec)
        }
        Metric::Rsr => {
            let (set, status) = adaptive_segmentation(&image, &lm, sample.background.as_ref(), &cfg.segmentation)?;
            Prepared::Pixels(set, vec![status.flag().to_string()])
        }
        Metric::RsrStar => Prepared::Pixels(SkinPixelSet::from_patch_union(&sample), Vec::new()),
        Metric::Sreds => {
            let d = decompose_sample(&sample, &cfg.nmf);
            if let Some(e) = d.iter().map(|(_, r)| r.as_ref().err()).collect::<Option<Vec<_>>>() {
                return Err(anyhow!("no region decomposed: {}", e[0]));
            }
            Prepared::Bases(d)
        }
    })
}

fn variant(metric: Metric) -> RsrVariant {
    if metric == Metric::Rsr {
        RsrVariant::Rsr
    } else {
        RsrVariant::RsrStar
    }
}

fn fit_model(metric: Metric, items: &[Item<'_>], cfg: &RunConfig) -> sreds_core::Result<FitModel> {
    match metric {
        Metric::Ita => unreachable!("ita needs no fit"),
        Metric::Rsr | Metric::RsrStar => {
            let sets: Vec<SkinPixelSet> = items
                .iter()
                .filter_map(|it| match &it.data {
                    Prepared::Pixels(s, _) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            Ok(FitModel::Rsr(fit_rsr(&sets, cfg.seed, variant(metric), &cfg.rsr)?))
        }
        Metric::Sreds => {
            let bases: Vec<[f64; 3]> = items
                .iter()
                .flat_map(|it| match &it.data {
                    Prepared::Bases(d) => d.iter().filter_map(|(_, r)| r.as_ref().ok().map(|d| d.diffuse_basis)).collect(),
                    _ => Vec::new(),
                })
                .collect();
            Ok(FitModel::Kpca(fit_kpca(&bases, &cfg.kpca, cfg.seed)?))
        }
    }
}

fn project(item: &Item<'_>, fit: Option<&FitFile>) -> sreds_core::Result<MetricRecord> {
    let (id, subject) = (&item.row.image_path, &item.row.subject_id);
    match (&item.data, fit.map(|f| (&f.model, f.fit_id.as_str()))) {
        (Prepared::Done(r), _) => Ok(r.clone()),
        (Prepared::Pixels(set, flags), Some((FitModel::Rsr(f), fit_id))) => {
            let metric = if f.variant == RsrVariant::Rsr { Metric::Rsr } else { Metric::RsrStar };
            let mut rec = MetricRecord::new(id, subject, metric, project_rsr(f, set)?);
            rec.flags = flags.clone();
            rec.fit_id = Some(fit_id.to_string());
            Ok(rec)
        }
        (Prepared::Bases(d), Some((FitModel::Kpca(f), fit_id))) => sreds_from_decompositions(f, Some(fit_id), id, subject, d),
        _ => unreachable!("fit kind checked against the metric"),
    }
}

pub fn run(args: &ComputeArgs) -> Outcome<()> {
    let cfg = crate::load_config(args.config.as_deref(), args.seed)?;
    let prov = Provenance::current(&cfg);
    let metric = args.metric;
    if metric.is_data_driven() && args.fit.is_none() && args.fit_out.is_none() {
        return Err(Failure::usage(anyhow!("metric {metric} needs --fit or --fit-out")));
    }
    let manifest = Manifest::load(&args.manifest)?;
    let loaded = match &args.fit {
        Some(p) if metric.is_data_driven() => Some(FitFile::load_for(p, metric, &prov, args.force)?),
        _ => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs as usize)
        .build()
        .context("starting worker pool")?;
    let prepared: Vec<(&ManifestRow, anyhow::Result<Prepared>)> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .map(|row| (row, prepare(&manifest, row, metric, &cfg)))
            .collect()
    });

    let mut skipped: Vec<(String, String)> = Vec::new();
    let mut items = Vec::new();
    for (row, p) in prepared {
        match p {
            Ok(data) => items.push(Item { row, data }),
            Err(e) => skipped.push((row.image_path.clone(), e.to_string())),
        }
    }

    let fit = match (metric.is_data_driven(), loaded) {
        (false, _) => None,
        (true, Some(f)) => Some(f),
        (true, None) => match fit_model(metric, &items, &cfg) {
            Ok(model) => {
                let f = FitFile::new(&prov, metric, &manifest.dataset_id, model);
                if let Some(p) = &args.fit_out {
                    f.save(p)?;
                }
                Some(f)
            }
            Err(e) => {
                report_skipped(&args.out, &prov, &skipped)?;
                return Err(Failure::empty(anyhow!("{metric} fit failed: {e}")));
            }
        },
    };

    let mut records = Vec::new();
    for item in &items {
        match project(item, fit.as_ref()) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push((item.row.image_path.clone(), e.to_string())),
        }
    }
    // Keep the skipped list in manifest order.
    let order: std::collections::BTreeMap<&str, usize> =
        manifest.rows.iter().enumerate().map(|(i, r)| (r.image_path.as_str(), i)).collect();
    skipped.sort_by_key(|(id, _)| order[id.as_str()]);

    crate::write_file(&args.out, metrics_csv::render(&prov, &records)?)?;
    report_skipped(&args.out, &prov, &skipped)?;
    if records.is_empty() {
        return Err(Failure::empty(anyhow!("no {metric} values were produced")));
    }
    Ok(())
}

fn report_skipped(out: &Path, prov: &Provenance, skipped: &[(String, String)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "reason"])?;
    for (id, reason) in skipped {
        eprintln!("warning: skipped {id}: {reason}");
        w.write_record([id, reason])?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    crate::write_file(&crate::sibling(out, "skipped"), format!("{}\n{body}", prov.comment_line()))
}
