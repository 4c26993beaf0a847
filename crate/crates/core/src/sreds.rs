//! SREDS: per-patch dichromatic separation and a dataset-level kernel PCA
//! over the recovered diffuse bases.
//!
//! Each skin patch is factorized as `V ≈ WH` with two unit-norm basis colors.
//! The row with the larger channel sum is the specular (interface) basis; the
//! other row is the diffuse (body) basis. Among unit vectors the channel sum
//! peaks at gray, so the whiter basis is taken as the illuminant. A face's
//! value is the mean KPCA projection of its forehead and cheek diffuse bases.

use std::collections::BTreeMap;

use crate::color;
use crate::error::{Error, Result};
use crate::kpca::{project_kpca, KpcaFit};
use crate::nmf::{self, NmfFactors, NmfOptions, PatchMatrix};
use crate::record::{Metric, MetricRecord};
use crate::roi::{FaceSample, Region, RegionCrop};

#[derive(Debug, Clone, PartialEq)]
pub struct DichromaticDecomposition {
    pub factors: NmfFactors,
    pub specular_index: usize,
    pub diffuse_basis: [f64; 3],
    pub specular_basis: [f64; 3],
    pub region: Region,
    pub image_id: String,
    pub subject_id: String,
}

impl DichromaticDecomposition {
    pub fn diffuse_index(&self) -> usize {
        1 - self.specular_index
    }

    /// Mean magnitude carried by the specular basis.
    pub fn specular_weight(&self) -> f64 {
        self.factors.w_mean(self.specular_index)
    }
}

/// Index of the specular row: larger channel sum of the unit row, then
/// larger luminance, then the lower index.
pub fn assign_specular(f: &NmfFactors) -> usize {
    let key = |k: usize| (f.h[k].iter().sum::<f64>(), color::luminance_of(f.h[k]));
    let (s0, l0) = key(0);
    let (s1, l1) = key(1);
    if s1 > s0 || (s1 == s0 && l1 > l0) {
        1
    } else {
        0
    }
}

pub fn decompose_matrix(v: &PatchMatrix, region: Region, opts: &NmfOptions) -> Result<DichromaticDecomposition> {
    let factors = nmf::factorize(v, opts)?;
    let specular_index = assign_specular(&factors);
    Ok(DichromaticDecomposition {
        specular_basis: factors.h[specular_index],
        diffuse_basis: factors.h[1 - specular_index],
        specular_index,
        factors,
        region,
        image_id: String::new(),
        subject_id: String::new(),
    })
}

pub fn decompose_patch(crop: &RegionCrop, opts: &NmfOptions) -> Result<DichromaticDecomposition> {
    decompose_matrix(&crop.patch_matrix()?, crop.region, opts)
}

/// Decomposes the three skin regions of a sample, keeping per-region failures.
pub fn decompose_sample(sample: &FaceSample, opts: &NmfOptions) -> Vec<(Region, Result<DichromaticDecomposition>)> {
    sample
        .skin_crops()
        .iter()
        .map(|crop| {
            let d = decompose_patch(crop, opts).map(|mut d| {
                d.image_id = sample.image_id.clone();
                d.subject_id = sample.subject_id.clone();
                d
            });
            (crop.region, d)
        })
        .collect()
}

/// Mean projection over the regions that decomposed.
pub fn sreds_from_decompositions(
    fit: &KpcaFit,
    fit_id: Option<&str>,
    image_id: &str,
    subject_id: &str,
    decompositions: &[(Region, Result<DichromaticDecomposition>)],
) -> Result<MetricRecord> {
    let mut region_values = BTreeMap::new();
    let mut failed = Vec::new();
    let mut unconverged = false;
    let mut first_error = None;
    for (region, d) in decompositions {
        match d {
            Ok(d) => {
                unconverged |= !d.factors.converged;
                region_values.insert(*region, project_kpca(fit, d.diffuse_basis));
            }
            Err(e) => {
                failed.push(region.as_str());
                first_error.get_or_insert((*region, e.to_string()));
            }
        }
    }
    if region_values.is_empty() {
        let (region, reason) = first_error.unwrap_or((Region::Forehead, "no regions".into()));
        return Err(Error::MetricUnavailable {
            region,
            source: Box::new(Error::Domain(reason)),
        });
    }
    let value = region_values.values().sum::<f64>() / region_values.len() as f64;
    let mut rec = MetricRecord::new(image_id, subject_id, Metric::Sreds, value);
    rec.region_values = region_values;
    rec.fit_id = fit_id.map(str::to_string);
    if !failed.is_empty() {
        rec.flags.push(format!("regions-failed:{}", failed.join("+")));
    }
    if unconverged {
        rec.flags.push("nmf-unconverged".into());
    }
    Ok(rec)
}

pub fn compute_sreds(fit: &KpcaFit, fit_id: Option<&str>, sample: &FaceSample, opts: &NmfOptions) -> Result<MetricRecord> {
    let d = decompose_sample(sample, opts);
    sreds_from_decompositions(fit, fit_id, &sample.image_id, &sample.subject_id, &d)
}
