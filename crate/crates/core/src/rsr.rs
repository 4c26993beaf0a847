//! Relative Skin Reflectance: a dataset-level principal axis in linear RGB
//! and per-image mean projections onto it.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::FaceSample;
use crate::skinseg::SkinPixelSet;
use crate::vec3;

pub const MIN_FIT_PIXELS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RsrVariant {
    /// Pixels from adaptive skin segmentation.
    Rsr,
    /// Pixels from the union of the three ROI patches.
    RsrStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsrConfig {
    /// Largest pooled pixel count; larger pools are subsampled.
    pub max_fit_pixels: usize,
}

impl Default for RsrConfig {
    fn default() -> Self {
        RsrConfig {
            max_fit_pixels: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsrFit {
    pub axis: [f64; 3],
    pub center: [f64; 3],
    pub fit_pixel_count: usize,
    pub pooled_pixel_count: usize,
    pub eigenvalue: f64,
    pub seed: u64,
    /// -1 when the raw eigenvector was flipped to make `axis·(1,1,1) > 0`.
    pub sign_anchor: i8,
    pub variant: RsrVariant,
}

/// Indices `0..total` kept by the seeded subsample, ascending.
pub(crate) fn subsample_indices(total: usize, cap: usize, seed: u64) -> Vec<usize> {
    if total <= cap {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, total, cap).into_vec();
    idx.sort_unstable();
    idx
}

/// Mean and population covariance of a pixel list.
pub fn covariance(pixels: &[[f64; 3]]) -> ([f64; 3], Matrix3<f64>) {
    let center = vec3::mean(pixels);
    let mut cov = Matrix3::zeros();
    for p in pixels {
        let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    (center, cov / pixels.len() as f64)
}

/// Leading eigenpair of a symmetric 3x3 matrix.
pub fn principal_axis(cov: &Matrix3<f64>) -> ([f64; 3], f64) {
    let eig = SymmetricEigen::new(*cov);
    let k = (0..3)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap_or(0);
    let v = eig.eigenvectors.column(k);
    (vec3::normalized([v[0], v[1], v[2]]), eig.eigenvalues[k])
}

/// Orientation so that the component sum is positive (first non-zero
/// component decides a zero sum).
fn orient(axis: [f64; 3]) -> ([f64; 3], i8) {
    let s: f64 = axis.iter().sum();
    let positive = if s != 0.0 {
        s > 0.0
    } else {
        axis.iter().find(|v| **v != 0.0).is_none_or(|v| *v > 0.0)
    };
    if positive {
        (axis, 1)
    } else {
        (axis.map(|v| -v), -1)
    }
}

pub fn fit_rsr(samples: &[SkinPixelSet], seed: u64, variant: RsrVariant, cfg: &RsrConfig) -> Result<RsrFit> {
    let total: usize = samples.iter().map(|s| s.len()).sum();
    if total < MIN_FIT_PIXELS {
        return Err(Error::InsufficientData {
            got: total,
            needed: MIN_FIT_PIXELS,
        });
    }
    let keep = subsample_indices(total, cfg.max_fit_pixels.max(MIN_FIT_PIXELS), seed);
    let mut pool = Vec::with_capacity(keep.len());
    let mut it = samples.iter().flat_map(|s| s.pixels.iter()).enumerate();
    for &k in &keep {
        for (i, p) in it.by_ref() {
            if i == k {
                pool.push(*p);
                break;
            }
        }
    }

    let (center, cov) = covariance(&pool);
    let (raw, eigenvalue) = principal_axis(&cov);
    if !(eigenvalue > 1e-14) {
        return Err(Error::DegenerateFit(format!(
            "pixel covariance has no variance (leading eigenvalue {eigenvalue:e})"
        )));
    }
    let (axis, sign_anchor) = orient(raw);
    Ok(RsrFit {
        axis,
        center,
        fit_pixel_count: pool.len(),
        pooled_pixel_count: total,
        eigenvalue,
        seed,
        sign_anchor,
        variant,
    })
}

/// Mean of `(p − center)·axis` over the pixels.
pub fn project_rsr(fit: &RsrFit, pixels: &SkinPixelSet) -> Result<f64> {
    if pixels.is_empty() {
        return Err(Error::InsufficientData { got: 0, needed: 1 });
    }
    let sum: f64 = pixels
        .pixels
        .iter()
        .map(|p| vec3::dot([p[0] - fit.center[0], p[1] - fit.center[1], p[2] - fit.center[2]], fit.axis))
        .sum();
    Ok(sum / pixels.len() as f64)
}

/// RSR* of one sample: projection of the three ROI patches' union.
pub fn compute_rsr_star(fit: &RsrFit, sample: &FaceSample) -> Result<f64> {
    project_rsr(fit, &SkinPixelSet::from_patch_union(sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skinseg::PixelSource;
    use rand::Rng;

    fn set(pixels: Vec<[f64; 3]>) -> SkinPixelSet {
        SkinPixelSet::new(pixels, PixelSource::PatchUnion)
    }

    fn line_pixels(n: usize, dir: [f64; 3], base: [f64; 3]) -> Vec<[f64; 3]> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64 - 0.5;
                [0, 1, 2].map(|c| base[c] + t * 0.5 * dir[c])
            })
            .collect()
    }

    #[test]
    fn perfect_gray_line() {
        let d = vec3::normalized([1.0, 1.0, 1.0]);
        let fit = fit_rsr(&[set(line_pixels(2000, d, [0.5; 3]))], 1, RsrVariant::Rsr, &RsrConfig::default()).unwrap();
        for c in 0..3 {
            assert!((fit.axis[c] - d[c]).abs() < 1e-6);
        }
        assert!((vec3::norm(fit.axis) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_pixels_are_degenerate() {
        let r = fit_rsr(&[set(vec![[0.4, 0.3, 0.2]; 1500])], 1, RsrVariant::Rsr, &RsrConfig::default());
        assert!(matches!(r, Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn too_few_pixels() {
        let r = fit_rsr(&[set(vec![[0.4, 0.3, 0.2]; 999])], 1, RsrVariant::Rsr, &RsrConfig::default());
        assert!(matches!(r, Err(Error::InsufficientData { got: 999, .. })));
    }

    #[test]
    fn projection_basics() {
        let d = vec3::normalized([1.0, 1.0, 1.0]);
        let fit = fit_rsr(&[set(line_pixels(2000, d, [0.5; 3]))], 1, RsrVariant::Rsr, &RsrConfig::default()).unwrap();
        assert!(project_rsr(&fit, &set(vec![fit.center; 10])).unwrap().abs() < 1e-12);
        let plus = [0, 1, 2].map(|c| fit.center[c] + fit.axis[c]);
        assert!((project_rsr(&fit, &set(vec![plus; 10])).unwrap() - 1.0).abs() < 1e-12);
        assert!(project_rsr(&fit, &set(vec![])).is_err());
    }

    #[test]
    fn subsampled_fit_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let px: Vec<[f64; 3]> = (0..5000).map(|_| [rng.random(), rng.random::<f64>() * 0.5, 0.2]).collect();
        let cfg = RsrConfig { max_fit_pixels: 1200 };
        let a = fit_rsr(&[set(px.clone())], 77, RsrVariant::Rsr, &cfg).unwrap();
        let b = fit_rsr(&[set(px)], 77, RsrVariant::Rsr, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fit_pixel_count, 1200);
        assert_eq!(a.pooled_pixel_count, 5000);
        assert!(vec3::dot(a.axis, [1.0; 3]) > 0.0);
    }

    #[test]
    fn projection_is_linear_in_the_pixel_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rand_px = |n| (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect::<Vec<[f64; 3]>>();
        let fit = fit_rsr(&[set(rand_px(2000))], 0, RsrVariant::Rsr, &RsrConfig::default()).unwrap();
        let (a, b) = (rand_px(300), rand_px(700));
        let pa = project_rsr(&fit, &set(a.clone())).unwrap();
        let pb = project_rsr(&fit, &set(b.clone())).unwrap();
        let both = project_rsr(&fit, &set([a, b].concat())).unwrap();
        assert!((both - (300.0 * pa + 700.0 * pb) / 1000.0).abs() < 1e-9);
    }

    #[test]
    fn orientation_tie_break() {
        assert_eq!(orient([-0.5, 0.5, 0.0]), ([0.5, -0.5, 0.0], -1));
        assert_eq!(orient([0.0, 0.5, -0.5]), ([0.0, 0.5, -0.5], 1));
    }
}
