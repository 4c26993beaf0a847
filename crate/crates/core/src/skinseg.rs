//! Adaptive skin segmentation for RSR: elliptical face mask with eye and
//! mouth exclusions, luminance outlier removal, and divisive normalization
//! by the background patch.

use serde::{Deserialize, Serialize};

use crate::color;
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::roi::{FaceSample, LandmarkSet, RegionCrop, EYE_IMAGE_LEFT, EYE_IMAGE_RIGHT, MOUTH_OUTER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegConfig {
    /// Scale of the ellipse inscribed in the landmark bounding box.
    pub ellipse_scale: f64,
    /// Eye/mouth hull dilation as a fraction of the face (bbox) width.
    pub exclusion_dilation: f64,
    /// Luminance outlier threshold in standard deviations.
    pub outlier_sigma: f64,
    pub min_pixels: usize,
    pub background_min_pixels: usize,
    /// Smallest admissible per-channel background mean.
    pub background_floor: f64,
    pub normalized_max: f64,
    /// Divide by the background when one is available.
    pub normalize_background: bool,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            ellipse_scale: 0.85,
            exclusion_dilation: 0.10,
            outlier_sigma: 2.0,
            min_pixels: 100,
            background_min_pixels: 64,
            background_floor: 0.02,
            normalized_max: 4.0,
            normalize_background: true,
        }
    }
}

impl SegConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ellipse_scale > 0.0
            && self.ellipse_scale <= 1.0
            && self.exclusion_dilation >= 0.0
            && self.outlier_sigma > 0.0
            && self.background_floor > 0.0
            && self.normalized_max >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("segmentation settings out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelSource {
    AdaptiveSegmentation,
    PatchUnion,
}

/// Linear-RGB skin pixels feeding the RSR fit and projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinPixelSet {
    pub pixels: Vec<[f64; 3]>,
    pub source: PixelSource,
    pub normalized: bool,
}

impl SkinPixelSet {
    pub fn new(pixels: Vec<[f64; 3]>, source: PixelSource) -> Self {
        SkinPixelSet {
            pixels,
            source,
            normalized: false,
        }
    }

    /// Union of the three skin patches of a sample.
    pub fn from_patch_union(sample: &FaceSample) -> Self {
        Self::new(sample.skin_union(), PixelSource::PatchUnion)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Distance from `p` to a convex polygon (zero inside).
pub fn hull_distance(p: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => segment_distance(p, hull[0], hull[0]),
        _ => {
            let n = hull.len();
            let inside = n >= 3 && (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Membership test of the face mask for pixel coordinates; shared by
/// [`circular_mask`] and anything that needs to draw it.
pub struct FaceMask {
    center: Point,
    axes: Point,
    hulls: Vec<Vec<Point>>,
    dilation: f64,
}

impl FaceMask {
    pub fn new(lm: &LandmarkSet, cfg: &SegConfig) -> Self {
        let [x0, y0, x1, y1] = lm.bbox();
        let hull_of = |r: std::ops::RangeInclusive<usize>| {
            convex_hull(&r.map(|i| lm.point(i)).collect::<Vec<_>>())
        };
        FaceMask {
            center: [(x0 + x1) / 2.0, (y0 + y1) / 2.0],
            axes: [
                cfg.ellipse_scale * (x1 - x0) / 2.0,
                cfg.ellipse_scale * (y1 - y0) / 2.0,
            ],
            hulls: vec![hull_of(EYE_IMAGE_LEFT), hull_of(EYE_IMAGE_RIGHT), hull_of(MOUTH_OUTER)],
            dilation: cfg.exclusion_dilation * (x1 - x0),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        if self.axes[0] <= 0.0 || self.axes[1] <= 0.0 {
            return false;
        }
        let e = ((x - self.center[0]) / self.axes[0]).powi(2) + ((y - self.center[1]) / self.axes[1]).powi(2);
        e <= 1.0 && self.hulls.iter().all(|h| hull_distance([x, y], h) > self.dilation)
    }
}

/// Linear-RGB pixels inside the face ellipse and outside the dilated eye and
/// mouth hulls; pixels are sampled at integer coordinates.
pub fn circular_mask(image: &ImageGrid, lm: &LandmarkSet, cfg: &SegConfig) -> Result<Vec<[f64; 3]>> {
    let mask = FaceMask::new(lm, cfg);
    let mut out = Vec::new();
    for y in 0..image.height() {
        for x in 0..image.width() {
            if mask.contains(x as f64, y as f64) {
                out.push(image.linear(x, y));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::SegmentationFailed("mask selects no pixels".into()));
    }
    Ok(out)
}

/// Single pass: drop pixels whose luminance leaves `mean ± k·std`.
pub fn remove_luminance_outliers(set: &SkinPixelSet, cfg: &SegConfig) -> Result<SkinPixelSet> {
    if set.len() < cfg.min_pixels {
        return Err(Error::InsufficientPixels {
            count: set.len(),
            needed: cfg.min_pixels,
        });
    }
    let lum: Vec<f64> = set.pixels.iter().map(|&p| color::luminance_of(p)).collect();
    let n = lum.len() as f64;
    let mean = lum.iter().sum::<f64>() / n;
    let std = (lum.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n).sqrt();
    let limit = cfg.outlier_sigma * std;
    let pixels: Vec<[f64; 3]> = set
        .pixels
        .iter()
        .zip(&lum)
        .filter(|(_, l)| (*l - mean).abs() <= limit)
        .map(|(p, _)| *p)
        .collect();
    if pixels.len() < cfg.min_pixels {
        return Err(Error::InsufficientSkin {
            count: pixels.len(),
            needed: cfg.min_pixels,
        });
    }
    Ok(SkinPixelSet {
        pixels,
        source: set.source,
        normalized: set.normalized,
    })
}

/// Divides every pixel channel-wise by the background's linear mean.
pub fn background_normalize(set: &SkinPixelSet, background: &RegionCrop, cfg: &SegConfig) -> Result<SkinPixelSet> {
    let n = background.pixels().len();
    if n < cfg.background_min_pixels {
        return Err(Error::InsufficientPixels {
            count: n,
            needed: cfg.background_min_pixels,
        });
    }
    let mean = background.mean_linear();
    if let Some(&low) = mean.iter().find(|m| **m < cfg.background_floor) {
        return Err(Error::BackgroundTooDark {
            mean: low,
            floor: cfg.background_floor,
        });
    }
    let pixels = set
        .pixels
        .iter()
        .map(|p| [0, 1, 2].map(|c| (p[c] / mean[c]).clamp(0.0, cfg.normalized_max)))
        .collect();
    Ok(SkinPixelSet {
        pixels,
        source: set.source,
        normalized: true,
    })
}

/// Outcome of the background step, recorded as a provenance flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundStatus {
    Normalized,
    Disabled,
    Unavailable,
    TooDark,
}

impl BackgroundStatus {
    pub fn flag(self) -> &'static str {
        match self {
            BackgroundStatus::Normalized => "bg-normalized",
            BackgroundStatus::Disabled => "bg-disabled",
            BackgroundStatus::Unavailable => "bg-unavailable",
            BackgroundStatus::TooDark => "bg-too-dark",
        }
    }
}

/// Full adaptive segmentation: mask, outlier removal, optional normalization.
pub fn adaptive_segmentation(
    image: &ImageGrid,
    lm: &LandmarkSet,
    background: Option<&RegionCrop>,
    cfg: &SegConfig,
) -> Result<(SkinPixelSet, BackgroundStatus)> {
    let masked = SkinPixelSet::new(circular_mask(image, lm, cfg)?, PixelSource::AdaptiveSegmentation);
    let skin = remove_luminance_outliers(&masked, cfg)?;
    if !cfg.normalize_background {
        return Ok((skin, BackgroundStatus::Disabled));
    }
    let Some(bg) = background else {
        return Ok((skin, BackgroundStatus::Unavailable));
    };
    match background_normalize(&skin, bg, cfg) {
        Ok(s) => Ok((s, BackgroundStatus::Normalized)),
        Err(Error::BackgroundTooDark { .. }) | Err(Error::InsufficientPixels { .. }) => {
            Ok((skin, BackgroundStatus::TooDark))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roi::Region;
    use crate::synth::FaceTemplate;

    fn set(pixels: Vec<[f64; 3]>) -> SkinPixelSet {
        SkinPixelSet::new(pixels, PixelSource::AdaptiveSegmentation)
    }

    fn bg_crop(linear: [f64; 3]) -> RegionCrop {
        RegionCrop::from_pixels(Region::Background, 8, 8, vec![color::encode(linear); 64]).unwrap()
    }

    #[test]
    fn hull_and_distance() {
        let h = convex_hull(&[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, 1.0]]);
        assert_eq!(h.len(), 4);
        assert_eq!(hull_distance([1.0, 1.0], &h), 0.0);
        assert!((hull_distance([3.0, 1.0], &h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clipped_ellipse_returns_only_in_bounds_pixels() {
        let t = FaceTemplate::default();
        let lm = t.landmarks().translated(-100.0, 0.0);
        let img = ImageGrid::filled(t.width, t.height, [0.5; 3]).unwrap();
        // Bounds check is the ROI module's job; the mask just clips.
        let inside = circular_mask(&img, &lm, &SegConfig::default()).unwrap();
        let full = circular_mask(&img, &t.landmarks(), &SegConfig::default()).unwrap();
        assert!(!inside.is_empty() && inside.len() < full.len());
    }

    #[test]
    fn degenerate_landmarks_fail_segmentation() {
        // Every point on one spot: the ellipse has zero extent.
        let lm = LandmarkSet::new(vec![[50.0, 50.0]; 68]).unwrap();
        let img = ImageGrid::filled(100, 100, [0.5; 3]).unwrap();
        assert!(matches!(
            circular_mask(&img, &lm, &SegConfig::default()),
            Err(Error::SegmentationFailed(_))
        ));
        // Huge dilation: hulls swallow the whole ellipse.
        let t = FaceTemplate::default();
        let img = ImageGrid::filled(t.width, t.height, [0.5; 3]).unwrap();
        let cfg = SegConfig { exclusion_dilation: 2.0, ..SegConfig::default() };
        assert!(circular_mask(&img, &t.landmarks(), &cfg).is_err());
    }

    #[test]
    fn constant_luminance_is_kept() {
        let s = set(vec![[0.3, 0.4, 0.5]; 150]);
        let out = remove_luminance_outliers(&s, &SegConfig::default()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn bright_outliers_are_removed() {
        // 990 body pixels alternating at luminance 0.39 / 0.41 and 10 at 1.0:
        // mean = 0.406, std ≈ 0.0605, so the 2σ band is [0.285, 0.527].
        let mut px: Vec<[f64; 3]> = (0..990).map(|i| [if i % 2 == 0 { 0.39 } else { 0.41 }; 3]).collect();
        px.extend(vec![[1.0; 3]; 10]);
        let out = remove_luminance_outliers(&set(px), &SegConfig::default()).unwrap();
        assert_eq!(out.len(), 990);
        assert!(out.pixels.iter().all(|p| p[0] < 0.5));
        let again = remove_luminance_outliers(&out, &SegConfig::default()).unwrap();
        assert_eq!(again.len(), out.len());
    }

    #[test]
    fn too_few_pixels_for_outlier_removal() {
        assert!(matches!(
            remove_luminance_outliers(&set(vec![[0.4; 3]; 50]), &SegConfig::default()),
            Err(Error::InsufficientPixels { count: 50, needed: 100 })
        ));
    }

    #[test]
    fn divisive_normalization() {
        let cfg = SegConfig::default();
        let s = set(vec![[0.4, 0.3, 0.2]; 100]);
        let out = background_normalize(&s, &bg_crop([0.5; 3]), &cfg).unwrap();
        for c in 0..3 {
            assert!((out.pixels[0][c] - [0.8, 0.6, 0.4][c]).abs() < 1e-12);
        }
        assert!(out.normalized);
        let same = background_normalize(&s, &bg_crop([1.0; 3]), &cfg).unwrap();
        assert_eq!(same.pixels, s.pixels);
    }

    #[test]
    fn dark_background_is_refused() {
        let s = set(vec![[0.4, 0.3, 0.2]; 100]);
        assert!(matches!(
            background_normalize(&s, &bg_crop([0.5, 0.01, 0.5]), &SegConfig::default()),
            Err(Error::BackgroundTooDark { .. })
        ));
    }
}
