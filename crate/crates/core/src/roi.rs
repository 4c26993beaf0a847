//! Landmark ingestion and rectangular region-of-interest extraction.
//!
//! Landmarks follow the 68-point iBUG/Dlib convention with 0-based indices:
//! jaw 0..=16, brows 17..=26, nose 27..=35, eyes 36..=41 and 42..=47,
//! mouth 48..=67. "Left" and "right" regions are image-left and image-right.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::nmf::PatchMatrix;

pub const LANDMARK_COUNT: usize = 68;

pub const JAW: std::ops::RangeInclusive<usize> = 0..=16;
pub const BROWS: std::ops::RangeInclusive<usize> = 17..=26;
pub const EYE_IMAGE_LEFT: std::ops::RangeInclusive<usize> = 36..=41;
pub const EYE_IMAGE_RIGHT: std::ops::RangeInclusive<usize> = 42..=47;
pub const MOUTH_OUTER: std::ops::RangeInclusive<usize> = 48..=59;
const JAW_LEFT_CHEEK: usize = 2;
const JAW_RIGHT_CHEEK: usize = 14;
const MOUTH_LEFT_CORNER: usize = 48;
const MOUTH_RIGHT_CORNER: usize = 54;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Forehead,
    LeftCheek,
    RightCheek,
    Background,
}

impl Region {
    pub const SKIN: [Region; 3] = [Region::Forehead, Region::LeftCheek, Region::RightCheek];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Forehead => "forehead",
            Region::LeftCheek => "left-cheek",
            Region::RightCheek => "right-cheek",
            Region::Background => "background",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Geometry constants for the ROI construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    /// Forehead width as a multiple of the inter-eye-center distance.
    pub forehead_width: f64,
    /// Forehead height as a multiple of the inter-eye-center distance.
    pub forehead_height: f64,
    /// Pixels left clear between the forehead rect and the highest brow point.
    pub forehead_gap: f64,
    /// Fraction by which each cheek square shrinks toward its center.
    pub cheek_shrink: f64,
    /// Corner background square side as a fraction of the smaller image dimension.
    pub background_fraction: f64,
    /// Smallest admissible rect side in pixels.
    pub min_side: usize,
}

impl Default for RoiConfig {
    fn default() -> Self {
        RoiConfig {
            forehead_width: 1.0,
            forehead_height: 0.5,
            forehead_gap: 0.0,
            cheek_shrink: 0.15,
            background_fraction: 0.1,
            min_side: 8,
        }
    }
}

impl RoiConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.forehead_width > 0.0
            && self.forehead_height > 0.0
            && self.forehead_gap >= 0.0
            && (0.0..1.0).contains(&self.cheek_shrink)
            && self.background_fraction > 0.0
            && self.background_fraction <= 0.5
            && self.min_side >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("roi geometry out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::Domain(format!(
                "expected {LANDMARK_COUNT} points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite() || p[0] < 0.0 || p[1] < 0.0)
        {
            return Err(Error::Domain(format!(
                "point {i} ({}, {}) out of bounds",
                points[i][0], points[i][1]
            )));
        }
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    /// Fails with the index of the first point outside a `width` x `height` image.
    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        match self
            .points
            .iter()
            .position(|p| p[0] > (width - 1) as f64 || p[1] > (height - 1) as f64)
        {
            Some(i) => Err(Error::Domain(format!(
                "point {i} ({}, {}) outside {width}x{height} image",
                self.points[i][0], self.points[i][1]
            ))),
            None => Ok(()),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        LandmarkSet {
            points: self.points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
        }
    }

    pub fn centroid(&self, range: std::ops::RangeInclusive<usize>) -> [f64; 2] {
        let n = range.clone().count() as f64;
        let (sx, sy) = range.fold((0.0, 0.0), |(sx, sy), i| {
            (sx + self.points[i][0], sy + self.points[i][1])
        });
        [sx / n, sy / n]
    }

    /// `(min_x, min_y, max_x, max_y)` over all points.
    pub fn bbox(&self) -> [f64; 4] {
        self.points.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
        )
    }
}

/// Landmark sidecar document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkFile {
    pub image: String,
    pub points: Vec<[f64; 2]>,
}

pub fn load_landmarks(path: &Path) -> Result<LandmarkSet> {
    let parse_err = |reason: String| Error::LandmarkParse {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: LandmarkFile = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    LandmarkSet::new(file.points).map_err(|e| match e {
        Error::Domain(reason) => parse_err(reason),
        other => other,
    })
}

pub fn save_landmarks(path: &Path, image: &str, landmarks: &LandmarkSet) -> Result<()> {
    let doc = LandmarkFile {
        image: image.to_string(),
        points: landmarks.points.clone(),
    };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn x1(&self) -> usize {
        self.x0 + self.width
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.x0 as f64 + self.width as f64 / 2.0,
            self.y0 as f64 + self.height as f64 / 2.0,
        ]
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1() && other.x0 < self.x1() && self.y0 < other.y1() && other.y0 < self.y1()
    }
}

/// A rectangular patch cut from an image. Pixels are row-major and keep the
/// image's sRGB encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCrop {
    pub region: Region,
    pub rect: Rect,
    pixels: Vec<[f64; 3]>,
}

impl RegionCrop {
    pub fn cut(image: &ImageGrid, region: Region, rect: Rect) -> Result<Self> {
        if rect.x1() > image.width() || rect.y1() > image.height() {
            return Err(Error::RegionExtraction {
                region,
                reason: format!("{rect:?} exceeds {}x{} image", image.width(), image.height()),
            });
        }
        let mut pixels = Vec::with_capacity(rect.area());
        for y in rect.y0..rect.y1() {
            for x in rect.x0..rect.x1() {
                pixels.push(image.get(x, y));
            }
        }
        Ok(RegionCrop {
            region,
            rect,
            pixels,
        })
    }

    /// Builds a crop directly from sRGB-encoded pixels laid out `width` x `height`.
    pub fn from_pixels(region: Region, width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Domain(format!(
                "{} pixels for a {width}x{height} crop",
                pixels.len()
            )));
        }
        Ok(RegionCrop {
            region,
            rect: Rect {
                x0: 0,
                y0: 0,
                width,
                height,
            },
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.rect.width
    }

    pub fn height(&self) -> usize {
        self.rect.height
    }

    /// sRGB-encoded pixels, row-major.
    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn linear_pixels(&self) -> Vec<[f64; 3]> {
        self.pixels.iter().map(|&p| crate::color::decode(p)).collect()
    }

    /// Linear-RGB patch matrix, one row per pixel.
    pub fn patch_matrix(&self) -> Result<PatchMatrix> {
        PatchMatrix::new(self.linear_pixels())
    }

    pub fn mean_linear(&self) -> [f64; 3] {
        let n = self.pixels.len() as f64;
        let mut acc = [0.0; 3];
        for p in self.linear_pixels() {
            for c in 0..3 {
                acc[c] += p[c];
            }
        }
        acc.map(|s| s / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceSample {
    pub image_id: String,
    pub subject_id: String,
    pub forehead: RegionCrop,
    pub left_cheek: RegionCrop,
    pub right_cheek: RegionCrop,
    pub background: Option<RegionCrop>,
    pub label: Option<String>,
}

impl FaceSample {
    pub fn new(
        image_id: impl Into<String>,
        subject_id: impl Into<String>,
        forehead: RegionCrop,
        left_cheek: RegionCrop,
        right_cheek: RegionCrop,
    ) -> Result<Self> {
        let (image_id, subject_id) = (image_id.into(), subject_id.into());
        if image_id.is_empty() || subject_id.is_empty() {
            return Err(Error::Domain("image and subject ids must be non-empty".into()));
        }
        Ok(FaceSample {
            image_id,
            subject_id,
            forehead,
            left_cheek,
            right_cheek,
            background: None,
            label: None,
        })
    }

    pub fn skin_crops(&self) -> [&RegionCrop; 3] {
        [&self.forehead, &self.left_cheek, &self.right_cheek]
    }

    pub fn crop(&self, region: Region) -> Option<&RegionCrop> {
        match region {
            Region::Forehead => Some(&self.forehead),
            Region::LeftCheek => Some(&self.left_cheek),
            Region::RightCheek => Some(&self.right_cheek),
            Region::Background => self.background.as_ref(),
        }
    }

    /// Linear-RGB union of the three skin patches.
    pub fn skin_union(&self) -> Vec<[f64; 3]> {
        self.skin_crops()
            .iter()
            .flat_map(|c| c.linear_pixels())
            .collect()
    }
}

/// The four rectangles computed from a landmark set, before any pixels are cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiLayout {
    pub forehead: Rect,
    pub left_cheek: Rect,
    pub right_cheek: Rect,
    pub background: Option<Rect>,
}

fn round_px(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

fn checked_rect(
    region: Region,
    x0: i64,
    y0: i64,
    width: i64,
    height: i64,
    image_w: usize,
    image_h: usize,
    min_side: usize,
) -> Result<Rect> {
    let fail = |reason: String| Error::RegionExtraction { region, reason };
    if width < min_side as i64 || height < min_side as i64 {
        return Err(fail(format!("degenerate {width}x{height} rect (minimum {min_side})")));
    }
    if x0 < 0 || y0 < 0 || x0 + width > image_w as i64 || y0 + height > image_h as i64 {
        return Err(fail(format!(
            "rect ({x0}, {y0}, {width}, {height}) outside {image_w}x{image_h} image"
        )));
    }
    Ok(Rect {
        x0: x0 as usize,
        y0: y0 as usize,
        width: width as usize,
        height: height as usize,
    })
}

fn forehead_rect(lm: &LandmarkSet, w: usize, h: usize, cfg: &RoiConfig) -> Result<Rect> {
    let le = lm.centroid(EYE_IMAGE_LEFT);
    let re = lm.centroid(EYE_IMAGE_RIGHT);
    let d = ((re[0] - le[0]).powi(2) + (re[1] - le[1]).powi(2)).sqrt();
    let width = round_px(cfg.forehead_width * d);
    let height = round_px(cfg.forehead_height * d);
    let cx = (le[0] + re[0]) / 2.0;
    let brow_top = BROWS.map(|i| lm.point(i)[1]).fold(f64::INFINITY, f64::min);
    let y_end = (brow_top - cfg.forehead_gap).floor() as i64;
    let x0 = round_px(cx - width as f64 / 2.0);
    checked_rect(Region::Forehead, x0, y_end - height, width, height, w, h, cfg.min_side)
}

fn cheek_rect(
    lm: &LandmarkSet,
    region: Region,
    jaw: usize,
    mouth: usize,
    w: usize,
    h: usize,
    cfg: &RoiConfig,
) -> Result<Rect> {
    let (j, m) = (lm.point(jaw), lm.point(mouth));
    let side = round_px((m[0] - j[0]).abs() * (1.0 - cfg.cheek_shrink));
    let cx = (j[0] + m[0]) / 2.0;
    let cy = (j[1] + m[1]) / 2.0;
    let x0 = round_px(cx - side as f64 / 2.0);
    let y0 = round_px(cy - side as f64 / 2.0);
    checked_rect(region, x0, y0, side, side, w, h, cfg.min_side)
}

/// Largest clear corner square; ties resolve in TL, TR, BL, BR order.
fn background_rect(face: Rect, w: usize, h: usize, cfg: &RoiConfig) -> Option<Rect> {
    let cap = (cfg.background_fraction * w.min(h) as f64).floor() as usize;
    let left = face.x0;
    let top = face.y0;
    let right = w.saturating_sub(face.x1());
    let bottom = h.saturating_sub(face.y1());
    let corners = [
        (left.max(top), false, false),
        (right.max(top), true, false),
        (left.max(bottom), false, true),
        (right.max(bottom), true, true),
    ];
    let mut best: Option<(usize, bool, bool)> = None;
    for (clear, at_right, at_bottom) in corners {
        let side = clear.min(cap);
        if side >= cfg.min_side && best.is_none_or(|b| side > b.0) {
            best = Some((side, at_right, at_bottom));
        }
    }
    best.map(|(side, at_right, at_bottom)| Rect {
        x0: if at_right { w - side } else { 0 },
        y0: if at_bottom { h - side } else { 0 },
        width: side,
        height: side,
    })
}

/// Computes all region rectangles for an image of the given size.
pub fn layout(lm: &LandmarkSet, width: usize, height: usize, cfg: &RoiConfig) -> Result<RoiLayout> {
    lm.check_bounds(width, height)?;
    let forehead = forehead_rect(lm, width, height, cfg)?;
    let left_cheek = cheek_rect(lm, Region::LeftCheek, JAW_LEFT_CHEEK, MOUTH_LEFT_CORNER, width, height, cfg)?;
    let right_cheek = cheek_rect(lm, Region::RightCheek, JAW_RIGHT_CHEEK, MOUTH_RIGHT_CORNER, width, height, cfg)?;

    let [bx0, by0, bx1, by1] = lm.bbox();
    let fx0 = (bx0.floor() as usize).min(forehead.x0);
    let fy0 = (by0.floor() as usize).min(forehead.y0);
    let fx1 = (bx1.floor() as usize + 1).max(forehead.x1());
    let fy1 = (by1.floor() as usize + 1).max(forehead.y1());
    let face = Rect {
        x0: fx0,
        y0: fy0,
        width: fx1 - fx0,
        height: fy1 - fy0,
    };
    Ok(RoiLayout {
        forehead,
        left_cheek,
        right_cheek,
        background: background_rect(face, width, height, cfg),
    })
}

/// Cuts forehead, cheek and (when a clear corner exists) background patches.
pub fn extract_crops(
    image_id: &str,
    subject_id: &str,
    image: &ImageGrid,
    landmarks: &LandmarkSet,
    cfg: &RoiConfig,
) -> Result<FaceSample> {
    let l = layout(landmarks, image.width(), image.height(), cfg)?;
    let mut sample = FaceSample::new(
        image_id,
        subject_id,
        RegionCrop::cut(image, Region::Forehead, l.forehead)?,
        RegionCrop::cut(image, Region::LeftCheek, l.left_cheek)?,
        RegionCrop::cut(image, Region::RightCheek, l.right_cheek)?,
    )?;
    sample.background = l
        .background
        .map(|r| RegionCrop::cut(image, Region::Background, r))
        .transpose()?;
    Ok(sample)
}
