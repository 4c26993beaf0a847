//! Individual Typology Angle.
//!
//! Per region: pixel-wise ITA, a mean filter over the ITA map, then the mode
//! of a fixed-width histogram. The face value is the mean of the forehead
//! and cheek modes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::color::{self, LabPixel};
use crate::error::{Error, Result};
use crate::roi::{FaceSample, Region, RegionCrop};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItaConfig {
    /// Side of the square mean filter; 1 disables smoothing.
    pub filter_size: usize,
    /// Histogram bin width in degrees; bins are centered on multiples of it.
    pub bin_width: f64,
    pub min_pixels: usize,
}

impl Default for ItaConfig {
    fn default() -> Self {
        ItaConfig {
            filter_size: 3,
            bin_width: 1.0,
            min_pixels: 64,
        }
    }
}

impl ItaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.filter_size == 0 || self.filter_size % 2 == 0 || !(self.bin_width > 0.0) || self.bin_width > 45.0 {
            return Err(Error::InvalidConfig(format!("ita settings out of range: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItaResult {
    pub per_region: BTreeMap<Region, f64>,
    pub value: f64,
}

/// Pixel ITA in degrees, `atan((L − 50) / b)`; `None` when `L = 50` and `b = 0`.
pub fn pixel_ita(p: LabPixel) -> Option<f64> {
    let dl = p.l - 50.0;
    if p.b == 0.0 {
        if dl == 0.0 {
            return None;
        }
        return Some(90.0f64.copysign(dl));
    }
    Some((dl / p.b).atan().to_degrees())
}

/// Pixel ITA map of a crop, row-major.
pub fn ita_map(crop: &RegionCrop) -> Vec<Option<f64>> {
    crop.pixels()
        .iter()
        .map(|&p| pixel_ita(color::srgb_array_to_lab(p)))
        .collect()
}

/// Mean filter with edge replication; undefined pixels stay undefined and
/// do not contribute to their neighbors.
pub fn mean_filter(map: &[Option<f64>], width: usize, height: usize, size: usize) -> Vec<Option<f64>> {
    if size <= 1 {
        return map.to_vec();
    }
    let r = (size / 2) as i64;
    let mut out = vec![None; map.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            if map[(y as usize) * width + x as usize].is_none() {
                continue;
            }
            let (mut sum, mut n) = (0.0, 0usize);
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, width as i64 - 1) as usize;
                    let sy = (y + dy).clamp(0, height as i64 - 1) as usize;
                    if let Some(v) = map[sy * width + sx] {
                        sum += v;
                        n += 1;
                    }
                }
            }
            out[(y as usize) * width + x as usize] = Some(sum / n as f64);
        }
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Mode of `values` on bins centered at multiples of `bin_width`, restricted
/// to the open interval (−90°, 90°). Ties go to the bin nearer the median,
/// then to the lower bin.
pub fn histogram_mode(values: &[f64], bin_width: f64) -> f64 {
    let last = ((90.0 / bin_width).ceil() as i64 - 1).max(0);
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        let k = (v / bin_width).round() as i64;
        *counts.entry(k.clamp(-last, last)).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let mut sorted = values.to_vec();
    let med = median(&mut sorted);
    counts
        .iter()
        .filter(|(_, c)| **c == top)
        .map(|(k, _)| *k as f64 * bin_width)
        .min_by(|a, b| (a - med).abs().total_cmp(&(b - med).abs()))
        .unwrap_or(0.0)
}

pub fn region_ita(crop: &RegionCrop, cfg: &ItaConfig) -> Result<f64> {
    let map = ita_map(crop);
    let valid = map.iter().flatten().count();
    if valid < cfg.min_pixels {
        return Err(Error::InsufficientPixels {
            count: valid,
            needed: cfg.min_pixels,
        });
    }
    let smoothed = mean_filter(&map, crop.width(), crop.height(), cfg.filter_size);
    let values: Vec<f64> = smoothed.into_iter().flatten().collect();
    Ok(histogram_mode(&values, cfg.bin_width))
}

pub fn compute_ita(sample: &FaceSample, cfg: &ItaConfig) -> Result<ItaResult> {
    let mut per_region = BTreeMap::new();
    for crop in sample.skin_crops() {
        let v = region_ita(crop, cfg).map_err(|e| Error::MetricUnavailable {
            region: crop.region,
            source: Box::new(e),
        })?;
        per_region.insert(crop.region, v);
    }
    let value = per_region.values().sum::<f64>() / per_region.len() as f64;
    Ok(ItaResult { per_region, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(l: f64, a: f64, b: f64) -> LabPixel {
        LabPixel { l, a, b }
    }

    fn srgb(l: f64, b: f64) -> [f64; 3] {
        color::lab_to_srgb_array(lab(l, 10.0, b))
    }

    fn crop(width: usize, height: usize, px: impl Fn(usize, usize) -> [f64; 3]) -> RegionCrop {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| px(x, y))
            .collect();
        RegionCrop::from_pixels(Region::Forehead, width, height, pixels).unwrap()
    }

    #[test]
    fn analytic_pixel_angles() {
        assert_eq!(pixel_ita(lab(50.0, 0.0, 10.0)), Some(0.0));
        assert!((pixel_ita(lab(60.0, 0.0, 10.0)).unwrap() - 45.0).abs() < 1e-12);
        // atan(21.6 / 15) = 55.217°
        assert!((pixel_ita(lab(71.6, 0.0, 15.0)).unwrap() - 55.2).abs() < 0.1);
        assert_eq!(pixel_ita(lab(50.0, 3.0, 0.0)), None);
        assert_eq!(pixel_ita(lab(70.0, 0.0, 0.0)), Some(90.0));
        assert_eq!(pixel_ita(lab(20.0, 0.0, 0.0)), Some(-90.0));
    }

    #[test]
    fn constant_crop_returns_its_angle() {
        let c = crop(10, 10, |_, _| srgb(60.0, 10.0));
        assert_eq!(region_ita(&c, &ItaConfig::default()).unwrap(), 45.0);
    }

    #[test]
    fn majority_block_wins() {
        // 100x10 crop: columns 0..50 at 45°, 50..99 at 0°, column 99 at
        // atan(20/10) = 63.4°. After the 3x3 filter, columns 49, 50, 98 and
        // 99 take intermediate values; 49 columns (490 px) stay at 45° and
        // 47 columns (470 px) stay at 0°.
        let c = crop(100, 10, |x, _| match x {
            0..50 => srgb(60.0, 10.0),
            50..99 => srgb(50.0, 10.0),
            _ => srgb(70.0, 10.0),
        });
        assert_eq!(region_ita(&c, &ItaConfig::default()).unwrap(), 45.0);
    }

    #[test]
    fn too_few_pixels() {
        let c = RegionCrop::from_pixels(Region::Forehead, 5, 2, vec![srgb(60.0, 10.0); 10]).unwrap();
        assert!(matches!(
            region_ita(&c, &ItaConfig::default()),
            Err(Error::InsufficientPixels { count: 10, needed: 64 })
        ));
    }

    #[test]
    fn undefined_pixels_are_excluded() {
        // Neutral gray at L = 50 has b = 0: every pixel undefined.
        let gray = color::lab_to_srgb_array(lab(50.0, 0.0, 0.0));
        let c = crop(10, 10, |_, _| gray);
        let map = ita_map(&c);
        let undefined = map.iter().filter(|v| v.is_none()).count();
        assert!(undefined > 0 || map.iter().flatten().all(|v| v.abs() > 80.0));
    }

    #[test]
    fn ties_prefer_the_bin_nearer_the_median() {
        let values = [10.0, 10.0, 20.0, 20.0, 19.0];
        assert_eq!(histogram_mode(&values, 1.0), 20.0);
        let values = [10.0, 10.0, 20.0, 20.0, 11.0];
        assert_eq!(histogram_mode(&values, 1.0), 10.0);
    }

    #[test]
    fn modes_stay_inside_the_open_interval() {
        assert_eq!(histogram_mode(&[90.0, 90.0], 1.0), 89.0);
        assert_eq!(histogram_mode(&[-90.0], 1.0), -89.0);
    }

    #[test]
    fn brighter_patch_has_larger_ita() {
        let dim = crop(10, 10, |_, _| srgb(55.0, 12.0));
        let bright = crop(10, 10, |_, _| srgb(65.0, 12.0));
        let cfg = ItaConfig::default();
        assert!(region_ita(&dim, &cfg).unwrap() < region_ita(&bright, &cfg).unwrap());
    }

    #[test]
    fn unsmoothed_mode_ignores_pixel_order() {
        let cfg = ItaConfig { filter_size: 1, ..ItaConfig::default() };
        let a = crop(12, 12, |x, y| srgb(50.0 + ((x * 7 + y * 3) % 11) as f64, 10.0));
        let mut px = a.pixels().to_vec();
        px.reverse();
        px.rotate_left(17);
        let b = RegionCrop::from_pixels(Region::Forehead, 12, 12, px).unwrap();
        assert_eq!(region_ita(&a, &cfg).unwrap(), region_ita(&b, &cfg).unwrap());
    }

    #[test]
    fn face_value_is_the_mean_of_region_modes() {
        let mk = |region, l| {
            let c = crop(10, 10, |_, _| srgb(l, 10.0));
            RegionCrop::from_pixels(region, 10, 10, c.pixels().to_vec()).unwrap()
        };
        // tan(40°)·10 + 50, tan(45°)·10 + 50, tan(50°)·10 + 50
        let ls = [40.0f64, 45.0, 50.0].map(|d| 50.0 + 10.0 * d.to_radians().tan());
        let s = FaceSample::new(
            "img",
            "subj",
            mk(Region::Forehead, ls[0]),
            mk(Region::LeftCheek, ls[1]),
            mk(Region::RightCheek, ls[2]),
        )
        .unwrap();
        let r = compute_ita(&s, &ItaConfig::default()).unwrap();
        assert_eq!(r.per_region[&Region::Forehead], 40.0);
        assert_eq!(r.value, 45.0);
    }

    #[test]
    fn failing_region_is_reported() {
        let ok = crop(10, 10, |_, _| srgb(60.0, 10.0));
        let small = RegionCrop::from_pixels(Region::RightCheek, 3, 3, vec![srgb(60.0, 10.0); 9]).unwrap();
        let s = FaceSample::new("i", "s", ok.clone(), ok, small).unwrap();
        match compute_ita(&s, &ItaConfig::default()) {
            Err(Error::MetricUnavailable { region, .. }) => assert_eq!(region, Region::RightCheek),
            other => panic!("{other:?}"),
        }
    }
}
