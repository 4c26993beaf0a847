//! Colorspace conversions shared by every metric.
//!
//! Pixels enter the pipeline as sRGB-encoded values in `[0, 1]` (8-bit
//! samples divided by 255). Linear-light math (NMF, PCA, luminance) runs on
//! decoded values; CIE-Lab is computed from the encoded values through the
//! standard sRGB → linear → XYZ (D65, 2° observer) → Lab chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// sRGB (IEC 61966-2-1) linear RGB to XYZ, D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Rec. 709 luma weights on linear RGB.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

const LAB_DELTA: f64 = 6.0 / 29.0;

/// Reference white: the XYZ image of linear (1, 1, 1), so white maps to
/// zero chroma exactly.
fn white_point() -> [f64; 3] {
    let row = |i: usize| RGB_TO_XYZ[i].iter().sum::<f64>();
    [row(0), row(1), row(2)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgbPixel {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl RgbPixel {
    /// Validating constructor; every channel must be finite and in `[0, 1]`.
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        let p = RgbPixel { r, g, b };
        p.check()?;
        Ok(p)
    }

    pub fn gray(v: f64) -> Result<Self> {
        Self::new(v, v, v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    fn check(&self) -> Result<()> {
        for (name, c) in [("r", self.r), ("g", self.g), ("b", self.b)] {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::Domain(format!("channel {name} = {c} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

impl TryFrom<[f64; 3]> for RgbPixel {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        RgbPixel::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabPixel {
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// sRGB decoding of one channel (no range check).
#[inline]
pub fn decode_channel(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB encoding of one linear channel (no range check).
#[inline]
pub fn encode_channel(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
pub fn decode(p: [f64; 3]) -> [f64; 3] {
    p.map(decode_channel)
}

#[inline]
pub fn encode(p: [f64; 3]) -> [f64; 3] {
    p.map(encode_channel)
}

pub fn srgb_to_linear(p: RgbPixel) -> Result<RgbPixel> {
    p.check()?;
    let [r, g, b] = decode(p.to_array());
    Ok(RgbPixel { r, g, b })
}

pub fn linear_to_srgb(p: RgbPixel) -> Result<RgbPixel> {
    p.check()?;
    let [r, g, b] = encode(p.to_array());
    Ok(RgbPixel { r, g, b })
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * LAB_DELTA * LAB_DELTA) + 4.0 / 29.0
    }
}

/// Lab of an sRGB-encoded triple, without the range check.
pub fn srgb_array_to_lab(p: [f64; 3]) -> LabPixel {
    let lin = decode(p);
    let white = white_point();
    let mut xyz = [0.0; 3];
    for (i, row) in RGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / white[0]);
    let fy = lab_f(xyz[1] / white[1]);
    let fz = lab_f(xyz[2] / white[2]);
    LabPixel {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// CIE-Lab of an sRGB-encoded pixel.
pub fn rgb_to_lab(p: RgbPixel) -> Result<LabPixel> {
    p.check()?;
    Ok(srgb_array_to_lab(p.to_array()))
}

/// Inverse of [`srgb_array_to_lab`]; the result may fall outside `[0, 1]`
/// for out-of-gamut colors.
pub fn lab_to_srgb_array(lab: LabPixel) -> [f64; 3] {
    let white = white_point();
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let finv = |f: f64| {
        if f > LAB_DELTA {
            f.powi(3)
        } else {
            3.0 * LAB_DELTA * LAB_DELTA * (f - 4.0 / 29.0)
        }
    };
    let xyz = nalgebra::Vector3::new(finv(fx) * white[0], finv(fy) * white[1], finv(fz) * white[2]);
    let m = nalgebra::Matrix3::from_fn(|i, j| RGB_TO_XYZ[i][j]);
    let inv = m.try_inverse().expect("sRGB matrix is invertible");
    let lin = inv * xyz;
    encode([lin[0], lin[1], lin[2]])
}

#[inline]
pub fn luminance_of(p: [f64; 3]) -> f64 {
    LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2]
}

/// Relative luminance of a linear RGB pixel.
pub fn luminance(p: RgbPixel) -> f64 {
    luminance_of(p.to_array())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn px(r: f64, g: f64, b: f64) -> RgbPixel {
        RgbPixel::new(r, g, b).unwrap()
    }

    #[test]
    fn transfer_fixed_points() {
        assert_eq!(srgb_to_linear(px(0.0, 0.0, 0.0)).unwrap(), px(0.0, 0.0, 0.0));
        let one = srgb_to_linear(px(1.0, 1.0, 1.0)).unwrap();
        for c in one.to_array() {
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mid_gray_decodes_to_known_constant() {
        // ((0.5 + 0.055) / 1.055)^2.4 = 0.214041...
        let lin = srgb_to_linear(px(0.5, 0.5, 0.5)).unwrap();
        for c in lin.to_array() {
            assert!((c - 0.2140).abs() < 1e-3);
        }
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        assert!(matches!(RgbPixel::new(1.2, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(RgbPixel::new(f64::NAN, 0.0, 0.0).is_err());
        let raw = RgbPixel { r: -0.1, g: 0.0, b: 0.0 };
        assert!(srgb_to_linear(raw).is_err());
    }

    #[test]
    fn lab_white_and_black() {
        let w = rgb_to_lab(px(1.0, 1.0, 1.0)).unwrap();
        assert!((w.l - 100.0).abs() < 0.01);
        assert!(w.a.abs() < 0.01 && w.b.abs() < 0.01);
        let k = rgb_to_lab(px(0.0, 0.0, 0.0)).unwrap();
        assert_eq!((k.l, k.a, k.b), (0.0, 0.0, 0.0));
    }

    #[test]
    fn luminance_weights() {
        assert!((luminance(px(1.0, 1.0, 1.0)) - 1.0).abs() < 1e-12);
        assert_eq!(luminance(px(0.0, 0.0, 0.0)), 0.0);
        assert_eq!(luminance(px(1.0, 0.0, 0.0)), 0.2126);
    }

    #[test]
    fn gray_axis_is_achromatic_and_monotone() {
        let mut prev = -1.0;
        for i in 0..=255 {
            let g = i as f64 / 255.0;
            let lab = rgb_to_lab(px(g, g, g)).unwrap();
            assert!(lab.a.abs() < 0.01 && lab.b.abs() < 0.01, "gray {g}: {lab:?}");
            assert!(lab.l > prev);
            prev = lab.l;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn transfer_round_trip(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = px(r, g, b);
            let back = linear_to_srgb(srgb_to_linear(p).unwrap()).unwrap();
            prop_assert!((back.r - r).abs() < 1e-6);
            prop_assert!((back.g - g).abs() < 1e-6);
            prop_assert!((back.b - b).abs() < 1e-6);
        }
    }
}
