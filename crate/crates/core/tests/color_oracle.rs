use sreds_core::color::{self, RgbPixel};

// Straight transcription of the CIE 1976 formulas with the published sRGB
// matrix and D65 white.
fn cie_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) });
    let x = 0.4124564 * lin[0] + 0.3575761 * lin[1] + 0.1804375 * lin[2];
    let y = 0.2126729 * lin[0] + 0.7151522 * lin[1] + 0.0721750 * lin[2];
    let z = 0.0193339 * lin[0] + 0.1191920 * lin[1] + 0.9503041 * lin[2];
    let f = |t: f64| {
        let d: f64 = 6.0 / 29.0;
        if t > d.powi(3) {
            t.cbrt()
        } else {
            t / (3.0 * d * d) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.95047), f(y / 1.0), f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[test]
fn lab_matches_the_cie_formulas() {
    let mut samples = vec![[0.8, 0.6, 0.45], [0.2, 0.1, 0.05], [0.02, 0.03, 0.01], [0.5, 0.5, 0.5]];
    for i in 0..50 {
        let t = i as f64 / 49.0;
        samples.push([t, (t * 7.0).fract(), (t * 13.0).fract()]);
    }
    for s in samples {
        let want = cie_lab(s);
        let got = color::rgb_to_lab(RgbPixel::new(s[0], s[1], s[2]).unwrap()).unwrap();
        for (g, w) in [got.l, got.a, got.b].iter().zip(want) {
            assert!((g - w).abs() <= 0.05, "{s:?}: {g} vs {w}");
        }
    }
}

#[test]
fn srgb_midpoint_decodes_to_the_reference_value() {
    let lin = color::srgb_to_linear(RgbPixel::gray(0.5).unwrap()).unwrap();
    assert!((lin.r - 0.2140).abs() < 1e-3);
    let white = color::rgb_to_lab(RgbPixel::gray(1.0).unwrap()).unwrap();
    assert!((white.l - 100.0).abs() < 0.01);
}
