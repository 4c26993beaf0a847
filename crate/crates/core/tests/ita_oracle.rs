use sreds_core::color;
use sreds_core::image::ImageGrid;
use sreds_core::ita::{compute_ita, ItaConfig};
use sreds_core::roi::{extract_crops, RoiConfig};
use sreds_core::synth::{render_face, FaceTemplate, RenderConfig, SynthSubject};

fn ita_deg(rgb: [f64; 3]) -> f64 {
    let lab = color::srgb_array_to_lab(rgb);
    ((lab.l - 50.0) / lab.b).atan().to_degrees()
}

// Loop-based reference: smooth with a clamped 3x3 box, count integer bins,
// take the fullest bin (ties by distance to the median).
fn brute_force_ita(pixels: &[[f64; 3]], w: usize, h: usize) -> f64 {
    let raw: Vec<f64> = pixels.iter().map(|&p| ita_deg(p)).collect();
    let mut smooth = Vec::with_capacity(raw.len());
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let sx = (x + dx).max(0).min(w as i64 - 1) as usize;
                    let sy = (y + dy).max(0).min(h as i64 - 1) as usize;
                    acc += raw[sy * w + sx];
                }
            }
            smooth.push(acc / 9.0);
        }
    }
    let mut counts = [0usize; 179];
    for v in &smooth {
        let bin = (v.round() as i64).clamp(-89, 89);
        counts[(bin + 89) as usize] += 1;
    }
    let mut sorted = smooth.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    let top = *counts.iter().max().unwrap();
    let mut best = f64::NAN;
    for (i, c) in counts.iter().enumerate() {
        let center = i as f64 - 89.0;
        if *c == top && (best.is_nan() || (center - median).abs() < (best - median).abs()) {
            best = center;
        }
    }
    best
}

#[test]
fn constant_faces_give_the_analytic_angle() {
    let t = FaceTemplate::default();
    for skin in [[0.85, 0.68, 0.58], [0.62, 0.45, 0.35], [0.40, 0.27, 0.20], [0.95, 0.80, 0.72]] {
        let img = ImageGrid::filled(t.width, t.height, skin).unwrap();
        let sample = extract_crops("img", "s", &img, &t.landmarks(), &RoiConfig::default()).unwrap();
        let got = compute_ita(&sample, &ItaConfig::default()).unwrap();
        assert!((got.value - ita_deg(skin)).abs() <= 0.5, "{skin:?}: {} vs {}", got.value, ita_deg(skin));
    }
}

#[test]
fn rendered_face_matches_the_brute_force_histogram() {
    let cfg = RenderConfig::default();
    for (i, tone) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let subject = SynthSubject::from_tone("s", tone);
        let (img, lm) = render_face(&subject, 15.0 * i as f64, 7 + i as u64, &cfg).unwrap();
        let sample = extract_crops("img", "s", &img, &lm, &RoiConfig::default()).unwrap();
        let got = compute_ita(&sample, &ItaConfig::default()).unwrap();
        let mut per_region = Vec::new();
        for crop in sample.skin_crops() {
            let want = brute_force_ita(crop.pixels(), crop.width(), crop.height());
            assert!((got.per_region[&crop.region] - want).abs() <= 0.5, "{:?}", crop.region);
            per_region.push(want);
        }
        let mean = per_region.iter().sum::<f64>() / 3.0;
        assert!((got.value - mean).abs() <= 0.5);
    }
}
