//! Synthetic ground truth from the dichromatic reflection model.
//!
//! Every skin pixel is `m_b·C_b + m_i(p)·C_i (+ noise)` in linear RGB: a
//! constant (Lambertian) body term and a Gaussian interface highlight whose
//! peak falls off as `cos^k` of the incidence angle. Because the bases and
//! magnitudes are known, the generated data serve as oracles for the NMF
//! recovery, specular assignment and illumination-stability checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::color;
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::nmf::{PatchMatrix, MIN_ROWS};
use crate::roi::{self, LandmarkSet, RoiConfig};
use crate::vec3;

/// Largest tolerated fraction of pixels pushed outside `[0, 1]`.
pub const CLIP_LIMIT: f64 = 0.10;

/// Gaussian interface highlight, in coordinates normalized to the patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecularProfile {
    pub center: [f64; 2],
    /// Standard deviation as a fraction of the patch side.
    pub width: f64,
    /// Magnitude at the center for normal incidence.
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichromaticScene {
    pub body_color: [f64; 3],
    pub interface_color: [f64; 3],
    /// Degrees.
    pub incidence_angle: f64,
    pub diffuse_level: f64,
    pub specular: SpecularProfile,
    /// Exponent `k` of the `cos^k` incidence falloff.
    pub specular_exponent: i32,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DichromaticScene {
    fn default() -> Self {
        DichromaticScene {
            body_color: vec3::normalized([0.62, 0.36, 0.25]),
            interface_color: vec3::normalized([1.0, 1.0, 1.0]),
            incidence_angle: 0.0,
            diffuse_level: 0.35,
            specular: SpecularProfile {
                center: [0.5, 0.5],
                width: 0.2,
                peak: 0.9,
            },
            specular_exponent: 4,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl DichromaticScene {
    /// Re-normalizes both colors to unit length and checks magnitudes.
    pub fn validated(mut self) -> Result<Self> {
        for (name, c) in [("body", &mut self.body_color), ("interface", &mut self.interface_color)] {
            if c.iter().any(|v| *v < 0.0 || !v.is_finite()) || vec3::norm(*c) == 0.0 {
                return Err(Error::Domain(format!("{name} color {c:?} must be non-negative and non-zero")));
            }
            *c = vec3::normalized(*c);
        }
        let ok = self.diffuse_level >= 0.0
            && self.specular.peak >= 0.0
            && self.specular.width > 0.0
            && self.noise_sigma >= 0.0
            && self.specular_exponent >= 0;
        if !ok {
            return Err(Error::Domain(format!("scene magnitudes out of range: {self:?}")));
        }
        Ok(self)
    }

    /// Highlight peak after the incidence falloff.
    pub fn effective_peak(&self) -> f64 {
        let c = (self.incidence_angle * PI / 180.0).cos().max(0.0);
        self.specular.peak * c.powi(self.specular_exponent)
    }

    /// Interface magnitude at normalized patch position `(u, v)`.
    pub fn specular_magnitude(&self, u: f64, v: f64) -> f64 {
        let s = self.specular;
        let d2 = (u - s.center[0]).powi(2) + (v - s.center[1]).powi(2);
        self.effective_peak() * (-d2 / (2.0 * s.width * s.width)).exp()
    }
}

/// A generated patch together with the generator's inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPatch {
    pub patch: PatchMatrix,
    pub width: usize,
    pub height: usize,
    pub body_color: [f64; 3],
    pub interface_color: [f64; 3],
    pub body_magnitude: Vec<f64>,
    pub interface_magnitude: Vec<f64>,
    pub clipped_fraction: f64,
}

impl SynthPatch {
    /// Pixel-averaged channel sums of the two reflection terms, `(interface, body)`.
    pub fn effective_sums(&self) -> (f64, f64) {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (
            mean(&self.interface_magnitude) * self.interface_color.iter().sum::<f64>(),
            mean(&self.body_magnitude) * self.body_color.iter().sum::<f64>(),
        )
    }

    /// True when the interface term outweighs the body term in channel sum.
    pub fn specular_dominates(&self) -> bool {
        let (i, b) = self.effective_sums();
        i > b
    }

    pub fn interface_energy(&self) -> f64 {
        self.interface_magnitude.iter().sum()
    }
}

fn grid_for(n: usize) -> (usize, usize) {
    let w = (n as f64).sqrt().ceil() as usize;
    (w, n.div_ceil(w))
}

/// Renders `n` pixels of the scene on a near-square grid (row-major).
pub fn generate_patch(scene: &DichromaticScene, n: usize) -> Result<SynthPatch> {
    if n < MIN_ROWS {
        return Err(Error::InsufficientPixels { count: n, needed: MIN_ROWS });
    }
    let scene = scene.clone().validated()?;
    let (w, h) = grid_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = Normal::new(0.0, scene.noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;

    let mut rows = Vec::with_capacity(n);
    let mut mi = Vec::with_capacity(n);
    let mut clipped = 0usize;
    for i in 0..n {
        let (x, y) = (i % w, i / w);
        let u = (x as f64 + 0.5) / w as f64;
        let v = (y as f64 + 0.5) / h as f64;
        let m = scene.specular_magnitude(u, v);
        let mut p = [0.0; 3];
        for c in 0..3 {
            p[c] = scene.diffuse_level * scene.body_color[c] + m * scene.interface_color[c];
            if scene.noise_sigma > 0.0 {
                p[c] += noise.sample(&mut rng);
            }
        }
        if p.iter().any(|c| !(0.0..=1.0).contains(c)) {
            clipped += 1;
        }
        rows.push(p.map(|c| c.clamp(0.0, 1.0)));
        mi.push(m);
    }
    let fraction = clipped as f64 / n as f64;
    if fraction > CLIP_LIMIT {
        return Err(Error::Clipping { fraction, limit: CLIP_LIMIT });
    }
    Ok(SynthPatch {
        patch: PatchMatrix::new(rows)?,
        width: w,
        height: h,
        body_color: scene.body_color,
        interface_color: scene.interface_color,
        body_magnitude: vec![scene.diffuse_level; n],
        interface_magnitude: mi,
        clipped_fraction: fraction,
    })
}

/// Per-image seed; index 0 keeps the scene seed.
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One patch per incidence angle; only the interface energy changes.
pub fn generate_illumination_sweep(
    scene: &DichromaticScene,
    angles: &[f64],
    n: usize,
) -> Result<Vec<SynthPatch>> {
    if angles.is_empty() {
        return Err(Error::InsufficientData { got: 0, needed: 1 });
    }
    angles
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut s = scene.clone();
            s.incidence_angle = a;
            s.seed = derived_seed(scene.seed, i as u64);
            generate_patch(&s, n)
        })
        .collect()
}

/// `count` evenly spaced angles over `[-45°, 45°]` (a single angle is 0°).
pub fn sweep_angles(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -45.0 + 90.0 * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Random scene family used by the recovery and assignment oracles.
pub fn random_scene(rng: &mut impl Rng, noise_sigma: f64) -> DichromaticScene {
    let tone: f64 = rng.random();
    let body_color = skin_color(tone);
    let diffuse_level = rng.random_range(0.2..0.4);
    let interface_color = vec3::normalized([1.0, 1.0, 1.0]);
    let headroom = (1.0 - diffuse_level * vec3::max(body_color)) / vec3::max(interface_color);
    DichromaticScene {
        body_color,
        interface_color,
        incidence_angle: 0.0,
        diffuse_level,
        specular: SpecularProfile {
            center: [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)],
            width: rng.random_range(0.15..0.35),
            peak: headroom * rng.random_range(0.7..0.95),
        },
        specular_exponent: 4,
        noise_sigma,
        seed: rng.random(),
    }
}

/// Unit body color on a dark-to-light skin locus, `tone` in `[0, 1]`.
pub fn skin_color(tone: f64) -> [f64; 3] {
    let dark = [0.80, 0.42, 0.24];
    let light = [0.70, 0.55, 0.46];
    let t = tone.clamp(0.0, 1.0);
    vec3::normalized([0, 1, 2].map(|c| dark[c] + t * (light[c] - dark[c])))
}

/// Canonical frontal 68-point face on a fixed canvas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaceTemplate {
    pub width: usize,
    pub height: usize,
    /// Uniform scale applied to the template geometry about the canvas center.
    pub scale: f64,
}

impl Default for FaceTemplate {
    fn default() -> Self {
        FaceTemplate {
            width: 256,
            height: 256,
            scale: 1.0,
        }
    }
}

impl FaceTemplate {
    fn origin(&self) -> [f64; 2] {
        [self.width as f64 / 2.0, self.height as f64 / 2.0]
    }

    /// Template coordinates are offsets from the canvas center at unit scale.
    fn place(&self, dx: f64, dy: f64) -> [f64; 2] {
        let o = self.origin();
        [(o[0] + dx * self.scale).round(), (o[1] + dy * self.scale).round()]
    }

    pub fn landmarks(&self) -> LandmarkSet {
        let mut pts = Vec::with_capacity(68);
        // Jaw 0..=16: lower half-ellipse from ear to ear through the chin.
        for i in 0..17 {
            let t = PI * i as f64 / 16.0;
            pts.push(self.place(-70.0 * t.cos(), -8.0 + 80.0 * t.sin()));
        }
        // Brows 17..=26.
        for (start, end) in [(-55.0, -15.0), (15.0, 55.0)] {
            for i in 0..5 {
                let f = i as f64 / 4.0;
                let x: f64 = start + f * (end - start);
                let lift = 4.0 * (PI * f).sin();
                pts.push(self.place(x, -36.0 - lift));
            }
        }
        // Nose bridge 27..=30 and base 31..=35.
        for i in 0..4 {
            pts.push(self.place(0.0, -28.0 + 9.0 * i as f64));
        }
        for i in 0..5 {
            pts.push(self.place(-12.0 + 6.0 * i as f64, 14.0));
        }
        // Eyes 36..=41 and 42..=47: outer/inner corners plus lids.
        for (cx, flip) in [(-30.0, 1.0), (30.0, -1.0)] {
            for deg in [180.0f64, 120.0, 60.0, 0.0, 300.0, 240.0] {
                let a = deg.to_radians();
                pts.push(self.place(cx + flip * 10.0 * a.cos(), -20.0 - 4.0 * a.sin()));
            }
        }
        // Outer lip 48..=59 from the left corner over the top, inner lip 60..=67.
        for i in 0..12 {
            let a = PI - 2.0 * PI * i as f64 / 12.0;
            pts.push(self.place(22.0 * a.cos(), 42.0 - 8.0 * a.sin()));
        }
        for i in 0..8 {
            let a = PI - 2.0 * PI * i as f64 / 8.0;
            pts.push(self.place(14.0 * a.cos(), 42.0 - 3.0 * a.sin()));
        }
        LandmarkSet::new(pts).expect("template geometry is valid")
    }

    /// Skin ellipse `(center, semi-axes)` in pixels.
    pub fn face_ellipse(&self) -> ([f64; 2], [f64; 2]) {
        (self.place(0.0, -3.0), [82.0 * self.scale, 90.0 * self.scale])
    }
}

/// Appearance of one synthetic subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSubject {
    pub subject_id: String,
    pub tone: f64,
    pub body_color: [f64; 3],
    pub diffuse_level: f64,
    pub label: String,
}

impl SynthSubject {
    /// Darker tones get lower diffuse levels as well as redder chromaticity.
    pub fn from_tone(subject_id: impl Into<String>, tone: f64) -> Self {
        let t = tone.clamp(0.0, 1.0);
        SynthSubject {
            subject_id: subject_id.into(),
            tone: t,
            body_color: skin_color(t),
            diffuse_level: 0.25 + 0.4 * t,
            label: if t < 0.5 { "darker" } else { "lighter" }.to_string(),
        }
    }
}

/// Illumination and rendering parameters shared by a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub template: FaceTemplate,
    pub interface_color: [f64; 3],
    /// Highlight peak at normal incidence, as a fraction of the unclipped headroom.
    pub peak_fraction: f64,
    /// Highlight standard deviation as a fraction of each ROI side.
    pub highlight_width: f64,
    pub specular_exponent: i32,
    pub noise_sigma: f64,
    /// Linear-RGB background.
    pub background: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            template: FaceTemplate::default(),
            interface_color: vec3::normalized([1.0, 1.0, 1.0]),
            peak_fraction: 0.85,
            highlight_width: 0.22,
            specular_exponent: 4,
            noise_sigma: 0.0,
            background: [0.18, 0.18, 0.18],
        }
    }
}

/// Renders one sRGB face image under a given incidence angle.
///
/// Skin inside the template ellipse follows the dichromatic model with one
/// highlight centered on each skin ROI; eyes and mouth are not drawn.
pub fn render_face(
    subject: &SynthSubject,
    angle: f64,
    seed: u64,
    cfg: &RenderConfig,
) -> Result<(ImageGrid, LandmarkSet)> {
    let t = &cfg.template;
    let lm = t.landmarks();
    let l = roi::layout(&lm, t.width, t.height, &RoiConfig::default())?;
    let ci = vec3::normalized(cfg.interface_color);
    let cb = vec3::normalized(subject.body_color);
    let headroom = (1.0 - subject.diffuse_level * vec3::max(cb)) / vec3::max(ci);
    let scene = DichromaticScene {
        body_color: cb,
        interface_color: ci,
        incidence_angle: angle,
        diffuse_level: subject.diffuse_level,
        specular: SpecularProfile {
            center: [0.5, 0.5],
            width: cfg.highlight_width,
            peak: headroom * cfg.peak_fraction,
        },
        specular_exponent: cfg.specular_exponent,
        noise_sigma: cfg.noise_sigma,
        seed,
    };
    let peak = scene.effective_peak();
    let lobes: Vec<([f64; 2], f64)> = [l.forehead, l.left_cheek, l.right_cheek]
        .iter()
        .map(|r| (r.center(), cfg.highlight_width * r.width.min(r.height) as f64))
        .collect();

    let (center, axes) = t.face_ellipse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut img = ImageGrid::filled(t.width, t.height, color::encode(cfg.background))?;
    for y in 0..t.height {
        for x in 0..t.width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let e = ((px - center[0]) / axes[0]).powi(2) + ((py - center[1]) / axes[1]).powi(2);
            if e > 1.0 {
                continue;
            }
            let m: f64 = lobes
                .iter()
                .map(|(c, s)| peak * (-((px - c[0]).powi(2) + (py - c[1]).powi(2)) / (2.0 * s * s)).exp())
                .sum();
            let mut p = [0.0; 3];
            for c in 0..3 {
                p[c] = subject.diffuse_level * cb[c] + m * ci[c];
                if cfg.noise_sigma > 0.0 {
                    p[c] += noise.sample(&mut rng);
                }
            }
            img.set(x, y, color::encode(p.map(|v| v.clamp(0.0, 1.0))));
        }
    }
    Ok((img, lm))
}
