use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sreds_core::rsr::{fit_rsr, project_rsr, RsrConfig, RsrVariant};
use sreds_core::skinseg::{PixelSource, SkinPixelSet};

fn set(pixels: Vec<[f64; 3]>) -> SkinPixelSet {
    SkinPixelSet::new(pixels, PixelSource::PatchUnion)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

// Rotation from a random unit quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = [0; 4].map(|_| -> f64 { StandardNormal.sample(rng) });
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

#[test]
fn recovers_the_major_axis_of_a_rotated_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let r = random_rotation(&mut rng);
        let sd = [3.0, 1.0, 0.1f64.sqrt()];
        let pixels: Vec<[f64; 3]> = (0..20_000)
            .map(|_| {
                let z: [f64; 3] = [0, 1, 2].map(|i| { let g: f64 = StandardNormal.sample(&mut rng); sd[i] * g * 0.02 });
                [0, 1, 2].map(|i| 0.5 + dot(r[i], z))
            })
            .collect();
        let fit = fit_rsr(&[set(pixels)], 0, RsrVariant::Rsr, &RsrConfig::default()).unwrap();
        let major = [r[0][0], r[1][0], r[2][0]];
        assert!(dot(fit.axis, major).abs() >= 0.999);
    }
}

#[test]
fn projection_is_the_mean_of_centered_dot_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pool: Vec<[f64; 3]> = (0..2000).map(|_| [rng.random(), rng.random::<f64>() * 0.5, rng.random::<f64>() * 0.3]).collect();
    let fit = fit_rsr(&[set(pool)], 1, RsrVariant::Rsr, &RsrConfig::default()).unwrap();
    for _ in 0..20 {
        let n = rng.random_range(1..500);
        let px: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let mut want = 0.0;
        for p in &px {
            want += (p[0] - fit.center[0]) * fit.axis[0] + (p[1] - fit.center[1]) * fit.axis[1] + (p[2] - fit.center[2]) * fit.axis[2];
        }
        want /= n as f64;
        assert!((project_rsr(&fit, &set(px)).unwrap() - want).abs() <= 1e-9);
    }
}

#[test]
fn two_subjects_along_the_axis_differ_by_their_offset() {
    let dir = [0.7, 0.5, 0.3].map(|v: f64| v / (0.49f64 + 0.25 + 0.09).sqrt());
    let base = [0.4, 0.3, 0.2];
    let at = |t: f64| [0, 1, 2].map(|i| base[i] + t * dir[i]);
    let pool: Vec<[f64; 3]> = (0..1000).map(|i| at(-0.2 + 0.4 * i as f64 / 999.0)).collect();
    let fit = fit_rsr(&[set(pool)], 0, RsrVariant::RsrStar, &RsrConfig::default()).unwrap();
    let a = project_rsr(&fit, &set(vec![at(0.15); 50])).unwrap();
    let b = project_rsr(&fit, &set(vec![at(-0.05); 50])).unwrap();
    assert!((a - b - 0.2).abs() <= 1e-6);
}
