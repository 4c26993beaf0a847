use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sreds_core::nmf::NmfOptions;
use sreds_core::roi::Region;
use sreds_core::sreds::decompose_matrix;
use sreds_core::synth::{generate_illumination_sweep, random_scene, sweep_angles, DichromaticScene};
use sreds_core::vec3;

#[test]
fn global_brightness_leaves_the_decomposition_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = NmfOptions::default();
    for _ in 0..30 {
        let p = sreds_core::synth::generate_patch(&random_scene(&mut rng, 0.0), 400).unwrap();
        let base = decompose_matrix(&p.patch, Region::Forehead, &opts).unwrap();
        for c in [0.5, 2.0] {
            let d = decompose_matrix(&p.patch.scaled(c).unwrap(), Region::Forehead, &opts).unwrap();
            assert_eq!(d.specular_index, base.specular_index);
            assert!(vec3::cosine(d.diffuse_basis, base.diffuse_basis) >= 1.0 - 1e-6);
        }
    }
}

#[test]
fn every_decomposition_has_one_specular_and_one_diffuse_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let p = sreds_core::synth::generate_patch(&random_scene(&mut rng, 0.01), 256).unwrap();
        let d = decompose_matrix(&p.patch, Region::LeftCheek, &NmfOptions::default()).unwrap();
        assert!(d.specular_index < 2);
        assert_eq!(d.specular_basis, d.factors.h[d.specular_index]);
        assert_eq!(d.diffuse_basis, d.factors.h[d.diffuse_index()]);
    }
}

#[test]
fn specular_weight_grows_with_incidence_energy() {
    let patches = generate_illumination_sweep(&DichromaticScene::default(), &sweep_angles(7), 1024).unwrap();
    let mut points: Vec<(f64, f64)> = patches
        .iter()
        .map(|p| {
            let d = decompose_matrix(&p.patch, Region::Forehead, &NmfOptions::default()).unwrap();
            (p.interface_energy(), d.specular_weight())
        })
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in points.windows(2) {
        if pair[1].0 > pair[0].0 * (1.0 + 1e-9) {
            assert!(pair[1].1 > pair[0].1, "{points:?}");
        }
    }
}
