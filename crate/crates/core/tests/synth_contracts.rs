use proptest::prelude::*;

use hogquad::image::{radial_amplitude_profile, spectral_slope, Image};
use hogquad::synth::{
    derive_seed, generate_ensemble, sample_pink_noise, sample_similarity_warp, synthesize_set, warp_image,
    EnsembleKind, EnsembleSpec, SimilarityTransform, WarpSpec,
};

#[test]
fn mean_warp_rms_hits_the_target() {
    let mut total = 0.0;
    for seed in 0..1000 {
        let spec = WarpSpec::for_image(80, 80, 10.0, derive_seed(42, 0, seed)).unwrap();
        let t = sample_similarity_warp(&spec).unwrap();
        total += t.rms_displacement(&spec.reference_points);
    }
    let mean = total / 1000.0;
    assert!((9.99..=10.01).contains(&mean), "{mean}");
}

#[test]
fn warp_round_trip_recovers_the_interior() {
    let n = 40;
    let c = (n as f64 - 1.0) / 2.0;
    let blob = Image::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        (-(dx * dx + dy * dy) / (2.0 * 36.0)).exp()
    });
    for seed in 0..20 {
        let spec = WarpSpec::for_image(n, n, 2.0, seed).unwrap();
        let t = sample_similarity_warp(&spec).unwrap();
        let back = warp_image(&warp_image(&blob, &t), &t.inverse());
        let mut sq = 0.0;
        let mut count = 0.0;
        for y in 5..n - 5 {
            for x in 5..n - 5 {
                sq += (back.get(x, y) - blob.get(x, y)).powi(2);
                count += 1.0;
            }
        }
        let rms = (sq / count).sqrt();
        assert!(rms < 0.05, "seed {seed}: {rms}");
    }
}

#[test]
fn integer_translation_moves_pixels_exactly() {
    let img = Image::from_fn(9, 7, |x, y| (x * 7 + y * 3) as f64);
    let t = SimilarityTransform::new(1.0, 0.0, (2.0, -1.0)).unwrap();
    let out = warp_image(&img, &t);
    for y in 0..7 {
        for x in 0..9 {
            let expected = if x >= 2 && y + 1 < 7 {
                img.get(x - 2, y + 1)
            } else {
                0.0
            };
            assert!((out.get(x, y) - expected).abs() < 1e-12, "({x}, {y})");
        }
    }
}

#[test]
fn fifteen_bases_times_twenty_copies() {
    let base: Vec<Image> = (0..15).map(|i| sample_pink_noise(16, i).unwrap()).collect();
    let spec = WarpSpec::for_image(16, 16, 1.0, 9).unwrap();
    let set = synthesize_set(&base, 20, &spec, false).unwrap();
    assert_eq!(set.len(), 300);
    assert!(set.iter().all(|s| s.image.dims() == (16, 16)));
}

#[test]
fn pink_profile_falls_as_inverse_frequency() {
    let images = generate_ensemble(&EnsembleSpec::new(EnsembleKind::PinkNoise, 32, 50, 1)).unwrap();
    let slope = spectral_slope(&images).unwrap();
    assert!((-1.3..=-0.7).contains(&slope), "{slope}");
    // every band carries energy
    assert!(radial_amplitude_profile(&images[0]).iter().all(|&(_, a)| a > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn warps_hit_any_target(seed in any::<u64>(), target in 0.01f64..20.0, side in 8usize..100) {
        let spec = WarpSpec::for_image(side, side, target, seed).unwrap();
        let t = sample_similarity_warp(&spec).unwrap();
        prop_assert!((t.rms_displacement(&spec.reference_points) - target).abs() <= 1e-6);
        // the inverse undoes the warp
        let inv = t.inverse();
        let p = (3.0, 5.0);
        let q = inv.apply(t.apply(p));
        prop_assert!((q.0 - p.0).abs() < 1e-9 && (q.1 - p.1).abs() < 1e-9);
    }

    #[test]
    fn samplers_are_pure_functions_of_the_seed(seed in any::<u64>()) {
        let a = sample_pink_noise(12, seed).unwrap();
        prop_assert_eq!(&a, &sample_pink_noise(12, seed).unwrap());
        prop_assert!(a.mean().abs() < 1e-10);
        prop_assert!((a.rms() - 1.0).abs() < 1e-10);
    }
}
