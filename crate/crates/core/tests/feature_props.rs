use proptest::prelude::*;

use hogquad::hog::{
    apply_projection, build_projection, hog_baseline, hog_conv, make_gabor_bank, max_relative_deviation,
};
use hogquad::image::{Image, PoolingSpec};
use hogquad::quad::{local_quadratic_compact, local_quadratic_full, LocalWindow};

fn image(side: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(-1.0f64..1.0, side * side).prop_map(move |v| Image::new(side, side, v).unwrap())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn explicit_operator_matches_convolution(img in image(8), orientations in 2usize..7, stride in 1usize..3) {
        let bank = make_gabor_bank(orientations, 1, 3).unwrap();
        let pooling = PoolingSpec::box_filter(2, stride * 2).unwrap();
        let l = build_projection(&bank, &pooling, 8, 8).unwrap();
        let conv = hog_conv(&img, &bank, &pooling).unwrap();
        let explicit = apply_projection(&l, &img).unwrap();
        prop_assert!(max_relative_deviation(&explicit.values, &conv.values) <= 1e-8);
    }

    #[test]
    fn hog_is_quadratic_and_even(img in image(12), alpha in -3.0f64..3.0) {
        let bank = make_gabor_bank(4, 2, 3).unwrap();
        let pooling = PoolingSpec::box_filter(4, 4).unwrap();
        let h = hog_conv(&img, &bank, &pooling).unwrap().values;
        let scaled = hog_conv(&img.scaled(alpha), &bank, &pooling).unwrap().values;
        let expected: Vec<f64> = h.iter().map(|v| alpha * alpha * v).collect();
        prop_assert!(close(&scaled, &expected, 1e-12));
        let negated = hog_conv(&img.scaled(-1.0), &bank, &pooling).unwrap().values;
        prop_assert!(close(&negated, &h, 1e-12));
        prop_assert!(h.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn compact_entries_are_the_centre_row_of_the_full_form(img in image(6), radius in 0usize..3) {
        let window = LocalWindow::square(radius);
        let m = window.len();
        let z = window.zero_offset_index().unwrap();
        let full = local_quadratic_full(&img, &window).unwrap();
        let compact = local_quadratic_compact(&img, &window);
        for i in 0..img.len() {
            for k in 0..m {
                prop_assert_eq!(compact.block(k)[i], full[i * m * m + z * m + k]);
            }
        }
    }

    #[test]
    fn quad_features_are_quadratic_and_even(img in image(7), alpha in -3.0f64..3.0) {
        let window = LocalWindow::square(1);
        let q = local_quadratic_compact(&img, &window).values;
        let scaled = local_quadratic_compact(&img.scaled(alpha), &window).values;
        let expected: Vec<f64> = q.iter().map(|v| alpha * alpha * v).collect();
        prop_assert!(close(&scaled, &expected, 1e-12));
        prop_assert_eq!(local_quadratic_compact(&img.scaled(-1.0), &window).values, q);
    }

    #[test]
    fn baseline_hog_is_contrast_invariant(img in image(16), alpha in 0.1f64..10.0) {
        let a = hog_baseline(&img, 9, 4).unwrap().values;
        let b = hog_baseline(&img.scaled(alpha), 9, 4).unwrap().values;
        prop_assert!(close(&a, &b, 1e-6));
    }
}
