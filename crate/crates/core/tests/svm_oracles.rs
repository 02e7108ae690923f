use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use hogquad::store::{write_matrix, FeatureFile, Layout};
use hogquad::svm::{
    consensus_train, dcd_train, dcd_train_source, dcd_train_traced, primal_objective, Dataset, DcdParams,
    ExtractedRows, FeatureMatrix, MatrixRows, ShardPlan, SvmModel,
};
use hogquad::synth::gaussian_blobs;

/// Two overlapping Gaussian classes in `dim` dimensions, alternating labels.
fn overlapping(points: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<f64> = (0..points).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            (0..dim)
                .map(|_| 0.7 * y + Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    Dataset::new(FeatureMatrix::from_rows(&rows).unwrap(), labels).unwrap()
}

#[test]
fn duplicated_rows_with_half_c_match_original() {
    let data = overlapping(60, 3, 1);
    let doubled = Dataset::new(
        data.features.duplicated(),
        data.labels.iter().flat_map(|&y| [y, y]).collect(),
    )
    .unwrap();
    let params = DcdParams::new(2.0, 1e-12).max_epochs(1_000_000);
    let a = dcd_train(&data, &params).unwrap();
    let b = dcd_train(&doubled, &DcdParams { c: 1.0, ..params }).unwrap();
    for (x, y) in a.w().iter().zip(b.w()) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    assert!((a.objective() - b.objective()).abs() < 1e-8 * a.objective());
}

#[test]
fn separable_data_reaches_unit_margins() {
    let data = gaussian_blobs(200, 3);
    let data = data.unwrap();
    let model = dcd_train(&data, &DcdParams::new(1e3, 1e-9).max_epochs(1_000_000)).unwrap();
    assert!(model.converged());
    let f = model.decision_values(&data.features).unwrap();
    let worst = f
        .iter()
        .zip(&data.labels)
        .map(|(f, y)| y * f)
        .fold(f64::INFINITY, f64::min);
    assert!(worst >= 1.0 - 1e-6, "smallest margin {worst}");
}

#[test]
fn saved_model_is_bit_identical() {
    let data = overlapping(80, 4, 2);
    let model = dcd_train(&data, &DcdParams::new(1.0, 1e-6)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.svm");
    model.save(&path).unwrap();
    let loaded = SvmModel::load(&path).unwrap();
    assert_eq!(model.w(), loaded.w());
    assert_eq!(
        model.decision_values(&data.features).unwrap(),
        loaded.decision_values(&data.features).unwrap()
    );
}

#[test]
fn every_row_source_trains_the_same_model() {
    let data = overlapping(100, 5, 3);
    let params = DcdParams::new(0.5, 1e-6).seed(7);
    let memory = dcd_train(&data, &params).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.hqfm");
    write_matrix(&path, &data.features, Layout::Generic).unwrap();
    let mut file = FeatureFile::open(&path).unwrap();
    let streamed = dcd_train_source(&mut file, &data.labels, &params).unwrap();

    let indices: Vec<usize> = (0..data.len()).collect();
    let mut recomputed = ExtractedRows::new(&indices, data.dim(), |&i: &usize, out: &mut [f64]| {
        out.copy_from_slice(data.features.row(i))
    });
    let extracted = dcd_train_source(&mut recomputed, &data.labels, &params).unwrap();

    assert_eq!(memory.w(), streamed.w());
    assert_eq!(memory.w(), extracted.w());
    assert_eq!(memory.iterations_run(), streamed.iterations_run());
}

#[test]
fn consensus_residuals_shrink() {
    let data = overlapping(400, 3, 4);
    let params = DcdParams::new(1.0, 1e-7).max_epochs(10_000);
    let plan = ShardPlan::contiguous(data.len(), 4).unwrap().with_max_rounds(100);
    let (model, trace) = consensus_train(&data, &plan, &params).unwrap();
    let r = &trace.primal_residual;
    assert!(r.len() > 2);
    assert!(r.last().unwrap() < &(r[0] * 0.1), "{:?}", &r[..r.len().min(5)]);
    let single = dcd_train(&data, &params).unwrap().objective();
    assert!((model.objective() - single).abs() <= 0.01 * single);
    // the consensus objective is evaluated on z, so it can never beat the optimum
    assert!(trace.objective.iter().all(|&o| o >= single * (1.0 - 1e-9)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn duals_stay_in_box_and_bound_the_primal(seed in 0u64..10_000, c in 0.01f64..10.0, n in 4usize..40) {
        let data = overlapping(n, 2, seed);
        let (model, trace) = dcd_train_traced(&data, &DcdParams::new(c, 1e-8).max_epochs(100_000)).unwrap();
        prop_assert!(trace.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let primal = primal_objective(&mut MatrixRows(&data.features), &data.labels, model.w(), c, true).unwrap();
        let dual = *trace.dual_objective.last().unwrap();
        prop_assert!(dual <= primal * (1.0 + 1e-12) + 1e-12);
        // w = 0 is feasible with objective C n
        prop_assert!(primal <= c * n as f64 + 1e-9);
        prop_assert!(trace.consistency.last().unwrap() < &1e-9);
    }
}
