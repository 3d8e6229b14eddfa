use ttsurrogate::als::{self, AlsConfig};
use ttsurrogate::experiment::{
    load_model, run_experiment, save_model, ExperimentSpec, InitMode, Method,
};
use ttsurrogate::sampling::{lhs_indices, uniform_indices};
use ttsurrogate::{relative_error, AnovaModel, TtTensor};

#[test]
fn als_recovers_low_rank_tensor() {
    let dims = [8; 5];
    let truth = TtTensor::random(&dims, 3, 2024).unwrap();
    let train = lhs_indices(&dims, 5000, 1).unwrap();
    let ys = truth.get_many(&train).unwrap();
    let init = TtTensor::random(&dims, 3, 99).unwrap();
    let (fit, report) = als::run(&init, &train, &ys, &AlsConfig::default()).unwrap();
    let test = uniform_indices(&dims, 2000, 2).unwrap();
    let err = relative_error(
        &fit.get_many(&test).unwrap(),
        &truth.get_many(&test).unwrap(),
    )
    .unwrap();
    assert!(err < 1e-8, "test error {err:e}");
    assert_eq!(report.sweeps_run, 50);
}

#[test]
fn anova_initialization_is_exact_for_additive_functions() {
    // on the full grid the sample ANOVA of an additive function is exact
    let dims = [6, 5, 7, 4];
    let mut idxs = Vec::new();
    for a in 0..6 {
        for b in 0..5 {
            for c in 0..7 {
                for d in 0..4 {
                    idxs.push(vec![a, b, c, d]);
                }
            }
        }
    }
    let ys: Vec<f64> = idxs
        .iter()
        .map(|i| {
            i.iter()
                .enumerate()
                .map(|(k, &n)| ((k + 1) as f64 * n as f64).sin())
                .sum()
        })
        .collect();
    let model = AnovaModel::fit(&idxs, &ys, &dims).unwrap();
    let t = model.to_tt(2, 0.0, 0).unwrap();
    let err = relative_error(&t.get_many(&idxs).unwrap(), &ys).unwrap();
    assert!(err < 1e-12, "{err:e}");
}

#[test]
fn saved_model_reproduces_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        benchmark: "schwefel".into(),
        dim: Some(4),
        grid: 6,
        rank: 3,
        sweeps: 5,
        train: 800,
        test: 300,
        init: InitMode::Anova,
        seed: 5,
        ..ExperimentSpec::default()
    };
    let out = run_experiment(&spec).unwrap();
    let model = out.anova_als_model.unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let probe = uniform_indices(&model.dims().to_vec(), 100, 8).unwrap();
    for idx in &probe {
        assert_eq!(
            model.get(idx).unwrap().to_bits(),
            back.get(idx).unwrap().to_bits()
        );
    }
    let row = out
        .rows
        .iter()
        .find(|r| r.method == Method::AnovaAls)
        .unwrap();
    let err = relative_error(&back.get_many(&out.test.idxs).unwrap(), &out.test.ys).unwrap();
    assert_eq!(err, row.test_error);
}

#[test]
fn noise_only_touches_training_data() {
    let base = ExperimentSpec {
        benchmark: "alpine".into(),
        dim: Some(3),
        grid: 5,
        rank: 2,
        sweeps: 3,
        train: 200,
        test: 100,
        repeats: 1,
        seed: 1,
        ..ExperimentSpec::default()
    };
    let clean = run_experiment(&base).unwrap();
    let noisy = run_experiment(&ExperimentSpec {
        noise: 0.05,
        ..base
    })
    .unwrap();
    assert_eq!(clean.metadata.test_hash, noisy.metadata.test_hash);
    assert_ne!(clean.metadata.train_hash, noisy.metadata.train_hash);
}
