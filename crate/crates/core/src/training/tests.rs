use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{Lead, NormStats, N_FEATURES};
use crate::error::Error;
use crate::models::{
    build_ecgnet_with, build_tabnet_with, init_params, EcgNetConfig, ModelSpec, TabNetConfig,
};
use crate::nn::lr_at_epoch;
use crate::pipeline::Dataset;

fn toy_model() -> ModelSpec {
    build_tabnet_with(TabNetConfig {
        n_features: 2,
        widths: vec![64],
        dropout: 0.0,
    })
    .unwrap()
}

/// Two classes split by the line x0 + x1 = 0 with a margin.
fn separable(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ids, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    while rows.len() < n {
        let x: [f32; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let s = x[0] + x[1];
        if s.abs() < 0.3 {
            continue;
        }
        ids.push(format!("p{}", rows.len()));
        labels.push((s > 0.0) as usize);
        rows.push(x.to_vec());
    }
    Dataset::from_features(ids, labels, rows).unwrap()
}

fn accuracy(spec: &ModelSpec, params: &crate::nn::ParameterStore<f32>, ds: &Dataset) -> f64 {
    let p = predict_dataset(spec, params, ds).unwrap();
    p.iter()
        .zip(&ds.labels)
        .filter(|(&p, &l)| (p >= 0.5) == (l == 1))
        .count() as f64
        / ds.len() as f64
}

#[test]
fn separable_toy_set_is_learned_within_30_epochs() {
    let spec = toy_model();
    let ds = separable(400, 1);
    let cfg = TrainConfig {
        max_epochs: 30,
        ..TrainConfig::new(5)
    };
    let (params, hist) = train::<f32>(&spec, &ds, &cfg).unwrap();
    assert!(hist.epochs.len() <= 30);
    assert_eq!(accuracy(&spec, &params, &ds), 1.0, "{:?}", hist.val_accuracies());
}

#[test]
fn zero_epochs_returns_initial_parameters() {
    let spec = toy_model();
    let cfg = TrainConfig {
        max_epochs: 0,
        ..TrainConfig::new(3)
    };
    let (params, hist) = train::<f32>(&spec, &separable(50, 2), &cfg).unwrap();
    assert!(hist.epochs.is_empty());
    assert_eq!(hist.stop_reason, StopReason::MaxEpochs);
    let init = init_params::<f32, _>(&spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(params, init);
}

#[test]
fn same_seed_is_bit_identical() {
    let spec = build_tabnet_with(TabNetConfig {
        n_features: 2,
        widths: vec![32, 64],
        dropout: 0.5,
    })
    .unwrap();
    let ds = separable(120, 3);
    let cfg = TrainConfig {
        max_epochs: 6,
        ..TrainConfig::new(11)
    };
    let a = train::<f32>(&spec, &ds, &cfg).unwrap();
    let b = train::<f32>(&spec, &ds, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train::<f32>(&spec, &ds, &TrainConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn lr_column_follows_the_schedule_for_40_epochs() {
    let spec = toy_model();
    let cfg = TrainConfig {
        max_epochs: 40,
        patience: 1000,
        ..TrainConfig::new(4)
    };
    let (_, hist) = train::<f32>(&spec, &separable(64, 4), &cfg).unwrap();
    assert_eq!(hist.epochs.len(), 40);
    for e in &hist.epochs {
        assert_eq!(e.lr, lr_at_epoch(e.epoch, 0.01, 15));
    }
    assert_eq!(hist.epochs[0].lr, 0.01);
    assert_eq!(hist.epochs[15].lr, 0.005);
    assert_eq!(hist.epochs[30].lr, 0.0025);
}

#[test]
fn restores_the_best_validation_epoch() {
    let spec = toy_model();
    let ds = separable(200, 6);
    let cfg = TrainConfig {
        max_epochs: 12,
        patience: 1000,
        lr0: 0.05,
        ..TrainConfig::new(6)
    };
    let (params, hist) = train::<f32>(&spec, &ds, &cfg).unwrap();
    let best = hist.best_epoch.unwrap();
    let (_, val_idx) = validation_split(&ds, cfg.val_fraction, cfg.seed).unwrap();
    let val = ds.subset(&val_idx);
    assert_eq!(accuracy(&spec, &params, &val), hist.epochs[best].val_accuracy);
    assert_eq!(
        early_stop_check(&hist.val_accuracies(), cfg.patience, cfg.min_delta).best_epoch(),
        best
    );
}

#[test]
fn validation_split_groups_shift_copies_and_stratifies() {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        ids.push(format!("r{i}"));
        ids.push(format!("r{i}#shift+300"));
        labels.extend([i % 2, i % 2]);
    }
    let rows = vec![vec![0.0f32]; ids.len()];
    let ds = Dataset::from_features(ids, labels, rows).unwrap();
    let (train, val) = validation_split(&ds, 0.1, 1).unwrap();
    assert_eq!(val.len(), 4);
    assert!(val.iter().all(|&i| !ds.ids[i].contains('#')));
    let val_sources: Vec<&str> = val.iter().map(|&i| ds.ids[i].as_str()).collect();
    for &i in &train {
        assert!(!val_sources.contains(&crate::data::source_id(&ds.ids[i])));
    }
    assert_eq!(train.len(), 72);
    assert_eq!(val.iter().filter(|&&i| ds.labels[i] == 1).count(), 2);
}

#[test]
fn empty_validation_split_is_an_error() {
    let ds = Dataset::from_features(vec!["a".into(), "b".into()], vec![0, 1], vec![vec![0.0]; 2]).unwrap();
    assert!(matches!(
        validation_split(&ds, 0.1, 0),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn trailing_single_example_joins_previous_batch() {
    let order: Vec<usize> = (0..9).collect();
    let b = batches(&order, 4);
    assert_eq!(b.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![4, 5]);
    assert_eq!(batches(&order[..8], 4).len(), 2);
    assert_eq!(batches(&order[..1], 4).len(), 1);
}

#[test]
fn nan_features_abort_with_numerical_error() {
    let mut ds_rows = vec![vec![0.5f32, -0.5]; 40];
    ds_rows[3][0] = f32::NAN;
    let ids = (0..40).map(|i| format!("n{i}")).collect();
    let labels = (0..40).map(|i| i % 2).collect();
    let ds = Dataset::from_features(ids, labels, ds_rows).unwrap();
    let err = train::<f32>(&toy_model(), &ds, &TrainConfig::new(0)).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert!(err.to_string().contains("epoch 0"), "{err}");
}

#[test]
fn invalid_configs_are_rejected() {
    let ds = separable(20, 0);
    for cfg in [
        TrainConfig {
            batch_size: 1,
            ..TrainConfig::new(0)
        },
        TrainConfig {
            val_fraction: 0.5,
            ..TrainConfig::new(0)
        },
        TrainConfig {
            val_fraction: 0.0,
            ..TrainConfig::new(0)
        },
    ] {
        assert!(train::<f32>(&toy_model(), &ds, &cfg).is_err());
    }
}

fn small_ecgnet(leads: Vec<Lead>) -> ModelSpec {
    build_ecgnet_with(EcgNetConfig::new(leads).with_filters(4)).unwrap()
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let spec = small_ecgnet(Lead::ALL.to_vec());
    let params = init_params::<f32, _>(&spec, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let norm = NormStats {
        mean: (0..N_FEATURES).map(|i| i as f64 * 0.1 + 1.0 / 3.0).collect(),
        std: (0..N_FEATURES).map(|i| 1.0 + i as f64 / 7.0).collect(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.afck");
    save_checkpoint(&path, &spec, &params, Some(&norm)).unwrap();
    let back = load_checkpoint(&path, Some(&spec)).unwrap();
    assert_eq!(back.spec, spec);
    assert_eq!(back.params, params);
    assert_eq!(back.norm, Some(norm));
    let bytes = std::fs::read(&path).unwrap();
    save_checkpoint(&path, &back.spec, &back.params, back.norm.as_ref()).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn checkpoint_guards() {
    let spec = small_ecgnet(Lead::ALL.to_vec());
    let params = init_params::<f32, _>(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let file = encode_checkpoint(&spec, &params, None);
    let one_lead = small_ecgnet(vec![Lead::D1]);
    let err = decode_checkpoint(&file, Path::new("x"), Some(&one_lead)).unwrap_err();
    assert!(matches!(err, Error::Fingerprint { .. }), "{err}");
    let bytes = file.encode();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.afck");
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        load_checkpoint(&path, None),
        Err(Error::Truncated { .. })
    ));
}

#[test]
fn report_has_header_and_rows() {
    let spec = toy_model();
    let cfg = TrainConfig {
        max_epochs: 3,
        patience: 10,
        ..TrainConfig::new(1)
    };
    let (_, hist) = train::<f32>(&spec, &separable(60, 1), &cfg).unwrap();
    let r = run_report(&spec, &cfg, &hist, &[("data_sha256".into(), "abc".into())]);
    assert!(
        r.contains("seed=1\n") && r.contains("data_sha256=abc\n") && r.contains("stop_reason=max_epochs")
    );
    let (_, table) = r.split_once(&format!("{HISTORY_HEADER}\n")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
