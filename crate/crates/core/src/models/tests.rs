use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::Lead;
use crate::nn::{Mode, Tape, Tensor};

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f32> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn ecgnet_structure_and_shapes() {
    let spec = build_ecgnet(12).unwrap();
    assert_eq!(spec.conv_count(), 13);
    assert_eq!(spec.maxpool_count(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = init_params::<f32, _>(&spec, &mut rng).unwrap();
    assert_eq!(p.get("ecg.conv01.weight").unwrap().shape(), &[64, 12, 8]);
    assert_eq!(p.get("ecg.conv02.weight").unwrap().shape(), &[64, 64, 8]);
    assert_eq!(p.get("head.weight").unwrap().shape(), &[2, 64]);

    let one = build_ecgnet(1).unwrap();
    assert_eq!(one.conv_count(), 13);
    let p1 = init_params::<f32, _>(&one, &mut rng).unwrap();
    assert_eq!(p1.get("ecg.conv01.weight").unwrap().shape(), &[64, 1, 8]);
    assert!(build_ecgnet(0).is_err() && build_ecgnet(13).is_err());
}

#[test]
fn ecgnet_parameter_count_is_frozen() {
    // conv1: 64*n*8+64; conv2..13: 12*(64*64*8+64); 13 batch norms: 13*128; head: 64*2+2
    let expected = |n: usize| 64 * n * 8 + 64 + 12 * (64 * 64 * 8 + 64) + 13 * 128 + 130;
    assert_eq!(expected(12), 401_986);
    for n in [1, 2, 12] {
        let spec = build_ecgnet(n).unwrap();
        assert_eq!(spec.trainable_params(), expected(n));
        let p = init_params::<f32, _>(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(p.trainable_count(), expected(n));
    }
}

#[test]
fn pre_gap_map_is_one_eighth_of_input() {
    let spec = build_ecgnet_with(EcgNetConfig::new(Lead::ALL.to_vec()).with_filters(8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = init_params::<f32, _>(&spec, &mut rng).unwrap();
    let batch = Batch {
        ecg: Some(Tensor::zeros(&[2, 12, 5000])),
        tab: None,
    };
    let mut tape = Tape::new();
    let out = forward(&spec, &mut p, &mut tape, &batch, Mode::Inference, &mut rng).unwrap();
    assert_eq!(tape.value(out.pre_gap.unwrap()).shape(), &[2, 8, 625]);
    let logits = tape.value(out.logits).data();
    assert!(logits.iter().all(|v| v.is_finite()));
    let probs = predict_af1(&spec, &p, &batch).unwrap();
    assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn full_width_summary_reports_625_steps() {
    let s = build_ecgnet(12).unwrap().summary(5000);
    assert!(s.contains("64x625"), "{s}");
    assert!(s.contains("total trainable 401986"), "{s}");
}

#[test]
fn tabnet_dense_parameter_count() {
    let spec = build_tabnet(17).unwrap();
    let dense: usize = spec
        .tab_trunk
        .iter()
        .filter(|l| matches!(l, LayerSpec::Dense { .. }))
        .map(LayerSpec::trainable_params)
        .sum();
    assert_eq!(dense, 17 * 256 + 256 + 256 * 128 + 128 + 128 * 64 + 64);
    assert_eq!(dense, 45_760);
}

#[test]
fn tabnet_forward_is_finite_and_seeded() {
    let spec = build_tabnet(17).unwrap();
    let mut p = init_params::<f32, _>(&spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let zeros = Batch {
        ecg: None,
        tab: Some(Tensor::zeros(&[1, 17])),
    };
    let probs = predict_af1(&spec, &p, &zeros).unwrap();
    assert!(probs[0].is_finite() && probs[0] > 0.0 && probs[0] < 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = Batch {
        ecg: None,
        tab: Some(rand_tensor(&[4, 17], &mut rng)),
    };
    let run = |p: &mut crate::nn::ParameterStore<f32>| {
        let mut tape = Tape::new();
        let mut r = ChaCha8Rng::seed_from_u64(11);
        let out = forward(&spec, p, &mut tape, &batch, Mode::Training, &mut r).unwrap();
        tape.value(out.logits).clone()
    };
    let mut p2 = p.clone();
    assert_eq!(run(&mut p), run(&mut p2));
}

fn small_full() -> ModelSpec {
    build_fullmodel(
        EcgNetConfig::new(vec![Lead::D1, Lead::AvR]).with_filters(8),
        TabNetConfig {
            widths: vec![16, 8],
            ..TabNetConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn fusion_requires_matching_widths() {
    let err = build_fullmodel(
        EcgNetConfig::new(vec![Lead::D1]),
        TabNetConfig {
            widths: vec![16, 8],
            ..TabNetConfig::default()
        },
    );
    assert!(err.is_err());
}

#[test]
fn zeroed_tabular_trunk_reproduces_ecgnet() {
    let full = small_full();
    let ecg_only = build_ecgnet_with(full.ecg.clone().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut p = init_params::<f32, _>(&full, &mut rng).unwrap();
    // Last tabular batch-norm emits exactly zero, so the trunk output is zero.
    p.get_mut("tab.bn2.gamma").unwrap().data_mut().fill(0.0);
    let pe = {
        let mut e = init_params::<f32, _>(&ecg_only, &mut rng).unwrap();
        for (name, param) in e.iter_mut() {
            param.value = p.get(name).unwrap().clone();
        }
        e
    };
    let ecg = rand_tensor(&[3, 2, 64], &mut rng);
    let tab = rand_tensor(&[3, 17], &mut rng);
    let full_logits = predict_logits(
        &full,
        &p,
        &Batch {
            ecg: Some(ecg.clone()),
            tab: Some(tab),
        },
    )
    .unwrap();
    let ecg_logits = predict_logits(
        &ecg_only,
        &pe,
        &Batch {
            ecg: Some(ecg),
            tab: None,
        },
    )
    .unwrap();
    assert_eq!(full_logits, ecg_logits);
}

#[test]
fn fusion_adds_trunk_outputs() {
    let full = small_full();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = init_params::<f32, _>(&full, &mut rng).unwrap();
    let batch = Batch {
        ecg: Some(rand_tensor(&[3, 2, 64], &mut rng)),
        tab: Some(rand_tensor(&[3, 17], &mut rng)),
    };
    let mut tape = Tape::new();
    let out = forward(&full, &mut p, &mut tape, &batch, Mode::Inference, &mut rng).unwrap();
    let a = tape.value(out.ecg_features.unwrap()).clone();
    let b = tape.value(out.tab_features.unwrap()).clone();
    let fused = tape.value(out.head_input).clone();
    for i in 0..fused.len() {
        assert!((fused.data()[i] - (a.data()[i] + b.data()[i])).abs() < 1e-6);
    }
    // Swapping the operands changes nothing.
    let (va, vb) = (tape.input(a), tape.input(b));
    let ab = tape.add(va, vb).unwrap();
    let ba = tape.add(vb, va).unwrap();
    assert_eq!(tape.value(ab), tape.value(ba));
}

#[test]
fn cam_identity_and_zero_head() {
    let spec = build_ecgnet_with(EcgNetConfig::new(Lead::ALL.to_vec()).with_filters(8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut p = init_params::<f32, _>(&spec, &mut rng).unwrap();
    p.get_mut("head.bias")
        .unwrap()
        .data_mut()
        .copy_from_slice(&[0.3, -0.2]);
    let x = rand_tensor(&[12, 5000], &mut rng);
    for class in 0..2 {
        let c = cam(&spec, &p, &x, class).unwrap();
        assert_eq!(c.values.len(), 625);
        assert_eq!(c.samples_per_step, 8);
        let mean = c.values.iter().sum::<f64>() / 625.0;
        let bias = p.get("head.bias").unwrap().data()[class] as f64;
        assert!(
            (mean + bias - c.logit).abs() < 1e-4,
            "{} vs {}",
            mean + bias,
            c.logit
        );
    }
    p.get_mut("head.weight").unwrap().data_mut().fill(0.0);
    assert!(cam(&spec, &p, &x, 1).unwrap().values.iter().all(|v| *v == 0.0));
    let tab = build_tabnet(17).unwrap();
    let pt = init_params::<f32, _>(&tab, &mut rng).unwrap();
    assert!(cam(&tab, &pt, &x, 0).is_err());
}

#[test]
fn descriptor_round_trip_and_fingerprint() {
    for spec in [build_ecgnet(12).unwrap(), build_tabnet(17).unwrap(), small_full()] {
        let back = ModelSpec::from_descriptor(&spec.descriptor()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.fingerprint(), spec.fingerprint());
    }
    assert_ne!(
        build_ecgnet(12).unwrap().fingerprint(),
        build_ecgnet(1).unwrap().fingerprint()
    );
}
