use afnet_core::data::{Lead, N_FEATURES};
use afnet_core::models::{forward, init_params, Batch, ModelKind, ModelSpec};
use afnet_core::nn::gradcheck::{gradcheck, Picks};
use afnet_core::nn::{Mode, ParameterStore, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn check(kind: ModelKind, leads: Vec<Lead>) {
    let mut rng = ChaCha8Rng::seed_from_u64(kind as u64);
    let n_leads = leads.len();
    let spec = ModelSpec::build(kind, leads, 3, N_FEATURES).unwrap();
    let batch = Batch {
        ecg: kind.uses_ecg().then(|| rand_tensor(&[5, n_leads, 96], &mut rng)),
        tab: kind.uses_tab().then(|| rand_tensor(&[5, N_FEATURES], &mut rng)),
    };
    let labels = [0, 1, 1, 0, 1];
    let params = init_params::<f64, _>(&spec, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let loss = |p: &ParameterStore<f64>, t: &mut Tape<f64>| -> afnet_core::Result<Var> {
        let mut scratch = p.clone();
        let out = forward(
            &spec,
            &mut scratch,
            t,
            &batch,
            Mode::Training,
            &mut ChaCha8Rng::seed_from_u64(5),
        )?;
        Ok(t.softmax_cross_entropy(out.logits, &labels)?.0)
    };
    let r = gradcheck(&params, loss, Picks::Sample { count: 400, seed: 6 }, 1e-6).unwrap();
    assert_eq!(r.checked, 400);
    assert!(r.max_rel_err < 1e-3, "{kind}: {r:?}");
}

#[test]
fn narrow_ecgnet_gradients() {
    check(ModelKind::Ecg, vec![Lead::D1, Lead::V2]);
}

#[test]
fn tabnet_gradients() {
    check(ModelKind::Tab, vec![]);
}

#[test]
fn narrow_fullmodel_gradients() {
    check(ModelKind::Full, vec![Lead::AvR]);
}

#[test]
fn inference_is_deterministic_and_leaves_running_stats_alone() {
    let spec = ModelSpec::build(ModelKind::Full, Lead::ALL.to_vec(), 3, N_FEATURES).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let batch = Batch {
        ecg: Some(rand_tensor(&[2, 12, 64], &mut rng)),
        tab: Some(rand_tensor(&[2, N_FEATURES], &mut rng)),
    };
    let mut params = init_params::<f64, _>(&spec, &mut rng).unwrap();
    let before = params.clone();
    let mut run = |seed| {
        let mut t = Tape::new();
        let out = forward(
            &spec,
            &mut params,
            &mut t,
            &batch,
            Mode::Inference,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        t.value(out.logits).data().to_vec()
    };
    assert_eq!(run(1), run(2));
    assert_eq!(params, before);
}
