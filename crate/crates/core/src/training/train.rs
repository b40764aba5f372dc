use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::source_id;
use crate::error::{Error, Result};
use crate::models::{forward, init_params, predict_af1, ModelSpec};
use crate::nn::{adam_step, lr_at_epoch, AdamState, Mode, ParameterStore, Tape, HALF_PERIOD, LR0};
use crate::pipeline::{Dataset, Shift};
use crate::scalar::Scalar;
use crate::training::early_stop_check;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub half_period: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            lr0: LR0,
            half_period: HALF_PERIOD,
            patience: 15,
            min_delta: 0.005,
            max_epochs: 100,
            batch_size: 32,
            val_fraction: 0.10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return bad(format!("val_fraction {} outside (0, 0.5)", self.val_fraction));
        }
        if self.batch_size < 2 {
            return bad(format!(
                "batch_size {} below 2; batch norm needs two rows",
                self.batch_size
            ));
        }
        if !(self.lr0 > 0.0) || self.half_period == 0 {
            return bad("lr0 and half_period must be positive".into());
        }
        if !(self.min_delta >= 0.0) {
            return bad(format!("min_delta {} is negative", self.min_delta));
        }
        Ok(())
    }

    /// `key=value` lines, one per field.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lr0", self.lr0.to_string()),
            ("half_period", self.half_period.to_string()),
            ("patience", self.patience.to_string()),
            ("min_delta", self.min_delta.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::EarlyStop => "early_stop",
            StopReason::MaxEpochs => "max_epochs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub stop_reason: StopReason,
    pub n_train: usize,
    pub n_val: usize,
}

impl TrainHistory {
    pub fn val_accuracies(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_accuracy).collect()
    }
}

/// Stratified hold-out. A record and its shifted copy always land on the same side, and only
/// unshifted records are used for validation.
pub fn validation_split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Groups of example indices sharing a source record, per class, in first-seen order.
    let mut groups: [Vec<Vec<usize>>; 2] = Default::default();
    let mut seen: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (i, id) in ds.ids.iter().enumerate() {
        let class = ds.labels[i];
        let key = source_id(id);
        match seen.get(key) {
            Some(&(c, g)) => groups[c][g].push(i),
            None => {
                seen.insert(key, (class, groups[class].len()));
                groups[class].push(vec![i]);
            }
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class_groups in groups.iter_mut() {
        class_groups.shuffle(&mut rng);
        let n_val = ((fraction * class_groups.len() as f64).round() as usize).min(class_groups.len());
        for (g, members) in class_groups.iter().enumerate() {
            if g < n_val {
                for &i in members {
                    if Shift::from_record_id(&ds.ids[i])?.is_none() {
                        val.push(i);
                    }
                }
            } else {
                train.extend_from_slice(members);
            }
        }
    }
    let has_both = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&i| ds.labels[i] == 1).count();
        pos > 0 && pos < idx.len()
    };
    if !has_both(&val) {
        return Err(Error::InsufficientData(format!(
            "validation split of {} examples lacks one of the classes",
            val.len()
        )));
    }
    if train.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two training examples remain".into(),
        ));
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Minibatches of `size`; a trailing batch of one is folded into the previous one.
pub fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let n = out.len();
        let start = (n - 2) * size;
        out.truncate(n - 2);
        out.push(&order[start..]);
    }
    out
}

/// Inference-mode probability of AF1 for every example, in dataset order.
pub fn predict_dataset<S: Scalar>(
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    ds: &Dataset,
) -> Result<Vec<f64>> {
    let idx: Vec<usize> = (0..ds.len()).collect();
    let mut out = Vec::with_capacity(ds.len());
    for chunk in idx.chunks(64) {
        let (batch, _) = ds.batch::<S>(chunk)?;
        out.extend(predict_af1(spec, params, &batch)?);
    }
    Ok(out)
}

fn accuracy_of(probs: &[f64], labels: &[usize]) -> f64 {
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p >= 0.5) == (l == 1))
        .count();
    hits as f64 / labels.len().max(1) as f64
}

/// Seeded training with a stratified validation hold-out, step-decay Adam and early
/// stopping on validation accuracy. Returns the parameters of the best validation epoch.
pub fn train<S: Scalar>(
    spec: &ModelSpec,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(ParameterStore<S>, TrainHistory)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = init_params::<S, _>(spec, &mut rng)?;
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: None,
        stop_reason: StopReason::MaxEpochs,
        n_train: 0,
        n_val: 0,
    };
    if config.max_epochs == 0 {
        return Ok((params, history));
    }
    let (mut train_idx, val_idx) = validation_split(data, config.val_fraction, config.seed)?;
    history.n_train = train_idx.len();
    history.n_val = val_idx.len();
    let val = data.subset(&val_idx);

    let mut adam = AdamState::new();
    let mut best = params.clone();
    for epoch in 0..config.max_epochs {
        let lr = lr_at_epoch(epoch, config.lr0, config.half_period);
        train_idx.shuffle(&mut rng);
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for (b, chunk) in batches(&train_idx, config.batch_size).into_iter().enumerate() {
            let (batch, labels) = data.batch::<S>(chunk)?;
            let mut tape = Tape::new();
            let out = forward(spec, &mut params, &mut tape, &batch, Mode::Training, &mut rng)?;
            let (loss, probs) = tape.softmax_cross_entropy(out.logits, &labels)?;
            let loss_value = tape.value(loss).data()[0].as_f64();
            if !loss_value.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}, batch {b}"
                )));
            }
            let grads = tape.backward(loss)?;
            adam_step(&mut params, &grads, &mut adam, lr).map_err(|e| match e {
                Error::Numerical(m) => Error::Numerical(format!("{m} at epoch {epoch}, batch {b}")),
                other => other,
            })?;
            loss_sum += loss_value * chunk.len() as f64;
            hits += probs
                .chunks_exact(2)
                .zip(&labels)
                .filter(|(p, &l)| (p[1] >= p[0]) == (l == 1))
                .count();
        }
        let val_probs = predict_dataset(spec, &params, &val)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / train_idx.len() as f64,
            train_accuracy: hits as f64 / train_idx.len() as f64,
            val_accuracy: accuracy_of(&val_probs, &val.labels),
            lr,
        });
        let check = early_stop_check(&history.val_accuracies(), config.patience, config.min_delta);
        if check.best_epoch() == epoch {
            best = params.clone();
        }
        history.best_epoch = Some(check.best_epoch());
        if check.should_stop() {
            history.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    Ok((best, history))
}
