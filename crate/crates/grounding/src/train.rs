//! The training loop: NAdam over all trainable parameters, epoch
//! scheduling, validation-loss early stopping with patience, and
//! best-epoch weight restoration.

use crate::data::{CaptionDataset, LanguageTag, Split};
use crate::error::{Error, Result};
use crate::model::{read_loss_values, GroundingModel, ModelDims, ModelParams};
use crate::numcore::{Matrix, NadamConfig, NadamState, Tape};
use crate::seeding;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub languages: Vec<LanguageTag>,
    pub dims: ModelDims,
    /// Global-norm gradient clip; off by default.
    pub grad_clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_epochs: 20,
            patience: 5,
            learning_rate: 0.001,
            seed: 0,
            languages: vec![LanguageTag::new("en")],
            dims: ModelDims::default(),
            grad_clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Contract("batch size must be >= 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Contract(format!(
                "patience {} exceeds max epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.languages.is_empty() {
            return Err(Error::Contract("at least one language is required".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Contract(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_per_language: BTreeMap<String, f64>,
    pub validation_loss: f64,
    pub validation_per_language: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose validation loss was lowest; its weights are the
    /// ones restored into the model.
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub final_validation_loss: f64,
    pub stopped_early: bool,
    /// Wall-clock seconds per epoch. Excluded from serialization so every
    /// emitted artifact stays byte-identical across reruns.
    #[serde(skip)]
    pub wall_time_per_epoch: Vec<f64>,
}

/// Early-stopping counter: strict improvement resets the streak, `patience`
/// consecutive non-improving epochs stop the run.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best_epoch: Option<usize>,
    best_loss: f64,
    streak: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_epoch: None,
            best_loss: f64::INFINITY,
            streak: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, validation_loss: f64) -> Observation {
        let improved = self.best_epoch.is_none() || validation_loss < self.best_loss;
        if improved {
            self.best_epoch = Some(epoch);
            self.best_loss = validation_loss;
            self.streak = 0;
        } else {
            self.streak += 1;
        }
        Observation {
            improved,
            stop: self.streak >= self.patience.max(1),
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best_epoch.map(|e| (e, self.best_loss))
    }
}

/// Per-split loss: overall and per language, each a sample-weighted mean
/// over batches.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub per_language: BTreeMap<String, f64>,
    pub samples: usize,
}

/// Deterministic forward-only loss over a split; never mutates parameters.
pub fn evaluate_loss(
    model: &GroundingModel,
    dataset: &CaptionDataset,
    split: Split,
    batch_size: usize,
) -> Result<LossBreakdown> {
    let samples = dataset.split(split).len();
    if samples == 0 {
        return Err(Error::Contract("cannot evaluate an empty split".into()));
    }
    let mut weighted: BTreeMap<String, f64> = BTreeMap::new();
    for batch in dataset.batches_in_order(split, batch_size) {
        let values = model.loss_values(&batch)?;
        for (lang, v) in values.per_language {
            *weighted.entry(lang.to_string()).or_insert(0.0) += v * batch.size as f64;
        }
    }
    let per_language: BTreeMap<String, f64> = weighted
        .into_iter()
        .map(|(k, v)| (k, v / samples as f64))
        .collect();
    let total = per_language.values().sum();
    Ok(LossBreakdown {
        total,
        per_language,
        samples,
    })
}

/// Callbacks into the loop: a line per epoch, and the parameter snapshot at
/// every new best epoch (for incremental checkpointing).
#[derive(Default)]
pub struct TrainHooks<'a> {
    pub on_epoch: Option<Box<dyn FnMut(&EpochRecord) + 'a>>,
    pub on_best: Option<Box<dyn FnMut(&ModelParams, usize) -> Result<()> + 'a>>,
}

pub fn train(
    model: &mut GroundingModel,
    dataset: &CaptionDataset,
    config: &TrainConfig,
) -> Result<TrainingReport> {
    train_with_hooks(model, dataset, config, TrainHooks::default())
}

pub fn train_with_hooks(
    model: &mut GroundingModel,
    dataset: &CaptionDataset,
    config: &TrainConfig,
    mut hooks: TrainHooks<'_>,
) -> Result<TrainingReport> {
    config.validate()?;
    for lang in &config.languages {
        if !dataset.languages().contains(lang) {
            return Err(Error::Contract(format!(
                "dataset has no '{lang}' captions"
            )));
        }
    }
    for lang in model.languages() {
        if !dataset.languages().contains(&lang) {
            return Err(Error::Contract(format!(
                "dataset has no '{lang}' captions for the model"
            )));
        }
    }
    if dataset.split(Split::Train).is_empty() {
        return Err(Error::Contract("training split is empty".into()));
    }
    if dataset.split(Split::Validation).is_empty() {
        return Err(Error::Contract("validation split is empty".into()));
    }

    let shapes = model.params().param_shapes();
    let mut optimizer = NadamState::new(
        NadamConfig::with_learning_rate(config.learning_rate),
        &shapes,
    );
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params: Option<ModelParams> = None;
    let mut report = TrainingReport {
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_loss: f64::INFINITY,
        final_validation_loss: f64::NAN,
        stopped_early: false,
        wall_time_per_epoch: Vec::new(),
    };

    let train_samples = dataset.split(Split::Train).len() as f64;
    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let shuffle_seed = seeding::derive_indexed(config.seed, "epoch-shuffle", epoch as u64);
        let mut train_weighted: BTreeMap<String, f64> = BTreeMap::new();

        for (batch_index, batch) in dataset
            .batches(Split::Train, config.batch_size, shuffle_seed)
            .enumerate()
        {
            let mut tape = Tape::new();
            let bindings = model.bind_params(&mut tape);
            let loss = model.joint_loss(&mut tape, &bindings, &batch)?;
            let values = read_loss_values(&tape, &loss);
            if !values.total.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_index,
                });
            }
            for (lang, v) in &values.per_language {
                *train_weighted.entry(lang.to_string()).or_insert(0.0) +=
                    v * batch.size as f64;
            }

            let grads = tape.backward(loss.total)?;
            let mut grad_list: Vec<Matrix> = bindings
                .ordered
                .iter()
                .map(|(_, id)| grads.for_param(&tape, *id))
                .collect();
            if let Some(clip) = config.grad_clip_norm {
                clip_global_norm(&mut grad_list, clip);
            }
            let mut named = model.params_mut().named_params_mut();
            let mut param_refs: Vec<&mut Matrix> =
                named.iter_mut().map(|(_, m)| &mut **m).collect();
            optimizer.step(&mut param_refs, &grad_list)?;
        }

        let train_per_language: BTreeMap<String, f64> = train_weighted
            .into_iter()
            .map(|(k, v)| (k, v / train_samples))
            .collect();
        let train_loss = train_per_language.values().sum();
        let validation = evaluate_loss(model, dataset, Split::Validation, config.batch_size)?;
        if !validation.total.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0 });
        }

        let record = EpochRecord {
            epoch,
            train_loss,
            train_per_language,
            validation_loss: validation.total,
            validation_per_language: validation.per_language,
        };
        let observation = stopper.observe(epoch, validation.total);
        if observation.improved {
            best_params = Some(model.params().clone());
            report.best_epoch = epoch;
            report.best_validation_loss = validation.total;
            if let Some(on_best) = hooks.on_best.as_mut() {
                on_best(best_params.as_ref().expect("just set"), epoch)?;
            }
        }
        if let Some(on_epoch) = hooks.on_epoch.as_mut() {
            on_epoch(&record);
        }
        report.final_validation_loss = validation.total;
        report.epochs.push(record);
        report.wall_time_per_epoch.push(started.elapsed().as_secs_f64());

        if observation.stop {
            report.stopped_early = true;
            break;
        }
    }

    if let Some(best) = best_params {
        model.set_params(best);
    }
    Ok(report)
}

fn clip_global_norm(grads: &mut [Matrix], clip: f64) {
    let norm: f64 = grads
        .iter()
        .map(|g| g.as_slice().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > clip && norm > 0.0 {
        let factor = clip / norm;
        for g in grads {
            *g = g.scale(factor);
        }
    }
}
