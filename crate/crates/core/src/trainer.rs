//! Warm-up and selective training epochs.
//!
//! Epochs `1..=warmup_epochs` train on every sample with its observed label.
//! Later epochs partition each mini-batch with [`crate::selection`], relabel
//! the reusable samples from their prediction history, and update the model
//! with the mean gradient over the easy and reusable samples only.
//!
//! Every sample's prediction is recorded into the history in every epoch,
//! after the batch it belongs to has been relabeled, so a correction only
//! ever sees predictions from earlier epochs.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{self, cross_entropy, ForwardTrace, GradientSet, ModelState, Prediction};
use crate::history::PredictionHistory;
use crate::loss::{self, lsr_target};
use crate::metrics::{self, NoiseFit};
use crate::noisegen::Dataset;
use crate::selection::{self, BatchPartition};
use crate::{Error, Result, SampleId};

/// Offset mixed into the seed for the per-epoch shuffles, so they do not share
/// a stream with weight initialisation.
const SHUFFLE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub warmup_epochs: usize,
    pub max_epochs: usize,
    /// Number of past predictions kept per sample for relabeling.
    pub history_len: usize,
    /// Label smoothing level.
    pub epsilon: f64,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Hidden layer widths; input and output sizes come from the dataset.
    pub hidden_dims: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            warmup_epochs: 5,
            max_epochs: 60,
            history_len: 5,
            epsilon: 0.5,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 3e-4,
            batch_size: 32,
            seed: 0,
            hidden_dims: vec![32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs < 1 {
            return Err(Error::config("warmup_epochs", "must be at least 1"));
        }
        if self.max_epochs < self.warmup_epochs {
            return Err(Error::config(
                "max_epochs",
                format!(
                    "must be at least warmup_epochs ({}), got {}",
                    self.warmup_epochs, self.max_epochs
                ),
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::config("hidden_dims", "widths must be positive"));
        }
        loss::validate_epsilon(self.epsilon)?;
        classifier::validate_optimizer(self.lr, self.momentum, self.weight_decay)
    }

    /// `[input, hidden..., classes]`.
    pub fn layer_dims(&self, input_dim: usize, classes: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(input_dim);
        dims.extend(&self.hidden_dims);
        dims.push(classes);
        dims
    }

    pub fn is_selective(&self, epoch: usize) -> bool {
        epoch > self.warmup_epochs
    }
}

/// Role a sample played in one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    /// Warm-up epoch: every sample trains with its observed label.
    Warmup,
    Easy,
    Reusable,
    Dropped,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Self::Warmup => "warmup",
            Self::Easy => "easy",
            Self::Reusable => "reusable",
            Self::Dropped => "dropped",
        }
    }
}

/// Per-sample snapshot taken before the batch update.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: SampleId,
    pub loss: f64,
    pub certainty: f64,
    pub group: Group,
    /// Label the sample was trained with, `None` when dropped.
    pub label_used: Option<usize>,
}

/// A reusable sample's observed label and the label it was trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Correction {
    pub sample_id: SampleId,
    pub old_label: usize,
    pub new_label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Empty during warm-up.
    pub partitions: Vec<BatchPartition>,
    /// In processing order.
    pub samples: Vec<SampleRecord>,
    pub corrections: Vec<Correction>,
    /// Mean smoothed cross-entropy against the observed labels, before each batch update.
    pub mean_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Batches whose easy and reusable sets were both empty; no step was taken.
    pub skipped_batches: usize,
    /// Batches with no easy sample, where the certainty threshold fell back to the batch mean.
    pub fallback_batches: usize,
    /// End-of-epoch training accuracy broken down by provenance.
    pub fit: NoiseFit,
}

impl EpochLog {
    pub fn is_selective(&self) -> bool {
        self.samples.iter().any(|s| s.group != Group::Warmup)
    }

    pub fn group_count(&self, group: Group) -> usize {
        self.samples.iter().filter(|s| s.group == group).count()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelState,
    pub history: PredictionHistory,
    pub logs: Vec<EpochLog>,
}

/// Forward pass of one training sample, with its loss against the observed label.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub index: usize,
    pub sample_id: SampleId,
    pub trace: ForwardTrace,
    pub loss: f64,
    pub certainty: f64,
}

impl Evaluation {
    pub fn prediction(&self) -> &Prediction {
        self.trace.prediction()
    }
}

/// Selection outcome for one batch, before any parameter update.
#[derive(Debug, Clone)]
pub struct BatchPlan {
    pub partition: BatchPartition,
    /// Training label per evaluation (same order), `None` for dropped samples.
    pub labels: Vec<Option<usize>>,
}

/// Permutation of `0..len` used for the mini-batches of `epoch`.
pub fn epoch_order(len: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(SHUFFLE_SEED_OFFSET));
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}

fn check_dataset(model: &ModelState, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if data.classes != model.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "classes",
            expected: model.num_classes(),
            got: data.classes,
        });
    }
    for s in &data.samples {
        if s.features.len() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "features",
                expected: model.input_dim(),
                got: s.features.len(),
            });
        }
        if s.observed_label >= data.classes {
            return Err(Error::LabelOutOfRange {
                label: s.observed_label,
                classes: data.classes,
            });
        }
    }
    Ok(())
}

/// Forward pass, smoothed loss against the observed label, and certainty for each index.
pub fn evaluate_batch(
    model: &ModelState,
    data: &Dataset,
    indices: &[usize],
    epsilon: f64,
) -> Result<Vec<Evaluation>> {
    indices
        .iter()
        .map(|&index| {
            let sample = &data.samples[index];
            let trace = model.forward_trace(&sample.features)?;
            let target = lsr_target(sample.observed_label, data.classes, epsilon)?;
            let loss = cross_entropy(trace.prediction(), target.dist())?;
            let certainty = selection::certainty(trace.prediction());
            Ok(Evaluation {
                index,
                sample_id: sample.id,
                trace,
                loss,
                certainty,
            })
        })
        .collect()
}

/// Partitions a batch and picks each sample's training label.
///
/// Easy samples keep their observed label; reusable ones get the corrected
/// label from `history`, which must not yet contain this epoch's predictions.
pub fn plan_batch(
    data: &Dataset,
    evaluations: &[Evaluation],
    history: &PredictionHistory,
) -> Result<BatchPlan> {
    let entries: Vec<(SampleId, f64, f64)> = evaluations
        .iter()
        .map(|e| (e.sample_id, e.loss, e.certainty))
        .collect();
    let partition = selection::partition_batch(&entries)?;

    // Membership follows the same comparisons as the partition itself.
    let labels = evaluations
        .iter()
        .map(|e| {
            let observed = data.samples[e.index].observed_label;
            if e.loss < partition.loss_threshold {
                Some(observed)
            } else if e.certainty >= partition.certainty_threshold {
                Some(history.corrected_label(e.sample_id, e.prediction()))
            } else {
                None
            }
        })
        .collect();
    Ok(BatchPlan { partition, labels })
}

/// Mean gradient of the smoothed cross-entropy over `(index, label)` pairs,
/// accumulated in the given order. `None` when `selected` is empty.
pub fn mean_gradient(
    model: &ModelState,
    data: &Dataset,
    selected: &[(usize, usize)],
    epsilon: f64,
) -> Result<Option<GradientSet>> {
    if selected.is_empty() {
        return Ok(None);
    }
    let mut total = GradientSet::zeros_like(model);
    for &(index, label) in selected {
        let target = lsr_target(label, data.classes, epsilon)?;
        let grads = model.backward(&data.samples[index].features, target.dist())?;
        total.add_scaled(&grads, 1.0);
    }
    total.scale(1.0 / selected.len() as f64);
    Ok(Some(total))
}

fn record_predictions(
    history: &mut PredictionHistory,
    evaluations: &[Evaluation],
    epoch: usize,
) -> Result<()> {
    for e in evaluations {
        history.record(e.sample_id, epoch, e.prediction())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish_log(
    epoch: usize,
    model: &ModelState,
    data: &Dataset,
    partitions: Vec<BatchPartition>,
    samples: Vec<SampleRecord>,
    corrections: Vec<Correction>,
    skipped_batches: usize,
    fallback_batches: usize,
) -> Result<EpochLog> {
    let mean_loss = samples.iter().map(|s| s.loss).sum::<f64>() / samples.len() as f64;
    Ok(EpochLog {
        epoch,
        partitions,
        samples,
        corrections,
        mean_loss,
        test_accuracy: None,
        skipped_batches,
        fallback_batches,
        fit: metrics::noise_fit(model, data)?,
    })
}

/// Conventional epoch: every sample trains with its observed label.
pub fn warmup_epoch(
    model: &mut ModelState,
    history: &mut PredictionHistory,
    data: &Dataset,
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochLog> {
    config.validate()?;
    check_dataset(model, data)?;

    let order = epoch_order(data.len(), config.seed, epoch);
    let mut samples = Vec::with_capacity(data.len());
    for batch in order.chunks(config.batch_size) {
        let evaluations = evaluate_batch(model, data, batch, config.epsilon)?;
        let selected: Vec<(usize, usize)> = batch
            .iter()
            .map(|&i| (i, data.samples[i].observed_label))
            .collect();
        let grads =
            mean_gradient(model, data, &selected, config.epsilon)?.expect("chunks are never empty");
        record_predictions(history, &evaluations, epoch)?;
        samples.extend(evaluations.iter().map(|e| SampleRecord {
            sample_id: e.sample_id,
            loss: e.loss,
            certainty: e.certainty,
            group: Group::Warmup,
            label_used: Some(data.samples[e.index].observed_label),
        }));
        model.sgd_step(&grads, config.lr, config.momentum, config.weight_decay)?;
    }
    finish_log(epoch, model, data, Vec::new(), samples, Vec::new(), 0, 0)
}

/// Selective epoch: drop, reuse and relabel within every mini-batch.
pub fn crssc_epoch(
    model: &mut ModelState,
    history: &mut PredictionHistory,
    data: &Dataset,
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochLog> {
    config.validate()?;
    check_dataset(model, data)?;

    let order = epoch_order(data.len(), config.seed, epoch);
    let mut partitions = Vec::new();
    let mut samples = Vec::with_capacity(data.len());
    let mut corrections = Vec::new();
    let (mut skipped, mut fallback) = (0, 0);

    for batch in order.chunks(config.batch_size) {
        let evaluations = evaluate_batch(model, data, batch, config.epsilon)?;
        let plan = plan_batch(data, &evaluations, history)?;

        let selected: Vec<(usize, usize)> = evaluations
            .iter()
            .zip(&plan.labels)
            .filter_map(|(e, label)| label.map(|l| (e.index, l)))
            .collect();
        let grads = mean_gradient(model, data, &selected, config.epsilon)?;
        record_predictions(history, &evaluations, epoch)?;

        for (e, label) in evaluations.iter().zip(&plan.labels) {
            let observed = data.samples[e.index].observed_label;
            let group = match label {
                None => Group::Dropped,
                Some(_) if e.loss < plan.partition.loss_threshold => Group::Easy,
                Some(new_label) => {
                    corrections.push(Correction {
                        sample_id: e.sample_id,
                        old_label: observed,
                        new_label: *new_label,
                    });
                    Group::Reusable
                }
            };
            samples.push(SampleRecord {
                sample_id: e.sample_id,
                loss: e.loss,
                certainty: e.certainty,
                group,
                label_used: *label,
            });
        }

        fallback += usize::from(plan.partition.used_fallback);
        partitions.push(plan.partition);
        match grads {
            Some(g) => model.sgd_step(&g, config.lr, config.momentum, config.weight_decay)?,
            None => skipped += 1,
        }
    }
    finish_log(
        epoch,
        model,
        data,
        partitions,
        samples,
        corrections,
        skipped,
        fallback,
    )
}

/// Full schedule: warm-up epochs, then selective epochs up to `max_epochs`.
///
/// Test accuracy is measured after every epoch when `test` is non-empty.
pub fn train(data: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let mut model = ModelState::init(
        &config.layer_dims(data.feature_dim, data.classes),
        config.seed,
    )?;
    let mut history = PredictionHistory::new(config.history_len);
    let mut logs = Vec::with_capacity(config.max_epochs);

    for epoch in 1..=config.max_epochs {
        let mut log = if config.is_selective(epoch) {
            crssc_epoch(&mut model, &mut history, data, config, epoch)?
        } else {
            warmup_epoch(&mut model, &mut history, data, config, epoch)?
        };
        if !test.is_empty() {
            log.test_accuracy = Some(metrics::test_accuracy(&model, test)?);
        }
        logs.push(log);
    }

    Ok(TrainOutcome {
        model,
        history,
        logs,
    })
}

/// Writes `epoch,sample_id,loss,certainty,group,label_used`, one row per sample per epoch.
pub fn write_epochs_csv<W: Write>(logs: &[EpochLog], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "epoch",
        "sample_id",
        "loss",
        "certainty",
        "group",
        "label_used",
    ])?;
    for log in logs {
        for s in &log.samples {
            out.write_record([
                log.epoch.to_string(),
                s.sample_id.to_string(),
                s.loss.to_string(),
                s.certainty.to_string(),
                s.group.name().to_string(),
                s.label_used.map(|l| l.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
