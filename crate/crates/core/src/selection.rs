//! Per-batch sample selection.
//!
//! A mini-batch is first split by loss: samples strictly below the batch mean
//! loss are *easy*. The remaining high-loss samples are split by prediction
//! certainty: those at least as certain as the average easy sample are
//! *reusable*, the rest are *dropped*.

use crate::classifier::Prediction;
use crate::{Error, Result, SampleId};

/// Split of one mini-batch into easy, reusable and dropped samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPartition {
    pub easy_ids: Vec<SampleId>,
    pub reusable_ids: Vec<SampleId>,
    pub dropped_ids: Vec<SampleId>,
    pub loss_threshold: f64,
    pub certainty_threshold: f64,
    /// The batch had no easy samples, so the certainty threshold is the
    /// mean certainty of the whole batch.
    pub used_fallback: bool,
}

impl BatchPartition {
    pub fn len(&self) -> usize {
        self.easy_ids.len() + self.reusable_ids.len() + self.dropped_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Result of the loss-based drop rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EasySplit {
    pub easy_ids: Vec<SampleId>,
    pub rest_ids: Vec<SampleId>,
    pub loss_threshold: f64,
}

/// Result of the certainty-based reuse rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ReuseSplit {
    pub reusable_ids: Vec<SampleId>,
    pub dropped_ids: Vec<SampleId>,
    pub certainty_threshold: f64,
    pub used_fallback: bool,
}

/// Standard deviation of the predicted probabilities.
///
/// Zero for a uniform prediction, `sqrt(K - 1) / K` for a one-hot one. Since
/// the probabilities sum to one this equals `sqrt(mean(p^2) - 1/K^2)`; the
/// centred two-pass form is used so that a uniform vector gives exactly zero.
pub fn certainty(pred: &Prediction) -> f64 {
    let probs = pred.probs();
    let k = probs.len() as f64;
    let mu = mean(probs.iter().copied()).expect("non-empty prediction");
    let variance = probs.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / k;
    variance.max(0.0).sqrt()
}

/// Arithmetic mean computed as `min + mean(x - min)`, so that a set of equal
/// values has exactly that value as its mean.
pub(crate) fn mean(values: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let min = values.clone().fold(f64::INFINITY, f64::min);
    let (sum, count) = values.fold((0.0, 0usize), |(s, n), v| (s + (v - min), n + 1));
    (count > 0).then(|| min + sum / count as f64)
}

/// Samples whose loss is strictly below the batch mean are easy.
pub fn partition_easy(batch: &[(SampleId, f64)]) -> Result<EasySplit> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if batch.iter().any(|(_, l)| !l.is_finite()) {
        return Err(Error::NonFinite("batch losses"));
    }
    let loss_threshold = mean(batch.iter().map(|(_, l)| *l)).expect("non-empty");
    let (easy, rest): (Vec<&(SampleId, f64)>, Vec<_>) =
        batch.iter().partition(|(_, l)| *l < loss_threshold);
    Ok(EasySplit {
        easy_ids: easy.into_iter().map(|(id, _)| *id).collect(),
        rest_ids: rest.into_iter().map(|(id, _)| *id).collect(),
        loss_threshold,
    })
}

/// High-loss samples at least as certain as the mean easy sample are reusable.
///
/// When there are no easy samples the mean certainty of the whole batch is
/// used as the threshold instead.
pub fn select_reusable(
    rest: &[(SampleId, f64)],
    easy_certainties: &[f64],
    batch_certainties: &[f64],
) -> ReuseSplit {
    let (certainty_threshold, used_fallback) = match mean(easy_certainties.iter().copied()) {
        Some(m) => (m, false),
        None => (mean(batch_certainties.iter().copied()).unwrap_or(0.0), true),
    };
    let (reusable, dropped): (Vec<&(SampleId, f64)>, Vec<_>) =
        rest.iter().partition(|(_, c)| *c >= certainty_threshold);
    ReuseSplit {
        reusable_ids: reusable.into_iter().map(|(id, _)| *id).collect(),
        dropped_ids: dropped.into_iter().map(|(id, _)| *id).collect(),
        certainty_threshold,
        used_fallback,
    }
}

/// Applies both rules to a batch of `(id, loss, certainty)` entries.
///
/// Ids are assumed unique within the batch.
pub fn partition_batch(entries: &[(SampleId, f64, f64)]) -> Result<BatchPartition> {
    let losses: Vec<(SampleId, f64)> = entries.iter().map(|&(id, l, _)| (id, l)).collect();
    let easy = partition_easy(&losses)?;

    let threshold = easy.loss_threshold;
    let easy_certainties: Vec<f64> = entries
        .iter()
        .filter(|(_, l, _)| *l < threshold)
        .map(|(_, _, c)| *c)
        .collect();
    let batch_certainties: Vec<f64> = entries.iter().map(|(_, _, c)| *c).collect();
    let rest: Vec<(SampleId, f64)> = entries
        .iter()
        .filter(|(_, l, _)| *l >= threshold)
        .map(|&(id, _, c)| (id, c))
        .collect();
    let reuse = select_reusable(&rest, &easy_certainties, &batch_certainties);

    Ok(BatchPartition {
        easy_ids: easy.easy_ids,
        reusable_ids: reuse.reusable_ids,
        dropped_ids: reuse.dropped_ids,
        loss_threshold: easy.loss_threshold,
        certainty_threshold: reuse.certainty_threshold,
        used_fallback: reuse.used_fallback,
    })
}
