//! Diagnostics measured against ground-truth provenance.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use crate::classifier::ModelState;
use crate::noisegen::{Dataset, Provenance, ProvenancedSample};
use crate::trainer::{Correction, EpochLog, Group};
use crate::{Error, Result, SampleId};

/// Lags reported for the selection-overlap curves.
pub const OVERLAP_LAGS: [usize; 6] = [1, 2, 3, 5, 8, 10];

pub type ProvenanceMap<'a> = HashMap<SampleId, &'a ProvenancedSample>;

pub fn provenance_map(data: &Dataset) -> ProvenanceMap<'_> {
    data.samples.iter().map(|s| (s.id, s)).collect()
}

/// Training-set accuracy split by provenance. `None` when a group is empty.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseFit {
    /// Clean samples, against their (correct) observed label.
    pub clean: Option<f64>,
    /// Mislabeled samples, against the corrupted observed label.
    pub mislabeled_observed: Option<f64>,
    /// Mislabeled samples, against the true label.
    pub mislabeled_true: Option<f64>,
}

fn fraction(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

pub fn noise_fit(model: &ModelState, data: &Dataset) -> Result<NoiseFit> {
    let (mut clean, mut clean_n) = (0, 0);
    let (mut observed, mut truth, mut mislabeled_n) = (0, 0, 0);
    for s in &data.samples {
        let predicted = model.forward(&s.features)?.argmax();
        match s.provenance {
            Provenance::Clean => {
                clean_n += 1;
                clean += usize::from(predicted == s.observed_label);
            }
            Provenance::Mislabeled { true_label } => {
                mislabeled_n += 1;
                observed += usize::from(predicted == s.observed_label);
                truth += usize::from(predicted == true_label);
            }
            Provenance::Irrelevant => {}
        }
    }
    Ok(NoiseFit {
        clean: fraction(clean, clean_n),
        mislabeled_observed: fraction(observed, mislabeled_n),
        mislabeled_true: fraction(truth, mislabeled_n),
    })
}

/// Whether a group placement is what the sample's provenance calls for.
///
/// Irrelevant samples should be dropped and mislabeled ones reused. Clean
/// samples may be easy or reusable, since hard clean samples legitimately
/// end up in the reusable set.
pub fn placement_is_correct(group: Group, provenance: Provenance) -> bool {
    matches!(
        (provenance, group),
        (Provenance::Irrelevant, Group::Dropped)
            | (Provenance::Mislabeled { .. }, Group::Reusable)
            | (Provenance::Clean, Group::Easy | Group::Reusable)
    )
}

/// Fraction of selective placements that match provenance.
///
/// Warm-up placements are ignored; `None` when nothing was selected.
pub fn selection_accuracy<I>(placements: I, provenance: &ProvenanceMap<'_>) -> Result<Option<f64>>
where
    I: IntoIterator<Item = (SampleId, Group)>,
{
    let (mut correct, mut total) = (0, 0);
    for (id, group) in placements {
        if group == Group::Warmup {
            continue;
        }
        let sample = provenance.get(&id).ok_or(Error::MissingProvenance(id))?;
        total += 1;
        correct += usize::from(placement_is_correct(group, sample.provenance));
    }
    Ok(fraction(correct, total))
}

/// Fraction of relabeled samples whose new label is their true label.
///
/// Irrelevant samples have no true task label and always count as wrong.
pub fn relabel_accuracy(
    corrections: &[Correction],
    provenance: &ProvenanceMap<'_>,
) -> Result<Option<f64>> {
    let mut correct = 0;
    for c in corrections {
        let sample = provenance
            .get(&c.sample_id)
            .ok_or(Error::MissingProvenance(c.sample_id))?;
        correct += usize::from(sample.true_label() == Some(c.new_label));
    }
    Ok(fraction(correct, corrections.len()))
}

/// `|C_i ∩ C_{i-1} ∩ ... ∩ C_{i-lag}| / |C_i|` over a series of per-epoch sets.
///
/// An empty `C_i` gives 1.
pub fn overlap(sets: &[BTreeSet<SampleId>], index: usize, lag: usize) -> Result<f64> {
    if index >= sets.len() {
        return Err(Error::DimensionMismatch {
            what: "overlap epoch index",
            expected: sets.len(),
            got: index,
        });
    }
    if lag > index {
        return Err(Error::InsufficientHistory { index, lag });
    }
    let current = &sets[index];
    if current.is_empty() {
        return Ok(1.0);
    }
    let earlier = &sets[index - lag..index];
    let shared = current
        .iter()
        .filter(|id| earlier.iter().all(|s| s.contains(id)))
        .count();
    Ok(shared as f64 / current.len() as f64)
}

/// Fraction of test samples whose argmax prediction is their label.
pub fn test_accuracy(model: &ModelState, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut correct = 0;
    for s in &test.samples {
        correct += usize::from(model.forward(&s.features)?.argmax() == s.observed_label);
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Mean loss and certainty of one group within an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupStats {
    pub count: usize,
    pub mean_loss: Option<f64>,
    pub mean_certainty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochDiagnostics {
    pub epoch: usize,
    pub selective: bool,
    pub mean_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Fractions of the training set; `None` in warm-up epochs.
    pub ratio_easy: Option<f64>,
    pub ratio_reusable: Option<f64>,
    pub ratio_dropped: Option<f64>,
    pub selection_accuracy: Option<f64>,
    pub relabel_accuracy: Option<f64>,
    pub easy: GroupStats,
    pub reusable: GroupStats,
    pub dropped: GroupStats,
    /// `(lag, overlap)` of dropped sets, for lags in [`OVERLAP_LAGS`] that reach back
    /// no further than the first selective epoch.
    pub dropped_overlap: Vec<(usize, f64)>,
    pub easy_overlap: Vec<(usize, f64)>,
    pub fit: NoiseFit,
}

fn group_stats(log: &EpochLog, group: Group) -> GroupStats {
    let members: Vec<_> = log.samples.iter().filter(|s| s.group == group).collect();
    let n = members.len();
    let mean = |total: f64| (n > 0).then(|| total / n as f64);
    GroupStats {
        count: n,
        mean_loss: mean(members.iter().map(|s| s.loss).sum()),
        mean_certainty: mean(members.iter().map(|s| s.certainty).sum()),
    }
}

fn group_set(log: &EpochLog, group: Group) -> BTreeSet<SampleId> {
    log.samples
        .iter()
        .filter(|s| s.group == group)
        .map(|s| s.sample_id)
        .collect()
}

/// Per-epoch diagnostics for a training run over `data`.
pub fn diagnose(logs: &[EpochLog], data: &Dataset) -> Result<Vec<EpochDiagnostics>> {
    let provenance = provenance_map(data);
    let first_selective = logs.iter().position(EpochLog::is_selective);
    let dropped_sets: Vec<_> = logs.iter().map(|l| group_set(l, Group::Dropped)).collect();
    let easy_sets: Vec<_> = logs.iter().map(|l| group_set(l, Group::Easy)).collect();

    logs.iter()
        .enumerate()
        .map(|(i, log)| {
            let selective = log.is_selective();
            let total = log.samples.len();
            let ratio = |g| selective.then(|| log.group_count(g) as f64 / total as f64);

            let mut dropped_overlap = Vec::new();
            let mut easy_overlap = Vec::new();
            if let Some(first) = first_selective.filter(|_| selective) {
                for lag in OVERLAP_LAGS.into_iter().filter(|&lag| i >= first + lag) {
                    dropped_overlap.push((lag, overlap(&dropped_sets, i, lag)?));
                    easy_overlap.push((lag, overlap(&easy_sets, i, lag)?));
                }
            }

            Ok(EpochDiagnostics {
                epoch: log.epoch,
                selective,
                mean_loss: log.mean_loss,
                test_accuracy: log.test_accuracy,
                ratio_easy: ratio(Group::Easy),
                ratio_reusable: ratio(Group::Reusable),
                ratio_dropped: ratio(Group::Dropped),
                selection_accuracy: selection_accuracy(
                    log.samples.iter().map(|s| (s.sample_id, s.group)),
                    &provenance,
                )?,
                relabel_accuracy: relabel_accuracy(&log.corrections, &provenance)?,
                easy: group_stats(log, Group::Easy),
                reusable: group_stats(log, Group::Reusable),
                dropped: group_stats(log, Group::Dropped),
                dropped_overlap,
                easy_overlap,
                fit: log.fit,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `epoch,mean_loss,test_acc,ratio_easy,ratio_reusable,ratio_dropped,selection_acc,relabel_acc`.
///
/// Fields that do not apply to an epoch (ratios during warm-up) are left empty.
pub fn write_summary_csv<W: Write>(diagnostics: &[EpochDiagnostics], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "epoch",
        "mean_loss",
        "test_acc",
        "ratio_easy",
        "ratio_reusable",
        "ratio_dropped",
        "selection_acc",
        "relabel_acc",
    ])?;
    for d in diagnostics {
        out.write_record([
            d.epoch.to_string(),
            d.mean_loss.to_string(),
            opt(d.test_accuracy),
            opt(d.ratio_easy),
            opt(d.ratio_reusable),
            opt(d.ratio_dropped),
            opt(d.selection_accuracy),
            opt(d.relabel_accuracy),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `epoch,lag,dropped_overlap,easy_overlap`.
pub fn write_overlap_csv<W: Write>(diagnostics: &[EpochDiagnostics], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["epoch", "lag", "dropped_overlap", "easy_overlap"])?;
    for d in diagnostics {
        for ((lag, dropped), (_, easy)) in d.dropped_overlap.iter().zip(&d.easy_overlap) {
            out.write_record([
                d.epoch.to_string(),
                lag.to_string(),
                dropped.to_string(),
                easy.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `epoch,group,count,mean_loss,mean_certainty` for the three selective groups.
pub fn write_group_stats_csv<W: Write>(diagnostics: &[EpochDiagnostics], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["epoch", "group", "count", "mean_loss", "mean_certainty"])?;
    for d in diagnostics.iter().filter(|d| d.selective) {
        for (group, stats) in [
            (Group::Easy, d.easy),
            (Group::Reusable, d.reusable),
            (Group::Dropped, d.dropped),
        ] {
            out.write_record([
                d.epoch.to_string(),
                group.name().to_string(),
                stats.count.to_string(),
                opt(stats.mean_loss),
                opt(stats.mean_certainty),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `epoch,clean_acc,mislabeled_observed_acc,mislabeled_true_acc`.
pub fn write_noise_fit_csv<W: Write>(diagnostics: &[EpochDiagnostics], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "epoch",
        "clean_acc",
        "mislabeled_observed_acc",
        "mislabeled_true_acc",
    ])?;
    for d in diagnostics {
        out.write_record([
            d.epoch.to_string(),
            opt(d.fit.clean),
            opt(d.fit.mislabeled_observed),
            opt(d.fit.mislabeled_true),
        ])?;
    }
    out.flush()?;
    Ok(())
}
