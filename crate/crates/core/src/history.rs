//! Per-sample prediction history and label correction.
//!
//! Every epoch each sample's predicted label and its probability are recorded.
//! Only the newest `capacity` records are kept. A corrected label is the class
//! with the largest probability mass accumulated over the retained records.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use crate::classifier::{argmax, Prediction};
use crate::{Error, Result, SampleId};

/// One epoch's prediction for a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub epoch: usize,
    pub label: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SampleHistory {
    newest_epoch: Option<usize>,
    /// Newest first.
    records: VecDeque<HistoryRecord>,
}

/// Bounded prediction history for every sample of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionHistory {
    capacity: usize,
    samples: BTreeMap<SampleId, SampleHistory>,
}

impl PredictionHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            samples: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Retained records of a sample, newest first.
    pub fn records(&self, id: SampleId) -> impl Iterator<Item = &HistoryRecord> {
        self.samples
            .get(&id)
            .into_iter()
            .flat_map(|h| h.records.iter())
    }

    /// Appends the argmax label and its probability, evicting the oldest
    /// record once more than `capacity` are held.
    pub fn record(&mut self, id: SampleId, epoch: usize, pred: &Prediction) -> Result<()> {
        let entry = self.samples.entry(id).or_default();
        if let Some(newest) = entry.newest_epoch {
            if epoch <= newest {
                return Err(Error::OutOfOrderEpoch {
                    sample: id,
                    epoch,
                    newest,
                });
            }
        }
        entry.newest_epoch = Some(epoch);
        let label = pred.argmax();
        entry.records.push_front(HistoryRecord {
            epoch,
            label,
            prob: pred.probs()[label],
        });
        entry.records.truncate(self.capacity);
        Ok(())
    }

    /// Probability mass per class summed over the retained records.
    pub fn accumulated(&self, id: SampleId, classes: usize) -> Vec<f64> {
        let mut scores = vec![0.0; classes];
        for r in self.records(id) {
            if let Some(s) = scores.get_mut(r.label) {
                *s += r.prob;
            }
        }
        scores
    }

    /// Class with the highest accumulated probability; ties go to the smaller
    /// class index. Falls back to the current prediction when nothing is retained.
    pub fn corrected_label(&self, id: SampleId, current: &Prediction) -> usize {
        if self.records(id).next().is_none() {
            return current.argmax();
        }
        argmax(&self.accumulated(id, current.num_classes()))
    }

    /// Writes `sample_id,epoch,label,prob`, one row per retained record.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["sample_id", "epoch", "label", "prob"])?;
        for (id, h) in &self.samples {
            for r in h.records.iter().rev() {
                out.write_record([
                    id.to_string(),
                    r.epoch.to_string(),
                    r.label.to_string(),
                    r.prob.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(p: &[f64]) -> Prediction {
        Prediction::new(p.to_vec()).unwrap()
    }

    /// A prediction over `k` classes whose argmax is `label` with probability `prob`.
    fn peaked(k: usize, label: usize, prob: f64) -> Prediction {
        let rest = (1.0 - prob) / (k - 1) as f64;
        let mut p = vec![rest; k];
        p[label] = prob;
        pred(&p)
    }

    #[test]
    fn eviction_keeps_newest() {
        let mut h = PredictionHistory::new(2);
        for epoch in 1..=3 {
            h.record(0, epoch, &peaked(3, 0, 0.5)).unwrap();
        }
        let epochs: Vec<usize> = h.records(0).map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![3, 2]);
    }

    #[test]
    fn records_argmax_and_its_probability() {
        let mut h = PredictionHistory::new(5);
        h.record(4, 1, &pred(&[0.1, 0.7, 0.2])).unwrap();
        let r = *h.records(4).next().unwrap();
        assert_eq!(r.label, 1);
        assert_eq!(r.prob, 0.7);
    }

    #[test]
    fn zero_capacity_uses_current_prediction() {
        let mut h = PredictionHistory::new(0);
        h.record(1, 1, &peaked(4, 2, 0.9)).unwrap();
        h.record(1, 2, &peaked(4, 2, 0.9)).unwrap();
        assert_eq!(h.records(1).count(), 0);
        assert_eq!(h.corrected_label(1, &peaked(4, 3, 0.6)), 3);
    }

    #[test]
    fn out_of_order_epochs_are_rejected() {
        let mut h = PredictionHistory::new(0);
        h.record(1, 3, &peaked(2, 0, 0.6)).unwrap();
        assert!(matches!(
            h.record(1, 3, &peaked(2, 0, 0.6)),
            Err(Error::OutOfOrderEpoch { newest: 3, .. })
        ));
        assert!(h.record(1, 2, &peaked(2, 0, 0.6)).is_err());
        // Other samples are independent.
        h.record(2, 1, &peaked(2, 0, 0.6)).unwrap();
    }

    #[test]
    fn accumulated_probability_decides() {
        let mut h = PredictionHistory::new(5);
        h.record(0, 1, &peaked(5, 2, 0.4)).unwrap();
        h.record(0, 2, &peaked(5, 3, 0.35)).unwrap();
        h.record(0, 3, &peaked(5, 2, 0.3)).unwrap();
        let scores = h.accumulated(0, 5);
        assert!((scores[2] - 0.7).abs() < 1e-15);
        assert!((scores[3] - 0.35).abs() < 1e-15);
        assert_eq!(h.corrected_label(0, &peaked(5, 3, 0.9)), 2);
    }

    #[test]
    fn single_record() {
        let mut h = PredictionHistory::new(3);
        h.record(0, 1, &peaked(6, 5, 0.9)).unwrap();
        assert_eq!(h.corrected_label(0, &peaked(6, 0, 0.9)), 5);
    }

    #[test]
    fn ties_go_to_smallest_class() {
        let mut h = PredictionHistory::new(3);
        h.record(0, 1, &pred(&[0.2, 0.5, 0.3])).unwrap();
        h.record(0, 2, &pred(&[0.2, 0.3, 0.5])).unwrap();
        assert_eq!(h.corrected_label(0, &pred(&[0.1, 0.1, 0.8])), 1);
    }

    #[test]
    fn unknown_sample_uses_current_prediction() {
        let h = PredictionHistory::new(5);
        assert_eq!(h.corrected_label(42, &pred(&[0.1, 0.2, 0.7])), 2);
    }

    #[test]
    fn csv_dump() {
        let mut h = PredictionHistory::new(2);
        h.record(3, 1, &pred(&[0.25, 0.75])).unwrap();
        h.record(3, 2, &pred(&[0.5, 0.5])).unwrap();
        h.record(1, 1, &pred(&[1.0, 0.0])).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sample_id,epoch,label,prob\n1,1,0,1\n3,1,1,0.75\n3,2,0,0.5\n"
        );
    }
}
