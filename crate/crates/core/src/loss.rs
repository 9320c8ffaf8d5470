//! Label-smoothed training targets.

use crate::{Error, Result};

/// Target distribution with `1 - epsilon` on the labelled class and
/// `epsilon / (K - 1)` on every other class.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTarget {
    dist: Vec<f64>,
    epsilon: f64,
}

impl SmoothedTarget {
    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::config(
            "epsilon",
            format!("must lie in [0, 1), got {epsilon}"),
        ));
    }
    Ok(())
}

pub fn lsr_target(label: usize, classes: usize, epsilon: f64) -> Result<SmoothedTarget> {
    if classes < 2 {
        return Err(Error::config(
            "classes",
            format!("need at least 2, got {classes}"),
        ));
    }
    validate_epsilon(epsilon)?;
    if label >= classes {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let off = epsilon / (classes - 1) as f64;
    let mut dist = vec![off; classes];
    dist[label] = 1.0 - epsilon;
    Ok(SmoothedTarget { dist, epsilon })
}
