//! Synthetic noisy datasets with known provenance.
//!
//! Task classes and "irrelevant" classes are Gaussian-style clusters in
//! feature space. Clean samples keep their class label; a fixed fraction of
//! task samples get a wrong label (mislabeled); samples from irrelevant
//! clusters get a random task label. Because every sample remembers where it
//! came from, selection and relabeling quality can be measured exactly.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, SampleId};

/// Minimum pairwise distance between cluster centers, in units of the cluster spread.
pub const MIN_CENTER_DISTANCE: f64 = 4.0;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Where a training sample really comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Clean,
    /// A task sample whose observed label was replaced.
    Mislabeled {
        true_label: usize,
    },
    /// A sample from a class outside the task.
    Irrelevant,
}

impl Provenance {
    /// CSV code: 0 clean, 1 mislabeled, 2 irrelevant.
    pub fn code(self) -> u8 {
        match self {
            Self::Clean => 0,
            Self::Mislabeled { .. } => 1,
            Self::Irrelevant => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Clean => "clean",
            Self::Mislabeled { .. } => "mislabeled",
            Self::Irrelevant => "irrelevant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvenancedSample {
    pub id: SampleId,
    pub features: Vec<f64>,
    pub observed_label: usize,
    pub provenance: Provenance,
}

impl ProvenancedSample {
    /// Ground-truth task label, `None` for irrelevant samples.
    pub fn true_label(&self) -> Option<usize> {
        match self.provenance {
            Provenance::Clean => Some(self.observed_label),
            Provenance::Mislabeled { true_label } => Some(true_label),
            Provenance::Irrelevant => None,
        }
    }
}

/// A labelled sample set over `classes` task classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: usize,
    pub feature_dim: usize,
    pub samples: Vec<ProvenancedSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    pub train: Dataset,
    /// Clean samples from the task classes only.
    pub test: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Number of task classes K.
    pub classes: usize,
    pub irrelevant_classes: usize,
    /// Fraction of task samples whose label is corrupted.
    pub corruption_rate: f64,
    pub samples_per_class: usize,
    pub feature_dim: usize,
    /// Cluster radius unit sigma.
    pub cluster_spread: f64,
    /// Fraction of each task class drawn from the 2-3 sigma shell.
    pub hard_fraction: f64,
    /// Clean test samples per task class.
    pub test_per_class: usize,
    /// Standard deviation of the center distribution, in units of sigma.
    pub center_spread: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            irrelevant_classes: 2,
            corruption_rate: 0.2,
            samples_per_class: 200,
            feature_dim: 16,
            cluster_spread: 1.0,
            hard_fraction: 0.2,
            test_per_class: 100,
            center_spread: 1.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::config("classes", "need at least 2 task classes"));
        }
        if !(0.0..1.0).contains(&self.corruption_rate) {
            return Err(Error::config(
                "corruption_rate",
                format!("must lie in [0, 1), got {}", self.corruption_rate),
            ));
        }
        if self.samples_per_class == 0 {
            return Err(Error::config("samples_per_class", "must be positive"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim", "must be positive"));
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread > 0.0) {
            return Err(Error::config(
                "cluster_spread",
                format!("must be positive, got {}", self.cluster_spread),
            ));
        }
        if !(0.0..1.0).contains(&self.hard_fraction) {
            return Err(Error::config(
                "hard_fraction",
                format!("must lie in [0, 1), got {}", self.hard_fraction),
            ));
        }
        if !(self.center_spread.is_finite() && self.center_spread > 0.0) {
            return Err(Error::config(
                "center_spread",
                format!("must be positive, got {}", self.center_spread),
            ));
        }
        Ok(())
    }

    /// Number of mislabeled training samples the generator will produce.
    pub fn mislabeled_count(&self) -> usize {
        (self.corruption_rate * (self.classes * self.samples_per_class) as f64).round() as usize
    }

    /// Number of hard samples in each task class.
    pub fn hard_per_class(&self) -> usize {
        (self.hard_fraction * self.samples_per_class as f64).round() as usize
    }
}

/// Unit vector with a uniformly random direction.
fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Point drawn uniformly (by volume) from the shell `inner <= |x - center| <= outer`.
fn draw_in_shell(rng: &mut ChaCha8Rng, center: &[f64], inner: f64, outer: f64) -> Vec<f64> {
    let d = center.len() as i32;
    let u: f64 = rng.random();
    let radius = (inner.powi(d) + u * (outer.powi(d) - inner.powi(d))).powf(1.0 / d as f64);
    random_direction(rng, center.len())
        .into_iter()
        .zip(center)
        .map(|(dir, c)| c + radius * dir)
        .collect()
}

fn place_centers(config: &NoiseConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let wanted = config.classes + config.irrelevant_classes;
    let sigma = config.cluster_spread;
    let scale = config.center_spread * sigma;
    let min_distance = MIN_CENTER_DISTANCE * sigma;

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while centers.len() < wanted {
        if attempts == MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::InfeasibleCenters {
                wanted,
                min_distance,
                attempts,
            });
        }
        attempts += 1;
        let candidate: Vec<f64> = (0..config.feature_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect::<Vec<f64>>();
        let far_enough = centers.iter().all(|c| {
            c.iter()
                .zip(&candidate)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                >= min_distance
        });
        if far_enough {
            centers.push(candidate);
        }
    }
    Ok(centers)
}

/// Generates a training set with injected noise and a clean test set.
pub fn generate(config: &NoiseConfig) -> Result<NoisyDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers = place_centers(config, &mut rng)?;
    let sigma = config.cluster_spread;
    let k = config.classes;
    let hard = config.hard_per_class();

    let draw_task_sample = |rng: &mut ChaCha8Rng, class: usize, is_hard: bool| {
        if is_hard {
            draw_in_shell(rng, &centers[class], 2.0 * sigma, 3.0 * sigma)
        } else {
            draw_in_shell(rng, &centers[class], 0.0, sigma)
        }
    };

    let mut train = Vec::with_capacity((k + config.irrelevant_classes) * config.samples_per_class);
    for class in 0..k {
        for i in 0..config.samples_per_class {
            train.push(ProvenancedSample {
                id: train.len() as SampleId,
                features: draw_task_sample(&mut rng, class, i < hard),
                observed_label: class,
                provenance: Provenance::Clean,
            });
        }
    }

    let task_count = train.len();
    for i in index::sample(&mut rng, task_count, config.mislabeled_count()).into_vec() {
        let sample = &mut train[i];
        let true_label = sample.observed_label;
        let shift = rng.random_range(1..k);
        sample.observed_label = (true_label + shift) % k;
        sample.provenance = Provenance::Mislabeled { true_label };
    }

    for extra in 0..config.irrelevant_classes {
        for _ in 0..config.samples_per_class {
            train.push(ProvenancedSample {
                id: train.len() as SampleId,
                features: draw_in_shell(&mut rng, &centers[k + extra], 0.0, sigma),
                observed_label: rng.random_range(0..k),
                provenance: Provenance::Irrelevant,
            });
        }
    }

    let test_hard = (config.hard_fraction * config.test_per_class as f64).round() as usize;
    let mut test = Vec::with_capacity(k * config.test_per_class);
    for class in 0..k {
        for i in 0..config.test_per_class {
            test.push(ProvenancedSample {
                id: test.len() as SampleId,
                features: draw_task_sample(&mut rng, class, i < test_hard),
                observed_label: class,
                provenance: Provenance::Clean,
            });
        }
    }

    Ok(NoisyDataset {
        train: Dataset {
            classes: k,
            feature_dim: config.feature_dim,
            samples: train,
        },
        test: Dataset {
            classes: k,
            feature_dim: config.feature_dim,
            samples: test,
        },
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Counts of (clean, mislabeled, irrelevant) samples.
    pub fn provenance_counts(&self) -> (usize, usize, usize) {
        self.samples
            .iter()
            .fold((0, 0, 0), |(c, m, i), s| match s.provenance {
                Provenance::Clean => (c + 1, m, i),
                Provenance::Mislabeled { .. } => (c, m + 1, i),
                Provenance::Irrelevant => (c, m, i + 1),
            })
    }

    /// Writes `id,label,provenance,true_label,f0..f{d-1}`.
    ///
    /// Floats use the shortest representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["id", "label", "provenance", "true_label"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..self.feature_dim).map(|i| format!("f{i}")));
        out.write_record(&header)?;

        for s in &self.samples {
            let true_label = match s.provenance {
                Provenance::Mislabeled { true_label } => true_label,
                _ => s.observed_label,
            };
            let mut row = vec![
                s.id.to_string(),
                s.observed_label.to_string(),
                s.provenance.code().to_string(),
                true_label.to_string(),
            ];
            row.extend(s.features.iter().map(|f| f.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`Dataset::write_csv`].
    pub fn read_csv<R: Read>(reader: R, classes: usize) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let header = input.headers()?.clone();
        let expected_prefix = ["id", "label", "provenance", "true_label"];
        if header.len() < expected_prefix.len()
            || header.iter().zip(expected_prefix).any(|(a, b)| a != b)
        {
            return Err(Error::Malformed(format!(
                "expected header starting with {}",
                expected_prefix.join(",")
            )));
        }
        let feature_dim = header.len() - expected_prefix.len();
        for (i, name) in header.iter().skip(expected_prefix.len()).enumerate() {
            if name != format!("f{i}") {
                return Err(Error::Malformed(format!("unexpected column `{name}`")));
            }
        }

        let mut seen = HashSet::new();
        let mut samples = Vec::new();
        for (line, record) in input.records().enumerate() {
            let record = record?;
            let row = line + 2;
            let field = |i: usize| -> Result<&str> {
                record
                    .get(i)
                    .ok_or_else(|| Error::Malformed(format!("row {row}: missing column {i}")))
            };
            let parse_usize = |i: usize| -> Result<usize> {
                field(i)?
                    .parse()
                    .map_err(|_| Error::Malformed(format!("row {row}: bad integer in column {i}")))
            };
            let id = parse_usize(0)? as SampleId;
            let observed_label = parse_usize(1)?;
            let code = parse_usize(2)?;
            let true_label = parse_usize(3)?;
            if observed_label >= classes || true_label >= classes {
                return Err(Error::Malformed(format!(
                    "row {row}: label out of range for {classes} classes"
                )));
            }
            let provenance = match code {
                0 => Provenance::Clean,
                1 if true_label != observed_label => Provenance::Mislabeled { true_label },
                1 => {
                    return Err(Error::Malformed(format!(
                        "row {row}: mislabeled sample with true_label == label"
                    )))
                }
                2 => Provenance::Irrelevant,
                other => {
                    return Err(Error::Malformed(format!(
                        "row {row}: unknown provenance code {other}"
                    )))
                }
            };
            let features = (0..feature_dim)
                .map(|j| {
                    field(4 + j)?
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Malformed(format!("row {row}: bad feature f{j}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if !seen.insert(id) {
                return Err(Error::Malformed(format!("row {row}: duplicate id {id}")));
            }
            samples.push(ProvenancedSample {
                id,
                features,
                observed_label,
                provenance,
            });
        }

        Ok(Self {
            classes,
            feature_dim,
            samples,
        })
    }
}
