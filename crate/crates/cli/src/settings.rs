//! Flat `key=value` configuration shared by the config file, the command-line
//! overrides and the `config.txt` echo.

use crssc::{NoiseConfig, TrainConfig};

use crate::CliError;

/// Every recognised key, in echo order.
pub const KEYS: [&str; 19] = [
    "seed",
    "classes",
    "irrelevant_classes",
    "corruption_rate",
    "samples_per_class",
    "feature_dim",
    "cluster_spread",
    "hard_fraction",
    "test_per_class",
    "center_spread",
    "warmup_epochs",
    "max_epochs",
    "history_len",
    "epsilon",
    "lr",
    "momentum",
    "weight_decay",
    "batch_size",
    "hidden_dims",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub noise: NoiseConfig,
    pub train: TrainConfig,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("{key}: cannot parse `{value}`")))
}

fn parse_dims(value: &str) -> Result<Vec<usize>, CliError> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|d| parse("hidden_dims", d)).collect()
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let (n, t) = (&mut self.noise, &mut self.train);
        match key {
            "seed" => {
                n.seed = parse(key, value)?;
                t.seed = n.seed;
            }
            "classes" => n.classes = parse(key, value)?,
            "irrelevant_classes" => n.irrelevant_classes = parse(key, value)?,
            "corruption_rate" => n.corruption_rate = parse(key, value)?,
            "samples_per_class" => n.samples_per_class = parse(key, value)?,
            "feature_dim" => n.feature_dim = parse(key, value)?,
            "cluster_spread" => n.cluster_spread = parse(key, value)?,
            "hard_fraction" => n.hard_fraction = parse(key, value)?,
            "test_per_class" => n.test_per_class = parse(key, value)?,
            "center_spread" => n.center_spread = parse(key, value)?,
            "warmup_epochs" => t.warmup_epochs = parse(key, value)?,
            "max_epochs" => t.max_epochs = parse(key, value)?,
            "history_len" => t.history_len = parse(key, value)?,
            "epsilon" => t.epsilon = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "momentum" => t.momentum = parse(key, value)?,
            "weight_decay" => t.weight_decay = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "hidden_dims" => t.hidden_dims = parse_dims(value)?,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let (n, t) = (&self.noise, &self.train);
        match key {
            "seed" => n.seed.to_string(),
            "classes" => n.classes.to_string(),
            "irrelevant_classes" => n.irrelevant_classes.to_string(),
            "corruption_rate" => n.corruption_rate.to_string(),
            "samples_per_class" => n.samples_per_class.to_string(),
            "feature_dim" => n.feature_dim.to_string(),
            "cluster_spread" => n.cluster_spread.to_string(),
            "hard_fraction" => n.hard_fraction.to_string(),
            "test_per_class" => n.test_per_class.to_string(),
            "center_spread" => n.center_spread.to_string(),
            "warmup_epochs" => t.warmup_epochs.to_string(),
            "max_epochs" => t.max_epochs.to_string(),
            "history_len" => t.history_len.to_string(),
            "epsilon" => t.epsilon.to_string(),
            "lr" => t.lr.to_string(),
            "momentum" => t.momentum.to_string(),
            "weight_decay" => t.weight_decay.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "hidden_dims" => t
                .hidden_dims
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
            other => unreachable!("unknown key {other}"),
        }
    }

    /// Applies a config file: one `key=value` per line, `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected key=value", i + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Every key with its resolved value, readable back by [`Settings::apply_file`].
    pub fn echo(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k)))
            .collect()
    }
}
