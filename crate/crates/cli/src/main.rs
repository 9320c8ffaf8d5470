//! Experiment runner: generates or loads a noisy dataset, trains the baseline
//! and/or the selective trainer, and writes CSV results.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 I/O failure.

mod settings;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use crssc::metrics::{
    diagnose, write_group_stats_csv, write_noise_fit_csv, write_overlap_csv, write_summary_csv,
};
use crssc::noisegen::generate;
use crssc::trainer::{train, write_epochs_csv};
use crssc::{Dataset, NoisyDataset, TrainConfig, TrainOutcome};

use settings::Settings;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "invalid configuration: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<crssc::Error> for CliError {
    fn from(e: crssc::Error) -> Self {
        if e.is_io() {
            Self::Io(e.to_string())
        } else {
            Self::Validation(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Generate,
    TrainBaseline,
    TrainCrssc,
    Compare,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Self::Generate => "generate",
            Self::TrainBaseline => "train-baseline",
            Self::TrainCrssc => "train-crssc",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    version,
    about = "Train classifiers under synthetic label noise and write CSV diagnostics"
)]
struct Args {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Flat `key=value` file; command-line overrides take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Training set in the `dataset.csv` format instead of generating one.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Clean test set to pair with `--dataset`.
    #[arg(long, requires = "dataset")]
    test_dataset: Option<PathBuf>,

    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    irrelevant_classes: Option<String>,
    #[arg(long)]
    corruption_rate: Option<String>,
    #[arg(long)]
    samples_per_class: Option<String>,
    #[arg(long)]
    feature_dim: Option<String>,
    #[arg(long)]
    cluster_spread: Option<String>,
    #[arg(long)]
    hard_fraction: Option<String>,
    #[arg(long)]
    test_per_class: Option<String>,
    #[arg(long)]
    center_spread: Option<String>,
    #[arg(long)]
    warmup_epochs: Option<String>,
    #[arg(long)]
    max_epochs: Option<String>,
    #[arg(long)]
    history_len: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    /// Comma-separated hidden layer widths, e.g. `32` or `64,32`.
    #[arg(long)]
    hidden_dims: Option<String>,
}

impl Args {
    fn overrides(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("seed", &self.seed),
            ("classes", &self.classes),
            ("irrelevant_classes", &self.irrelevant_classes),
            ("corruption_rate", &self.corruption_rate),
            ("samples_per_class", &self.samples_per_class),
            ("feature_dim", &self.feature_dim),
            ("cluster_spread", &self.cluster_spread),
            ("hard_fraction", &self.hard_fraction),
            ("test_per_class", &self.test_per_class),
            ("center_spread", &self.center_spread),
            ("warmup_epochs", &self.warmup_epochs),
            ("max_epochs", &self.max_epochs),
            ("history_len", &self.history_len),
            ("epsilon", &self.epsilon),
            ("lr", &self.lr),
            ("momentum", &self.momentum),
            ("weight_decay", &self.weight_decay),
            ("batch_size", &self.batch_size),
            ("hidden_dims", &self.hidden_dims),
        ]
    }

    fn settings(&self) -> Result<Settings, CliError> {
        let mut settings = Settings::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            settings.apply_file(&text)?;
        }
        for (key, value) in self.overrides() {
            if let Some(value) = value {
                settings.set(key, value)?;
            }
        }
        Ok(settings)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn read_dataset(path: &Path, classes: usize) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    Dataset::read_csv(file, classes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_data(args: &Args, settings: &mut Settings) -> Result<NoisyDataset, CliError> {
    let Some(path) = &args.dataset else {
        return Ok(generate(&settings.noise)?);
    };
    let classes = settings.noise.classes;
    let train = read_dataset(path, classes)?;
    let test = match &args.test_dataset {
        Some(p) => read_dataset(p, classes)?,
        None => Dataset {
            classes,
            feature_dim: train.feature_dim,
            samples: Vec::new(),
        },
    };
    if !test.is_empty() && test.feature_dim != train.feature_dim {
        return Err(CliError::Validation(format!(
            "feature_dim: test set has {} features, training set {}",
            test.feature_dim, train.feature_dim
        )));
    }
    settings.noise.feature_dim = train.feature_dim;
    Ok(NoisyDataset { train, test })
}

fn write_config(dir: &Path, args: &Args, settings: &Settings) -> Result<(), CliError> {
    let mut text = format!("# mode={}\n", args.mode.name());
    if let Some(p) = &args.dataset {
        text += &format!("# dataset={}\n", p.display());
    }
    if let Some(p) = &args.test_dataset {
        text += &format!("# test_dataset={}\n", p.display());
    }
    text += &settings.echo();
    let path = dir.join("config.txt");
    fs::write(&path, text).map_err(|e| io_error(&path, e))
}

fn write_data(dir: &Path, data: &NoisyDataset) -> Result<(), CliError> {
    data.train.write_csv(create(&dir.join("dataset.csv"))?)?;
    data.test.write_csv(create(&dir.join("test.csv"))?)?;
    Ok(())
}

fn write_run(dir: &Path, outcome: &TrainOutcome, data: &Dataset) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let diagnostics = diagnose(&outcome.logs, data)?;
    write_epochs_csv(&outcome.logs, create(&dir.join("epochs.csv"))?)?;
    write_summary_csv(&diagnostics, create(&dir.join("summary.csv"))?)?;
    write_overlap_csv(&diagnostics, create(&dir.join("overlap.csv"))?)?;
    write_group_stats_csv(&diagnostics, create(&dir.join("group_stats.csv"))?)?;
    write_noise_fit_csv(&diagnostics, create(&dir.join("noise_fit.csv"))?)?;
    outcome
        .history
        .write_csv(create(&dir.join("history.csv"))?)?;
    Ok(())
}

fn baseline_config(config: &TrainConfig) -> TrainConfig {
    TrainConfig {
        warmup_epochs: config.max_epochs,
        ..config.clone()
    }
}

fn final_accuracy(outcome: &TrainOutcome) -> Option<f64> {
    outcome.logs.last().and_then(|l| l.test_accuracy)
}

fn format_accuracy(acc: Option<f64>) -> String {
    acc.map(|a| a.to_string()).unwrap_or_default()
}

fn run(args: &Args) -> Result<(), CliError> {
    let mut settings = args.settings()?;
    settings.train.validate()?;
    if args.dataset.is_none() {
        settings.noise.validate()?;
    }
    let data = load_data(args, &mut settings)?;
    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    write_config(out, args, &settings)?;
    write_data(out, &data)?;

    match args.mode {
        Mode::Generate => {
            let (clean, mislabeled, irrelevant) = data.train.provenance_counts();
            println!(
                "wrote {} training samples ({clean} clean, {mislabeled} mislabeled, {irrelevant} irrelevant) and {} test samples",
                data.train.len(),
                data.test.len()
            );
        }
        Mode::TrainBaseline | Mode::TrainCrssc => {
            let config = if args.mode == Mode::TrainBaseline {
                baseline_config(&settings.train)
            } else {
                settings.train.clone()
            };
            let outcome = train(&data.train, &data.test, &config)?;
            write_run(out, &outcome, &data.train)?;
            println!(
                "final test accuracy: {}",
                format_accuracy(final_accuracy(&outcome))
            );
        }
        Mode::Compare => {
            let baseline = train(&data.train, &data.test, &baseline_config(&settings.train))?;
            let crssc = train(&data.train, &data.test, &settings.train)?;
            write_run(&out.join("baseline"), &baseline, &data.train)?;
            write_run(&out.join("crssc"), &crssc, &data.train)?;
            let path = out.join("comparison.csv");
            let mut text = String::from("method,final_aca\n");
            for (name, outcome) in [("baseline", &baseline), ("crssc", &crssc)] {
                let acc = format_accuracy(final_accuracy(outcome));
                println!("{name}: final test accuracy {acc}");
                text += &format!("{name},{acc}\n");
            }
            fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Validation(_) => 1,
                CliError::Io(_) => 2,
            })
        }
    }
}
