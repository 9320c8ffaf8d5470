//! Dropped-set fraction over epochs when the training set has no noise at all.

use crssc::metrics::diagnose;
use crssc::noisegen::{generate, NoiseConfig};
use crssc::trainer::train;
use crssc::TrainConfig;

fn main() -> crssc::Result<()> {
    let data = generate(&NoiseConfig {
        corruption_rate: 0.0,
        irrelevant_classes: 0,
        seed: 1,
        ..NoiseConfig::default()
    })?;
    let out = train(
        &data.train,
        &data.test,
        &TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        },
    )?;
    for d in diagnose(&out.logs, &data.train)?
        .iter()
        .filter(|d| d.selective)
    {
        println!(
            "{:>3} dropped {:.3} reusable {:.3} easy {:.3}",
            d.epoch,
            d.ratio_dropped.unwrap_or_default(),
            d.ratio_reusable.unwrap_or_default(),
            d.ratio_easy.unwrap_or_default()
        );
    }
    Ok(())
}
