//! Runs the baseline and the selective schedule on one noisy Gaussian dataset
//! and prints per-epoch diagnostics side by side.
//!
//! Usage: `cargo run --release --example noisy_gaussian -- [seed] [hidden,widths] [center_spread]`

use crssc::metrics::{diagnose, provenance_map};
use crssc::noisegen::{generate, NoiseConfig};
use crssc::trainer::train;
use crssc::{Group, TrainConfig};

fn main() -> crssc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let hidden: Vec<usize> = args
        .get(1)
        .map(|s| s.split(',').filter_map(|w| w.parse().ok()).collect())
        .unwrap_or_else(|| vec![32]);
    let center_spread: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let data = generate(&NoiseConfig {
        seed,
        center_spread,
        ..NoiseConfig::default()
    })?;
    let crssc_cfg = TrainConfig {
        seed,
        hidden_dims: hidden,
        ..TrainConfig::default()
    };
    let baseline_cfg = TrainConfig {
        warmup_epochs: crssc_cfg.max_epochs,
        ..crssc_cfg.clone()
    };

    let base = train(&data.train, &data.test, &baseline_cfg)?;
    let ours = train(&data.train, &data.test, &crssc_cfg)?;
    let base_diag = diagnose(&base.logs, &data.train)?;
    let ours_diag = diagnose(&ours.logs, &data.train)?;

    let f = |v: Option<f64>| {
        v.map(|x| format!("{x:.3}"))
            .unwrap_or_else(|| "  -  ".into())
    };
    println!("epoch  base_acc base_mem  ours_acc ours_mem ours_mtrue  easy  reuse  drop  sel   relabel  drop_ovl1");
    for (b, o) in base_diag.iter().zip(&ours_diag) {
        let ovl = o.dropped_overlap.first().map(|(_, v)| *v);
        println!(
            "{:>5}  {}    {}     {}    {}    {}      {}  {}  {}  {}  {}    {}",
            b.epoch,
            f(b.test_accuracy),
            f(b.fit.mislabeled_observed),
            f(o.test_accuracy),
            f(o.fit.mislabeled_observed),
            f(o.fit.mislabeled_true),
            f(o.ratio_easy),
            f(o.ratio_reusable),
            f(o.ratio_dropped),
            f(o.selection_accuracy),
            f(o.relabel_accuracy),
            f(ovl),
        );
    }

    // Where each kind of sample ends up, every ten selective epochs.
    let provenance = provenance_map(&data.train);
    println!();
    println!("epoch  provenance   easy  reusable dropped  relabel_ok  mean_cert");
    for log in ours
        .logs
        .iter()
        .filter(|l| l.is_selective() && l.epoch % 10 == 0)
    {
        for kind in ["clean", "mislabeled", "irrelevant"] {
            let is_kind = |id: &u64| provenance[id].provenance.name() == kind;
            let members: Vec<_> = log
                .samples
                .iter()
                .filter(|s| is_kind(&s.sample_id))
                .collect();
            let n = members.len() as f64;
            let share = |g| members.iter().filter(|s| s.group == g).count() as f64 / n;
            let relabeled: Vec<_> = log
                .corrections
                .iter()
                .filter(|c| is_kind(&c.sample_id))
                .collect();
            let relabel_ok = relabeled
                .iter()
                .filter(|c| provenance[&c.sample_id].true_label() == Some(c.new_label))
                .count() as f64
                / relabeled.len().max(1) as f64;
            let cert = members.iter().map(|s| s.certainty).sum::<f64>() / n;
            println!(
                "{:>5}  {:<11} {:.3}  {:.3}    {:.3}    {:.3}      {:.3}",
                log.epoch,
                kind,
                share(Group::Easy),
                share(Group::Reusable),
                share(Group::Dropped),
                relabel_ok,
                cert
            );
        }
    }
    Ok(())
}
