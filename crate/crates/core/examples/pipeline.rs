//! The whole workflow on a synthetic dataset: stimuli, scores, planted MOS,
//! fitted weights, evaluation and report. Mirrors the `foveaq` subcommands.
//!
//! ```text
//! cargo run --release --example pipeline -- /tmp/demo
//! ```

use std::path::PathBuf;

use foveaq::eval::LogisticParams;
use foveaq::io::{load_manifest, read_scores_csv, write_mos_csv, Provenance};
use foveaq::pipeline::{run, Command, GroupBy, RunOptions};
use foveaq::synthetic::{demo_manifest, planted_mos_table, write_demo_sources};
use foveaq::zwf::ZoneWeights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    let images = write_demo_sources(&dir, 3, 256, 1)?;
    let manifest_path = dir.join("manifest.json");
    let mut file = demo_manifest(images, (320, 360));
    std::fs::write(&manifest_path, file.to_json())?;

    let opts = RunOptions { group_by: GroupBy::All, ..RunOptions::default() };
    let manifest = load_manifest(&manifest_path)?;
    for cmd in [Command::Geometry, Command::MakeStimuli, Command::Score] {
        println!("{}", run(&manifest, cmd, &opts)?.summary);
    }

    // Stand-in for a subjective study.
    let table = read_scores_csv(&dir.join("out/scores.csv"), Provenance::Computed)?;
    let weights = ZoneWeights::new(vec![0.7, 0.1, 0.1, 0.05, 0.05])?;
    let mos = planted_mos_table(&table, &weights, &LogisticParams::new(4.0, 0.2, 30.0, 0.0, 2.5), 255.0, 0.1, 9)?;
    write_mos_csv(&dir.join("mos.csv"), &mos)?;
    file.mos = Some("mos.csv".into());
    std::fs::write(&manifest_path, file.to_json())?;

    let manifest = load_manifest(&manifest_path)?;
    for cmd in [Command::FitWeights, Command::Evaluate, Command::Report] {
        println!("{}", run(&manifest, cmd, &opts)?.summary);
    }
    Ok(())
}
