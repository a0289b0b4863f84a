//! A one-hidden-layer network trained with compressed, privatized SGD on
//! synthetic digit images, reporting test accuracy as training goes.

use shiftfl::harness::{run_experiment, Algorithm, CompressorChoice, DatasetSource, RunConfig, Setting, SigmaMode};

fn main() -> shiftfl::Result<()> {
    let cfg = RunConfig {
        algorithm: Algorithm::SoteriaSgd,
        dataset: DatasetSource::SyntheticDigits { rows: 2000, test_rows: 500 },
        hidden: 32,
        clip: 1.0,
        compressor: CompressorChoice::RandFraction(0.05),
        eta: Setting::Value(0.3),
        batch: Setting::Value(20),
        rounds: 100,
        sigma_mode: SigmaMode::Formula,
        eval_every: 10,
        ..Default::default()
    };
    for row in run_experiment(&cfg)? {
        println!(
            "round {:>4}  bits {:>10}  loss {:.4}  acc {:.3}",
            row.round,
            row.bits_cumulative,
            row.train_loss,
            row.test_accuracy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
