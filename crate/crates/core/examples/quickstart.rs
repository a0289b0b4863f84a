//! Runs a config file (default: configs/quickstart.conf) and prints the
//! metrics CSV.

use shiftfl::harness::{run_experiment, write_csv, RunConfig};

fn main() -> shiftfl::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quickstart.conf").into());
    let cfg = RunConfig::from_file(path.as_ref())?;
    let rows = run_experiment(&cfg)?;
    write_csv(&rows, std::io::stdout().lock())
}
