//! Uplink cost per round under both accounting modes, and how many rounds
//! each configuration gets for a fixed budget.

use shiftfl::compress::CompressorSpec;
use shiftfl::fedproto::{bits_per_round, BitAccounting, BitMode};

fn main() -> shiftfl::Result<()> {
    let (n, d) = (10, 123);
    let budget: u64 = 2_000_000;
    for mode in [BitMode::Paper, BitMode::Wire] {
        let acct = BitAccounting { mode, bits_per_scalar: 32 };
        for comp in [CompressorSpec::Identity, CompressorSpec::rand_fraction(d, 0.05)?, CompressorSpec::RandK { k: 30 }] {
            let per = bits_per_round(comp, d, n, acct)?;
            println!("{mode:?} {comp:?}: {per} bits/round, {} rounds in {budget} bits", budget / per);
        }
    }
    Ok(())
}
