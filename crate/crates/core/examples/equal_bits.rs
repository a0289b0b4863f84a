//! Compressed vs uncompressed private training on a9a-shaped data, compared
//! at the bit budget the compressed runs spend.
//!
//! Each algorithm is tuned over the stepsize grid with a 3-seed average.
//! Pass a LIBSVM path as the first argument to use real data.

use std::time::Instant;

use shiftfl::harness::{plan_run, prepare_data, run_until, Algorithm, DatasetSource, RunConfig, SigmaMode};

const GRID: [f64; 7] = [0.01, 0.03, 0.06, 0.1, 0.3, 0.6, 1.0];
const SEEDS: [u64; 3] = [0, 1, 2];

fn main() -> shiftfl::Result<()> {
    let rounds: u64 = std::env::var("ROUNDS").ok().and_then(|v| v.parse().ok()).unwrap_or(1230);
    let mut base = RunConfig { rounds, sigma_mode: SigmaMode::Accountant, parallel: false, ..Default::default() };
    if let Some(path) = std::env::args().nth(1) {
        base.dataset = DatasetSource::Libsvm { path: path.into() };
    }
    let data = prepare_data(&base)?;
    println!("m = {}, d = {}, T = {rounds}", data.manifest.m, data.manifest.d_features);

    let mut budget = None;
    for algo in [Algorithm::CdpSgd, Algorithm::SoteriaSgd, Algorithm::SoteriaSvrg, Algorithm::LdpSgd, Algorithm::LdpSvrg] {
        let cfg = RunConfig { algorithm: algo, ..base.clone() };
        let plan = plan_run(&cfg, &data)?;
        let per_round = shiftfl::fedproto::bits_per_round(plan.round.comp, data.manifest.d_features, cfg.n_clients, plan.round.bits)?;
        let budget = *budget.get_or_insert(per_round * rounds);
        let stop = (budget / per_round).min(rounds);
        let start = Instant::now();
        let mut best = (f64::NAN, f64::INFINITY);
        for eta in GRID {
            let mut total = 0.0;
            for seed in SEEDS {
                let fed = run_until(&cfg, &data, &plan, eta, seed, stop)?;
                total += fed.loss(&fed.server.x)?;
            }
            let mean = total / SEEDS.len() as f64;
            if mean < best.1 {
                best = (eta, mean);
            }
        }
        println!(
            "{:<15} sigma {:.3e}  rounds {stop:>5}  bits {:>9}  best eta {:<5}  loss {:.6}  ({:.1}s)",
            algo.name(),
            plan.sigma(),
            stop * per_round,
            best.0,
            best.1,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
