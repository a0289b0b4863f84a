//! Variance of the local gradient estimators at a point away from the
//! snapshot, and again at the snapshot where SVRG and SAGA are exact.

use shiftfl::estimators::{clipped_mean, EstimatorConfig, EstimatorKind, EstimatorState};
use shiftfl::linalg::dist_sq;
use shiftfl::objectives::{Objective, Sample, SparseVec};
use shiftfl::streams::{derive_stream, Purpose};

fn variance(state: &EstimatorState, x: &[f64], data: &[Sample], obj: &Objective) -> shiftfl::Result<f64> {
    let exact = clipped_mean(obj, x, data, f64::INFINITY)?;
    let mut stream = derive_stream(1, 0, 0, Purpose::Sample);
    let draws = 20_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let g = state.estimate(x, data, obj, f64::INFINITY, &mut stream)?.g_tilde;
        acc += dist_sq(&g, &exact);
    }
    Ok(acc / draws as f64)
}

fn main() -> shiftfl::Result<()> {
    let obj = Objective::quadratic(vec![0.3, 0.6, 1.0]);
    let data: Vec<Sample> = (0..50)
        .map(|j| {
            let t = j as f64;
            Sample::new(SparseVec::from_dense(&[t.sin(), (2.0 * t).cos(), (0.5 * t).sin()]), 0)
        })
        .collect();
    let w = vec![0.0; 3];
    for x in [vec![0.2, -0.1, 0.1], vec![0.0; 3]] {
        println!("x = {x:?}");
        for kind in [EstimatorKind::Sgd, EstimatorKind::Svrg, EstimatorKind::Saga] {
            let (state, _) = EstimatorState::init(EstimatorConfig::new(kind, 5), &w, &data, &obj, f64::INFINITY)?;
            println!("  {:<5} variance {:.3e}", kind.name(), variance(&state, &x, &data, &obj)?);
        }
    }
    Ok(())
}
