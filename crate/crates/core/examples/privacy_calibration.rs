//! Noise levels for a privacy budget: the closed form next to the numeric
//! moments accountant, across horizons and estimators.

use shiftfl::estimators::{sensitivity_of, EstimatorKind};
use shiftfl::privacy::{sigma_accountant, sigma_formula, PrivacyBudget};

fn main() -> shiftfl::Result<()> {
    let m = 3256;
    let clip = 0.5;
    let budget = PrivacyBudget::new(10.0, 1e-3)?;
    println!("m = {m}, G = {clip}, eps = 10, delta = 1e-3");
    println!("{:<5} {:>6} {:>4} {:>12} {:>12}", "est", "T", "b", "formula", "accountant");
    for kind in [EstimatorKind::Sgd, EstimatorKind::Svrg] {
        let sens = sensitivity_of(kind, clip);
        for rounds in [100, 1000, 10_000] {
            let b = 54;
            let formula = sigma_formula(budget, rounds, m, sens, 1.0)?;
            let acct = match sigma_accountant(budget, rounds, b as f64 / m as f64, m, b as f64, sens) {
                Ok(r) => format!("{:.4e}", r.sigma),
                Err(e) => format!("({})", e.category()),
            };
            println!("{:<5} {rounds:>6} {b:>4} {formula:>12.4e} {acct:>12}", kind.name());
        }
    }
    Ok(())
}
