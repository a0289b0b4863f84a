//! Stepsizes, shift rate, batch size and noise that each recipe prescribes
//! for an a9a-sized problem.

use shiftfl::fedproto::{derive_hyperparams, HyperInputs, Recipe};
use shiftfl::privacy::PrivacyBudget;

fn main() -> shiftfl::Result<()> {
    let inputs = HyperInputs {
        n: 10,
        omega: 123.0 / 6.0 - 1.0,
        m: 3256,
        d: 123,
        smoothness: 3.9,
        clip: 0.5,
        budget: PrivacyBudget::new(10.0, 1e-3)?,
        c: 1.0,
        phi0: 0.7,
    };
    println!("{:<12} {:>10} {:>10} {:>8} {:>5} {:>9} {:>11} {:>10}", "recipe", "eta", "gamma", "beta", "b", "p", "T", "sigma");
    for name in ["cor1_sgd", "cor1_gd", "cor2_svrg", "cor3_saga", "thm1_cdpsgd"] {
        let h = derive_hyperparams(Recipe::parse(name)?, &inputs)?;
        println!(
            "{name:<12} {:>10.3e} {:>10.4} {:>8.4} {:>5} {:>9.4} {:>11.3e} {:>10.3e}",
            h.eta, h.gamma, h.beta, h.batch, h.p, h.rounds, h.sigma
        );
    }
    Ok(())
}
