//! Random-k sparsification: the kept coordinates, their d/k scaling and the
//! empirical error against ω‖x‖².

use shiftfl::compress::{compress, omega_of, CompressorSpec};
use shiftfl::linalg::{dist_sq, norm_sq};
use shiftfl::streams::{derive_stream, Purpose};

fn main() -> shiftfl::Result<()> {
    let x: Vec<f64> = (0..20).map(|j| (j as f64 * 0.7).sin()).collect();
    let spec = CompressorSpec::rand_fraction(x.len(), 0.2)?;
    let omega = omega_of(spec, x.len())?;

    let mut stream = derive_stream(0, 0, 0, Purpose::Compress);
    let c = compress(spec, &x, &mut stream)?;
    println!("{spec:?}, omega = {omega}");
    for (j, v) in c.indices.iter().zip(&c.values) {
        println!("  x[{j:>2}] = {:+.4}  sent {v:+.4}", x[*j as usize]);
    }

    let draws = 50_000;
    let mut mean = vec![0.0; x.len()];
    let mut err = 0.0;
    for _ in 0..draws {
        let d = compress(spec, &x, &mut stream)?.densify();
        err += dist_sq(&d, &x) / draws as f64;
        for (m, v) in mean.iter_mut().zip(&d) {
            *m += v / draws as f64;
        }
    }
    println!("|E C(x) - x|^2 ~ {:.2e}", dist_sq(&mean, &x));
    println!("E|C(x) - x|^2 ~ {err:.4}, omega |x|^2 = {:.4}", omega * norm_sq(&x));
    Ok(())
}
