//! Closed-form KL of a diagonal Gaussian to the standard normal, compared
//! with a Monte-Carlo estimate.
//!
//! Run with `cargo run --release --example kl_divergence`.

use mvlatent::distributions::{kl_to_standard_normal, DiagonalGaussian};
use mvlatent::{Result, RngState, Tape, Tensor};

fn main() -> Result<()> {
    let mu = [0.5, -1.0, 0.0];
    let log_sigma = [0.0, -0.5, 0.7];

    let mut tape = Tape::new();
    let m = tape.constant(Tensor::from_vec(&[1, 3], mu.to_vec())?)?;
    let ls = tape.constant(Tensor::from_vec(&[1, 3], log_sigma.to_vec())?)?;
    let q = DiagonalGaussian::new(&mut tape, m, ls)?;
    let kl = kl_to_standard_normal(&mut tape, &q)?;
    let kl = tape.value(kl).item();

    // KL = E_q[log q(z) - log p(z)]; the normalizers cancel.
    let n = 100_000;
    let mut rng = RngState::new(0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let mut d = 0.0;
        for j in 0..3 {
            let e = rng.standard_normal();
            let z = mu[j] + log_sigma[j].exp() * e;
            d += -0.5 * e * e - log_sigma[j] + 0.5 * z * z;
        }
        sum += d;
        sum_sq += d * d;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    println!("closed form  {kl:.5}");
    println!("Monte Carlo  {mean:.5} +- {se:.5} ({n} samples)");
    println!("difference   {:.2} standard errors", (kl - mean).abs() / se);
    Ok(())
}
