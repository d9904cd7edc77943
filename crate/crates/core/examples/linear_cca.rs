//! Linear CCA on two views that share one latent signal.
//!
//! With `x = s + a`, `y = s + b` and independent unit-variance `s, a, b`,
//! the first canonical correlation is exactly 0.5.
//!
//! Run with `cargo run --release --example linear_cca`.

use mvlatent::evaluation::linear_cca;
use mvlatent::rng::sample_standard_normal;
use mvlatent::{Result, RngState, Tensor};

fn main() -> Result<()> {
    let n = 100_000;
    let mut rng = RngState::new(0);
    let s = sample_standard_normal(&mut rng, &[n, 1]);
    let noise = sample_standard_normal(&mut rng, &[n, 4]);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(2 * n);
    for i in 0..n {
        let e = noise.row(i);
        // The second column of each view is pure noise.
        x.extend([s.data()[i] + e[0], e[1]]);
        y.extend([s.data()[i] + e[2], e[3]]);
    }
    let (x, y) = (Tensor::from_vec(&[n, 2], x)?, Tensor::from_vec(&[n, 2], y)?);
    let m = linear_cca(&x, &y, 2)?;
    println!("canonical correlations {:?}", m.correlations);

    let (u, v) = (m.transform_x(&x)?, m.transform_y(&y)?);
    let corr: f64 = (0..n).map(|i| u.row(i)[0] * v.row(i)[0]).sum::<f64>() / n as f64;
    println!("empirical correlation of the first projected pair {corr:.4}");
    Ok(())
}
