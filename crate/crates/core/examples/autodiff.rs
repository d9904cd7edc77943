//! Reverse-mode gradients on the tape, checked against central differences.
//!
//! Run with `cargo run --example autodiff`.

use mvlatent::{Result, RngState, Tape, Tensor};

/// `sum(sigmoid(relu(x W + b)) ^ 2)` for a fixed input.
fn forward(tape: &mut Tape, x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(mvlatent::Var, mvlatent::Var, mvlatent::Var)> {
    let xv = tape.constant(x.clone())?;
    let wv = tape.leaf(w.clone().with_grad(true))?;
    let bv = tape.leaf(b.clone().with_grad(true))?;
    let h = tape.affine(xv, wv, bv)?;
    let h = tape.relu(h)?;
    let s = tape.sigmoid(h)?;
    let sq = tape.square(s)?;
    Ok((tape.sum(sq)?, wv, bv))
}

fn value(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<f64> {
    let mut tape = Tape::new();
    let (loss, _, _) = forward(&mut tape, x, w, b)?;
    Ok(tape.value(loss).item())
}

fn main() -> Result<()> {
    let mut rng = RngState::new(7);
    let x = mvlatent::rng::sample_standard_normal(&mut rng, &[4, 3]);
    let w = mvlatent::rng::sample_standard_normal(&mut rng, &[3, 2]);
    let b = mvlatent::rng::sample_standard_normal(&mut rng, &[2]);

    let mut tape = Tape::new();
    let (loss, wv, _) = forward(&mut tape, &x, &w, &b)?;
    let grads = tape.backward(loss)?;
    let gw = grads.get(wv).expect("weight gradient");
    println!("loss = {:.6}", tape.value(loss).item());

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..w.numel() {
        let mut plus = w.clone();
        plus.data_mut()[i] += h;
        let mut minus = w.clone();
        minus.data_mut()[i] -= h;
        let fd = (value(&x, &plus, &b)? - value(&x, &minus, &b)?) / (2.0 * h);
        let an = gw.data()[i];
        let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-12);
        println!("dW[{i}]  tape {an:+.8}  finite difference {fd:+.8}");
        worst = worst.max(rel);
    }
    println!("largest relative error {worst:.2e}");
    Ok(())
}
