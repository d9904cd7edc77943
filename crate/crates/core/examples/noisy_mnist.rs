//! Builds the noisy two-view MNIST pairing from IDX files.
//!
//! With arguments, reads real files:
//! `cargo run --release --example noisy_mnist -- train-images-idx3-ubyte train-labels-idx1-ubyte`.
//! Without, writes a tiny IDX fixture first and pairs that.

use std::path::PathBuf;

use mvlatent::datasets::{load_idx, load_idx_labels, make_noisy_mnist, write_idx, Split, SplitSizes};
use mvlatent::Result;

fn fixture(dir: &std::path::Path) -> Result<(PathBuf, PathBuf)> {
    let (n, side) = (30usize, 8usize);
    let mut pixels = Vec::with_capacity(n * side * side);
    for i in 0..n {
        // Class k lights up column k.
        let k = i % 3;
        for _r in 0..side {
            pixels.extend((0..side).map(|c| if c == 2 + k { 255u8 } else { 0 }));
        }
    }
    let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
    let (img, lab) = (dir.join("images.idx"), dir.join("labels.idx"));
    write_idx(&img, &[n, side, side], &pixels)?;
    write_idx(&lab, &[n], &labels)?;
    Ok((img, lab))
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (img, lab, sizes) = if let [img, lab] = args.as_slice() {
        (PathBuf::from(img), PathBuf::from(lab), SplitSizes { train: 50_000, tune: 5_000, test: 5_000 })
    } else {
        let dir = std::env::temp_dir().join("mvlatent_idx_example");
        std::fs::create_dir_all(&dir)?;
        let (img, lab) = fixture(&dir)?;
        (img, lab, SplitSizes { train: 18, tune: 6, test: 6 })
    };
    let images = load_idx(&img)?;
    let labels = load_idx_labels(&lab)?;
    println!("loaded {:?} images, {} labels", images.shape(), labels.len());

    let ds = make_noisy_mnist(&images, &labels, 0, sizes)?;
    for s in Split::ALL {
        println!("{:>5}: {} pairs", s.name(), ds.splits.get(s).len());
    }
    let row = ds.splits.get(Split::Train)[0];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("pair 0: rotated view mean {:.3}, noisy view mean {:.3}", mean(ds.x.row(row)), mean(ds.y.row(row)));
    Ok(())
}
