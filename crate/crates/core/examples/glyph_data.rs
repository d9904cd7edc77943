//! Generates the synthetic two-view glyph dataset, saves it, and writes a
//! few sample pairs as a PGM image.
//!
//! Run with `cargo run --release --example glyph_data -- [out_dir]`.

use std::path::PathBuf;

use mvlatent::datasets::{generate_two_view, glyph_prototype, load_dataset, save_dataset, Split, SynthConfig};
use mvlatent::evaluation::ImageGrid;
use mvlatent::Result;

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "glyph_data_out".into()));
    let cfg = SynthConfig { seed: 1, ..Default::default() };
    let ds = generate_two_view(&cfg)?;
    for s in Split::ALL {
        println!("{:>5}: {} pairs", s.name(), ds.splits.get(s).len());
    }

    // Row k: prototype of class k, then three (view 1, view 2) pairs of that class.
    let side = cfg.side;
    let labels = ds.labels.as_ref().expect("synthetic data is labeled");
    let mut grid = ImageGrid::new(cfg.class_count, 7, side);
    for k in 0..cfg.class_count {
        grid.set_cell(k, 0, &glyph_prototype(k, side))?;
        let rows = labels.iter().enumerate().filter(|(_, &l)| l == k).map(|(i, _)| i).take(3);
        for (j, i) in rows.enumerate() {
            grid.set_cell(k, 1 + 2 * j, ds.x.row(i))?;
            grid.set_cell(k, 2 + 2 * j, ds.y.row(i))?;
        }
    }
    grid.write_pgm(&out.join("samples.pgm"))?;

    let dir = out.join("dataset");
    save_dataset(&dir, &ds)?;
    let back = load_dataset(&dir)?;
    assert_eq!(back.x.data(), ds.x.data());
    println!("wrote {} and {}", out.join("samples.pgm").display(), dir.display());
    Ok(())
}
