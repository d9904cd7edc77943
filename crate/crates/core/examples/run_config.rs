//! Drives a full experiment from a JSON run config, the same way the
//! `mvlatent` binary does: generate data, train, evaluate, and render grids.
//!
//! Run with `cargo run --release --example run_config -- [out_dir]`.

use std::path::PathBuf;

use mvlatent::cli::{cmd_eval, cmd_gen_data, cmd_reconstruct, cmd_train, RunConfig, CHECKPOINT_DIR};
use mvlatent::Result;

const CONFIG: &str = r#"{
  "data": { "source": "synthetic", "train": 1000, "tune": 200, "test": 200, "seed": 3 },
  "model": {
    "kind": "VCCA",
    "d_z": 8,
    "obs_y": { "kind": "gaussian_fixed_sigma", "sigma": 0.1, "sigmoid_mean": true }
  },
  "train": {
    "epochs": 40,
    "seed": 5,
    "optimizer": { "learning_rate": 0.002 },
    "objective": { "dropout_rate": 0.2 }
  },
  "eval": { "features": ["z_from_x"] }
}"#;

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "run_config_out".into()));
    let cfg = RunConfig::from_json(CONFIG)?;
    println!("resolved config:\n{}", cfg.to_pretty_json()?);

    cmd_gen_data(&cfg, &out.join("data"))?;
    cmd_train(&cfg, &out, None)?;
    let report = cmd_eval(&cfg, &out.join(CHECKPOINT_DIR))?;
    for row in &report.results {
        println!("{:>9}: C = {:<5} test error {:.1}%", row.features.name(), row.c, 100.0 * row.error_rate);
    }
    cmd_reconstruct(&cfg, &out.join(CHECKPOINT_DIR), &out.join("reconstruction.pgm"), 8, 0)?;
    println!("run written to {}", out.display());
    Ok(())
}
