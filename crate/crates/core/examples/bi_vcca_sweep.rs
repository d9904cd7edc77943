//! Sweeps the weight `mu` of the x-conditioned bound in bi-VCCA through the
//! library's sweep command and prints the resulting table.
//!
//! Run with `cargo run --release --example bi_vcca_sweep -- [out_dir] [epochs]`.

use std::path::PathBuf;

use mvlatent::cli::{cmd_sweep_mu, RunConfig, DEFAULT_MU_LIST, SWEEP_FILE};
use mvlatent::distributions::ObservationKind;
use mvlatent::objectives::{ModelConfig, ObjectiveKind};
use mvlatent::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "bi_vcca_sweep_out".into()));
    let epochs: usize = args.next().map_or(10, |a| a.parse().expect("epochs"));

    let mut cfg = RunConfig::default();
    cfg.model = ModelConfig::new(ObjectiveKind::BiVcca);
    cfg.model.obs_y = ObservationKind::GaussianFixedSigma { sigma: 0.1, sigmoid_mean: true };
    cfg.train.epochs = epochs;
    cfg.train.optimizer.learning_rate = 2e-3;
    cfg.train.objective.dropout_rate = 0.2;
    cfg.eval.include_raw = false;

    let rows = cmd_sweep_mu(&cfg, &out, &DEFAULT_MU_LIST)?;
    println!("{:>5} {:>12} {:>12}", "mu", "tune acc", "test acc");
    for r in &rows {
        println!("{:>5} {:>12.4} {:>12.4}", r.mu, r.tune_metric, r.test_metric);
    }
    println!("table written to {}", out.join(SWEEP_FILE).display());
    Ok(())
}
