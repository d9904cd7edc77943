//! Trains VCCA-private, reports how much the private and shared features
//! overlap, and samples the private variables to show what they encode.
//!
//! Run with `cargo run --release --example vcca_private -- [epochs] [dropout]`.

use mvlatent::datasets::{generate_two_view, Split, SynthConfig};
use mvlatent::distributions::ObservationKind;
use mvlatent::evaluation::{extract_features, orthogonality_score, private_traversal_grid, FeatureSource};
use mvlatent::objectives::{ModelConfig, ObjectiveKind};
use mvlatent::training::{train, TrainConfig};
use mvlatent::{Result, RngState};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(30, |a| a.parse().expect("epochs"));
    let dropout: f64 = args.next().map_or(0.2, |a| a.parse().expect("dropout"));

    let ds = generate_two_view(&SynthConfig::default())?;
    let (tr, tu) = (ds.split(Split::Train)?, ds.split(Split::Tune)?);

    let mut model = ModelConfig::new(ObjectiveKind::VccaPrivate);
    model.obs_y = ObservationKind::GaussianFixedSigma { sigma: 0.1, sigmoid_mean: true };
    let mut cfg = TrainConfig { epochs, ..Default::default() };
    cfg.optimizer.learning_rate = 2e-3;
    cfg.objective.dropout_rate = dropout;
    let (ck, _) = train(&model, cfg, &tr.x, &tr.y)?;

    let f = |which| extract_features(&ck.bundle, &tu.x, &tu.y, which).map(|f| f.values);
    let z = f(FeatureSource::ZFromX)?;
    println!("dropout {dropout}: lambda(Z, H_x) = {:.5}", orthogonality_score(&z, &f(FeatureSource::Hx)?)?);
    println!("dropout {dropout}: lambda(Z, H_y) = {:.5}", orthogonality_score(&z, &f(FeatureSource::Hy)?)?);

    // Column 0 decodes with h_x = 0; later columns draw h_x from the prior.
    let rows: Vec<usize> = (0..8).collect();
    let grid = private_traversal_grid(&ck.bundle, &tu.x.select_rows(&rows)?, 8, &mut RngState::new(1))?;
    grid.write_pgm(std::path::Path::new("private_traversal.pgm"))?;
    println!("wrote private_traversal.pgm");
    Ok(())
}
