//! Trains VCCA on the glyph dataset and compares linear-classifier error of
//! the learned shared features with raw view-1 pixels. Also writes a
//! reconstruction grid.
//!
//! Run with `cargo run --release --example train_vcca -- [epochs] [seed]`.

use mvlatent::datasets::{generate_two_view, Split, SynthConfig};
use mvlatent::distributions::ObservationKind;
use mvlatent::evaluation::{
    classification_error, extract_features, reconstruct_grid, select_linear_classifier, FeatureSource, SvmConfig, C_GRID,
};
use mvlatent::objectives::{ModelConfig, ObjectiveKind};
use mvlatent::training::{train, TrainConfig};
use mvlatent::{Result, RngState};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(30, |a| a.parse().expect("epochs"));
    let seed: u64 = args.next().map_or(0, |a| a.parse().expect("seed"));

    let ds = generate_two_view(&SynthConfig::default())?;
    let (tr, tu, te) = (ds.split(Split::Train)?, ds.split(Split::Tune)?, ds.split(Split::Test)?);

    let mut model = ModelConfig::new(ObjectiveKind::Vcca);
    model.obs_y = ObservationKind::GaussianFixedSigma { sigma: 0.1, sigmoid_mean: true };
    let mut cfg = TrainConfig { epochs, seed, ..Default::default() };
    cfg.optimizer.learning_rate = 2e-3;
    cfg.objective.dropout_rate = 0.2;

    let started = std::time::Instant::now();
    let (ck, metrics) = train(&model, cfg, &tr.x, &tr.y)?;
    let last = metrics.last().expect("at least one step");
    println!("trained {epochs} epochs in {:.1?}; last minibatch bound {:.1}", started.elapsed(), last.terms.total);

    let labels = |v: &mvlatent::datasets::SplitView| v.labels.clone().expect("labeled");
    for which in [FeatureSource::Raw, FeatureSource::ZFromX] {
        let f = |v: &mvlatent::datasets::SplitView| extract_features(&ck.bundle, &v.x, &v.y, which).map(|f| f.values);
        let sel = select_linear_classifier((&f(&tr)?, &labels(&tr)), (&f(&tu)?, &labels(&tu)), &C_GRID, &SvmConfig::default())?;
        let err = classification_error(&sel.classifier, &f(&te)?, &labels(&te))?;
        println!("{:>9}: C = {:<5} test error {:.1}%", which.name(), sel.c, 100.0 * err);
    }

    let rows: Vec<usize> = (0..8).collect();
    let grid = reconstruct_grid(&ck.bundle, &te.x.select_rows(&rows)?, &te.y.select_rows(&rows)?, &mut RngState::new(seed))?;
    grid.write_pgm(std::path::Path::new("vcca_reconstruction.pgm"))?;
    println!("wrote vcca_reconstruction.pgm (input | mean | std per row)");
    Ok(())
}
