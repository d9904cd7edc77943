//! Trains the deterministic baselines (multi-view autoencoder, its
//! cross-entropy variant, and the contrastive embedding) next to VCCA and
//! compares their shared features with a linear classifier.
//!
//! Run with `cargo run --release --example baselines -- [epochs]`.

use mvlatent::datasets::{generate_two_view, Split, SplitView, SynthConfig};
use mvlatent::distributions::ObservationKind;
use mvlatent::evaluation::{classification_error, extract_features, select_linear_classifier, FeatureSource, SvmConfig, C_GRID};
use mvlatent::objectives::{ModelConfig, ObjectiveKind};
use mvlatent::training::{train, TrainConfig};
use mvlatent::Result;

fn main() -> Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(20, |a| a.parse().expect("epochs"));
    let ds = generate_two_view(&SynthConfig::default())?;
    let (tr, tu, te) = (ds.split(Split::Train)?, ds.split(Split::Tune)?, ds.split(Split::Test)?);
    let labels = |v: &SplitView| v.labels.clone().expect("labeled");

    for kind in [ObjectiveKind::Vcca, ObjectiveKind::Mvae, ObjectiveKind::MvaeVar, ObjectiveKind::Contrastive] {
        let mut model = ModelConfig::new(kind);
        model.obs_y = ObservationKind::GaussianFixedSigma { sigma: 0.1, sigmoid_mean: true };
        let mut cfg = TrainConfig { epochs, ..Default::default() };
        cfg.optimizer.learning_rate = 2e-3;
        cfg.objective.dropout_rate = 0.2;
        let (ck, _) = train(&model, cfg, &tr.x, &tr.y)?;
        let f = |v: &SplitView| extract_features(&ck.bundle, &v.x, &v.y, FeatureSource::ZFromX).map(|f| f.values);
        let sel = select_linear_classifier((&f(&tr)?, &labels(&tr)), (&f(&tu)?, &labels(&tu)), &C_GRID, &SvmConfig::default())?;
        let err = classification_error(&sel.classifier, &f(&te)?, &labels(&te))?;
        println!("{kind:?}: test error {:.1}%", 100.0 * err);
    }
    Ok(())
}
