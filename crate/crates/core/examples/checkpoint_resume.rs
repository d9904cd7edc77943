//! Interrupts training, saves a checkpoint, resumes from disk, and checks
//! that the result is bit-identical to an uninterrupted run.
//!
//! Run with `cargo run --release --example checkpoint_resume`.

use mvlatent::datasets::{generate_two_view, Split, SynthConfig};
use mvlatent::objectives::{ModelConfig, ObjectiveKind};
use mvlatent::training::{load_checkpoint, save_checkpoint, train, TrainConfig, Trainer};
use mvlatent::Result;

fn main() -> Result<()> {
    let data = SynthConfig { train: 500, tune: 100, test: 100, ..Default::default() };
    let ds = generate_two_view(&data)?;
    let tr = ds.split(Split::Train)?;
    let model = ModelConfig::new(ObjectiveKind::VccaPrivate);
    let cfg = TrainConfig { epochs: 4, batch_size: 50, ..Default::default() };
    cfg.objective.validate()?;

    let (straight, _) = train(&model, cfg.clone(), &tr.x, &tr.y)?;

    let mut first = Trainer::new(&model, TrainConfig { epochs: 2, ..cfg.clone() }, tr.x.last_dim(), tr.y.last_dim())?;
    first.fit(&tr.x, &tr.y, |t| {
        println!("epoch {} done, {} steps", t.epoch(), t.step());
        Ok(())
    })?;
    let dir = std::env::temp_dir().join("mvlatent_checkpoint_example");
    save_checkpoint(&dir, &first.checkpoint())?;
    println!("saved {}", dir.display());

    let mut resumed = Trainer::resume(load_checkpoint(&dir)?, cfg)?;
    resumed.fit(&tr.x, &tr.y, |t| {
        println!("epoch {} done, {} steps (resumed)", t.epoch(), t.step());
        Ok(())
    })?;
    let same = resumed.bundle().params().iter().zip(straight.bundle.params()).all(|(a, b)| a.data() == b.data());
    println!("resumed parameters identical to the uninterrupted run: {same}");
    Ok(())
}
