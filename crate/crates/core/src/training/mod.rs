//! ADAM, the minibatch training loop, metrics logging and checkpoints.

mod adam;
mod checkpoint;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, RngCursor, FORMAT_VERSION, MANIFEST_FILE, OPTIM_FILE, PARAMS_FILE,
};
pub use trainer::{train, write_metrics_csv, MetricRow, TrainConfig, Trainer, METRICS_HEADER};
