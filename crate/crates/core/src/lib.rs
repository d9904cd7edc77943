//! Multi-view variational latent-variable models.
//!
//! `mvlatent` implements variational CCA (a shared Gaussian latent generating
//! two views through neural observation models), its shared+private variant,
//! the bidirectional convex combination of both bounds, and the multi-view
//! autoencoder and contrastive baselines. Everything runs on a small
//! reverse-mode autodiff core in `f64`.
//!
//! Modules, bottom-up:
//! - [`tensor`], [`rng`]: tensors, gradient tape, deterministic random streams
//! - [`distributions`]: diagonal Gaussians, KL, observation log-likelihoods
//! - [`networks`]: MLP encoders/decoders with dropout
//! - [`objectives`]: model bundles and every training loss
//! - [`training`]: ADAM, the epoch loop, metrics and checkpoints
//! - [`datasets`]: synthetic two-view glyphs, IDX loading, noisy-MNIST pairing
//! - [`evaluation`]: linear probes, linear CCA, orthogonality, likelihood oracle, image grids
//! - [`cli`]: JSON run configs and the command implementations behind the binary

pub mod cli;
pub mod datasets;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod networks;
pub mod objectives;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use rng::RngState;
pub use tensor::{Tape, Tensor, Var};
