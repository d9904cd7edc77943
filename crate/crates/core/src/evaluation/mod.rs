//! Linear probes, linear CCA, representation diagnostics and image grids.

mod cca;
mod features;
mod grids;
mod metrics;
mod svm;

pub use cca::{linear_cca, CcaModel, CCA_RIDGE};
pub use features::{extract_features, project, write_features_csv, FeatureMatrix, FeatureSource};
pub use grids::{private_traversal_grid, reconstruct_grid, ImageGrid, SEPARATOR};
pub use metrics::{analytic_linear_gaussian_loglik, orthogonality_score};
pub use svm::{
    classification_error, select_linear_classifier, train_linear_classifier, LinearClassifier, Selection, SvmConfig, C_GRID,
};
