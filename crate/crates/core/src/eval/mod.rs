//! Cross-validated evaluation: stratified folds, a random-forest classifier,
//! WA/UA metrics and the experiment grid runner.

pub mod experiment;
pub mod folds;
pub mod forest;
pub mod metrics;
pub mod report;

pub use experiment::{run_experiment, Cell, CellReport, EpChoice, EvalReport, ExperimentConfig};
pub use folds::{stratified_folds, CvConfig, Fold};
pub use forest::{train_forest, ForestConfig, ForestModel, MaxFeatures};
pub use metrics::metrics;
