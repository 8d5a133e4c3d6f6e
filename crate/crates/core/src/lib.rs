//! Interpretable solar-storm prediction: an LSTM-attention classifier over
//! SHARP magnetic-field time series, with Shapley attributions, local
//! surrogate explanations, feature-interaction analysis and SVG plots.

pub mod analysis;
pub mod data;
pub mod error;
pub mod lime;
pub mod model;
pub mod numerics;
pub mod plot;
pub mod shap;

pub use analysis::{CorrMatrix, DependenceData};
pub use data::{Label, Sample, SequenceSet, Window, CATALOG, N_FEATURES};
pub use error::{Error, Result};
pub use lime::{Discretizer, LimeConfig, LimeExplanation};
pub use model::{Checkpoint, GradientModel, LstmModel, Predictor, TrainConfig};
pub use numerics::Mat;
pub use plot::PlotSpec;
pub use shap::{Background, ExplainerConfig, Method, ShapExplanation};
