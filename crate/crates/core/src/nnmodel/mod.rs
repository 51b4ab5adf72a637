//! The source model: a residual MLP trained on tree- or junta-labeled data,
//! plus the representation oracle exposing its hidden activations.

mod dataset;
mod mlp;
mod representation;

pub use dataset::{gen_dataset, LabeledDataset, Provenance, Target};
pub use mlp::{train, Activation, Architecture, ResidualMLP, TrainConfig, TrainReport};
pub use representation::{
    FeatureMap, PlantedIndicators, RepresentationOracle, TableFeatures, ZeroFeatures,
    NORM_ESTIMATE_SAMPLES, NORM_ESTIMATE_SLACK,
};
