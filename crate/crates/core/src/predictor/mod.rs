//! Multi-modal fusion pipeline: input normalization, feature extraction,
//! concatenation fusion, the two prediction branches, position-to-angle
//! conversion, and training orchestration.

mod model;
mod preprocess;
mod train;

pub use model::{
    position_to_angle, predict_position, CoordStats, FeatureVec, InputDims, MmffGrads, MmffModel,
    ModelConfig, ProcessedInputs, TrainCache, SEQ_LEN,
};
pub use preprocess::{minmax_normalize_depth, zscore_normalize};
pub use train::{
    example_indices, predict_range, preprocess_all, split_point, train_mmff, SlotSample,
    TrainReport,
};
