//! Cycle-level simulation of the sparsity-aware PE group.

mod engine;
mod feature;
mod pointer;

pub use engine::{
    simulate_layer, simulate_model, ConvParams, ModelSimReport, OutputMap, SimReport, CSV_HEADER, MACS_PER_CYCLE,
    MAC_LANES, PE_COUNT, PIPELINE_FILL, PIPELINE_STAGES, STAGE_NAMES,
};
pub use feature::{parse_shape, FeatureMap};
pub use pointer::{pointer_offsets, pointer_table, PointerOffsets, SparsityMask};
