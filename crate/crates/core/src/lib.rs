//! Pattern-based kernel pruning toolkit.
//!
//! Every kernel of a pruned 3×3 convolution layer keeps the same number of
//! non-zeros `n`, and their positions follow one of a few per-layer
//! occupancy patterns. This crate covers the whole path from dense weights
//! to hardware:
//!
//! * [`distill`] chooses each layer's patterns and projects kernels onto them,
//! * [`codec`] stores kernels as pattern codes plus 8-bit non-zeros,
//! * [`memory`] lays the result out as Weight/Pattern SRAM images,
//! * [`sim`] counts cycles on a 64-PE × 4-lane sparsity-aware array,
//! * [`analytics`] reports compression and FLOPs.
//!
//! On-disk formats: `PCT1` dense tensors ([`tensor_io`]) and `PCP1` pruned
//! models ([`pruned_io`]).

pub mod analytics;
pub mod codec;
pub mod distill;
pub mod error;
pub mod memory;
pub mod model;
pub mod pattern;
pub mod presets;
pub mod pruned_io;
pub mod sim;
pub mod tensor_io;
mod wire;

pub use codec::{decode, encode, index_overhead, IndexOverhead, PrunedLayer, PrunedModel};
pub use distill::{distill_layer, distill_model, nearest_pattern, project, DistillReport, LayerDistillation};
pub use error::{Error, Result};
pub use memory::{pack, unpack, MemoryImage};
pub use model::{ConvGeometry, Kernel, LayerShape, LayerSparsity, LayerWeights, SparsityConfig};
pub use pattern::{binomial, full_pattern_set, PatternMask, PatternSet};
pub use wire::{BitReader, BitWriter};
