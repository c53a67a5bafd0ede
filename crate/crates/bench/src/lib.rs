//! Workload fixtures shared by the criterion benches.

use pcnn::distill::project_layer;
use pcnn::model::{ConvGeometry, LayerWeights};
use pcnn::presets::generate;
use pcnn::{distill_layer, LayerShape, PrunedLayer};

/// One synthetic 3×3 layer with He-scaled Gaussian weights.
pub fn layer(in_c: u32, out_c: u32, side: u32, seed: u64) -> LayerWeights {
    let shape = LayerShape {
        out_channels: out_c,
        in_channels: in_c,
        kernel_size: 3,
        geometry: ConvGeometry::new(side, side, 1, 1),
    };
    generate(&[shape], seed).expect("valid shape").remove(0)
}

/// `layer` distilled to `n` non-zeros and `v` patterns, then encoded.
pub fn pruned_layer(in_c: u32, out_c: u32, n: u8, v: u32, seed: u64) -> PrunedLayer {
    let dense = layer(in_c, out_c, 8, seed);
    let d = distill_layer(&dense, n, v).expect("valid budget");
    let (projected, _) = project_layer(&dense, &d.selected).expect("same shape");
    pcnn::codec::encode_layer(&projected, &d.selected).expect("projected")
}
