//! `PCT1` dense tensor container.
//!
//! ```text
//! "PCT1"  u32 layer_count
//! per layer:
//!   u32 out_c, in_c, input_h, input_w, stride, padding
//!   out_c * in_c * 9  f32   (out_c outer, in_c inner, values row-major)
//! ```
//! All integers and floats are little-endian.

use crate::error::{Error, Result};
use crate::model::{ConvGeometry, Kernel, LayerWeights};
use crate::wire::ByteReader;

pub const PCT1_MAGIC: &[u8; 4] = b"PCT1";

pub fn write_pct1(layers: &[LayerWeights]) -> Vec<u8> {
    let floats: usize = layers.iter().map(|l| l.kernel_count() * 9).sum();
    let mut out = Vec::with_capacity(8 + layers.len() * 24 + floats * 4);
    out.extend_from_slice(PCT1_MAGIC);
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for layer in layers {
        let g = layer.geometry;
        for v in [
            layer.out_channels(),
            layer.in_channels(),
            g.input_h,
            g.input_w,
            g.stride,
            g.padding,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for k in layer.kernels() {
            for v in k.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn read_pct1(data: &[u8]) -> Result<Vec<LayerWeights>> {
    let mut r = ByteReader::new(data);
    r.expect_magic(PCT1_MAGIC)?;
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for li in 0..count {
        let header_at = r.offset();
        let out_c = r.u32("out_c")?;
        let in_c = r.u32("in_c")?;
        let geometry = ConvGeometry::new(
            r.u32("input_h")?,
            r.u32("input_w")?,
            r.u32("stride")?,
            r.u32("padding")?,
        );
        let kernel_count = out_c as usize * in_c as usize;
        let needed = kernel_count
            .checked_mul(36)
            .ok_or_else(|| Error::format(header_at, "kernel count overflows"))?;
        let body = r.take(needed, "kernel data")?;
        let kernels = body
            .chunks_exact(36)
            .map(|chunk| {
                Kernel(std::array::from_fn(|i| {
                    f32::from_le_bytes(chunk[i * 4..i * 4 + 4].try_into().unwrap())
                }))
            })
            .collect();
        let layer = LayerWeights::new(out_c, in_c, kernels, geometry)
            .map_err(|e| Error::format(header_at, format!("layer {li}: {e}")))?;
        layers.push(layer);
    }
    r.expect_end()?;
    Ok(layers)
}
