//! Reference network shapes and a seeded synthetic weight generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{ConvGeometry, Kernel, LayerShape, LayerWeights};

fn conv(k: u32, in_c: u32, out_c: u32, hw: u32, stride: u32, padding: u32) -> LayerShape {
    LayerShape {
        out_channels: out_c,
        in_channels: in_c,
        kernel_size: k,
        geometry: ConvGeometry::new(hw, hw, stride, padding),
    }
}

/// The 13 VGG-16 convolutions for a square input of side `input` (32 for
/// CIFAR, 224 for ImageNet). Max-pooling halves the side after layers 1,
/// 3, 6, 9.
pub fn vgg16(input: u32) -> Vec<LayerShape> {
    let plan: [(u32, u32, u32); 13] = [
        (3, 64, 1),
        (64, 64, 1),
        (64, 128, 2),
        (128, 128, 2),
        (128, 256, 4),
        (256, 256, 4),
        (256, 256, 4),
        (256, 512, 8),
        (512, 512, 8),
        (512, 512, 8),
        (512, 512, 16),
        (512, 512, 16),
        (512, 512, 16),
    ];
    plan.iter()
        .map(|&(i, o, div)| conv(3, i, o, (input / div).max(1), 1, 1))
        .collect()
}

/// ResNet-18 convolutions for a 224×224 input, including the 7×7 stem and
/// the strided 1×1 shortcuts (which are never pruned). No FC layer.
pub fn resnet18() -> Vec<LayerShape> {
    let mut s = vec![conv(7, 3, 64, 224, 2, 3)];
    s.extend((0..4).map(|_| conv(3, 64, 64, 56, 1, 1)));
    for (in_c, out_c, hw) in [(64, 128, 56), (128, 256, 28), (256, 512, 14)] {
        s.push(conv(3, in_c, out_c, hw, 2, 1));
        s.push(conv(3, out_c, out_c, hw / 2, 1, 1));
        s.push(conv(1, in_c, out_c, hw, 2, 0));
        s.push(conv(3, out_c, out_c, hw / 2, 1, 1));
        s.push(conv(3, out_c, out_c, hw / 2, 1, 1));
    }
    s
}

/// Parses a model shape description:
///
/// * `vgg16` or `vgg16:<input side>` (default side 32),
/// * `resnet18` (3×3 layers only; the container cannot hold 1×1/7×7),
/// * a comma-separated list of `in:out:h:w[:stride[:padding]]` 3×3 layers.
pub fn parse_model_shape(spec: &str) -> Result<Vec<LayerShape>> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("vgg16") {
        let side = match rest.strip_prefix(':') {
            Some(s) => s
                .parse::<u32>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::Domain(format!("bad vgg16 input size in {spec:?}")))?,
            None if rest.is_empty() => 32,
            None => return Err(Error::Domain(format!("unknown shape {spec:?}"))),
        };
        return Ok(vgg16(side));
    }
    if spec == "resnet18" {
        return Ok(resnet18().into_iter().filter(|s| s.is_prunable()).collect());
    }
    spec.split(',')
        .map(|entry| {
            let bad = || Error::Domain(format!("layer {entry:?} is not in:out:h:w[:stride[:padding]]"));
            let v: Vec<u32> = entry
                .trim()
                .split(':')
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if !(4..=6).contains(&v.len()) || v[..4].contains(&0) {
                return Err(bad());
            }
            Ok(LayerShape {
                out_channels: v[1],
                in_channels: v[0],
                kernel_size: 3,
                geometry: ConvGeometry::new(v[2], v[3], *v.get(4).unwrap_or(&1), *v.get(5).unwrap_or(&1)),
            })
        })
        .collect()
}

/// Gaussian weights with He scaling, `std = sqrt(2 / (9 * in_c))`.
/// Non-3×3 shapes are rejected.
pub fn generate(shapes: &[LayerShape], seed: u64) -> Result<Vec<LayerWeights>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapes
        .iter()
        .map(|s| {
            if !s.is_prunable() {
                return Err(Error::Domain(format!("cannot generate {0}x{0} kernels", s.kernel_size)));
            }
            let std = (2.0 / (9.0 * f64::from(s.in_channels))).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            let count = s.out_channels as usize * s.in_channels as usize;
            let kernels = (0..count)
                .map(|_| Kernel(std::array::from_fn(|_| normal.sample(&mut rng) as f32)))
                .collect();
            LayerWeights::new(s.out_channels, s.in_channels, kernels, s.geometry)
        })
        .collect()
}
