//! Dense convolution layers, their geometry and the per-layer sparsity
//! configuration.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pattern::{binomial, check_nonzeros, PatternMask, KERNEL_AREA};

/// One 3×3 kernel, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kernel(pub [f32; KERNEL_AREA]);

impl Kernel {
    pub const ZERO: Kernel = Kernel([0.0; KERNEL_AREA]);

    pub fn values(&self) -> &[f32; KERNEL_AREA] {
        &self.0
    }

    pub fn support(&self) -> PatternMask {
        PatternMask::support(&self.0)
    }

    pub fn max_abs(&self) -> f32 {
        self.0.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

impl From<[f32; KERNEL_AREA]> for Kernel {
    fn from(v: [f32; KERNEL_AREA]) -> Self {
        Kernel(v)
    }
}

/// Spatial parameters of a convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ConvGeometry {
    pub input_h: u32,
    pub input_w: u32,
    pub stride: u32,
    pub padding: u32,
}

impl ConvGeometry {
    pub fn new(input_h: u32, input_w: u32, stride: u32, padding: u32) -> Self {
        ConvGeometry {
            input_h,
            input_w,
            stride,
            padding,
        }
    }

    /// Output height/width for a square kernel of side `kernel`, or `None`
    /// when the padded input is smaller than the kernel or the stride is 0.
    pub fn output_dims(&self, kernel: u32) -> Option<(u32, u32)> {
        if self.stride == 0 {
            return None;
        }
        let span = |len: u32| {
            let padded = len + 2 * self.padding;
            (padded >= kernel).then(|| (padded - kernel) / self.stride + 1)
        };
        Some((span(self.input_h)?, span(self.input_w)?))
    }

    pub fn output_dims_3x3(&self) -> Option<(u32, u32)> {
        self.output_dims(3)
    }
}

/// Dense weights of one 3×3 convolution layer.
///
/// Kernels are stored output-channel major: kernel `(o, i)` lives at index
/// `o * in_channels + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    out_channels: u32,
    in_channels: u32,
    kernels: Vec<Kernel>,
    pub geometry: ConvGeometry,
}

impl LayerWeights {
    pub fn new(out_channels: u32, in_channels: u32, kernels: Vec<Kernel>, geometry: ConvGeometry) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 {
            return Err(Error::Config("layer channel counts must be positive".into()));
        }
        let expected = out_channels as usize * in_channels as usize;
        if kernels.len() != expected {
            return Err(Error::Config(format!(
                "layer {out_channels}x{in_channels} needs {expected} kernels, got {}",
                kernels.len()
            )));
        }
        Ok(LayerWeights {
            out_channels,
            in_channels,
            kernels,
            geometry,
        })
    }

    pub fn out_channels(&self) -> u32 {
        self.out_channels
    }

    pub fn in_channels(&self) -> u32 {
        self.in_channels
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn kernel(&self, out_c: u32, in_c: u32) -> &Kernel {
        &self.kernels[out_c as usize * self.in_channels as usize + in_c as usize]
    }

    pub fn kernel_count(&self) -> usize {
        self.kernels.len()
    }

    pub fn shape(&self) -> LayerShape {
        LayerShape {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            kernel_size: 3,
            geometry: self.geometry,
        }
    }

    /// Same geometry, new kernels.
    pub fn with_kernels(&self, kernels: Vec<Kernel>) -> Result<Self> {
        LayerWeights::new(self.out_channels, self.in_channels, kernels, self.geometry)
    }
}

/// Shape-only view of a convolution, used for FLOP accounting. Unlike
/// [`LayerWeights`] it can describe non-3×3 layers (e.g. 1×1 shortcuts),
/// which are never pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub out_channels: u32,
    pub in_channels: u32,
    pub kernel_size: u32,
    pub geometry: ConvGeometry,
}

impl LayerShape {
    pub fn is_prunable(&self) -> bool {
        self.kernel_size == 3
    }
}

/// Sparsity of one prunable layer: `n` non-zeros per kernel and a budget of
/// `v` patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSparsity {
    pub n: u8,
    pub v: u32,
}

impl LayerSparsity {
    pub fn new(n: u8, v: u32) -> Result<Self> {
        check_nonzeros(n)?;
        let max = binomial(9, u32::from(n))?;
        if v == 0 || u64::from(v) > max {
            return Err(Error::Domain(format!(
                "pattern budget {v} outside 1..={max} for n = {n}"
            )));
        }
        Ok(LayerSparsity { n, v })
    }
}

/// Per-layer sparsity settings, one entry per prunable layer in order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparsityConfig {
    pub layers: Vec<LayerSparsity>,
}

impl SparsityConfig {
    pub fn uniform(layers: usize, n: u8, v: u32) -> Result<Self> {
        let entry = LayerSparsity::new(n, v)?;
        Ok(SparsityConfig {
            layers: vec![entry; layers],
        })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Parses `layer <i> n <n> v <v>` records. Blank lines and `#` comments
    /// are ignored; layer indices must cover `0..count` exactly once. Errors
    /// report the 1-based line number as the offset.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Option<LayerSparsity>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::format(line_no, format!("expected `layer <i> n <n> v <v>`, got {raw:?}"));
            if tok.len() != 6 || tok[0] != "layer" || tok[2] != "n" || tok[4] != "v" {
                return Err(bad());
            }
            let layer: usize = tok[1].parse().map_err(|_| bad())?;
            let n: u8 = tok[3].parse().map_err(|_| bad())?;
            let v: u32 = tok[5].parse().map_err(|_| bad())?;
            let entry = LayerSparsity::new(n, v).map_err(|e| Error::format(line_no, e.to_string()))?;
            if entries.len() <= layer {
                entries.resize(layer + 1, None);
            }
            if entries[layer].replace(entry).is_some() {
                return Err(Error::format(line_no, format!("layer {layer} configured twice")));
            }
        }
        let layers = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.ok_or_else(|| Error::Config(format!("layer {i} missing from config"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SparsityConfig { layers })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "layer {i} n {} v {}", l.n, l.v);
        }
        out
    }
}
