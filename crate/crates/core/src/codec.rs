//! SPM encoding: each kernel becomes a pattern code plus its `n` quantized
//! non-zeros in ascending position order.

use crate::distill::DistillReport;
use crate::error::{Error, Result};
use crate::model::{ConvGeometry, Kernel, LayerWeights};
use crate::pattern::{PatternMask, PatternSet, KERNEL_AREA};

/// Largest magnitude of a quantized weight.
pub const QMAX: f32 = 127.0;

/// One layer in SPM form.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedLayer {
    out_channels: u32,
    in_channels: u32,
    pattern_set: PatternSet,
    spm_codes: Vec<u16>,
    nz_values: Vec<i8>,
    scale: f32,
}

impl PrunedLayer {
    pub fn new(
        out_channels: u32,
        in_channels: u32,
        pattern_set: PatternSet,
        spm_codes: Vec<u16>,
        nz_values: Vec<i8>,
        scale: f32,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 {
            return Err(Error::Config("layer channel counts must be positive".into()));
        }
        let kernels = out_channels as usize * in_channels as usize;
        if spm_codes.len() != kernels {
            return Err(Error::Consistency(format!(
                "{kernels} kernels but {} SPM codes",
                spm_codes.len()
            )));
        }
        if let Some(c) = spm_codes.iter().find(|&&c| c as usize >= pattern_set.len()) {
            return Err(Error::Consistency(format!(
                "SPM code {c} outside a table of {} patterns",
                pattern_set.len()
            )));
        }
        let n = pattern_set.n() as usize;
        if nz_values.len() != kernels * n {
            return Err(Error::Consistency(format!(
                "{kernels} kernels with {n} non-zeros need {} values, got {}",
                kernels * n,
                nz_values.len()
            )));
        }
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::Consistency(format!("invalid scale {scale}")));
        }
        Ok(PrunedLayer {
            out_channels,
            in_channels,
            pattern_set,
            spm_codes,
            nz_values,
            scale,
        })
    }

    pub fn out_channels(&self) -> u32 {
        self.out_channels
    }

    pub fn in_channels(&self) -> u32 {
        self.in_channels
    }

    pub fn n(&self) -> u8 {
        self.pattern_set.n()
    }

    pub fn pattern_set(&self) -> &PatternSet {
        &self.pattern_set
    }

    pub fn spm_codes(&self) -> &[u16] {
        &self.spm_codes
    }

    pub fn nz_values(&self) -> &[i8] {
        &self.nz_values
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn kernel_count(&self) -> usize {
        self.spm_codes.len()
    }

    /// Pattern of kernel `k` (output-channel major).
    pub fn mask(&self, k: usize) -> PatternMask {
        self.pattern_set.patterns()[self.spm_codes[k] as usize]
    }

    /// Quantized non-zeros of kernel `k`, ascending position.
    pub fn kernel_values(&self, k: usize) -> &[i8] {
        let n = self.n() as usize;
        &self.nz_values[k * n..(k + 1) * n]
    }

    /// Kernel `k` as a dense 3×3 grid of quantized integers.
    pub fn quantized_kernel(&self, k: usize) -> [i32; KERNEL_AREA] {
        let mut out = [0i32; KERNEL_AREA];
        for (p, &v) in self.mask(k).positions().zip(self.kernel_values(k)) {
            out[p] = i32::from(v);
        }
        out
    }

    pub fn decode_kernel(&self, k: usize) -> Kernel {
        let q = self.quantized_kernel(k);
        Kernel(q.map(|v| v as f32 * self.scale))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrunedModel {
    pub layers: Vec<PrunedLayer>,
}

/// Symmetric per-layer scale: `max|w| / 127`.
pub fn layer_scale(layer: &LayerWeights) -> f32 {
    let max = layer.kernels().iter().fold(0.0f32, |m, k| m.max(k.max_abs()));
    max / QMAX
}

/// Rounds `w / scale` half away from zero into `[-127, 127]`.
pub fn quantize(w: f32, scale: f32) -> i8 {
    if scale == 0.0 {
        return 0;
    }
    let q = (f64::from(w) / f64::from(scale)).round();
    q.clamp(-f64::from(QMAX), f64::from(QMAX)) as i8
}

/// Encodes one projected layer. Every kernel's non-zero support must fit
/// inside a selected pattern; the code is the lowest such pattern, which
/// is the pattern projection assigned.
pub fn encode_layer(layer: &LayerWeights, selected: &PatternSet) -> Result<PrunedLayer> {
    let scale = layer_scale(layer);
    let n = selected.n() as usize;
    let mut codes = Vec::with_capacity(layer.kernel_count());
    let mut values = Vec::with_capacity(layer.kernel_count() * n);
    for (k, kernel) in layer.kernels().iter().enumerate() {
        let support = kernel.support();
        let (code, mask) = selected.lowest_covering(support).ok_or_else(|| {
            Error::Consistency(format!(
                "kernel {k} has support {support} outside every selected pattern (project before encoding)"
            ))
        })?;
        codes.push(code as u16);
        values.extend(mask.positions().map(|p| quantize(kernel.0[p], scale)));
    }
    PrunedLayer::new(
        layer.out_channels(),
        layer.in_channels(),
        selected.clone(),
        codes,
        values,
        scale,
    )
}

pub fn encode(model: &[LayerWeights], report: &DistillReport) -> Result<PrunedModel> {
    if model.len() != report.layers.len() {
        return Err(Error::Config(format!(
            "model has {} layers but the report describes {}",
            model.len(),
            report.layers.len()
        )));
    }
    let layers = model
        .iter()
        .zip(&report.layers)
        .enumerate()
        .map(|(i, (layer, d))| {
            encode_layer(layer, &d.selected).map_err(|e| match e {
                Error::Consistency(msg) => Error::Consistency(format!("layer {i}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrunedModel { layers })
}

/// Dense kernels from SPM form. The container carries no spatial geometry,
/// so the returned layers have `ConvGeometry::default()`.
pub fn decode(pruned: &PrunedModel) -> Result<Vec<LayerWeights>> {
    pruned
        .layers
        .iter()
        .map(|l| {
            let kernels = (0..l.kernel_count()).map(|k| l.decode_kernel(k)).collect();
            LayerWeights::new(l.out_channels, l.in_channels, kernels, ConvGeometry::default())
        })
        .collect()
}

/// Storage split between SPM indices and non-zero weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexOverhead {
    /// Per-kernel codes plus one 9-bit table entry per pattern per layer.
    pub index_bits: u64,
    /// `n * 8` bits per kernel.
    pub weight_bits: u64,
    /// `index_bits / (index_bits + weight_bits)`.
    pub ratio: f64,
}

pub fn index_overhead(pruned: &PrunedModel) -> IndexOverhead {
    let mut index_bits = 0u64;
    let mut weight_bits = 0u64;
    for l in &pruned.layers {
        let kernels = l.kernel_count() as u64;
        index_bits += kernels * u64::from(l.pattern_set.code_width()) + l.pattern_set.len() as u64 * 9;
        weight_bits += kernels * u64::from(l.n()) * 8;
    }
    let total = index_bits + weight_bits;
    IndexOverhead {
        index_bits,
        weight_bits,
        ratio: if total == 0 {
            0.0
        } else {
            index_bits as f64 / total as f64
        },
    }
}
