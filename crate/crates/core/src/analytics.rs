//! Compression and FLOP accounting.
//!
//! FLOPs count 2 per MAC (one multiply, one add). Compression ratios are
//! dense storage bits over pruned storage bits; the pruned side holds 8-bit
//! non-zeros and, for the `weight_plus_idx` figure, the SPM codes and mask
//! tables as counted by [`index_overhead`].

use std::fmt::Write as _;

use crate::codec::{index_overhead, PrunedModel};
use crate::error::{Error, Result};
use crate::model::{LayerShape, SparsityConfig};
use crate::pattern::KERNEL_AREA;

/// Bits of one stored non-zero weight.
pub const PRUNED_WEIGHT_BITS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionRates {
    pub weight_only: f64,
    pub weight_plus_idx: f64,
}

fn dense_bits(pruned: &PrunedModel, baseline_bits: u32) -> u64 {
    pruned
        .layers
        .iter()
        .map(|l| l.kernel_count() as u64 * KERNEL_AREA as u64 * u64::from(baseline_bits))
        .sum()
}

pub fn compression_rates(pruned: &PrunedModel, baseline_bits_per_weight: u32) -> CompressionRates {
    let dense = dense_bits(pruned, baseline_bits_per_weight) as f64;
    let o = index_overhead(pruned);
    CompressionRates {
        weight_only: dense / o.weight_bits as f64,
        weight_plus_idx: dense / (o.weight_bits + o.index_bits) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerFlops {
    pub dense: u64,
    pub pruned: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlopsReport {
    pub layers: Vec<LayerFlops>,
    pub dense_flops: u64,
    pub pruned_flops: u64,
    pub pruned_fraction: f64,
}

/// `2 * out * in * k² * H_out * W_out` per layer. Config entries apply, in
/// order, to the 3×3 layers; other layers keep their dense cost.
pub fn flops_report(shapes: &[LayerShape], config: &SparsityConfig) -> Result<FlopsReport> {
    let prunable = shapes.iter().filter(|s| s.is_prunable()).count();
    if prunable != config.len() {
        return Err(Error::Config(format!(
            "{prunable} prunable layers but the config describes {}",
            config.len()
        )));
    }
    let mut entries = config.layers.iter();
    let mut layers = Vec::with_capacity(shapes.len());
    for (i, s) in shapes.iter().enumerate() {
        let (oh, ow) = s
            .geometry
            .output_dims(s.kernel_size)
            .ok_or_else(|| Error::Config(format!("layer {i}: geometry leaves no output")))?;
        let per_tap = 2 * u64::from(s.out_channels) * u64::from(s.in_channels) * u64::from(oh) * u64::from(ow);
        let dense = per_tap * u64::from(s.kernel_size * s.kernel_size);
        let pruned = if s.is_prunable() {
            per_tap * u64::from(entries.next().expect("counted above").n)
        } else {
            dense
        };
        layers.push(LayerFlops { dense, pruned });
    }
    let dense_flops = layers.iter().map(|l| l.dense).sum();
    let pruned_flops = layers.iter().map(|l| l.pruned).sum();
    Ok(FlopsReport {
        layers,
        dense_flops,
        pruned_flops,
        pruned_fraction: if dense_flops == 0 {
            0.0
        } else {
            1.0 - pruned_flops as f64 / dense_flops as f64
        },
    })
}

/// Sparsity config implied by a pruned model (v = table size).
pub fn config_of(pruned: &PrunedModel) -> SparsityConfig {
    SparsityConfig {
        layers: pruned
            .layers
            .iter()
            .map(|l| crate::model::LayerSparsity {
                n: l.n(),
                v: l.pattern_set().len() as u32,
            })
            .collect(),
    }
}

fn si(flops: u64) -> String {
    let f = flops as f64;
    match f {
        f if f >= 1e9 => format!("{:.2}G", f / 1e9),
        f if f >= 1e6 => format!("{:.2}M", f / 1e6),
        f if f >= 1e3 => format!("{:.2}K", f / 1e3),
        _ => flops.to_string(),
    }
}

/// Per-layer and total compression/FLOPs table. `shapes` describe the
/// dense baseline and must line up with `pruned` one-to-one.
pub fn render_table(pruned: &PrunedModel, shapes: &[LayerShape], baseline_bits: u32) -> Result<String> {
    if shapes.len() != pruned.layers.len() {
        return Err(Error::Config(format!(
            "baseline has {} layers, pruned model {}",
            shapes.len(),
            pruned.layers.len()
        )));
    }
    for (i, (s, l)) in shapes.iter().zip(&pruned.layers).enumerate() {
        if s.out_channels != l.out_channels() || s.in_channels != l.in_channels() {
            return Err(Error::Config(format!(
                "layer {i}: baseline is {}x{}, pruned is {}x{}",
                s.out_channels,
                s.in_channels,
                l.out_channels(),
                l.in_channels()
            )));
        }
    }
    let flops = flops_report(shapes, &config_of(pruned))?;

    let mut out = String::new();
    let _ = writeln!(out, "# FLOPs counted as 2 per MAC (multiply + add)");
    let _ = writeln!(
        out,
        "# baseline {baseline_bits} bits/weight; pruned non-zeros {PRUNED_WEIGHT_BITS} bits; idx = SPM codes + 9-bit mask table per pattern"
    );
    let _ = writeln!(
        out,
        "{:<6} {:>2} {:>4} {:>5} {:>12} {:>16} {:>11} {:>12}",
        "layer", "n", "|P|", "code", "comp(weight)", "comp(weight+idx)", "CONV FLOPs", "FLOPs pruned"
    );
    for (i, (l, f)) in pruned.layers.iter().zip(&flops.layers).enumerate() {
        let single = PrunedModel {
            layers: vec![l.clone()],
        };
        let c = compression_rates(&single, baseline_bits);
        let frac = 1.0 - f.pruned as f64 / f.dense as f64;
        let _ = writeln!(
            out,
            "{:<6} {:>2} {:>4} {:>5} {:>11.2}x {:>15.2}x {:>11} {:>11.1}%",
            i,
            l.n(),
            l.pattern_set().len(),
            l.pattern_set().code_width(),
            c.weight_only,
            c.weight_plus_idx,
            si(f.dense),
            frac * 100.0
        );
    }
    let c = compression_rates(pruned, baseline_bits);
    let o = index_overhead(pruned);
    let _ = writeln!(
        out,
        "{:<6} {:>2} {:>4} {:>5} {:>11.2}x {:>15.2}x {:>11} {:>11.1}%",
        "total",
        "-",
        "-",
        "-",
        c.weight_only,
        c.weight_plus_idx,
        si(flops.dense_flops),
        flops.pruned_fraction * 100.0
    );
    let _ = writeln!(
        out,
        "index_bits {} weight_bits {} index_share {:.4}",
        o.index_bits, o.weight_bits, o.ratio
    );
    let _ = writeln!(
        out,
        "dense_flops {} pruned_flops {}",
        flops.dense_flops, flops.pruned_flops
    );
    Ok(out)
}
