//! Cycle model of the pattern-aware PE group.
//!
//! Mapping: output channels are tiled across the 64 PEs; inside a PE the
//! 4 MAC lanes take 4 consecutive input channels of the same convolution
//! window. The window's activations are broadcast to every PE of the tile.
//!
//! A lane spends `popcount(weight_mask & activation_mask)` cycles on its
//! kernel. Because activations are shared, the tile moves to the next
//! input-channel group only when its slowest lane is done, so a group
//! costs the maximum lane count over the whole tile. The four pipeline
//! stages (pre-process, pointer generation, MAC, accumulate + ReLU) add
//! their fill latency once per layer.
//!
//! Accumulation is exact: 8-bit weights times 8-bit activations summed in
//! `i32`, with scales applied only when results are requantized.

use std::fmt::Write as _;

use super::feature::FeatureMap;
use super::pointer::pointer_table;
use crate::codec::{PrunedLayer, PrunedModel};
use crate::error::{Error, Result};
use crate::model::ConvGeometry;
use crate::pattern::{DENSE_MASK, KERNEL_AREA};

pub const PE_COUNT: usize = 64;
pub const MAC_LANES: usize = 4;
pub const MACS_PER_CYCLE: u64 = (PE_COUNT * MAC_LANES) as u64;
pub const PIPELINE_STAGES: usize = 4;
pub const PIPELINE_FILL: u64 = PIPELINE_STAGES as u64 - 1;

pub const STAGE_NAMES: [&str; PIPELINE_STAGES] = ["preprocess", "pointer", "mac", "accumulate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvParams {
    pub stride: u32,
    pub padding: u32,
}

impl Default for ConvParams {
    fn default() -> Self {
        ConvParams { stride: 1, padding: 1 }
    }
}

/// Cycle and work counts of one simulated layer (or a sum of layers).
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Weight and activation sparsity both skipped.
    pub total_cycles: u64,
    /// Same activations, dense weights.
    pub dense_cycles: u64,
    /// Weight sparsity only; activations treated as dense.
    pub weight_only_cycles: u64,
    /// Dense weights, nothing skipped.
    pub baseline_cycles: u64,
    pub effectual_macs: u64,
    /// `total_cycles * 256`.
    pub total_mac_slots: u64,
    pub utilization: f64,
    /// `dense_cycles / total_cycles`.
    pub speedup: f64,
    /// `baseline_cycles / weight_only_cycles`.
    pub weight_speedup: f64,
    /// Busy cycles per pipeline stage, in [`STAGE_NAMES`] order.
    pub stage_busy: [u64; PIPELINE_STAGES],
    /// MAC-stage cycles each output channel's PE actually needed. Empty on
    /// aggregated reports.
    pub pe_cycles: Vec<u64>,
    /// Every tile's PEs needed identical cycle counts.
    pub balanced: bool,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl SimReport {
    fn finish(mut self) -> Self {
        self.total_mac_slots = self.total_cycles * MACS_PER_CYCLE;
        self.utilization = ratio(self.effectual_macs, self.total_mac_slots);
        self.speedup = ratio(self.dense_cycles, self.total_cycles);
        self.weight_speedup = ratio(self.baseline_cycles, self.weight_only_cycles);
        self
    }

    /// Sums per-layer reports and recomputes the derived ratios.
    pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a SimReport>) -> SimReport {
        let mut acc = SimReport {
            total_cycles: 0,
            dense_cycles: 0,
            weight_only_cycles: 0,
            baseline_cycles: 0,
            effectual_macs: 0,
            total_mac_slots: 0,
            utilization: 0.0,
            speedup: 0.0,
            weight_speedup: 0.0,
            stage_busy: [0; PIPELINE_STAGES],
            pe_cycles: Vec::new(),
            balanced: true,
        };
        for r in reports {
            acc.total_cycles += r.total_cycles;
            acc.dense_cycles += r.dense_cycles;
            acc.weight_only_cycles += r.weight_only_cycles;
            acc.baseline_cycles += r.baseline_cycles;
            acc.effectual_macs += r.effectual_macs;
            for (a, b) in acc.stage_busy.iter_mut().zip(r.stage_busy) {
                *a += b;
            }
            acc.balanced &= r.balanced;
        }
        acc.finish()
    }
}

/// ReLU'd `i32` accumulators, CHW. Real value = `acc * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub channels: u32,
    pub height: u32,
    pub width: u32,
    pub acc: Vec<i32>,
    pub scale: f64,
}

impl OutputMap {
    pub fn get(&self, c: u32, y: u32, x: u32) -> i32 {
        self.acc[(c as usize * self.height as usize + y as usize) * self.width as usize + x as usize]
    }

    /// Requantizes to 8 bits with a symmetric scale (`max / 127`).
    pub fn requantize(&self) -> Result<FeatureMap> {
        let max = self.acc.iter().copied().max().unwrap_or(0).max(0);
        let (data, scale) = if max == 0 {
            (vec![0i8; self.acc.len()], 0.0)
        } else {
            let factor = 127.0 / f64::from(max);
            let data = self
                .acc
                .iter()
                .map(|&a| (f64::from(a) * factor).round() as i8)
                .collect();
            (data, (f64::from(max) * self.scale / 127.0) as f32)
        };
        FeatureMap::new(self.channels, self.height, self.width, data, scale)
    }
}

/// Activation occupancy and values of one window for one input channel.
fn gather_window(input: &FeatureMap, c: u32, top: i64, left: i64, values: &mut [i32; KERNEL_AREA]) -> u16 {
    let mut mask = 0u16;
    for (p, slot) in values.iter_mut().enumerate() {
        let y = top + (p / 3) as i64;
        let x = left + (p % 3) as i64;
        let v = if y >= 0 && x >= 0 && (y as u32) < input.height() && (x as u32) < input.width() {
            i32::from(input.get(c, y as u32, x as u32))
        } else {
            0
        };
        *slot = v;
        if v != 0 {
            mask |= 1 << p;
        }
    }
    mask
}

pub fn simulate_layer(layer: &PrunedLayer, input: &FeatureMap, params: ConvParams) -> Result<(OutputMap, SimReport)> {
    let in_c = layer.in_channels() as usize;
    let out_c = layer.out_channels() as usize;
    if input.channels() as usize != in_c {
        return Err(Error::Config(format!(
            "layer expects {in_c} input channels, feature map has {}",
            input.channels()
        )));
    }
    let geometry = ConvGeometry::new(input.height(), input.width(), params.stride, params.padding);
    let (oh, ow) = geometry.output_dims_3x3().ok_or_else(|| {
        Error::Config(format!(
            "{}x{} input with stride {} padding {} leaves no 3x3 window",
            input.height(),
            input.width(),
            params.stride,
            params.padding
        ))
    })?;

    let kernels = layer.kernel_count();
    let wmask: Vec<u16> = (0..kernels).map(|k| layer.mask(k).bits()).collect();
    let wq: Vec<[i32; KERNEL_AREA]> = (0..kernels).map(|k| layer.quantized_kernel(k)).collect();
    let pointers = pointer_table();

    let tiles = out_c.div_ceil(PE_COUNT);
    let groups = in_c.div_ceil(MAC_LANES);
    let windows = u64::from(oh) * u64::from(ow);

    // Weight-only and baseline counts do not depend on activations.
    let mut weight_only_per_window = 0u64;
    for t in 0..tiles {
        let pes = t * PE_COUNT..((t + 1) * PE_COUNT).min(out_c);
        for g in 0..groups {
            let lanes = g * MAC_LANES..((g + 1) * MAC_LANES).min(in_c);
            let worst = pes
                .clone()
                .flat_map(|o| lanes.clone().map(move |c| o * in_c + c))
                .map(|k| wmask[k].count_ones())
                .max()
                .unwrap_or(0);
            weight_only_per_window += u64::from(worst);
        }
    }
    let work_items = windows * (tiles * groups) as u64;

    let mut report = SimReport::aggregate([]);
    report.weight_only_cycles = windows * weight_only_per_window + PIPELINE_FILL;
    report.baseline_cycles = work_items * DENSE_MASK.count() as u64 + PIPELINE_FILL;
    report.stage_busy[0] = work_items;
    report.stage_busy[1] = work_items;
    report.stage_busy[3] = windows * tiles as u64;
    let mut pe_cycles = vec![0u64; out_c];

    let mut amask = vec![0u16; in_c];
    let mut avals = vec![[0i32; KERNEL_AREA]; in_c];
    let mut acc = vec![0i32; out_c];
    let mut out = vec![0i32; out_c * windows as usize];
    let mut mac_cycles = 0u64;
    let mut dense_cycles = 0u64;

    for oy in 0..oh {
        for ox in 0..ow {
            let top = i64::from(oy * params.stride) - i64::from(params.padding);
            let left = i64::from(ox * params.stride) - i64::from(params.padding);
            for c in 0..in_c {
                amask[c] = gather_window(input, c as u32, top, left, &mut avals[c]);
            }
            acc.fill(0);
            for t in 0..tiles {
                let pes = t * PE_COUNT..((t + 1) * PE_COUNT).min(out_c);
                for g in 0..groups {
                    let lanes = g * MAC_LANES..((g + 1) * MAC_LANES).min(in_c);
                    let mut group_cycles = 0u32;
                    for o in pes.clone() {
                        let mut pe_busy = 0u32;
                        let mut sum = 0i32;
                        for c in lanes.clone() {
                            let k = o * in_c + c;
                            let sparsity = wmask[k] & amask[c];
                            let ptr = &pointers[sparsity as usize];
                            pe_busy = pe_busy.max(ptr.len() as u32);
                            report.effectual_macs += ptr.len() as u64;
                            let w = &wq[k];
                            let a = &avals[c];
                            for &p in ptr.pointers() {
                                sum += w[p as usize] * a[p as usize];
                            }
                        }
                        acc[o] += sum;
                        pe_cycles[o] += u64::from(pe_busy);
                        group_cycles = group_cycles.max(pe_busy);
                    }
                    mac_cycles += u64::from(group_cycles);
                    let dense_group = lanes.map(|c| amask[c].count_ones()).max().unwrap_or(0);
                    dense_cycles += u64::from(dense_group);
                }
            }
            let w_index = (oy * ow + ox) as usize;
            for (o, &a) in acc.iter().enumerate() {
                out[o * windows as usize + w_index] = a.max(0);
            }
        }
    }

    report.stage_busy[2] = mac_cycles;
    report.total_cycles = mac_cycles + PIPELINE_FILL;
    report.dense_cycles = dense_cycles + PIPELINE_FILL;
    report.balanced = pe_cycles
        .chunks(PE_COUNT)
        .all(|tile| tile.iter().all(|&c| c == tile[0]));
    report.pe_cycles = pe_cycles;
    let report = report.finish();

    let output = OutputMap {
        channels: out_c as u32,
        height: oh,
        width: ow,
        acc: out,
        scale: f64::from(layer.scale()) * f64::from(input.scale),
    };
    Ok((output, report))
}

/// Result of running a chain of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSimReport {
    pub layers: Vec<SimReport>,
    pub total: SimReport,
    pub output: OutputMap,
}

/// Runs layers back to back; each layer's ReLU output is requantized and
/// fed to the next, so downstream activation sparsity is real.
pub fn simulate_model(pruned: &PrunedModel, input: &FeatureMap, params: &[ConvParams]) -> Result<ModelSimReport> {
    if pruned.layers.is_empty() {
        return Err(Error::Config("model has no layers".into()));
    }
    if params.len() != pruned.layers.len() {
        return Err(Error::Config(format!(
            "{} layers but {} convolution parameter sets",
            pruned.layers.len(),
            params.len()
        )));
    }
    let mut layers = Vec::with_capacity(pruned.layers.len());
    let mut current = input.clone();
    let mut last = None;
    for (i, (layer, p)) in pruned.layers.iter().zip(params).enumerate() {
        let (out, report) =
            simulate_layer(layer, &current, *p).map_err(|e| Error::Config(format!("layer {i}: {e}")))?;
        layers.push(report);
        if i + 1 < pruned.layers.len() {
            current = out.requantize()?;
        }
        last = Some(out);
    }
    let total = SimReport::aggregate(&layers);
    Ok(ModelSimReport {
        layers,
        total,
        output: last.expect("at least one layer"),
    })
}

pub const CSV_HEADER: &str =
    "layer,cycles,dense_cycles,effectual_macs,utilization,speedup,weight_only_cycles,baseline_cycles,weight_speedup";

fn csv_row(out: &mut String, label: &str, r: &SimReport) {
    let _ = writeln!(
        out,
        "{label},{},{},{},{:.6},{:.6},{},{},{:.6}",
        r.total_cycles,
        r.dense_cycles,
        r.effectual_macs,
        r.utilization,
        r.speedup,
        r.weight_only_cycles,
        r.baseline_cycles,
        r.weight_speedup
    );
}

impl ModelSimReport {
    /// One row per layer plus a `total` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, r) in self.layers.iter().enumerate() {
            csv_row(&mut out, &i.to_string(), r);
        }
        csv_row(&mut out, "total", &self.total);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pe_count {PE_COUNT} mac_lanes {MAC_LANES} pipeline_stages {PIPELINE_STAGES}"
        );
        for (i, r) in self.layers.iter().enumerate() {
            write_block(&mut out, &format!("layer {i}"), r);
        }
        write_block(&mut out, "total", &self.total);
        out
    }
}

fn write_block(out: &mut String, title: &str, r: &SimReport) {
    let _ = writeln!(out, "[{title}]");
    let _ = writeln!(out, "total_cycles {}", r.total_cycles);
    let _ = writeln!(out, "dense_cycles {}", r.dense_cycles);
    let _ = writeln!(out, "weight_only_cycles {}", r.weight_only_cycles);
    let _ = writeln!(out, "baseline_cycles {}", r.baseline_cycles);
    let _ = writeln!(out, "effectual_macs {}", r.effectual_macs);
    let _ = writeln!(out, "total_mac_slots {}", r.total_mac_slots);
    let _ = writeln!(out, "utilization {:.6}", r.utilization);
    let _ = writeln!(out, "speedup {:.6}", r.speedup);
    let _ = writeln!(out, "weight_speedup {:.6}", r.weight_speedup);
    for (name, busy) in STAGE_NAMES.iter().zip(r.stage_busy) {
        let _ = writeln!(out, "stage_{name}_busy {busy}");
    }
    let _ = writeln!(out, "balanced {}", r.balanced);
}
