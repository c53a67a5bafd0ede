//! Pattern distillation: pick the dominant occupancy patterns of each layer
//! and project every kernel onto the chosen set.
//!
//! For a layer with `n` non-zeros per kernel and a budget of `v` patterns:
//!
//! 1. match every kernel to its nearest pattern among all popcount-`n`
//!    masks and count how often each mask wins;
//! 2. keep the `v` most frequent masks;
//! 3. re-match every kernel against the kept masks only.
//!
//! "Nearest" means the smallest L2 residual `||w - project(w, m)||`, which is
//! the same as keeping the most squared weight mass. Every tie (residual or
//! frequency) goes to the lower mask value.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Kernel, LayerWeights, SparsityConfig};
use crate::pattern::{binomial, full_pattern_set, PatternMask, PatternSet, KERNEL_AREA};

/// Zeroes the kernel outside `mask`.
pub fn project(kernel: &Kernel, mask: PatternMask) -> Kernel {
    Kernel(std::array::from_fn(
        |i| {
            if mask.contains(i) {
                kernel.0[i]
            } else {
                0.0
            }
        },
    ))
}

/// Squared weight mass that `mask` discards, summed in position order.
fn discarded_energy(squares: &[f64; KERNEL_AREA], mask: PatternMask) -> f64 {
    let keep = mask.bits();
    let mut e = 0.0;
    for (i, sq) in squares.iter().enumerate() {
        if keep & (1 << i) == 0 {
            e += sq;
        }
    }
    e
}

fn squares(kernel: &Kernel) -> [f64; KERNEL_AREA] {
    kernel.0.map(|v| f64::from(v) * f64::from(v))
}

/// `||kernel - project(kernel, mask)||₂`.
pub fn projection_residual(kernel: &Kernel, mask: PatternMask) -> f64 {
    discarded_energy(&squares(kernel), mask).sqrt()
}

fn nearest_by_energy(squares: &[f64; KERNEL_AREA], candidates: &[PatternMask]) -> (PatternMask, f64) {
    let mut best = candidates[0];
    let mut best_e = discarded_energy(squares, best);
    for &m in &candidates[1..] {
        let e = discarded_energy(squares, m);
        if e < best_e || (e == best_e && m < best) {
            best = m;
            best_e = e;
        }
    }
    (best, best_e)
}

/// Candidate closest to `kernel` and its residual.
pub fn nearest_pattern(kernel: &Kernel, candidates: &[PatternMask]) -> Result<(PatternMask, f64)> {
    if candidates.is_empty() {
        return Err(Error::Domain("nearest_pattern: empty candidate set".into()));
    }
    let (m, e) = nearest_by_energy(&squares(kernel), candidates);
    Ok((m, e.sqrt()))
}

/// Outcome of distilling one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDistillation {
    pub n: u8,
    pub v: u32,
    pub kernels: usize,
    pub selected: PatternSet,
    /// Win count of every popcount-`n` mask, ascending by mask.
    pub frequency: Vec<(PatternMask, u64)>,
    /// Σ over kernels of the residual against the selected set.
    pub residual: f64,
}

impl LayerDistillation {
    pub fn frequency_of(&self, mask: PatternMask) -> u64 {
        self.frequency
            .binary_search_by_key(&mask, |(m, _)| *m)
            .map(|i| self.frequency[i].1)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistillReport {
    pub layers: Vec<LayerDistillation>,
}

/// Greedy top-`v` selection over a frequency histogram: highest count
/// first, lower mask on ties.
pub fn select_top(frequency: &[(PatternMask, u64)], v: usize) -> Vec<PatternMask> {
    let mut ranked: Vec<&(PatternMask, u64)> = frequency.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(v).map(|(m, _)| *m).collect()
}

pub fn distill_layer(layer: &LayerWeights, n: u8, v: u32) -> Result<LayerDistillation> {
    let full = full_pattern_set(n)?;
    let available = binomial(9, u32::from(n))?;
    if v == 0 || u64::from(v) > available {
        return Err(Error::Domain(format!(
            "pattern budget {v} outside 1..={available} for n = {n}"
        )));
    }
    let candidates = full.patterns();
    let sq: Vec<[f64; KERNEL_AREA]> = layer.kernels().iter().map(squares).collect();

    let mut counts = vec![0u64; candidates.len()];
    for s in &sq {
        let (m, _) = nearest_by_energy(s, candidates);
        // candidates are sorted, so the code is the index
        counts[full.code_of(m).expect("winner comes from the candidate list")] += 1;
    }
    let frequency: Vec<(PatternMask, u64)> = candidates.iter().copied().zip(counts).collect();

    let selected = PatternSet::new(n, select_top(&frequency, v as usize))?;
    let residual = sq
        .iter()
        .map(|s| nearest_by_energy(s, selected.patterns()).1.sqrt())
        .sum();

    Ok(LayerDistillation {
        n,
        v,
        kernels: layer.kernel_count(),
        selected,
        frequency,
        residual,
    })
}

/// Distills every layer; layers run in parallel, results stay in order.
pub fn distill_model(model: &[LayerWeights], config: &SparsityConfig) -> Result<DistillReport> {
    if model.len() != config.len() {
        return Err(Error::Config(format!(
            "model has {} layers but the config describes {}",
            model.len(),
            config.len()
        )));
    }
    let layers = model
        .par_iter()
        .zip(config.layers.par_iter())
        .map(|(layer, s)| distill_layer(layer, s.n, s.v))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistillReport { layers })
}

/// Projects each kernel onto its nearest pattern in `selected`. Returns the
/// pruned layer and the pattern assigned to every kernel.
pub fn project_layer(layer: &LayerWeights, selected: &PatternSet) -> Result<(LayerWeights, Vec<PatternMask>)> {
    let (kernels, masks): (Vec<Kernel>, Vec<PatternMask>) = layer
        .kernels()
        .iter()
        .map(|k| {
            let (m, _) = nearest_by_energy(&squares(k), selected.patterns());
            (project(k, m), m)
        })
        .unzip();
    Ok((layer.with_kernels(kernels)?, masks))
}

/// Projects a whole model with the patterns chosen in `report`.
pub fn prune_model(model: &[LayerWeights], report: &DistillReport) -> Result<Vec<LayerWeights>> {
    if model.len() != report.layers.len() {
        return Err(Error::Config(format!(
            "model has {} layers but the report describes {}",
            model.len(),
            report.layers.len()
        )));
    }
    model
        .par_iter()
        .zip(report.layers.par_iter())
        .map(|(layer, d)| {
            if d.kernels != layer.kernel_count() {
                return Err(Error::Config(format!(
                    "report expects {} kernels, layer has {}",
                    d.kernels,
                    layer.kernel_count()
                )));
            }
            project_layer(layer, &d.selected).map(|(l, _)| l)
        })
        .collect()
}

const REPORT_HEADER: &str = "pcnn-distill v1";

impl DistillReport {
    /// Plain-text report. Masks are three octal digits (one per kernel row,
    /// bit 8 first); residuals print with round-trip precision.
    ///
    /// ```text
    /// pcnn-distill v1
    /// layer 0 n 2 v 1 kernels 4 residual 0.5
    ///   pattern 003 freq 3 selected
    ///   pattern 005 freq 0
    /// end
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        for (i, l) in self.layers.iter().enumerate() {
            let _ = writeln!(
                out,
                "layer {i} n {} v {} kernels {} residual {}",
                l.n, l.v, l.kernels, l.residual
            );
            for (m, f) in &l.frequency {
                let tag = if l.selected.code_of(*m).is_some() {
                    " selected"
                } else {
                    ""
                };
                let _ = writeln!(out, "  pattern {} freq {f}{tag}", m.to_octal());
            }
            let _ = writeln!(out, "end");
        }
        out
    }

    /// Parses [`DistillReport::to_text`] output. Offsets in errors are
    /// 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, REPORT_HEADER)) => {}
            _ => return Err(Error::format(1, format!("missing `{REPORT_HEADER}` header"))),
        }
        let mut layers = Vec::new();
        while let Some((line_no, line)) = lines.next() {
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| Error::format(line_no, format!("{what}: {line:?}"));
            if tok.len() != 10
                || tok[0] != "layer"
                || tok[2] != "n"
                || tok[4] != "v"
                || tok[6] != "kernels"
                || tok[8] != "residual"
            {
                return Err(bad("expected layer record"));
            }
            if tok[1].parse::<usize>().ok() != Some(layers.len()) {
                return Err(bad("layer index out of sequence"));
            }
            let n: u8 = tok[3].parse().map_err(|_| bad("bad n"))?;
            let v: u32 = tok[5].parse().map_err(|_| bad("bad v"))?;
            let kernels: usize = tok[7].parse().map_err(|_| bad("bad kernel count"))?;
            let residual: f64 = tok[9].parse().map_err(|_| bad("bad residual"))?;

            let mut frequency = Vec::new();
            let mut selected = Vec::new();
            loop {
                let (pno, pline) = lines
                    .next()
                    .ok_or_else(|| Error::format(line_no, "layer record not terminated by `end`"))?;
                if pline == "end" {
                    break;
                }
                let p: Vec<&str> = pline.split_whitespace().collect();
                let pbad = || Error::format(pno, format!("expected pattern record: {pline:?}"));
                let flagged = match p.as_slice() {
                    ["pattern", _, "freq", _] => false,
                    ["pattern", _, "freq", _, "selected"] => true,
                    _ => return Err(pbad()),
                };
                let mask = PatternMask::from_octal(p[1]).map_err(|_| pbad())?;
                let f: u64 = p[3].parse().map_err(|_| pbad())?;
                if flagged {
                    selected.push(mask);
                }
                frequency.push((mask, f));
            }
            if !frequency.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(Error::format(line_no, "pattern records must be ascending"));
            }
            if selected.len() != v as usize {
                return Err(Error::format(
                    line_no,
                    format!("layer declares v = {v} but marks {} patterns selected", selected.len()),
                ));
            }
            let selected = PatternSet::new(n, selected).map_err(|e| Error::format(line_no, e.to_string()))?;
            layers.push(LayerDistillation {
                n,
                v,
                kernels,
                selected,
                frequency,
                residual,
            });
        }
        Ok(DistillReport { layers })
    }
}
