//! Independent oracles and random fixtures for the integration suites.
//!
//! Nothing here calls the code path it is used to check: the convolution
//! oracle decodes kernels from the raw table/code/value fields itself, the
//! frequency oracle scores masks without `nearest_pattern`, and the pointer
//! oracle scans positions directly.
#![allow(dead_code)]

use pcnn::model::{ConvGeometry, Kernel, LayerWeights};
use pcnn::sim::FeatureMap;
use pcnn::{PatternMask, PrunedLayer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random kernel values in [-1, 1).
pub fn random_layer(rng: &mut ChaCha8Rng, out_c: u32, in_c: u32) -> LayerWeights {
    let kernels = (0..out_c * in_c)
        .map(|_| Kernel(std::array::from_fn(|_| rng.random_range(-1.0f32..1.0))))
        .collect();
    LayerWeights::new(out_c, in_c, kernels, ConvGeometry::new(8, 8, 1, 1)).unwrap()
}

/// Every 9-bit value with popcount `n`, by plain enumeration.
pub fn masks_with_popcount(n: u32) -> Vec<u16> {
    (0u16..512).filter(|m| m.count_ones() == n).collect()
}

/// Squared mass kept by `mask`, accumulated highest position first so the
/// summation order differs from the library's.
fn kept_mass(k: &Kernel, mask: u16) -> f64 {
    (0..9)
        .rev()
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| f64::from(k.0[i]).powi(2))
        .sum()
}

/// Exhaustive histogram: every kernel scored against every popcount-`n`
/// mask, winner = most kept mass, ties to the lower mask.
pub fn exhaustive_histogram(layer: &LayerWeights, n: u32) -> Vec<(u16, u64)> {
    let masks = masks_with_popcount(n);
    let mut counts = vec![0u64; masks.len()];
    for k in layer.kernels() {
        let mut best = 0usize;
        for i in 1..masks.len() {
            if kept_mass(k, masks[i]) > kept_mass(k, masks[best]) {
                best = i;
            }
        }
        counts[best] += 1;
    }
    masks.into_iter().zip(counts).collect()
}

/// Top-`v` of a histogram by repeated extraction of the maximum.
pub fn top_v(hist: &[(u16, u64)], v: usize) -> Vec<u16> {
    let mut left: Vec<(u16, u64)> = hist.to_vec();
    let mut out = Vec::new();
    for _ in 0..v {
        let (idx, _) = left
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.cmp(&b.1 .1).then(b.1 .0.cmp(&a.1 .0)))
            .unwrap();
        out.push(left.remove(idx).0);
    }
    out.sort_unstable();
    out
}

/// Support of the `n` largest magnitudes, ties to the lower position.
pub fn top_n_support(k: &Kernel, n: usize) -> u16 {
    let mut idx: Vec<usize> = (0..9).collect();
    idx.sort_by(|&a, &b| k.0[b].abs().partial_cmp(&k.0[a].abs()).unwrap().then(a.cmp(&b)));
    idx[..n].iter().fold(0u16, |m, &i| m | (1 << i))
}

/// (position list, zero-run list) by scanning the mask bit by bit.
pub fn naive_pointers(mask: u16) -> (Vec<u8>, Vec<u8>) {
    let set: Vec<u8> = (0..9u8).filter(|&i| mask & (1 << i) != 0).collect();
    let mut offsets = Vec::new();
    let mut prev: i32 = -1;
    for &p in &set {
        offsets.push((i32::from(p) - prev - 1) as u8);
        prev = i32::from(p);
    }
    (set, offsets)
}

/// Dense integer kernels rebuilt straight from the SPM fields.
pub fn raw_decode(layer: &PrunedLayer) -> Vec<[i32; 9]> {
    let n = layer.n() as usize;
    let table = layer.pattern_set().patterns();
    layer
        .spm_codes()
        .iter()
        .enumerate()
        .map(|(k, &code)| {
            let bits = table[code as usize].bits();
            let mut dense = [0i32; 9];
            let mut next = 0;
            for (p, slot) in dense.iter_mut().enumerate() {
                if bits & (1 << p) != 0 {
                    *slot = i32::from(layer.nz_values()[k * n + next]);
                    next += 1;
                }
            }
            dense
        })
        .collect()
}

/// Direct convolution over windows, channels and taps, then ReLU.
pub fn naive_conv(layer: &PrunedLayer, input: &FeatureMap, stride: u32, padding: u32) -> (u32, u32, Vec<i32>) {
    let w = raw_decode(layer);
    let (ih, iw) = (input.height() as i64, input.width() as i64);
    let oh = ((ih + 2 * i64::from(padding) - 3) / i64::from(stride) + 1) as u32;
    let ow = ((iw + 2 * i64::from(padding) - 3) / i64::from(stride) + 1) as u32;
    let (out_c, in_c) = (layer.out_channels(), layer.in_channels());
    let mut out = Vec::with_capacity((out_c * oh * ow) as usize);
    for o in 0..out_c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0i64;
                for c in 0..in_c {
                    let kernel = &w[(o * in_c + c) as usize];
                    for ky in 0..3i64 {
                        for kx in 0..3i64 {
                            let y = i64::from(oy * stride) + ky - i64::from(padding);
                            let x = i64::from(ox * stride) + kx - i64::from(padding);
                            if y < 0 || x < 0 || y >= ih || x >= iw {
                                continue;
                            }
                            let a = i64::from(input.get(c, y as u32, x as u32));
                            acc += i64::from(kernel[(ky * 3 + kx) as usize]) * a;
                        }
                    }
                }
                out.push(acc.max(0) as i32);
            }
        }
    }
    (oh, ow, out)
}

pub fn mask(bits: u16) -> PatternMask {
    PatternMask::new(bits).unwrap()
}

/// Random layer distilled to `(n, v)`, projected and encoded.
pub fn pruned_random(rng: &mut ChaCha8Rng, out_c: u32, in_c: u32, n: u8, v: u32) -> (LayerWeights, PrunedLayer) {
    let layer = random_layer(rng, out_c, in_c);
    let d = pcnn::distill_layer(&layer, n, v).unwrap();
    let (projected, _) = pcnn::distill::project_layer(&layer, &d.selected).unwrap();
    let encoded = pcnn::codec::encode_layer(&projected, &d.selected).unwrap();
    (projected, encoded)
}

/// Largest admissible budget not above `cap`.
pub fn budget(n: u8, cap: u32) -> u32 {
    (pcnn::binomial(9, u32::from(n)).unwrap() as u32).min(cap)
}

/// Synthetic model of the given shapes distilled with one `(n, v)` for all
/// layers, projected and encoded.
pub fn pruned_model(shapes: &[pcnn::LayerShape], n: u8, v: u32, seed: u64) -> pcnn::PrunedModel {
    let model = pcnn::presets::generate(shapes, seed).unwrap();
    let cfg = pcnn::SparsityConfig::uniform(model.len(), n, v).unwrap();
    let report = pcnn::distill_model(&model, &cfg).unwrap();
    let projected = pcnn::distill::prune_model(&model, &report).unwrap();
    pcnn::encode(&projected, &report).unwrap()
}
