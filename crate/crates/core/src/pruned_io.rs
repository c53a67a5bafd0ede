//! `PCP1` pruned-model container.
//!
//! ```text
//! "PCP1"  u32 layer_count
//! per layer:
//!   u8 n, u16 pattern_count, u8 code_width, f32 scale, u32 out_c, u32 in_c
//!   pattern_count x u16     mask table, low 9 bits meaningful
//!   codes                   code_width bits each, MSB-first, byte-padded
//!   out_c * in_c * n  i8    non-zeros, kernel order, ascending position
//! ```
//! Multi-byte fields are little-endian.

use crate::codec::{PrunedLayer, PrunedModel};
use crate::error::{Error, Result};
use crate::pattern::{PatternMask, PatternSet};
use crate::wire::{packed_len, BitReader, BitWriter, ByteReader};

pub const PCP1_MAGIC: &[u8; 4] = b"PCP1";

/// Mask table entries, one little-endian u16 each.
pub(crate) fn table_bytes(set: &PatternSet) -> Vec<u8> {
    set.patterns().iter().flat_map(|m| m.bits().to_le_bytes()).collect()
}

/// Codes packed at the layer's code width.
pub(crate) fn code_stream(layer: &PrunedLayer) -> Vec<u8> {
    let width = layer.pattern_set().code_width();
    let mut w = BitWriter::new();
    for &c in layer.spm_codes() {
        w.push(u32::from(c), width);
    }
    w.into_bytes()
}

pub(crate) fn read_table(r: &mut ByteReader<'_>, n: u8, count: usize) -> Result<PatternSet> {
    let at = r.offset();
    let mut masks = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = r.u16("pattern table")?;
        masks.push(PatternMask::new(raw).map_err(|e| Error::format(at, e.to_string()))?);
    }
    // stored order is code order; a sorted rebuild must not permute it
    let set = PatternSet::new(n, masks.clone()).map_err(|e| Error::format(at, e.to_string()))?;
    if set.patterns() != masks.as_slice() {
        return Err(Error::format(at, "pattern table is not in ascending order"));
    }
    Ok(set)
}

pub(crate) fn read_codes(r: &mut ByteReader<'_>, count: usize, width: u8) -> Result<Vec<u16>> {
    let at = r.offset();
    let bytes = r.take(packed_len(count, width), "code stream")?;
    let mut br = BitReader::new(bytes);
    let codes = (0..count)
        .map(|_| br.read(width).expect("length checked") as u16)
        .collect();
    if !br.rest_is_zero() {
        return Err(Error::format(at, "non-zero padding bits after code stream"));
    }
    Ok(codes)
}

pub fn write_pcp1(model: &PrunedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PCP1_MAGIC);
    out.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    for l in &model.layers {
        let set = l.pattern_set();
        out.push(l.n());
        out.extend_from_slice(&(set.len() as u16).to_le_bytes());
        out.push(set.code_width());
        out.extend_from_slice(&l.scale().to_le_bytes());
        out.extend_from_slice(&l.out_channels().to_le_bytes());
        out.extend_from_slice(&l.in_channels().to_le_bytes());
        out.extend(table_bytes(set));
        out.extend(code_stream(l));
        out.extend(l.nz_values().iter().map(|&v| v as u8));
    }
    out
}

pub fn read_pcp1(data: &[u8]) -> Result<PrunedModel> {
    let mut r = ByteReader::new(data);
    r.expect_magic(PCP1_MAGIC)?;
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for li in 0..count {
        let header_at = r.offset();
        let n = r.u8("n")?;
        let patterns = r.u16("pattern count")? as usize;
        let width = r.u8("code width")?;
        let scale = r.f32("scale")?;
        let out_c = r.u32("out_c")?;
        let in_c = r.u32("in_c")?;
        if !(1..=9).contains(&n) {
            return Err(Error::format(header_at, format!("layer {li}: n = {n} outside 1..=9")));
        }
        let set = read_table(&mut r, n, patterns)?;
        if set.code_width() != width {
            return Err(Error::format(
                header_at,
                format!("layer {li}: code width {width} does not match {patterns} patterns"),
            ));
        }
        let kernels = out_c as usize * in_c as usize;
        let codes = read_codes(&mut r, kernels, width)?;
        let values_at = r.offset();
        let values = r
            .take(kernels * n as usize, "non-zero values")?
            .iter()
            .map(|&b| b as i8)
            .collect();
        let layer = PrunedLayer::new(out_c, in_c, set, codes, values, scale)
            .map_err(|e| Error::format(values_at, format!("layer {li}: {e}")))?;
        layers.push(layer);
    }
    r.expect_end()?;
    Ok(PrunedModel { layers })
}
