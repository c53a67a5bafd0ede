//! Weight SRAM / Pattern SRAM images and the PaC (pattern config) block.
//!
//! Weights are fetched into a 60-entry kernel register, one byte per
//! entry. Because 60 is divisible by 1..=6, a fill of a layer with `n` in
//! that range holds exactly `60 / n` whole kernels; for `n` of 7, 8 or 9 a
//! fill holds `floor(60 / n)` kernels and is zero-padded to 60. A layer
//! always starts on a fresh fill and its last fill is zero-padded.
//!
//! The pattern image holds, per layer, the mask table (u16 LE per pattern)
//! followed by the byte-padded code stream.
//!
//! Images larger than one SRAM load are split into numbered segments:
//! weight segments end on fill boundaries, pattern segments are plain
//! 4 KiB slices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::codec::{PrunedLayer, PrunedModel};
use crate::error::{Error, Result};
use crate::pruned_io::{code_stream, read_codes, read_table, table_bytes};
use crate::wire::ByteReader;

pub const REGISTER_WORDS: usize = 60;
pub const WEIGHT_SRAM_BYTES: usize = 128 * 1024;
pub const PATTERN_SRAM_BYTES: usize = 4 * 1024;

/// Whole fills that fit in one weight SRAM load.
pub const WEIGHT_SEGMENT_BYTES: usize = WEIGHT_SRAM_BYTES / REGISTER_WORDS * REGISTER_WORDS;

pub fn kernels_per_fill(n: u8) -> usize {
    REGISTER_WORDS / n as usize
}

pub fn fills_for(kernels: usize, n: u8) -> usize {
    kernels.div_ceil(kernels_per_fill(n))
}

/// PaC record for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacLayer {
    pub n: u8,
    pub patterns: u16,
    pub code_width: u8,
    pub kernels: u32,
    pub out_channels: u32,
    pub in_channels: u32,
    pub scale: f32,
    /// Byte offset of the layer's first fill in the weight image.
    pub weight_offset: u32,
    /// Byte offset of the layer's mask table in the pattern image.
    pub pattern_offset: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PacConfig {
    pub layers: Vec<PacLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryImage {
    pub weight_image: Vec<u8>,
    pub pattern_image: Vec<u8>,
    pub pac: PacConfig,
}

fn weight_fills(layer: &PrunedLayer) -> Vec<u8> {
    let n = layer.n();
    let per_fill = kernels_per_fill(n);
    let mut out = Vec::with_capacity(fills_for(layer.kernel_count(), n) * REGISTER_WORDS);
    for chunk in layer.nz_values().chunks(per_fill * n as usize) {
        out.extend(chunk.iter().map(|&v| v as u8));
        out.resize(out.len() + REGISTER_WORDS - chunk.len(), 0);
    }
    out
}

pub fn pack(pruned: &PrunedModel) -> MemoryImage {
    let mut weight_image = Vec::new();
    let mut pattern_image = Vec::new();
    let mut pac = PacConfig::default();
    for l in &pruned.layers {
        let set = l.pattern_set();
        pac.layers.push(PacLayer {
            n: l.n(),
            patterns: set.len() as u16,
            code_width: set.code_width(),
            kernels: l.kernel_count() as u32,
            out_channels: l.out_channels(),
            in_channels: l.in_channels(),
            scale: l.scale(),
            weight_offset: weight_image.len() as u32,
            pattern_offset: pattern_image.len() as u32,
        });
        weight_image.extend(weight_fills(l));
        pattern_image.extend(table_bytes(set));
        pattern_image.extend(code_stream(l));
    }
    MemoryImage {
        weight_image,
        pattern_image,
        pac,
    }
}

pub fn unpack(image: &MemoryImage) -> Result<PrunedModel> {
    let mut weights = ByteReader::new(&image.weight_image);
    let mut patterns = ByteReader::new(&image.pattern_image);
    let mut layers = Vec::with_capacity(image.pac.layers.len());
    for (li, p) in image.pac.layers.iter().enumerate() {
        let ctx = |offset: usize, msg: String| Error::format(offset, format!("layer {li}: {msg}"));
        if !(1..=9).contains(&p.n) {
            return Err(ctx(0, format!("PaC n = {} outside 1..=9", p.n)));
        }
        if u64::from(p.kernels) != u64::from(p.out_channels) * u64::from(p.in_channels) {
            return Err(ctx(
                weights.offset(),
                format!(
                    "PaC declares {} kernels for a {}x{} layer",
                    p.kernels, p.out_channels, p.in_channels
                ),
            ));
        }
        if p.weight_offset as usize != weights.offset() {
            return Err(ctx(
                weights.offset(),
                format!("PaC weight offset {} is wrong", p.weight_offset),
            ));
        }
        if p.pattern_offset as usize != patterns.offset() {
            return Err(ctx(
                patterns.offset(),
                format!("PaC pattern offset {} is wrong", p.pattern_offset),
            ));
        }

        let set = read_table(&mut patterns, p.n, p.patterns as usize)?;
        if set.code_width() != p.code_width {
            return Err(ctx(
                0,
                format!("PaC code width {} does not fit {} patterns", p.code_width, p.patterns),
            ));
        }
        let codes = read_codes(&mut patterns, p.kernels as usize, p.code_width)?;

        let n = p.n as usize;
        let per_fill = kernels_per_fill(p.n);
        let mut values = Vec::with_capacity(p.kernels as usize * n);
        let mut left = p.kernels as usize;
        while left > 0 {
            let at = weights.offset();
            let fill = weights.take(REGISTER_WORDS, "weight register fill")?;
            let used = left.min(per_fill) * n;
            if fill[used..].iter().any(|&b| b != 0) {
                return Err(ctx(at + used, "non-zero padding in register fill".into()));
            }
            values.extend(fill[..used].iter().map(|&b| b as i8));
            left -= used / n;
        }
        let layer = PrunedLayer::new(p.out_channels, p.in_channels, set, codes, values, p.scale)
            .map_err(|e| ctx(weights.offset(), e.to_string()))?;
        layers.push(layer);
    }
    weights.expect_end()?;
    patterns.expect_end()?;
    Ok(PrunedModel { layers })
}

impl MemoryImage {
    pub fn weight_segments(&self) -> Vec<&[u8]> {
        segments(&self.weight_image, WEIGHT_SEGMENT_BYTES)
    }

    pub fn pattern_segments(&self) -> Vec<&[u8]> {
        segments(&self.pattern_image, PATTERN_SRAM_BYTES)
    }

    /// Writes `pac.txt`, `weight_NNN.{bin,hex}` and `pattern_NNN.{bin,hex}`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("pac.txt"), self.pac_text())?;
        for (kind, segs) in [("weight", self.weight_segments()), ("pattern", self.pattern_segments())] {
            for (i, seg) in segs.iter().enumerate() {
                fs::write(dir.join(format!("{kind}_{i:03}.bin")), seg)?;
                fs::write(dir.join(format!("{kind}_{i:03}.hex")), hex_dump(seg))?;
            }
        }
        Ok(())
    }

    /// Reads a directory written by [`MemoryImage::write_dir`]. Segment
    /// files are concatenated in manifest order and their sizes checked.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("pac.txt"))?;
        let (pac, manifest) = parse_pac(&text)?;
        let mut weight_image = Vec::new();
        let mut pattern_image = Vec::new();
        for seg in &manifest {
            let name = format!("{}_{:03}.bin", seg.kind, seg.index);
            let bytes = fs::read(dir.join(&name))?;
            let target = if seg.kind == "weight" {
                &mut weight_image
            } else {
                &mut pattern_image
            };
            if bytes.len() != seg.bytes || target.len() != seg.offset {
                return Err(Error::format(
                    bytes.len().min(seg.bytes),
                    format!("{name}: expected {} bytes at image offset {}", seg.bytes, seg.offset),
                ));
            }
            target.extend(bytes);
        }
        Ok(MemoryImage {
            weight_image,
            pattern_image,
            pac,
        })
    }

    /// PaC records plus the segment manifest, one record per line.
    ///
    /// ```text
    /// pcnn-pac v1
    /// layer 0 n 4 patterns 16 code_width 4 kernels 64 out_c 8 in_c 8 scale 0x3c810204 weight_offset 0 pattern_offset 0
    /// segment weight 0 offset 0 bytes 300
    /// segment pattern 0 offset 0 bytes 64
    /// ```
    /// `scale` is the f32 bit pattern in hex so the value survives exactly.
    pub fn pac_text(&self) -> String {
        let mut out = String::from("pcnn-pac v1\n");
        for (i, l) in self.pac.layers.iter().enumerate() {
            let _ = writeln!(
                out,
                "layer {i} n {} patterns {} code_width {} kernels {} out_c {} in_c {} scale {:#010x} weight_offset {} pattern_offset {}",
                l.n,
                l.patterns,
                l.code_width,
                l.kernels,
                l.out_channels,
                l.in_channels,
                l.scale.to_bits(),
                l.weight_offset,
                l.pattern_offset
            );
        }
        for (kind, segs) in [("weight", self.weight_segments()), ("pattern", self.pattern_segments())] {
            let mut offset = 0;
            for (i, s) in segs.iter().enumerate() {
                let _ = writeln!(out, "segment {kind} {i} offset {offset} bytes {}", s.len());
                offset += s.len();
            }
        }
        out
    }
}

fn segments(bytes: &[u8], cap: usize) -> Vec<&[u8]> {
    if bytes.is_empty() {
        return Vec::new();
    }
    bytes.chunks(cap).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEntry {
    pub kind: String,
    pub index: usize,
    pub offset: usize,
    pub bytes: usize,
}

/// Parses PaC text. Error offsets are 1-based line numbers.
pub fn parse_pac(text: &str) -> Result<(PacConfig, Vec<SegmentEntry>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    if lines.next().map(|(_, l)| l) != Some("pcnn-pac v1") {
        return Err(Error::format(1, "missing `pcnn-pac v1` header"));
    }
    let mut pac = PacConfig::default();
    let mut manifest = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::format(line_no, format!("malformed PaC record {line:?}"));
        match tok.first() {
            Some(&"layer") => {
                let keys = [
                    "n",
                    "patterns",
                    "code_width",
                    "kernels",
                    "out_c",
                    "in_c",
                    "scale",
                    "weight_offset",
                    "pattern_offset",
                ];
                if tok.len() != 2 + 2 * keys.len()
                    || tok[1].parse::<usize>().ok() != Some(pac.layers.len())
                    || keys.iter().enumerate().any(|(i, k)| tok[2 + 2 * i] != *k)
                {
                    return Err(bad());
                }
                let field = |i: usize| tok[3 + 2 * i];
                let num = |i: usize| field(i).parse::<u32>().map_err(|_| bad());
                let scale_bits = field(6)
                    .strip_prefix("0x")
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .ok_or_else(bad)?;
                pac.layers.push(PacLayer {
                    n: u8::try_from(num(0)?).map_err(|_| bad())?,
                    patterns: u16::try_from(num(1)?).map_err(|_| bad())?,
                    code_width: u8::try_from(num(2)?).map_err(|_| bad())?,
                    kernels: num(3)?,
                    out_channels: num(4)?,
                    in_channels: num(5)?,
                    scale: f32::from_bits(scale_bits),
                    weight_offset: num(7)?,
                    pattern_offset: num(8)?,
                });
            }
            Some(&"segment") => {
                if tok.len() != 7 || tok[3] != "offset" || tok[5] != "bytes" {
                    return Err(bad());
                }
                let kind = match tok[1] {
                    k @ ("weight" | "pattern") => k.to_string(),
                    _ => return Err(bad()),
                };
                manifest.push(SegmentEntry {
                    kind,
                    index: tok[2].parse().map_err(|_| bad())?,
                    offset: tok[4].parse().map_err(|_| bad())?,
                    bytes: tok[6].parse().map_err(|_| bad())?,
                });
            }
            _ => return Err(bad()),
        }
    }
    Ok((pac, manifest))
}

/// Offset-prefixed hex dump, 16 bytes per line.
pub fn hex_dump(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 3 + bytes.len() / 16 * 10);
    for (i, line) in bytes.chunks(16).enumerate() {
        let _ = write!(out, "{:08x}:", i * 16);
        for b in line {
            let _ = write!(out, " {b:02x}");
        }
        out.push('\n');
    }
    out
}
