//! Kernel occupancy patterns and their per-layer code tables.
//!
//! A 3×3 kernel has nine positions numbered row-major, so position `i`
//! sits at `(i / 3, i % 3)` and maps to bit `i` of a [`PatternMask`].
//! Serialized masks put bit 8 first (most significant).

use std::fmt;

use crate::error::{Error, Result};

/// Number of weights in a 3×3 kernel.
pub const KERNEL_AREA: usize = 9;

/// Mask with every kernel position occupied.
pub const DENSE_MASK: PatternMask = PatternMask(0x1ff);

/// 9-bit occupancy mask over a 3×3 kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PatternMask(u16);

impl PatternMask {
    pub const EMPTY: PatternMask = PatternMask(0);

    pub fn new(bits: u16) -> Result<Self> {
        if bits > 0x1ff {
            return Err(Error::Domain(format!("pattern mask {bits:#x} exceeds 9 bits")));
        }
        Ok(PatternMask(bits))
    }

    /// Builds a mask from kernel positions. Positions must be below 9.
    pub fn from_positions<I: IntoIterator<Item = usize>>(positions: I) -> Result<Self> {
        let mut bits = 0u16;
        for p in positions {
            if p >= KERNEL_AREA {
                return Err(Error::Domain(format!("kernel position {p} out of range")));
            }
            bits |= 1 << p;
        }
        Ok(PatternMask(bits))
    }

    /// Support mask of a kernel: bits set where the value is non-zero.
    pub fn support(values: &[f32; KERNEL_AREA]) -> Self {
        let bits = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .fold(0u16, |acc, (i, _)| acc | (1 << i));
        PatternMask(bits)
    }

    #[inline]
    pub const fn bits(self) -> u16 {
        self.0
    }

    #[inline]
    pub const fn count(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub const fn contains(self, position: usize) -> bool {
        position < KERNEL_AREA && self.0 & (1 << position) != 0
    }

    /// True when every bit of `other` is also set in `self`.
    #[inline]
    pub const fn covers(self, other: PatternMask) -> bool {
        other.0 & !self.0 == 0
    }

    #[inline]
    pub const fn and(self, other: PatternMask) -> PatternMask {
        PatternMask(self.0 & other.0)
    }

    /// Occupied positions in ascending order.
    pub fn positions(self) -> impl Iterator<Item = usize> {
        (0..KERNEL_AREA).filter(move |&i| self.0 & (1 << i) != 0)
    }

    /// Per-position occupancy, index `i` is kernel position `i`.
    pub fn to_bools(self) -> [bool; KERNEL_AREA] {
        std::array::from_fn(|i| self.contains(i))
    }

    pub fn from_bools(bits: &[bool; KERNEL_AREA]) -> Self {
        PatternMask(
            bits.iter()
                .enumerate()
                .fold(0u16, |acc, (i, &b)| acc | (u16::from(b) << i)),
        )
    }

    /// Three octal digits, bit 8 first. Each digit is one kernel row read
    /// from its highest position down, so `007` is the top row.
    pub fn to_octal(self) -> String {
        format!("{:03o}", self.0)
    }

    pub fn from_octal(s: &str) -> Result<Self> {
        let bits = u16::from_str_radix(s, 8).map_err(|_| Error::Domain(format!("invalid octal pattern {s:?}")))?;
        PatternMask::new(bits)
    }
}

impl fmt::Display for PatternMask {
    /// Nine binary digits, bit 8 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:09b}", self.0)
    }
}

/// Row/column of a kernel position.
#[inline]
pub const fn position_to_cell(position: usize) -> (usize, usize) {
    (position / 3, position % 3)
}

#[inline]
pub const fn cell_to_position(row: usize, col: usize) -> usize {
    row * 3 + col
}

/// Exact binomial coefficient for `0 <= n <= k <= 16`.
pub fn binomial(k: u32, n: u32) -> Result<u64> {
    if k > 16 {
        return Err(Error::Domain(format!("binomial({k}, {n}): k above 16")));
    }
    if n > k {
        return Err(Error::Domain(format!("binomial({k}, {n}): n exceeds k")));
    }
    let n = n.min(k - n) as u64;
    let k = k as u64;
    // Each partial product is itself a binomial coefficient, so the
    // division is exact at every step.
    Ok((0..n).fold(1u64, |acc, i| acc * (k - i) / (i + 1)))
}

/// A layer's ordered pattern collection and its SPM code table.
///
/// Patterns are distinct, share one popcount, and are sorted ascending by
/// mask value; the SPM code of a pattern is its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    n: u8,
    patterns: Vec<PatternMask>,
}

impl PatternSet {
    /// Builds a set from arbitrary-order masks, sorting them into code order.
    pub fn new(n: u8, mut patterns: Vec<PatternMask>) -> Result<Self> {
        check_nonzeros(n)?;
        if patterns.is_empty() {
            return Err(Error::Domain("pattern set must not be empty".into()));
        }
        if let Some(bad) = patterns.iter().find(|m| m.count() != u32::from(n)) {
            return Err(Error::Domain(format!(
                "pattern {bad} has popcount {} but the layer keeps {n} non-zeros",
                bad.count()
            )));
        }
        patterns.sort_unstable();
        if patterns.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate pattern in set".into()));
        }
        Ok(PatternSet { n, patterns })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn patterns(&self) -> &[PatternMask] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Bits per SPM code: `ceil(log2(len))`, at least 1.
    pub fn code_width(&self) -> u8 {
        code_width_for(self.patterns.len())
    }

    pub fn code_of(&self, mask: PatternMask) -> Option<usize> {
        self.patterns.binary_search(&mask).ok()
    }

    pub fn mask_of(&self, code: usize) -> Option<PatternMask> {
        self.patterns.get(code).copied()
    }

    /// Lowest pattern whose occupancy covers `support`.
    pub fn lowest_covering(&self, support: PatternMask) -> Option<(usize, PatternMask)> {
        self.patterns
            .iter()
            .copied()
            .enumerate()
            .find(|(_, m)| m.covers(support))
    }
}

/// Bits needed to address `count` patterns, never less than one.
pub fn code_width_for(count: usize) -> u8 {
    let mut width = 1u8;
    while (1usize << width) < count {
        width += 1;
    }
    width
}

pub(crate) fn check_nonzeros(n: u8) -> Result<()> {
    if (1..=9).contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-zeros per kernel must be in 1..=9, got {n}")))
    }
}

/// Every mask with exactly `n` occupied positions, ascending.
pub fn full_pattern_set(n: u8) -> Result<PatternSet> {
    check_nonzeros(n)?;
    let patterns = (0u16..512)
        .filter(|b| b.count_ones() == u32::from(n))
        .map(PatternMask)
        .collect();
    Ok(PatternSet { n, patterns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(9, 4).unwrap(), 126);
        assert_eq!(binomial(9, 0).unwrap(), 1);
        assert_eq!(binomial(16, 8).unwrap(), 12870);
        let total: u64 = (0..=9).map(|i| binomial(9, i).unwrap()).sum();
        assert_eq!(total, 512);
    }

    #[test]
    fn binomial_rejects_bad_arguments() {
        assert!(matches!(binomial(3, 4), Err(Error::Domain(_))));
        assert!(matches!(binomial(17, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn full_sets() {
        assert_eq!(full_pattern_set(4).unwrap().len(), 126);
        let dense = full_pattern_set(9).unwrap();
        assert_eq!(dense.patterns(), &[DENSE_MASK]);
        let pairs = full_pattern_set(2).unwrap();
        assert_eq!(pairs.len(), 36);
        assert_eq!(pairs.patterns()[0].bits(), 0b000000011);
        assert!(full_pattern_set(0).is_err());
        assert!(full_pattern_set(10).is_err());
    }

    #[test]
    fn full_set_sizes_match_binomial() {
        let mut largest = 0;
        for n in 1..=9u8 {
            let len = full_pattern_set(n).unwrap().len() as u64;
            assert_eq!(len, binomial(9, u32::from(n)).unwrap());
            largest = largest.max(len);
        }
        assert_eq!(largest, 126);
    }

    #[test]
    fn code_widths() {
        assert_eq!(code_width_for(1), 1);
        assert_eq!(code_width_for(2), 1);
        assert_eq!(code_width_for(3), 2);
        assert_eq!(code_width_for(16), 4);
        assert_eq!(code_width_for(17), 5);
        assert_eq!(code_width_for(126), 7);
    }

    #[test]
    fn cell_roundtrip() {
        for p in 0..KERNEL_AREA {
            let (r, c) = position_to_cell(p);
            assert_eq!(cell_to_position(r, c), p);
        }
    }

    #[test]
    fn bool_roundtrip_all_masks() {
        for bits in 0..512u16 {
            let m = PatternMask::new(bits).unwrap();
            assert_eq!(PatternMask::from_bools(&m.to_bools()), m);
            assert_eq!(PatternMask::from_octal(&m.to_octal()).unwrap(), m);
        }
        assert!(PatternMask::new(512).is_err());
    }

    #[test]
    fn pattern_set_validation() {
        let a = PatternMask::from_positions([0, 1]).unwrap();
        let b = PatternMask::from_positions([3, 8]).unwrap();
        let set = PatternSet::new(2, vec![b, a]).unwrap();
        assert_eq!(set.patterns(), &[a, b]);
        assert_eq!(set.code_of(b), Some(1));
        assert_eq!(set.mask_of(0), Some(a));
        assert!(PatternSet::new(2, vec![a, a]).is_err());
        assert!(PatternSet::new(3, vec![a]).is_err());
        assert!(PatternSet::new(2, vec![]).is_err());
    }

    #[test]
    fn display_is_msb_first() {
        let m = PatternMask::from_positions([0, 8]).unwrap();
        assert_eq!(m.to_string(), "100000001");
        assert_eq!(PatternMask::from_positions([0, 1, 2]).unwrap().to_octal(), "007");
    }
}
