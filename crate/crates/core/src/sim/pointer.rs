//! Sparsity-mask pointer generation.
//!
//! The sparsity IO inverts the sparsity mask and runs a chain of adders
//! gated by the mask: each effectual entry latches the number of zeros
//! counted since the previous effectual entry, then the counter resets.
//! Pointers follow as `p[0] = off[0]`, `p[k] = p[k-1] + 1 + off[k]`.

use std::sync::OnceLock;

use crate::pattern::{PatternMask, KERNEL_AREA};

/// Weight mask AND activation mask for one kernel/window pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SparsityMask(pub PatternMask);

impl SparsityMask {
    pub fn combine(weight: PatternMask, activation: PatternMask) -> Self {
        SparsityMask(weight.and(activation))
    }

    pub fn count(self) -> u32 {
        self.0.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PointerOffsets {
    offsets: [u8; KERNEL_AREA],
    pointers: [u8; KERNEL_AREA],
    len: u8,
}

impl PointerOffsets {
    pub fn offsets(&self) -> &[u8] {
        &self.offsets[..self.len as usize]
    }

    pub fn pointers(&self) -> &[u8] {
        &self.pointers[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

pub fn pointer_offsets(mask: SparsityMask) -> PointerOffsets {
    let bits = mask.0.bits();
    let zeros = !bits & 0x1ff;
    let mut out = PointerOffsets::default();
    let mut run = 0u8;
    for i in 0..KERNEL_AREA {
        if zeros & (1 << i) != 0 {
            run += 1;
        } else {
            out.offsets[out.len as usize] = run;
            run = 0;
            out.len += 1;
        }
    }
    let mut next = 0u8;
    for k in 0..out.len as usize {
        out.pointers[k] = next + out.offsets[k];
        next = out.pointers[k] + 1;
    }
    out
}

/// Pointer table for all 512 masks, indexed by mask value.
pub fn pointer_table() -> &'static [PointerOffsets; 512] {
    static TABLE: OnceLock<[PointerOffsets; 512]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|bits| pointer_offsets(SparsityMask(PatternMask::new(bits as u16).unwrap())))
    })
}
