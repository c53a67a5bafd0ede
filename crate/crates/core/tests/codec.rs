mod common;

use common::{budget, pruned_random, random_layer, rng};
use pcnn::codec::{encode_layer, layer_scale, quantize};
use pcnn::distill::project_layer;
use pcnn::memory::{fills_for, kernels_per_fill, REGISTER_WORDS};
use pcnn::pruned_io::{read_pcp1, write_pcp1};
use pcnn::{decode, distill_layer, full_pattern_set, pack, unpack, Error, PatternMask, PrunedModel};
use proptest::prelude::*;
use rand::Rng;

fn random_model(seed: u64, n: u8) -> PrunedModel {
    let mut r = rng(seed);
    let layers = (0..r.random_range(1..=3))
        .map(|_| {
            let (out_c, in_c) = (r.random_range(1..=9), r.random_range(1..=9));
            let v = r.random_range(1..=budget(n, 16));
            pruned_random(&mut r, out_c, in_c, n, v).1
        })
        .collect();
    PrunedModel { layers }
}

#[test]
fn decode_preserves_support_exactly() {
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let n = r.random_range(1..=9u8);
        let (out_c, in_c) = (r.random_range(1..=8), r.random_range(1..=8));
        let (projected, encoded) = pruned_random(&mut r, out_c, in_c, n, budget(n, 8));
        let decoded = decode(&PrunedModel {
            layers: vec![encoded.clone()],
        })
        .unwrap();
        for (k, (a, b)) in projected.kernels().iter().zip(decoded[0].kernels()).enumerate() {
            let m = encoded.mask(k);
            assert_eq!(m.count(), u32::from(n));
            // quantization may zero a tiny weight but never moves one
            assert!(m.covers(a.support()));
            assert!(m.covers(b.support()));
            assert!(a.support().covers(b.support()), "seed {seed} kernel {k}");
        }
    }
}

#[test]
fn codes_index_the_table() {
    for seed in 0..20u64 {
        for l in random_model(seed, (seed % 9 + 1) as u8).layers {
            assert!(l.spm_codes().iter().all(|&c| (c as usize) < l.pattern_set().len()));
        }
    }
}

#[test]
fn quantization_error_is_half_a_step() {
    let mut r = rng(11);
    let layer = random_layer(&mut r, 100, 100);
    let dense = full_pattern_set(9).unwrap();
    let encoded = encode_layer(&layer, &dense).unwrap();
    let scale = layer_scale(&layer);
    assert_eq!(encoded.scale(), scale);
    for (k, kernel) in layer.kernels().iter().enumerate() {
        let back = encoded.decode_kernel(k);
        for (w, d) in kernel.0.iter().zip(back.0) {
            assert!((w - d).abs() <= scale / 2.0 * 1.0001, "{w} vs {d}");
        }
    }
}

#[test]
fn quantize_endpoints() {
    assert_eq!(quantize(1.0, 1.0 / 127.0), 127);
    assert_eq!(quantize(-1.0, 1.0 / 127.0), -127);
    assert_eq!(quantize(5.0, 1.0 / 127.0), 127);
    assert_eq!(quantize(0.3, 0.0), 0);
}

#[test]
fn unprojected_kernels_are_rejected() {
    let mut r = rng(12);
    let layer = random_layer(&mut r, 2, 2);
    let d = distill_layer(&layer, 3, 4).unwrap();
    assert!(matches!(encode_layer(&layer, &d.selected), Err(Error::Consistency(_))));
    let (projected, _) = project_layer(&layer, &d.selected).unwrap();
    assert!(encode_layer(&projected, &d.selected).is_ok());
}

#[test]
fn pack_unpack_every_n() {
    for seed in 0..100u64 {
        let n = (seed % 9 + 1) as u8;
        let model = random_model(seed, n);
        let image = pack(&model);
        assert_eq!(unpack(&image).unwrap(), model, "seed {seed}");
        assert_eq!(image.weight_image.len() % REGISTER_WORDS, 0);
        let fills: usize = model.layers.iter().map(|l| fills_for(l.kernel_count(), n)).sum();
        assert_eq!(image.weight_image.len(), fills * REGISTER_WORDS);
    }
}

#[test]
fn register_fills_hold_whole_kernels() {
    for n in 1..=9u8 {
        let per = kernels_per_fill(n);
        assert_eq!(per, 60 / n as usize);
        if n <= 6 {
            assert_eq!(per * n as usize, REGISTER_WORDS);
        } else {
            assert!(per * (n as usize) < REGISTER_WORDS);
        }
    }
}

#[test]
fn pcp1_roundtrip_and_truncation() {
    for seed in 0..30u64 {
        let model = random_model(seed, (seed % 9 + 1) as u8);
        let bytes = write_pcp1(&model);
        assert_eq!(read_pcp1(&bytes).unwrap(), model);
        let cut = rng(seed).random_range(0..bytes.len());
        assert!(matches!(read_pcp1(&bytes[..cut]), Err(Error::Format { .. })));
    }
}

#[test]
fn every_mask_roundtrips_through_bits() {
    for bits in 0u16..512 {
        let m = PatternMask::new(bits).unwrap();
        assert_eq!(PatternMask::from_bools(&m.to_bools()), m);
        assert_eq!(PatternMask::from_octal(&m.to_octal()).unwrap(), m);
        assert_eq!(m.count(), bits.count_ones());
    }
    assert!(PatternMask::new(512).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pack_is_bit_exact(seed in any::<u64>(), n in 1u8..=9) {
        let model = random_model(seed, n);
        let image = pack(&model);
        let back = unpack(&image).unwrap();
        prop_assert_eq!(pack(&back), image);
    }
}
