mod common;

use common::{pruned_random, rng};
use pcnn::memory::{hex_dump, parse_pac, MemoryImage, PATTERN_SRAM_BYTES, WEIGHT_SEGMENT_BYTES};
use pcnn::{pack, unpack, Error, PrunedModel};

fn model(out_c: u32, in_c: u32, n: u8, v: u32, seed: u64) -> PrunedModel {
    let mut r = rng(seed);
    PrunedModel {
        layers: vec![pruned_random(&mut r, out_c, in_c, n, v).1],
    }
}

#[test]
fn directory_roundtrip_with_several_segments() {
    // 512 * 256 kernels of 4 weights: 2 MiB of fills, far over one SRAM load
    let m = model(512, 256, 4, 16, 41);
    let image = pack(&m);
    let segs = image.weight_segments();
    assert!(segs.len() > 1);
    assert!(segs[..segs.len() - 1].iter().all(|s| s.len() == WEIGHT_SEGMENT_BYTES));
    assert!(image.pattern_segments().iter().all(|s| s.len() <= PATTERN_SRAM_BYTES));

    let dir = std::env::temp_dir().join(format!("pcnn-memory-test-{}", std::process::id()));
    image.write_dir(&dir).unwrap();
    let back = MemoryImage::read_dir(&dir).unwrap();
    assert_eq!(back, image);
    assert_eq!(unpack(&back).unwrap(), m);
    let hex = std::fs::read_to_string(dir.join("pattern_000.hex")).unwrap();
    assert!(hex.starts_with("00000000:"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn pac_text_roundtrips() {
    let image = pack(&model(6, 5, 7, 10, 42));
    let (pac, manifest) = parse_pac(&image.pac_text()).unwrap();
    assert_eq!(pac, image.pac);
    assert_eq!(manifest.len(), 2);
    assert!(matches!(
        parse_pac("pcnn-pac v1\nlayer 0 n four\n"),
        Err(Error::Format { offset: 2, .. })
    ));
}

#[test]
fn hex_dump_layout() {
    let bytes: Vec<u8> = (0..18).collect();
    assert_eq!(
        hex_dump(&bytes),
        "00000000: 00 01 02 03 04 05 06 07 08 09 0a 0b 0c 0d 0e 0f\n00000010: 10 11\n"
    );
}

#[test]
fn corrupted_images_are_rejected() {
    let image = pack(&model(4, 4, 3, 5, 43));
    let mut short = image.clone();
    short.weight_image.pop();
    assert!(matches!(unpack(&short), Err(Error::Format { .. })));
    let mut extra = image.clone();
    extra.pattern_image.push(0);
    assert!(matches!(unpack(&extra), Err(Error::Format { .. })));
    let mut offsets = image;
    offsets.pac.layers[0].pattern_offset = 2;
    assert!(matches!(unpack(&offsets), Err(Error::Format { .. })));
}
