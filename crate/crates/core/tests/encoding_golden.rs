//! Golden-file checks for the depth pseudo-color path. The expected bytes are
//! rebuilt here from the bundled table with independent arithmetic.

use aegis_core::encoding::{
    depth_from_le_bytes, depth_to_turbo, zero_mask_image, DepthMap, TurboTable, TURBO_TABLE_SRC,
};
use proptest::prelude::*;

/// Independent parse of the bundled table file.
fn raw_table() -> Vec<[f64; 3]> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/turbo_256.txt");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text, TURBO_TABLE_SRC, "bundled table drifted from the file");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

/// Reference pixel: clamp, scale to table coordinates, lerp, quantize.
fn reference_pixel(table: &[[f64; 3]], depth_m: f64, max_range: f64) -> [u8; 3] {
    let t = if !depth_m.is_finite() || depth_m < 0.0 {
        1.0
    } else {
        (depth_m / max_range).clamp(0.0, 1.0)
    };
    let x = t * 255.0;
    let i = (x.floor() as usize).min(254);
    let frac = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = table[i][c] + (table[i + 1][c] - table[i][c]) * frac;
        out[c] = (v * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    out
}

#[test]
fn ramp_image_matches_golden_bit_exact() {
    let table = raw_table();
    assert_eq!(table.len(), 256);
    // 16x16 ramp across [0, 6.4] m plus invalid values in the last row.
    let mut values = Vec::with_capacity(256);
    for i in 0..240 {
        values.push(i as f32 * 6.4 / 240.0);
    }
    for i in 0..16 {
        values.push(match i % 3 {
            0 => f32::NAN,
            1 => -0.5,
            _ => f32::INFINITY,
        });
    }
    let depth = DepthMap::new(16, 16, values.clone()).unwrap();
    let image = depth_to_turbo(&depth, 5.0).unwrap();

    let mut golden = Vec::with_capacity(3 * 256);
    for &v in &values {
        golden.extend_from_slice(&reference_pixel(&table, v as f64, 5.0));
    }
    assert_eq!(image.pixels, golden, "pixel bytes must match the golden");
}

#[test]
fn endpoints_hit_first_and_last_table_entries() {
    let table = raw_table();
    let depth = DepthMap::new(2, 1, vec![0.0, 5.0]).unwrap();
    let image = depth_to_turbo(&depth, 5.0).unwrap();
    let first: Vec<u8> = table[0].iter().map(|c| (c * 255.0).round() as u8).collect();
    let last: Vec<u8> = table[255].iter().map(|c| (c * 255.0).round() as u8).collect();
    assert_eq!(&image.pixels[0..3], first.as_slice());
    assert_eq!(&image.pixels[3..6], last.as_slice());
}

#[test]
fn determinism_same_bytes_in_same_bytes_out() {
    let bytes: Vec<u8> = (0..64u32)
        .flat_map(|i| ((i as f32) * 0.11).to_le_bytes())
        .collect();
    let a = depth_to_turbo(&depth_from_le_bytes(8, 8, &bytes).unwrap(), 5.0).unwrap();
    let b = depth_to_turbo(&depth_from_le_bytes(8, 8, &bytes).unwrap(), 5.0).unwrap();
    assert_eq!(a.pixels, b.pixels);
}

proptest! {
    /// Any depth at or beyond max range renders identically to max range.
    #[test]
    fn clipping_idempotence_beyond_range(depth in 5.0f64..100.0) {
        let at_range = depth_to_turbo(&DepthMap::new(1, 1, vec![5.0]).unwrap(), 5.0).unwrap();
        let beyond = depth_to_turbo(&DepthMap::new(1, 1, vec![depth as f32]).unwrap(), 5.0).unwrap();
        prop_assert_eq!(at_range.pixels, beyond.pixels);
    }

    /// Monotone parameterization: increasing t never repeats a pixel except at
    /// interpolation-duplicate table entries.
    #[test]
    fn distinct_depths_map_to_distinct_colors(i in 0usize..255) {
        let table = TurboTable::bundled();
        let a = table.sample_u8(i as f64 / 255.0);
        let b = table.sample_u8((i + 1) as f64 / 255.0);
        prop_assert_ne!(a, b);
    }
}

#[test]
fn zero_mask_has_zero_byte_sum_for_any_size() {
    for (w, h) in [(224, 224), (1, 1), (17, 3)] {
        let img = zero_mask_image(w, h).unwrap();
        assert_eq!(img.pixels.iter().map(|&b| b as u64).sum::<u64>(), 0);
        assert_eq!(img.pixels.len(), 3 * w * h);
    }
}
