//! Spatial-map evaluation metrics.
//!
//! Consumes externally produced saliency/attention maps and scores them:
//! normalized entropy of the induced distribution (concentration), Pearson
//! correlation against a reference intensity map (alignment), and the
//! fraction of mass inside a boolean target mask. All three are invariant to
//! positive rescaling of the map.
//!
//! Maps travel either as a small binary grid (`SMAP` magic, little-endian
//! u32 width/height, then row-major f32 weights) or as CSV rows for
//! hand-written fixtures.

use thiserror::Error;

/// Binary grid file magic.
pub const MAP_MAGIC: &[u8; 4] = b"SMAP";

#[derive(Debug, Error)]
pub enum SaliencyError {
    #[error("map dimensions must be positive, got {width}x{height}")]
    BadDimensions { width: usize, height: usize },
    #[error("weight count {len} does not match {width}x{height}")]
    LengthMismatch {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("weights must be finite and >= 0 (offender at index {index}: {value})")]
    BadWeight { index: usize, value: f64 },
    #[error("map has no positive weight")]
    AllZero,
    #[error("dimension mismatch: map is {map_w}x{map_h}, other is {other_w}x{other_h}")]
    DimensionMismatch {
        map_w: usize,
        map_h: usize,
        other_w: usize,
        other_h: usize,
    },
    #[error("zero variance in {which} map: Pearson correlation undefined")]
    ZeroVariance { which: &'static str },
    #[error("failed to read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("map file malformed: {0}")]
    Malformed(String),
}

/// Nonnegative spatial weight grid with at least one positive entry.
#[derive(Debug, Clone)]
pub struct SpatialMap {
    pub width: usize,
    pub height: usize,
    weights: Vec<f64>,
}

impl SpatialMap {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self, SaliencyError> {
        if width == 0 || height == 0 {
            return Err(SaliencyError::BadDimensions { width, height });
        }
        if weights.len() != width * height {
            return Err(SaliencyError::LengthMismatch {
                len: weights.len(),
                width,
                height,
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(SaliencyError::BadWeight { index, value });
            }
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(SaliencyError::AllZero);
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Boolean target region; dimensions must match the map it scores.
#[derive(Debug, Clone)]
pub struct TargetMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl TargetMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, SaliencyError> {
        if width == 0 || height == 0 {
            return Err(SaliencyError::BadDimensions { width, height });
        }
        if bits.len() != width * height {
            return Err(SaliencyError::LengthMismatch {
                len: bits.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }
}

fn check_dims(map: &SpatialMap, w: usize, h: usize) -> Result<(), SaliencyError> {
    if map.width != w || map.height != h {
        return Err(SaliencyError::DimensionMismatch {
            map_w: map.width,
            map_h: map.height,
            other_w: w,
            other_h: h,
        });
    }
    Ok(())
}

/// Shannon entropy of the normalized map, divided by `ln(H*W)` so the result
/// lies in [0, 1]. A single-pixel map scores 0 by convention.
pub fn normalized_entropy(map: &SpatialMap) -> f64 {
    let n = map.width * map.height;
    if n == 1 {
        return 0.0;
    }
    let total = map.total();
    let mut entropy = 0.0;
    for &w in &map.weights {
        if w > 0.0 {
            let p = w / total;
            entropy -= p * p.ln();
        }
    }
    // Accumulated rounding can push a uniform map a few ulp past 1.
    (entropy / (n as f64).ln()).clamp(0.0, 1.0)
}

/// Sample Pearson correlation between the flattened pixel pairs.
pub fn pearson_alignment(map: &SpatialMap, reference: &SpatialMap) -> Result<f64, SaliencyError> {
    check_dims(map, reference.width, reference.height)?;
    let n = map.weights.len() as f64;
    let mean_a = map.total() / n;
    let mean_b = reference.total() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&a, &b) in map.weights.iter().zip(&reference.weights) {
        let da = a - mean_a;
        let db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 {
        return Err(SaliencyError::ZeroVariance { which: "first" });
    }
    if var_b == 0.0 {
        return Err(SaliencyError::ZeroVariance { which: "second" });
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// Fraction of total map mass covered by the mask.
pub fn attention_mass(map: &SpatialMap, mask: &TargetMask) -> Result<f64, SaliencyError> {
    check_dims(map, mask.width, mask.height)?;
    let total = map.total();
    let inside: f64 = map
        .weights
        .iter()
        .zip(&mask.bits)
        .filter(|(_, &m)| m)
        .map(|(&w, _)| w)
        .sum();
    Ok((inside / total).clamp(0.0, 1.0))
}

// ---- file formats ------------------------------------------------------------

/// Reads a grid from a binary `SMAP` file or, if the path ends in `.csv`, from
/// comma-separated rows.
pub fn read_grid(path: &std::path::Path) -> Result<(usize, usize, Vec<f64>), SaliencyError> {
    if path.extension().is_some_and(|e| e == "csv") {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row =
                row.map_err(|e| SaliencyError::Malformed(format!("line {}: {e}", lineno + 1)))?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(SaliencyError::Malformed(format!(
                        "line {}: ragged row width {} (expected {})",
                        lineno + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(SaliencyError::Malformed("empty csv".into()));
        }
        let height = rows.len();
        let width = rows[0].len();
        Ok((width, height, rows.into_iter().flatten().collect()))
    } else {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 12 || &bytes[0..4] != MAP_MAGIC {
            return Err(SaliencyError::Malformed("missing SMAP header".into()));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + 4 * width * height;
        if bytes.len() != expected {
            return Err(SaliencyError::Malformed(format!(
                "expected {expected} bytes for {width}x{height}, found {}",
                bytes.len()
            )));
        }
        let weights = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok((width, height, weights))
    }
}

pub fn read_map(path: &std::path::Path) -> Result<SpatialMap, SaliencyError> {
    let (width, height, weights) = read_grid(path)?;
    SpatialMap::new(width, height, weights)
}

/// Masks use the same grid containers; any nonzero weight marks a true bit.
pub fn read_mask(path: &std::path::Path) -> Result<TargetMask, SaliencyError> {
    let (width, height, weights) = read_grid(path)?;
    TargetMask::new(width, height, weights.into_iter().map(|w| w != 0.0).collect())
}

/// Writes the binary `SMAP` form.
pub fn write_map(path: &std::path::Path, map: &SpatialMap) -> Result<(), SaliencyError> {
    let mut bytes = Vec::with_capacity(12 + 4 * map.weights.len());
    bytes.extend_from_slice(MAP_MAGIC);
    bytes.extend_from_slice(&(map.width as u32).to_le_bytes());
    bytes.extend_from_slice(&(map.height as u32).to_le_bytes());
    for &w in &map.weights {
        bytes.extend_from_slice(&(w as f32).to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_map_has_unit_entropy() {
        let map = SpatialMap::new(8, 8, vec![1.0; 64]).unwrap();
        // Exactly 1: summation dust must not leak past the upper bound.
        assert_eq!(normalized_entropy(&map), 1.0);
        let map = SpatialMap::new(31, 7, vec![0.375; 217]).unwrap();
        let e = normalized_entropy(&map);
        assert!(e <= 1.0);
        assert_relative_eq!(e, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_hot_map_has_zero_entropy() {
        let mut w = vec![0.0; 64];
        w[13] = 42.0;
        let map = SpatialMap::new(8, 8, w).unwrap();
        assert_eq!(normalized_entropy(&map), 0.0);
    }

    #[test]
    fn two_by_two_entropy_matches_direct_sum() {
        let map = SpatialMap::new(2, 2, vec![1.0, 1.0, 2.0, 0.0]).unwrap();
        let expected =
            -(0.25_f64 * 0.25_f64.ln() + 0.25 * 0.25_f64.ln() + 0.5 * 0.5_f64.ln()) / 4.0_f64.ln();
        assert_relative_eq!(normalized_entropy(&map), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn single_pixel_map_scores_zero() {
        let map = SpatialMap::new(1, 1, vec![3.0]).unwrap();
        assert_eq!(normalized_entropy(&map), 0.0);
    }

    #[test]
    fn all_zero_map_is_rejected_at_construction() {
        assert!(matches!(
            SpatialMap::new(2, 2, vec![0.0; 4]),
            Err(SaliencyError::AllZero)
        ));
    }

    #[test]
    fn pearson_self_is_one_and_flip_is_minus_one() {
        let map = SpatialMap::new(3, 1, vec![1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(pearson_alignment(&map, &map).unwrap(), 1.0, epsilon = 1e-12);
        let flipped = SpatialMap::new(3, 1, vec![5.0 - 1.0, 5.0 - 2.0, 5.0 - 4.0]).unwrap();
        assert_relative_eq!(
            pearson_alignment(&map, &flipped).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_error_kinds_are_distinct() {
        let map = SpatialMap::new(3, 1, vec![1.0, 2.0, 4.0]).unwrap();
        let constant = SpatialMap::new(3, 1, vec![2.0, 2.0, 2.0]).unwrap();
        assert!(matches!(
            pearson_alignment(&map, &constant),
            Err(SaliencyError::ZeroVariance { which: "second" })
        ));
        let other = SpatialMap::new(1, 3, vec![1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            pearson_alignment(&map, &other),
            Err(SaliencyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn attention_mass_trivial_masks() {
        let map = SpatialMap::new(10, 10, vec![1.0; 100]).unwrap();
        let all = TargetMask::new(10, 10, vec![true; 100]).unwrap();
        let none = TargetMask::new(10, 10, vec![false; 100]).unwrap();
        assert_eq!(attention_mass(&map, &all).unwrap(), 1.0);
        assert_eq!(attention_mass(&map, &none).unwrap(), 0.0);
        let mut bits = vec![false; 100];
        for b in bits.iter_mut().take(17) {
            *b = true;
        }
        let mask = TargetMask::new(10, 10, bits).unwrap();
        assert_relative_eq!(attention_mass(&map, &mask).unwrap(), 0.17, epsilon = 1e-15);
    }

    #[test]
    fn binary_roundtrip_and_csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let map = SpatialMap::new(3, 2, vec![0.5, 1.0, 0.0, 2.0, 0.25, 4.0]).unwrap();
        let bin = dir.path().join("m.smap");
        write_map(&bin, &map).unwrap();
        let back = read_map(&bin).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        assert_eq!(back.weights(), map.weights());

        let csv = dir.path().join("m.csv");
        std::fs::write(&csv, "0.5, 1.0, 0.0\n2.0, 0.25, 4.0\n").unwrap();
        let from_csv = read_map(&csv).unwrap();
        assert_eq!(from_csv.weights(), map.weights());

        std::fs::write(&csv, "0.5, 1.0\n2.0\n").unwrap();
        assert!(matches!(
            read_map(&csv),
            Err(SaliencyError::Malformed(_))
        ));
    }
}
