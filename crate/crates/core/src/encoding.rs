//! Deterministic pseudo-color input formatting.
//!
//! Depth maps are clipped to a maximum range (default 5 m) and mapped through
//! the 256-entry Turbo lookup table (shipped verbatim in
//! `data/turbo_256.txt`, linearly interpolated) so an RGB-trained encoder can
//! consume them. Disabled modalities are stood in for by all-zero images of
//! the same size. Thermal frames already arrive pseudo-colored from the
//! camera and are only cropped/resized here.
//!
//! Buffers are packed row-major: `f32` depths in meters, 8-bit RGB triples
//! out. Same input bytes always produce the same output bytes.

use thiserror::Error;

/// The published 256-entry Turbo table, bundled as a data file.
pub const TURBO_TABLE_SRC: &str = include_str!("../data/turbo_256.txt");

/// Negative or non-finite depth values count as invalid samples and render
/// as maximum range (far). An exact zero is a valid zero-distance reading.
pub const DEFAULT_MAX_RANGE_M: f64 = 5.0;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    BadDimensions { width: usize, height: usize },
    #[error("buffer length {len} does not match {width}x{height}")]
    LengthMismatch {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("max_range must be > 0, got {0}")]
    BadMaxRange(f64),
    #[error("crop rectangle {0} exceeds source image bounds")]
    BadCrop(String),
}

/// Single-channel depth image in meters.
#[derive(Debug, Clone)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self, EncodingError> {
        if width == 0 || height == 0 {
            return Err(EncodingError::BadDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(EncodingError::LengthMismatch {
                len: values.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }
}

/// Packed row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoColorImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl PseudoColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, EncodingError> {
        if width == 0 || height == 0 {
            return Err(EncodingError::BadDimensions { width, height });
        }
        if pixels.len() != 3 * width * height {
            return Err(EncodingError::LengthMismatch {
                len: pixels.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// The parsed Turbo lookup table.
#[derive(Debug, Clone)]
pub struct TurboTable {
    entries: Vec<[f64; 3]>,
}

impl TurboTable {
    /// Parses the bundled table (or any file of the same "r g b" row format).
    pub fn parse(src: &str) -> Self {
        let entries: Vec<[f64; 3]> = src
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut it = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
                [
                    it.next().unwrap(),
                    it.next().unwrap(),
                    it.next().unwrap(),
                ]
            })
            .collect();
        assert_eq!(entries.len(), 256, "turbo table must have 256 entries");
        Self { entries }
    }

    pub fn bundled() -> &'static TurboTable {
        use std::sync::OnceLock;
        static TABLE: OnceLock<TurboTable> = OnceLock::new();
        TABLE.get_or_init(|| TurboTable::parse(TURBO_TABLE_SRC))
    }

    pub fn entry(&self, index: usize) -> [f64; 3] {
        self.entries[index]
    }

    /// Linear interpolation between adjacent table entries at `t` in [0, 1].
    pub fn sample(&self, t: f64) -> [f64; 3] {
        let t = t.clamp(0.0, 1.0);
        let x = t * 255.0;
        let i = (x.floor() as usize).min(254);
        let frac = x - i as f64;
        let lo = self.entries[i];
        let hi = self.entries[i + 1];
        [
            lo[0] + (hi[0] - lo[0]) * frac,
            lo[1] + (hi[1] - lo[1]) * frac,
            lo[2] + (hi[2] - lo[2]) * frac,
        ]
    }

    /// Sample quantized to 8-bit channels.
    pub fn sample_u8(&self, t: f64) -> [u8; 3] {
        self.sample(t).map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
    }
}

/// Maps a depth image to a Turbo pseudo-color image.
///
/// `t = clamp(depth / max_range, 0, 1)`; invalid samples (non-finite or
/// negative) map to `t = 1`.
pub fn depth_to_turbo(depth: &DepthMap, max_range: f64) -> Result<PseudoColorImage, EncodingError> {
    if max_range.is_nan() || max_range <= 0.0 {
        return Err(EncodingError::BadMaxRange(max_range));
    }
    let table = TurboTable::bundled();
    let mut pixels = Vec::with_capacity(3 * depth.values.len());
    for &v in &depth.values {
        let v = v as f64;
        let t = if !v.is_finite() || v < 0.0 {
            1.0
        } else {
            (v / max_range).clamp(0.0, 1.0)
        };
        pixels.extend_from_slice(&table.sample_u8(t));
    }
    PseudoColorImage::new(depth.width, depth.height, pixels)
}

/// All-zero stand-in image for a disabled modality.
pub fn zero_mask_image(width: usize, height: usize) -> Result<PseudoColorImage, EncodingError> {
    if width == 0 || height == 0 {
        return Err(EncodingError::BadDimensions { width, height });
    }
    Ok(PseudoColorImage {
        width,
        height,
        pixels: vec![0; 3 * width * height],
    })
}

/// Crop rectangle in source pixel coordinates.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Pass-through path for camera-supplied pseudo-color frames (e.g. thermal):
/// crop to a configured rectangle, then nearest-neighbor resize.
pub fn crop_and_resize(
    image: &PseudoColorImage,
    crop: CropRect,
    out_width: usize,
    out_height: usize,
) -> Result<PseudoColorImage, EncodingError> {
    if out_width == 0 || out_height == 0 {
        return Err(EncodingError::BadDimensions {
            width: out_width,
            height: out_height,
        });
    }
    if crop.width == 0
        || crop.height == 0
        || crop.x + crop.width > image.width
        || crop.y + crop.height > image.height
    {
        return Err(EncodingError::BadCrop(format!(
            "{}x{}+{}+{} on {}x{}",
            crop.width, crop.height, crop.x, crop.y, image.width, image.height
        )));
    }
    let mut pixels = Vec::with_capacity(3 * out_width * out_height);
    for oy in 0..out_height {
        let sy = crop.y + (oy * crop.height) / out_height;
        for ox in 0..out_width {
            let sx = crop.x + (ox * crop.width) / out_width;
            pixels.extend_from_slice(&image.pixel(sx, sy));
        }
    }
    PseudoColorImage::new(out_width, out_height, pixels)
}

// ---- raw buffer I/O (CLI + golden tests) ------------------------------------

/// Reads a packed little-endian `f32` row-major depth buffer.
pub fn depth_from_le_bytes(
    width: usize,
    height: usize,
    bytes: &[u8],
) -> Result<DepthMap, EncodingError> {
    if bytes.len() != 4 * width * height {
        return Err(EncodingError::LengthMismatch {
            len: bytes.len(),
            width,
            height,
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DepthMap::new(width, height, values)
}
