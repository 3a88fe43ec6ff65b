//! 8-bit image buffer plus the pixel-level conversions the matcher needs:
//! grayscale reduction and bilinear resampling.

use crate::error::{Error, Result};

/// Row-major 8-bit image, 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl ImageBuffer {
    /// Wraps raw interleaved samples. Panics if the buffer length does not
    /// match `width * height * channels` or the channel count is not 1 or 3.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        assert_eq!(
            data.len(),
            width * height * channels,
            "buffer length mismatch"
        );
        ImageBuffer {
            width,
            height,
            channels,
            data,
        }
    }

    /// Constant-valued single-channel image.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, 1, vec![value; width * height])
    }

    /// Sample of channel `c` at `(x, y)`. No bounds check beyond debug asserts.
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// First-channel sample at `(x, y)`; the shorthand every gray-only path uses.
    #[inline]
    pub fn gray(&self, x: usize, y: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

/// Reduces an image to a single luma channel using the ITU-R 601 weights
/// 0.299/0.587/0.114, rounded to the nearest integer. Grayscale input is
/// returned unchanged.
pub fn to_grayscale(img: &ImageBuffer) -> ImageBuffer {
    if img.channels == 1 {
        return img.clone();
    }
    let mut data = Vec::with_capacity(img.width * img.height);
    for px in img.data.chunks_exact(3) {
        let luma = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        data.push(luma.round() as u8);
    }
    ImageBuffer::new(img.width, img.height, 1, data)
}

/// Resizes by a positive factor with bilinear interpolation over half-pixel
/// centers (output pixel `o` samples source coordinate `(o + 0.5)/factor - 0.5`,
/// clamped to the edge). The factor must yield integral output dimensions.
pub fn resize_bilinear(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::argument(format!(
            "resize factor must be positive, got {factor}"
        )));
    }
    let out_w = integral_dim(img.width, factor, "width")?;
    let out_h = integral_dim(img.height, factor, "height")?;

    let mut data = vec![0u8; out_w * out_h * img.channels];
    let fx = out_w as f64 / img.width as f64;
    let fy = out_h as f64 / img.height as f64;
    for oy in 0..out_h {
        let sy = (oy as f64 + 0.5) / fy - 0.5;
        let (y0, y1, ty) = clamped_lerp_coords(sy, img.height);
        for ox in 0..out_w {
            let sx = (ox as f64 + 0.5) / fx - 0.5;
            let (x0, x1, tx) = clamped_lerp_coords(sx, img.width);
            for c in 0..img.channels {
                let top = (1.0 - tx) * img.get(x0, y0, c) as f64 + tx * img.get(x1, y0, c) as f64;
                let bot = (1.0 - tx) * img.get(x0, y1, c) as f64 + tx * img.get(x1, y1, c) as f64;
                let v = (1.0 - ty) * top + ty * bot;
                data[(oy * out_w + ox) * img.channels + c] = v.round() as u8;
            }
        }
    }
    Ok(ImageBuffer::new(out_w, out_h, img.channels, data))
}

fn integral_dim(dim: usize, factor: f64, what: &str) -> Result<usize> {
    let exact = dim as f64 * factor;
    let rounded = exact.round();
    if (exact - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::argument(format!(
            "resize factor {factor} does not give an integral output {what} for {dim}"
        )));
    }
    Ok(rounded as usize)
}

/// Neighboring texel indices and interpolation weight for a source coordinate,
/// clamped so edge samples repeat the border texel.
#[inline]
fn clamped_lerp_coords(s: f64, len: usize) -> (usize, usize, f64) {
    let floor = s.floor();
    let t = s - floor;
    let i0 = (floor as i64).clamp(0, len as i64 - 1) as usize;
    let i1 = (floor as i64 + 1).clamp(0, len as i64 - 1) as usize;
    (i0, i1, t)
}
