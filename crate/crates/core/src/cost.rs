//! Matching costs between the center image and one surround view: block SAD
//! and the sampling-insensitive pixel dissimilarity, both organized as dense
//! per-disparity cost volumes with explicit out-of-bounds cells.

use rayon::prelude::*;

use crate::capture::ViewDirection;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Dense cost volume over `[d_min, d_max]`. Cells where the block or the
/// shifted correspondence would leave either image are out-of-bounds and read
/// back as `None` (stored as NaN, never visible to callers).
#[derive(Debug, Clone)]
pub struct CostVolume {
    pub width: usize,
    pub height: usize,
    pub d_min: i32,
    pub d_max: i32,
    data: Vec<f32>,
}

impl CostVolume {
    /// Volume with every cell out-of-bounds.
    pub fn new_oob(width: usize, height: usize, d_min: i32, d_max: i32) -> Result<CostVolume> {
        if width == 0 || height == 0 {
            return Err(Error::argument(
                "volume dimensions must be >= 1".to_string(),
            ));
        }
        if d_min < 0 || d_max < d_min {
            return Err(Error::argument(format!(
                "need 0 <= d_min <= d_max, got [{d_min}, {d_max}]"
            )));
        }
        let planes = (d_max - d_min + 1) as usize;
        Ok(CostVolume {
            width,
            height,
            d_min,
            d_max,
            data: vec![f32::NAN; width * height * planes],
        })
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    pub fn num_disparities(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    #[inline]
    fn index(&self, x: usize, y: usize, d: i32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        debug_assert!(d >= self.d_min && d <= self.d_max);
        (d - self.d_min) as usize * self.plane_len() + y * self.width + x
    }

    /// Cost at `(x, y, d)`, or `None` for an out-of-bounds cell.
    #[inline]
    pub fn get(&self, x: usize, y: usize, d: i32) -> Option<f32> {
        let v = self.data[self.index(x, y, d)];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Stores a finite cost.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, d: i32, cost: f32) {
        assert!(
            cost.is_finite(),
            "cost cells must be finite; absent cells stay out-of-bounds"
        );
        let i = self.index(x, y, d);
        self.data[i] = cost;
    }

    /// Iterates the costs at one pixel as `(d, Some(cost) | None)`.
    pub fn column(&self, x: usize, y: usize) -> impl Iterator<Item = (i32, Option<f32>)> + '_ {
        (self.d_min..=self.d_max).map(move |d| (d, self.get(x, y, d)))
    }

    fn same_shape(&self, other: &CostVolume) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.d_min == other.d_min
            && self.d_max == other.d_max
    }

    /// Errors unless all volumes share dimensions and disparity range.
    pub fn check_same_shape(volumes: &[&CostVolume]) -> Result<()> {
        let Some(first) = volumes.first() else {
            return Err(Error::argument("need at least one volume".to_string()));
        };
        if volumes.iter().any(|v| !first.same_shape(v)) {
            return Err(Error::argument(
                "volumes must share dimensions and disparity range".to_string(),
            ));
        }
        Ok(())
    }
}

fn check_pair(reference: &ImageBuffer, other: &ImageBuffer) -> Result<()> {
    if reference.channels != 1 || other.channels != 1 {
        return Err(Error::argument(
            "cost volumes expect grayscale images".to_string(),
        ));
    }
    if reference.width != other.width || reference.height != other.height {
        return Err(Error::argument("image pair dimensions differ".to_string()));
    }
    Ok(())
}

/// Block SAD volume: cost of assigning disparity `d` to center pixel `(u, v)`
/// is the sum of absolute intensity differences over the `(2 radius + 1)^2`
/// block between the reference and the view sampled at the direction's shift
/// (right view at `x - d`, left at `x + d`, top at `y + d`, bottom at `y - d`).
pub fn sad_volume(
    reference: &ImageBuffer,
    other: &ImageBuffer,
    dir: ViewDirection,
    radius: usize,
    d_min: i32,
    d_max: i32,
) -> Result<CostVolume> {
    check_pair(reference, other)?;
    let mut vol = CostVolume::new_oob(reference.width, reference.height, d_min, d_max)?;
    let (w, h) = (reference.width, reference.height);
    let plane = vol.plane_len();
    let r = radius as i64;

    vol.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(pi, slice)| {
            let d = d_min + pi as i32;
            let (sx, sy) = dir.shift(d as f64);
            let (sx, sy) = (sx as i64, sy as i64);

            // valid block centers: the reference block and its shifted copy must
            // both stay inside the frame
            let u_lo = r.max(r - sx);
            let u_hi = (w as i64 - 1 - r).min(w as i64 - 1 - r - sx);
            let v_lo = r.max(r - sy);
            let v_hi = (h as i64 - 1 - r).min(h as i64 - 1 - r - sy);
            if u_lo > u_hi || v_lo > v_hi {
                return;
            }

            // absolute difference plane, then block sums via a summed-area table
            let mut sat = vec![0i64; (w + 1) * (h + 1)];
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let diff =
                        if x + sx >= 0 && x + sx < w as i64 && y + sy >= 0 && y + sy < h as i64 {
                            (other.gray((x + sx) as usize, (y + sy) as usize) as i64
                                - reference.gray(x as usize, y as usize) as i64)
                                .abs()
                        } else {
                            0
                        };
                    let (xu, yu) = (x as usize, y as usize);
                    sat[(yu + 1) * (w + 1) + xu + 1] =
                        diff + sat[yu * (w + 1) + xu + 1] + sat[(yu + 1) * (w + 1) + xu]
                            - sat[yu * (w + 1) + xu];
                }
            }
            for v in v_lo..=v_hi {
                for u in u_lo..=u_hi {
                    let (x0, y0) = ((u - r) as usize, (v - r) as usize);
                    let (x1, y1) = ((u + r + 1) as usize, (v + r + 1) as usize);
                    let sum =
                        sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0]
                            + sat[y0 * (w + 1) + x0];
                    slice[v as usize * w + u as usize] = sum as f32;
                }
            }
        });
    Ok(vol)
}

/// Per-pixel brightness interval of an image: minimum and maximum over the
/// half-way interpolants `(I(q) + I(q + s)) / 2` for s in
/// {(0,0), (-1,0), (1,0), (0,-1), (0,1)}, skipping neighbors outside the frame.
#[derive(Debug, Clone)]
pub struct BtPlanes {
    pub width: usize,
    pub height: usize,
    imin: Vec<f32>,
    imax: Vec<f32>,
}

impl BtPlanes {
    pub fn build(img: &ImageBuffer) -> Result<BtPlanes> {
        if img.channels != 1 {
            return Err(Error::argument(
                "brightness intervals expect a grayscale image".to_string(),
            ));
        }
        let (w, h) = (img.width, img.height);
        let mut imin = vec![0.0f32; w * h];
        let mut imax = vec![0.0f32; w * h];
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let center = img.gray(x as usize, y as usize) as f32;
                let mut lo = center;
                let mut hi = center;
                for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let half = (center + img.gray(nx as usize, ny as usize) as f32) / 2.0;
                    lo = lo.min(half);
                    hi = hi.max(half);
                }
                imin[(y * w as i64 + x) as usize] = lo;
                imax[(y * w as i64 + x) as usize] = hi;
            }
        }
        Ok(BtPlanes {
            width: w,
            height: h,
            imin,
            imax,
        })
    }

    /// `(min, max)` interval at a pixel.
    #[inline]
    pub fn interval(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.imin[i], self.imax[i])
    }
}

/// Sampling-insensitive dissimilarity between a reference intensity and the
/// matched pixel's brightness interval. The standard form is zero inside the
/// interval and the distance to the nearer end outside it; `literal` swaps the
/// interval ends, reproducing an alternative printed form of the rule.
#[inline]
pub fn bt_dissimilarity(reference: f32, imin: f32, imax: f32, literal: bool) -> f32 {
    if literal {
        0.0f32.max(reference - imin).max(imax - reference)
    } else {
        0.0f32.max(reference - imax).max(imin - reference)
    }
}

/// Pixelwise dissimilarity volume: cost of assigning `d` to `(u, v)` is the
/// interval distance between the reference sample and the view pixel at the
/// direction's shift. Only the correspondence itself must be in frame; no
/// block support is required.
pub fn bt_volume(
    reference: &ImageBuffer,
    other: &ImageBuffer,
    dir: ViewDirection,
    d_min: i32,
    d_max: i32,
    literal: bool,
) -> Result<CostVolume> {
    check_pair(reference, other)?;
    let planes = BtPlanes::build(other)?;
    let mut vol = CostVolume::new_oob(reference.width, reference.height, d_min, d_max)?;
    let (w, h) = (reference.width, reference.height);
    let plane = vol.plane_len();
    vol.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(pi, slice)| {
            let d = d_min + pi as i32;
            let (sx, sy) = dir.shift(d as f64);
            let (sx, sy) = (sx as i64, sy as i64);
            for y in 0..h as i64 {
                let qy = y + sy;
                if qy < 0 || qy >= h as i64 {
                    continue;
                }
                for x in 0..w as i64 {
                    let qx = x + sx;
                    if qx < 0 || qx >= w as i64 {
                        continue;
                    }
                    let (lo, hi) = planes.interval(qx as usize, qy as usize);
                    let reference = reference.gray(x as usize, y as usize) as f32;
                    slice[(y * w as i64 + x) as usize] =
                        bt_dissimilarity(reference, lo, hi, literal);
                }
            }
        });
    Ok(vol)
}
