//! Winner-take-all block matching over fused cost volumes, with parabolic
//! subpixel refinement.

use crate::capture::MultiscopicSet;
use crate::cost::{sad_volume, CostVolume};
use crate::disparity::DisparityMap;
use crate::error::Result;
use crate::fusion::{fuse_any, FusionStrategy};
use crate::image::to_grayscale;

/// Block-matcher configuration.
#[derive(Debug, Clone)]
pub struct BmParams {
    /// Block radius; the window spans `2 * radius + 1` pixels per side.
    pub radius: usize,
    pub d_min: i32,
    pub d_max: i32,
    pub fusion: FusionStrategy,
    /// Refine integer winners with a parabola fit over the neighboring costs.
    pub subpixel: bool,
}

impl Default for BmParams {
    fn default() -> Self {
        BmParams {
            radius: 5, // 11x11 block
            d_min: 1,
            d_max: 60,
            fusion: FusionStrategy::default(),
            subpixel: true,
        }
    }
}

/// Picks the lowest-cost disparity per pixel. Out-of-bounds cells are skipped,
/// ties break toward the smaller disparity, and a pixel with no in-bounds cell
/// stays invalid.
pub fn wta(volume: &CostVolume) -> DisparityMap {
    let mut map = DisparityMap::new_invalid(volume.width, volume.height);
    for y in 0..volume.height {
        for x in 0..volume.width {
            let mut best: Option<(f32, i32)> = None;
            for (d, cost) in volume.column(x, y) {
                let Some(cost) = cost else { continue };
                if best.is_none_or(|(bc, _)| cost < bc) {
                    best = Some((cost, d));
                }
            }
            if let Some((_, d)) = best {
                map.set(x, y, d as f32);
            }
        }
    }
    map
}

/// Subpixel offset of the parabola through the costs at `d - 1`, `d`, `d + 1`.
/// Returns `None` (keep the integer winner) when the curvature is not positive.
#[inline]
pub fn parabola_offset(before: f32, at: f32, after: f32) -> Option<f32> {
    let denominator = 2.0 * before + 2.0 * after - 4.0 * at;
    if denominator <= 0.0 {
        return None;
    }
    Some(((before - after) / denominator).clamp(-0.5, 0.5))
}

/// Refines integer disparities by fitting a parabola over the cost at each
/// winner and its two neighbors. Winners at the range ends, next to an
/// out-of-bounds cell, or on a non-convex cost triple keep their integer value.
pub fn subpixel_refine(volume: &CostVolume, integer: &DisparityMap) -> DisparityMap {
    let mut out = integer.clone();
    for (x, y, d) in integer.iter_valid() {
        let d = d as i32;
        if d - 1 < volume.d_min || d + 1 > volume.d_max {
            continue;
        }
        let (Some(before), Some(at), Some(after)) = (
            volume.get(x, y, d - 1),
            volume.get(x, y, d),
            volume.get(x, y, d + 1),
        ) else {
            continue;
        };
        if let Some(offset) = parabola_offset(before, at, after) {
            out.set(x, y, d as f32 + offset);
        }
    }
    out
}

/// Full block-matching pipeline: one SAD volume per surround view against the
/// grayscale center, fused cell by cell, winner-take-all, then optional
/// subpixel refinement.
pub fn match_bm(set: &MultiscopicSet, params: &BmParams) -> Result<DisparityMap> {
    let center = to_grayscale(&set.center);
    let volumes: Vec<CostVolume> = set
        .surround
        .iter()
        .map(|(dir, img)| {
            sad_volume(
                &center,
                &to_grayscale(img),
                *dir,
                params.radius,
                params.d_min,
                params.d_max,
            )
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&CostVolume> = volumes.iter().collect();
    let fused = fuse_any(params.fusion, &refs)?;
    let integer = wta(&fused);
    if params.subpixel {
        Ok(subpixel_refine(&fused, &integer))
    } else {
        Ok(integer)
    }
}
