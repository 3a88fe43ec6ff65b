//! Disparity-map quality metrics against ground truth, plus a jet colormap
//! rendering for visual inspection.

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Accuracy of an estimated map against ground truth. Error statistics
/// (`rms`, `avg_err`) cover pixels valid in both maps; the bad-pixel rates
/// additionally charge pixels the estimate left invalid, over all
/// ground-truth-valid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Root-mean-square disparity error.
    pub rms: f64,
    /// Mean absolute disparity error.
    pub avg_err: f64,
    /// Percentage of pixels off by more than 0.5 (or unestimated).
    pub bad05: f64,
    /// Percentage of pixels off by more than 1.0 (or unestimated).
    pub bad1: f64,
    /// Percentage of pixels off by more than 2.0 (or unestimated).
    pub bad2: f64,
    /// Pixels valid in both maps.
    pub evaluated_px: usize,
    /// Pixels without ground truth, ignored entirely.
    pub excluded_px: usize,
    /// Pixels with ground truth but no estimate.
    pub invalid_est_px: usize,
}

/// Compares an estimate against ground truth of the same dimensions. Errors
/// if the ground truth has no valid pixels at all; if only the estimate is
/// empty, the error statistics are zero and the bad rates are 100.
pub fn evaluate(est: &DisparityMap, gt: &DisparityMap) -> Result<EvalReport> {
    if est.width != gt.width || est.height != gt.height {
        return Err(Error::argument(format!(
            "disparity map sizes differ: {}x{} vs {}x{}",
            est.width, est.height, gt.width, gt.height
        )));
    }
    let mut evaluated = 0usize;
    let mut invalid_est = 0usize;
    let mut excluded = 0usize;
    let mut sum_sq = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut bad = [0usize; 3]; // thresholds 0.5, 1.0, 2.0
    for y in 0..gt.height {
        for x in 0..gt.width {
            let Some(truth) = gt.get(x, y) else {
                excluded += 1;
                continue;
            };
            let Some(value) = est.get(x, y) else {
                invalid_est += 1;
                for b in &mut bad {
                    *b += 1;
                }
                continue;
            };
            let err = f64::from(value) - f64::from(truth);
            evaluated += 1;
            sum_sq += err * err;
            sum_abs += err.abs();
            for (b, threshold) in bad.iter_mut().zip([0.5, 1.0, 2.0]) {
                if err.abs() > threshold {
                    *b += 1;
                }
            }
        }
    }
    let gt_valid = evaluated + invalid_est;
    if gt_valid == 0 {
        return Err(Error::argument("ground truth has no valid pixels"));
    }
    let percent = |count: usize| 100.0 * count as f64 / gt_valid as f64;
    let (rms, avg_err) = if evaluated > 0 {
        (
            (sum_sq / evaluated as f64).sqrt(),
            sum_abs / evaluated as f64,
        )
    } else {
        (0.0, 0.0)
    };
    Ok(EvalReport {
        rms,
        avg_err,
        bad05: percent(bad[0]),
        bad1: percent(bad[1]),
        bad2: percent(bad[2]),
        evaluated_px: evaluated,
        excluded_px: excluded,
        invalid_est_px: invalid_est,
    })
}

/// Relative improvement of `improved` over `baseline`, in percent:
/// `100 * (baseline - improved) / baseline`. `None` when the baseline is
/// zero.
pub fn improvement(baseline: f64, improved: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (baseline - improved) / baseline)
}

/// Renders a disparity map through the jet colormap, scaled so `d_max` is
/// the hot end. Invalid pixels come out black.
pub fn colorize(map: &DisparityMap, d_max: f32) -> Result<ImageBuffer> {
    if d_max.is_nan() || d_max <= 0.0 {
        return Err(Error::argument("colorize needs a positive d_max"));
    }
    let mut out = ImageBuffer::new(
        map.width,
        map.height,
        3,
        vec![0; map.width * map.height * 3],
    );
    for (x, y, d) in map.iter_valid() {
        let t = (d / d_max).clamp(0.0, 1.0);
        let channel = |center: f32| {
            let v = (1.5 - (4.0 * t - center).abs()).clamp(0.0, 1.0);
            (v * 255.0).round() as u8
        };
        out.set(x, y, 0, channel(3.0));
        out.set(x, y, 1, channel(2.0));
        out.set(x, y, 2, channel(1.0));
    }
    Ok(out)
}
