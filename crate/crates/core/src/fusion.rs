//! Merging per-view cost volumes into one: mean, minimum, or the outlier-
//! discarding heuristic. All rules operate per cell on whichever entries are
//! in bounds there; a cell with no in-bounds entry stays out-of-bounds.

use crate::cost::CostVolume;
use crate::error::{Error, Result};

/// How per-view costs are merged at each cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionStrategy {
    /// Arithmetic mean of the in-bounds entries.
    Mean,
    /// Minimum of the in-bounds entries.
    Min,
    /// Sort ascending, discard the largest of four, then either average the
    /// two smallest (when the third looks like an outlier: c3 > ratio * c2)
    /// or all three. Three entries use the same test without a discard; two
    /// fall back to the minimum; one passes through.
    Heuristic { ratio: f32 },
}

impl Default for FusionStrategy {
    fn default() -> Self {
        FusionStrategy::Heuristic { ratio: 3.0 }
    }
}

impl FusionStrategy {
    /// Parses `"mean"`, `"min"` or `"heuristic"` (the latter with the default
    /// outlier ratio).
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(FusionStrategy::Mean),
            "min" => Ok(FusionStrategy::Min),
            "heuristic" => Ok(FusionStrategy::default()),
            other => Err(Error::argument(format!(
                "unknown fusion strategy {other:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FusionStrategy::Mean => "mean",
            FusionStrategy::Min => "min",
            FusionStrategy::Heuristic { .. } => "heuristic",
        }
    }
}

/// Merges the in-bounds costs of one cell. `values` may be reordered.
/// Returns `None` when no entry is in bounds.
pub fn fuse_cell(strategy: FusionStrategy, values: &mut [f32]) -> Option<f32> {
    if values.is_empty() {
        return None;
    }
    match strategy {
        FusionStrategy::Mean => Some(values.iter().sum::<f32>() / values.len() as f32),
        FusionStrategy::Min => Some(values.iter().copied().fold(f32::INFINITY, f32::min)),
        FusionStrategy::Heuristic { ratio } => {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            match values {
                [v] => Some(*v),
                [a, b] => Some(a.min(*b)),
                rest => {
                    // with four entries the largest is discarded outright
                    let t = &rest[..3];
                    if t[2] > ratio * t[1] {
                        Some((t[0] + t[1]) / 2.0)
                    } else {
                        Some((t[0] + t[1] + t[2]) / 3.0)
                    }
                }
            }
        }
    }
}

/// Merges two or more same-shaped volumes cell by cell.
pub fn fuse(strategy: FusionStrategy, volumes: &[&CostVolume]) -> Result<CostVolume> {
    if volumes.len() < 2 {
        return Err(Error::argument(format!(
            "fusion needs at least two volumes, got {}",
            volumes.len()
        )));
    }
    fuse_any(strategy, volumes)
}

/// Like `fuse`, but a single volume passes through unchanged. This is what the
/// matchers use so a plain stereo pair needs no special casing.
pub fn fuse_any(strategy: FusionStrategy, volumes: &[&CostVolume]) -> Result<CostVolume> {
    CostVolume::check_same_shape(volumes)?;
    if volumes.len() == 1 {
        return Ok(volumes[0].clone());
    }
    let first = volumes[0];
    let mut out = CostVolume::new_oob(first.width, first.height, first.d_min, first.d_max)?;
    let mut cell = Vec::with_capacity(volumes.len());
    for d in first.d_min..=first.d_max {
        for y in 0..first.height {
            for x in 0..first.width {
                cell.clear();
                cell.extend(volumes.iter().filter_map(|v| v.get(x, y, d)));
                if let Some(c) = fuse_cell(strategy, &mut cell) {
                    out.set(x, y, d, c);
                }
            }
        }
    }
    Ok(out)
}

/// Mean fusion of two or more volumes.
pub fn fuse_mean(volumes: &[&CostVolume]) -> Result<CostVolume> {
    fuse(FusionStrategy::Mean, volumes)
}

/// Minimum fusion of two or more volumes.
pub fn fuse_min(volumes: &[&CostVolume]) -> Result<CostVolume> {
    fuse(FusionStrategy::Min, volumes)
}

/// Heuristic fusion of two or more volumes with the given outlier ratio.
pub fn fuse_heuristic(volumes: &[&CostVolume], ratio: f32) -> Result<CostVolume> {
    fuse(FusionStrategy::Heuristic { ratio }, volumes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn volumes_from_cell(costs: &[Option<f32>]) -> Vec<CostVolume> {
        costs
            .iter()
            .map(|c| {
                let mut v = CostVolume::new_oob(1, 1, 0, 0).unwrap();
                if let Some(c) = c {
                    v.set(0, 0, 0, *c);
                }
                v
            })
            .collect()
    }

    fn fuse_single_cell(strategy: FusionStrategy, costs: &[Option<f32>]) -> Option<f32> {
        let vols = volumes_from_cell(costs);
        let refs: Vec<&CostVolume> = vols.iter().collect();
        fuse(strategy, &refs).unwrap().get(0, 0, 0)
    }

    #[test]
    fn mean_and_min_of_four_costs() {
        let cell = [Some(4.0), Some(2.0), Some(7.0), Some(5.0)];
        assert_eq!(fuse_single_cell(FusionStrategy::Mean, &cell), Some(4.5));
        assert_eq!(fuse_single_cell(FusionStrategy::Min, &cell), Some(2.0));
    }

    #[test]
    fn heuristic_discards_the_largest_and_tests_the_third() {
        let h = FusionStrategy::Heuristic { ratio: 3.0 };
        // 10 > 3 * 2: third entry is an outlier, average the two smallest
        assert_eq!(
            fuse_single_cell(h, &[Some(1.0), Some(2.0), Some(10.0), Some(12.0)]),
            Some(1.5)
        );
        // 3 <= 3 * 2: keep all three
        assert_eq!(
            fuse_single_cell(h, &[Some(1.0), Some(2.0), Some(3.0), Some(12.0)]),
            Some(2.0)
        );
        // identical costs are a fixed point
        assert_eq!(fuse_single_cell(h, &[Some(6.0); 4]), Some(6.0));
    }

    #[test]
    fn out_of_bounds_entries_are_skipped() {
        let cell = [None, Some(3.0), Some(3.0), Some(3.0)];
        assert_eq!(fuse_single_cell(FusionStrategy::Mean, &cell), Some(3.0));
        assert_eq!(
            fuse_single_cell(FusionStrategy::default(), &cell),
            Some(3.0)
        );
        // two in-bounds entries: heuristic falls back to the minimum
        assert_eq!(
            fuse_single_cell(
                FusionStrategy::default(),
                &[None, None, Some(9.0), Some(4.0)]
            ),
            Some(4.0)
        );
        // one entry passes through
        assert_eq!(
            fuse_single_cell(FusionStrategy::default(), &[None, None, None, Some(9.0)]),
            Some(9.0)
        );
        // none stays out-of-bounds
        assert_eq!(
            fuse_single_cell(FusionStrategy::default(), &[None; 4]),
            None
        );
    }

    #[test]
    fn fusion_validates_its_inputs() {
        let a = CostVolume::new_oob(2, 2, 0, 3).unwrap();
        let b = CostVolume::new_oob(2, 2, 0, 4).unwrap();
        assert!(fuse(FusionStrategy::Mean, &[&a]).is_err());
        assert!(fuse(FusionStrategy::Mean, &[&a, &b]).is_err());
        let c = CostVolume::new_oob(3, 2, 0, 3).unwrap();
        assert!(fuse(FusionStrategy::Mean, &[&a, &c]).is_err());
    }

    /// The four-entry rule, written flat, as an independent reference.
    fn heuristic_reference(ratio: f32, mut c: [f32; 4]) -> f32 {
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if c[2] > ratio * c[1] {
            (c[0] + c[1]) / 2.0
        } else {
            (c[0] + c[1] + c[2]) / 3.0
        }
    }

    proptest! {
        #[test]
        fn heuristic_sits_between_min_and_mean(
            cells in proptest::collection::vec(
                proptest::array::uniform4(proptest::option::of(0.0f32..255.0)), 1..20),
        ) {
            for cell in &cells {
                let h = fuse_single_cell(FusionStrategy::default(), cell);
                let lo = fuse_single_cell(FusionStrategy::Min, cell);
                let hi = fuse_single_cell(FusionStrategy::Mean, cell);
                prop_assert_eq!(h.is_some(), lo.is_some());
                if let (Some(h), Some(lo), Some(hi)) = (h, lo, hi) {
                    prop_assert!(lo <= h + 1e-4 && h <= hi + 1e-4, "{lo} {h} {hi}");
                }
            }
        }

        #[test]
        fn four_entry_heuristic_matches_the_reference(
            c in [0.0f32..255.0, 0.0f32..255.0, 0.0f32..255.0, 0.0f32..255.0],
            ratio in 1.0f32..5.0,
        ) {
            let cell = [Some(c[0]), Some(c[1]), Some(c[2]), Some(c[3])];
            let got = fuse_single_cell(FusionStrategy::Heuristic { ratio }, &cell).unwrap();
            prop_assert_eq!(got, heuristic_reference(ratio, c));
        }

        #[test]
        fn fusion_is_permutation_invariant(
            c in [0.0f32..255.0, 0.0f32..255.0, 0.0f32..255.0, 0.0f32..255.0],
        ) {
            let cell = [Some(c[0]), Some(c[1]), Some(c[2]), Some(c[3])];
            let rev = [Some(c[3]), Some(c[2]), Some(c[1]), Some(c[0])];
            // min and heuristic sort internally, so they are exactly
            // invariant; the mean only up to summation order.
            for s in [FusionStrategy::Min, FusionStrategy::default()] {
                prop_assert_eq!(fuse_single_cell(s, &cell), fuse_single_cell(s, &rev));
            }
            let m1 = fuse_single_cell(FusionStrategy::Mean, &cell).unwrap();
            let m2 = fuse_single_cell(FusionStrategy::Mean, &rev).unwrap();
            prop_assert!((m1 - m2).abs() < 1e-3);
        }
    }
}
