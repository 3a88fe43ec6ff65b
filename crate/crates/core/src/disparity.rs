//! Per-pixel disparity map with an invalid sentinel.

/// Row-major float disparity map. Cells with no estimate (or no ground truth)
/// hold NaN internally; the accessors expose them as `None`.
#[derive(Debug, Clone)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    data: Vec<f32>,
}

impl DisparityMap {
    /// Map with every cell marked invalid.
    pub fn new_invalid(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "map dimensions must be >= 1");
        DisparityMap {
            width,
            height,
            data: vec![f32::NAN; width * height],
        }
    }

    /// Map filled with one disparity everywhere.
    pub fn new_filled(width: usize, height: usize, d: f32) -> Self {
        assert!(d.is_finite());
        let mut m = Self::new_invalid(width, height);
        m.data.fill(d);
        m
    }

    /// Disparity at `(x, y)`, or `None` for an invalid cell.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let v = self.data[y * self.width + x];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        !self.data[y * self.width + x].is_nan()
    }

    /// Stores a finite disparity. Panics on NaN; use `set_invalid` for that.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, d: f32) {
        assert!(d.is_finite(), "use set_invalid to mark a cell invalid");
        self.data[y * self.width + x] = d;
    }

    #[inline]
    pub fn set_invalid(&mut self, x: usize, y: usize) {
        self.data[y * self.width + x] = f32::NAN;
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|v| !v.is_nan()).count()
    }

    /// Iterates `(x, y, disparity)` over the valid cells.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(move |(i, &v)| (i % w, i / w, v))
    }
}
