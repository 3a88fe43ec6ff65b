//! Disparity estimation as energy minimization with an explicit occlusion
//! label, optimized by expansion moves.
//!
//! Every pixel carries either a disparity label or `OCCLUDED`. The energy is
//! the fused sampling-insensitive matching cost of each labeled pixel, a
//! constant penalty `k` per occluded pixel, and a truncated-linear smoothness
//! term between 4-neighbors whose weight drops from `lambda1` to `lambda2`
//! wherever the images show intensity variation of at least `theta` around
//! the pair.
//!
//! A single expansion move lets every pixel keep its label, switch to the
//! proposed disparity, or become occluded. Because switching to occlusion is
//! free of smoothness cost, the keep/keep interaction of the binary move
//! encoding is repulsive and the move energy is not submodular, so it cannot
//! be minimized by one plain min cut. The move is instead solved with roof
//! duality ([`crate::qpbo`]): decided variables are optimal, small undecided
//! components are enumerated exactly, and anything larger falls back to the
//! current labels — which keeps every accepted move energy-non-increasing,
//! and makes the move exactly optimal whenever the components stay within
//! the enumeration cap.

use crate::capture::MultiscopicSet;
use crate::cost::{bt_volume, CostVolume};
use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::fusion::{fuse_any, FusionStrategy};
use crate::image::{resize_bilinear, to_grayscale, ImageBuffer};
use crate::qpbo::Qpbo;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Label meaning "not matched in any view".
pub const OCCLUDED: i32 = -1;

/// Energies are held as integers in steps of 1/SCALE. A power of two keeps
/// the conversion back to `f64` lossless.
const SCALE: i64 = 16;

/// Placeholder cost of the one infeasible state in the two-variable pixel
/// encoding. Far above any reachable energy, far below `i64` overflow even
/// when summed over megapixel graphs.
const LARGE: i64 = 1 << 40;

/// Undecided components up to this many variables are minimized by
/// enumeration; larger ones keep their current labels.
const ENUM_CAP: u32 = 16;

/// Graph-cuts matcher configuration.
#[derive(Debug, Clone)]
pub struct GcParams {
    /// Occlusion penalty per pixel.
    pub k: f32,
    /// Smoothness weight where the images are locally flat.
    pub lambda1: f32,
    /// Smoothness weight across intensity edges.
    pub lambda2: f32,
    /// Intensity-variation threshold separating the two weights.
    pub theta: f32,
    /// Truncation of the label difference in the smoothness term.
    pub d_cutoff: i32,
    pub d_min: i32,
    pub d_max: i32,
    /// Integer upsampling factor: match at enlarged resolution and range,
    /// then divide the labels back, yielding fractional disparities.
    pub upscale: u32,
    /// Upper bound on full passes over the label set.
    pub max_sweeps: u32,
    /// Seed for the per-sweep label visiting order.
    pub seed: u64,
    pub fusion: FusionStrategy,
    /// Swap the interval ends of the sampling-insensitive cost.
    pub bt_literal: bool,
}

impl Default for GcParams {
    fn default() -> Self {
        GcParams {
            k: 10.0,
            lambda1: 9.0,
            lambda2: 3.0,
            theta: 8.0,
            d_cutoff: 5,
            d_min: 1,
            d_max: 60,
            upscale: 1,
            max_sweeps: 4,
            seed: 1,
            fusion: FusionStrategy::default(),
            bt_literal: false,
        }
    }
}

/// Per-pixel disparity labels with [`OCCLUDED`] as the opt-out state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    labels: Vec<i32>,
}

impl Labeling {
    pub fn new_occluded(width: usize, height: usize) -> Labeling {
        Labeling {
            width,
            height,
            labels: vec![OCCLUDED; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: i32) {
        assert!(
            label == OCCLUDED || label >= 0,
            "labels are disparities or OCCLUDED"
        );
        self.labels[y * self.width + x] = label;
    }

    pub fn occluded_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OCCLUDED).count()
    }

    /// Converts labels to disparities, dividing by `divisor` (the upsampling
    /// factor); occluded pixels become invalid.
    pub fn to_disparity(&self, divisor: f64) -> DisparityMap {
        let mut map = DisparityMap::new_invalid(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let label = self.get(x, y);
                if label != OCCLUDED {
                    map.set(x, y, (label as f64 / divisor) as f32);
                }
            }
        }
        map
    }
}

/// The labeling energy: fused per-view matching costs, the occlusion
/// penalty, and the adaptive smoothness term, all in fixed-point integers so
/// move optimality can be checked exactly.
pub struct EnergyModel {
    center: ImageBuffer,
    views: Vec<(crate::capture::ViewDirection, ImageBuffer)>,
    fused: CostVolume,
    k_int: i64,
    lambda1: f32,
    lambda2: f32,
    theta: f32,
    d_cutoff: i32,
}

impl EnergyModel {
    pub fn new(set: &MultiscopicSet, params: &GcParams) -> Result<EnergyModel> {
        for (name, value) in [
            ("k", params.k),
            ("lambda1", params.lambda1),
            ("lambda2", params.lambda2),
            ("theta", params.theta),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::argument(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if params.d_cutoff < 0 {
            return Err(Error::argument("d_cutoff must be non-negative"));
        }
        let center = to_grayscale(&set.center);
        let views: Vec<_> = set
            .surround
            .iter()
            .map(|(dir, img)| (*dir, to_grayscale(img)))
            .collect();
        let volumes: Vec<CostVolume> = views
            .iter()
            .map(|(dir, img)| {
                bt_volume(
                    &center,
                    img,
                    *dir,
                    params.d_min,
                    params.d_max,
                    params.bt_literal,
                )
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&CostVolume> = volumes.iter().collect();
        let fused = fuse_any(params.fusion, &refs)?;
        Ok(EnergyModel {
            center,
            views,
            fused,
            k_int: (params.k as f64 * SCALE as f64).round() as i64,
            lambda1: params.lambda1,
            lambda2: params.lambda2,
            theta: params.theta,
            d_cutoff: params.d_cutoff,
        })
    }

    pub fn width(&self) -> usize {
        self.fused.width
    }

    pub fn height(&self) -> usize {
        self.fused.height
    }

    pub fn d_min(&self) -> i32 {
        self.fused.d_min
    }

    pub fn d_max(&self) -> i32 {
        self.fused.d_max
    }

    pub fn occlusion_penalty_int(&self) -> i64 {
        self.k_int
    }

    /// Fixed-point matching cost of labeling `(x, y)` with disparity `d`, or
    /// `None` if no view sees the pixel at that disparity.
    pub fn data_int(&self, x: usize, y: usize, d: i32) -> Option<i64> {
        self.fused
            .get(x, y, d)
            .map(|c| (c as f64 * SCALE as f64).round() as i64)
    }

    /// Fixed-point smoothness between neighbors `p` and `q` labeled `dp` and
    /// `dq`. Occluded pixels interact with nobody. The weight is `lambda1`
    /// unless the center pair or any view's correspondence pair (each pixel
    /// looked up under its own label; pairs leaving the frame are skipped)
    /// differs by at least `theta`.
    pub fn smooth_int(&self, p: (usize, usize), q: (usize, usize), dp: i32, dq: i32) -> i64 {
        if dp == OCCLUDED || dq == OCCLUDED {
            return 0;
        }
        let step = (dp - dq).abs().min(self.d_cutoff);
        if step == 0 {
            return 0;
        }
        let mut max_diff =
            (i32::from(self.center.gray(p.0, p.1)) - i32::from(self.center.gray(q.0, q.1))).abs();
        for (dir, img) in &self.views {
            let (sx, sy) = dir.shift(f64::from(dp));
            let pp = (p.0 as i64 + sx as i64, p.1 as i64 + sy as i64);
            let (sx, sy) = dir.shift(f64::from(dq));
            let qq = (q.0 as i64 + sx as i64, q.1 as i64 + sy as i64);
            if img.in_bounds(pp.0, pp.1) && img.in_bounds(qq.0, qq.1) {
                let diff = (i32::from(img.gray(pp.0 as usize, pp.1 as usize))
                    - i32::from(img.gray(qq.0 as usize, qq.1 as usize)))
                .abs();
                max_diff = max_diff.max(diff);
            }
        }
        let weight = if (max_diff as f32) < self.theta {
            self.lambda1
        } else {
            self.lambda2
        };
        (weight as f64 * step as f64 * SCALE as f64).round() as i64
    }

    /// Total fixed-point energy of a labeling. Every non-occluded label must
    /// have data support; the matchers only ever assign such labels.
    pub fn energy_int(&self, labeling: &Labeling) -> i64 {
        assert_eq!(
            (labeling.width, labeling.height),
            (self.width(), self.height())
        );
        let mut energy = 0;
        for y in 0..self.height() {
            for x in 0..self.width() {
                let d = labeling.get(x, y);
                if d == OCCLUDED {
                    energy += self.k_int;
                } else {
                    energy += self
                        .data_int(x, y, d)
                        .unwrap_or_else(|| panic!("label {d} at ({x},{y}) lacks data support"));
                }
                if x + 1 < self.width() {
                    energy += self.smooth_int((x, y), (x + 1, y), d, labeling.get(x + 1, y));
                }
                if y + 1 < self.height() {
                    energy += self.smooth_int((x, y), (x, y + 1), d, labeling.get(x, y + 1));
                }
            }
        }
        energy
    }

    /// Energy in real units.
    pub fn energy(&self, labeling: &Labeling) -> f64 {
        self.energy_int(labeling) as f64 / SCALE as f64
    }
}

/// Binary move variables of one pixel. `drop` = 1 abandons the current
/// disparity label, `take` = 1 adopts the proposal; states compose to
/// keep / occluded / proposal, with (drop = 0, take = 1) blocked by `LARGE`.
#[derive(Clone, Copy, Default)]
struct PixelVars {
    drop: Option<u32>,
    take: Option<u32>,
}

/// One expansion move: every pixel chooses between its current label, the
/// proposal `alpha`, and occlusion, jointly minimizing the energy. Returns
/// `true` when the energy strictly decreased.
pub fn expand(model: &EnergyModel, labeling: &mut Labeling, alpha: i32) -> bool {
    assert!(
        alpha >= model.d_min() && alpha <= model.d_max(),
        "proposal {alpha} outside [{}, {}]",
        model.d_min(),
        model.d_max()
    );
    let (w, h) = (model.width(), model.height());
    let mut vars = vec![PixelVars::default(); w * h];
    let mut count = 0u32;
    for y in 0..h {
        for x in 0..w {
            let cur = labeling.get(x, y);
            let available = model.data_int(x, y, alpha).is_some();
            let pv = &mut vars[y * w + x];
            if cur != OCCLUDED && cur != alpha {
                pv.drop = Some(count);
                count += 1;
            }
            if available {
                pv.take = Some(count);
                count += 1;
            }
        }
    }

    let mut problem = Qpbo::new(count as usize);
    let mut default = vec![false; count as usize];
    for y in 0..h {
        for x in 0..w {
            let cur = labeling.get(x, y);
            let pv = vars[y * w + x];
            match (pv.drop, pv.take) {
                (Some(u), Some(t)) => {
                    let d_cur = model
                        .data_int(x, y, cur)
                        .expect("current label has support");
                    let d_alpha = model.data_int(x, y, alpha).expect("take variable exists");
                    problem
                        .add_pairwise(
                            u as usize,
                            t as usize,
                            [[d_cur, LARGE], [model.k_int, d_alpha]],
                        )
                        .expect("distinct variables");
                }
                (Some(u), None) => {
                    let d_cur = model
                        .data_int(x, y, cur)
                        .expect("current label has support");
                    problem.add_unary(u as usize, d_cur, model.k_int);
                }
                (None, Some(t)) => {
                    let d_alpha = model.data_int(x, y, alpha).expect("take variable exists");
                    problem.add_unary(t as usize, model.k_int, d_alpha);
                    // Keeping the current label means take = 1 here.
                    default[t as usize] = cur == alpha;
                }
                // Occluded with the proposal unavailable: nothing to decide.
                (None, None) => {}
            }
        }
    }

    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                add_pair_smoothness(
                    model,
                    labeling,
                    alpha,
                    &vars,
                    (x, y),
                    (x + 1, y),
                    &mut problem,
                );
            }
            if y + 1 < h {
                add_pair_smoothness(
                    model,
                    labeling,
                    alpha,
                    &vars,
                    (x, y),
                    (x, y + 1),
                    &mut problem,
                );
            }
        }
    }

    let solution = problem.solve_complete(&default, ENUM_CAP);
    let mut moved = labeling.clone();
    for y in 0..h {
        for x in 0..w {
            let cur = labeling.get(x, y);
            let pv = vars[y * w + x];
            let next = match (pv.drop, pv.take) {
                (Some(u), Some(t)) => {
                    let (dropped, taken) = (solution[u as usize], solution[t as usize]);
                    debug_assert!(dropped || !taken, "infeasible move state at ({x},{y})");
                    match (dropped, taken) {
                        (true, true) => alpha,
                        (true, false) => OCCLUDED,
                        _ => cur,
                    }
                }
                (Some(u), None) => {
                    if solution[u as usize] {
                        OCCLUDED
                    } else {
                        cur
                    }
                }
                (None, Some(t)) => {
                    if solution[t as usize] {
                        alpha
                    } else {
                        OCCLUDED
                    }
                }
                (None, None) => OCCLUDED,
            };
            moved.set(x, y, next);
        }
    }

    let before = model.energy_int(labeling);
    let after = model.energy_int(&moved);
    debug_assert!(
        after <= before,
        "expansion move raised the energy: {before} -> {after}"
    );
    if after <= before {
        *labeling = moved;
    }
    after < before
}

/// Installs the smoothness of one neighbor pair over the move variables.
/// Only three interactions carry cost: both pixels keeping non-proposal
/// labels, one keeping while the other takes the proposal, and vice versa
/// (proposal against proposal is zero distance, occlusion interacts with
/// nothing). The keep/keep term rewards breaking the pair apart, which is
/// the non-submodular part that forces roof duality.
fn add_pair_smoothness(
    model: &EnergyModel,
    labeling: &Labeling,
    alpha: i32,
    vars: &[PixelVars],
    p: (usize, usize),
    q: (usize, usize),
    problem: &mut Qpbo,
) {
    let vp = vars[p.1 * model.width() + p.0];
    let vq = vars[q.1 * model.width() + q.0];
    let cur_p = labeling.get(p.0, p.1);
    let cur_q = labeling.get(q.0, q.1);
    if let (Some(pd), Some(qd)) = (vp.drop, vq.drop) {
        let v = model.smooth_int(p, q, cur_p, cur_q);
        if v > 0 {
            problem
                .add_pairwise(pd as usize, qd as usize, [[v, 0], [0, 0]])
                .unwrap();
        }
    }
    if let (Some(pd), Some(qt)) = (vp.drop, vq.take) {
        let v = model.smooth_int(p, q, cur_p, alpha);
        if v > 0 {
            problem
                .add_pairwise(pd as usize, qt as usize, [[0, v], [0, 0]])
                .unwrap();
        }
    }
    if let (Some(pt), Some(qd)) = (vp.take, vq.drop) {
        let v = model.smooth_int(p, q, alpha, cur_q);
        if v > 0 {
            problem
                .add_pairwise(pt as usize, qd as usize, [[0, 0], [v, 0]])
                .unwrap();
        }
    }
}

/// Runs expansion sweeps from an all-occluded start until a full sweep stops
/// improving or the sweep budget runs out. Returns the labeling and the
/// fixed-point energy after every move (the initial energy first).
fn run_expansion(model: &EnergyModel, params: &GcParams) -> (Labeling, Vec<i64>) {
    let mut labeling = Labeling::new_occluded(model.width(), model.height());
    let mut trace = vec![model.energy_int(&labeling)];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut labels: Vec<i32> = (model.d_min()..=model.d_max()).collect();
    for _ in 0..params.max_sweeps {
        labels.shuffle(&mut rng);
        let mut improved = false;
        for &alpha in &labels {
            improved |= expand(model, &mut labeling, alpha);
            trace.push(model.energy_int(&labeling));
        }
        if !improved {
            break;
        }
    }
    (labeling, trace)
}

/// Graph-cuts disparity estimation. Occluded pixels come back invalid.
pub fn match_gc(set: &MultiscopicSet, params: &GcParams) -> Result<DisparityMap> {
    Ok(match_gc_trace(set, params)?.0)
}

/// Like [`match_gc`], additionally returning the fixed-point energy after
/// every expansion move (leading with the starting energy). The trace is
/// non-increasing by construction.
pub fn match_gc_trace(set: &MultiscopicSet, params: &GcParams) -> Result<(DisparityMap, Vec<i64>)> {
    if params.upscale == 0 {
        return Err(Error::argument("upscale must be at least 1"));
    }
    if params.max_sweeps == 0 {
        return Err(Error::argument("max_sweeps must be at least 1"));
    }
    if params.upscale == 1 {
        let model = EnergyModel::new(set, params)?;
        let (labeling, trace) = run_expansion(&model, params);
        return Ok((labeling.to_disparity(1.0), trace));
    }

    // Work at enlarged resolution and label range, then fold back: labels
    // divide by the factor and the map is read at the enlarged pixel nearest
    // to each original pixel center.
    let factor = params.upscale;
    let scale = |img: &ImageBuffer| resize_bilinear(img, f64::from(factor));
    let scaled = MultiscopicSet::new(
        scale(&set.center)?,
        set.surround
            .iter()
            .map(|(dir, img)| Ok((*dir, scale(img)?)))
            .collect::<Result<Vec<_>>>()?,
        set.baseline_mm,
        set.focal_px.map(|f| f * f64::from(factor)),
    )?;
    let inner = GcParams {
        d_min: params.d_min * factor as i32,
        d_max: params.d_max * factor as i32,
        upscale: 1,
        ..params.clone()
    };
    let model = EnergyModel::new(&scaled, &inner)?;
    let (labeling, trace) = run_expansion(&model, &inner);

    let mut map = DisparityMap::new_invalid(set.width(), set.height());
    let f = factor as usize;
    for y in 0..set.height() {
        for x in 0..set.width() {
            let sx = (x * f + f / 2).min(labeling.width - 1);
            let sy = (y * f + f / 2).min(labeling.height - 1);
            let label = labeling.get(sx, sy);
            if label != OCCLUDED {
                map.set(x, y, label as f32 / factor as f32);
            }
        }
    }
    Ok((map, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{render_multiscopic, Layer, SyntheticScene, Texture, ViewDirection};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn small_params(d_min: i32, d_max: i32) -> GcParams {
        GcParams {
            d_min,
            d_max,
            ..Default::default()
        }
    }

    fn background_scene(width: u32, height: u32, disparity: f32, seed: u64) -> SyntheticScene {
        SyntheticScene {
            width: width as usize,
            height: height as usize,
            d_min: 0.0,
            d_max: disparity + 2.0,
            layers: vec![Layer {
                x: 0,
                y: 0,
                w: width,
                h: height,
                disparity,
                texture: Texture::Noise { seed },
            }],
        }
    }

    fn flat_pair_set(width: usize) -> MultiscopicSet {
        let img = ImageBuffer::filled(width, 1, 60);
        MultiscopicSet::new(img.clone(), vec![(ViewDirection::Right, img)], 40.0, None).unwrap()
    }

    #[test]
    fn all_occluded_energy_is_the_penalty_times_pixels() {
        let set = flat_pair_set(32);
        let model = EnergyModel::new(&set, &small_params(1, 9)).unwrap();
        let labeling = Labeling::new_occluded(32, 1);
        assert_eq!(
            model.energy_int(&labeling),
            32 * model.occlusion_penalty_int()
        );
        assert_eq!(model.energy(&labeling), 32.0 * 10.0);
    }

    #[test]
    fn true_labeling_of_a_rendered_background_has_zero_energy() {
        let scene = background_scene(32, 24, 2.0, 5);
        let r =
            render_multiscopic(&scene, &[ViewDirection::Left, ViewDirection::Right], 1).unwrap();
        let model = EnergyModel::new(&r.set, &small_params(1, 4)).unwrap();
        let mut labeling = Labeling::new_occluded(32, 24);
        for y in 0..24 {
            for x in 0..32 {
                labeling.set(x, y, 2);
            }
        }
        assert_eq!(model.energy_int(&labeling), 0);
    }

    #[test]
    fn smoothness_uses_the_strong_weight_on_flat_images() {
        let set = flat_pair_set(32);
        let model = EnergyModel::new(&set, &small_params(1, 9)).unwrap();
        // |2 - 9| truncates to 5; flat images keep lambda1 = 9: 9 * 5 * 16.
        assert_eq!(model.smooth_int((10, 0), (11, 0), 2, 9), 720);
        assert_eq!(model.smooth_int((10, 0), (11, 0), 9, 9), 0);
        assert_eq!(model.smooth_int((10, 0), (11, 0), OCCLUDED, 9), 0);
        assert_eq!(model.smooth_int((10, 0), (11, 0), 2, OCCLUDED), 0);
    }

    #[test]
    fn smoothness_drops_to_the_weak_weight_across_an_edge() {
        let mut img = ImageBuffer::filled(32, 1, 100);
        for x in 11..32 {
            img.set(x, 0, 0, 120); // step of 20 >= theta between x = 10 and 11
        }
        let set = MultiscopicSet::new(img.clone(), vec![(ViewDirection::Right, img)], 40.0, None)
            .unwrap();
        let model = EnergyModel::new(&set, &small_params(1, 9)).unwrap();
        // lambda2 = 3: 3 * 5 * 16.
        assert_eq!(model.smooth_int((10, 0), (11, 0), 2, 9), 240);
    }

    #[test]
    fn energy_combines_penalty_data_and_smoothness() {
        let set = flat_pair_set(32);
        let model = EnergyModel::new(&set, &small_params(1, 9)).unwrap();
        let mut labeling = Labeling::new_occluded(32, 1);
        labeling.set(10, 0, 2);
        labeling.set(11, 0, 9);
        // 30 occluded pixels, two zero data costs, one smoothness pair.
        assert_eq!(model.energy_int(&labeling), 30 * 160 + 720);
    }

    #[test]
    fn expanding_the_true_disparity_claims_every_pixel() {
        let scene = background_scene(32, 24, 3.0, 9);
        let r =
            render_multiscopic(&scene, &[ViewDirection::Left, ViewDirection::Right], 1).unwrap();
        let model = EnergyModel::new(&r.set, &small_params(1, 5)).unwrap();
        let mut labeling = Labeling::new_occluded(32, 24);
        assert!(expand(&model, &mut labeling, 3));
        assert_eq!(labeling.occluded_count(), 0);
        assert_eq!(model.energy_int(&labeling), 0);
    }

    /// Exhaustive move-space minimum: every pixel independently chooses
    /// among its current label, the proposal (where supported), and
    /// occlusion.
    fn brute_force_move(model: &EnergyModel, labeling: &Labeling, alpha: i32) -> i64 {
        let (w, h) = (model.width(), model.height());
        let mut options: Vec<Vec<i32>> = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut opts = vec![labeling.get(x, y), OCCLUDED];
                if model.data_int(x, y, alpha).is_some() {
                    opts.push(alpha);
                }
                opts.sort_unstable();
                opts.dedup();
                options.push(opts);
            }
        }
        let mut best = i64::MAX;
        let mut choice = vec![0usize; options.len()];
        loop {
            let mut candidate = Labeling::new_occluded(w, h);
            for (idx, &c) in choice.iter().enumerate() {
                candidate.set(idx % w, idx / w, options[idx][c]);
            }
            best = best.min(model.energy_int(&candidate));
            // odometer increment over the per-pixel option lists
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    return best;
                }
                choice[pos] += 1;
                if choice[pos] < options[pos].len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn expansion_moves_match_the_exhaustive_move_optimum() {
        let mut rng = StdRng::seed_from_u64(31);
        for round in 0..60 {
            let w = rng.gen_range(1..=3);
            let h = rng.gen_range(1..=2);
            let random_image = |rng: &mut StdRng| {
                let data: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
                ImageBuffer::new(w, h, 1, data)
            };
            let dirs = [
                ViewDirection::Left,
                ViewDirection::Right,
                ViewDirection::Top,
                ViewDirection::Bottom,
            ];
            let num_views = rng.gen_range(1..=4);
            let views: Vec<_> = dirs
                .iter()
                .take(num_views)
                .map(|&d| (d, random_image(&mut rng)))
                .collect();
            let set = MultiscopicSet::new(random_image(&mut rng), views, 40.0, None).unwrap();
            let params = GcParams {
                k: rng.gen_range(0.5..20.0),
                lambda1: rng.gen_range(0.0..12.0),
                lambda2: rng.gen_range(0.0..6.0),
                theta: rng.gen_range(1.0..30.0),
                d_cutoff: rng.gen_range(1..=3),
                ..small_params(1, 3)
            };
            let model = EnergyModel::new(&set, &params).unwrap();
            let mut labeling = Labeling::new_occluded(w, h);
            for y in 0..h {
                for x in 0..w {
                    let supported: Vec<i32> = (1..=3)
                        .filter(|&d| model.data_int(x, y, d).is_some())
                        .collect();
                    if !supported.is_empty() && rng.gen_bool(0.7) {
                        labeling.set(x, y, supported[rng.gen_range(0..supported.len())]);
                    }
                }
            }
            let alpha = rng.gen_range(1..=3);
            let expected = brute_force_move(&model, &labeling, alpha);
            expand(&model, &mut labeling, alpha);
            assert_eq!(
                model.energy_int(&labeling),
                expected,
                "round {round}: alpha {alpha} on {w}x{h}"
            );
        }
    }

    #[test]
    fn sweeps_are_monotone_and_deterministic() {
        let scene = SyntheticScene {
            width: 32,
            height: 32,
            d_min: 0.0,
            d_max: 8.0,
            layers: vec![
                Layer {
                    x: 0,
                    y: 0,
                    w: 32,
                    h: 32,
                    disparity: 2.0,
                    texture: Texture::Noise { seed: 21 },
                },
                Layer {
                    x: 12,
                    y: 12,
                    w: 10,
                    h: 10,
                    disparity: 6.0,
                    texture: Texture::Noise { seed: 22 },
                },
            ],
        };
        let r = render_multiscopic(
            &scene,
            &[
                ViewDirection::Left,
                ViewDirection::Right,
                ViewDirection::Top,
                ViewDirection::Bottom,
            ],
            1,
        )
        .unwrap();
        let params = GcParams {
            d_max: 8,
            seed: 5,
            ..Default::default()
        };
        let (map1, trace1) = match_gc_trace(&r.set, &params).unwrap();
        assert!(
            trace1.windows(2).all(|w| w[1] <= w[0]),
            "trace increased: {trace1:?}"
        );

        let (map2, trace2) = match_gc_trace(&r.set, &params).unwrap();
        assert_eq!(trace1, trace2);
        for y in 0..32 {
            for x in 0..32 {
                let a = map1.get(x, y).map(f32::to_bits);
                let b = map2.get(x, y).map(f32::to_bits);
                assert_eq!(a, b, "({x},{y})");
            }
        }
    }

    #[test]
    fn upscaling_recovers_the_plain_disparity_with_fractional_labels() {
        let scene = background_scene(40, 20, 2.0, 77);
        let r =
            render_multiscopic(&scene, &[ViewDirection::Left, ViewDirection::Right], 1).unwrap();
        let params = GcParams {
            d_max: 6,
            upscale: 2,
            ..Default::default()
        };
        let map = match_gc(&r.set, &params).unwrap();
        for y in 0..20 {
            for x in 3..37 {
                assert_eq!(map.get(x, y), Some(2.0), "({x},{y})");
            }
        }
    }

    #[test]
    fn parameter_validation() {
        let set = flat_pair_set(16);
        assert!(EnergyModel::new(
            &set,
            &GcParams {
                k: -1.0,
                ..small_params(1, 4)
            }
        )
        .is_err());
        assert!(EnergyModel::new(
            &set,
            &GcParams {
                theta: f32::NAN,
                ..small_params(1, 4)
            }
        )
        .is_err());
        assert!(EnergyModel::new(
            &set,
            &GcParams {
                d_cutoff: -1,
                ..small_params(1, 4)
            }
        )
        .is_err());
        assert!(match_gc(
            &set,
            &GcParams {
                upscale: 0,
                ..small_params(1, 4)
            }
        )
        .is_err());
        assert!(match_gc(
            &set,
            &GcParams {
                max_sweeps: 0,
                ..small_params(1, 4)
            }
        )
        .is_err());
    }
}
