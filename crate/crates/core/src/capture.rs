//! Multiscopic capture geometry: the center-plus-surround image set, the
//! directional shift conventions, a layered synthetic-scene renderer with
//! exact ground truth and occlusion masks, and a projection-based
//! rectification sanity check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Where a surround camera sits relative to the center camera.
///
/// All views share one baseline length, so a center pixel has the same
/// disparity magnitude toward every view; only the shift axis and sign differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewDirection {
    Left,
    Right,
    Top,
    Bottom,
}

impl ViewDirection {
    pub const ALL: [ViewDirection; 4] = [
        ViewDirection::Left,
        ViewDirection::Right,
        ViewDirection::Top,
        ViewDirection::Bottom,
    ];

    /// Displacement of image content in this view: center content at `(x, y)`
    /// with disparity `d` appears at `(x, y) + shift(d)`. The camera moves one
    /// way, the content moves the other: right view shifts content left,
    /// top view shifts content down (the y axis grows downward).
    #[inline]
    pub fn shift(self, d: f64) -> (f64, f64) {
        match self {
            ViewDirection::Right => (-d, 0.0),
            ViewDirection::Left => (d, 0.0),
            ViewDirection::Top => (0.0, d),
            ViewDirection::Bottom => (0.0, -d),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewDirection::Left => "left",
            ViewDirection::Right => "right",
            ViewDirection::Top => "top",
            ViewDirection::Bottom => "bottom",
        }
    }

    /// Parses `"left"`/`"l"` style names.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(ViewDirection::Left),
            "right" | "r" => Ok(ViewDirection::Right),
            "top" | "t" => Ok(ViewDirection::Top),
            "bottom" | "b" => Ok(ViewDirection::Bottom),
            other => Err(Error::argument(format!("unknown view direction {other:?}"))),
        }
    }
}

/// A center image plus 1..=4 surround images sharing one baseline.
#[derive(Debug, Clone)]
pub struct MultiscopicSet {
    pub center: ImageBuffer,
    pub surround: Vec<(ViewDirection, ImageBuffer)>,
    /// Physical baseline length in millimetres; 0 when unknown/synthetic units.
    pub baseline_mm: f64,
    /// Focal length in pixels, when known.
    pub focal_px: Option<f64>,
}

impl MultiscopicSet {
    /// Validates dimensions, channel counts, view count and uniqueness.
    pub fn new(
        center: ImageBuffer,
        surround: Vec<(ViewDirection, ImageBuffer)>,
        baseline_mm: f64,
        focal_px: Option<f64>,
    ) -> Result<Self> {
        if surround.is_empty() || surround.len() > 4 {
            return Err(Error::argument(format!(
                "need 1..=4 surround views, got {}",
                surround.len()
            )));
        }
        for (dir, img) in &surround {
            if img.width != center.width
                || img.height != center.height
                || img.channels != center.channels
            {
                return Err(Error::argument(format!(
                    "{} view does not match center dimensions/channels",
                    dir.name()
                )));
            }
        }
        for i in 0..surround.len() {
            for j in i + 1..surround.len() {
                if surround[i].0 == surround[j].0 {
                    return Err(Error::argument(format!(
                        "duplicate {} view",
                        surround[i].0.name()
                    )));
                }
            }
        }
        Ok(MultiscopicSet {
            center,
            surround,
            baseline_mm,
            focal_px,
        })
    }

    pub fn view(&self, dir: ViewDirection) -> Option<&ImageBuffer> {
        self.surround
            .iter()
            .find(|(d, _)| *d == dir)
            .map(|(_, img)| img)
    }

    pub fn width(&self) -> usize {
        self.center.width
    }

    pub fn height(&self) -> usize {
        self.center.height
    }
}

/// Disparity (in pixels) of a point at `depth_m` metres seen by a camera with
/// focal length `focal_px` pixels and baseline `baseline_m` metres.
pub fn disparity_from_depth(focal_px: f64, baseline_m: f64, depth_m: f64) -> Result<f64> {
    for (name, v) in [
        ("focal", focal_px),
        ("baseline", baseline_m),
        ("depth", depth_m),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::argument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(focal_px * baseline_m / depth_m)
}

/// Texture painted on a scene layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    /// One flat intensity.
    Flat(u8),
    /// Seeded uniform noise smoothed by a 3x3 box filter; deterministic per seed.
    Noise { seed: u64 },
}

/// One fronto-parallel layer: a rectangle at constant disparity.
/// Coordinates are world (center-view) pixels; the rectangle spans
/// `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
    /// Disparity in pixels at unit baseline; fractional values are rendered
    /// with bilinear resampling.
    pub disparity: f32,
    pub texture: Texture,
}

impl Layer {
    #[inline]
    fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && px < (self.x + self.w as i64) as f64
            && py >= self.y as f64
            && py < (self.y + self.h as i64) as f64
    }
}

/// Layered synthetic scene. Layers are stored back to front: the first layer
/// is the mandatory full-coverage background, and disparities strictly
/// increase toward the front (closer means larger disparity).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub width: usize,
    pub height: usize,
    pub d_min: f32,
    pub d_max: f32,
    pub layers: Vec<Layer>,
}

/// Everything `render_multiscopic` produces: the image set, per-pixel ground
/// truth at the rendered baseline, the all-views occlusion mask, and one
/// visibility mask per view for finer-grained analysis.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub set: MultiscopicSet,
    pub gt: DisparityMap,
    /// True where the center pixel is invisible in every requested view.
    pub occlusion: Vec<bool>,
    /// Per view: true where the center pixel is invisible in that view.
    pub view_occlusion: Vec<(ViewDirection, Vec<bool>)>,
}

/// Evaluated layer texture over a padded world window, so shifted views can
/// sample outside the nominal image extent.
struct TextureField {
    origin: i64, // world coordinate of sample (0, 0) in both axes
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl TextureField {
    fn build(texture: &Texture, scene_w: usize, scene_h: usize, pad: usize) -> TextureField {
        let width = scene_w + 2 * pad;
        let height = scene_h + 2 * pad;
        let data = match texture {
            Texture::Flat(v) => vec![*v as f32; width * height],
            Texture::Noise { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let raw: Vec<f32> = (0..width * height)
                    .map(|_| rng.gen_range(0..=255u8) as f32)
                    .collect();
                // 3x3 box filter with clamped borders
                let mut smooth = vec![0.0f32; width * height];
                for y in 0..height {
                    for x in 0..width {
                        let mut sum = 0.0;
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                let sx = (x as i64 + dx).clamp(0, width as i64 - 1) as usize;
                                let sy = (y as i64 + dy).clamp(0, height as i64 - 1) as usize;
                                sum += raw[sy * width + sx];
                            }
                        }
                        smooth[y * width + x] = sum / 9.0;
                    }
                }
                smooth
            }
        };
        TextureField {
            origin: -(pad as i64),
            width,
            height,
            data,
        }
    }

    #[inline]
    fn texel(&self, ix: i64, iy: i64) -> f32 {
        let x = (ix - self.origin).clamp(0, self.width as i64 - 1) as usize;
        let y = (iy - self.origin).clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample at world coordinates; integer coordinates hit texels
    /// exactly, so integer-disparity views reproduce center samples bit for bit.
    fn sample(&self, px: f64, py: f64) -> f32 {
        let fx = px.floor();
        let fy = py.floor();
        let tx = (px - fx) as f32;
        let ty = (py - fy) as f32;
        let (ix, iy) = (fx as i64, fy as i64);
        let v00 = self.texel(ix, iy);
        let v10 = self.texel(ix + 1, iy);
        let v01 = self.texel(ix, iy + 1);
        let v11 = self.texel(ix + 1, iy + 1);
        let top = v00 * (1.0 - tx) + v10 * tx;
        let bot = v01 * (1.0 - tx) + v11 * tx;
        top * (1.0 - ty) + bot * ty
    }
}

/// Renders the scene into a center image plus the requested surround views at
/// `baseline_units` times the unit baseline, with exact per-pixel ground truth
/// (front-most layer disparity times `baseline_units`) and occlusion masks.
pub fn render_multiscopic(
    scene: &SyntheticScene,
    directions: &[ViewDirection],
    baseline_units: u32,
) -> Result<RenderedScene> {
    validate_scene(scene)?;
    if directions.is_empty() || directions.len() > 4 {
        return Err(Error::argument(format!(
            "need 1..=4 directions, got {}",
            directions.len()
        )));
    }
    for i in 0..directions.len() {
        for j in i + 1..directions.len() {
            if directions[i] == directions[j] {
                return Err(Error::argument(format!(
                    "duplicate direction {}",
                    directions[i].name()
                )));
            }
        }
    }
    if baseline_units == 0 {
        return Err(Error::argument("baseline_units must be >= 1".to_string()));
    }
    let k = baseline_units as f64;
    let max_shift = scene
        .layers
        .iter()
        .map(|l| l.disparity.abs() as f64)
        .fold(0.0, f64::max)
        * k;
    if max_shift >= scene.width.min(scene.height) as f64 {
        return Err(Error::argument(format!(
            "baseline_units x max layer disparity ({max_shift}) must stay below the image extent"
        )));
    }

    let pad = max_shift.ceil() as usize + 2;
    let fields: Vec<TextureField> = scene
        .layers
        .iter()
        .map(|l| TextureField::build(&l.texture, scene.width, scene.height, pad))
        .collect();

    let (w, h) = (scene.width, scene.height);
    let render_view = |dir: Option<ViewDirection>| -> ImageBuffer {
        let mut data = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                // front-most layer whose world rectangle contains the
                // back-projected point wins (background always matches)
                for (idx, layer) in scene.layers.iter().enumerate().rev() {
                    let (sx, sy) = match dir {
                        Some(d) => d.shift(layer.disparity as f64 * k),
                        None => (0.0, 0.0),
                    };
                    let (px, py) = (x as f64 - sx, y as f64 - sy);
                    if idx == 0 || layer.contains(px, py) {
                        data[y * w + x] =
                            fields[idx].sample(px, py).round().clamp(0.0, 255.0) as u8;
                        break;
                    }
                }
            }
        }
        ImageBuffer::new(w, h, 1, data)
    };

    let center = render_view(None);
    let surround: Vec<(ViewDirection, ImageBuffer)> = directions
        .iter()
        .map(|&d| (d, render_view(Some(d))))
        .collect();

    // ground truth = front-most layer at each center pixel, scaled to the
    // rendered baseline; occlusion = invisible in a view when a closer layer
    // covers the projected point there, or the point leaves the frame
    let mut gt = DisparityMap::new_invalid(w, h);
    let mut view_occlusion: Vec<(ViewDirection, Vec<bool>)> = directions
        .iter()
        .map(|&d| (d, vec![false; w * h]))
        .collect();
    let mut occlusion = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let front = scene
                .layers
                .iter()
                .enumerate()
                .rev()
                .find(|(idx, l)| *idx == 0 || l.contains(x as f64, y as f64))
                .map(|(idx, _)| idx)
                .unwrap();
            let d = scene.layers[front].disparity as f64 * k;
            gt.set(x, y, d as f32);

            let mut hidden_everywhere = true;
            for (vi, &dir) in directions.iter().enumerate() {
                let (sx, sy) = dir.shift(d);
                let (qx, qy) = (x as f64 + sx, y as f64 + sy);
                let in_frame =
                    qx >= 0.0 && qx <= (w - 1) as f64 && qy >= 0.0 && qy <= (h - 1) as f64;
                let covered = scene.layers[front + 1..].iter().any(|closer| {
                    let (cx, cy) = dir.shift(closer.disparity as f64 * k);
                    closer.contains(qx - cx, qy - cy)
                });
                let visible = in_frame && !covered;
                if visible {
                    hidden_everywhere = false;
                } else {
                    view_occlusion[vi].1[y * w + x] = true;
                }
            }
            occlusion[y * w + x] = hidden_everywhere;
        }
    }

    let set = MultiscopicSet::new(center, surround, baseline_units as f64, None)?;
    Ok(RenderedScene {
        set,
        gt,
        occlusion,
        view_occlusion,
    })
}

fn validate_scene(scene: &SyntheticScene) -> Result<()> {
    if scene.width == 0 || scene.height == 0 {
        return Err(Error::argument("scene dimensions must be >= 1".to_string()));
    }
    let Some(bg) = scene.layers.first() else {
        return Err(Error::argument(
            "scene needs a background layer".to_string(),
        ));
    };
    if bg.x > 0
        || bg.y > 0
        || bg.x + bg.w as i64 - (scene.width as i64) < 0
        || bg.y + bg.h as i64 - (scene.height as i64) < 0
    {
        return Err(Error::argument(
            "background layer must cover the full image".to_string(),
        ));
    }
    for pair in scene.layers.windows(2) {
        if pair[1].disparity <= pair[0].disparity {
            return Err(Error::argument(
                "layer disparities must strictly increase from back to front".to_string(),
            ));
        }
    }
    for layer in &scene.layers {
        if !layer.disparity.is_finite()
            || layer.disparity < scene.d_min
            || layer.disparity > scene.d_max
        {
            return Err(Error::argument(format!(
                "layer disparity {} outside scene range [{}, {}]",
                layer.disparity, scene.d_min, scene.d_max
            )));
        }
        if layer.w == 0 || layer.h == 0 {
            return Err(Error::argument("layer extent must be >= 1".to_string()));
        }
    }
    Ok(())
}

/// Checks that every surround view is consistent with a purely horizontal
/// (left/right) or vertical (top/bottom) displacement: the center and view
/// projections perpendicular to the disparity axis must align to within
/// `tolerance` pixels. Cross-axis misalignment beyond tolerance returns false.
///
/// The shift between projections is estimated by phase correlation of the
/// mean-removed row sums (horizontal views) or column sums (vertical views).
pub fn rectify_check(set: &MultiscopicSet, tolerance: f64) -> Result<bool> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::argument(format!(
            "tolerance must be >= 0, got {tolerance}"
        )));
    }
    let center = &set.center;
    for (dir, view) in &set.surround {
        let (a, b) = match dir {
            ViewDirection::Left | ViewDirection::Right => {
                (row_projection(center), row_projection(view))
            }
            ViewDirection::Top | ViewDirection::Bottom => {
                (col_projection(center), col_projection(view))
            }
        };
        let shift = projection_shift(&a, &b);
        if shift.abs() as f64 > tolerance {
            return Ok(false);
        }
    }
    Ok(true)
}

fn row_projection(img: &ImageBuffer) -> Vec<f64> {
    (0..img.height)
        .map(|y| (0..img.width).map(|x| img.get(x, y, 0) as f64).sum())
        .collect()
}

fn col_projection(img: &ImageBuffer) -> Vec<f64> {
    (0..img.width)
        .map(|x| (0..img.height).map(|y| img.get(x, y, 0) as f64).sum())
        .collect()
}

/// Circular shift of `b` relative to `a` with the strongest correlation,
/// mapped to a signed offset in `(-n/2, n/2]`. Ties break toward the smaller
/// raw index so the estimate is deterministic.
fn projection_shift(a: &[f64], b: &[f64]) -> i64 {
    let n = a.len();
    if n <= 1 {
        return 0;
    }
    let mean_a: f64 = a.iter().sum::<f64>() / n as f64;
    let mean_b: f64 = b.iter().sum::<f64>() / n as f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for s in 0..n {
        let mut corr = 0.0;
        for i in 0..n {
            corr += (a[i] - mean_a) * (b[(i + s) % n] - mean_b);
        }
        if corr > best.0 {
            best = (corr, s);
        }
    }
    let s = best.1 as i64;
    if s as usize > n / 2 {
        s - n as i64
    } else {
        s
    }
}

/// Parses a plain-text scene description. Recognized lines (`#` comments and
/// blank lines ignored):
///
/// ```text
/// width = 128
/// height = 128
/// dmin = 0
/// dmax = 12
/// layer = <x> <y> <w> <h> <disparity> flat <value>
/// layer = <x> <y> <w> <h> <disparity> noise <seed>
/// ```
///
/// Layers are listed back to front (background first).
pub fn parse_scene(text: &str) -> Result<SyntheticScene> {
    let mut width = None;
    let mut height = None;
    let mut d_min = None;
    let mut d_max = None;
    let mut layers = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_num = |what: &str, v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::format(format!("line {}: bad {what} {v:?}", lineno + 1)))
        };
        match key {
            "width" => width = Some(parse_num("width", value)? as usize),
            "height" => height = Some(parse_num("height", value)? as usize),
            "dmin" => d_min = Some(parse_num("dmin", value)? as f32),
            "dmax" => d_max = Some(parse_num("dmax", value)? as f32),
            "layer" => {
                let fields: Vec<&str> = value.split_whitespace().collect();
                if fields.len() != 7 {
                    return Err(Error::format(format!(
                        "line {}: layer needs <x> <y> <w> <h> <disparity> <flat|noise> <arg>",
                        lineno + 1
                    )));
                }
                let texture = match fields[5] {
                    "flat" => Texture::Flat(parse_num("flat value", fields[6])? as u8),
                    "noise" => Texture::Noise {
                        seed: parse_num("noise seed", fields[6])? as u64,
                    },
                    other => {
                        return Err(Error::format(format!(
                            "line {}: unknown texture {other:?}",
                            lineno + 1
                        )))
                    }
                };
                layers.push(Layer {
                    x: parse_num("layer x", fields[0])? as i64,
                    y: parse_num("layer y", fields[1])? as i64,
                    w: parse_num("layer w", fields[2])? as u32,
                    h: parse_num("layer h", fields[3])? as u32,
                    disparity: parse_num("layer disparity", fields[4])? as f32,
                    texture,
                });
            }
            other => {
                return Err(Error::format(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    let scene = SyntheticScene {
        width: width.ok_or_else(|| Error::format("missing width"))?,
        height: height.ok_or_else(|| Error::format("missing height"))?,
        d_min: d_min.ok_or_else(|| Error::format("missing dmin"))?,
        d_max: d_max.ok_or_else(|| Error::format("missing dmax"))?,
        layers,
    };
    validate_scene(&scene)?;
    Ok(scene)
}
