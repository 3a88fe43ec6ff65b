//! Command-line front end for the multiscopic matching pipeline: run the
//! matchers on image sets, generate synthetic scenes with ground truth,
//! evaluate disparity maps, and export fused cost volumes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use multiscopic_core::capture::{parse_scene, render_multiscopic, Layer, SyntheticScene, Texture};
use multiscopic_core::eval::{colorize, evaluate, improvement};
use multiscopic_core::fusion::fuse_any;
use multiscopic_core::graphcut::match_gc;
use multiscopic_core::image::ImageBuffer;
use multiscopic_core::{
    io, match_bm, BmParams, CostVolume, DisparityMap, FusionStrategy, GcParams, MultiscopicSet,
    ViewDirection,
};

#[derive(Parser)]
#[command(
    name = "multiscopic",
    about = "Disparity estimation from center + surround image sets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a disparity map for a multiscopic set
    Match(MatchArgs),
    /// Render a synthetic multiscopic set with ground truth
    Synth(SynthArgs),
    /// Compare a disparity map against ground truth
    Eval(EvalArgs),
    /// Export the fused cost volume for inspection
    FuseDump(FuseDumpArgs),
}

/// Input images shared by `match` and `fuse-dump`: either an explicit center
/// plus up to four directional views, or a Middlebury-style directory.
#[derive(Args, Clone)]
struct InputArgs {
    /// Center (reference) image
    #[arg(long)]
    center: Option<PathBuf>,
    /// View captured left of the center
    #[arg(long)]
    left: Option<PathBuf>,
    /// View captured right of the center
    #[arg(long)]
    right: Option<PathBuf>,
    /// View captured above the center
    #[arg(long)]
    top: Option<PathBuf>,
    /// View captured below the center
    #[arg(long)]
    bottom: Option<PathBuf>,
    /// Directory with view0/view1/view2 images (three-view row: view1 is the
    /// center, view0 the left view, view2 the right view)
    #[arg(long)]
    middlebury: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// key = value file mirroring the long flags; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Matcher: "bm" (block matching) or "gc" (graph cuts)
    #[arg(long)]
    method: Option<String>,
    /// Smallest considered disparity [default: 1]
    #[arg(long)]
    dmin: Option<i32>,
    /// Largest considered disparity [default: 60]
    #[arg(long)]
    dmax: Option<i32>,
    /// Odd SAD block edge length, bm only [default: 11]
    #[arg(long)]
    block_size: Option<u32>,
    /// Cost fusion across views: mean, min or heuristic [default: heuristic]
    #[arg(long)]
    fusion: Option<String>,
    /// Outlier ratio of the heuristic fusion [default: 3]
    #[arg(long)]
    ratio: Option<f32>,
    /// Occlusion penalty, gc only [default: 10]
    #[arg(long = "K", alias = "k")]
    k: Option<f32>,
    /// Smoothness weight in flat regions, gc only [default: 9]
    #[arg(long)]
    lambda1: Option<f32>,
    /// Smoothness weight across intensity edges, gc only [default: 3]
    #[arg(long)]
    lambda2: Option<f32>,
    /// Intensity threshold between the two weights, gc only [default: 8]
    #[arg(long)]
    theta: Option<f32>,
    /// Disparity-difference truncation of the smoothness, gc only [default: 5]
    #[arg(long)]
    dcutoff: Option<i32>,
    /// Integer upsampling factor for fractional disparities, gc only [default: 1]
    #[arg(long)]
    upscale: Option<u32>,
    /// Maximum expansion sweeps, gc only [default: 4]
    #[arg(long)]
    sweeps: Option<u32>,
    /// Seed of the label visiting order, gc only [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Swap the interval ends of the sampling-insensitive cost, gc only
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    bt_literal: Option<bool>,
    /// Disparity output path; .pfm keeps floats, anything else is PGM
    /// [default: disparity.pfm]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Multiplier applied when writing (or reading) PGM disparities [default: 1]
    #[arg(long)]
    scale: Option<f32>,
    /// Also write a jet-colored PPM preview here
    #[arg(long)]
    preview: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description file; omit for the built-in two-layer scene
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Output directory [default: .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Which views to render, as direction initials [default: lrtb]
    #[arg(long)]
    views: Option<String>,
    /// Baseline length in render units; disparities scale with it [default: 1]
    #[arg(long)]
    baseline_units: Option<u32>,
    /// Texture seed of the built-in scene [default: 1]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimated disparity map (.pfm or .pgm)
    #[arg(long)]
    est: PathBuf,
    /// Ground-truth disparity map (.pfm or .pgm)
    #[arg(long)]
    gt: PathBuf,
    /// Scale factor of PGM-encoded disparities [default: 1]
    #[arg(long)]
    scale: Option<f32>,
    /// Second estimate to improve upon; prints relative improvements
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Args)]
struct FuseDumpArgs {
    /// key = value file mirroring the long flags; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Cost to build: "sad" blocks or "bt" pixel dissimilarity [default: sad]
    #[arg(long)]
    method: Option<String>,
    /// SAD block radius [default: 5]
    #[arg(long)]
    radius: Option<u32>,
    /// Smallest considered disparity [default: 1]
    #[arg(long)]
    dmin: Option<i32>,
    /// Largest considered disparity [default: 60]
    #[arg(long)]
    dmax: Option<i32>,
    /// Cost fusion across views: mean, min or heuristic [default: heuristic]
    #[arg(long)]
    fusion: Option<String>,
    /// Outlier ratio of the heuristic fusion [default: 3]
    #[arg(long)]
    ratio: Option<f32>,
    /// Swap the interval ends of the sampling-insensitive cost
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    bt_literal: Option<bool>,
    /// Volume output path [default: volume.cost]
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failures split by exit code: 2 for command misuse, 1 for everything that
/// goes wrong while actually working.
enum AppError {
    Usage(String),
    Runtime(String),
}

impl AppError {
    fn usage(msg: impl Into<String>) -> AppError {
        AppError::Usage(msg.into())
    }
}

impl From<multiscopic_core::Error> for AppError {
    fn from(e: multiscopic_core::Error) -> AppError {
        AppError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> AppError {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Match(args) => cmd_match(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Eval(args) => cmd_eval(args),
        Command::FuseDump(args) => cmd_fuse_dump(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Values from a `--config` file: one `key = value` per line, `#` comments,
/// keys named like the long flags.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<ConfigFile, AppError> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Runtime(format!("config {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(AppError::Runtime(format!(
                        "config {}: line {}: expected key = value",
                        path.display(),
                        lineno + 1
                    )));
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    /// Flag value if given, else the config entry, else the default.
    fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, AppError> {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    /// Flag value if given, else the config entry, else nothing.
    fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, AppError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                AppError::Runtime(format!("config value {key} = {raw:?} does not parse"))
            }),
            None => Ok(None),
        }
    }
}

fn load_image_at(path: &Path) -> Result<ImageBuffer, AppError> {
    io::load_image(path).map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))
}

/// Loads a direction-tagged view list from explicit flags or a Middlebury
/// directory. Inside the directory, `view1` is the center and `view0`/`view2`
/// flank it: content in the left camera's image sits further right, so
/// `view0` is the Left view.
fn load_input_set(input: &InputArgs, config: &ConfigFile) -> Result<MultiscopicSet, AppError> {
    let middlebury = config.resolve_opt(input.middlebury.clone(), "middlebury")?;
    let center = config.resolve_opt(input.center.clone(), "center")?;
    if let Some(dir) = middlebury {
        if center.is_some() {
            return Err(AppError::usage(
                "give either --middlebury or explicit images, not both",
            ));
        }
        let find = |stem: &str| -> Result<ImageBuffer, AppError> {
            for ext in ["pgm", "ppm"] {
                let path = dir.join(format!("{stem}.{ext}"));
                if path.exists() {
                    return load_image_at(&path);
                }
            }
            Err(AppError::Runtime(format!(
                "no {stem}.pgm or {stem}.ppm under {}",
                dir.display()
            )))
        };
        let set = MultiscopicSet::new(
            find("view1")?,
            vec![
                (ViewDirection::Left, find("view0")?),
                (ViewDirection::Right, find("view2")?),
            ],
            0.0,
            None,
        )?;
        return Ok(set);
    }

    let Some(center) = center else {
        return Err(AppError::usage(
            "a center image is required (--center or --middlebury)",
        ));
    };
    let mut views = Vec::new();
    for (dir, flag, key) in [
        (ViewDirection::Left, &input.left, "left"),
        (ViewDirection::Right, &input.right, "right"),
        (ViewDirection::Top, &input.top, "top"),
        (ViewDirection::Bottom, &input.bottom, "bottom"),
    ] {
        if let Some(path) = config.resolve_opt(flag.clone(), key)? {
            views.push((dir, load_image_at(&path)?));
        }
    }
    if views.is_empty() {
        return Err(AppError::usage("at least one surround view is required"));
    }
    Ok(MultiscopicSet::new(
        load_image_at(&center)?,
        views,
        0.0,
        None,
    )?)
}

fn resolve_fusion(
    flag_fusion: Option<String>,
    flag_ratio: Option<f32>,
    config: &ConfigFile,
) -> Result<FusionStrategy, AppError> {
    let name = config.resolve(flag_fusion, "fusion", "heuristic".to_string())?;
    let ratio = config.resolve(flag_ratio, "ratio", 3.0f32)?;
    let mut strategy = FusionStrategy::parse(&name).map_err(|e| AppError::usage(e.to_string()))?;
    if let FusionStrategy::Heuristic { ratio: r } = &mut strategy {
        *r = ratio;
    }
    Ok(strategy)
}

fn cmd_match(args: MatchArgs) -> Result<(), AppError> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let method = config.resolve(args.method, "method", "bm".to_string())?;
    let dmin = config.resolve(args.dmin, "dmin", 1)?;
    let dmax = config.resolve(args.dmax, "dmax", 60)?;
    let block_size = config.resolve(args.block_size, "block-size", 11u32)?;
    let fusion = resolve_fusion(args.fusion, args.ratio, &config)?;
    let k = config.resolve(args.k, "K", 10.0f32)?;
    let lambda1 = config.resolve(args.lambda1, "lambda1", 9.0f32)?;
    let lambda2 = config.resolve(args.lambda2, "lambda2", 3.0f32)?;
    let theta = config.resolve(args.theta, "theta", 8.0f32)?;
    let dcutoff = config.resolve(args.dcutoff, "dcutoff", 5)?;
    let upscale = config.resolve(args.upscale, "upscale", 1u32)?;
    let sweeps = config.resolve(args.sweeps, "sweeps", 4u32)?;
    let seed = config.resolve(args.seed, "seed", 1u64)?;
    let bt_literal = config.resolve(args.bt_literal, "bt-literal", false)?;
    let output = config.resolve(args.output, "output", PathBuf::from("disparity.pfm"))?;
    let scale = config.resolve(args.scale, "scale", 1.0f32)?;
    let preview = config.resolve_opt(args.preview, "preview")?;

    if method != "bm" && method != "gc" {
        return Err(AppError::usage(format!(
            "unknown method {method:?}, expected bm or gc"
        )));
    }
    if block_size % 2 == 0 || block_size == 0 {
        return Err(AppError::usage(format!(
            "block size must be odd, got {block_size}"
        )));
    }
    let set = load_input_set(&args.input, &config)?;

    println!("method = {method}");
    println!("views = {}", set.surround.len());
    println!("dmin = {dmin}");
    println!("dmax = {dmax}");
    println!("fusion = {}", fusion.name());
    if let FusionStrategy::Heuristic { ratio } = fusion {
        println!("ratio = {ratio}");
    }
    if method == "bm" {
        println!("block-size = {block_size}");
    } else {
        println!("K = {k}");
        println!("lambda1 = {lambda1}");
        println!("lambda2 = {lambda2}");
        println!("theta = {theta}");
        println!("dcutoff = {dcutoff}");
        println!("upscale = {upscale}");
        println!("sweeps = {sweeps}");
        println!("seed = {seed}");
        println!("bt-literal = {bt_literal}");
    }
    println!("output = {}", output.display());

    let map = if method == "bm" {
        let params = BmParams {
            radius: (block_size as usize - 1) / 2,
            d_min: dmin,
            d_max: dmax,
            fusion,
            subpixel: true,
        };
        match_bm(&set, &params)?
    } else {
        let params = GcParams {
            k,
            lambda1,
            lambda2,
            theta,
            d_cutoff: dcutoff,
            d_min: dmin,
            d_max: dmax,
            upscale,
            max_sweeps: sweeps,
            seed,
            fusion,
            bt_literal,
        };
        match_gc(&set, &params)?
    };
    io::save_disparity(&map, &output, scale)?;
    if let Some(path) = preview {
        io::save_image(&colorize(&map, dmax as f32)?, &path)?;
    }
    Ok(())
}

/// The built-in demonstration scene: textured background plus a nearer
/// square, sized so every matcher default works on it.
fn default_scene(seed: u64) -> SyntheticScene {
    SyntheticScene {
        width: 128,
        height: 128,
        d_min: 0.0,
        d_max: 12.0,
        layers: vec![
            Layer {
                x: 0,
                y: 0,
                w: 128,
                h: 128,
                disparity: 2.0,
                texture: Texture::Noise {
                    seed: seed.wrapping_add(1),
                },
            },
            Layer {
                x: 48,
                y: 48,
                w: 32,
                h: 32,
                disparity: 10.0,
                texture: Texture::Noise {
                    seed: seed.wrapping_add(2),
                },
            },
        ],
    }
}

fn parse_views(spec: &str) -> Result<Vec<ViewDirection>, AppError> {
    let mut views = Vec::new();
    for c in spec.chars() {
        let dir = match c.to_ascii_lowercase() {
            'l' => ViewDirection::Left,
            'r' => ViewDirection::Right,
            't' => ViewDirection::Top,
            'b' => ViewDirection::Bottom,
            other => return Err(AppError::usage(format!("unknown view initial {other:?}"))),
        };
        if views.contains(&dir) {
            return Err(AppError::usage(format!(
                "view {:?} given twice",
                dir.name()
            )));
        }
        views.push(dir);
    }
    if views.is_empty() {
        return Err(AppError::usage("--views needs at least one direction"));
    }
    Ok(views)
}

fn cmd_synth(args: SynthArgs) -> Result<(), AppError> {
    let out_dir = args.out_dir.unwrap_or_else(|| PathBuf::from("."));
    let views = parse_views(&args.views.unwrap_or_else(|| "lrtb".to_string()))?;
    let baseline_units = args.baseline_units.unwrap_or(1);
    let seed = args.seed.unwrap_or(1);
    let scene = match &args.scene {
        Some(path) => parse_scene(
            &std::fs::read_to_string(path)
                .map_err(|e| AppError::Runtime(format!("scene {}: {e}", path.display())))?,
        )?,
        None => default_scene(seed),
    };
    let rendered = render_multiscopic(&scene, &views, baseline_units)?;

    std::fs::create_dir_all(&out_dir)?;
    io::save_image(&rendered.set.center, out_dir.join("center.pgm"))?;
    for (dir, img) in &rendered.set.surround {
        io::save_image(img, out_dir.join(format!("view_{}.pgm", dir.name())))?;
    }
    io::save_disparity(&rendered.gt, out_dir.join("gt.pfm"), 1.0)?;
    let mut mask = ImageBuffer::filled(scene.width, scene.height, 0);
    for (i, &occluded) in rendered.occlusion.iter().enumerate() {
        if occluded {
            mask.set(i % scene.width, i / scene.width, 0, 255);
        }
    }
    io::save_image(&mask, out_dir.join("occlusion.pgm"))?;
    println!(
        "wrote center + {} views + gt.pfm + occlusion.pgm to {}",
        rendered.set.surround.len(),
        out_dir.display()
    );
    Ok(())
}

fn print_report(tag: &str, report: &multiscopic_core::EvalReport) {
    println!(
        "{tag:<12} {:>8.4} {:>8.4} {:>7.2}% {:>7.2}% {:>7.2}%",
        report.rms, report.avg_err, report.bad05, report.bad1, report.bad2
    );
}

fn load_disparity_at(path: &Path, scale: f32) -> Result<DisparityMap, AppError> {
    io::load_disparity(path, scale)
        .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_eval(args: EvalArgs) -> Result<(), AppError> {
    let scale = args.scale.unwrap_or(1.0);
    let est = load_disparity_at(&args.est, scale)?;
    let gt = load_disparity_at(&args.gt, scale)?;
    let report = evaluate(&est, &gt)?;

    println!(
        "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "", "rms", "avg_err", "bad0.5", "bad1", "bad2"
    );
    print_report("estimate", &report);
    if let Some(baseline_path) = &args.baseline {
        let baseline = evaluate(&load_disparity_at(baseline_path, scale)?, &gt)?;
        print_report("baseline", &baseline);
        for (name, b, e) in [
            ("rms", baseline.rms, report.rms),
            ("avg_err", baseline.avg_err, report.avg_err),
            ("bad1", baseline.bad1, report.bad1),
        ] {
            match improvement(b, e) {
                Some(p) if p >= 0.0 => println!("{name}: {b:.4} -> {e:.4}  ↓ {p:.1}%"),
                Some(p) => println!("{name}: {b:.4} -> {e:.4}  ↑ {:.1}%", -p),
                None => println!("{name}: {b:.4} -> {e:.4}"),
            }
        }
    }
    for (key, value) in [
        ("rms", report.rms),
        ("avg_err", report.avg_err),
        ("bad05", report.bad05),
        ("bad1", report.bad1),
        ("bad2", report.bad2),
    ] {
        println!("{key} = {value:.6}");
    }
    println!("evaluated_px = {}", report.evaluated_px);
    println!("excluded_px = {}", report.excluded_px);
    println!("invalid_est_px = {}", report.invalid_est_px);
    Ok(())
}

fn cmd_fuse_dump(args: FuseDumpArgs) -> Result<(), AppError> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let method = config.resolve(args.method, "method", "sad".to_string())?;
    let radius = config.resolve(args.radius, "radius", 5u32)?;
    let dmin = config.resolve(args.dmin, "dmin", 1)?;
    let dmax = config.resolve(args.dmax, "dmax", 60)?;
    let fusion = resolve_fusion(args.fusion, args.ratio, &config)?;
    let bt_literal = config.resolve(args.bt_literal, "bt-literal", false)?;
    let output = config.resolve(args.output, "output", PathBuf::from("volume.cost"))?;
    if method != "sad" && method != "bt" {
        return Err(AppError::usage(format!(
            "unknown method {method:?}, expected sad or bt"
        )));
    }
    let set = load_input_set(&args.input, &config)?;

    println!("method = {method}");
    println!("views = {}", set.surround.len());
    println!("dmin = {dmin}");
    println!("dmax = {dmax}");
    println!("fusion = {}", fusion.name());
    println!("output = {}", output.display());

    let center = multiscopic_core::image::to_grayscale(&set.center);
    let volumes: Vec<CostVolume> = set
        .surround
        .iter()
        .map(|(dir, img)| {
            let view = multiscopic_core::image::to_grayscale(img);
            if method == "sad" {
                multiscopic_core::cost::sad_volume(
                    &center,
                    &view,
                    *dir,
                    radius as usize,
                    dmin,
                    dmax,
                )
            } else {
                multiscopic_core::cost::bt_volume(&center, &view, *dir, dmin, dmax, bt_literal)
            }
        })
        .collect::<multiscopic_core::Result<_>>()?;
    let refs: Vec<&CostVolume> = volumes.iter().collect();
    let fused = fuse_any(fusion, &refs)?;
    io::save_volume(&fused, &output)?;
    Ok(())
}
