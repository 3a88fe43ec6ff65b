//! Benchmarks for the hot paths of the matching pipeline: cost volumes,
//! fusion, max-flow, and the two matchers end to end on small scenes.

use criterion::{criterion_group, criterion_main, Criterion};
use multiscopic_core::capture::{
    render_multiscopic, Layer, RenderedScene, SyntheticScene, Texture,
};
use multiscopic_core::cost::{bt_volume, sad_volume};
use multiscopic_core::fusion::fuse;
use multiscopic_core::graphcut::{expand, EnergyModel, GcParams, Labeling};
use multiscopic_core::image::to_grayscale;
use multiscopic_core::maxflow::FlowGraph;
use multiscopic_core::{match_bm, match_gc, BmParams, CostVolume, FusionStrategy, ViewDirection};

fn test_scene(width: u32, height: u32) -> RenderedScene {
    let scene = SyntheticScene {
        width: width as usize,
        height: height as usize,
        d_min: 0.0,
        d_max: 12.0,
        layers: vec![
            Layer {
                x: 0,
                y: 0,
                w: width,
                h: height,
                disparity: 3.0,
                texture: Texture::Noise { seed: 10 },
            },
            Layer {
                x: width as i64 / 4,
                y: height as i64 / 4,
                w: width / 3,
                h: height / 3,
                disparity: 9.0,
                texture: Texture::Noise { seed: 11 },
            },
        ],
    };
    render_multiscopic(&scene, &ViewDirection::ALL, 1).unwrap()
}

fn bench_cost_volumes(c: &mut Criterion) {
    let r = test_scene(96, 96);
    let center = to_grayscale(&r.set.center);
    let right = to_grayscale(r.set.view(ViewDirection::Right).unwrap());
    c.bench_function("sad_volume 96x96 d12 block11", |b| {
        b.iter(|| sad_volume(&center, &right, ViewDirection::Right, 5, 1, 12).unwrap())
    });
    c.bench_function("bt_volume 96x96 d12", |b| {
        b.iter(|| bt_volume(&center, &right, ViewDirection::Right, 1, 12, false).unwrap())
    });
}

fn bench_fusion(c: &mut Criterion) {
    let r = test_scene(96, 96);
    let center = to_grayscale(&r.set.center);
    let volumes: Vec<CostVolume> = r
        .set
        .surround
        .iter()
        .map(|(dir, img)| bt_volume(&center, &to_grayscale(img), *dir, 1, 12, false).unwrap())
        .collect();
    let refs: Vec<&CostVolume> = volumes.iter().collect();
    c.bench_function("fuse heuristic 4 views 96x96 d12", |b| {
        b.iter(|| fuse(FusionStrategy::default(), &refs).unwrap())
    });
}

fn bench_maxflow(c: &mut Criterion) {
    // 64x64 grid, 4-connected, with terminal arcs: the shape the expansion
    // moves produce.
    c.bench_function("maxflow grid 64x64", |b| {
        b.iter(|| {
            let n = 64 * 64;
            let mut g = FlowGraph::new(n + 2, n, n + 1).unwrap();
            for i in 0..n {
                let (x, y) = (i % 64, i / 64);
                g.add_arc(n, i, ((x * 7 + y * 13) % 29 + 1) as i64, 0)
                    .unwrap();
                g.add_arc(i, n + 1, ((x * 11 + y * 3) % 31 + 1) as i64, 0)
                    .unwrap();
                if x + 1 < 64 {
                    g.add_arc(i, i + 1, 4, 4).unwrap();
                }
                if y + 1 < 64 {
                    g.add_arc(i, i + 64, 4, 4).unwrap();
                }
            }
            g.solve()
        })
    });
}

fn bench_matchers(c: &mut Criterion) {
    let r = test_scene(64, 64);
    let bm = BmParams {
        d_max: 12,
        ..Default::default()
    };
    c.bench_function("match_bm 64x64 d12", |b| {
        b.iter(|| match_bm(&r.set, &bm).unwrap())
    });

    let gc = GcParams {
        d_max: 12,
        max_sweeps: 1,
        ..Default::default()
    };
    c.bench_function("match_gc 64x64 d12 one sweep", |b| {
        b.iter(|| match_gc(&r.set, &gc).unwrap())
    });

    let model = EnergyModel::new(&r.set, &gc).unwrap();
    c.bench_function("expand 64x64 from occluded", |b| {
        b.iter(|| {
            let mut labeling = Labeling::new_occluded(64, 64);
            expand(&model, &mut labeling, 3)
        })
    });
}

criterion_group!(
    benches,
    bench_cost_volumes,
    bench_fusion,
    bench_maxflow,
    bench_matchers
);
criterion_main!(benches);
