//! Sequential against rayon-parallel execution of the expensive stages.
//! Build with `--no-default-features` to see the fallback path, where both
//! variants run sequentially.

use std::hint::black_box;

use clothforge::config::PipelineConfig;
use clothforge::par::Exec;
use clothforge::pipeline::{make_mesh, render_sample, Sample};
use clothforge::render::Renderer;
use clothforge::scene::compose_scene;
use clothforge::seed::{stream_rng, Stream};
use clothforge::ClothCategory;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn execs() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel { workers: 0 })]
}

fn undeformed_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.deform.undeformed = true;
    cfg
}

fn render_frame(c: &mut Criterion) {
    let cfg = undeformed_config();
    let s = Sample {
        category: ClothCategory::Tshirt,
        id: 0,
    };
    let cloth = make_mesh(&cfg, s).unwrap();
    let mut rng = stream_rng(s.seed(cfg.master_seed), Stream::Scene);
    let material = cfg.materials.sample(&mut rng);
    let scene = compose_scene(&cloth, material, &cfg.scene, &mut rng).unwrap();
    let renderer = Renderer::new(&scene).unwrap();
    let mut g = c.benchmark_group("render_frame");
    g.sample_size(10);
    for (name, exec) in execs() {
        g.bench_function(name, |b| b.iter(|| black_box(renderer.render(&exec))));
    }
    g.finish();
}

fn mesh_batch(c: &mut Criterion) {
    let cfg = undeformed_config();
    let n = 12;
    let mut g = c.benchmark_group("mesh_batch");
    g.sample_size(10);
    for (name, exec) in execs() {
        g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
            b.iter(|| {
                exec.try_map(n, |i| {
                    let s = Sample {
                        category: ClothCategory::ALL[i % 3],
                        id: i as u64,
                    };
                    make_mesh(&cfg, s)
                })
                .unwrap()
            })
        });
    }
    g.finish();
}

fn sample_batch(c: &mut Criterion) {
    let cfg = undeformed_config();
    let n = 4;
    let meshes: Vec<_> = (0..n)
        .map(|i| {
            let s = Sample {
                category: ClothCategory::ALL[i % 3],
                id: i as u64,
            };
            (s, make_mesh(&cfg, s).unwrap())
        })
        .collect();
    let mut g = c.benchmark_group("render_batch");
    g.sample_size(10);
    for (name, exec) in execs() {
        g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
            // Samples in parallel, each frame single-threaded, like `generate`.
            b.iter(|| {
                exec.try_map(n, |i| render_sample(&cfg, meshes[i].0, &meshes[i].1, &Exec::Sequential))
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, render_frame, mesh_batch, sample_batch);
criterion_main!(benches);
