//! Criterion comparison of the two hole-locating methods on rendered
//! layouts of generated networks.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use holescan::detect::{detect_holes, DetectMethod, DetectParams};
use holescan::eval::LayoutClass;
use holescan::layout::{target_canvas, Algorithm, LayoutRun};
use holescan::raster::{invert, rasterize, threshold, BinaryImage, RasterParams};
use holescan::topology::generate_topology;

fn render(n: usize, degree: f64, seed: u64) -> BinaryImage {
    let spec = LayoutClass::Sparse.gen_spec(n, degree, seed);
    let (topology, _) = generate_topology(&spec).expect("generation");
    let canvas = target_canvas(topology.node_count).0;
    let run = LayoutRun::with_defaults(Algorithm::Kk, canvas, topology.node_count, seed);
    let result = holescan::layout::run_layout(&topology, &run).expect("layout");
    let params = holescan::eval::harness_raster_params();
    let gray = rasterize(&result.layout, &topology, &params);
    invert(&threshold(&gray, params.threshold))
}

fn bench_locate(c: &mut Criterion) {
    let mut group = c.benchmark_group("locate");
    group.sample_size(10);
    for &(n, degree) in &[(500usize, 6.0f64), (500, 15.0), (2000, 6.0), (2000, 15.0)] {
        let image = render(n, degree, 42);
        for method in [DetectMethod::Ccl, DetectMethod::Ct] {
            let params = DetectParams { method, ..Default::default() };
            let label = format!("n{n}_d{degree}");
            group.bench_with_input(
                BenchmarkId::new(method.name(), label),
                &image,
                |b, img| b.iter(|| detect_holes(img, &params)),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_locate);
criterion_main!(benches);
