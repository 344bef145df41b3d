//! Same workloads with the rayon fan-out on and off.

use arbre_subst::par;
use arbre_subst::rauzy_viz::{fractal_cloud, Coloring};
use arbre_subst::verify::{self, Suite, VerifyConfig};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", false), ("parallel", true)]
}

fn rauzy_cloud(c: &mut Criterion) {
    let mut g = c.benchmark_group("rauzy_cloud_cylinder7");
    g.sample_size(10);
    for (name, on) in modes() {
        g.bench_function(BenchmarkId::new(name, 100_000), |b| {
            par::set_parallel(on);
            b.iter(|| fractal_cloud(3, black_box(100_000), Coloring::Cylinder(7)).unwrap());
        });
    }
    g.finish();
    par::set_parallel(true);
}

fn audit_suites(c: &mut Criterion) {
    let mut cfg = VerifyConfig::new(3);
    cfg.max_stage = 10;
    let mut g = c.benchmark_group("verify_core_d3");
    g.sample_size(10);
    for (name, on) in modes() {
        g.bench_function(BenchmarkId::new(name, cfg.max_stage), |b| {
            par::set_parallel(on);
            b.iter(|| verify::run(Suite::Core, black_box(&cfg)).unwrap());
        });
    }
    g.finish();
    par::set_parallel(true);
}

criterion_group!(benches, rauzy_cloud, audit_suites);
criterion_main!(benches);
