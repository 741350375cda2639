use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ilslab_core::cheeger::{relax_energy, RelaxationParams};
use ilslab_core::instance::{generate_instance, GenSpec, Instance};
use ilslab_core::slope::{slope_field, SlopeVariant};

fn inst(s: usize, m: usize, n: usize, seed: u64) -> Instance {
    generate_instance(GenSpec { s, m, n, seed }).unwrap()
}

fn bench_fiber_distance(c: &mut Criterion) {
    let instance = inst(6, 3, 32, 1);
    let q = &instance.quotient;
    let phi = instance.section("phi").unwrap();
    c.bench_function("fiber_distance_all_pairs_n32", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..phi.len() {
                for j in 0..phi.len() {
                    if i != j {
                        acc += q
                            .fiber_distance(phi.value(i), instance.base.point(j), 1.0)
                            .unwrap();
                    }
                }
            }
            black_box(acc)
        })
    });
}

fn bench_slope_field(c: &mut Criterion) {
    let instance = inst(4, 2, 32, 2);
    let phi = instance.section("phi").unwrap();
    c.bench_function("asymptotic_slope_field_n32", |b| {
        b.iter(|| black_box(slope_field(phi, &instance.schedule, SlopeVariant::Asymptotic).unwrap()))
    });
}

fn bench_relaxation(c: &mut Criterion) {
    let instance = inst(3, 1, 10, 3);
    let phi = instance.section("phi").unwrap();
    let eps = instance.schedule.radii()[0];
    let mut params = RelaxationParams::new(eps, 1e6);
    params.restarts = 2;
    params.max_iters = 400;
    c.bench_function("relax_energy_n10", |b| {
        b.iter(|| {
            black_box(
                relax_energy(phi, &instance.class, &params, SlopeVariant::Asymptotic).unwrap(),
            )
        })
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_fiber_distance, bench_slope_field, bench_relaxation
}
criterion_main!(kernels);
