use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbrw_bench::{binary_fair, common_shift, gaussian_fine};
use gbrw_core::recurse::{run, step_exact, Modes, StepOptions};
use gbrw_core::TailCurve;

fn exact_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_exact");
    for f in [binary_fair(), gaussian_fine(), common_shift()] {
        let u = TailCurve::base(*f.displacement.grid());
        group.bench_function(f.name, |b| {
            b.iter(|| {
                step_exact(
                    0,
                    &u,
                    &f.branching,
                    &f.displacement,
                    &StepOptions::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn sandwich_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_all_modes");
    group.sample_size(10);
    let f = gaussian_fine();
    for n in [4, 12] {
        group.bench_with_input(BenchmarkId::new(f.name, n), &n, |b, &n| {
            b.iter(|| {
                run(
                    &f.branching,
                    &f.displacement,
                    n,
                    Modes::ALL,
                    &StepOptions::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exact_step, sandwich_run);
criterion_main!(benches);
