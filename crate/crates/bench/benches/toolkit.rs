use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use tuneout_bench::compose_fixture;
use tuneout_core::atomic::{HyperfineState, SpeciesData};
use tuneout_core::kd::{bessel_j_all, diffraction_populations, invert_depth, InversionOptions};
use tuneout_core::stark::{recoil_energy, LightField};
use tuneout_core::tuneout::contribution_ledger;

fn ledger(c: &mut Criterion) {
    let data = SpeciesData::rubidium87();
    let state = HyperfineState::rb87_ground(1, 0).unwrap();
    let light = LightField::linear(790.0, 1360.0);
    c.bench_function("contribution_ledger", |b| {
        b.iter(|| contribution_ledger(black_box(&state), &light, &data).unwrap())
    });
}

fn kd(c: &mut Criterion) {
    c.bench_function("bessel_j_all_x10", |b| b.iter(|| bessel_j_all(12, black_box(10.0))));
    let recoil = recoil_energy(790.0185, SpeciesData::rubidium87().species.mass_kg.value);
    let pops = diffraction_populations(6.0, 8.75, recoil, Some(6));
    let options = InversionOptions::default();
    c.bench_function("invert_depth", |b| {
        b.iter(|| invert_depth(black_box(&pops), 8.75, recoil, &options).unwrap())
    });
}

fn compose(c: &mut Criterion) {
    let fixture = compose_fixture(500, 8, 1);
    let mut group = c.benchmark_group("fringe_removal");
    group.sample_size(20);
    let mut k = 0;
    group.bench_function("compose_500_frames_300x200", |b| {
        b.iter_batched(
            || {
                k = (k + 1) % fixture.signals.len();
                &fixture.signals[k]
            },
            |signal| fixture.basis.compose(signal).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, ledger, kd, compose);
criterion_main!(benches);
