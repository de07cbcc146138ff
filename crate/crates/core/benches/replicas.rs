//! Replica fan-out, sequential loop vs rayon pool. Without the `parallel`
//! feature both arms run the same plain loop.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gmclab_core::atomic::{build_atomic_direct, sample_stable_atoms, ZMin};
use gmclab_core::chaos::build_chaos;
use gmclab_core::field::{Backend, FieldSampler};
use gmclab_core::kernels::{KernelSpec, LevelRange};
use gmclab_core::lattice::Lattice;
use gmclab_core::par::{map_indexed_with, tree_sum, Execution};
use gmclab_core::rng::{Purpose, RngStream};

const REPLICAS: usize = 256;

fn replicas(c: &mut Criterion) {
    let spec = KernelSpec::exact_1d(1.0).unwrap();
    let lattice = Lattice::unit(1, 1024).unwrap();
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(64).unwrap(), Backend::Auto).unwrap();
    let unit = lattice.domain();
    let z_min = ZMin::for_expected_count(1.0, 0.25, 1000.0).unwrap();

    let mut group = c.benchmark_group("replicas");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        group.bench_function(BenchmarkId::new("chaos_total", &name), |b| {
            b.iter(|| {
                let totals = map_indexed_with(exec, REPLICAS, |r| {
                    build_chaos(&sampler.sample_field(1, r as u64), 0.5).unwrap().total_mass()
                });
                tree_sum(&totals)
            })
        });
        group.bench_function(BenchmarkId::new("atomic_total", &name), |b| {
            b.iter(|| {
                let totals = map_indexed_with(exec, REPLICAS, |r| {
                    let field = sampler.sample_field(1, r as u64);
                    let mut rng = RngStream::new(1, r as u64, 0, Purpose::StableAtoms).rng();
                    let atoms = sample_stable_atoms(&unit, 0.25, z_min, &mut rng).unwrap();
                    build_atomic_direct(&field, 0.5, 0.25, &atoms).unwrap().ln_total_mass()
                });
                tree_sum(&totals)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replicas);
criterion_main!(benches);
