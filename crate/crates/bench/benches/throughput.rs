//! Hot-path benchmarks: address translation, the cipher, tracker inserts,
//! and a short end-to-end kernel run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rowsim_core::cipher;
use rowsim_core::geometry::{Geometry, LineAddress, Mapping, StaticMapping};
use rowsim_core::mitigation::MitigationConfig;
use rowsim_core::rubix_d::{RubixDConfig, RubixDEngine};
use rowsim_core::rubix_s::RubixS;
use rowsim_core::sim::{
    GeometryConfig, MappingConfig, SimConfig, Simulator, WorkloadConfig, DEFAULT_SEED,
};
use rowsim_core::tracking::MisraGries;
use rowsim_core::workloads::{KernelKind, KernelSpec};

fn bench_mappings(c: &mut Criterion) {
    let geom = Geometry::baseline();
    let mut group = c.benchmark_group("map");
    group.throughput(Throughput::Elements(1));
    let lines: Vec<LineAddress> = {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..4096)
            .map(|_| LineAddress(rng.gen_range(0..geom.total_lines())))
            .collect()
    };
    for kind in [
        StaticMapping::CoffeeLake,
        StaticMapping::Skylake,
        StaticMapping::Mop,
    ] {
        let mapping = kind.build(geom).unwrap();
        let mut i = 0;
        group.bench_function(BenchmarkId::new("static", kind.name()), |b| {
            b.iter(|| {
                i = (i + 1) % lines.len();
                mapping.map(lines[i]).unwrap()
            })
        });
    }
    let rubix = RubixS::new(StaticMapping::CoffeeLake.build(geom).unwrap(), 4, 7).unwrap();
    let mut i = 0;
    group.bench_function("rubix-s:gs4", |b| {
        b.iter(|| {
            i = (i + 1) % lines.len();
            rubix.map(lines[i]).unwrap()
        })
    });
    let engine = RubixDEngine::new(geom, RubixDConfig::default(), 7).unwrap();
    let mut i = 0;
    group.bench_function("rubix-d:gs4-translate", |b| {
        b.iter(|| {
            i = (i + 1) % lines.len();
            engine.translate(lines[i]).unwrap()
        })
    });
    group.finish();
}

fn bench_cipher(c: &mut Criterion) {
    let key = cipher::keygen(3, 28).unwrap();
    let mut v = 0u64;
    c.bench_function("cipher/encrypt-28", |b| {
        b.iter(|| {
            v = (v + 1) & (key.domain() - 1);
            key.encrypt(v).unwrap()
        })
    });
}

fn bench_tracker(c: &mut Criterion) {
    let rows: Vec<u64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        (0..8192).map(|_| rng.gen_range(0..4096)).collect()
    };
    c.bench_function("tracker/misra-gries-insert", |b| {
        let mut tracker = MisraGries::new(1024, 64);
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % rows.len();
            tracker.insert(rows[i])
        })
    });
}

fn bench_end_to_end(c: &mut Criterion) {
    let cfg = SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Baseline,
        mapping: MappingConfig::RubixS { gang_size: 4 },
        mitigation: MitigationConfig::default(),
        workload: WorkloadConfig::Kernel(KernelSpec {
            access_count: 100_000,
            ..KernelSpec::new(KernelKind::Random)
        }),
        row_buffer_cap: Some(16),
        seed: DEFAULT_SEED,
        collect_attribution: false,
    };
    let mut group = c.benchmark_group("sim");
    group.sample_size(10);
    group.throughput(Throughput::Elements(100_000));
    group.bench_function("random-kernel-100k", |b| {
        b.iter(|| Simulator::run(&cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_mappings,
    bench_cipher,
    bench_tracker,
    bench_end_to_end
);
criterion_main!(benches);
