//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p rowsim-cli --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rowsim_core::geometry::{verify_bijection, Geometry, StaticMapping};
use rowsim_core::mitigation::{MitigationConfig, MitigationScheme};
use rowsim_core::rubix_d::{remap_period, storage_bytes, RemapState, RubixDConfig};
use rowsim_core::rubix_s::RubixS;
use rowsim_core::sim::{
    illustration, reference_census, sweep, AttackConfig, GeometryConfig, MappingConfig, SimConfig,
    Simulator, WorkloadConfig, DEFAULT_SEED,
};
use rowsim_core::tracking::tracker_guarantee_check;
use rowsim_core::workloads::{AttackKind, KernelKind, KernelSpec};

fn pass(criterion: u32, name: &str) {
    println!("ACCEPTANCE {criterion:02} {name}: PASS");
}

#[test]
fn acceptance_01_illustration_table() {
    let started = Instant::now();
    let table = illustration(DEFAULT_SEED).unwrap();
    let cell = |kernel: &str, mapping: &str| {
        table
            .cells
            .iter()
            .find(|c| c.kernel == kernel && c.mapping == mapping)
            .unwrap_or_else(|| panic!("missing cell {kernel}/{mapping}"))
    };

    assert_eq!(
        cell("stream", "linear").hot_rows_64,
        0,
        "stream has no hot rows"
    );
    assert_eq!(
        cell("stride", "linear").hot_rows_64,
        1000,
        "stride makes all 1000 rows hot"
    );
    assert!(
        cell("random", "linear").hot_rows_64 >= 990,
        "random heats at least 990 of 1000"
    );
    for kernel in ["stream", "stride", "random"] {
        let hot = cell(kernel, "rubix-s:gs1").hot_rows_64;
        assert!(
            hot <= 1,
            "{kernel} under the encrypted mapping: {hot} hot rows"
        );
    }

    let stream = cell("stream", "linear");
    assert!(
        (15.0..=17.0).contains(&stream.acts_per_row_mean),
        "stream activations/row {}",
        stream.acts_per_row_mean
    );
    let random = cell("random", "linear");
    assert!(
        (random.acts_per_row_mean - 1000.0).abs() <= 10.0,
        "random mean {}",
        random.acts_per_row_mean
    );
    assert!(
        (random.acts_per_row_stdev - 32.0).abs() <= 0.2 * 32.0,
        "random stdev {}",
        random.acts_per_row_stdev
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "illustration took {elapsed:?}"
    );
    pass(1, &format!("illustration-table ({elapsed:.2?})"));
}

#[test]
fn acceptance_02_scatter_census() {
    let census = reference_census(DEFAULT_SEED).unwrap();
    let m1 = census.mean_bucket(1);
    let m2 = census.mean_bucket(2);
    let m3 = census.mean_bucket(3);
    assert!(
        (m1 - 61_500.0).abs() <= 0.05 * 61_500.0,
        "1-line bucket mean {m1}"
    );
    assert!(
        (m2 - 1_900.0).abs() <= 0.10 * 1_900.0,
        "2-line bucket mean {m2}"
    );
    assert!((m3 - 40.0).abs() <= 0.50 * 40.0, "3-line bucket mean {m3}");
    let seeds_with_4 = census.seeds_with_bucket_at_least(4);
    assert!(
        10 - seeds_with_4 >= 9,
        "{seeds_with_4}/10 seeds have a 4-line row"
    );
    pass(2, "scatter-census");
}

#[test]
fn acceptance_03_rubix_d_figure_replay() {
    let mut state = RemapState::with_keys(3, 0b010, 0b110, 0).unwrap();

    // Translation worked values at the three pointer positions.
    assert_eq!(
        state.translate(0b000),
        0b010,
        "ptr 0: pure xor with currKey"
    );
    let mid = RemapState::with_keys(3, 0b010, 0b110, 1).unwrap();
    assert_eq!(mid.translate(0b010), 0b110);
    assert_eq!(mid.translate(0b100), 0b000);
    assert_eq!(mid.translate(0b000), 0b010);
    let done = RemapState::with_keys(3, 0b010, 0b110, 8).unwrap();
    for row in 0..8 {
        assert_eq!(
            done.translate(row),
            row ^ 0b010 ^ 0b110,
            "ptr 2^m: xor with both keys"
        );
    }

    // Remap every 100 accesses: the episode schedule is exact.
    let expected = [
        (0b000, 0b110, false),
        (0b001, 0b111, false),
        (0b010, 0b100, false),
        (0b011, 0b101, false),
        (0b100, 0b010, true),
        (0b101, 0b011, true),
        (0b110, 0b000, true),
        (0b111, 0b001, true),
    ];
    let mut events = Vec::new();
    for access in 1..=800u32 {
        if access % 100 == 0 {
            events.push(state.remap_episode(4).unwrap());
        }
    }
    let got: Vec<(u64, u64, bool)> = events
        .iter()
        .map(|e| (e.src_row, e.dst_row, e.skipped))
        .collect();
    assert_eq!(got, expected.to_vec());

    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    state.rotate_epoch(&mut rng).unwrap();
    assert_eq!(
        state.curr_key(),
        0b100,
        "rotation folds nextKey into currKey"
    );
    assert_eq!(state.ptr(), 0);
    pass(3, "rubix-d-figure-replay");
}

#[test]
fn acceptance_04_permutation_suites() {
    let geom = Geometry::test_64k();
    for kind in [
        StaticMapping::Linear,
        StaticMapping::CoffeeLake,
        StaticMapping::Skylake,
        StaticMapping::Mop,
    ] {
        let check = verify_bijection(&kind.build(geom).unwrap()).unwrap();
        assert!(check.is_bijective(), "{kind:?}: {check:?}");
    }
    for gang_size in [1u32, 2, 4] {
        let mapping = RubixS::new(
            StaticMapping::CoffeeLake.build(geom).unwrap(),
            gang_size,
            DEFAULT_SEED,
        )
        .unwrap();
        let check = verify_bijection(&mapping).unwrap();
        assert!(check.is_bijective(), "rubix-s gs{gang_size}: {check:?}");
    }

    // 1000 random (keys, ptr) states over row spaces up to 2^12.
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for case in 0..1000u32 {
        let bits = rng.gen_range(1..=12u32);
        let mut state = RemapState::random(bits, &mut rng);
        let target = rng.gen_range(0..=state.rows());
        while state.ptr() < target {
            state.remap_episode(4).unwrap();
        }
        let mut seen = vec![false; state.rows() as usize];
        for row in 0..state.rows() {
            let t = state.translate(row) as usize;
            assert!(!seen[t], "case {case}: collision at row {row}");
            seen[t] = true;
        }
    }
    pass(4, "permutation-suites");
}

fn attack_config(scheme: MitigationScheme, kind: AttackKind, t_rh: u64) -> SimConfig {
    SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Baseline,
        mapping: MappingConfig::CoffeeLake,
        mitigation: MitigationConfig { scheme, t_rh },
        workload: WorkloadConfig::Attack(AttackConfig {
            kind,
            intensity: None,
            windows: Some(100),
            target_row: None,
        }),
        row_buffer_cap: Some(16),
        seed: DEFAULT_SEED,
        collect_attribution: false,
    }
}

#[test]
fn acceptance_05_security_property_suite() {
    let started = Instant::now();
    let attacks = [
        AttackKind::SingleSided,
        AttackKind::DoubleSided,
        AttackKind::ManySided,
        AttackKind::HalfDouble,
        AttackKind::FlushReload,
    ];
    let schemes = [
        MitigationScheme::Aqua,
        MitigationScheme::Srs,
        MitigationScheme::Blockhammer,
    ];
    let mut cases = Vec::new();
    for scheme in schemes {
        for kind in attacks {
            for t_rh in [128u64, 256, 1024] {
                cases.push((scheme, kind, t_rh));
            }
        }
    }
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(scheme, kind, t_rh)| {
            let report = Simulator::run(&attack_config(scheme, kind, t_rh)).unwrap();
            (!report.flips.is_empty()).then(|| {
                format!(
                    "{} vs {} at {t_rh}: {} flips",
                    scheme.name(),
                    kind.name(),
                    report.flips.len()
                )
            })
        })
        .collect();
    assert!(
        failures.is_empty(),
        "flips under secure mitigations: {failures:?}"
    );

    // Negative control: Half-Double defeats victim refresh.
    let control = Simulator::run(&attack_config(
        MitigationScheme::VictimRefresh,
        AttackKind::HalfDouble,
        128,
    ))
    .unwrap();
    assert!(
        !control.flips.is_empty(),
        "victim refresh must fail against Half-Double"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "security suite took {elapsed:?}"
    );
    pass(5, &format!("security-property-suite ({elapsed:.2?})"));
}

#[test]
fn acceptance_06_remap_overhead_accounting() {
    // Steady-state overhead needs complete remap epochs, so the run uses a
    // small row space and sweeps it many times.
    let cfg = SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Custom {
            channels: 1,
            banks_per_channel: 4,
            rows_per_bank: 8,
            row_size_lines: 128,
        },
        mapping: MappingConfig::RubixD {
            gang_size: 4,
            segments: 1,
            remap_probability: 0.01,
        },
        mitigation: MitigationConfig::default(),
        workload: WorkloadConfig::Kernel(KernelSpec {
            footprint_bytes: 4096 * 64,
            access_count: 1_200_000,
            ..KernelSpec::new(KernelKind::Random)
        }),
        row_buffer_cap: Some(16),
        seed: DEFAULT_SEED,
        collect_attribution: false,
    };
    let report = Simulator::run(&cfg).unwrap();
    assert!(
        report.total_activations >= 1_000_000,
        "need at least a million activations"
    );
    let ratio = report.remap_activations as f64 / report.total_activations as f64;
    assert!((ratio - 0.015).abs() <= 0.002, "remap overhead {ratio:.4}");

    assert_eq!(remap_period(2_000_000, 1, 0.01), 200_000_000.0);
    assert_eq!(remap_period(2_000_000, 32, 0.01), 6_250_000.0);
    let gs4 = RubixDConfig {
        gang_size: 4,
        segments_per_vgroup: 1,
        remap_probability: 0.01,
    };
    assert_eq!(gs4.storage_bytes(&Geometry::baseline()).unwrap(), 512);
    assert_eq!(storage_bytes(32, 32), 16 * 1024);
    pass(6, "remap-overhead-accounting");
}

#[test]
fn acceptance_07_row_buffer_hit_rates() {
    let stream = |mapping: MappingConfig| SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Baseline,
        mapping,
        mitigation: MitigationConfig::default(),
        workload: WorkloadConfig::Kernel(KernelSpec {
            footprint_bytes: 4 * 1024 * 1024,
            ..KernelSpec::new(KernelKind::Stream)
        }),
        row_buffer_cap: None,
        seed: DEFAULT_SEED,
        collect_attribution: false,
    };
    let gs1 = Simulator::run(&stream(MappingConfig::RubixS { gang_size: 1 })).unwrap();
    let gs2 = Simulator::run(&stream(MappingConfig::RubixS { gang_size: 2 })).unwrap();
    let gs4 = Simulator::run(&stream(MappingConfig::RubixS { gang_size: 4 })).unwrap();
    let coffee = Simulator::run(&stream(MappingConfig::CoffeeLake)).unwrap();
    assert_eq!(gs1.hit_rate, 0.0, "GS1 sequential stream never hits");
    assert_eq!(gs2.hit_rate, 0.5, "GS2 hits exactly every second access");
    assert_eq!(
        gs4.hit_rate, 0.75,
        "GS4 hits exactly three of four accesses"
    );
    assert!(
        gs1.hit_rate < gs2.hit_rate
            && gs2.hit_rate < gs4.hit_rate
            && gs4.hit_rate < coffee.hit_rate,
        "ordering GS1 < GS2 < GS4 < Coffee Lake ({})",
        coffee.hit_rate
    );
    pass(7, "row-buffer-hit-rates");
}

#[test]
fn acceptance_08_mitigation_scaling() {
    // Per-line activation rates comparable to cache-filtered workloads:
    // 1M accesses over a 16 MB footprint within the window.
    let base = SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Baseline,
        mapping: MappingConfig::CoffeeLake,
        mitigation: MitigationConfig {
            scheme: MitigationScheme::Aqua,
            t_rh: 128,
        },
        workload: WorkloadConfig::Kernel(KernelSpec {
            footprint_bytes: 16 * 1024 * 1024,
            ..KernelSpec::new(KernelKind::Random)
        }),
        row_buffer_cap: Some(16),
        seed: DEFAULT_SEED,
        collect_attribution: false,
    };
    let cells = sweep(
        &base,
        &[128, 256, 512, 1024],
        &[
            MappingConfig::CoffeeLake,
            MappingConfig::RubixS { gang_size: 1 },
            MappingConfig::RubixS { gang_size: 4 },
        ],
    )
    .unwrap();
    let cell = |mapping: &str, t_rh: u64| {
        cells
            .iter()
            .find(|c| c.mapping == mapping && c.t_rh == t_rh)
            .unwrap()
    };
    // Strictly increasing mitigation work as the threshold drops.
    let mut last_events = 0;
    let mut last_blocked = 0.0;
    for t_rh in [1024u64, 512, 256, 128] {
        let report = &cell("coffeelake", t_rh).report;
        let events = report.total_mitigation_events();
        let blocked = report.channel_blocked_ns;
        assert!(
            events > last_events,
            "events at t_rh {t_rh}: {events} vs {last_events}"
        );
        assert!(
            blocked > last_blocked,
            "blocked at t_rh {t_rh}: {blocked} vs {last_blocked}"
        );
        last_events = events;
        last_blocked = blocked;
    }
    // At t_rh 128 the randomized mappings cut mitigation invocations by
    // at least two orders of magnitude.
    let baseline_events = cell("coffeelake", 128).report.total_mitigation_events();
    for mapping in ["rubix-s:gs1", "rubix-s:gs4"] {
        let events = cell(mapping, 128).report.total_mitigation_events();
        assert!(
            events * 100 <= baseline_events,
            "{mapping}: {events} events vs baseline {baseline_events}"
        );
    }
    pass(8, "mitigation-scaling");
}

#[test]
fn acceptance_09_tracker_guarantee() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for case in 0..100u32 {
        let capacity = rng.gen_range(4..64usize);
        let threshold = rng.gen_range(8..128u64);
        let stream: Vec<u64> = match case % 4 {
            0 => (0..50_000).map(|_| rng.gen_range(0..256u64)).collect(),
            1 => (0..50_000u64).map(|i| i % (capacity as u64 + 1)).collect(),
            2 => (0..50_000)
                .map(|i| {
                    if i % 3 == 0 {
                        7
                    } else {
                        rng.gen_range(8..512u64)
                    }
                })
                .collect(),
            _ => (0..50_000)
                .map(|_| {
                    let r: f64 = rng.gen();
                    (1.0 / r.max(1e-9)).min(512.0) as u64
                })
                .collect(),
        };
        assert!(
            tracker_guarantee_check(&stream, capacity, threshold),
            "case {case}: capacity {capacity}, threshold {threshold}"
        );
    }
    pass(9, "tracker-guarantee");
}

#[test]
fn acceptance_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "geometry": "illustration",
  "mapping": { "rubix-s": { "gang_size": 2 } },
  "mitigation": { "scheme": "none", "t_rh": 128 },
  "workload": { "kernel": { "kind": "random" } },
  "row_buffer_cap": 16,
  "seed": 7
}"#,
    )
    .unwrap();
    let run = |out: &str| {
        let out_dir = dir.path().join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_rowsim"))
            .args(["simulate", "--config"])
            .arg(&config_path)
            .args(["--seed", "7", "--out"])
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out_dir.join("report.json")).unwrap()
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(
        first, second,
        "same config and seed must give identical bytes"
    );
    pass(10, "determinism");
}
