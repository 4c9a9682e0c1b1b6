//! Verification suites behind `rowsim verify`.

use rayon::prelude::*;

use rowsim_core::error::{Result, SimError};
use rowsim_core::geometry::{verify_bijection, Geometry, StaticMapping};
use rowsim_core::mitigation::{MitigationConfig, MitigationScheme};
use rowsim_core::rubix_d::RemapState;
use rowsim_core::rubix_s::RubixS;
use rowsim_core::sim::{
    AttackConfig, GeometryConfig, MappingConfig, SimConfig, Simulator, WorkloadConfig, DEFAULT_SEED,
};
use rowsim_core::tracking::tracker_guarantee_check;
use rowsim_core::workloads::AttackKind;

pub fn run_suite(name: &str, force_scheme: Option<&str>) -> Result<bool> {
    match name {
        "bijection" => bijection_suite(),
        "rubixd-permutation" => rubixd_permutation_suite(),
        "security" => security_suite(force_scheme),
        "tracker" => tracker_suite(),
        other => Err(SimError::Config(format!(
            "unknown suite {other:?}; expected bijection, rubixd-permutation, security, or tracker"
        ))),
    }
}

fn bijection_suite() -> Result<bool> {
    let geom = Geometry::test_64k();
    let mut all_ok = true;
    for kind in [
        StaticMapping::Linear,
        StaticMapping::CoffeeLake,
        StaticMapping::Skylake,
        StaticMapping::Mop,
    ] {
        let check = verify_bijection(&kind.build(geom)?)?;
        println!(
            "  {:<14} {}",
            kind.name(),
            if check.is_bijective() {
                "bijective"
            } else {
                "FAIL"
            }
        );
        all_ok &= check.is_bijective();
    }
    for gang_size in [1u32, 2, 4] {
        let mapping = RubixS::new(
            StaticMapping::CoffeeLake.build(geom)?,
            gang_size,
            DEFAULT_SEED,
        )?;
        let check = verify_bijection(&mapping)?;
        println!(
            "  rubix-s:gs{gang_size}    {}",
            if check.is_bijective() {
                "bijective"
            } else {
                "FAIL"
            }
        );
        all_ok &= check.is_bijective();
    }
    Ok(all_ok)
}

fn rubixd_permutation_suite() -> Result<bool> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut checked = 0u32;
    for _ in 0..1000 {
        let bits = rng.gen_range(1..=12u32);
        let mut state = RemapState::random(bits, &mut rng);
        // Any pointer position, including mid-epoch and the end.
        let rows = state.rows();
        let target = rng.gen_range(0..=rows);
        while state.ptr() < target {
            state.remap_episode(4)?;
        }
        let mut seen = vec![false; rows as usize];
        for row in 0..rows {
            let t = state.translate(row) as usize;
            if seen[t] {
                println!("  state m={bits} ptr={} collides at row {row}", state.ptr());
                return Ok(false);
            }
            seen[t] = true;
        }
        checked += 1;
    }
    println!("  {checked} random (keys, ptr) states: all permutations");
    Ok(checked == 1000)
}

pub const SECURITY_ATTACKS: [AttackKind; 5] = [
    AttackKind::SingleSided,
    AttackKind::DoubleSided,
    AttackKind::ManySided,
    AttackKind::HalfDouble,
    AttackKind::FlushReload,
];

pub const SECURITY_THRESHOLDS: [u64; 3] = [128, 256, 1024];

pub fn attack_run(
    scheme: MitigationScheme,
    kind: AttackKind,
    t_rh: u64,
    windows: u32,
) -> SimConfig {
    SimConfig {
        schema_version: 1,
        geometry: GeometryConfig::Baseline,
        mapping: MappingConfig::CoffeeLake,
        mitigation: MitigationConfig { scheme, t_rh },
        workload: WorkloadConfig::Attack(AttackConfig {
            kind,
            intensity: None,
            windows: Some(windows),
            target_row: None,
        }),
        row_buffer_cap: Some(16),
        seed: DEFAULT_SEED,
        collect_attribution: false,
    }
}

fn security_suite(force_scheme: Option<&str>) -> Result<bool> {
    if let Some(name) = force_scheme {
        let scheme = MitigationScheme::parse(name)?;
        return forced_security(scheme);
    }
    let schemes = [
        MitigationScheme::Aqua,
        MitigationScheme::Srs,
        MitigationScheme::Blockhammer,
    ];
    let mut cases = Vec::new();
    for scheme in schemes {
        for kind in SECURITY_ATTACKS {
            for t_rh in SECURITY_THRESHOLDS {
                cases.push((scheme, kind, t_rh));
            }
        }
    }
    let results: Vec<(String, usize)> = cases
        .par_iter()
        .map(|&(scheme, kind, t_rh)| {
            let report = Simulator::run(&attack_run(scheme, kind, t_rh, 100))?;
            Ok((
                format!("{} vs {} at t_rh {}", scheme.name(), kind.name(), t_rh),
                report.flips.len(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut all_ok = true;
    for (label, flips) in &results {
        let ok = *flips == 0;
        println!("  {:<44} {}", label, if ok { "no flips" } else { "FLIPS" });
        all_ok &= ok;
    }
    // Negative control: the same pattern must defeat victim refresh.
    let control = Simulator::run(&attack_run(
        MitigationScheme::VictimRefresh,
        AttackKind::HalfDouble,
        128,
        100,
    ))?;
    let control_ok = !control.flips.is_empty();
    println!(
        "  victim-refresh vs half_double at t_rh 128       {} (negative control)",
        if control_ok {
            "flips as expected"
        } else {
            "UNEXPECTEDLY CLEAN"
        }
    );
    Ok(all_ok && control_ok)
}

fn forced_security(scheme: MitigationScheme) -> Result<bool> {
    let mut all_ok = true;
    for kind in SECURITY_ATTACKS {
        let report = Simulator::run(&attack_run(scheme, kind, 128, 100))?;
        if report.flips.is_empty() {
            println!("  {} vs {}: no flips", scheme.name(), kind.name());
        } else {
            all_ok = false;
            let rows: Vec<u64> = report.flips.iter().map(|f| f.row_id).take(4).collect();
            println!(
                "  {} vs {}: {} flips, rows {:?}",
                scheme.name(),
                kind.name(),
                report.flips.len(),
                rows
            );
        }
    }
    Ok(all_ok)
}

fn tracker_suite() -> Result<bool> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut passed = 0u32;
    let total = 100u32;
    for case in 0..total {
        let capacity = rng.gen_range(4..64usize);
        let threshold = rng.gen_range(8..128u64);
        let stream: Vec<u64> = match case % 4 {
            // Uniform random rows.
            0 => (0..50_000).map(|_| rng.gen_range(0..256u64)).collect(),
            // Adversarial round-robin of capacity+1 rows.
            1 => (0..50_000u64).map(|i| i % (capacity as u64 + 1)).collect(),
            // One heavy row inside background noise.
            2 => (0..50_000)
                .map(|i| {
                    if i % 3 == 0 {
                        7
                    } else {
                        rng.gen_range(8..512u64)
                    }
                })
                .collect(),
            // Skewed: row k appears ~1/k of the time.
            _ => (0..50_000)
                .map(|_| {
                    let r: f64 = rng.gen();
                    (1.0 / r.max(1e-9)).min(512.0) as u64
                })
                .collect(),
        };
        if tracker_guarantee_check(&stream, capacity, threshold) {
            passed += 1;
        } else {
            println!("  case {case}: capacity {capacity} threshold {threshold} ESCAPED");
        }
    }
    println!("  {passed}/{total} streams satisfy the no-escape bound");
    Ok(passed == total)
}
