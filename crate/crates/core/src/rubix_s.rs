//! Rubix-S: static randomized line-to-row mapping.
//!
//! The line address is split into a gang offset (the low `k` bits, left in
//! the clear so a gang of 2^k contiguous lines stays together) and a gang
//! address (the remaining bits), which is encrypted before the result is
//! routed through a conventional base mapping. The permutation is fixed for
//! the lifetime of the key, i.e. until "reboot".

use std::collections::HashMap;

use crate::cipher::{self, CipherKey};
use crate::error::{Result, SimError};
use crate::geometry::{
    Geometry, LineAddress, Mapping, PhysicalLocation, StaticMapper, StaticMapping,
};

/// Gang sizes supported by the address path.
pub const GANG_SIZES: [u32; 3] = [1, 2, 4];

/// Static randomized mapping: encrypted gang address routed through a base
/// mapping.
#[derive(Debug, Clone)]
pub struct RubixS {
    base: StaticMapper,
    key: CipherKey,
    gang_size: u32,
    gang_bits: u32,
    seed: u64,
}

pub(crate) fn check_gang_size(gang_size: u32) -> Result<u32> {
    if !GANG_SIZES.contains(&gang_size) {
        return Err(SimError::Config(format!(
            "gang size must be one of {GANG_SIZES:?}, got {gang_size}"
        )));
    }
    Ok(gang_size.trailing_zeros())
}

impl RubixS {
    /// Builds the mapping for `base`'s geometry with a key derived from
    /// `seed`. The cipher width is `line_addr_bits - log2(gang_size)`.
    pub fn new(base: StaticMapper, gang_size: u32, seed: u64) -> Result<Self> {
        let gang_bits = check_gang_size(gang_size)?;
        let width = base.geometry().line_addr_bits() - gang_bits;
        let key = cipher::keygen(seed, width)?;
        Ok(RubixS {
            base,
            key,
            gang_size,
            gang_bits,
            seed,
        })
    }

    pub fn gang_size(&self) -> u32 {
        self.gang_size
    }

    pub fn base(&self) -> &StaticMapper {
        &self.base
    }
}

impl Mapping for RubixS {
    fn geometry(&self) -> &Geometry {
        self.base.geometry()
    }

    fn map(&self, line: LineAddress) -> Result<PhysicalLocation> {
        if !self.geometry().contains(line) {
            return Err(SimError::AddressRange {
                line: line.0,
                limit: self.geometry().total_lines(),
            });
        }
        let low = line.0 & (self.gang_size as u64 - 1);
        let high = line.0 >> self.gang_bits;
        let encrypted = self.key.encrypt(high)?;
        self.base
            .map(LineAddress((encrypted << self.gang_bits) | low))
    }

    fn unmap(&self, loc: PhysicalLocation) -> Result<LineAddress> {
        let mapped = self.base.unmap(loc)?;
        let low = mapped.0 & (self.gang_size as u64 - 1);
        let high = self.key.decrypt(mapped.0 >> self.gang_bits)?;
        Ok(LineAddress((high << self.gang_bits) | low))
    }

    fn label(&self) -> String {
        format!("rubix-s:gs{}(seed={})", self.gang_size, self.seed)
    }
}

/// `result[j - 1]` = number of rows that received exactly `j` lines.
pub fn lines_per_row_histogram(mapping: &dyn Mapping, footprint_lines: u64) -> Result<Vec<u64>> {
    let geom = *mapping.geometry();
    if footprint_lines > geom.total_lines() {
        return Err(SimError::Validation(format!(
            "footprint of {footprint_lines} lines exceeds the address space"
        )));
    }
    let mut per_row: HashMap<u64, u32> = HashMap::new();
    for line in 0..footprint_lines {
        let loc = mapping.map(LineAddress(line))?;
        *per_row.entry(geom.row_index(loc)).or_insert(0) += 1;
    }
    let mut buckets: Vec<u64> = Vec::new();
    for &count in per_row.values() {
        let idx = count as usize - 1;
        if buckets.len() <= idx {
            buckets.resize(idx + 1, 0);
        }
        buckets[idx] += 1;
    }
    Ok(buckets)
}

/// Per-bucket mean and spread of [`lines_per_row_histogram`] across seeds.
#[derive(Debug, Clone)]
pub struct ScatterCensus {
    /// `per_seed[s][j - 1]` = rows with exactly `j` lines under seed `s`.
    pub per_seed: Vec<Vec<u64>>,
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

impl ScatterCensus {
    /// Mean count of rows holding exactly `j` lines.
    pub fn mean_bucket(&self, j: usize) -> f64 {
        if j == 0 || j > self.mean.len() {
            0.0
        } else {
            self.mean[j - 1]
        }
    }

    /// Number of seeds whose histogram has any row with `j` or more lines.
    pub fn seeds_with_bucket_at_least(&self, j: usize) -> usize {
        self.per_seed
            .iter()
            .filter(|h| h.iter().skip(j.saturating_sub(1)).any(|&n| n > 0))
            .count()
    }
}

/// Maps a contiguous footprint under a fresh key per seed and reports how
/// many rows received exactly 1, 2, 3, ... lines, averaged across seeds.
///
/// Single-seed Poisson noise in the small buckets is large, so census
/// consumers should hand in at least 10 seeds.
pub fn scatter_census(
    base_kind: StaticMapping,
    geom: Geometry,
    gang_size: u32,
    footprint_lines: u64,
    seeds: &[u64],
) -> Result<ScatterCensus> {
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut width = 0usize;
    for &seed in seeds {
        let mapping = RubixS::new(base_kind.build(geom)?, gang_size, seed)?;
        let hist = lines_per_row_histogram(&mapping, footprint_lines)?;
        width = width.max(hist.len());
        per_seed.push(hist);
    }
    let n = per_seed.len().max(1) as f64;
    let mut mean = vec![0.0; width];
    for hist in &per_seed {
        for (i, &v) in hist.iter().enumerate() {
            mean[i] += v as f64 / n;
        }
    }
    let mut stdev = vec![0.0; width];
    if per_seed.len() > 1 {
        for (i, sd) in stdev.iter_mut().enumerate() {
            let var = per_seed
                .iter()
                .map(|h| {
                    let v = h.get(i).copied().unwrap_or(0) as f64 - mean[i];
                    v * v
                })
                .sum::<f64>()
                / (n - 1.0);
            *sd = var.sqrt();
        }
    }
    Ok(ScatterCensus {
        per_seed,
        mean,
        stdev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::verify_bijection;

    fn gs4() -> RubixS {
        RubixS::new(
            StaticMapping::CoffeeLake
                .build(Geometry::test_64k())
                .unwrap(),
            4,
            11,
        )
        .unwrap()
    }

    #[test]
    fn gang_siblings_share_a_row() {
        let m = gs4();
        let head = m.map(LineAddress(0)).unwrap();
        let mut columns = vec![head.column];
        for i in 1..4u64 {
            let l = m.map(LineAddress(i)).unwrap();
            assert_eq!(
                (l.channel, l.bank, l.row),
                (head.channel, head.bank, head.row)
            );
            columns.push(l.column);
        }
        columns.sort_unstable();
        columns.dedup();
        assert_eq!(columns.len(), 4, "gang lines occupy four distinct columns");
        let next_gang = m.map(LineAddress(4)).unwrap();
        assert_ne!((next_gang.bank, next_gang.row), (head.bank, head.row));
    }

    #[test]
    fn gang_size_one_equals_full_line_encryption() {
        let geom = Geometry::test_64k();
        let base = StaticMapping::CoffeeLake.build(geom).unwrap();
        let m = RubixS::new(base, 1, 3).unwrap();
        let key = cipher::keygen(3, geom.line_addr_bits()).unwrap();
        for line in (0..1u64 << 16).step_by(313) {
            let direct = base.map(LineAddress(key.encrypt(line).unwrap())).unwrap();
            assert_eq!(m.map(LineAddress(line)).unwrap(), direct);
        }
    }

    #[test]
    fn invalid_gang_size_rejected() {
        let base = StaticMapping::CoffeeLake
            .build(Geometry::test_64k())
            .unwrap();
        assert!(matches!(RubixS::new(base, 3, 0), Err(SimError::Config(_))));
    }

    #[test]
    fn bijective_for_every_gang_size() {
        for gs in GANG_SIZES {
            let m = RubixS::new(
                StaticMapping::CoffeeLake
                    .build(Geometry::test_64k())
                    .unwrap(),
                gs,
                42,
            )
            .unwrap();
            assert!(verify_bijection(&m).unwrap().is_bijective(), "gs{gs}");
            for line in (0..1u64 << 16).step_by(127) {
                let l = LineAddress(line);
                assert_eq!(m.unmap(m.map(l).unwrap()).unwrap(), l);
            }
        }
    }

    #[test]
    fn same_seed_same_mapping_distinct_seeds_differ() {
        let base = StaticMapping::CoffeeLake
            .build(Geometry::test_64k())
            .unwrap();
        let a = RubixS::new(base, 4, 5).unwrap();
        let b = RubixS::new(base, 4, 5).unwrap();
        let c = RubixS::new(base, 4, 6).unwrap();
        let mut any_diff = false;
        for line in 0..4096u64 {
            let l = LineAddress(line);
            assert_eq!(a.map(l).unwrap(), b.map(l).unwrap());
            any_diff |= a.map(l).unwrap() != c.map(l).unwrap();
        }
        assert!(any_diff);
    }

    #[test]
    fn contiguous_identity_census() {
        let m = StaticMapping::Linear
            .build(Geometry::illustration())
            .unwrap();
        let hist = lines_per_row_histogram(&m, 65536).unwrap();
        // 64K contiguous lines fill exactly 1024 rows of 64 lines.
        assert_eq!(hist.len(), 64);
        assert_eq!(hist[63], 1024);
        assert!(hist[..63].iter().all(|&n| n == 0));
    }

    #[test]
    fn empty_footprint_empty_census() {
        let census = scatter_census(
            StaticMapping::Linear,
            Geometry::illustration(),
            1,
            0,
            &[1, 2],
        )
        .unwrap();
        assert!(census.mean.is_empty());
        assert_eq!(census.seeds_with_bucket_at_least(1), 0);
    }
}
