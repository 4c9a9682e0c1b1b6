//! DRAM geometry, address types, and the conventional line-to-row mappings.
//!
//! A memory system is described by `channels x banks x rows x row-size`
//! where every count is a power of two, so a line address is a plain bit
//! string and every mapping here is a bit rearrangement (plus an xor hash
//! for bank selection). All mappings are bijections from the line-address
//! space onto `(channel, bank, row, column)` space; [`verify_bijection`]
//! checks that exhaustively on small geometries.

use crate::error::{Result, SimError};

/// Number of low row-index fields xor-folded into the bank selector.
///
/// The bank is `raw_bank ^ row[0..bb] ^ row[bb..2bb]` (fields clipped to the
/// available row bits), which keeps the hash invertible: the row index is
/// untouched, so the fold can be re-applied to recover the raw bank bits.
/// The bit positions are a stand-in for the (undocumented) Intel hash.
pub const BANK_HASH_ROW_FIELDS: u32 = 2;

/// Lines striped per channel chunk when `channels > 1` (gangs of 4 lines
/// round-robin across channels).
const CHANNEL_STRIPE_LINES: u32 = 4;

/// A line address: an index into the space of 64-byte lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineAddress(pub u64);

impl std::fmt::Display for LineAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// Where a line lands: channel, bank, row, and column (line-in-row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhysicalLocation {
    pub channel: u32,
    pub bank: u32,
    pub row: u64,
    pub column: u32,
}

/// DRAM organization. All counts are powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    channels: u32,
    banks_per_channel: u32,
    rows_per_bank: u64,
    row_size_lines: u32,
    line_addr_bits: u32,
}

fn require_pow2(name: &str, v: u64) -> Result<u32> {
    if v == 0 || !v.is_power_of_two() {
        return Err(SimError::Config(format!(
            "{name} must be a power of two, got {v}"
        )));
    }
    Ok(v.trailing_zeros())
}

impl Geometry {
    pub fn new(
        channels: u32,
        banks_per_channel: u32,
        rows_per_bank: u64,
        row_size_lines: u32,
    ) -> Result<Self> {
        let cb = require_pow2("channels", channels as u64)?;
        let bb = require_pow2("banks_per_channel", banks_per_channel as u64)?;
        let rb = require_pow2("rows_per_bank", rows_per_bank)?;
        let colb = require_pow2("row_size_lines", row_size_lines as u64)?;
        let line_addr_bits = cb + bb + rb + colb;
        if line_addr_bits > 40 {
            return Err(SimError::Config(format!(
                "address space of 2^{line_addr_bits} lines is beyond desk scale"
            )));
        }
        Ok(Geometry {
            channels,
            banks_per_channel,
            rows_per_bank,
            row_size_lines,
            line_addr_bits,
        })
    }

    /// Baseline system: 16 GB, 1 channel, 16 banks, 128K rows, 8 KB rows
    /// (128 lines), 28-bit line address.
    pub fn baseline() -> Self {
        Geometry::new(1, 16, 128 * 1024, 128).expect("baseline geometry is valid")
    }

    /// Single-bank illustration model: 4 GB, 1M rows of 4 KB (64 lines).
    pub fn illustration() -> Self {
        Geometry::new(1, 1, 1 << 20, 64).expect("illustration geometry is valid")
    }

    /// 2^16-line geometry used by the exhaustive suites: 16 banks, 32 rows,
    /// 128-line rows.
    pub fn test_64k() -> Self {
        Geometry::new(1, 16, 32, 128).expect("test geometry is valid")
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn banks_per_channel(&self) -> u32 {
        self.banks_per_channel
    }

    pub fn rows_per_bank(&self) -> u64 {
        self.rows_per_bank
    }

    pub fn row_size_lines(&self) -> u32 {
        self.row_size_lines
    }

    pub fn line_addr_bits(&self) -> u32 {
        self.line_addr_bits
    }

    pub fn total_lines(&self) -> u64 {
        1u64 << self.line_addr_bits
    }

    /// Total rows across all channels and banks.
    pub fn total_rows(&self) -> u64 {
        self.channels as u64 * self.banks_per_channel as u64 * self.rows_per_bank
    }

    pub fn channel_bits(&self) -> u32 {
        self.channels.trailing_zeros()
    }

    pub fn bank_bits(&self) -> u32 {
        self.banks_per_channel.trailing_zeros()
    }

    pub fn row_bits(&self) -> u32 {
        self.rows_per_bank.trailing_zeros()
    }

    pub fn column_bits(&self) -> u32 {
        self.row_size_lines.trailing_zeros()
    }

    pub fn contains(&self, line: LineAddress) -> bool {
        line.0 < self.total_lines()
    }

    fn check_line(&self, line: LineAddress) -> Result<()> {
        if self.contains(line) {
            Ok(())
        } else {
            Err(SimError::AddressRange {
                line: line.0,
                limit: self.total_lines(),
            })
        }
    }

    pub fn check_location(&self, loc: PhysicalLocation) -> Result<()> {
        if loc.channel < self.channels
            && loc.bank < self.banks_per_channel
            && loc.row < self.rows_per_bank
            && loc.column < self.row_size_lines
        {
            Ok(())
        } else {
            Err(SimError::Validation(format!(
                "location {loc:?} outside geometry"
            )))
        }
    }

    /// Dense index of a `(channel, bank, row, column)` tuple, column-minor.
    pub fn location_index(&self, loc: PhysicalLocation) -> u64 {
        let bank_global = loc.channel as u64 * self.banks_per_channel as u64 + loc.bank as u64;
        (bank_global * self.rows_per_bank + loc.row) * self.row_size_lines as u64
            + loc.column as u64
    }

    /// Dense index of the `(channel, bank, row)` tuple, ignoring the column.
    pub fn row_index(&self, loc: PhysicalLocation) -> u64 {
        let bank_global = loc.channel as u64 * self.banks_per_channel as u64 + loc.bank as u64;
        bank_global * self.rows_per_bank + loc.row
    }
}

/// A pure, invertible line-to-location mapping.
pub trait Mapping {
    fn geometry(&self) -> &Geometry;
    fn map(&self, line: LineAddress) -> Result<PhysicalLocation>;
    /// Exact inverse of [`Mapping::map`].
    fn unmap(&self, loc: PhysicalLocation) -> Result<LineAddress>;
    fn label(&self) -> String;
}

/// The conventional (non-randomized) mappings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticMapping {
    /// Sequential fill: column, then row, then bank, then channel. This is
    /// the illustration model's mapping (a 4 KB page stays in one row).
    Linear,
    /// 128 consecutive lines per row buffer, xor-hashed bank selection.
    CoffeeLake,
    /// Line pairs alternate between a bank pair; 32 lines of a 4 KB page
    /// per row, four consecutive pages filling one 128-line row.
    Skylake,
    /// Minimalist Open-Page: 4-line chunks round-robin across banks, the
    /// same-position chunks of consecutive pages sharing a row.
    Mop,
}

impl StaticMapping {
    pub fn build(self, geom: Geometry) -> Result<StaticMapper> {
        match self {
            StaticMapping::CoffeeLake | StaticMapping::Skylake => {
                if geom.row_size_lines() != 128 {
                    return Err(SimError::Config(format!(
                        "{self:?} mapping requires 128-line rows, got {}",
                        geom.row_size_lines()
                    )));
                }
            }
            StaticMapping::Mop => {
                if geom.row_size_lines() < 4 {
                    return Err(SimError::Config(
                        "MOP requires rows of at least 4 lines".into(),
                    ));
                }
            }
            StaticMapping::Linear => {}
        }
        if matches!(self, StaticMapping::Skylake | StaticMapping::Mop)
            && geom.banks_per_channel() < 2
        {
            return Err(SimError::Config(format!(
                "{self:?} mapping requires at least 2 banks"
            )));
        }
        Ok(StaticMapper { kind: self, geom })
    }

    pub fn name(&self) -> &'static str {
        match self {
            StaticMapping::Linear => "linear",
            StaticMapping::CoffeeLake => "coffeelake",
            StaticMapping::Skylake => "skylake",
            StaticMapping::Mop => "mop",
        }
    }
}

/// A [`StaticMapping`] bound to a [`Geometry`].
#[derive(Debug, Clone, Copy)]
pub struct StaticMapper {
    kind: StaticMapping,
    geom: Geometry,
}

/// Xor-fold of `fields` consecutive `width`-wide chunks of `value`.
fn fold_hash(value: u64, width: u32, fields: u32) -> u64 {
    if width == 0 {
        return 0;
    }
    let mask = (1u64 << width) - 1;
    let mut acc = 0u64;
    for i in 0..fields {
        acc ^= (value >> (i * width)) & mask;
    }
    acc
}

impl StaticMapper {
    pub fn kind(&self) -> StaticMapping {
        self.kind
    }

    /// Splits off the channel-stripe bits: returns `(channel, line_in_channel)`.
    fn split_channel(&self, line: u64) -> (u32, u64) {
        let cbits = self.geom.channel_bits();
        if cbits == 0 {
            return (0, line);
        }
        let stripe = CHANNEL_STRIPE_LINES.trailing_zeros();
        let channel = ((line >> stripe) & ((1 << cbits) - 1)) as u32;
        let low = line & (CHANNEL_STRIPE_LINES as u64 - 1);
        let high = line >> (stripe + cbits);
        (channel, (high << stripe) | low)
    }

    fn join_channel(&self, channel: u32, line_in_channel: u64) -> u64 {
        let cbits = self.geom.channel_bits();
        if cbits == 0 {
            return line_in_channel;
        }
        let stripe = CHANNEL_STRIPE_LINES.trailing_zeros();
        let low = line_in_channel & (CHANNEL_STRIPE_LINES as u64 - 1);
        let high = line_in_channel >> stripe;
        (high << (stripe + cbits)) | ((channel as u64) << stripe) | low
    }

    fn map_in_channel(&self, lic: u64) -> (u32, u64, u32) {
        let g = &self.geom;
        let bb = g.bank_bits();
        match self.kind {
            StaticMapping::Linear => {
                let column = (lic & (g.row_size_lines() as u64 - 1)) as u32;
                let r = lic >> g.column_bits();
                let row = r & (g.rows_per_bank() - 1);
                let bank = (r >> g.row_bits()) as u32;
                (bank, row, column)
            }
            StaticMapping::CoffeeLake => {
                let column = (lic & 127) as u32;
                let group = lic >> 7;
                let raw_bank = group & (g.banks_per_channel() as u64 - 1);
                let row = group >> bb;
                let bank = (raw_bank ^ fold_hash(row, bb, BANK_HASH_ROW_FIELDS)) as u32;
                (bank, row, column)
            }
            StaticMapping::Skylake => {
                let column =
                    ((lic & 1) | (((lic >> 2) & 0xf) << 1) | (((lic >> 6) & 0x3) << 5)) as u32;
                let pair_sel = (lic >> 1) & 1;
                let r_ext = lic >> 8;
                let hi_mask = (g.banks_per_channel() as u64 >> 1).saturating_sub(1);
                let bank_hi = r_ext & hi_mask;
                let row = r_ext >> (bb - 1);
                let raw_bank = (bank_hi << 1) | pair_sel;
                let bank = (raw_bank ^ fold_hash(row, bb, BANK_HASH_ROW_FIELDS)) as u32;
                (bank, row, column)
            }
            StaticMapping::Mop => {
                let offset = lic & 3;
                let chunk = lic >> 2;
                let bank = (chunk & (g.banks_per_channel() as u64 - 1)) as u32;
                let round = chunk >> bb;
                let chunks_per_row = (g.row_size_lines() / 4) as u64;
                let column = (offset | ((round & (chunks_per_row - 1)) << 2)) as u32;
                let row = round >> chunks_per_row.trailing_zeros();
                (bank, row, column)
            }
        }
    }

    fn unmap_in_channel(&self, bank: u32, row: u64, column: u32) -> u64 {
        let g = &self.geom;
        let bb = g.bank_bits();
        match self.kind {
            StaticMapping::Linear => {
                let r = ((bank as u64) << g.row_bits()) | row;
                (r << g.column_bits()) | column as u64
            }
            StaticMapping::CoffeeLake => {
                let raw_bank = bank as u64 ^ fold_hash(row, bb, BANK_HASH_ROW_FIELDS);
                let group = (row << bb) | raw_bank;
                (group << 7) | column as u64
            }
            StaticMapping::Skylake => {
                let raw_bank = bank as u64 ^ fold_hash(row, bb, BANK_HASH_ROW_FIELDS);
                let pair_sel = raw_bank & 1;
                let bank_hi = raw_bank >> 1;
                let r_ext = (row << (bb - 1)) | bank_hi;
                let col = column as u64;
                (r_ext << 8)
                    | ((col >> 5) << 6)
                    | (((col >> 1) & 0xf) << 2)
                    | (pair_sel << 1)
                    | (col & 1)
            }
            StaticMapping::Mop => {
                let chunks_per_row = (g.row_size_lines() / 4) as u64;
                let round = (row << chunks_per_row.trailing_zeros()) | (column as u64 >> 2);
                let chunk = (round << bb) | bank as u64;
                (chunk << 2) | (column as u64 & 3)
            }
        }
    }
}

impl Mapping for StaticMapper {
    fn geometry(&self) -> &Geometry {
        &self.geom
    }

    fn map(&self, line: LineAddress) -> Result<PhysicalLocation> {
        self.geom.check_line(line)?;
        let (channel, lic) = self.split_channel(line.0);
        let (bank, row, column) = self.map_in_channel(lic);
        Ok(PhysicalLocation {
            channel,
            bank,
            row,
            column,
        })
    }

    fn unmap(&self, loc: PhysicalLocation) -> Result<LineAddress> {
        self.geom.check_location(loc)?;
        let lic = self.unmap_in_channel(loc.bank, loc.row, loc.column);
        Ok(LineAddress(self.join_channel(loc.channel, lic)))
    }

    fn label(&self) -> String {
        self.kind.name().to_string()
    }
}

/// Outcome of an exhaustive one-to-one scan of a mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BijectionCheck {
    Bijective,
    /// Two distinct lines landed on the same location.
    Collision {
        first: LineAddress,
        second: LineAddress,
        location: PhysicalLocation,
    },
    /// A line mapped outside the geometry, or the mapping itself errored.
    Invalid {
        line: LineAddress,
        detail: String,
    },
}

impl BijectionCheck {
    pub fn is_bijective(&self) -> bool {
        matches!(self, BijectionCheck::Bijective)
    }
}

/// Exhaustively checks that `mapping` is one-to-one onto location space.
///
/// Only meant for scan-sized geometries (at most 2^24 lines).
pub fn verify_bijection(mapping: &dyn Mapping) -> Result<BijectionCheck> {
    let geom = *mapping.geometry();
    let total = geom.total_lines();
    if total > 1 << 24 {
        return Err(SimError::Validation(format!(
            "exhaustive scan capped at 2^24 lines, geometry has {total}"
        )));
    }
    let mut seen = vec![false; total as usize];
    for raw in 0..total {
        let line = LineAddress(raw);
        let loc = match mapping.map(line) {
            Ok(loc) => loc,
            Err(e) => {
                return Ok(BijectionCheck::Invalid {
                    line,
                    detail: e.to_string(),
                })
            }
        };
        if geom.check_location(loc).is_err() {
            return Ok(BijectionCheck::Invalid {
                line,
                detail: format!("{loc:?} out of range"),
            });
        }
        let idx = geom.location_index(loc) as usize;
        if seen[idx] {
            // Rescan to name the earlier line; collisions are the rare path.
            for prev in 0..raw {
                if mapping.map(LineAddress(prev))? == loc {
                    return Ok(BijectionCheck::Collision {
                        first: LineAddress(prev),
                        second: line,
                        location: loc,
                    });
                }
            }
        }
        seen[idx] = true;
    }
    Ok(BijectionCheck::Bijective)
}
