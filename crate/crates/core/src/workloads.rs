//! Workload generation: synthetic kernels, adversarial access patterns, and
//! CSV trace ingestion.
//!
//! Kernels are closed-loop (the next access issues when the previous one
//! completes); attacks and traces carry explicit arrival times so a pattern
//! can sustain a chosen intensity per 64 ms window.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dram::Tenths;
use crate::error::{Result, SimError};
use crate::geometry::{Geometry, LineAddress, Mapping, PhysicalLocation};

pub const LINE_BYTES: u64 = 64;

/// One request as fed to the simulator. `arrival == 0` together with a
/// closed-loop drive means "issue at the previous completion".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub arrival: Tenths,
    pub line: LineAddress,
    pub write: bool,
}

/// Synthetic kernel shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Stream,
    Stride,
    Random,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Stream => "stream",
            KernelKind::Stride => "stride",
            KernelKind::Random => "random",
        }
    }
}

/// A synthetic kernel: a footprint swept by one of three access shapes.
///
/// The default footprint is 4 MB in the round sense used by the hot-row
/// model: 1000 rows of 4 KB (64,000 lines), so per-row arithmetic comes out
/// in whole thousands.
///
/// The seed is not part of the config surface: in a run it always derives
/// from the top-level seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default = "default_footprint")]
    pub footprint_bytes: u64,
    #[serde(default = "default_access_count")]
    pub access_count: u64,
    #[serde(default = "default_stride")]
    pub stride_lines: u64,
    #[serde(skip)]
    pub seed: u64,
}

fn default_footprint() -> u64 {
    DEFAULT_FOOTPRINT_BYTES
}

fn default_access_count() -> u64 {
    DEFAULT_ACCESS_COUNT
}

fn default_stride() -> u64 {
    64
}

pub const DEFAULT_FOOTPRINT_BYTES: u64 = 4_096_000;
pub const DEFAULT_ACCESS_COUNT: u64 = 1_000_000;

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            footprint_bytes: DEFAULT_FOOTPRINT_BYTES,
            access_count: DEFAULT_ACCESS_COUNT,
            stride_lines: 64,
            seed: 0,
        }
    }

    pub fn footprint_lines(&self) -> u64 {
        self.footprint_bytes / LINE_BYTES
    }

    pub fn validate(&self, geom: &Geometry) -> Result<()> {
        let lines = self.footprint_lines();
        if lines == 0 {
            return Err(SimError::Validation("kernel footprint is empty".into()));
        }
        if lines > geom.total_lines() {
            return Err(SimError::Validation(format!(
                "footprint of {lines} lines exceeds memory of {} lines",
                geom.total_lines()
            )));
        }
        if self.access_count == 0 {
            return Err(SimError::Validation("access count must be positive".into()));
        }
        if self.kind == KernelKind::Stride
            && (self.stride_lines == 0 || !lines.is_multiple_of(self.stride_lines))
        {
            return Err(SimError::Validation(format!(
                "stride of {} lines must divide the {lines}-line footprint",
                self.stride_lines
            )));
        }
        Ok(())
    }

    /// Closed-loop line-address sequence for this kernel.
    pub fn iter(&self, geom: &Geometry) -> Result<KernelIter> {
        self.validate(geom)?;
        Ok(KernelIter {
            spec: *self,
            footprint: self.footprint_lines(),
            issued: 0,
            pass: 0,
            position: 0,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        })
    }
}

/// Iterator behind [`KernelSpec::iter`].
#[derive(Debug, Clone)]
pub struct KernelIter {
    spec: KernelSpec,
    footprint: u64,
    issued: u64,
    pass: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl Iterator for KernelIter {
    type Item = LineAddress;

    fn next(&mut self) -> Option<LineAddress> {
        if self.issued >= self.spec.access_count {
            return None;
        }
        self.issued += 1;
        let line = match self.spec.kind {
            KernelKind::Stream => (self.issued - 1) % self.footprint,
            KernelKind::Stride => {
                // Stride through all pages, then continue with the next
                // line on the page.
                let offset = self.pass % self.spec.stride_lines;
                let line = offset + self.position * self.spec.stride_lines;
                self.position += 1;
                if self.position * self.spec.stride_lines >= self.footprint {
                    self.position = 0;
                    self.pass += 1;
                }
                line
            }
            KernelKind::Random => self.rng.gen_range(0..self.footprint),
        };
        Some(LineAddress(line))
    }
}

/// Adversarial pattern shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Hammer one row. Interleaved with a far same-bank conflict row so
    /// every hammer activates; the conflict traffic rides on top of the
    /// nominal intensity, which counts aggressor accesses only.
    #[serde(rename = "single")]
    SingleSided,
    /// Alternate the two neighbours of a victim row.
    #[serde(rename = "double")]
    DoubleSided,
    /// Rotate a set of aggressor rows.
    #[serde(rename = "many")]
    ManySided,
    /// Heavy far-aggressor hammering plus light decoys; the damage is done
    /// by victim-refresh accounting, two rows away from the aggressor.
    HalfDouble,
    /// One line re-fetched forever; modeled as a same-bank row conflict
    /// ping-pong since there is no cache, so every access activates.
    FlushReload,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::SingleSided => "single",
            AttackKind::DoubleSided => "double",
            AttackKind::ManySided => "many",
            AttackKind::HalfDouble => "half_double",
            AttackKind::FlushReload => "flush_reload",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "single" => AttackKind::SingleSided,
            "double" => AttackKind::DoubleSided,
            "many" => AttackKind::ManySided,
            "half_double" => AttackKind::HalfDouble,
            "flush_reload" => AttackKind::FlushReload,
            other => {
                return Err(SimError::Validation(format!(
                    "unknown attack kind {other:?}"
                )))
            }
        })
    }
}

/// An adversarial access pattern aimed at physical rows.
///
/// The generator targets rows through the inverse mapping — a white-box
/// adversary that knows the address scrambling. The mitigations' guarantees
/// must hold even then.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Demand accesses per 64 ms window.
    pub intensity: u64,
    /// Number of 64 ms windows of attack traffic to emit.
    pub windows: u32,
    /// Victim-region center row; defaults to the middle of the middle bank.
    pub target_row: Option<u64>,
}

/// Aggressor rows rotated by the many-sided pattern.
pub const MANY_SIDED_AGGRESSORS: u64 = 8;

/// Decoy fraction of the Half-Double pattern: one access to each near
/// neighbour per this many far-aggressor accesses.
const HALF_DOUBLE_DECOY_PERIOD: usize = 256;

impl AttackSpec {
    /// Pattern sized for a threshold: the aggressors are driven about
    /// 100x past `t_rh` per window, for 100 windows.
    pub fn for_threshold(kind: AttackKind, t_rh: u64) -> Self {
        AttackSpec {
            kind,
            intensity: 100 * t_rh,
            windows: 100,
            target_row: None,
        }
    }

    /// Paced access sequence targeting physical rows under `mapping`.
    pub fn iter(&self, mapping: &dyn Mapping, refresh_interval: Tenths) -> Result<AttackIter> {
        if self.intensity == 0 || self.windows == 0 {
            return Err(SimError::Validation(
                "attack needs a positive intensity and window count".into(),
            ));
        }
        let geom = mapping.geometry();
        let bank = geom.banks_per_channel() / 2;
        let center = self.target_row.unwrap_or(geom.rows_per_bank() / 2);
        if center < 2 || center + MANY_SIDED_AGGRESSORS * 2 + 2 >= geom.rows_per_bank() {
            return Err(SimError::Validation(format!(
                "target row {center} too close to the bank edge"
            )));
        }
        let line_at = |row: u64| -> Result<LineAddress> {
            mapping.unmap(PhysicalLocation {
                channel: 0,
                bank,
                row,
                column: 0,
            })
        };
        // `filler` slots per cycle add conflict traffic beyond the nominal
        // intensity so that same-row hammers cannot ride the open row.
        let mut filler_per_cycle = 0u64;
        let cycle: Vec<LineAddress> = match self.kind {
            AttackKind::SingleSided => {
                filler_per_cycle = 1;
                vec![line_at(center)?, line_at(center + 64)?]
            }
            AttackKind::DoubleSided => vec![line_at(center - 1)?, line_at(center + 1)?],
            AttackKind::ManySided => (0..MANY_SIDED_AGGRESSORS)
                .map(|i| line_at(center + 2 * i))
                .collect::<Result<_>>()?,
            AttackKind::HalfDouble => {
                // The far aggressor alternates with a distant same-bank
                // conflict row so that every hammer is an activation (the
                // real attack flushes the cache to the same effect). One
                // access per period goes to each near decoy.
                let aggressor = line_at(center)?;
                let conflict = line_at(center + 64)?;
                let mut cycle = Vec::with_capacity(HALF_DOUBLE_DECOY_PERIOD);
                for slot in 0..HALF_DOUBLE_DECOY_PERIOD {
                    cycle.push(if slot % 2 == 0 { aggressor } else { conflict });
                }
                cycle[HALF_DOUBLE_DECOY_PERIOD / 2 - 1] = line_at(center - 1)?;
                cycle[HALF_DOUBLE_DECOY_PERIOD - 1] = line_at(center + 1)?;
                cycle
            }
            AttackKind::FlushReload => vec![line_at(center)?, line_at(center + 8)?],
        };
        let cycle_len = cycle.len() as u64;
        let accesses_per_window = self.intensity * cycle_len / (cycle_len - filler_per_cycle);
        let spacing = refresh_interval / accesses_per_window;
        if spacing == 0 {
            return Err(SimError::Validation(format!(
                "intensity {} exceeds one access per time step",
                self.intensity
            )));
        }
        Ok(AttackIter {
            cycle,
            spacing,
            remaining: accesses_per_window * self.windows as u64,
            index: 0,
        })
    }
}

/// Iterator behind [`AttackSpec::iter`]: fixed-cadence arrivals cycling
/// over the aggressor pattern.
#[derive(Debug, Clone)]
pub struct AttackIter {
    cycle: Vec<LineAddress>,
    spacing: Tenths,
    remaining: u64,
    index: u64,
}

impl Iterator for AttackIter {
    type Item = Access;

    fn next(&mut self) -> Option<Access> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let line = self.cycle[(self.index % self.cycle.len() as u64) as usize];
        let arrival = self.index * self.spacing;
        self.index += 1;
        Some(Access {
            arrival,
            line,
            write: false,
        })
    }
}

/// One parsed trace record. The on-disk format is CSV:
/// `arrival_ns,line_address_hex,op` with `#` comment lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub arrival_ns: u64,
    pub line: LineAddress,
    pub write: bool,
}

impl From<TraceRecord> for Access {
    fn from(r: TraceRecord) -> Access {
        Access {
            arrival: r.arrival_ns * 10,
            line: r.line,
            write: r.write,
        }
    }
}

fn parse_record(text: &str, line_no: usize) -> Result<TraceRecord> {
    let mut fields = text.split(',');
    let mut next_field = |name: &str| {
        fields
            .next()
            .map(str::trim)
            .ok_or_else(|| SimError::TraceParse {
                line: line_no,
                message: format!("missing {name} field"),
            })
    };
    let arrival_ns = next_field("arrival")?
        .parse::<u64>()
        .map_err(|e| SimError::TraceParse {
            line: line_no,
            message: format!("bad arrival: {e}"),
        })?;
    let addr_text = next_field("address")?;
    let digits = addr_text
        .strip_prefix("0x")
        .or_else(|| addr_text.strip_prefix("0X"))
        .unwrap_or(addr_text);
    let line = u64::from_str_radix(digits, 16).map_err(|e| SimError::TraceParse {
        line: line_no,
        message: format!("bad line address {addr_text:?}: {e}"),
    })?;
    let write = match next_field("op")? {
        "R" | "r" => false,
        "W" | "w" => true,
        other => {
            return Err(SimError::TraceParse {
                line: line_no,
                message: format!("op must be R or W, got {other:?}"),
            })
        }
    };
    if fields.next().is_some() {
        return Err(SimError::TraceParse {
            line: line_no,
            message: "trailing fields".into(),
        });
    }
    Ok(TraceRecord {
        arrival_ns,
        line: LineAddress(line),
        write,
    })
}

/// Parses trace text; arrivals must be non-decreasing.
pub fn parse_trace_text(text: &str) -> Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    let mut last_arrival = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = parse_record(trimmed, line_no)?;
        if record.arrival_ns < last_arrival {
            return Err(SimError::Validation(format!(
                "non-monotone arrival {} ns at line {line_no}",
                record.arrival_ns
            )));
        }
        last_arrival = record.arrival_ns;
        records.push(record);
    }
    Ok(records)
}

/// Reads and parses a trace file.
pub fn parse_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::fs::File::open(path)?;
    let mut text = String::new();
    std::io::BufReader::new(file).read_to_string(&mut text)?;
    parse_trace_text(&text)
}

/// Writes records in the trace format, bit-exact for round-tripping.
pub fn write_trace<W: Write>(out: &mut W, records: &[TraceRecord]) -> Result<()> {
    for r in records {
        writeln!(
            out,
            "{},{:#x},{}",
            r.arrival_ns,
            r.line.0,
            if r.write { "W" } else { "R" }
        )?;
    }
    Ok(())
}
