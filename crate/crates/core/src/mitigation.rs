//! Mitigating actions behind the tracker signals: victim refresh, AQUA
//! quarantine migration, SRS random row swap, Blockhammer rate control —
//! plus the bit-flip oracle that encodes the threat model.
//!
//! The engine works on dense global row ids. Each bank's id range covers
//! its demand-addressable rows followed by its quarantine extension, so
//! `id ± 1` is physical adjacency within the bank. Trackers observe demand
//! activations only; refresh- and migration-induced activations still land
//! in the activation window, which is exactly the accounting Half-Double
//! exploits.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dram::{ActivationWindow, Tenths, TimingParams};
use crate::error::{Result, SimError};
use crate::geometry::Geometry;
use crate::tracking::{MisraGries, PerRowTracker};

/// Fraction of each bank's rows reserved as the AQUA quarantine region.
pub const QUARANTINE_FRACTION: f64 = 0.01;

/// Which mitigation is live for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationScheme {
    None,
    VictimRefresh,
    Aqua,
    Srs,
    Blockhammer,
}

impl MitigationScheme {
    pub fn name(&self) -> &'static str {
        match self {
            MitigationScheme::None => "none",
            MitigationScheme::VictimRefresh => "victim-refresh",
            MitigationScheme::Aqua => "aqua",
            MitigationScheme::Srs => "srs",
            MitigationScheme::Blockhammer => "blockhammer",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "none" => MitigationScheme::None,
            "victim-refresh" | "victim_refresh" => MitigationScheme::VictimRefresh,
            "aqua" => MitigationScheme::Aqua,
            "srs" => MitigationScheme::Srs,
            "blockhammer" => MitigationScheme::Blockhammer,
            other => return Err(SimError::Config(format!("unknown mitigation {other:?}"))),
        })
    }
}

/// Mitigation selection plus the Rowhammer threshold it defends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationConfig {
    pub scheme: MitigationScheme,
    pub t_rh: u64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            scheme: MitigationScheme::None,
            t_rh: 128,
        }
    }
}

/// Tracker threshold per scheme: half the threshold for AQUA, Blockhammer,
/// and victim refresh (state resets split an attack across two windows),
/// a third for SRS (birthday-style swap attacks).
pub fn tracker_threshold(scheme: MitigationScheme, t_rh: u64) -> u64 {
    match scheme {
        MitigationScheme::Srs => (t_rh / 3).max(1),
        _ => (t_rh / 2).max(1),
    }
}

impl MitigationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_rh < 2 {
            return Err(SimError::Config(format!(
                "t_rh of {} is degenerate",
                self.t_rh
            )));
        }
        Ok(())
    }

    pub fn tracker_threshold(&self) -> u64 {
        tracker_threshold(self.scheme, self.t_rh)
    }
}

/// Dense row-id layout: per global bank, the demand rows come first, then
/// that bank's quarantine extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLayout {
    pub global_banks: u32,
    pub rows_per_bank: u64,
    pub quarantine_per_bank: u64,
}

impl RowLayout {
    pub fn new(geom: &Geometry, with_quarantine: bool) -> Self {
        let quarantine = if with_quarantine {
            ((geom.rows_per_bank() as f64 * QUARANTINE_FRACTION) as u64).max(1)
        } else {
            0
        };
        RowLayout {
            global_banks: geom.channels() * geom.banks_per_channel(),
            rows_per_bank: geom.rows_per_bank(),
            quarantine_per_bank: quarantine,
        }
    }

    pub fn bank_stride(&self) -> u64 {
        self.rows_per_bank + self.quarantine_per_bank
    }

    pub fn total_rows(&self) -> u64 {
        self.global_banks as u64 * self.bank_stride()
    }

    pub fn row_id(&self, global_bank: u32, row: u64) -> u64 {
        global_bank as u64 * self.bank_stride() + row
    }

    pub fn bank_of(&self, row_id: u64) -> u32 {
        (row_id / self.bank_stride()) as u32
    }

    pub fn row_of(&self, row_id: u64) -> u64 {
        row_id % self.bank_stride()
    }

    pub fn is_quarantine(&self, row_id: u64) -> bool {
        self.row_of(row_id) >= self.rows_per_bank
    }

    /// Physically adjacent rows within the same bank.
    pub fn neighbors(&self, row_id: u64) -> (Option<u64>, Option<u64>) {
        let row = self.row_of(row_id);
        let below = (row > 0).then(|| row_id - 1);
        let above = (row + 1 < self.bank_stride()).then(|| row_id + 1);
        (below, above)
    }
}

/// Logical-to-physical row indirection maintained by AQUA and SRS.
#[derive(Debug, Clone)]
pub struct RowIndirection {
    layout: RowLayout,
    forward: HashMap<u64, u64>,
    /// Exact occupancy where it differs from identity; `None` marks a
    /// vacated row.
    occupant: HashMap<u64, Option<u64>>,
}

impl RowIndirection {
    pub fn new(layout: RowLayout) -> Self {
        RowIndirection {
            layout,
            forward: HashMap::new(),
            occupant: HashMap::new(),
        }
    }

    /// Physical row currently backing `logical`.
    pub fn resolve(&self, logical: u64) -> u64 {
        self.forward.get(&logical).copied().unwrap_or(logical)
    }

    /// Logical row currently stored at `physical`, if any.
    pub fn occupant_of(&self, physical: u64) -> Option<u64> {
        match self.occupant.get(&physical) {
            Some(entry) => *entry,
            None if self.layout.is_quarantine(physical) => None,
            None => Some(physical),
        }
    }

    /// AQUA-style move of `logical` into the empty row `to`.
    pub fn relocate(&mut self, logical: u64, to: u64) {
        let from = self.resolve(logical);
        self.occupant.insert(from, None);
        self.occupant.insert(to, Some(logical));
        self.forward.insert(logical, to);
    }

    /// SRS-style exchange of whatever lives at two physical rows.
    pub fn swap_physical(&mut self, a: u64, b: u64) {
        let la = self.occupant_of(a);
        let lb = self.occupant_of(b);
        if let Some(l) = la {
            self.forward.insert(l, b);
        }
        if let Some(l) = lb {
            self.forward.insert(l, a);
        }
        self.occupant.insert(a, lb);
        self.occupant.insert(b, la);
    }

    pub fn clear(&mut self) {
        self.forward.clear();
        self.occupant.clear();
    }

    /// Test hook: the logical-to-physical map never aliases two logical
    /// rows onto one physical row, and both directions agree.
    pub fn is_bijective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for (&logical, &physical) in &self.forward {
            if !seen.insert(physical) {
                return false;
            }
            if self.occupant_of(physical) != Some(logical) {
                return false;
            }
        }
        true
    }
}

/// What the engine asks the memory system to do after a tracker signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MitigationAction {
    None,
    /// Refresh the aggressor's neighbours; each refresh re-activates the
    /// victim row and the bank is busy for about two row cycles.
    VictimRefresh {
        refreshed: Vec<u64>,
        bank_block: Tenths,
    },
    /// Migrate the aggressor into quarantine; the channel is tied up for
    /// the row transfer.
    Migrate {
        logical: u64,
        from: u64,
        to: u64,
        channel_block: Tenths,
    },
    /// Swap the aggressor with a random row (two row transfers).
    Swap {
        from: u64,
        to: u64,
        channel_block: Tenths,
    },
    /// Quarantine exhausted: stall the aggressor until the epoch boundary.
    DelayUntilEpochEnd,
}

enum Tracker {
    None,
    /// One Misra-Gries summary per global bank (AQUA, SRS).
    PerBank(Vec<MisraGries>),
    /// Idealized exact counters (Blockhammer, victim refresh).
    Exact(PerRowTracker),
}

/// Per-run mitigation state machine.
pub struct MitigationEngine {
    cfg: MitigationConfig,
    layout: RowLayout,
    tracker: Tracker,
    indirection: RowIndirection,
    /// Next free quarantine slot per global bank.
    quarantine_next: Vec<u64>,
    partner_rng: ChaCha8Rng,
    migration_block: Tenths,
    refresh_block: Tenths,
    events: u64,
}

impl MitigationEngine {
    pub fn new(
        cfg: MitigationConfig,
        layout: RowLayout,
        timing: &TimingParams,
        row_size_lines: u32,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let threshold = cfg.tracker_threshold();
        let tracker = match cfg.scheme {
            MitigationScheme::None => Tracker::None,
            MitigationScheme::Aqua | MitigationScheme::Srs => {
                let max_inserts = timing.refresh_interval / timing.t_rc;
                let capacity = MisraGries::capacity_for(max_inserts, threshold);
                Tracker::PerBank(
                    (0..layout.global_banks)
                        .map(|_| MisraGries::new(capacity, threshold))
                        .collect(),
                )
            }
            MitigationScheme::VictimRefresh | MitigationScheme::Blockhammer => {
                Tracker::Exact(PerRowTracker::new(threshold))
            }
        };
        // One row transfer: 2 activations plus a read and a write per line,
        // serialized on the channel.
        let migration_block = 2 * timing.t_rc + 2 * row_size_lines as u64 * timing.t_cl;
        Ok(MitigationEngine {
            cfg,
            layout,
            tracker,
            indirection: RowIndirection::new(layout),
            quarantine_next: vec![0; layout.global_banks as usize],
            partner_rng: ChaCha8Rng::seed_from_u64(seed),
            migration_block,
            refresh_block: 2 * timing.t_rc,
            events: 0,
        })
    }

    pub fn scheme(&self) -> MitigationScheme {
        self.cfg.scheme
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn indirection(&self) -> &RowIndirection {
        &self.indirection
    }

    /// Physical row actually backing a mapped row id.
    pub fn resolve(&self, row_id: u64) -> u64 {
        match self.cfg.scheme {
            MitigationScheme::Aqua | MitigationScheme::Srs => self.indirection.resolve(row_id),
            _ => row_id,
        }
    }

    /// Blockhammer admission control: delay any activation of a row whose
    /// in-window quota is spent. Row-buffer hits are never gated.
    pub fn blockhammer_gate(&mut self, physical_row: u64) -> bool {
        if self.cfg.scheme != MitigationScheme::Blockhammer {
            return false;
        }
        if let Tracker::Exact(tracker) = &self.tracker {
            if tracker.count(physical_row) >= self.cfg.tracker_threshold() {
                self.events += 1;
                return true;
            }
        }
        false
    }

    /// Feeds one demand activation of `physical_row` to the tracker and
    /// returns the mitigating action, if the row just crossed the
    /// threshold.
    pub fn on_demand_activation(&mut self, physical_row: u64, now: Tenths) -> MitigationAction {
        let signaled = match &mut self.tracker {
            Tracker::None => None,
            Tracker::PerBank(banks) => {
                banks[self.layout.bank_of(physical_row) as usize].insert(physical_row)
            }
            Tracker::Exact(tracker) => tracker.insert(physical_row),
        };
        match signaled {
            Some(row) => self.mitigate(row, now),
            None => MitigationAction::None,
        }
    }

    fn mitigate(&mut self, physical_row: u64, _now: Tenths) -> MitigationAction {
        match self.cfg.scheme {
            MitigationScheme::None | MitigationScheme::Blockhammer => MitigationAction::None,
            MitigationScheme::VictimRefresh => {
                let (below, above) = self.layout.neighbors(physical_row);
                self.events += 1;
                MitigationAction::VictimRefresh {
                    refreshed: below.into_iter().chain(above).collect(),
                    bank_block: self.refresh_block,
                }
            }
            MitigationScheme::Aqua => {
                let Some(logical) = self.indirection.occupant_of(physical_row) else {
                    return MitigationAction::None;
                };
                let bank = self.layout.bank_of(physical_row);
                let slot = &mut self.quarantine_next[bank as usize];
                if *slot >= self.layout.quarantine_per_bank {
                    self.events += 1;
                    return MitigationAction::DelayUntilEpochEnd;
                }
                let to = self.layout.row_id(bank, self.layout.rows_per_bank + *slot);
                *slot += 1;
                self.indirection.relocate(logical, to);
                self.events += 1;
                MitigationAction::Migrate {
                    logical,
                    from: physical_row,
                    to,
                    channel_block: self.migration_block,
                }
            }
            MitigationScheme::Srs => {
                let partner = loop {
                    let bank = self.partner_rng.gen_range(0..self.layout.global_banks);
                    let row = self.partner_rng.gen_range(0..self.layout.rows_per_bank);
                    let candidate = self.layout.row_id(bank, row);
                    if candidate != physical_row {
                        break candidate;
                    }
                };
                self.indirection.swap_physical(physical_row, partner);
                self.events += 1;
                MitigationAction::Swap {
                    from: physical_row,
                    to: partner,
                    channel_block: 2 * self.migration_block,
                }
            }
        }
    }

    /// Epoch boundary: trackers reset; AQUA recycles its quarantine and
    /// sends every migrated row home (the new window starts from zero
    /// counts, so this is safe).
    pub fn on_epoch_boundary(&mut self) {
        match &mut self.tracker {
            Tracker::None => {}
            Tracker::PerBank(banks) => banks.iter_mut().for_each(MisraGries::reset),
            Tracker::Exact(tracker) => tracker.reset(),
        }
        if self.cfg.scheme == MitigationScheme::Aqua {
            self.indirection.clear();
            self.quarantine_next.iter_mut().for_each(|slot| *slot = 0);
        }
    }
}

/// A row that exceeded the Rowhammer threshold within one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub epoch: u64,
    pub row_id: u64,
    pub activations: u32,
}

/// The threat model as a check: every row whose in-window activation count
/// (demand plus induced) exceeds `t_rh` is a bit-flip site.
pub fn flip_oracle_check(window: &ActivationWindow, t_rh: u64) -> Vec<(u64, u32)> {
    let mut flips: Vec<(u64, u32)> = window
        .touched_rows()
        .filter(|&(_, count)| count as u64 > t_rh)
        .collect();
    flips.sort_unstable();
    flips
}
