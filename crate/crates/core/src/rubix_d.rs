//! Rubix-D: dynamic xor-based line-to-row remapping.
//!
//! The line address splits into `k` gang-offset bits, `p` gang-in-row bits,
//! and `m` row-address bits. The same-position gangs across all rows form a
//! v-group; each v-group (or each of its v-segments when segmented) owns a
//! `(currKey, nextKey, Ptr)` state that xor-permutes the row-address space.
//! Remapping walks `Ptr` across the row space, swapping each row with its
//! `nextKey` partner, so the map drifts from `currKey` to
//! `currKey ^ nextKey` one episode at a time; when `Ptr` wraps, the keys
//! rotate and a fresh epoch begins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::geometry::{Geometry, LineAddress};
use crate::rubix_s::check_gang_size;
use crate::seed::{self, stream};

/// SRAM bytes provisioned per `(currKey, nextKey, Ptr)` state: two 8-byte
/// words, one packing the key pair and one holding the pointer.
pub const STATE_BYTES: u64 = 16;

/// Swap cost in bank activations (source, destination, source again).
pub const SWAP_ACTIVATIONS: u64 = 3;

/// Per-v-segment remapping state over an `m`-bit row space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemapState {
    curr_key: u64,
    next_key: u64,
    /// Next row to remap; `ptr == 2^m` means the epoch is complete.
    ptr: u64,
    row_bits: u32,
}

/// The two-step xor translation: `row ^ curr`, then `^ next` if either the
/// intermediate value or its partner sits below the remap pointer. A
/// bijection on the row space for every pointer value.
pub fn xor_translate(row: u64, curr_key: u64, next_key: u64, ptr: u64) -> u64 {
    let inter = row ^ curr_key;
    if inter < ptr || (inter ^ next_key) < ptr {
        inter ^ next_key
    } else {
        inter
    }
}

fn nonzero_key(rng: &mut impl Rng, bits: u32) -> u64 {
    let mask = (1u64 << bits) - 1;
    loop {
        let k = rng.gen::<u64>() & mask;
        // A zero nextKey would make the whole epoch a no-op.
        if k != 0 || bits == 0 {
            return k;
        }
    }
}

impl RemapState {
    pub fn random(row_bits: u32, rng: &mut impl Rng) -> Self {
        let mask = (1u64 << row_bits) - 1;
        RemapState {
            curr_key: rng.gen::<u64>() & mask,
            next_key: nonzero_key(rng, row_bits),
            ptr: 0,
            row_bits,
        }
    }

    /// Exact-state constructor, used by replays and tests.
    pub fn with_keys(row_bits: u32, curr_key: u64, next_key: u64, ptr: u64) -> Result<Self> {
        let limit = 1u64 << row_bits;
        if curr_key >= limit || next_key >= limit || ptr > limit {
            return Err(SimError::Config(format!(
                "keys/ptr out of range for {row_bits}-bit row space"
            )));
        }
        Ok(RemapState {
            curr_key,
            next_key,
            ptr,
            row_bits,
        })
    }

    pub fn curr_key(&self) -> u64 {
        self.curr_key
    }

    pub fn next_key(&self) -> u64 {
        self.next_key
    }

    pub fn ptr(&self) -> u64 {
        self.ptr
    }

    pub fn row_bits(&self) -> u32 {
        self.row_bits
    }

    pub fn rows(&self) -> u64 {
        1u64 << self.row_bits
    }

    pub fn epoch_complete(&self) -> bool {
        self.ptr == self.rows()
    }

    pub fn translate(&self, row: u64) -> u64 {
        xor_translate(row, self.curr_key, self.next_key, self.ptr)
    }

    /// Runs one remapping episode: swap the row at `ptr` with its partner
    /// (or skip when the partner was already remapped), then advance `ptr`.
    pub fn remap_episode(&mut self, gang_size: u32) -> Result<SwapOutcome> {
        if self.epoch_complete() {
            return Err(SimError::State("remap episode on a completed epoch".into()));
        }
        let src = self.ptr;
        let dst = self.ptr ^ self.next_key;
        let skipped = dst < src;
        self.ptr += 1;
        Ok(SwapOutcome {
            src_row: src,
            dst_row: dst,
            skipped,
            cost: RemapCost::swap(gang_size, skipped),
        })
    }

    /// Ends a completed epoch: fold `nextKey` into `currKey`, draw a fresh
    /// nonzero `nextKey`, reset `Ptr`. The translation is unchanged by the
    /// rotation itself.
    pub fn rotate_epoch(&mut self, rng: &mut impl Rng) -> Result<()> {
        if !self.epoch_complete() {
            return Err(SimError::State(format!(
                "rotation requested at ptr {} of {}",
                self.ptr,
                self.rows()
            )));
        }
        self.curr_key ^= self.next_key;
        self.next_key = nonzero_key(rng, self.row_bits);
        self.ptr = 0;
        Ok(())
    }
}

/// Raw outcome of one episode within a state's own row space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapOutcome {
    pub src_row: u64,
    pub dst_row: u64,
    pub skipped: bool,
    pub cost: RemapCost,
}

/// DRAM work incurred by one remap episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemapCost {
    pub activations: u64,
    pub cas_reads: u64,
    pub cas_writes: u64,
}

impl RemapCost {
    fn swap(gang_size: u32, skipped: bool) -> Self {
        if skipped {
            RemapCost {
                activations: 0,
                cas_reads: 0,
                cas_writes: 0,
            }
        } else {
            RemapCost {
                activations: SWAP_ACTIVATIONS,
                cas_reads: 2 * gang_size as u64,
                cas_writes: 2 * gang_size as u64,
            }
        }
    }
}

/// A remap episode attributed to a v-group/segment, with full row addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemapEvent {
    pub vgroup: u32,
    pub segment: u32,
    pub src_row: u64,
    pub dst_row: u64,
    pub skipped: bool,
    pub cost: RemapCost,
    /// Set when this episode completed the segment and the keys rotated.
    pub rotated: bool,
}

/// Rubix-D configuration knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RubixDConfig {
    pub gang_size: u32,
    /// Number of v-segments each v-group is divided into (power of two).
    pub segments_per_vgroup: u32,
    /// Probability of a remap episode per demand activation.
    pub remap_probability: f64,
}

impl Default for RubixDConfig {
    fn default() -> Self {
        RubixDConfig {
            gang_size: 4,
            segments_per_vgroup: 1,
            remap_probability: 0.01,
        }
    }
}

impl RubixDConfig {
    /// Metadata SRAM for this config on `geom`: one state per
    /// v-group x segment.
    pub fn storage_bytes(&self, geom: &Geometry) -> Result<u64> {
        let gang_bits = check_gang_size(self.gang_size)?;
        let vgroups = (geom.row_size_lines() >> gang_bits) as u64;
        Ok(storage_bytes(vgroups, self.segments_per_vgroup))
    }

    pub fn remap_period(&self, geom: &Geometry) -> Result<f64> {
        let gang_bits = check_gang_size(self.gang_size)?;
        let vgroup_bits = (geom.row_size_lines() >> gang_bits).trailing_zeros();
        let rows = 1u64 << (geom.line_addr_bits() - gang_bits - vgroup_bits);
        Ok(remap_period(
            rows,
            self.segments_per_vgroup,
            self.remap_probability,
        ))
    }
}

/// Total metadata bytes for `vgroups x segments` remap states.
pub fn storage_bytes(vgroups: u64, segments: u32) -> u64 {
    STATE_BYTES * vgroups * segments as u64
}

/// Activations needed to remap one full v-segment: rows-per-segment divided
/// by the per-activation remap probability.
pub fn remap_period(rows_per_vgroup: u64, segments: u32, remap_probability: f64) -> f64 {
    (rows_per_vgroup / segments as u64) as f64 / remap_probability
}

/// The per-run remapping engine: one [`RemapState`] per v-group x segment,
/// a Bernoulli trigger per demand activation, and automatic key rotation.
#[derive(Debug, Clone)]
pub struct RubixDEngine {
    cfg: RubixDConfig,
    geom: Geometry,
    gang_bits: u32,
    vgroup_bits: u32,
    seg_bits: u32,
    states: Vec<RemapState>,
    trigger_rng: ChaCha8Rng,
    key_rng: ChaCha8Rng,
    swaps: u64,
    skips: u64,
    remap_activations: u64,
}

impl RubixDEngine {
    pub fn new(geom: Geometry, cfg: RubixDConfig, master_seed: u64) -> Result<Self> {
        let gang_bits = check_gang_size(cfg.gang_size)?;
        if cfg.gang_size > geom.row_size_lines() {
            return Err(SimError::Config("gang larger than a row".into()));
        }
        if !(0.0..=1.0).contains(&cfg.remap_probability) {
            return Err(SimError::Config(format!(
                "remap probability {} outside [0, 1]",
                cfg.remap_probability
            )));
        }
        let vgroups = geom.row_size_lines() >> gang_bits;
        let vgroup_bits = vgroups.trailing_zeros();
        let row_bits = geom.line_addr_bits() - gang_bits - vgroup_bits;
        let segments = cfg.segments_per_vgroup;
        if segments == 0 || !segments.is_power_of_two() {
            return Err(SimError::Config(format!(
                "segments must be a power of two, got {segments}"
            )));
        }
        let seg_bits = segments.trailing_zeros();
        if seg_bits > row_bits {
            return Err(SimError::Config(format!(
                "{segments} segments do not fit a {row_bits}-bit row space"
            )));
        }
        let mut key_rng =
            ChaCha8Rng::seed_from_u64(seed::derive(master_seed, stream::RUBIX_D_KEYS));
        let state_row_bits = row_bits - seg_bits;
        let states = (0..vgroups as usize * segments as usize)
            .map(|_| RemapState::random(state_row_bits, &mut key_rng))
            .collect();
        Ok(RubixDEngine {
            cfg,
            geom,
            gang_bits,
            vgroup_bits,
            seg_bits,
            states,
            trigger_rng: ChaCha8Rng::seed_from_u64(seed::derive(
                master_seed,
                stream::RUBIX_D_TRIGGER,
            )),
            key_rng,
            swaps: 0,
            skips: 0,
            remap_activations: 0,
        })
    }

    pub fn config(&self) -> &RubixDConfig {
        &self.cfg
    }

    pub fn vgroups(&self) -> u32 {
        1 << self.vgroup_bits
    }

    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    pub fn skips(&self) -> u64 {
        self.skips
    }

    pub fn remap_activations(&self) -> u64 {
        self.remap_activations
    }

    fn split(&self, line: u64) -> (u64, u32, u32, u64) {
        let offset = line & ((1 << self.gang_bits) - 1);
        let vgroup = ((line >> self.gang_bits) & ((1 << self.vgroup_bits) - 1)) as u32;
        let row = line >> (self.gang_bits + self.vgroup_bits);
        let segment = (row & ((1 << self.seg_bits) - 1)) as u32;
        (offset, vgroup, segment, row)
    }

    fn state_index(&self, vgroup: u32, segment: u32) -> usize {
        (vgroup as usize) << self.seg_bits | segment as usize
    }

    pub fn state(&self, vgroup: u32, segment: u32) -> &RemapState {
        &self.states[self.state_index(vgroup, segment)]
    }

    /// Remaps a line address; the `k + p` low bits pass through unchanged.
    pub fn translate(&self, line: LineAddress) -> Result<LineAddress> {
        if !self.geom.contains(line) {
            return Err(SimError::AddressRange {
                line: line.0,
                limit: self.geom.total_lines(),
            });
        }
        let (offset, vgroup, segment, row) = self.split(line.0);
        let hi = row >> self.seg_bits;
        let mapped_hi = self.state(vgroup, segment).translate(hi);
        let mapped_row = (mapped_hi << self.seg_bits) | segment as u64;
        Ok(LineAddress(
            (mapped_row << (self.gang_bits + self.vgroup_bits))
                | ((vgroup as u64) << self.gang_bits)
                | offset,
        ))
    }

    /// The two possible pre-images of a translated line; exactly one maps
    /// forward onto it (check with [`RubixDEngine::translate`]).
    pub fn invert_candidates(&self, mapped: LineAddress) -> [LineAddress; 2] {
        let (offset, vgroup, segment, row) = self.split(mapped.0);
        let hi = row >> self.seg_bits;
        let state = self.state(vgroup, segment);
        let rebuild = |hi: u64| {
            let row = (hi << self.seg_bits) | segment as u64;
            LineAddress(
                (row << (self.gang_bits + self.vgroup_bits))
                    | ((vgroup as u64) << self.gang_bits)
                    | offset,
            )
        };
        [
            rebuild(hi ^ state.curr_key()),
            rebuild(hi ^ state.curr_key() ^ state.next_key()),
        ]
    }

    /// A representative line of `(vgroup, full row address)`, offset zero.
    pub fn line_of(&self, vgroup: u32, row: u64) -> LineAddress {
        LineAddress(
            (row << (self.gang_bits + self.vgroup_bits)) | ((vgroup as u64) << self.gang_bits),
        )
    }

    /// Called once per demand activation attributed to `line`'s v-segment.
    /// With probability `remap_probability` the segment runs one episode;
    /// completing the segment rotates its keys in the same call.
    pub fn on_activation(&mut self, line: LineAddress) -> Option<RemapEvent> {
        if self.cfg.remap_probability == 0.0 {
            return None;
        }
        if !self.trigger_rng.gen_bool(self.cfg.remap_probability) {
            return None;
        }
        let (_, vgroup, segment, _) = self.split(line.0);
        Some(self.run_episode(vgroup, segment))
    }

    fn run_episode(&mut self, vgroup: u32, segment: u32) -> RemapEvent {
        let seg_bits = self.seg_bits;
        let idx = self.state_index(vgroup, segment);
        let outcome = self.states[idx]
            .remap_episode(self.cfg.gang_size)
            .expect("engine rotates before the pointer can overflow");
        let rotated = if self.states[idx].epoch_complete() {
            self.states[idx]
                .rotate_epoch(&mut self.key_rng)
                .expect("epoch just completed");
            true
        } else {
            false
        };
        if outcome.skipped {
            self.skips += 1;
        } else {
            self.swaps += 1;
            self.remap_activations += outcome.cost.activations;
        }
        RemapEvent {
            vgroup,
            segment,
            src_row: (outcome.src_row << seg_bits) | segment as u64,
            dst_row: (outcome.dst_row << seg_bits) | segment as u64,
            skipped: outcome.skipped,
            cost: outcome.cost,
            rotated,
        }
    }

    /// Drives every segment through the remainder of its current epoch and
    /// rotates it. Analysis helper: puts the engine in a
    /// "fully remapped at least once" state.
    pub fn force_rotation(&mut self) {
        for idx in 0..self.states.len() {
            while !self.states[idx].epoch_complete() {
                let outcome = self.states[idx].remap_episode(self.cfg.gang_size).unwrap();
                if outcome.skipped {
                    self.skips += 1;
                } else {
                    self.swaps += 1;
                    self.remap_activations += outcome.cost.activations;
                }
            }
            self.states[idx].rotate_epoch(&mut self.key_rng).unwrap();
        }
    }
}
