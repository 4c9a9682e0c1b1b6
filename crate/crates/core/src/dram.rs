//! Event-driven DRAM model: per-bank row buffers, tRC-limited activations,
//! open-adaptive page policy, FR-FCFS request picking, channel blocking,
//! and the per-epoch activation window.
//!
//! Timestamps are integer tenths of a nanosecond so the DDR4 fractional
//! timings (14.2 ns) stay exact.

use crate::error::{Result, SimError};
use crate::geometry::{Geometry, LineAddress, PhysicalLocation};

/// Simulation time in tenths of a nanosecond.
pub type Tenths = u64;

/// Converts whole nanoseconds to [`Tenths`].
pub const fn ns(value: u64) -> Tenths {
    value * 10
}

/// DRAM timing parameters, all in tenths of a nanosecond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingParams {
    pub t_rcd: Tenths,
    pub t_cl: Tenths,
    pub t_rp: Tenths,
    pub t_rc: Tenths,
    pub refresh_interval: Tenths,
}

impl TimingParams {
    /// DDR4-2400: 14.2-14.2-14.2-45 ns, 64 ms refresh.
    pub fn ddr4_2400() -> Self {
        TimingParams {
            t_rcd: 142,
            t_cl: 142,
            t_rp: 142,
            t_rc: 450,
            refresh_interval: ns(64_000_000),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_rcd == 0 || self.t_cl == 0 || self.t_rp == 0 || self.t_rc == 0 {
            return Err(SimError::Config(
                "timing parameters must be positive".into(),
            ));
        }
        if self.t_rc < self.t_rcd + self.t_rp {
            return Err(SimError::Config("t_rc must cover t_rcd + t_rp".into()));
        }
        if self.refresh_interval == 0 {
            return Err(SimError::Config("refresh interval must be positive".into()));
        }
        Ok(())
    }

    /// Row-miss service latency (precharge + activate + column access).
    pub fn miss_latency(&self) -> Tenths {
        self.t_rp + self.t_rcd + self.t_cl
    }
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams::ddr4_2400()
    }
}

/// Row-buffer management policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PagePolicy {
    /// Row stays open until a conflicting access closes it.
    Open,
    /// Row closes after `max_accesses` column accesses (open-adaptive).
    OpenAdaptive { max_accesses: u32 },
}

impl PagePolicy {
    pub fn open_adaptive_16() -> Self {
        PagePolicy::OpenAdaptive { max_accesses: 16 }
    }
}

impl Default for PagePolicy {
    fn default() -> Self {
        PagePolicy::open_adaptive_16()
    }
}

/// Per-bank row-buffer state.
#[derive(Debug, Clone, Copy, Default)]
pub struct BankState {
    pub open_row: Option<u64>,
    pub accesses_since_open: u32,
    pub earliest_next_activate: Tenths,
}

/// Outcome of one access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessResult {
    pub hit: bool,
    pub caused_activation: bool,
    pub completion_time: Tenths,
}

/// The banks, row buffers, and channel reservations of one memory system.
#[derive(Debug, Clone)]
pub struct DramModel {
    geom: Geometry,
    timing: TimingParams,
    policy: PagePolicy,
    banks: Vec<BankState>,
    channel_free: Vec<Tenths>,
}

impl DramModel {
    pub fn new(geom: Geometry, timing: TimingParams, policy: PagePolicy) -> Result<Self> {
        timing.validate()?;
        if let PagePolicy::OpenAdaptive { max_accesses } = policy {
            if max_accesses == 0 {
                return Err(SimError::Config(
                    "open-adaptive cap must be positive".into(),
                ));
            }
        }
        let bank_count = (geom.channels() * geom.banks_per_channel()) as usize;
        Ok(DramModel {
            geom,
            timing,
            policy,
            banks: vec![BankState::default(); bank_count],
            channel_free: vec![0; geom.channels() as usize],
        })
    }

    pub fn timing(&self) -> &TimingParams {
        &self.timing
    }

    pub fn policy(&self) -> PagePolicy {
        self.policy
    }

    fn bank_index(&self, loc: PhysicalLocation) -> usize {
        (loc.channel * self.geom.banks_per_channel() + loc.bank) as usize
    }

    pub fn bank(&self, loc: PhysicalLocation) -> &BankState {
        &self.banks[self.bank_index(loc)]
    }

    /// Whether an access to `loc` would hit the currently open row.
    pub fn would_hit(&self, loc: PhysicalLocation) -> bool {
        let bank = &self.banks[self.bank_index(loc)];
        bank.open_row == Some(loc.row)
    }

    /// Earliest time the channel can start servicing a request.
    pub fn channel_free_at(&self, channel: u32) -> Tenths {
        self.channel_free[channel as usize]
    }

    /// Services one access at or after `t`. Misses close the old row,
    /// respect tRC since the bank's previous activation, and re-open.
    pub fn access(&mut self, loc: PhysicalLocation, t: Tenths) -> AccessResult {
        let start = t.max(self.channel_free[loc.channel as usize]);
        let idx = self.bank_index(loc);
        let bank = &mut self.banks[idx];
        if bank.open_row == Some(loc.row) {
            bank.accesses_since_open += 1;
            let completion = start + self.timing.t_cl;
            if let PagePolicy::OpenAdaptive { max_accesses } = self.policy {
                if bank.accesses_since_open >= max_accesses {
                    bank.open_row = None;
                    bank.accesses_since_open = 0;
                }
            }
            return AccessResult {
                hit: true,
                caused_activation: false,
                completion_time: completion,
            };
        }
        let ready = if bank.open_row.is_some() {
            start + self.timing.t_rp
        } else {
            start
        };
        let activate_at = ready.max(bank.earliest_next_activate);
        bank.earliest_next_activate = activate_at + self.timing.t_rc;
        bank.open_row = Some(loc.row);
        bank.accesses_since_open = 1;
        let completion = activate_at + self.timing.t_rcd + self.timing.t_cl;
        if let PagePolicy::OpenAdaptive { max_accesses } = self.policy {
            if max_accesses == 1 {
                bank.open_row = None;
                bank.accesses_since_open = 0;
            }
        }
        AccessResult {
            hit: false,
            caused_activation: true,
            completion_time: completion,
        }
    }

    /// Reserves the channel for `duration` starting no earlier than `now`.
    /// Overlapping blocks serialize; returns the release time.
    pub fn block_channel(&mut self, channel: u32, duration: Tenths, now: Tenths) -> Tenths {
        let free = &mut self.channel_free[channel as usize];
        *free = (*free).max(now) + duration;
        *free
    }

    /// Holds a bank busy (victim refresh); the row buffer is left closed.
    pub fn block_bank(&mut self, loc: PhysicalLocation, duration: Tenths, now: Tenths) {
        let idx = self.bank_index(loc);
        let bank = &mut self.banks[idx];
        bank.earliest_next_activate = bank.earliest_next_activate.max(now) + duration;
        bank.open_row = None;
        bank.accesses_since_open = 0;
    }

    /// Refresh closes every row buffer.
    pub fn refresh_all(&mut self) {
        for bank in &mut self.banks {
            bank.open_row = None;
            bank.accesses_since_open = 0;
        }
    }
}

/// A pending request as seen by the scheduler: already translated to its
/// physical target.
#[derive(Debug, Clone, Copy)]
pub struct Request {
    pub arrival: Tenths,
    pub line: LineAddress,
    pub loc: PhysicalLocation,
    pub write: bool,
    /// Enqueue order, used as the FCFS age tie-breaker.
    pub seq: u64,
}

/// FR-FCFS: among requests that have arrived by `now`, pick the oldest one
/// hitting an open row; otherwise the oldest outright. `None` when nothing
/// has arrived yet.
pub fn fr_fcfs_pick(queue: &[Request], dram: &DramModel, now: Tenths) -> Option<usize> {
    let mut oldest: Option<(usize, u64)> = None;
    let mut oldest_hit: Option<(usize, u64)> = None;
    for (i, req) in queue.iter().enumerate() {
        if req.arrival > now {
            continue;
        }
        if oldest.is_none_or(|(_, seq)| req.seq < seq) {
            oldest = Some((i, req.seq));
        }
        if dram.would_hit(req.loc) && oldest_hit.is_none_or(|(_, seq)| req.seq < seq) {
            oldest_hit = Some((i, req.seq));
        }
    }
    oldest_hit.or(oldest).map(|(i, _)| i)
}

/// Per-epoch activation counts over the global row space.
#[derive(Debug, Clone)]
pub struct ActivationWindow {
    counts: Vec<u32>,
    touched: Vec<u64>,
    window_start: Tenths,
}

impl ActivationWindow {
    pub fn new(total_rows: u64) -> Self {
        ActivationWindow {
            counts: vec![0; total_rows as usize],
            touched: Vec::new(),
            window_start: 0,
        }
    }

    pub fn window_start(&self) -> Tenths {
        self.window_start
    }

    /// Adds one activation to `row_id`; returns the updated in-window count.
    pub fn increment(&mut self, row_id: u64) -> u32 {
        let slot = &mut self.counts[row_id as usize];
        if *slot == 0 {
            self.touched.push(row_id);
        }
        *slot += 1;
        *slot
    }

    pub fn count(&self, row_id: u64) -> u32 {
        self.counts[row_id as usize]
    }

    pub fn touched_rows(&self) -> impl Iterator<Item = (u64, u32)> + Clone + '_ {
        self.touched
            .iter()
            .map(move |&row| (row, self.counts[row as usize]))
    }

    pub fn unique_rows(&self) -> u64 {
        self.touched.len() as u64
    }

    /// Epoch boundary: zero all counts and advance the window start.
    pub fn advance(&mut self, new_start: Tenths) {
        for &row in &self.touched {
            self.counts[row as usize] = 0;
        }
        self.touched.clear();
        self.window_start = new_start;
    }
}
