//! Activation trackers that decide when a row has earned a mitigation.
//!
//! Two flavors: a Misra-Gries frequent-elements summary (bounded entries,
//! undercount at most `inserts / capacity`) for AQUA and SRS, and an
//! idealized exact per-row counter for Blockhammer and victim refresh.
//! Both reset at refresh-epoch boundaries.

use std::collections::HashMap;

/// Misra-Gries summary over row identifiers.
///
/// For any row, `true_count - estimate <= total_inserts / capacity`, so a
/// tracker sized as [`MisraGries::capacity_for`] can never miss a row that
/// crossed `threshold + slack`. A signaled entry resets to 0 but stays
/// resident until a decrement round floors it out.
#[derive(Debug, Clone)]
pub struct MisraGries {
    capacity: usize,
    threshold: u64,
    entries: HashMap<u64, u64>,
    total_inserts: u64,
}

impl MisraGries {
    pub fn new(capacity: usize, threshold: u64) -> Self {
        assert!(capacity > 0, "tracker needs at least one entry");
        assert!(threshold > 0, "threshold must be positive");
        MisraGries {
            capacity,
            threshold,
            entries: HashMap::new(),
            total_inserts: 0,
        }
    }

    /// Entry count that keeps the worst-case undercount below `threshold`
    /// even at the tRC-limited activation rate.
    pub fn capacity_for(max_inserts_per_epoch: u64, threshold: u64) -> usize {
        (max_inserts_per_epoch.div_ceil(threshold)).max(1) as usize
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn total_inserts(&self) -> u64 {
        self.total_inserts
    }

    /// Current estimate for `row` (0 when untracked).
    pub fn estimate(&self, row: u64) -> u64 {
        self.entries.get(&row).copied().unwrap_or(0)
    }

    /// Records one activation of `row`; returns `Some(row)` when its
    /// estimate reaches the threshold (the entry is then reset to 0).
    pub fn insert(&mut self, row: u64) -> Option<u64> {
        self.total_inserts += 1;
        if let Some(count) = self.entries.get_mut(&row) {
            *count += 1;
            if *count >= self.threshold {
                *count = 0;
                return Some(row);
            }
            return None;
        }
        if self.entries.len() < self.capacity {
            if self.threshold == 1 {
                self.entries.insert(row, 0);
                return Some(row);
            }
            self.entries.insert(row, 1);
            return None;
        }
        // Summary full: charge the unmatched arrival against every entry.
        for count in self.entries.values_mut() {
            *count = count.saturating_sub(1);
        }
        self.entries.retain(|_, count| *count > 0);
        None
    }

    /// Epoch boundary: drop all state.
    pub fn reset(&mut self) {
        self.entries.clear();
        self.total_inserts = 0;
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Idealized tracker with one exact counter per row.
#[derive(Debug, Clone, Default)]
pub struct PerRowTracker {
    counts: HashMap<u64, u64>,
    threshold: u64,
}

impl PerRowTracker {
    pub fn new(threshold: u64) -> Self {
        assert!(threshold > 0, "threshold must be positive");
        PerRowTracker {
            counts: HashMap::new(),
            threshold,
        }
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn count(&self, row: u64) -> u64 {
        self.counts.get(&row).copied().unwrap_or(0)
    }

    /// Records one activation; signals at every exact multiple of the
    /// threshold (64th, 128th, ... activation), never in between.
    pub fn insert(&mut self, row: u64) -> Option<u64> {
        let count = self.counts.entry(row).or_insert(0);
        *count += 1;
        if (*count).is_multiple_of(self.threshold) {
            Some(row)
        } else {
            None
        }
    }

    pub fn reset(&mut self) {
        self.counts.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Replays `trace` through a Misra-Gries tracker and checks the no-escape
/// guarantee against exact counting: every row whose true count exceeds
/// `threshold + trace_len / capacity` must have been signaled.
pub fn tracker_guarantee_check(trace: &[u64], capacity: usize, threshold: u64) -> bool {
    let mut tracker = MisraGries::new(capacity, threshold);
    let mut signaled = std::collections::HashSet::new();
    let mut exact: HashMap<u64, u64> = HashMap::new();
    for &row in trace {
        *exact.entry(row).or_insert(0) += 1;
        if let Some(hit) = tracker.insert(row) {
            signaled.insert(hit);
        }
    }
    let slack = trace.len() as u64 / capacity as u64;
    exact
        .iter()
        .all(|(row, &count)| count <= threshold + slack || signaled.contains(row))
}
