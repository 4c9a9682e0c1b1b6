//! Desk-scale simulator of DRAM line-to-row address mapping and Rowhammer
//! mitigation.
//!
//! The crate models a memory system at the granularity that matters for
//! Rowhammer analysis: which 64-byte lines co-reside in which DRAM row, how
//! often each row is activated within a 64 ms refresh window, and what a
//! mitigation does once a row crosses its tracker threshold.
//!
//! The pieces:
//!
//! * [`geometry`] — address types, DRAM geometry, and the conventional
//!   line-to-row mappings (linear, Coffee Lake, Skylake, MOP).
//! * [`cipher`] — a programmable-bit-width bijective cipher used for
//!   address-space randomization.
//! * [`rubix_s`] — static randomized mapping: encrypt the gang address, then
//!   route through a base mapping.
//! * [`rubix_d`] — dynamic xor-based remapping with per-v-group keys, a
//!   remap pointer, and gradual key rotation.
//! * [`dram`] — event-driven multi-bank DRAM with row buffers, tRC-limited
//!   activations, FR-FCFS scheduling, and 64 ms refresh epochs.
//! * [`tracking`] — Misra-Gries and per-row activation trackers.
//! * [`mitigation`] — victim refresh, AQUA quarantine migration, SRS random
//!   swap, Blockhammer rate control, and the bit-flip oracle.
//! * [`workloads`] — synthetic kernels, adversarial access patterns, and
//!   CSV trace ingestion.
//! * [`analytics`] — hot-row census, per-line attribution, run comparison.
//! * [`sim`] — the scenario runner tying everything together.

pub mod analytics;
pub mod cipher;
pub mod dram;
pub mod error;
pub mod geometry;
pub mod mitigation;
pub mod rubix_d;
pub mod rubix_s;
pub mod seed;
pub mod sim;
pub mod tracking;
pub mod workloads;

pub use analytics::{compare_runs, hot_row_census, RunComparison, SimReport};
pub use cipher::CipherKey;
pub use dram::{AccessResult, DramModel, PagePolicy, TimingParams};
pub use error::{Result, SimError};
pub use geometry::{Geometry, LineAddress, Mapping, PhysicalLocation, StaticMapping};
pub use mitigation::{MitigationConfig, MitigationScheme};
pub use rubix_d::{RemapEvent, RemapState, RubixDConfig};
pub use rubix_s::RubixS;
pub use sim::{SimConfig, Simulator};
