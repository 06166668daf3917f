//! Online maximin-share (MMS) allocation: exact-rational implementations
//! of semi-online allocators for goods and chores, an exact MMS oracle,
//! adaptive adversarial instance constructors, and a reproducible
//! experiment harness.
//!
//! Items arrive one at a time and must be assigned irrevocably; each agent
//! reports her (normalized) value or cost vector as the item arrives. The
//! allocators here implement published guarantee bounds; the adversaries
//! realize the matching impossibility constructions; the oracle certifies
//! both with exact arithmetic.

pub mod adversary;
pub mod chores;
pub mod error;
pub mod experiments;
pub mod goods;
pub mod instance;
pub mod online;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use instance::{Allocation, Instance, Kind};
pub use online::{play_match, run_stream, worst_ratio, AdaptiveAdversary, OnlineAllocator};
pub use oracle::{certify, mms_all, mms_exact, DEFAULT_CAP};
pub use scalar::Scalar;
