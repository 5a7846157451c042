//! Indoor positioning core: everything that does not touch the filesystem.
//!
//! The pipeline goes radio-map synthesis (`radio_model`) → signal-source
//! placement (`placement_opt`) → RSSI smoothing (`rssi_filter`) → zone
//! classification (`zone_classifier`) → per-zone position regression
//! (`position_net`) → error metrics (`eval`). All randomness is drawn from
//! caller-supplied seeds; every operation is deterministic given its inputs.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub(crate) mod math;
pub mod matrix;

pub mod eval;
pub mod placement_opt;
pub mod position_net;
pub mod radio_model;
pub mod rssi_filter;
pub mod zone_classifier;

pub use error::{Error, Result};
pub use radio_model::{Fingerprint, PathLossParams, Placement, ReferencePoint, RoomSpec, RssiSample};
