//! Aggregation of time-flexible EV charging loads into day-ahead flexible orders.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation over in-memory values: file formats, timing and the command
//! line live in the companion `flexbid` crate.
//!
//! Layout:
//!
//! - [`model`]: flex-offers, EV sessions and elementary profile measures.
//! - [`aggregation`]: alignments, start-alignment and pairwise aggregation, SA/SAG baselines.
//! - [`fences`]: box-plot quartiles and outlier fences.
//! - [`heuristics`]: the market-based aggregation loop and its LP/DP/DTF variants.
//! - [`market`]: flexible orders, activation, settlement and cost reports.
//! - [`datagen`]: seeded synthetic fleets.
//! - [`oracle`]: exhaustive solver for small instances and solution-space counting.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod aggregation;
pub mod datagen;
mod error;
pub mod fences;
pub mod heuristics;
pub mod market;
pub mod model;
pub mod oracle;

pub use aggregation::{AggregatedFlexOffer, Alignment, PairAlignment};
pub use error::Error;
pub use heuristics::{MaggConfig, MaggResult, Variant};
pub use market::{FlexibleOrder, PriceCurve, RegulationModel, SettlementReport, TradeReport};
pub use model::{EvSession, FlexOffer};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Tolerance used when a floating point value must land on an integer boundary
/// (whole charging hours, exact lot multiples with a zero band).
pub(crate) const EPS: f64 = 1e-9;
