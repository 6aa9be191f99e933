// SPDX-License-Identifier: Apache-2.0

//! Clock-gating insertion for flip-flop netlists, with event-driven
//! simulation, register timing characterization and power estimation.
//!
//! Every numeric routine is generic over [`Scalar`]; the crate root exports
//! `f64` aliases for everyday use and exact rational aliases for tests that
//! want bit-for-bit arithmetic.

pub mod characterize;
pub mod error;
pub mod gating;
pub mod netlist;
pub mod power;
pub mod scalar;
pub mod sim;
pub mod techlib;

pub use characterize::{Bench, Units};
pub use error::{CharError, GatingError, NetlistError, PowerError, ProfileError, SimError};
pub use gating::{insert_clock_gating, GatingMode, GatingReport};
pub use netlist::{build_register_demo, parse_netlist, write_netlist, CellFunction, Instance, Netlist};
pub use scalar::Scalar;
pub use sim::{LogicValue, SimOptions};

/// Exact rational scalar.
pub type Exact = num_rational::Ratio<i64>;

pub type LibraryProfile = techlib::LibraryProfile<f64>;
pub type CellSpec = techlib::CellSpec<f64>;
pub type Trace = sim::Trace<f64>;
pub type Stimulus = sim::Stimulus<f64>;

pub type ExactLibraryProfile = techlib::LibraryProfile<Exact>;
pub type ExactTrace = sim::Trace<Exact>;
pub type TimingReport = characterize::TimingReport<f64>;
pub type VariationResult = characterize::VariationResult<f64>;
pub type PowerReport = power::PowerReport<f64>;
pub type ComparisonReport = power::ComparisonReport<f64>;

pub type ExactTimingReport = characterize::TimingReport<Exact>;
pub type ExactPowerReport = power::PowerReport<Exact>;
