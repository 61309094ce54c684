// SPDX-License-Identifier: Apache-2.0
//! Flash threshold logic (FTL) design flow.
//!
//! Threshold functions and their library, a behavioral model of the flash
//! threshold cell, VT training, the programming scan chain, and netlist
//! rewriting onto FTL cells. The crate is `no_std` with `alloc`.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod cell;
pub mod chain;
pub mod error;
pub mod library;
pub mod npn;
pub mod synth;
pub mod threshold;
pub mod trainer;
pub mod truth_table;

pub use error::{Error, Result};
pub use library::{enumerate_library, Library, LibraryEntry};
pub use npn::NpnTransform;
pub use threshold::{chow_signature, detect_threshold, minimize_weights, ThresholdFunction};
pub use truth_table::{TruthTable, MAX_ARITY};
