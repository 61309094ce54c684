// SPDX-License-Identifier: Apache-2.0
//! Netlist flow: parse, find threshold cones feeding flip-flops, replace
//! them by FTL cells, check equivalence, account for area and power, and
//! correct timing after fabrication by retraining a cell.

pub mod cuts;
pub mod equivalence;
pub mod mapping;
pub mod netlist;
pub mod report;
pub mod timing;

pub use cuts::{cone_function, enumerate_cuts, Cut};
pub use equivalence::{verify_equivalence, EquivalenceReport};
pub use mapping::{map_to_ftl, FtlCellRef, Mapping, Policy};
pub use netlist::{parse_blif, parse_blif_with_library, write_blif, Netlist};
pub use report::{ppa_report, ReplacementReport, TechTable};
pub use timing::{fix_timing, TimingStage};
