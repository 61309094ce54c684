// SPDX-License-Identifier: Apache-2.0
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arity {0} outside 1..=5")]
    Arity(usize),
    #[error("truth table {bits:#x} does not fit arity {arity}")]
    TruthTableWidth { arity: usize, bits: u32 },
    #[error("expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("threshold must be positive")]
    ZeroThreshold,
    #[error("weights and threshold do not realize the truth table")]
    NotRealized,
    #[error("cell evaluation is metastable on minterm {0}")]
    Metastable(u32),
    #[error("invalid cell parameters: {0}")]
    Params(&'static str),
    #[error("truth table is not trainable at zero handicap")]
    Untrainable,
    #[error("cell index {index} out of range for a chain of {len}")]
    CellIndex { index: usize, len: usize },
    #[error("decoder address {address} out of range for {lines} lines")]
    Address { address: u32, lines: usize },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("netlist: {0}")]
    Netlist(String),
    #[error("timing target unreachable: {0}")]
    Unfixable(String),
    #[error("on-chip training did not converge after {0} iterations")]
    OnChipFailed(u64),
}
