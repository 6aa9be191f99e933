// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::netlist::Diagnostic;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown cell type `{cell_type}`")]
    UnknownCellType { line: usize, cell_type: String },
    #[error("{0}")]
    Invalid(Diagnostic),
    #[error("register width must be at least 1")]
    ZeroWidth,
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("name `{0}` already in use")]
    NameCollision(String),
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("profile is missing required cell `{0}`")]
    MissingCell(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("unknown cell type `{0}`")]
    UnknownCellType(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum GatingError {
    #[error("netlist contains no flip-flops")]
    NoFlipFlops,
    #[error("flip-flop `{0}` is already clocked by a LECTOR_AND2 gating cell")]
    AlreadyGated(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("line {line}: {message}")]
    StimulusParse { line: usize, message: String },
    #[error("stimulus drives `{0}`, which is not a module input")]
    NotAnInput(String),
    #[error("event limit of {0} exceeded (oscillation?)")]
    EventLimit(u64),
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("trace has no nets")]
    EmptyTrace,
    #[error("delay annotation covers {got} instances, netlist has {expected}")]
    AnnotationMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum CharError {
    #[error("bench: {0}")]
    Bench(String),
    #[error("output `{0}` never transitions")]
    NoTransition(String),
    #[error("unknown value on probe net `{0}`")]
    UnknownProbe(String),
    #[error("{0} is unconstrained within the search range")]
    Unconstrained(&'static str),
    #[error("{0} never passes within the search range")]
    NeverPasses(&'static str),
    #[error("{0} pass/fail pre-scan is not monotone")]
    NonMonotone(&'static str),
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("perturbation must lie in [0, 0.5]")]
    BadPerturbation,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Gating(#[from] GatingError),
}

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("simulation window must be positive")]
    ZeroWindow,
    #[error("trace does not belong to this netlist: {0}")]
    TraceMismatch(String),
    #[error("netlists have different interfaces: {0}")]
    InterfaceMismatch(String),
    #[error("no flip-flop is clocked, directly or through a gate, by a module input of `{0}`")]
    NoClock(String),
    #[error("activity {0} outside [0, 1]")]
    BadActivity(f64),
    #[error("at least 100 cycles required, got {0}")]
    TooFewCycles(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
