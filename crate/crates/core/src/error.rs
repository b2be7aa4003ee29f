// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge set contains a directed cycle through node {node}")]
    CycleDetected { node: usize },

    #[error("node index {index} out of range for a graph with {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },

    #[error("duplicate edge {parent} -> {child}")]
    DuplicateEdge { parent: usize, child: usize },

    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("smoothing spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("p-value vector has {got} entries but the graph has {expected} nodes")]
    Alignment { expected: usize, got: usize },

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("invalid graph recipe: {0}")]
    InvalidRecipe(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no p-value given for node `{0}`")]
    MissingNode(String),

    #[error("node `{0}` listed more than once")]
    DuplicateNode(String),

    #[error("p-value {value} for node `{label}` is outside [0, 1]")]
    OutOfRange { label: String, value: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
