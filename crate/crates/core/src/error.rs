use thiserror::Error;

use crate::snn::{NeuronId, Step};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("malformed number {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("{value} is not representable with {int_bits} integer and {frac_bits} fraction bits")]
    NotRepresentable {
        value: String,
        int_bits: u32,
        frac_bits: u32,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("timing violation: output neuron {neuron} spiked at step {step}, expected only step {expected}")]
    TimingViolation {
        neuron: NeuronId,
        step: Step,
        expected: Step,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn composition(msg: impl Into<String>) -> Self {
        Error::Composition(msg.into())
    }
}
