//! Exact virtual-neuron arithmetic on a zero-leak spiking simulator.
//!
//! A virtual neuron is a small integrate-and-fire circuit that adds two
//! fixed-point numbers carried as spike bit vectors on a positive and a
//! negative rail. Circuits compose into larger functions and serialize to a
//! plain-text netlist.

pub mod circuit;
pub mod codec;
pub mod dyadic;
pub mod error;
pub mod metrics;
pub mod mu;
pub mod netlist;
pub mod snn;
pub mod verify;

pub use circuit::{build_adder, CompositionGraph, InputPort, VirtualNeuronHandle};
pub use codec::{BitVector, DyadicValue, PrecisionVector, Rail, RailFormat};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use metrics::{EnergyModel, RunMetrics};
pub use mu::{FunctionCircuit, FunctionKind};
pub use netlist::NetlistProgram;
pub use snn::{simulate, Network, SpikeTrace, Stimulus};
pub use verify::{VerificationReport, VerifyMode};
