//! Circuit-level Monte Carlo simulation of the surface code built from GKP qubits.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod gkp;
pub mod matcher;
pub mod ml_decoder;
pub mod rng;
pub mod surface;

pub use channel::{Channel, GateDecoder, GateKind, LocationKind, MarginalCache, Pauli, PauliTwoQubit, ProbTable};
pub use error::{Error, Result};
pub use experiments::{Command, RunConfig, Weights};
pub use gkp::{EcScheme, GkpParams, ShiftPair};
pub use ml_decoder::{DecodedIntegers, JointShift, Sector};
pub use surface::{Lattice, MemoryExperiment, MemoryOutcome, PauliFrame, PeStore};
