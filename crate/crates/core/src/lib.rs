//! Simulator and analytic toolkit for delegated graph-state computation with a third-party arbiter.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod harness;
pub mod honesty;
pub mod linalg;
pub mod pauli;
pub mod protocol;
pub mod state;
pub mod stats;
pub mod tableau;
pub mod verify;

pub use error::{Error, Result};
pub use graph::Graph;
pub use honesty::{HonestyTest, MeasurementMode, StabilizerSamplingTest, TestRecord};
pub use pauli::{graph_stabilizer_generator, stabilizer_element, Pauli, PauliString, Phase};
pub use protocol::{
    run_private_mode, run_protocol, AliceStrategy, Backend, BobStrategy, Mode, ProtocolParams, RunOptions,
    StateSpec, Transcript, Verdict,
};
pub use state::{DensityState, Measurement, Outcome, PureState, QuantumCopy};
pub use tableau::StabilizerTableau;
