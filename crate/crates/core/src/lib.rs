//! Simulation of the two-qubit code for the detected amplitude damping
//! channel: encoding, labeled Kraus channels, three recovery schemes, device
//! noise models and shot-sampled post-selection experiments.

pub mod channels;
pub mod circuits;
pub mod cli;
pub mod code;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod qmat;
pub mod recovery;
pub mod verify;

pub use channels::{amplitude_damping, DampingParam, Label, LabeledChannel};
pub use error::{Error, Result};
pub use qmat::{CMatrix, DensityMatrix, PureState, SubnormalizedState, C64};
pub use recovery::SchemeKind;
