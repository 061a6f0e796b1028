//! Environment-induced decoherence of Morse-oscillator wave packets.
//!
//! The crate builds the bound-state Morse model, the thermal-bath
//! dissipator, integrates the master equation at three levels of
//! approximation, and analyses the resulting trajectories (entropy,
//! purity, Wigner functions, decoherence times, revivals).

pub mod analysis;
pub mod bath;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod morse;
pub mod observables;
pub mod quadrature;
pub mod record;
pub mod wigner;

pub use bath::{build_dissipator, calibrate_lambda, DissipatorOperators, EnvironmentSpec};
pub use density::DensityMatrix;
pub use dynamics::{evolve, Evolution, InitialState, Level, TrajectoryConfig};
pub use error::{Error, Result};
pub use morse::{LadderModel, MorseModel, Spectrum, StateVector};
pub use record::TrajectoryRecord;
