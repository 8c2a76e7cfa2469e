//! Polaron-method toolkit for a giant atom coupled to an Ohmic waveguide.
//!
//! The modules follow the computation: [`waveguide`] builds the discrete mode
//! model, [`polaron`] solves the self-consistent ground state, [`equilibrium`]
//! and [`markovian`] derive static observables, and [`dynamics`] and [`dde`]
//! evolve a single excitation.

pub mod dde;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod markovian;
pub mod polaron;
pub mod quadrature;
pub mod waveguide;

pub use num_complex::Complex64 as C64;

pub use dde::{DdeParams, DdeSeries, PoleReport};
pub use dynamics::{DynamicsOptions, Trajectory};
pub use equilibrium::{PhaseDiagram, PhotonProfile, ProfileConvention, TailFit, TailModel, TailWindow};
pub use error::{Error, Result};
pub use markovian::MarkovObservables;
pub use polaron::{ExcitationState, InitialGuess, PolaronSolution, SolverOptions};
pub use waveguide::{ModeGrid, SystemConfig};
