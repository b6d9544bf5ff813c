//! Simulation and invasion-rate analysis for a two-prey/one-predator
//! Lotka-Volterra system whose predation and conversion coefficients switch
//! between environments according to a continuous-time Markov chain.

pub mod bracket;
pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod invasion;
pub mod io;
pub mod model;
pub mod rng;
pub mod sim;
pub mod svg;

pub use error::{Error, Result};
pub use model::{EnvCoeffs, FaceId, Prey, Species, SwitchLaw, SwitchedSystem, SystemParams};
