//! Hydrogen continuum (Whittaker) electron wavepackets.
//!
//! * [`specfun`]: continuum modes, their derivative and asymptotics
//! * [`packet`]: Gaussian superpositions, normalisation, time evolution
//! * [`observables`]: spatial spread, overlap and lifetime, nodes
//! * [`radiative`]: dipole radiative capture into bound states
//! * [`fitting`]: power-law regression of the scaling laws
//! * [`table`]: closed-form spread/lifetime trade-off table

pub mod constants;
pub mod error;
pub mod quadrature;
pub mod specfun;

pub use constants::{PhysicalConstants, CONSTANTS};
pub use error::{Error, Result};
pub mod fitting;
pub mod observables;
pub mod packet;
pub mod radiative;
pub mod table;
