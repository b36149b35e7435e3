//! Steady-state simulator of three-photon coherence and inversionless gain
//! in thermal mercury vapor: four/five-level Bloch equations, non-collinear
//! Doppler-free beam geometry, Maxwell-Boltzmann averaging, and probe
//! transmission spectra.

pub mod atom;
pub mod average;
pub mod bloch;
pub mod config;
pub mod constants;
pub mod doppler;
pub mod error;
pub mod faddeeva;
pub mod linalg;
pub mod pump;
pub mod quad;
pub mod response;
pub mod spectra;

pub use atom::{mercury_five_level_preset, mercury_preset, SystemConfig};
pub use average::{average_chi, Averager};
pub use error::{Result, SimError};
pub use response::{chi_analytic, chi_numeric, Susceptibility};
