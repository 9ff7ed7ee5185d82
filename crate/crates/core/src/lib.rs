//! Simulation of a transmon qubit scattering propagating surface acoustic
//! waves (SAWs) in a one-dimensional acoustic channel.
//!
//! The crate is organised by physical subsystem:
//!
//! - [`device`]: validated device parameters and derived design constants.
//! - [`transmon`]: flux-tunable transmon spectrum.
//! - [`idt`]: interdigital transducer response, bandwidth and acoustic coupling.
//! - [`scattering`]: steady-state reflection/transmission of a coherent drive.
//! - [`dynamics`]: Lindblad time evolution, Autler-Townes spectra and routing.
//! - [`channel`]: delays, transducer filtering, multiple transits, time gating.
//! - [`trap`]: two-transmon catch-and-release of a weak SAW pulse.
//! - [`fit`]: recovery of drive calibration and dephasing from power sweeps.
//! - [`scenario`]: scenario files, CSV outputs and run manifests.
//!
//! All frequencies and rates crossing the public API are ordinary
//! frequencies in Hz. Conversion to angular units happens internally.

pub mod channel;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fit;
pub mod idt;
pub mod scattering;
pub mod scenario;
pub mod transmon;
pub mod trap;

pub use error::{Error, Result};
pub use exec::Execution;

pub(crate) const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
