//! Time-domain dynamics of a driven two- or three-level transmon.
//!
//! The qubit sits in a rotating frame: the probe (SAW) drives 0–1 at
//! detuning δp from f01, the control (gate) drives 1–2 at detuning δc from
//! f12. Fields radiated into the channel follow from input-output relations
//! calibrated so that a constant drive reproduces the steady-state reflection
//! of [`crate::scattering`].

pub mod lindblad;
mod model;
mod routing;

pub use lindblad::{lindblad_rhs, lindblad_step, steady_state, DensityMatrix, Dissipator, Operator};
pub use model::{
    collapse_operators, evolve, evolve_from, evolve_to_steady_state, hamiltonian, max_step, steady_reflection,
    DriveSchedule, Evolution, FieldTrace, Integrity, TimeDomainSteadyState,
};
pub use routing::{
    autler_townes_spectrum, autler_townes_splitting, find_dips, route_pulse, saw_pulse, RouteOptions, RouteResult,
    SawPulseOptions, SawPulseResult,
};
