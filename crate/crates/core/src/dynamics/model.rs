use num_complex::Complex64;

use super::lindblad::{lindblad_step, steady_state, DensityMatrix, Dissipator, Operator};
use crate::channel::Signal;
use crate::scattering::Rates;
use crate::{Error, Result, TWO_PI};

/// Drive envelopes on a uniform grid starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    pub t0: f64,
    pub dt: f64,
    /// Ωp(t) in Hz.
    pub probe_rabi: Vec<f64>,
    /// f_probe − f01 in Hz.
    pub probe_detuning: f64,
    /// Ωc(t) in Hz.
    pub control_rabi: Vec<f64>,
    /// f_control − f12 in Hz.
    pub control_detuning: f64,
}

impl DriveSchedule {
    /// Constant probe, no control, `len` samples.
    pub fn constant(len: usize, dt: f64, probe_rabi: f64, probe_detuning: f64) -> Self {
        DriveSchedule {
            t0: 0.0,
            dt,
            probe_rabi: vec![probe_rabi; len],
            probe_detuning,
            control_rabi: vec![0.0; len],
            control_detuning: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.probe_rabi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probe_rabi.is_empty()
    }

    pub fn has_control(&self) -> bool {
        self.control_rabi.iter().any(|&c| c != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("schedule.dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.is_empty() || self.control_rabi.len() != self.len() {
            return Err(Error::validation("schedule", "envelopes must be non-empty and share the time grid"));
        }
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        if self.probe_rabi.iter().any(bad) || self.control_rabi.iter().any(bad) {
            return Err(Error::validation("schedule", "envelopes must be finite and >= 0"));
        }
        if !(self.t0.is_finite() && self.probe_detuning.is_finite() && self.control_detuning.is_finite()) {
            return Err(Error::validation("schedule", "t0 and detunings must be finite"));
        }
        Ok(())
    }

    fn peak(v: &[f64]) -> f64 {
        v.iter().cloned().fold(0.0, f64::max)
    }
}

/// Largest RK4 step allowed for a schedule:
/// 1/(100·max(Ωp, Ωc, Γ01, γ01, |δp|, |δp + δc|)).
pub fn max_step(schedule: &DriveSchedule, rates: &Rates) -> f64 {
    let fastest = [
        DriveSchedule::peak(&schedule.probe_rabi),
        DriveSchedule::peak(&schedule.control_rabi),
        rates.gamma01,
        rates.decoherence(),
        schedule.probe_detuning.abs(),
        (schedule.probe_detuning + schedule.control_detuning).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    1.0 / (100.0 * fastest)
}

/// Rotating-frame Hamiltonian in rad/s.
pub fn hamiltonian(dim: usize, probe_rabi: f64, probe_detuning: f64, control_rabi: f64, control_detuning: f64) -> Operator {
    let mut h = Operator::zeros(dim, dim);
    let c = |x: f64| Complex64::new(TWO_PI * x, 0.0);
    h[(1, 1)] = c(-probe_detuning);
    h[(0, 1)] = c(0.5 * probe_rabi);
    h[(1, 0)] = c(0.5 * probe_rabi);
    if dim > 2 {
        h[(2, 2)] = c(-(probe_detuning + control_detuning));
        h[(1, 2)] = c(0.5 * control_rabi);
        h[(2, 1)] = c(0.5 * control_rabi);
    }
    h
}

/// Relaxation 1→0 at Γ01 and 2→1 at 2Γ01; each excited level dephases
/// against the ground state at Γφ.
pub fn collapse_operators(dim: usize, rates: &Rates) -> Dissipator {
    let mut ops = Vec::new();
    let single = |i: usize, j: usize, rate: f64| {
        let mut m = Operator::zeros(dim, dim);
        m[(i, j)] = Complex64::new(rate.sqrt(), 0.0);
        m
    };
    ops.push(single(0, 1, TWO_PI * rates.gamma01));
    if dim > 2 {
        ops.push(single(1, 2, TWO_PI * 2.0 * rates.gamma01));
    }
    if rates.gamma_phi > 0.0 {
        for j in 1..dim {
            ops.push(single(j, j, 2.0 * TWO_PI * rates.gamma_phi));
        }
    }
    Dissipator::new(ops, dim)
}

/// Incident amplitude in √(phonons/s) for a Rabi frequency Ωp.
pub(super) fn incident_amplitude(probe_rabi: f64, gamma01: f64) -> f64 {
    TWO_PI * probe_rabi / (2.0 * TWO_PI * gamma01).sqrt()
}

/// Emission constant c in `reflected = c·⟨σ⁻⟩`.
fn emission_constant(gamma01: f64) -> Complex64 {
    Complex64::new(0.0, -(0.5 * TWO_PI * gamma01).sqrt())
}

/// Complex field amplitudes on a shared uniform grid, in √(phonons/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub incident: Signal,
    pub reflected: Signal,
    pub transmitted: Signal,
}

impl FieldTrace {
    pub fn len(&self) -> usize {
        self.incident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incident.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.incident.times()
    }
}

/// Worst-case density-matrix diagnostics along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrity {
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_error: f64,
}

impl Default for Integrity {
    fn default() -> Self {
        Integrity { max_trace_drift: 0.0, min_eigenvalue: f64::INFINITY, max_hermiticity_error: 0.0 }
    }
}

impl Integrity {
    pub fn record(&mut self, rho: &DensityMatrix) {
        self.max_trace_drift = self.max_trace_drift.max((rho.trace() - 1.0).norm());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue());
        self.max_hermiticity_error = self.max_hermiticity_error.max(rho.hermiticity_error());
    }

    pub fn merge(self, other: Integrity) -> Integrity {
        Integrity {
            max_trace_drift: self.max_trace_drift.max(other.max_trace_drift),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
            max_hermiticity_error: self.max_hermiticity_error.max(other.max_hermiticity_error),
        }
    }

    pub fn within(&self, trace_tol: f64, eigen_tol: f64) -> bool {
        self.max_trace_drift < trace_tol && self.min_eigenvalue > -eigen_tol
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// One state per grid sample.
    pub states: Vec<DensityMatrix>,
    /// Fields at the transmon.
    pub field: FieldTrace,
    pub integrity: Integrity,
}

/// Evolves from the ground state.
pub fn evolve(schedule: &DriveSchedule, rates: &Rates, dim: usize) -> Result<Evolution> {
    evolve_from(DensityMatrix::ground(dim), schedule, rates, dim)
}

/// Evolves `initial` over the schedule. Envelopes are interpolated linearly
/// between grid samples; each interval is split into equal RK4 steps no
/// longer than [`max_step`].
pub fn evolve_from(initial: DensityMatrix, schedule: &DriveSchedule, rates: &Rates, dim: usize) -> Result<Evolution> {
    schedule.validate()?;
    rates.validate()?;
    if !(2..=3).contains(&dim) {
        return Err(Error::validation("dim", format!("must be 2 or 3, got {dim}")));
    }
    if initial.dim() != dim {
        return Err(Error::validation("initial state", format!("dimension {} does not match {dim}", initial.dim())));
    }
    if dim == 2 && schedule.has_control() {
        return Err(Error::validation("dim", "a control drive needs the three-level model"));
    }
    let diss = collapse_operators(dim, rates);
    let dt = schedule.dt;
    let substeps = (dt / max_step(schedule, rates)).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let n = schedule.len();

    let mut states = Vec::with_capacity(n);
    let mut integrity = Integrity::default();
    let mut rho = initial;
    integrity.record(&rho);
    states.push(rho.clone());
    for i in 0..n - 1 {
        let (p0, p1) = (schedule.probe_rabi[i], schedule.probe_rabi[i + 1]);
        let (c0, c1) = (schedule.control_rabi[i], schedule.control_rabi[i + 1]);
        let ham = |tau: f64| {
            let w = tau / dt;
            hamiltonian(
                dim,
                p0 + (p1 - p0) * w,
                schedule.probe_detuning,
                c0 + (c1 - c0) * w,
                schedule.control_detuning,
            )
        };
        for s in 0..substeps {
            rho = lindblad_step(&rho, ham, s as f64 * h, &diss, h)?;
        }
        integrity.record(&rho);
        states.push(rho.clone());
    }

    let c = emission_constant(rates.gamma01);
    let incident: Vec<Complex64> = schedule
        .probe_rabi
        .iter()
        .map(|&p| Complex64::new(incident_amplitude(p, rates.gamma01), 0.0))
        .collect();
    let reflected: Vec<Complex64> = states.iter().map(|s| c * s.lowering_expectation()).collect();
    let transmitted = incident.iter().zip(&reflected).map(|(a, b)| a + b).collect();
    let field = FieldTrace {
        incident: Signal::new(schedule.t0, dt, incident)?,
        reflected: Signal::new(schedule.t0, dt, reflected)?,
        transmitted: Signal::new(schedule.t0, dt, transmitted)?,
    };
    Ok(Evolution { states, field, integrity })
}

/// Amplitude reflection coefficient of the stationary state for constant
/// drives, from a direct solve of the master equation.
pub fn steady_reflection(
    dim: usize,
    probe_rabi: f64,
    probe_detuning: f64,
    control_rabi: f64,
    control_detuning: f64,
    rates: &Rates,
) -> Result<Complex64> {
    rates.validate()?;
    if !(probe_rabi.is_finite() && probe_rabi > 0.0) {
        return Err(Error::validation("probe_rabi", format!("must be > 0, got {probe_rabi}")));
    }
    let h = hamiltonian(dim, probe_rabi, probe_detuning, control_rabi, control_detuning);
    let rho = steady_state(&h, &collapse_operators(dim, rates))?;
    Ok(emission_constant(rates.gamma01) * rho.lowering_expectation() / incident_amplitude(probe_rabi, rates.gamma01))
}

#[derive(Debug, Clone)]
pub struct TimeDomainSteadyState {
    pub state: DensityMatrix,
    pub r: Complex64,
    pub duration: f64,
    pub integrity: Integrity,
}

/// Integrates a constant probe from the ground state for 10/Γ01 and reads
/// the reflection coefficient off the final state.
pub fn evolve_to_steady_state(probe_rabi: f64, probe_detuning: f64, rates: &Rates, dim: usize) -> Result<TimeDomainSteadyState> {
    rates.validate()?;
    if !(probe_rabi.is_finite() && probe_rabi > 0.0) {
        return Err(Error::validation("probe_rabi", format!("must be > 0, got {probe_rabi}")));
    }
    let duration = 10.0 / rates.gamma01;
    let samples = 101;
    let schedule = DriveSchedule::constant(samples, duration / (samples - 1) as f64, probe_rabi, probe_detuning);
    let ev = evolve(&schedule, rates, dim)?;
    let last = samples - 1;
    let r = ev.field.reflected.values[last] / ev.field.incident.values[last];
    Ok(TimeDomainSteadyState { state: ev.states[last].clone(), r, duration, integrity: ev.integrity })
}
