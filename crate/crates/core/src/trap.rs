//! Catch and release of a weak SAW pulse between two tunable transmons.
//!
//! Each transmon is a linear dipole (the low-excitation limit of a two-level
//! scatterer) radiating equally in both directions:
//!
//! ```text
//! dβ/dt = −(γ01 + iΔ(t))·β − i·√(Γ01/2)·u(t),   out = in − i·√(Γ01/2)·β
//! ```
//!
//! with `u` the sum of fields arriving from both sides. The two are joined by
//! a lossless delay line of length `separation`. The pulse enters from the
//! left and meets transmon 1 first.

use num_complex::Complex64;

use crate::channel::Signal;
use crate::device::DeviceConfig;
use crate::idt;
use crate::scattering::Rates;
use crate::{Error, Result, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReleaseDirection {
    Left,
    Right,
}

/// Piecewise-linear f01 − f_carrier in Hz, held constant outside the knots.
/// Two knots at the same instant describe a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSchedule {
    knots: Vec<(f64, f64)>,
}

impl DetuningSchedule {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Schedule("detuning schedule needs at least one knot".into()));
        }
        if knots.iter().any(|(t, d)| !(t.is_finite() && d.is_finite())) {
            return Err(Error::Schedule("detuning knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Schedule("detuning knots must be ordered in time".into()));
        }
        Ok(DetuningSchedule { knots })
    }

    pub fn constant(detuning: f64) -> Self {
        DetuningSchedule { knots: vec![(0.0, detuning)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        // last knot at or before t
        let i = k.partition_point(|&(tk, _)| tk <= t) - 1;
        match k.get(i + 1) {
            Some(&(t1, d1)) => {
                let (t0, d0) = k[i];
                d0 + (d1 - d0) * (t - t0) / (t1 - t0)
            }
            None => k[i].1,
        }
    }

    /// Instants where the detuning jumps.
    pub fn jumps(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .filter(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1)
            .map(|w| w[0].0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapSchedule {
    pub transmon1_detuning: DetuningSchedule,
    pub transmon2_detuning: DetuningSchedule,
    /// Distance between the transmons, m.
    pub separation: f64,
    /// m/s
    pub sound_velocity: f64,
    /// SAW carrier, Hz; sets the propagation phase between the transmons.
    pub carrier_frequency: f64,
    /// Right-going amplitude arriving at transmon 1, √(phonons/s).
    pub input_pulse: Signal,
    pub release_direction: ReleaseDirection,
}

/// Parameters of the standard catch-and-release sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatchRelease {
    /// Defaults to the whole number of wavelengths closest to 1 mm.
    pub separation: Option<f64>,
    /// Length of the sin² input pulse.
    pub pulse_length: f64,
    /// Peak Rabi frequency of the pulse; defaults to Γ01/20.
    pub peak_rabi: Option<f64>,
    /// Delay after the pulse has passed transmon 1 before it is tuned in.
    pub catch_delay: f64,
    pub ramp: f64,
    pub release_time: f64,
    pub duration: f64,
    pub far_detuning: f64,
    pub dt: f64,
    pub direction: ReleaseDirection,
}

impl Default for CatchRelease {
    fn default() -> Self {
        CatchRelease {
            separation: None,
            pulse_length: 500e-9,
            peak_rabi: None,
            catch_delay: 10e-9,
            ramp: 20e-9,
            release_time: 1.5e-6,
            duration: 4e-6,
            far_detuning: 1e9,
            dt: 0.1e-9,
            direction: ReleaseDirection::Left,
        }
    }
}

const DEFAULT_SEPARATION: f64 = 1e-3;

impl TrapSchedule {
    /// Transmon 2 waits on resonance while transmon 1 is parked far away;
    /// once the pulse has passed, transmon 1 is tuned in to close the trap.
    /// At `release_time` the transmon on the release side is detuned again.
    pub fn catch_and_release(cfg: &DeviceConfig, p: &CatchRelease) -> Result<Self> {
        let rates = Rates::from_config(cfg);
        let fq = cfg.carrier_frequency();
        let lambda = idt::wavelength(cfg.material.sound_velocity, fq);
        let separation = p.separation.unwrap_or((DEFAULT_SEPARATION / lambda).round() * lambda);
        let peak = p.peak_rabi.unwrap_or(rates.gamma01 / 20.0);
        let amp = rabi_to_amplitude(peak, rates.gamma01);
        let n = (p.duration / p.dt).ceil() as usize;
        let input = Signal::from_real(
            0.0,
            p.dt,
            (0..n).map(|i| {
                let t = i as f64 * p.dt;
                if t < p.pulse_length {
                    amp * (std::f64::consts::PI * t / p.pulse_length).sin().powi(2)
                } else {
                    0.0
                }
            }),
        );
        let catch = p.pulse_length + p.catch_delay;
        if p.release_time < catch + p.ramp {
            return Err(Error::Schedule(format!(
                "release at {:.3e} s precedes the end of the catch ramp at {:.3e} s",
                p.release_time,
                catch + p.ramp
            )));
        }
        let far = p.far_detuning;
        let release_ramp = vec![(p.release_time, 0.0), (p.release_time + p.ramp, far)];
        let mut t1 = vec![(catch, far), (catch + p.ramp, 0.0)];
        let mut t2 = vec![(0.0, 0.0)];
        match p.direction {
            ReleaseDirection::Left => t1.extend(release_ramp),
            ReleaseDirection::Right => t2.extend(release_ramp),
        }
        Ok(TrapSchedule {
            transmon1_detuning: DetuningSchedule::new(t1)?,
            transmon2_detuning: DetuningSchedule::new(t2)?,
            separation,
            sound_velocity: cfg.material.sound_velocity,
            carrier_frequency: fq,
            input_pulse: input,
            release_direction: p.direction,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::validation("separation", format!("must be > 0, got {}", self.separation)));
        }
        if !(self.sound_velocity.is_finite() && self.sound_velocity > 0.0) {
            return Err(Error::validation("sound_velocity", "must be > 0"));
        }
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(Error::validation("carrier_frequency", "must be > 0"));
        }
        if self.input_pulse.is_empty() {
            return Err(Error::validation("input_pulse", "must not be empty"));
        }
        if self.separation / self.sound_velocity < self.input_pulse.dt {
            return Err(Error::validation("separation", "transit between transmons is shorter than one sample"));
        }
        Ok(())
    }

    /// Jump instants of either schedule, which real flux lines cannot follow.
    pub fn flagged_jumps(&self) -> Vec<f64> {
        let mut j = self.transmon1_detuning.jumps();
        j.extend(self.transmon2_detuning.jumps());
        j
    }
}

fn rabi_to_amplitude(rabi: f64, gamma01: f64) -> f64 {
    TWO_PI * rabi / (2.0 * TWO_PI * gamma01).sqrt()
}

fn amplitude_to_rabi(amp: f64, gamma01: f64) -> f64 {
    amp * (2.0 * TWO_PI * gamma01).sqrt() / TWO_PI
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapResult {
    /// Left-going field leaving transmon 1.
    pub left_out: Signal,
    /// Right-going field leaving transmon 2.
    pub right_out: Signal,
    /// Energy between and inside the transmons, relative to the input pulse.
    pub cavity_energy: Vec<f64>,
    pub input_energy: f64,
    /// Jumps in the detuning schedules.
    pub jumps: Vec<f64>,
}

impl TrapResult {
    /// Output energies (left, right) after `t`, relative to the input pulse.
    pub fn output_after(&self, t: f64) -> (f64, f64) {
        let part = |s: &Signal| {
            let start = (((t - s.t0) / s.dt).ceil().max(0.0) as usize).min(s.len());
            s.values[start..].iter().map(|v| v.norm_sqr()).sum::<f64>() * s.dt / self.input_energy
        };
        (part(&self.left_out), part(&self.right_out))
    }

    pub fn output_energy(&self) -> (f64, f64) {
        self.output_after(f64::NEG_INFINITY)
    }
}

/// Dipole update over one step with first-order-hold drive, exact for the
/// linear equation dβ/dt = −λβ + u(t).
fn dipole_step(beta: Complex64, lambda: Complex64, u0: Complex64, u1: Complex64, h: f64) -> Complex64 {
    let lh = lambda * h;
    let decay = (-lh).exp();
    // φ1 = (1 − e^{−λh})/λ, with a series near λh = 0
    let phi1 = if lh.norm() < 1e-6 { h * (1.0 - 0.5 * lh) } else { (1.0 - decay) / lambda };
    let ramp = if lh.norm() < 1e-6 { 0.5 * h * (1.0 - lh / 3.0) } else { (h - phi1) / lh };
    beta * decay + u0 * phi1 + (u1 - u0) * ramp
}

pub fn simulate_trap(schedule: &TrapSchedule, rates: &Rates) -> Result<TrapResult> {
    schedule.validate()?;
    rates.validate()?;
    let input = &schedule.input_pulse;
    let peak = input.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let peak_rabi = amplitude_to_rabi(peak, rates.gamma01);
    let limit = rates.gamma01 / 10.0;
    if peak_rabi > limit {
        return Err(Error::WeakField { peak_rabi_hz: peak_rabi, limit_hz: limit });
    }

    let dt = input.dt;
    let n = input.len();
    let transit = schedule.separation / schedule.sound_velocity;
    let lag = (transit / dt).round() as usize;
    let carrier = Complex64::from_polar(1.0, -TWO_PI * schedule.carrier_frequency * transit);
    let k = Complex64::new(0.0, -(0.5 * TWO_PI * rates.gamma01).sqrt());
    let gamma = TWO_PI * rates.decoherence();
    let zero = Complex64::new(0.0, 0.0);

    // right-going leaving 1, left-going leaving 1, right-going leaving 2,
    // left-going leaving 2
    let mut r1 = vec![zero; n];
    let mut l1 = vec![zero; n];
    let mut r2 = vec![zero; n];
    let mut l2 = vec![zero; n];
    let mut cavity = vec![0.0; n];
    let (mut b1, mut b2) = (zero, zero);
    let mut in_flight = 0.0;

    let inputs = |i: usize, r1: &[Complex64], l2: &[Complex64]| -> (Complex64, Complex64) {
        let from_left = input.values[i];
        let (from_2, from_1) = if i >= lag { (l2[i - lag] * carrier, r1[i - lag] * carrier) } else { (zero, zero) };
        (from_left + from_2, from_1)
    };

    for i in 0..n {
        let (u1_now, u2_now) = inputs(i, &r1, &l2);
        if i > 0 {
            let (u1_prev, u2_prev) = inputs(i - 1, &r1, &l2);
            let mid = input.time(i) - 0.5 * dt;
            let lam1 = Complex64::new(gamma, TWO_PI * schedule.transmon1_detuning.at(mid));
            let lam2 = Complex64::new(gamma, TWO_PI * schedule.transmon2_detuning.at(mid));
            b1 = dipole_step(b1, lam1, k * u1_prev, k * u1_now, dt);
            b2 = dipole_step(b2, lam2, k * u2_prev, k * u2_now, dt);
        }
        let from_2 = if i >= lag { l2[i - lag] * carrier } else { zero };
        r1[i] = input.values[i] + k * b1;
        l1[i] = from_2 + k * b1;
        r2[i] = u2_now + k * b2;
        l2[i] = k * b2;

        in_flight += (r1[i].norm_sqr() + l2[i].norm_sqr()) * dt;
        if i >= lag {
            in_flight -= (r1[i - lag].norm_sqr() + l2[i - lag].norm_sqr()) * dt;
        }
        cavity[i] = in_flight + b1.norm_sqr() + b2.norm_sqr();
    }

    let input_energy = input.energy();
    if input_energy <= 0.0 {
        return Err(Error::validation("input_pulse", "carries no energy"));
    }
    for c in &mut cavity {
        *c /= input_energy;
    }
    Ok(TrapResult {
        left_out: Signal::new(input.t0, dt, l1)?,
        right_out: Signal::new(input.t0, dt, r2)?,
        cavity_energy: cavity,
        input_energy,
        jumps: schedule.flagged_jumps(),
    })
}
