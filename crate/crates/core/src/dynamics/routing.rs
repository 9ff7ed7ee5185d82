use num_complex::Complex64;

use super::model::{evolve, steady_reflection, DriveSchedule, FieldTrace, Integrity};
use crate::channel::{self, Signal};
use crate::device::DeviceConfig;
use crate::scattering::{Rates, OFF_RESONANCE_LINEWIDTHS};
use crate::{Error, Execution, Result};

/// Probe transmission |t(δp)|² of the three-level model with a constant
/// control on the 1–2 transition.
pub fn autler_townes_spectrum(
    rates: &Rates,
    probe_rabi: f64,
    control_rabi: f64,
    control_detuning: f64,
    probe_detunings: &[f64],
    exec: Execution,
) -> Result<Vec<f64>> {
    exec.try_map(probe_detunings, |&d| {
        let r = steady_reflection(3, probe_rabi, d, control_rabi, control_detuning, rates)?;
        Ok((Complex64::new(1.0, 0.0) + r).norm_sqr())
    })
}

/// Interior local minima of `y(x)`, refined by a parabola through the
/// neighbouring samples. Returns (position, value) pairs in ascending `x`.
pub fn find_dips(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut dips = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let curv = a - 2.0 * b + c;
            let off = if curv > 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
            let h = x[i + 1] - x[i];
            dips.push((x[i] + off * h, b - 0.25 * (a - c) * off));
        }
    }
    dips
}

/// Separation between the two deepest transmission dips for a weak probe
/// and a resonant control of Rabi frequency Ωc.
pub fn autler_townes_splitting(rates: &Rates, control_rabi: f64, exec: Execution) -> Result<f64> {
    if !(control_rabi.is_finite() && control_rabi > 0.0) {
        return Err(Error::validation("control_rabi", format!("must be > 0, got {control_rabi}")));
    }
    let span = 1.5 * control_rabi + 5.0 * rates.decoherence();
    let n = 4001;
    let x: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    let probe = 1e-3 * rates.half_saturation_rabi();
    let y = autler_townes_spectrum(rates, probe, control_rabi, 0.0, &x, exec)?;
    let mut dips = find_dips(&x, &y);
    if dips.len() < 2 {
        return Err(Error::Numerical(format!("expected two transmission dips, found {}", dips.len())));
    }
    dips.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok((dips[0].0 - dips[1].0).abs())
}

struct Propagated {
    trace: FieldTrace,
    integrity: Integrity,
}

/// Launches `launch` (a Rabi envelope in Hz, referenced at IDT A) through
/// IDT A to the transmon, evolves it, and carries reflected and transmitted
/// waves back to their transducers. The incident trace stays at IDT A.
fn propagate(
    cfg: &DeviceConfig,
    launch: &Signal,
    control: Vec<f64>,
    probe_detuning: f64,
    echo: Option<f64>,
) -> Result<Propagated> {
    let rates = Rates::from_config(cfg);
    let v0 = cfg.material.sound_velocity;
    let tau_a = channel::transit_delay(cfg.geometry.dist_idt_a_qubit, v0);
    let tau_b = channel::transit_delay(cfg.geometry.dist_idt_b_qubit, v0);

    let launched = channel::apply_idt_filter(launch, &cfg.idt_a)?;
    let (at_qubit, _) = channel::delay(&launched, tau_a)?;
    let probe: Vec<f64> = at_qubit.values.iter().map(|v| v.re.max(0.0)).collect();
    let dim = if control.iter().any(|&c| c != 0.0) { 3 } else { 2 };
    let schedule = DriveSchedule {
        t0: launch.t0,
        dt: launch.dt,
        probe_rabi: probe.clone(),
        probe_detuning,
        control_rabi: control,
        control_detuning: 0.0,
    };
    let ev = evolve(&schedule, &rates, dim)?;
    let field = ev.field;

    let mut transmitted = field.transmitted.clone();
    if let Some(gain) = echo {
        // Re-reflections off IDT B are scattered again by the transmon, so
        // only the change relative to the idle reflective state circulates,
        // weighted by how reflective the transmon currently is.
        let r_idle = steady_reflection(2, probe.iter().cloned().fold(0.0, f64::max).max(1e-9), probe_detuning, 0.0, 0.0, &rates)?;
        let peak = field.incident.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let idle: Vec<Complex64> = field.incident.values.iter().map(|a| a * (1.0 + r_idle)).collect();
        let gate: Vec<f64> = field
            .incident
            .values
            .iter()
            .zip(&field.reflected.values)
            .map(|(a, r)| if a.norm() > 1e-6 * peak { (r / a).norm() / r_idle.norm() } else { 1.0 })
            .collect();
        let excess = field.transmitted.with_values(field.transmitted.values.iter().zip(&idle).map(|(t, s)| t - s).collect());
        let tau_rt = 2.0 * tau_b;
        let echoed = channel::multi_transit_gated(&excess, &gate, gain, tau_rt)?;
        transmitted = echoed.with_values(echoed.values.iter().zip(&idle).map(|(e, s)| e + s).collect());
    }

    let (t_b, _) = channel::delay(&transmitted, tau_b)?;
    let (r_a, _) = channel::delay(&field.reflected, tau_a)?;
    let incident_amp = field.incident.with_values(
        launched
            .values
            .iter()
            .map(|v| Complex64::new(super::model::incident_amplitude(v.re.max(0.0), rates.gamma01), 0.0))
            .collect(),
    );
    Ok(Propagated {
        trace: FieldTrace {
            incident: incident_amp,
            reflected: channel::apply_idt_filter(&r_a, &cfg.idt_a)?,
            transmitted: channel::apply_idt_filter(&t_b, &cfg.idt_b)?,
        },
        integrity: ev.integrity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteOptions {
    /// Weak CW probe; defaults to a tenth of the half-saturation Rabi frequency.
    pub probe_rabi: Option<f64>,
    pub loop_gain: f64,
    pub dt: f64,
    /// Time between the probe reaching the transmon and the control pulse.
    pub lead: f64,
    /// Time kept after the control pulse ends.
    pub tail: f64,
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions {
            probe_rabi: None,
            loop_gain: channel::DEFAULT_LOOP_GAIN,
            dt: 0.25e-9,
            lead: 400e-9,
            tail: 800e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RouteResult {
    /// Incident at IDT A, reflected back at IDT A, transmitted at IDT B.
    pub trace: FieldTrace,
    /// 10–90 % rise of |transmitted|²; `None` for pulses too short to settle.
    pub rise_time: Option<f64>,
    pub fall_time: Option<f64>,
    pub peak_transmitted: f64,
    /// Arrival of the control edges at IDT B.
    pub switch_on_at_detector: f64,
    pub switch_off_at_detector: f64,
    pub integrity: Integrity,
}

/// Shortest control pulse for which rise and fall times are reported.
const MIN_TIMED_PULSE: f64 = 200e-9;

/// A CW probe routed by a rectangular control pulse on the 1–2 transition.
pub fn route_pulse(cfg: &DeviceConfig, control_pulse_length: f64, control_rabi: f64, opts: &RouteOptions) -> Result<RouteResult> {
    if !(control_pulse_length.is_finite() && control_pulse_length > 0.0) {
        return Err(Error::validation("control_pulse_length", format!("must be > 0, got {control_pulse_length}")));
    }
    if !(control_rabi.is_finite() && control_rabi >= 0.0) {
        return Err(Error::validation("control_rabi", format!("must be >= 0, got {control_rabi}")));
    }
    let rates = Rates::from_config(cfg);
    let probe = opts.probe_rabi.unwrap_or(0.1 * rates.half_saturation_rabi());
    let v0 = cfg.material.sound_velocity;
    let tau_a = channel::transit_delay(cfg.geometry.dist_idt_a_qubit, v0);
    let tau_b = channel::transit_delay(cfg.geometry.dist_idt_b_qubit, v0);
    let on = tau_a + opts.lead;
    let off = on + control_pulse_length;
    let total = off + tau_b + opts.tail;
    let n = (total / opts.dt).ceil() as usize + 1;
    let dt = opts.dt;

    let launch = Signal::from_real(0.0, dt, std::iter::repeat_n(probe, n));
    let control = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            if t >= on && t < off {
                control_rabi
            } else {
                0.0
            }
        })
        .collect();
    let prop = propagate(cfg, &launch, control, 0.0, Some(opts.loop_gain))?;

    let power = prop.trace.transmitted.power();
    let idx = |t: f64| ((t / dt).round() as usize).min(n - 1);
    let on_det = on + tau_b;
    let off_det = off + tau_b;
    let peak_transmitted = prop.trace.transmitted.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (rise_time, fall_time) = if control_pulse_length >= MIN_TIMED_PULSE {
        let low = power[idx(on_det - 80e-9)];
        let high = power[idx(off_det - 40e-9)];
        let settled = power[idx(off_det + 0.75 * opts.tail)];
        (
            channel::transition_time(&power, dt, idx(on_det - 80e-9), low, high),
            channel::transition_time(&power, dt, idx(off_det - 40e-9), high, settled),
        )
    } else {
        (None, None)
    };
    Ok(RouteResult {
        trace: prop.trace,
        rise_time,
        fall_time,
        peak_transmitted,
        switch_on_at_detector: on_det,
        switch_off_at_detector: off_det,
        integrity: prop.integrity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SawPulseOptions {
    pub pulse_length: f64,
    /// Peak probe Rabi frequency; defaults to a tenth of half saturation.
    pub peak_rabi: Option<f64>,
    /// f_probe − f01 in Hz.
    pub detuning: f64,
    pub launch_time: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for SawPulseOptions {
    fn default() -> Self {
        SawPulseOptions {
            pulse_length: 100e-9,
            peak_rabi: None,
            detuning: 0.0,
            launch_time: 100e-9,
            duration: 800e-9,
            dt: 0.25e-9,
        }
    }
}

impl SawPulseOptions {
    /// The same pulse with the transmon detuned far out of the band.
    pub fn detuned(self, cfg: &DeviceConfig) -> Self {
        SawPulseOptions { detuning: OFF_RESONANCE_LINEWIDTHS * cfg.transmon.gamma01(), ..self }
    }
}

#[derive(Debug, Clone)]
pub struct SawPulseResult {
    pub trace: FieldTrace,
    /// Energy-centroid delay from launch at IDT A to arrival at IDT B.
    pub transit_time: f64,
    pub incident_energy: f64,
    pub reflected_energy: f64,
    pub transmitted_energy: f64,
    pub integrity: Integrity,
}

/// A rectangular SAW pulse launched from IDT A, scattered by the transmon
/// and detected at both transducers.
pub fn saw_pulse(cfg: &DeviceConfig, opts: &SawPulseOptions) -> Result<SawPulseResult> {
    if !(opts.pulse_length.is_finite() && opts.pulse_length > 0.0) {
        return Err(Error::validation("pulse_length", format!("must be > 0, got {}", opts.pulse_length)));
    }
    if !(opts.duration > opts.launch_time + opts.pulse_length) {
        return Err(Error::validation("duration", "must extend past the end of the pulse"));
    }
    let rates = Rates::from_config(cfg);
    let peak = opts.peak_rabi.unwrap_or(0.1 * rates.half_saturation_rabi());
    let dt = opts.dt;
    let n = (opts.duration / dt).ceil() as usize + 1;
    let start = opts.launch_time;
    let stop = start + opts.pulse_length;
    let launch = Signal::from_real(
        0.0,
        dt,
        (0..n).map(|i| {
            let t = i as f64 * dt;
            if t >= start && t < stop {
                peak
            } else {
                0.0
            }
        }),
    );
    let prop = propagate(cfg, &launch, vec![0.0; n], opts.detuning, None)?;
    let trace = prop.trace;
    Ok(SawPulseResult {
        transit_time: trace.transmitted.centroid() - trace.incident.centroid(),
        incident_energy: trace.incident.energy(),
        reflected_energy: trace.reflected.energy(),
        transmitted_energy: trace.transmitted.energy(),
        integrity: prop.integrity,
        trace,
    })
}
