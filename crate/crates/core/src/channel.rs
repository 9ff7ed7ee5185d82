//! One-dimensional acoustic channel.
//!
//! Signals are complex envelopes about the SAW carrier on a uniform time
//! grid, so no GHz sampling is needed. Spectra are complex responses on a
//! uniform frequency grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::device::IdtParams;
use crate::{idt, Error, Result};

/// Default Tukey taper fraction for time gating.
pub const DEFAULT_GATE_TAPER: f64 = 0.1;
/// Default round-trip amplitude gain between IDT B and the transmon.
pub const DEFAULT_LOOP_GAIN: f64 = 0.55;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl Signal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::validation("values", "signal contains non-finite samples"));
        }
        Ok(Signal { t0, dt, values })
    }

    pub fn zeros(t0: f64, dt: f64, len: usize) -> Self {
        Signal { t0, dt, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_real(t0: f64, dt: f64, values: impl IntoIterator<Item = f64>) -> Self {
        Signal {
            t0,
            dt,
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Σ|v|²·dt
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Energy-weighted mean time.
    pub fn centroid(&self) -> f64 {
        let e: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let m: f64 = self.values.iter().enumerate().map(|(i, v)| self.time(i) * v.norm_sqr()).sum();
        m / e
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Signal {
        Signal { t0: self.t0, dt: self.dt, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub f0: f64,
    pub df: f64,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn frequency(&self, i: usize) -> f64 {
        self.f0 + i as f64 * self.df
    }

    /// Length of the unambiguous time window, 1/Δf.
    pub fn time_range(&self) -> f64 {
        1.0 / self.df
    }
}

/// Raised when a delay pushes the whole trace past its end.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayWarning {
    pub delay: f64,
    pub duration: f64,
}

impl std::fmt::Display for DelayWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "delay {:.3e} s exceeds trace duration {:.3e} s; output is silent", self.delay, self.duration)
    }
}

/// Propagation time d/v0.
pub fn transit_delay(distance: f64, v0: f64) -> f64 {
    distance / v0
}

fn samples(tau: f64, dt: f64) -> usize {
    (tau / dt).round() as usize
}

/// Shifts a signal later by `tau`, rounded to whole samples, zero-filling the start.
pub fn delay(sig: &Signal, tau: f64) -> Result<(Signal, Option<DelayWarning>)> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::validation("delay", format!("must be >= 0, got {tau}")));
    }
    let n = samples(tau, sig.dt);
    let len = sig.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if n < len {
        out[n..].copy_from_slice(&sig.values[..len - n]);
    }
    let warning = (n >= len && len > 0).then_some(DelayWarning {
        delay: tau,
        duration: len as f64 * sig.dt,
    });
    Ok((sig.with_values(out), warning))
}

fn fft_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// Filters a baseband signal through a transducer's array-factor response.
///
/// The response is real and even about the centre frequency, so the filter
/// is zero-phase; propagation delays are applied separately with [`delay`].
pub fn apply_idt_filter(sig: &Signal, params: &IdtParams) -> Result<Signal> {
    let bw = idt::bandwidth(params.center_frequency, params.periods);
    let max_dt = 1.0 / (10.0 * bw);
    if sig.dt > max_dt {
        return Err(Error::SamplingTooCoarse { dt: sig.dt, max_dt });
    }
    if sig.is_empty() {
        return Ok(sig.clone());
    }
    let n = sig.len();
    let support = (params.periods as f64 / params.center_frequency / sig.dt).ceil() as usize + 2;
    let m = fft_len(2 * n + 2 * support);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(&sig.values);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let span = m as f64 * sig.dt;
    for (j, v) in buf.iter_mut().enumerate() {
        let k = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        *v *= idt::response_at_offset(params, k / span);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    Ok(sig.with_values(buf[..n].iter().map(|v| v * scale).collect()))
}

/// Echo train Σ_{n=0}^{n_max} gainⁿ·sig(t − n·τ_rt).
pub fn multi_transit(sig: &Signal, loop_gain: f64, tau_rt: f64, n_max: usize) -> Result<Signal> {
    if !(0.0..1.0).contains(&loop_gain) {
        return Err(Error::validation("loop_gain", format!("must lie in [0, 1), got {loop_gain}")));
    }
    if !(tau_rt.is_finite() && tau_rt >= 0.0) {
        return Err(Error::validation("tau_rt", format!("must be >= 0, got {tau_rt}")));
    }
    let shift = samples(tau_rt, sig.dt);
    let len = sig.len();
    let mut out = sig.values.clone();
    let mut g = 1.0;
    for echo in 1..=n_max {
        g *= loop_gain;
        let off = echo * shift;
        if off >= len || g == 0.0 {
            break;
        }
        for i in off..len {
            out[i] += sig.values[i - off] * g;
        }
    }
    Ok(sig.with_values(out))
}

/// Echo recursion whose round-trip gain follows the reflectivity of the
/// transmon: `out(t) = sig(t) + loop_gain·gate(t − τ_rt/2)·out(t − τ_rt)`.
///
/// `gate` is sampled on the signal grid and clamped to [0, 1]; it is read at
/// the instant the returning wave meets the transmon. With `gate ≡ 1` this is
/// [`multi_transit`] with an unbounded echo count.
pub fn multi_transit_gated(sig: &Signal, gate: &[f64], loop_gain: f64, tau_rt: f64) -> Result<Signal> {
    if !(0.0..1.0).contains(&loop_gain) {
        return Err(Error::validation("loop_gain", format!("must lie in [0, 1), got {loop_gain}")));
    }
    if gate.len() != sig.len() {
        return Err(Error::validation("gate", "must be sampled on the signal grid"));
    }
    let shift = samples(tau_rt, sig.dt);
    if shift == 0 {
        return Err(Error::validation("tau_rt", "round trip must span at least one sample"));
    }
    let half = samples(0.5 * tau_rt, sig.dt);
    let mut out = sig.values.clone();
    for i in shift..out.len() {
        let g = gate[i.saturating_sub(half)].clamp(0.0, 1.0);
        out[i] = sig.values[i] + out[i - shift] * (loop_gain * g);
    }
    Ok(sig.with_values(out))
}

/// Tukey window on [start, stop] with total taper fraction `taper`.
pub fn tukey(t: f64, start: f64, stop: f64, taper: f64) -> f64 {
    if t < start || t > stop {
        return 0.0;
    }
    let edge = 0.5 * taper * (stop - start);
    if edge <= 0.0 {
        return 1.0;
    }
    let pi = std::f64::consts::PI;
    if t < start + edge {
        0.5 * (1.0 - (pi * (t - start) / edge).cos())
    } else if t > stop - edge {
        0.5 * (1.0 - (pi * (stop - t) / edge).cos())
    } else {
        1.0
    }
}

/// Time gating of frequency-domain data: transform to the time domain,
/// keep [gate_start, gate_stop] under a Tukey window, transform back.
pub fn time_gate(spec: &Spectrum, gate_start: f64, gate_stop: f64, taper: f64) -> Result<Spectrum> {
    let range = spec.time_range();
    if !(gate_start >= 0.0 && gate_stop <= range * (1.0 + 1e-12) && gate_start < gate_stop) {
        return Err(Error::GateOutOfRange { start: gate_start, stop: gate_stop, range });
    }
    if !(0.0..=1.0).contains(&taper) {
        return Err(Error::validation("taper", format!("must lie in [0, 1], got {taper}")));
    }
    let n = spec.values.len();
    let mut buf = spec.values.clone();
    let mut planner = FftPlanner::<f64>::new();
    // S(f_m) = Σ_n h_n·e^{−2πi f_m t_n}; the inverse transform recovers h_n up
    // to a per-sample phase that the window does not disturb.
    planner.plan_fft_inverse(n).process(&mut buf);
    let dt = 1.0 / (n as f64 * spec.df);
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= tukey(i as f64 * dt, gate_start, gate_stop, taper) / n as f64;
    }
    planner.plan_fft_forward(n).process(&mut buf);
    Ok(Spectrum { f0: spec.f0, df: spec.df, values: buf })
}

/// Time between successive crossings of `from + 0.1·(to − from)` and
/// `from + 0.9·(to − from)` in `values`, searching from `start` onward.
/// Crossing instants are linearly interpolated between samples.
pub fn transition_time(values: &[f64], dt: f64, start: usize, from: f64, to: f64) -> Option<f64> {
    let step = to - from;
    let crossing = |level: f64, begin: usize| -> Option<f64> {
        let above = |v: f64| (v - level) * step.signum() >= 0.0;
        (begin.max(1)..values.len()).find_map(|i| {
            if !above(values[i - 1]) && above(values[i]) {
                let frac = (level - values[i - 1]) / (values[i] - values[i - 1]);
                Some((i - 1) as f64 + frac)
            } else {
                None
            }
        })
    };
    let t10 = crossing(from + 0.1 * step, start)?;
    let t90 = crossing(from + 0.9 * step, t10.floor() as usize)?;
    Some((t90 - t10) * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idt(periods: u32) -> IdtParams {
        IdtParams {
            center_frequency: 2.2641e9,
            periods,
            finger_overlap: 40e-6,
            insertion_loss: 1.0,
        }
    }

    #[test]
    fn transit_delays() {
        assert!((transit_delay(300e-6, 2864.0) - 104.75e-9).abs() < 0.01e-9);
        assert!((transit_delay(100e-6, 2864.0) - 34.92e-9).abs() < 0.01e-9);
        assert_eq!(transit_delay(0.0, 2864.0), 0.0);
    }

    #[test]
    fn delay_shifts_impulse() {
        let mut v = vec![Complex64::new(0.0, 0.0); 400];
        v[0] = Complex64::new(1.0, 0.0);
        let sig = Signal::new(0.0, 1e-9, v).unwrap();
        let (same, w) = delay(&sig, 0.0).unwrap();
        assert_eq!(same, sig);
        assert!(w.is_none());
        let tau = transit_delay(300e-6, 2864.0) + transit_delay(100e-6, 2864.0);
        let (d, _) = delay(&sig, tau).unwrap();
        assert_eq!(d.values[140], Complex64::new(1.0, 0.0));
        assert!((d.energy() - sig.energy()).abs() < 1e-12 * sig.energy());
    }

    #[test]
    fn delay_past_end_warns() {
        let sig = Signal::from_real(0.0, 1e-9, vec![1.0; 10]);
        let (d, w) = delay(&sig, 20e-9).unwrap();
        assert!(w.is_some());
        assert!(d.values.iter().all(|v| v.norm() == 0.0));
        assert!(delay(&sig, -1.0).is_err());
    }

    #[test]
    fn coarse_sampling_rejected() {
        let sig = Signal::from_real(0.0, 10e-9, vec![1.0; 10]);
        assert!(matches!(apply_idt_filter(&sig, &idt(150)), Err(Error::SamplingTooCoarse { .. })));
    }

    #[test]
    fn wideband_filter_is_transparent() {
        let dt = 0.02e-9;
        let sig = Signal::from_real(0.0, dt, (0..500).map(|i| ((i as f64) * 0.05).sin()));
        let out = apply_idt_filter(&sig, &idt(1)).unwrap();
        for (a, b) in sig.values.iter().zip(&out.values) {
            assert!((a - b).norm() < 1e-2);
        }
    }

    #[test]
    fn carrier_tone_scaled_by_insertion_loss() {
        let mut p = idt(150);
        p.insertion_loss = 0.6;
        let sig = Signal::from_real(0.0, 0.25e-9, vec![1.0; 4000]);
        let out = apply_idt_filter(&sig, &p).unwrap();
        // away from the edges the constant envelope is a pure carrier tone
        assert!((out.values[2000].norm() - 0.6).abs() < 1e-3);
        assert!(out.values.iter().all(|v| v.norm() <= 0.6 * (1.0 + 2e-2)));
    }

    // Direct sum with a centred boxcar of length N_p/f0: the impulse response
    // of N_p equal sources one period apart.
    fn boxcar_oracle(sig: &[f64], dt: f64, width: f64) -> Vec<f64> {
        let half = 0.5 * width;
        (0..sig.len())
            .map(|i| {
                let t = i as f64 * dt;
                let mut acc = 0.0;
                for (j, &s) in sig.iter().enumerate() {
                    let tau = t - j as f64 * dt;
                    if tau.abs() <= half {
                        acc += s * dt;
                    }
                }
                acc / width
            })
            .collect()
    }

    #[test]
    fn step_response_matches_boxcar() {
        let dt = 0.25e-9;
        let n = 1200;
        let step: Vec<f64> = (0..n).map(|i| if i >= 400 { 1.0 } else { 0.0 }).collect();
        let p = idt(150);
        let out = apply_idt_filter(&Signal::from_real(0.0, dt, step.clone()), &p).unwrap();
        let oracle = boxcar_oracle(&step, dt, 150.0 / 2.2641e9);
        for i in 100..1100 {
            assert!((out.values[i].re - oracle[i]).abs() < 2e-2, "i={i}");
        }
        let rise = transition_time(&out.power(), dt, 0, 0.0, 1.0).unwrap();
        // amplitude ramp over 66.3 ns, 10–90 % in power spans √0.9 − √0.1 of it
        let expected = (0.9f64.sqrt() - 0.1f64.sqrt()) * 150.0 / 2.2641e9;
        assert!((rise - expected).abs() < 2e-9, "{rise} vs {expected}");
        assert!(rise > 20e-9 && rise < 80e-9);
    }

    #[test]
    fn echo_train() {
        let mut v = vec![0.0; 3000];
        v[0] = 1.0;
        let sig = Signal::from_real(0.0, 0.1e-9, v);
        let same = multi_transit(&sig, 0.0, 69.8e-9, 10).unwrap();
        assert_eq!(same, sig);
        let out = multi_transit(&sig, 0.5, 69.8e-9, 10).unwrap();
        assert_eq!(out.values[698].re, 0.5);
        assert_eq!(out.values[2 * 698].re / out.values[698].re, 0.5);
        assert!(multi_transit(&sig, 1.0, 69.8e-9, 10).is_err());
    }

    #[test]
    fn gated_recursion_matches_echo_sum() {
        let sig = Signal::from_real(0.0, 1e-9, (0..2000).map(|i| if (100..400).contains(&i) { 1.0 } else { 0.2 }));
        let ones = vec![1.0; sig.len()];
        let a = multi_transit_gated(&sig, &ones, 0.55, 70e-9).unwrap();
        let b = multi_transit(&sig, 0.55, 70e-9, 100).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-12);
        }
        let zeros = vec![0.0; sig.len()];
        assert_eq!(multi_transit_gated(&sig, &zeros, 0.55, 70e-9).unwrap(), sig);
    }

    fn two_path_spectrum(n: usize, df: f64, f_start: f64, crosstalk: f64) -> Spectrum {
        let values = (0..n)
            .map(|i| {
                let f = f_start + i as f64 * df;
                let main = Complex64::from_polar(1.0, -crate::TWO_PI * f * 140e-9);
                let echo = Complex64::from_polar(0.5, -crate::TWO_PI * f * 280e-9);
                main + echo + crosstalk
            })
            .collect();
        Spectrum { f0: f_start, df, values }
    }

    fn project(spec: &Spectrum, delay: f64) -> Complex64 {
        let n = spec.values.len() as f64;
        spec.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::from_polar(1.0, crate::TWO_PI * spec.frequency(i) * delay))
            .sum::<Complex64>()
            / n
    }

    #[test]
    fn gate_full_range_is_identity() {
        let spec = two_path_spectrum(512, 0.5e6, 2.0e9, 0.3);
        let out = time_gate(&spec, 0.0, spec.time_range(), 0.0).unwrap();
        for (a, b) in spec.values.iter().zip(&out.values) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn gate_isolates_main_transit() {
        let spec = two_path_spectrum(1024, 0.5e6, 2.0e9, 0.4);
        let before_echo = project(&spec, 280e-9).norm();
        let before_dc = project(&spec, 0.0).norm();
        let out = time_gate(&spec, 100e-9, 200e-9, DEFAULT_GATE_TAPER).unwrap();
        let main = project(&out, 140e-9).norm();
        let echo = project(&out, 280e-9).norm();
        let dc = project(&out, 0.0).norm();
        assert!((main - 1.0).abs() < 0.05, "main {main}");
        assert!(20.0 * (echo / before_echo).log10() < -20.0, "echo {echo}");
        assert!(20.0 * (dc / before_dc).log10() < -20.0, "dc {dc}");
    }

    #[test]
    fn gate_outside_range_rejected() {
        let spec = two_path_spectrum(64, 1e6, 2e9, 0.0);
        assert!(matches!(time_gate(&spec, 0.0, 2e-6, 0.1), Err(Error::GateOutOfRange { .. })));
        assert!(time_gate(&spec, -1e-9, 1e-7, 0.1).is_err());
    }
}
