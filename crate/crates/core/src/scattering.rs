//! Steady-state scattering of a coherent SAW drive by a two-level transmon.
//!
//! The detuned response is the driven two-level steady state
//!
//! ```text
//! r(δ, Ω) = −(Γ01/2)·(γ01 + iδ) / (γ01² + δ² + Ω²·γ01/Γ01),   t = 1 + r
//! ```
//!
//! with δ = f_drive − f01, which at δ = 0 is exactly
//! `r = −r0 / (1 + Ω²/(Γ01·γ01))`, `r0 = 1/(1 + 2Γφ/Γ01)`.
//! Every quantity is in ordinary frequency units; only ratios enter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::DeviceConfig;
use crate::transmon::{self, FluxBias, LevelStructure};
use crate::{Error, Execution, Result};

/// "Off" reference detuning for sweeps, in units of γ01.
pub const OFF_RESONANCE_LINEWIDTHS: f64 = 50.0;

/// Relaxation Γ01 and pure dephasing Γφ, both in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub gamma01: f64,
    pub gamma_phi: f64,
}

impl Rates {
    pub fn new(gamma01: f64, gamma_phi: f64) -> Self {
        Rates { gamma01, gamma_phi }
    }

    pub fn from_config(cfg: &DeviceConfig) -> Self {
        Rates::new(cfg.transmon.acoustic_coupling, cfg.transmon.dephasing_rate)
    }

    /// γ01 = Γ01/2 + Γφ
    pub fn decoherence(&self) -> f64 {
        0.5 * self.gamma01 + self.gamma_phi
    }

    /// Ω_p² = Γ01·γ01 halves the on-resonance reflection.
    pub fn half_saturation_rabi(&self) -> f64 {
        (self.gamma01 * self.decoherence()).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma01.is_finite() && self.gamma01 > 0.0) {
            return Err(Error::validation("gamma01", format!("must be > 0, got {}", self.gamma01)));
        }
        if !(self.gamma_phi.is_finite() && self.gamma_phi >= 0.0) {
            return Err(Error::validation("gamma_phi", format!("must be >= 0, got {}", self.gamma_phi)));
        }
        Ok(())
    }
}

/// Drive strength as either a Rabi frequency or an incoming SAW power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveStrength {
    Rabi(f64),
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub strength: DriveStrength,
    /// f_drive − f01 in Hz.
    pub detuning: f64,
}

impl DriveSpec {
    pub fn rabi(rabi: f64, detuning: f64) -> Self {
        DriveSpec { strength: DriveStrength::Rabi(rabi), detuning }
    }

    pub fn power(power: f64, detuning: f64) -> Self {
        DriveSpec { strength: DriveStrength::Power(power), detuning }
    }

    /// Ω_p in Hz; powers convert through Ω_p = k·√P.
    pub fn rabi_hz(&self, rabi_per_sqrt_watt: f64) -> f64 {
        match self.strength {
            DriveStrength::Rabi(o) => o,
            DriveStrength::Power(p) => rabi_per_sqrt_watt * p.sqrt(),
        }
    }

    fn checked_rabi(&self, k: f64) -> Result<f64> {
        let o = self.rabi_hz(k);
        if !(o.is_finite() && o >= 0.0) {
            return Err(Error::validation("drive", format!("Rabi frequency must be >= 0, got {o}")));
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSteadyState {
    pub r: Complex64,
    pub t: Complex64,
    pub excited_population: f64,
}

impl BlochSteadyState {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }
}

/// r0 = 1/(1 + 2Γφ/Γ01)
pub fn max_reflection(gamma01: f64, gamma_phi: f64) -> f64 {
    1.0 / (1.0 + 2.0 * gamma_phi / gamma01)
}

/// On-resonance reflection `−r0 / (1 + Ω²/(Γ01·γ01))`.
pub fn reflection_on_resonance(rabi: f64, rates: &Rates) -> Complex64 {
    let r0 = max_reflection(rates.gamma01, rates.gamma_phi);
    let sat = rabi * rabi / (rates.gamma01 * rates.decoherence());
    Complex64::new(-r0 / (1.0 + sat), 0.0)
}

/// Steady state of a driven two-level transmon. `k` converts a power drive to
/// a Rabi frequency and is ignored for Rabi drives.
pub fn bloch_steady_state(drive: &DriveSpec, rates: &Rates, k: f64) -> Result<BlochSteadyState> {
    rates.validate()?;
    let omega = drive.checked_rabi(k)?;
    Ok(bloch_steady_state_rabi(omega, drive.detuning, rates))
}

pub(crate) fn bloch_steady_state_rabi(omega: f64, detuning: f64, rates: &Rates) -> BlochSteadyState {
    let g = rates.gamma01;
    let gamma = rates.decoherence();
    let lorentz = gamma * gamma + detuning * detuning;
    let denom = lorentz + omega * omega * gamma / g;
    let r = if detuning == 0.0 {
        // identical algebra, kept in the closed form on resonance
        reflection_on_resonance(omega, rates)
    } else {
        -0.5 * g * Complex64::new(gamma, detuning) / denom
    };
    let s = omega * omega * gamma / (g * lorentz);
    BlochSteadyState {
        r,
        t: Complex64::new(1.0, 0.0) + r,
        excited_population: 0.5 * s / (1.0 + s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSweepRow {
    pub power: f64,
    pub r_on: f64,
    pub t_on: f64,
    pub r_off: f64,
    pub t_off: f64,
    /// R_on − R_off
    pub d_r: f64,
    /// T_off − T_on
    pub d_t: f64,
}

/// On/off-resonance reflectance and transmittance versus incoming power.
///
/// Values are power coefficients at the transmon scaled by the transducer
/// insertion losses (A→A for reflection, A→B for transmission). With
/// `normalized` the insertion losses are divided out and both channels are
/// referenced to the off-resonant transmittance.
pub fn power_sweep(cfg: &DeviceConfig, powers: &[f64], normalized: bool, exec: Execution) -> Result<Vec<PowerSweepRow>> {
    let rates = Rates::from_config(cfg);
    rates.validate()?;
    if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::validation("powers", format!("must be > 0, got {p}")));
    }
    let k = cfg.rabi_per_sqrt_watt;
    let off = OFF_RESONANCE_LINEWIDTHS * rates.decoherence();
    let gain_r = (cfg.idt_a.insertion_loss * cfg.idt_a.insertion_loss).powi(2);
    let gain_t = (cfg.idt_a.insertion_loss * cfg.idt_b.insertion_loss).powi(2);
    Ok(exec.map(powers, |&p| {
        let omega = k * p.sqrt();
        let on = bloch_steady_state_rabi(omega, 0.0, &rates);
        let of = bloch_steady_state_rabi(omega, off, &rates);
        let (mut r_on, mut t_on, mut r_off, mut t_off) = (
            gain_r * on.reflectance(),
            gain_t * on.transmittance(),
            gain_r * of.reflectance(),
            gain_t * of.transmittance(),
        );
        if normalized {
            let norm = of.transmittance();
            r_on = on.reflectance() / norm;
            t_on = on.transmittance() / norm;
            r_off = of.reflectance() / norm;
            t_off = 1.0;
        }
        PowerSweepRow {
            power: p,
            r_on,
            t_on,
            r_off,
            t_off,
            d_r: r_on - r_off,
            d_t: t_off - t_on,
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxPowerMap {
    pub flux: Vec<f64>,
    pub powers: Vec<f64>,
    /// `t_norm[i][j]` at `flux[i]`, `powers[j]`, normalised to off-resonant transmission.
    pub t_norm: Vec<Vec<f64>>,
    /// Transition positions per flux point, for overlaying multi-photon lines.
    pub levels: Vec<LevelStructure>,
}

/// Normalised transmission versus SQUID flux and incoming power.
pub fn flux_power_map(cfg: &DeviceConfig, flux: &[f64], powers: &[f64], exec: Execution) -> Result<FluxPowerMap> {
    if flux.is_empty() || powers.is_empty() {
        return Err(Error::validation("grid", "flux and power grids must be non-empty"));
    }
    let rates = Rates::from_config(cfg);
    rates.validate()?;
    let k = cfg.rabi_per_sqrt_watt;
    let fq = cfg.carrier_frequency();
    let off = OFF_RESONANCE_LINEWIDTHS * rates.decoherence();
    let rows = exec.try_map(flux, |&phi| -> Result<(Vec<f64>, LevelStructure)> {
        let levels = transmon::level_structure(FluxBias(phi), &cfg.transmon)?;
        let detuning = fq - levels.f01;
        let row = powers
            .iter()
            .map(|&p| {
                let omega = k * p.sqrt();
                let t = bloch_steady_state_rabi(omega, detuning, &rates).transmittance();
                let t_ref = bloch_steady_state_rabi(omega, off, &rates).transmittance();
                t / t_ref
            })
            .collect();
        Ok((row, levels))
    })?;
    let (t_norm, levels) = rows.into_iter().unzip();
    Ok(FluxPowerMap {
        flux: flux.to_vec(),
        powers: powers.to_vec(),
        t_norm,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_rates() -> Rates {
        Rates::new(21e6, 8e6)
    }

    #[test]
    fn max_reflection_values() {
        assert!((max_reflection(21e6, 8e6) - 21.0 / 37.0).abs() < 1e-15);
        assert!((max_reflection(21e6, 8e6) - 0.5676).abs() < 1e-4);
        assert_eq!(max_reflection(21e6, 0.0), 1.0);
        assert!(max_reflection(21e6, 1e30) < 1e-20);
    }

    #[test]
    fn on_resonance_values() {
        let rates = reference_rates();
        let r = reflection_on_resonance(0.0, &rates);
        assert!((r.re + 0.5676).abs() < 1e-4 && r.im == 0.0);
        assert!(((1.0 + r.re).powi(2) - 0.187).abs() < 1e-3);
        let half = reflection_on_resonance(rates.half_saturation_rabi(), &rates);
        assert!((half.re + 0.2838).abs() < 1e-4);
        assert!(((1.0 + half.re).powi(2) - 0.513).abs() < 1e-3);
        let sat = reflection_on_resonance(1e12, &rates);
        assert!(sat.norm() < 1e-6);
    }

    #[test]
    fn detuned_lorentzian() {
        let rates = reference_rates();
        let gamma = rates.decoherence();
        assert_eq!(gamma, 18.5e6);
        let s = bloch_steady_state(&DriveSpec::rabi(0.0, gamma), &rates, 0.0).unwrap();
        let r0 = max_reflection(21e6, 8e6);
        assert!((s.r.norm() - r0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((s.reflectance() - 0.161).abs() < 1e-3);
        let far = bloch_steady_state(&DriveSpec::rabi(0.0, 1e15), &rates, 0.0).unwrap();
        assert!(far.r.norm() < 1e-6 && (far.t - 1.0).norm() < 1e-6);
    }

    #[test]
    fn resonance_consistency() {
        let rates = reference_rates();
        for omega in [0.0, 1e6, 2e7, 3e8] {
            let s = bloch_steady_state(&DriveSpec::rabi(omega, 0.0), &rates, 0.0).unwrap();
            assert_eq!(s.r, reflection_on_resonance(omega, &rates));
            // tiny detuning goes through the general branch
            let g = bloch_steady_state(&DriveSpec::rabi(omega, 1e-9), &rates, 0.0).unwrap();
            assert!((g.r - s.r).norm() <= 1e-12 * s.r.norm().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn perfect_reflection_without_dephasing() {
        let rates = Rates::new(21e6, 0.0);
        let s = bloch_steady_state(&DriveSpec::rabi(1e-3, 0.0), &rates, 0.0).unwrap();
        assert!((s.reflectance() - 1.0).abs() < 1e-6);
        assert!(s.transmittance() < 1e-6);
    }

    #[test]
    fn power_drive_converts_with_k() {
        let rates = reference_rates();
        let k = 2e14;
        let a = bloch_steady_state(&DriveSpec::power(1e-14, 0.0), &rates, k).unwrap();
        let b = bloch_steady_state(&DriveSpec::rabi(k * 1e-7, 0.0), &rates, k).unwrap();
        assert_eq!(a, b);
        assert!(bloch_steady_state(&DriveSpec::rabi(-1.0, 0.0), &rates, k).is_err());
    }

    #[test]
    fn low_power_sweep_extinction() {
        let cfg = DeviceConfig::reference_device();
        let rows = power_sweep(&cfg, &[1e-18, 1e-9], false, Execution::Sequential).unwrap();
        assert!((rows[0].t_on - 0.187).abs() < 1e-3);
        assert!((rows[0].d_t - 0.813).abs() < 1e-3, "{}", rows[0].d_t);
        assert!(rows[1].d_t.abs() < 1e-3 && rows[1].d_r.abs() < 1e-3);
        assert!(power_sweep(&cfg, &[0.0], false, Execution::Sequential).is_err());
    }

    #[test]
    fn normalized_sweep_references_off_transmission() {
        let cfg = DeviceConfig::reference_device();
        let rows = power_sweep(&cfg, &[1e-18], true, Execution::Sequential).unwrap();
        assert_eq!(rows[0].t_off, 1.0);
        assert!((rows[0].t_on - 0.187).abs() < 1e-3);
    }

    #[test]
    fn flux_map_resonance_and_transparency() {
        let cfg = DeviceConfig::reference_device();
        let phi_res = transmon::flux_for_frequency(cfg.carrier_frequency(), &cfg.transmon).unwrap().0;
        let map = flux_power_map(&cfg, &[0.0, phi_res], &[1e-20], Execution::Sequential).unwrap();
        // f01,max sits ~930 MHz above the carrier
        assert!((map.t_norm[0][0] - 1.0).abs() < 1e-3);
        assert!((map.t_norm[1][0] - 0.187).abs() < 1e-3);
        let l = map.levels[1];
        assert!((l.f01 - l.f02_half - 64.5e6).abs() < 1e-3);
        assert!(flux_power_map(&cfg, &[], &[1.0], Execution::Sequential).is_err());
        assert!(flux_power_map(&cfg, &[0.5], &[1.0], Execution::Sequential).is_err());
    }
}
