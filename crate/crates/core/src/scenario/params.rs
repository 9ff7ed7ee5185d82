//! Typed parameter blocks, one per scenario. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::trap::ReleaseDirection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateParams {
    pub powers_w: Vec<f64>,
    #[serde(default)]
    pub detuning_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxPowerMapParams {
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_points: usize,
    pub power_min_w: f64,
    pub power_max_w: f64,
    pub power_points: usize,
}

impl Default for FluxPowerMapParams {
    fn default() -> Self {
        FluxPowerMapParams {
            phi_min: 0.25,
            phi_max: 0.40,
            phi_points: 151,
            power_min_w: 1e-18,
            power_max_w: 1e-12,
            power_points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSweepParams {
    pub power_min_w: f64,
    pub power_max_w: f64,
    pub points: usize,
    pub normalized: bool,
}

impl Default for PowerSweepParams {
    fn default() -> Self {
        PowerSweepParams { power_min_w: 1e-18, power_max_w: 1e-12, points: 61, normalized: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutlerTownesParams {
    pub control_rabi_hz: Vec<f64>,
    #[serde(default = "at_detuning_min")]
    pub detuning_min_hz: f64,
    #[serde(default = "at_detuning_max")]
    pub detuning_max_hz: f64,
    #[serde(default = "at_points")]
    pub points: usize,
    #[serde(default)]
    pub probe_rabi_hz: Option<f64>,
    #[serde(default)]
    pub control_detuning_hz: f64,
}

fn at_detuning_min() -> f64 {
    -300e6
}

fn at_detuning_max() -> f64 {
    300e6
}

fn at_points() -> usize {
    601
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutePulseParams {
    pub control_pulse_length_s: f64,
    /// Defaults to 10·γ01.
    pub control_rabi_hz: Option<f64>,
    pub loop_gain: f64,
    pub probe_rabi_hz: Option<f64>,
    pub dt_s: f64,
}

impl Default for RoutePulseParams {
    fn default() -> Self {
        RoutePulseParams {
            control_pulse_length_s: 400e-9,
            control_rabi_hz: None,
            loop_gain: crate::channel::DEFAULT_LOOP_GAIN,
            probe_rabi_hz: None,
            dt_s: 0.25e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SawPulseParams {
    pub pulse_length_s: f64,
    pub detuning_hz: f64,
    pub peak_rabi_hz: Option<f64>,
    pub launch_time_s: f64,
    pub duration_s: f64,
    pub dt_s: f64,
}

impl Default for SawPulseParams {
    fn default() -> Self {
        SawPulseParams {
            pulse_length_s: 100e-9,
            detuning_hz: 0.0,
            peak_rabi_hz: None,
            launch_time_s: 100e-9,
            duration_s: 800e-9,
            dt_s: 0.25e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapParams {
    pub separation_m: Option<f64>,
    pub pulse_length_s: f64,
    pub peak_rabi_hz: Option<f64>,
    pub release_direction: ReleaseDirection,
    pub catch_delay_s: f64,
    pub ramp_s: f64,
    pub release_time_s: f64,
    pub duration_s: f64,
    pub far_detuning_hz: f64,
    pub dt_s: f64,
    /// Overrides the device dephasing rate.
    pub gamma_phi_hz: Option<f64>,
    /// Write every n-th sample.
    pub stride: usize,
}

impl Default for TrapParams {
    fn default() -> Self {
        let d = crate::trap::CatchRelease::default();
        TrapParams {
            separation_m: None,
            pulse_length_s: d.pulse_length,
            peak_rabi_hz: None,
            release_direction: d.direction,
            catch_delay_s: d.catch_delay,
            ramp_s: d.ramp,
            release_time_s: d.release_time,
            duration_s: d.duration,
            far_detuning_hz: d.far_detuning,
            dt_s: d.dt,
            gamma_phi_hz: None,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSweepParams {
    /// Defaults to the device value.
    pub k: Option<f64>,
    /// Defaults to the device value.
    pub gamma_phi_hz: Option<f64>,
    pub points: usize,
    pub power_min_w: f64,
    pub power_max_w: f64,
    /// Standard deviation of additive noise on R and T.
    pub noise: f64,
}

impl Default for SyntheticSweepParams {
    fn default() -> Self {
        SyntheticSweepParams {
            k: None,
            gamma_phi_hz: None,
            points: 30,
            power_min_w: 1e-16,
            power_max_w: 1e-12,
            noise: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitParams {
    /// Sweep CSV, relative to the scenario file. Synthetic data otherwise.
    pub data: Option<PathBuf>,
    pub synthetic: Option<SyntheticSweepParams>,
    pub reflection_weight: f64,
    pub transmission_weight: f64,
    pub seed: u64,
    /// Additional noisy repetitions with seeds seed+1, seed+2, ...
    pub monte_carlo_runs: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            data: None,
            synthetic: None,
            reflection_weight: 1.0,
            transmission_weight: 1.0,
            seed: 0,
            monte_carlo_runs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateFilterParams {
    /// Spectrum CSV (`frequency_hz,re,im`), relative to the scenario file.
    /// A synthetic two-path transmission is generated otherwise.
    pub data: Option<PathBuf>,
    pub gate_start_s: f64,
    pub gate_stop_s: f64,
    pub taper: f64,
    pub span_hz: f64,
    pub points: usize,
    /// Defaults to the IDT A → IDT B transit.
    pub main_delay_s: Option<f64>,
    /// Defaults to twice the main delay.
    pub echo_delay_s: Option<f64>,
    pub echo_amplitude: f64,
    pub crosstalk: f64,
}

impl Default for GateFilterParams {
    fn default() -> Self {
        GateFilterParams {
            data: None,
            gate_start_s: 100e-9,
            gate_stop_s: 200e-9,
            taper: crate::channel::DEFAULT_GATE_TAPER,
            span_hz: 200e6,
            points: 2000,
            main_delay_s: None,
            echo_delay_s: None,
            echo_amplitude: 0.5,
            crosstalk: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}
