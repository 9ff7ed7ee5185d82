//! Transmon spectrum and flux tuning for a symmetric SQUID.

use serde::{Deserialize, Serialize};

use crate::device::TransmonParams;
use crate::{Error, Result};

/// Flux through the SQUID loop in units of the flux quantum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxBias(pub f64);

impl FluxBias {
    pub const ZERO: FluxBias = FluxBias(0.0);

    pub fn phi_over_phi0(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStructure {
    pub f01: f64,
    pub f12: f64,
    /// f12 − f01
    pub anharmonicity: f64,
    /// Two-photon 0→2 transition frequency divided by two.
    pub f02_half: f64,
    /// Three-photon 0→3 transition frequency divided by three.
    pub f03_third: f64,
}

/// E_J(Φ) = E_J,0·|cos(πΦ/Φ0)|, in Hz.
pub fn josephson_energy(phi: FluxBias, ej0: f64) -> f64 {
    // fold into one period first so Φ and Φ ± n see the same argument
    let reduced = (phi.0 - phi.0.round()).abs();
    ej0 * (std::f64::consts::PI * reduced).cos().abs()
}

/// 0→1 transition frequency √(8·E_J·E_C) − E_C, in Hz.
pub fn transition_f01(phi: FluxBias, t: &TransmonParams) -> Result<f64> {
    let ej = josephson_energy(phi, t.ej0);
    if ej <= t.ec {
        return Err(Error::OutOfTransmonRegime { ej_hz: ej, ec_hz: t.ec });
    }
    Ok((8.0 * ej * t.ec).sqrt() - t.ec)
}

/// Leading-order transmon ladder: f_{j,j+1} = f01 − j·E_C.
pub fn level_structure(phi: FluxBias, t: &TransmonParams) -> Result<LevelStructure> {
    let f01 = transition_f01(phi, t)?;
    let ec = t.ec;
    Ok(LevelStructure {
        f01,
        f12: f01 - ec,
        anharmonicity: -ec,
        f02_half: f01 - 0.5 * ec,
        f03_third: f01 - ec,
    })
}

pub fn f01_max(t: &TransmonParams) -> Result<f64> {
    transition_f01(FluxBias::ZERO, t)
}

/// Flux in [0, 0.5) at which f01 equals `target_f01`, found by bisection on
/// the monotone branch to 1 Hz.
pub fn flux_for_frequency(target_f01: f64, t: &TransmonParams) -> Result<FluxBias> {
    let max = f01_max(t)?;
    if !(target_f01 > 0.0 && target_f01 <= max) {
        return Err(Error::UnreachableFrequency { target_hz: target_f01, max_hz: max });
    }
    if target_f01 == max {
        return Ok(FluxBias::ZERO);
    }
    // The branch ends where E_J(Φ) = E_C.
    let phi_edge = (t.ec / t.ej0).acos() / std::f64::consts::PI;
    let f_edge = (8.0f64).sqrt() * t.ec - t.ec;
    if target_f01 <= f_edge {
        return Err(Error::UnreachableFrequency { target_hz: target_f01, max_hz: max });
    }
    let f = |phi: f64| transition_f01(FluxBias(phi), t);
    let (mut lo, mut hi) = (0.0, phi_edge);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = match f(mid) {
            Ok(v) => v,
            // Only reachable right at the branch edge.
            Err(_) => {
                hi = mid;
                continue;
            }
        };
        if (fm - target_f01).abs() < 0.5 || hi - lo < 1e-17 {
            return Ok(FluxBias(mid));
        }
        if fm > target_f01 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FluxBias(0.5 * (lo + hi)))
}
