//! Interdigital transducer in the delta-function (array factor) model.
//!
//! A transducer with `N_p` periods behaves as `N_p` equally weighted sources
//! spaced by one wavelength, so its response around the centre frequency is
//! the Dirichlet kernel `sin(N_p·π·x) / (N_p·sin(π·x))` with `x = (f − f0)/f0`.

use num_complex::Complex64;

use crate::device::IdtParams;

#[derive(Debug, Clone, PartialEq)]
pub struct IdtResponse {
    pub frequencies: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

/// Rule-of-thumb bandwidth 0.9·f0/N_p.
pub fn bandwidth(f0: f64, periods: u32) -> f64 {
    0.9 * f0 / periods as f64
}

/// Acoustic wavelength v0/f0.
pub fn wavelength(v0: f64, f0: f64) -> f64 {
    v0 / f0
}

/// Acoustic relaxation rate of a transmon shunted by a transducer:
/// Γac = 0.5·f_Q·K²·N_p,Q.
pub fn acoustic_coupling(fq: f64, k2: f64, periods: u32) -> f64 {
    0.5 * fq * k2 * periods as f64
}

/// Normalised array factor at fractional detuning `x`.
pub fn array_factor(x: f64, periods: u32) -> f64 {
    let n = periods as f64;
    let s = (std::f64::consts::PI * x).sin();
    if s.abs() < 1e-9 {
        // L'Hôpital at the grating lobes
        (n * std::f64::consts::PI * x).cos() / (std::f64::consts::PI * x).cos()
    } else {
        (n * std::f64::consts::PI * x).sin() / (n * s)
    }
}

/// Transducer amplitude response on a frequency grid; peak value equals the
/// insertion loss factor.
pub fn response(params: &IdtParams, frequencies: &[f64]) -> IdtResponse {
    let f0 = params.center_frequency;
    let amplitude = frequencies
        .iter()
        .map(|&f| Complex64::new(params.insertion_loss * array_factor((f - f0) / f0, params.periods), 0.0))
        .collect();
    IdtResponse {
        frequencies: frequencies.to_vec(),
        amplitude,
    }
}

/// Response at a baseband offset `df` from the centre frequency.
pub fn response_at_offset(params: &IdtParams, df: f64) -> f64 {
    params.insertion_loss * array_factor(df / params.center_frequency, params.periods)
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
    fn bandwidth_rule() {
        assert!((bandwidth(2.2641e9, 150) - 13.58e6).abs() < 0.01e6);
        assert!((bandwidth(2.2641e9, 25) - 81.5e6).abs() < 0.1e6);
        assert_eq!(bandwidth(2.2641e9, 1), 0.9 * 2.2641e9);
    }

    #[test]
    fn wavelength_values() {
        assert!((wavelength(2864.0, 2.2641e9) - 1265e-9).abs() < 0.5e-9);
        assert_eq!(wavelength(2864.0, 2864.0), 1.0);
        assert_eq!(wavelength(2864.0, 2.0 * 2.2641e9), 0.5 * wavelength(2864.0, 2.2641e9));
    }

    #[test]
    fn coupling_values() {
        assert!((acoustic_coupling(2.2641e9, 7e-4, 25) - 19.81e6).abs() < 0.01e6);
        assert_eq!(acoustic_coupling(2.2641e9, 7e-4, 50), 2.0 * acoustic_coupling(2.2641e9, 7e-4, 25));
        assert_eq!(acoustic_coupling(2.2641e9, 0.0, 25), 0.0);
    }

    #[test]
    fn peak_and_zeros() {
        let mut p = idt(150);
        p.insertion_loss = 0.7;
        let r = response(&p, &[p.center_frequency]);
        assert!((r.amplitude[0].norm() - 0.7).abs() < 1e-15);
        let f0 = p.center_frequency;
        let zeros = response(&p, &[f0 * (1.0 + 1.0 / 150.0), f0 * (1.0 - 1.0 / 150.0)]);
        for a in zeros.amplitude {
            assert!(a.norm() < 1e-9);
        }
        assert!((f0 / 150.0 - 15.09e6).abs() < 0.01e6);
    }

    #[test]
    fn array_factor_is_bounded_and_symmetric() {
        for n in [1u32, 7, 25, 150] {
            for i in 0..2000 {
                let x = -0.6 + 1.2 * i as f64 / 1999.0;
                let a = array_factor(x, n);
                assert!(a.abs() <= 1.0 + 1e-12);
                assert!((a - array_factor(-x, n)).abs() < 1e-12);
            }
        }
    }

    // Brute-force scan of |H|² for the half-power full width.
    fn scanned_half_power_width(periods: u32) -> f64 {
        let p = idt(periods);
        let f0 = p.center_frequency;
        let step = f0 / periods as f64 * 1e-5;
        let mut df = 0.0;
        while response_at_offset(&p, df).powi(2) >= 0.5 {
            df += step;
        }
        2.0 * df
    }

    #[test]
    fn half_power_width_matches_rule() {
        let w = scanned_half_power_width(150);
        assert!((w - 0.886 * 2.2641e9 / 150.0).abs() / w < 2e-3, "{w}");
        assert!((w - 13.4e6).abs() < 0.1e6);
        for n in [25, 150, 450] {
            let w = scanned_half_power_width(n);
            let rule = bandwidth(2.2641e9, n);
            assert!((w - rule).abs() / rule < 0.05, "N={n}: {w} vs {rule}");
        }
    }
}
