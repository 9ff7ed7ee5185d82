//! Device parameters: material, transmon, transducers and geometry.
//!
//! Configs are JSON objects in SI units (Hz, m, m/s, m², Hz/√W). Unknown keys
//! are rejected. [`DeviceConfig::reference_device`] returns the bundled GaAs
//! device used throughout the examples and tests.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{channel, idt, transmon, Error, Result};

/// Relative tolerance for the co-designed transducer centre frequencies.
pub const CENTER_FREQUENCY_REL_TOL: f64 = 1e-4;

const REFERENCE_DEVICE_JSON: &str = include_str!("../configs/reference_device.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// ε∞; stored but not used by any model.
    pub dielectric_constant: f64,
    /// m/s
    pub sound_velocity: f64,
    /// K² as a fraction (0.07 % is 7e-4).
    pub electromech_coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonParams {
    /// E_J,0/h in Hz.
    pub ej0: f64,
    /// E_C/h in Hz.
    pub ec: f64,
    /// SQUID loop area in m²; stored only, flux is given directly in Φ0.
    pub squid_area: f64,
    /// Pure dephasing Γφ in Hz.
    pub dephasing_rate: f64,
    /// Acoustic relaxation Γac = Γ01 in Hz.
    pub acoustic_coupling: f64,
}

fn default_insertion_loss() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdtParams {
    pub center_frequency: f64,
    pub periods: u32,
    pub finger_overlap: f64,
    /// Lumped amplitude factor in [0, 1].
    #[serde(default = "default_insertion_loss")]
    pub insertion_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(rename = "dist_idtA_qubit")]
    pub dist_idt_a_qubit: f64,
    #[serde(rename = "dist_idtB_qubit")]
    pub dist_idt_b_qubit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub material: MaterialParams,
    pub transmon: TransmonParams,
    pub idt_a: IdtParams,
    pub idt_b: IdtParams,
    pub qdt: IdtParams,
    pub geometry: Geometry,
    /// k in Ωp = k·√P, Hz/√W.
    pub rabi_per_sqrt_watt: f64,
}

fn require(ok: bool, field: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(field, reason()))
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        require(
            self.sound_velocity.is_finite() && self.sound_velocity > 0.0,
            "material.sound_velocity",
            || format!("must be > 0, got {}", self.sound_velocity),
        )?;
        require(
            self.electromech_coupling > 0.0 && self.electromech_coupling < 1.0,
            "material.electromech_coupling",
            || format!("must lie in (0, 1), got {}", self.electromech_coupling),
        )?;
        require(
            self.dielectric_constant > 1.0,
            "material.dielectric_constant",
            || format!("must be > 1, got {}", self.dielectric_constant),
        )
    }
}

impl TransmonParams {
    pub fn validate(&self) -> Result<()> {
        require(self.ec.is_finite() && self.ec > 0.0, "transmon.ec", || {
            format!("must be > 0, got {}", self.ec)
        })?;
        require(
            self.ej0.is_finite() && self.ej0 / self.ec > 1.0,
            "transmon.ej0",
            || format!("E_J0/E_C must exceed 1, got {}", self.ej0 / self.ec),
        )?;
        require(self.squid_area >= 0.0, "transmon.squid_area", || {
            format!("must be >= 0, got {}", self.squid_area)
        })?;
        require(
            self.dephasing_rate.is_finite() && self.dephasing_rate >= 0.0,
            "transmon.dephasing_rate",
            || format!("must be >= 0, got {}", self.dephasing_rate),
        )?;
        require(
            self.acoustic_coupling.is_finite() && self.acoustic_coupling >= 0.0,
            "transmon.acoustic_coupling",
            || format!("must be >= 0, got {}", self.acoustic_coupling),
        )
    }

    /// Decoherence rate γ01 = Γ01/2 + Γφ.
    pub fn gamma01(&self) -> f64 {
        0.5 * self.acoustic_coupling + self.dephasing_rate
    }
}

impl IdtParams {
    pub fn validate(&self, name: &str) -> Result<()> {
        require(self.periods >= 1, &format!("{name}.periods"), || {
            format!("must be >= 1, got {}", self.periods)
        })?;
        require(
            self.center_frequency.is_finite() && self.center_frequency > 0.0,
            &format!("{name}.center_frequency"),
            || format!("must be > 0, got {}", self.center_frequency),
        )?;
        require(
            (0.0..=1.0).contains(&self.insertion_loss),
            &format!("{name}.insertion_loss"),
            || format!("must lie in [0, 1], got {}", self.insertion_loss),
        )?;
        require(
            self.finger_overlap >= 0.0,
            &format!("{name}.finger_overlap"),
            || format!("must be >= 0, got {}", self.finger_overlap),
        )
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        require(self.dist_idt_a_qubit > 0.0, "geometry.dist_idtA_qubit", || {
            format!("must be > 0, got {}", self.dist_idt_a_qubit)
        })?;
        require(self.dist_idt_b_qubit > 0.0, "geometry.dist_idtB_qubit", || {
            format!("must be > 0, got {}", self.dist_idt_b_qubit)
        })
    }
}

impl DeviceConfig {
    /// The bundled GaAs device.
    pub fn reference_device() -> Self {
        Self::from_json_str(REFERENCE_DEVICE_JSON, Path::new("reference_device.json"))
            .expect("bundled config is valid")
    }

    /// Raw text of the bundled config.
    pub fn reference_device_json() -> &'static str {
        REFERENCE_DEVICE_JSON
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: DeviceConfig = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.transmon.validate()?;
        self.idt_a.validate("idt_a")?;
        self.idt_b.validate("idt_b")?;
        self.qdt.validate("qdt")?;
        self.geometry.validate()?;
        let f0 = self.qdt.center_frequency;
        for (name, idt) in [("idt_a", &self.idt_a), ("idt_b", &self.idt_b)] {
            require(
                ((idt.center_frequency - f0) / f0).abs() <= CENTER_FREQUENCY_REL_TOL,
                &format!("{name}.center_frequency"),
                || {
                    format!(
                        "must match qdt.center_frequency {f0} within {CENTER_FREQUENCY_REL_TOL} relative, got {}",
                        idt.center_frequency
                    )
                },
            )?;
        }
        require(
            self.rabi_per_sqrt_watt.is_finite() && self.rabi_per_sqrt_watt > 0.0,
            "rabi_per_sqrt_watt",
            || format!("must be > 0, got {}", self.rabi_per_sqrt_watt),
        )
    }

    /// SAW carrier frequency: the QDT centre frequency f_Q.
    pub fn carrier_frequency(&self) -> f64 {
        self.qdt.center_frequency
    }
}

/// Reads and validates a JSON device config.
pub fn load_config(path: impl AsRef<Path>) -> Result<DeviceConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DeviceConfig::from_json_str(&text, path)
}

/// One derived design constant, optionally paired with the quoted device value.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedQuantity {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
    pub quoted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSummary {
    pub wavelength: f64,
    pub bandwidth_idt: f64,
    pub bandwidth_qdt: f64,
    pub acoustic_coupling_design: f64,
    pub f01_max: f64,
    pub anharmonicity: f64,
    pub ej_over_ec: f64,
    pub transit_a: f64,
    pub transit_b: f64,
}

impl DerivedSummary {
    /// Rows in a fixed order. `quoted` holds the value listed for the bundled
    /// device where one exists.
    pub fn rows(&self) -> Vec<DerivedQuantity> {
        vec![
            DerivedQuantity { name: "wavelength", value: self.wavelength, unit: "m", quoted: Some(1265e-9) },
            DerivedQuantity { name: "bandwidth_idt", value: self.bandwidth_idt, unit: "Hz", quoted: Some(14e6) },
            DerivedQuantity { name: "bandwidth_qdt", value: self.bandwidth_qdt, unit: "Hz", quoted: Some(81e6) },
            DerivedQuantity { name: "acoustic_coupling_design", value: self.acoustic_coupling_design, unit: "Hz", quoted: Some(21e6) },
            DerivedQuantity { name: "f01_max", value: self.f01_max, unit: "Hz", quoted: Some(3.19e9) },
            DerivedQuantity { name: "anharmonicity", value: self.anharmonicity, unit: "Hz", quoted: Some(-129e6) },
            DerivedQuantity { name: "ej_over_ec", value: self.ej_over_ec, unit: "1", quoted: Some(83.0) },
            DerivedQuantity { name: "transit_idtA_qubit", value: self.transit_a, unit: "s", quoted: None },
            DerivedQuantity { name: "transit_idtB_qubit", value: self.transit_b, unit: "s", quoted: None },
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.rows() {
            let _ = writeln!(s, "{} = {:.6e} {}", row.name, row.value, row.unit);
        }
        s
    }
}

pub fn derived_summary(cfg: &DeviceConfig) -> Result<DerivedSummary> {
    cfg.validate()?;
    let levels = transmon::level_structure(transmon::FluxBias::ZERO, &cfg.transmon)?;
    Ok(DerivedSummary {
        wavelength: idt::wavelength(cfg.material.sound_velocity, cfg.idt_a.center_frequency),
        bandwidth_idt: idt::bandwidth(cfg.idt_a.center_frequency, cfg.idt_a.periods),
        bandwidth_qdt: idt::bandwidth(cfg.qdt.center_frequency, cfg.qdt.periods),
        acoustic_coupling_design: idt::acoustic_coupling(
            cfg.qdt.center_frequency,
            cfg.material.electromech_coupling,
            cfg.qdt.periods,
        ),
        f01_max: levels.f01,
        anharmonicity: levels.anharmonicity,
        ej_over_ec: cfg.transmon.ej0 / cfg.transmon.ec,
        transit_a: channel::transit_delay(cfg.geometry.dist_idt_a_qubit, cfg.material.sound_velocity),
        transit_b: channel::transit_delay(cfg.geometry.dist_idt_b_qubit, cfg.material.sound_velocity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_matches_table_values() {
        let cfg = DeviceConfig::reference_device();
        assert_eq!(cfg.material.sound_velocity, 2864.0);
        assert_eq!(cfg.material.electromech_coupling, 7e-4);
        assert_eq!(cfg.idt_a.periods, 150);
        assert_eq!(cfg.qdt.periods, 25);
    }

    #[test]
    fn zero_periods_rejected() {
        let mut cfg = DeviceConfig::reference_device();
        cfg.idt_b.periods = 0;
        match cfg.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "idt_b.periods"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_insertion_loss_defaults_to_unity() {
        let text = DeviceConfig::reference_device_json().replace(",\n    \"insertion_loss\": 1.0", "");
        assert!(!text.contains("insertion_loss"));
        let cfg = DeviceConfig::from_json_str(&text, Path::new("x.json")).unwrap();
        assert_eq!(cfg.idt_a.insertion_loss, 1.0);
        assert_eq!(cfg.qdt.insertion_loss, 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = DeviceConfig::reference_device_json().replacen("{", "{\n  \"bogus\": 1,", 1);
        assert!(matches!(
            DeviceConfig::from_json_str(&text, Path::new("x.json")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            DeviceConfig::from_json_str("{ not json", Path::new("x.json")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn mismatched_center_frequency_rejected() {
        let mut cfg = DeviceConfig::reference_device();
        cfg.idt_a.center_frequency *= 1.01;
        assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn out_of_range_material_rejected() {
        let mut cfg = DeviceConfig::reference_device();
        cfg.material.electromech_coupling = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = DeviceConfig::reference_device();
        cfg.transmon.ej0 = 0.5 * cfg.transmon.ec;
        assert!(cfg.validate().is_err());
        let mut cfg = DeviceConfig::reference_device();
        cfg.idt_a.insertion_loss = 1.2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = DeviceConfig::reference_device();
        let back = DeviceConfig::from_json_str(&cfg.to_json(), Path::new("rt.json")).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn derived_summary_design_values() {
        let s = derived_summary(&DeviceConfig::reference_device()).unwrap();
        assert!((s.wavelength - 1265e-9).abs() / 1265e-9 < 5e-3);
        assert!((s.f01_max - 3.194e9).abs() < 1e6);
        assert!((s.acoustic_coupling_design - 19.81e6).abs() < 0.01e6);
        assert!((s.anharmonicity + 129e6).abs() < 1e-3);
        assert!((s.transit_a - 104.75e-9).abs() < 0.01e-9);
    }
}
