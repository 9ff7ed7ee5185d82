//! Scenario files, deterministic CSV outputs and run manifests.
//!
//! A scenario is a JSON object
//!
//! ```json
//! { "name": "power-sweep", "parameters": { "points": 61 }, "output_dir": "out" }
//! ```
//!
//! Every run writes its tables first and `manifest.json` last, each through a
//! temporary file that is renamed into place.

pub mod csv;
pub mod params;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{self, Spectrum};
use crate::device::{self, DeviceConfig};
use crate::dynamics::{self, FieldTrace};
use crate::fit::{self, FitOptions, FitResult, SweepData};
use crate::scattering::{self, DriveSpec, Rates};
use crate::trap::{self, CatchRelease, TrapSchedule};
use crate::{Error, Execution, Result};
use csv::{Cell, Table};
use params::*;

pub const TOOL_NAME: &str = "phonon-router";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";
const DEFAULT_OUTPUT_DIR: &str = "out";

pub const SCENARIO_NAMES: [&str; 10] = [
    "steady-state",
    "flux-power-map",
    "power-sweep",
    "autler-townes",
    "route-pulse",
    "saw-pulse",
    "trap",
    "fit",
    "gate-filter",
    "derived-summary",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    SteadyState(SteadyStateParams),
    FluxPowerMap(FluxPowerMapParams),
    PowerSweep(PowerSweepParams),
    AutlerTownes(AutlerTownesParams),
    RoutePulse(RoutePulseParams),
    SawPulse(SawPulseParams),
    Trap(TrapParams),
    Fit(FitParams),
    GateFilter(GateFilterParams),
    DerivedSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    parameters: Option<serde_json::Value>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub plan: Plan,
    pub output_dir: Option<PathBuf>,
    /// Directory that relative data paths are resolved against.
    pub base_dir: PathBuf,
    /// The scenario as read, echoed into the manifest.
    pub echo: serde_json::Value,
}

fn typed<T: serde::de::DeserializeOwned>(value: serde_json::Value, name: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::validation(format!("{name} parameters"), e.to_string()))
}

impl Scenario {
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let echo: serde_json::Value =
            serde_json::from_str(text).map_err(|source| Error::Parse { path: origin.into(), source })?;
        let file: ScenarioFile =
            serde_json::from_value(echo.clone()).map_err(|e| Error::validation("scenario", e.to_string()))?;
        let p = file.parameters.unwrap_or_else(|| serde_json::json!({}));
        let name = file.name.as_str();
        let plan = match name {
            "steady-state" => Plan::SteadyState(typed(p, name)?),
            "flux-power-map" => Plan::FluxPowerMap(typed(p, name)?),
            "power-sweep" => Plan::PowerSweep(typed(p, name)?),
            "autler-townes" => Plan::AutlerTownes(typed(p, name)?),
            "route-pulse" => Plan::RoutePulse(typed(p, name)?),
            "saw-pulse" => Plan::SawPulse(typed(p, name)?),
            "trap" => Plan::Trap(typed(p, name)?),
            "fit" => Plan::Fit(typed(p, name)?),
            "gate-filter" => Plan::GateFilter(typed(p, name)?),
            "derived-summary" => {
                typed::<NoParams>(p, name)?;
                Plan::DerivedSummary
            }
            other => {
                return Err(Error::validation(
                    "scenario.name",
                    format!("unknown scenario `{other}`; expected one of {}", SCENARIO_NAMES.join(", ")),
                ))
            }
        };
        let scenario = Scenario {
            name: file.name,
            plan,
            output_dir: file.output_dir,
            base_dir: origin.parent().map(Path::to_path_buf).unwrap_or_default(),
            echo,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json_str(&text, path)
    }

    /// Checks required parameters and ranges that do not depend on the device.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be > 0, got {v}")))
            }
        };
        let range = |field: &str, lo: f64, hi: f64| {
            if lo.is_finite() && hi.is_finite() && lo < hi {
                Ok(())
            } else {
                Err(Error::validation(field, format!("need min < max, got [{lo}, {hi}]")))
            }
        };
        let points = |field: &str, n: usize, min: usize| {
            if n >= min {
                Ok(())
            } else {
                Err(Error::validation(field, format!("need at least {min} points, got {n}")))
            }
        };
        match &self.plan {
            Plan::SteadyState(p) => {
                if p.powers_w.is_empty() {
                    return Err(Error::validation("powers_w", "required and non-empty"));
                }
                for &w in &p.powers_w {
                    positive("powers_w", w)?;
                }
            }
            Plan::FluxPowerMap(p) => {
                range("phi", p.phi_min, p.phi_max)?;
                range("power_w", p.power_min_w, p.power_max_w)?;
                positive("power_min_w", p.power_min_w)?;
                points("phi_points", p.phi_points, 2)?;
                points("power_points", p.power_points, 2)?;
            }
            Plan::PowerSweep(p) => {
                range("power_w", p.power_min_w, p.power_max_w)?;
                positive("power_min_w", p.power_min_w)?;
                points("points", p.points, 2)?;
            }
            Plan::AutlerTownes(p) => {
                if p.control_rabi_hz.is_empty() {
                    return Err(Error::validation("control_rabi_hz", "required and non-empty"));
                }
                range("detuning_hz", p.detuning_min_hz, p.detuning_max_hz)?;
                points("points", p.points, 3)?;
                if let Some(o) = p.probe_rabi_hz {
                    positive("probe_rabi_hz", o)?;
                }
            }
            Plan::RoutePulse(p) => {
                positive("control_pulse_length_s", p.control_pulse_length_s)?;
                positive("dt_s", p.dt_s)?;
            }
            Plan::SawPulse(p) => {
                positive("pulse_length_s", p.pulse_length_s)?;
                positive("duration_s", p.duration_s)?;
                positive("dt_s", p.dt_s)?;
            }
            Plan::Trap(p) => {
                positive("pulse_length_s", p.pulse_length_s)?;
                positive("duration_s", p.duration_s)?;
                positive("dt_s", p.dt_s)?;
                points("stride", p.stride, 1)?;
                if let Some(s) = p.separation_m {
                    positive("separation_m", s)?;
                }
            }
            Plan::Fit(p) => {
                if p.data.is_some() && p.synthetic.is_some() {
                    return Err(Error::validation("fit", "give either `data` or `synthetic`, not both"));
                }
                if let Some(s) = &p.synthetic {
                    range("power_w", s.power_min_w, s.power_max_w)?;
                    positive("power_min_w", s.power_min_w)?;
                    points("points", s.points, 5)?;
                }
            }
            Plan::GateFilter(p) => {
                range("gate", p.gate_start_s, p.gate_stop_s)?;
                positive("span_hz", p.span_hz)?;
                points("points", p.points, 4)?;
            }
            Plan::DerivedSummary => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out_dir: Option<PathBuf>,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    pub exec: Execution,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub scenario: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// One-line findings worth printing.
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads and validates a device configuration.
pub fn validate_config(path: impl AsRef<Path>) -> Result<DeviceConfig> {
    device::load_config(path)
}

/// Reads both files and runs the scenario.
pub fn run(config_path: &Path, scenario_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let bytes = fs::read(config_path).map_err(|e| Error::io(config_path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::validation("config", format!("{} is not UTF-8", config_path.display())))?;
    let cfg = DeviceConfig::from_json_str(&text, config_path)?;
    let scenario = Scenario::load(scenario_path)?;
    run_scenario(&cfg, &bytes, &scenario, opts)
}

struct Outputs {
    tables: Vec<Table>,
    texts: Vec<(String, String)>,
    notes: Vec<String>,
    seed: Option<u64>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { tables: Vec::new(), texts: Vec::new(), notes: Vec::new(), seed: None }
    }
}

pub fn run_scenario(cfg: &DeviceConfig, config_bytes: &[u8], scenario: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    cfg.validate()?;
    let config_sha256 = sha256_hex(config_bytes);
    let out = execute(cfg, scenario, opts)?;

    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let mut files = Vec::new();
    let mut listed = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        listed.push(ManifestFile { path: name.into(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() as u64 });
        files.push(path);
        Ok(())
    };
    for table in out.tables {
        let mut meta = vec![
            ("scenario".to_string(), scenario.name.clone()),
            ("tool".to_string(), format!("{TOOL_NAME} {TOOL_VERSION}")),
            ("config_sha256".to_string(), config_sha256.clone()),
        ];
        meta.extend(table.meta.iter().cloned());
        let table = Table { meta, ..table };
        emit(&table.file_name, table.render())?;
    }
    for (name, text) in out.texts {
        emit(&name, text)?;
    }

    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        config_sha256,
        scenario: scenario.echo.clone(),
        seed: out.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        files: listed,
    };
    let manifest_path = out_dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    write_atomic(&manifest_path, json.as_bytes())?;
    Ok(RunReport { out_dir, files, manifest: manifest_path, notes: out.notes })
}

fn execute(cfg: &DeviceConfig, scenario: &Scenario, opts: &RunOptions) -> Result<Outputs> {
    let exec = opts.exec;
    match &scenario.plan {
        Plan::SteadyState(p) => steady_state(cfg, p),
        Plan::FluxPowerMap(p) => flux_power_map(cfg, p, exec),
        Plan::PowerSweep(p) => power_sweep(cfg, p, exec),
        Plan::AutlerTownes(p) => autler_townes(cfg, p, exec),
        Plan::RoutePulse(p) => route_pulse(cfg, p),
        Plan::SawPulse(p) => saw_pulse(cfg, p),
        Plan::Trap(p) => trap_run(cfg, p),
        Plan::Fit(p) => fit_run(cfg, p, &scenario.base_dir, opts.seed, exec),
        Plan::GateFilter(p) => gate_filter(cfg, p, &scenario.base_dir),
        Plan::DerivedSummary => derived(cfg),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn steady_state(cfg: &DeviceConfig, p: &SteadyStateParams) -> Result<Outputs> {
    let rates = Rates::from_config(cfg);
    let k = cfg.rabi_per_sqrt_watt;
    let mut t = Table::new(
        "steady_state.csv",
        &[
            ("power_w", "W"),
            ("rabi_hz", "Hz"),
            ("detuning_hz", "Hz"),
            ("R", "1"),
            ("T", "1"),
            ("r_re", "1"),
            ("r_im", "1"),
            ("excited_population", "1"),
        ],
    );
    for &w in &p.powers_w {
        let drive = DriveSpec::power(w, p.detuning_hz);
        let s = scattering::bloch_steady_state(&drive, &rates, k)?;
        t.push(vec![
            w.into(),
            drive.rabi_hz(k).into(),
            p.detuning_hz.into(),
            s.reflectance().into(),
            s.transmittance().into(),
            s.r.re.into(),
            s.r.im.into(),
            s.excited_population.into(),
        ]);
    }
    let mut out = Outputs::new();
    out.tables.push(t);
    Ok(out)
}

fn flux_power_map(cfg: &DeviceConfig, p: &FluxPowerMapParams, exec: Execution) -> Result<Outputs> {
    let flux = linspace(p.phi_min, p.phi_max, p.phi_points);
    let powers = fit::log_spaced(p.power_min_w, p.power_max_w, p.power_points);
    let map = scattering::flux_power_map(cfg, &flux, &powers, exec)?;
    let mut t = Table::new("flux_power_map.csv", &[("phi_over_phi0", "Phi0"), ("power_w", "W"), ("T_norm", "1")])
        .meta("carrier_hz", cfg.carrier_frequency());
    for (i, phi) in map.flux.iter().enumerate() {
        for (j, w) in map.powers.iter().enumerate() {
            t.push(vec![(*phi).into(), (*w).into(), map.t_norm[i][j].into()]);
        }
    }
    let mut levels = Table::new(
        "flux_power_map_levels.csv",
        &[("phi_over_phi0", "Phi0"), ("f01_hz", "Hz"), ("f02_half_hz", "Hz"), ("f03_third_hz", "Hz")],
    )
    .meta("carrier_hz", cfg.carrier_frequency());
    for (phi, l) in map.flux.iter().zip(&map.levels) {
        levels.push(vec![(*phi).into(), l.f01.into(), l.f02_half.into(), l.f03_third.into()]);
    }
    let mut out = Outputs::new();
    out.tables.push(t);
    out.tables.push(levels);
    Ok(out)
}

fn power_sweep(cfg: &DeviceConfig, p: &PowerSweepParams, exec: Execution) -> Result<Outputs> {
    let powers = fit::log_spaced(p.power_min_w, p.power_max_w, p.points);
    let rows = scattering::power_sweep(cfg, &powers, p.normalized, exec)?;
    let mut t = Table::new(
        "power_sweep.csv",
        &[
            ("power_w", "W"),
            ("R_on", "1"),
            ("T_on", "1"),
            ("R_off", "1"),
            ("T_off", "1"),
            ("dR", "1"),
            ("dT", "1"),
        ],
    )
    .meta("normalized", p.normalized);
    for r in &rows {
        t.push(vec![r.power.into(), r.r_on.into(), r.t_on.into(), r.r_off.into(), r.t_off.into(), r.d_r.into(), r.d_t.into()]);
    }
    let mut out = Outputs::new();
    if let Some(first) = rows.first() {
        out.notes.push(format!("lowest-power extinction dT = {:.4}", first.d_t));
    }
    out.tables.push(t);
    Ok(out)
}

fn autler_townes(cfg: &DeviceConfig, p: &AutlerTownesParams, exec: Execution) -> Result<Outputs> {
    let rates = Rates::from_config(cfg);
    let probe = p.probe_rabi_hz.unwrap_or(1e-3 * rates.half_saturation_rabi());
    let detunings = linspace(p.detuning_min_hz, p.detuning_max_hz, p.points);
    let mut t = Table::new("autler_townes.csv", &[("probe_detuning_hz", "Hz"), ("control_rabi_hz", "Hz"), ("T", "1")])
        .meta("probe_rabi_hz", probe)
        .meta("control_detuning_hz", p.control_detuning_hz);
    let mut split = Table::new("autler_townes_splitting.csv", &[("control_rabi_hz", "Hz"), ("splitting_hz", "Hz")]);
    for &oc in &p.control_rabi_hz {
        if !(oc.is_finite() && oc >= 0.0) {
            return Err(Error::validation("control_rabi_hz", format!("must be >= 0, got {oc}")));
        }
        let spectrum = dynamics::autler_townes_spectrum(&rates, probe, oc, p.control_detuning_hz, &detunings, exec)?;
        for (d, tr) in detunings.iter().zip(&spectrum) {
            t.push(vec![(*d).into(), oc.into(), (*tr).into()]);
        }
        let mut dips = dynamics::find_dips(&detunings, &spectrum);
        dips.sort_by(|a, b| a.1.total_cmp(&b.1));
        let s = (dips.len() >= 2).then(|| (dips[0].0 - dips[1].0).abs());
        split.push(vec![oc.into(), s.into()]);
    }
    let mut out = Outputs::new();
    out.tables.push(t);
    out.tables.push(split);
    Ok(out)
}

const TRACE_COLUMNS: [(&str, &str); 7] = [
    ("t_s", "s"),
    ("incident_re", "sqrt(phonons/s)"),
    ("incident_im", "sqrt(phonons/s)"),
    ("reflected_re", "sqrt(phonons/s)"),
    ("reflected_im", "sqrt(phonons/s)"),
    ("transmitted_re", "sqrt(phonons/s)"),
    ("transmitted_im", "sqrt(phonons/s)"),
];

fn trace_row(t: f64, a: Complex64, r: Complex64, tr: Complex64) -> Vec<Cell> {
    vec![t.into(), a.re.into(), a.im.into(), r.re.into(), r.im.into(), tr.re.into(), tr.im.into()]
}

fn trace_table(name: &str, trace: &FieldTrace) -> Table {
    let mut t = Table::new(name, &TRACE_COLUMNS)
        .meta("reference", "incident and reflected at IDT A, transmitted at IDT B");
    for (i, time) in trace.times().into_iter().enumerate() {
        t.push(trace_row(time, trace.incident.values[i], trace.reflected.values[i], trace.transmitted.values[i]));
    }
    t
}

fn route_pulse(cfg: &DeviceConfig, p: &RoutePulseParams) -> Result<Outputs> {
    let oc = p.control_rabi_hz.unwrap_or(10.0 * cfg.transmon.gamma01());
    let opts = dynamics::RouteOptions { probe_rabi: p.probe_rabi_hz, loop_gain: p.loop_gain, dt: p.dt_s, ..Default::default() };
    let r = dynamics::route_pulse(cfg, p.control_pulse_length_s, oc, &opts)?;
    let trace = trace_table("route_pulse.csv", &r.trace)
        .meta("control_rabi_hz", oc)
        .meta("control_pulse_length_s", p.control_pulse_length_s)
        .meta("loop_gain", p.loop_gain);
    let mut summary = Table::new(
        "route_pulse_summary.csv",
        &[
            ("rise_time_s", "s"),
            ("fall_time_s", "s"),
            ("peak_transmitted", "sqrt(phonons/s)"),
            ("switch_on_s", "s"),
            ("switch_off_s", "s"),
            ("max_trace_drift", "1"),
            ("min_eigenvalue", "1"),
        ],
    );
    summary.push(vec![
        r.rise_time.into(),
        r.fall_time.into(),
        r.peak_transmitted.into(),
        r.switch_on_at_detector.into(),
        r.switch_off_at_detector.into(),
        r.integrity.max_trace_drift.into(),
        r.integrity.min_eigenvalue.into(),
    ]);
    let mut out = Outputs::new();
    let ns = |t: Option<f64>| t.map_or("n/a".to_string(), |t| format!("{:.1} ns", t * 1e9));
    out.notes.push(format!("rise time {}, fall time {}", ns(r.rise_time), ns(r.fall_time)));
    out.tables.push(trace);
    out.tables.push(summary);
    Ok(out)
}

fn saw_pulse(cfg: &DeviceConfig, p: &SawPulseParams) -> Result<Outputs> {
    let opts = dynamics::SawPulseOptions {
        pulse_length: p.pulse_length_s,
        peak_rabi: p.peak_rabi_hz,
        detuning: p.detuning_hz,
        launch_time: p.launch_time_s,
        duration: p.duration_s,
        dt: p.dt_s,
    };
    let r = dynamics::saw_pulse(cfg, &opts)?;
    let trace = trace_table("saw_pulse.csv", &r.trace)
        .meta("pulse_length_s", p.pulse_length_s)
        .meta("detuning_hz", p.detuning_hz);
    let mut summary = Table::new(
        "saw_pulse_summary.csv",
        &[
            ("transit_time_s", "s"),
            ("incident_energy", "phonons"),
            ("reflected_energy", "phonons"),
            ("transmitted_energy", "phonons"),
        ],
    );
    summary.push(vec![r.transit_time.into(), r.incident_energy.into(), r.reflected_energy.into(), r.transmitted_energy.into()]);
    let mut out = Outputs::new();
    out.notes.push(format!("transit {:.2} ns", r.transit_time * 1e9));
    out.tables.push(trace);
    out.tables.push(summary);
    Ok(out)
}

fn trap_run(cfg: &DeviceConfig, p: &TrapParams) -> Result<Outputs> {
    let mut rates = Rates::from_config(cfg);
    if let Some(g) = p.gamma_phi_hz {
        rates.gamma_phi = g;
    }
    let plan = CatchRelease {
        separation: p.separation_m,
        pulse_length: p.pulse_length_s,
        peak_rabi: p.peak_rabi_hz,
        catch_delay: p.catch_delay_s,
        ramp: p.ramp_s,
        release_time: p.release_time_s,
        duration: p.duration_s,
        far_detuning: p.far_detuning_hz,
        dt: p.dt_s,
        direction: p.release_direction,
    };
    let schedule = TrapSchedule::catch_and_release(cfg, &plan)?;
    let r = trap::simulate_trap(&schedule, &rates)?;
    let mut cols = TRACE_COLUMNS.to_vec();
    cols.push(("cavity_energy", "1"));
    let mut t = Table::new("trap.csv", &cols)
        .meta("reference", "incident into transmon 1 from the left; reflected = left output; transmitted = right output")
        .meta("separation_m", schedule.separation)
        .meta("release_direction", format!("{:?}", p.release_direction).to_lowercase())
        .meta("cavity_energy", "relative to the input pulse energy");
    let input = &schedule.input_pulse;
    for i in (0..input.len()).step_by(p.stride) {
        let mut row = trace_row(input.time(i), input.values[i], r.left_out.values[i], r.right_out.values[i]);
        row.push(r.cavity_energy[i].into());
        t.push(row);
    }
    let (left, right) = r.output_energy();
    let (rel_left, rel_right) = r.output_after(p.release_time_s);
    let mut summary = Table::new(
        "trap_summary.csv",
        &[
            ("left_energy", "1"),
            ("right_energy", "1"),
            ("released_left", "1"),
            ("released_right", "1"),
            ("final_cavity_energy", "1"),
        ],
    );
    let final_cavity = r.cavity_energy.last().copied().unwrap_or(0.0);
    summary.push(vec![left.into(), right.into(), rel_left.into(), rel_right.into(), final_cavity.into()]);
    let mut out = Outputs::new();
    for j in &r.jumps {
        out.notes.push(format!("warning: detuning jumps at t = {j:.3e} s"));
    }
    out.notes.push(format!("emitted {:.4} of the input energy ({:.4} left, {:.4} right)", left + right, left, right));
    out.tables.push(t);
    out.tables.push(summary);
    Ok(out)
}

fn sweep_table(name: &str, data: &SweepData) -> Table {
    let mut t = Table::new(name, &[("power_w", "W"), ("R", "1"), ("T", "1"), ("weight", "1")]);
    for r in &data.rows {
        t.push(vec![r.power.into(), r.r.into(), r.t.into(), r.weight.into()]);
    }
    t
}

fn fit_columns() -> [(&'static str, &'static str); 8] {
    [
        ("k", "Hz/sqrt(W)"),
        ("gamma_phi_hz", "Hz"),
        ("residual_norm", "1"),
        ("iterations", "1"),
        ("sigma_k", "Hz/sqrt(W)"),
        ("sigma_gamma_phi_hz", "Hz"),
        ("condition_number", "1"),
        ("ill_conditioned", "bool"),
    ]
}

fn fit_row(f: &FitResult) -> Vec<Cell> {
    vec![
        f.k.into(),
        f.gamma_phi.into(),
        f.residual_norm.into(),
        f.iterations.into(),
        f.covariance[0][0].max(0.0).sqrt().into(),
        f.covariance[1][1].max(0.0).sqrt().into(),
        f.condition_number.into(),
        f.ill_conditioned.into(),
    ]
}

fn fit_run(cfg: &DeviceConfig, p: &FitParams, base: &Path, seed: Option<u64>, exec: Execution) -> Result<Outputs> {
    let seed = seed.unwrap_or(p.seed);
    let gamma01 = cfg.transmon.acoustic_coupling;
    let mut out = Outputs::new();
    let mut synth = None;
    let data = match &p.data {
        Some(path) => SweepData::from_csv_path(&base.join(path))?,
        None => {
            let s = p.synthetic.clone().unwrap_or_default();
            let k = s.k.unwrap_or(cfg.rabi_per_sqrt_watt);
            let rates = Rates::new(gamma01, s.gamma_phi_hz.unwrap_or(cfg.transmon.dephasing_rate));
            let powers = fit::log_spaced(s.power_min_w, s.power_max_w, s.points);
            let data = fit::synthetic_sweep(k, &rates, &powers, s.noise, seed);
            out.seed = Some(seed);
            out.tables.push(
                sweep_table("sweep_data.csv", &data)
                    .meta("k_true", k)
                    .meta("gamma_phi_true_hz", rates.gamma_phi)
                    .meta("noise", s.noise)
                    .meta("seed", seed),
            );
            synth = Some((k, rates, powers, s.noise));
            data
        }
    };
    let opts = FitOptions {
        reflection_weight: p.reflection_weight,
        transmission_weight: p.transmission_weight,
        ..FitOptions::new(gamma01)
    };
    let result = fit::fit_power_sweep(&data, &opts)?;
    let mut t = Table::new("fit_result.csv", &fit_columns()).meta("gamma01_hz", gamma01);
    t.push(fit_row(&result));
    out.tables.push(t);
    out.texts.push(("fit_result.txt".into(), result.to_key_values()));
    if result.ill_conditioned {
        out.notes.push("warning: fit is ill-conditioned; the data may not constrain both parameters".into());
    }
    out.notes.push(format!("k = {:.6e} Hz/sqrt(W), gamma_phi = {:.6e} Hz", result.k, result.gamma_phi));

    if p.monte_carlo_runs > 0 {
        let (k, rates, powers, noise) = synth.ok_or_else(|| {
            Error::validation("monte_carlo_runs", "repetitions need synthetic data")
        })?;
        let seeds: Vec<u64> = (1..=p.monte_carlo_runs as u64).map(|i| seed.wrapping_add(i)).collect();
        let fits = fit::monte_carlo(k, &rates, &powers, noise, &seeds, exec);
        let mut cols = vec![("seed", "1")];
        cols.extend(fit_columns());
        let mut mc = Table::new("fit_monte_carlo.csv", &cols);
        let mut gphi = Vec::new();
        for (s, f) in seeds.iter().zip(fits) {
            let f = f?;
            gphi.push(f.gamma_phi);
            let mut row = vec![Cell::from(*s)];
            row.extend(fit_row(&f));
            mc.push(row);
        }
        out.notes.push(format!("median gamma_phi over {} runs = {:.6e} Hz", gphi.len(), fit::median(&mut gphi)));
        out.tables.push(mc);
    }
    Ok(out)
}

fn load_spectrum(path: &Path) -> Result<Spectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = csv::parse_rows(&text, &["frequency_hz", "re", "im"]).map_err(|r| Error::validation(path.display().to_string(), r))?;
    if rows.len() < 2 {
        return Err(Error::validation("spectrum", "needs at least two rows"));
    }
    let df = rows[1][0] - rows[0][0];
    let uniform = rows.windows(2).all(|w| ((w[1][0] - w[0][0]) - df).abs() <= 1e-9 * df.abs());
    if !(df > 0.0 && uniform) {
        return Err(Error::validation("spectrum", "frequencies must be uniform and increasing"));
    }
    Ok(Spectrum { f0: rows[0][0], df, values: rows.iter().map(|r| Complex64::new(r[1], r[2])).collect() })
}

/// Main transit, one echo and an optional instantaneous crosstalk term.
fn synthetic_spectrum(cfg: &DeviceConfig, p: &GateFilterParams) -> Spectrum {
    let v0 = cfg.material.sound_velocity;
    let main = p.main_delay_s.unwrap_or(
        channel::transit_delay(cfg.geometry.dist_idt_a_qubit, v0) + channel::transit_delay(cfg.geometry.dist_idt_b_qubit, v0),
    );
    let echo = p.echo_delay_s.unwrap_or(2.0 * main);
    let df = p.span_hz / p.points as f64;
    let f0 = cfg.carrier_frequency() - 0.5 * p.span_hz;
    let values = (0..p.points)
        .map(|m| {
            let f = m as f64 * df;
            let path = |tau: f64| Complex64::from_polar(1.0, -crate::TWO_PI * f * tau);
            path(main) + path(echo) * p.echo_amplitude + p.crosstalk
        })
        .collect();
    Spectrum { f0, df, values }
}

fn gate_filter(cfg: &DeviceConfig, p: &GateFilterParams, base: &Path) -> Result<Outputs> {
    let raw = match &p.data {
        Some(path) => load_spectrum(&base.join(path))?,
        None => synthetic_spectrum(cfg, p),
    };
    let gated = channel::time_gate(&raw, p.gate_start_s, p.gate_stop_s, p.taper)?;
    let mut t = Table::new(
        "gate_filter.csv",
        &[("frequency_hz", "Hz"), ("raw_re", "1"), ("raw_im", "1"), ("gated_re", "1"), ("gated_im", "1")],
    )
    .meta("gate_s", format!("{:e} to {:e}", p.gate_start_s, p.gate_stop_s))
    .meta("taper", p.taper);
    for (i, (a, b)) in raw.values.iter().zip(&gated.values).enumerate() {
        t.push(vec![raw.frequency(i).into(), a.re.into(), a.im.into(), b.re.into(), b.im.into()]);
    }
    let mut out = Outputs::new();
    out.tables.push(t);
    Ok(out)
}

fn derived(cfg: &DeviceConfig) -> Result<Outputs> {
    let s = device::derived_summary(cfg)?;
    let mut t = Table::new("derived_summary.csv", &[("quantity", "-"), ("value", "see unit"), ("unit", "-"), ("quoted", "see unit")]);
    for row in s.rows() {
        t.push(vec![row.name.into(), row.value.into(), row.unit.into(), row.quoted.into()]);
    }
    let mut out = Outputs::new();
    out.texts.push(("derived_summary.txt".into(), s.to_text()));
    out.tables.push(t);
    Ok(out)
}
