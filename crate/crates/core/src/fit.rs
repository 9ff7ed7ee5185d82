//! Recovery of the drive calibration `k` and the pure dephasing rate Γφ from
//! simultaneous on-resonance reflectance/transmittance power sweeps.
//!
//! The model is the on-resonance reflection `r = −r0/(1 + k²P/(Γ01·γ01))` with
//! `R = r²` and `T = (1 + r)²`. Both channels are fitted jointly with a
//! damped Gauss-Newton (Levenberg-Marquardt) iteration in the parameters
//! `ln k` and `ln(Γφ + 1 Hz)`, which keeps `k > 0` and `Γφ > −1 Hz` without
//! explicit constraints.

use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::scattering::{max_reflection, Rates};
use crate::{Error, Execution, Result};

const DEPHASING_OFFSET: f64 = 1.0;
const MAX_SWEEP_VALUE: f64 = 1.2;
const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub power: f64,
    pub r: f64,
    pub t: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepData {
    pub rows: Vec<SweepRow>,
}

impl SweepData {
    pub fn new(rows: Vec<SweepRow>) -> Result<Self> {
        let data = SweepData { rows };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if !(w[1].power > w[0].power) {
                return Err(Error::validation("power_w", "powers must be strictly increasing"));
            }
        }
        for row in &self.rows {
            if !(row.power > 0.0 && row.power.is_finite()) {
                return Err(Error::validation("power_w", format!("must be > 0, got {}", row.power)));
            }
            for (name, v) in [("R", row.r), ("T", row.t)] {
                if !(0.0..=MAX_SWEEP_VALUE).contains(&v) {
                    return Err(Error::validation(name, format!("must lie in [0, {MAX_SWEEP_VALUE}], got {v}")));
                }
            }
            if !(row.weight >= 0.0 && row.weight.is_finite()) {
                return Err(Error::validation("weight", format!("must be >= 0, got {}", row.weight)));
            }
        }
        Ok(())
    }

    /// Parses CSV with header `power_w,R,T,weight`; `#` lines are comments.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        let mut reader = reader;
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::validation("sweep csv", e.to_string()))?;
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::validation("sweep csv", "empty file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["power_w", "R", "T", "weight"] {
            return Err(Error::validation("sweep csv", format!("expected header power_w,R,T,weight, got {header}")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::validation("sweep csv", format!("row {}: {e}", i + 1)))?;
            if vals.len() != 4 {
                return Err(Error::validation("sweep csv", format!("row {}: expected 4 columns", i + 1)));
            }
            rows.push(SweepRow { power: vals[0], r: vals[1], t: vals[2], weight: vals[3] });
        }
        SweepData::new(rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Hz/√W
    pub k: f64,
    /// Hz
    pub gamma_phi: f64,
    /// √(Σ weight·residual²)
    pub residual_norm: f64,
    pub iterations: usize,
    /// Covariance of (k, Γφ), scaled by the residual variance.
    pub covariance: [[f64; 2]; 2],
    /// Condition number of the Gauss-Newton matrix at the solution.
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

impl FitResult {
    pub fn to_key_values(&self) -> String {
        format!(
            "k={:.12e}\ngamma_phi={:.12e}\nresidual_norm={:.12e}\niterations={}\nill_conditioned={}\n",
            self.k, self.gamma_phi, self.residual_norm, self.iterations, self.ill_conditioned
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fixed Γ01 in Hz.
    pub gamma01: f64,
    pub max_iterations: usize,
    /// Convergence on the largest log-parameter step.
    pub step_tolerance: f64,
    pub reflection_weight: f64,
    pub transmission_weight: f64,
}

impl FitOptions {
    pub fn new(gamma01: f64) -> Self {
        FitOptions {
            gamma01,
            max_iterations: 200,
            step_tolerance: 1e-10,
            reflection_weight: 1.0,
            transmission_weight: 1.0,
        }
    }
}

/// On-resonance reflection amplitude and its derivatives with respect to
/// `ln k` and `ln(Γφ + 1 Hz)`.
fn model(power: f64, log_k: f64, log_phi: f64, gamma01: f64) -> (f64, f64, f64) {
    let k = log_k.exp();
    let phi_shift = log_phi.exp();
    let gphi = phi_shift - DEPHASING_OFFSET;
    let gamma = 0.5 * gamma01 + gphi;
    let r0 = gamma01 / (gamma01 + 2.0 * gphi);
    let x = k * k * power / (gamma01 * gamma);
    let r = -r0 / (1.0 + x);
    let d_logk = 2.0 * x * r0 / (1.0 + x).powi(2);
    let dr0 = -2.0 * r0 * r0 / gamma01;
    let dx = -x / gamma;
    let d_gphi = -(dr0 / (1.0 + x) - r0 * dx / (1.0 + x).powi(2));
    (r, d_logk, d_gphi * phi_shift)
}

struct Problem<'a> {
    data: &'a SweepData,
    opts: FitOptions,
}

impl Problem<'_> {
    fn residuals(&self, p: [f64; 2], jac: Option<&mut Vec<[f64; 2]>>) -> Vec<f64> {
        let mut res = Vec::with_capacity(2 * self.data.rows.len());
        let mut j = Vec::with_capacity(2 * self.data.rows.len());
        for row in &self.data.rows {
            let (r, dr_k, dr_p) = model(row.power, p[0], p[1], self.opts.gamma01);
            let wr = (row.weight * self.opts.reflection_weight).sqrt();
            let wt = (row.weight * self.opts.transmission_weight).sqrt();
            res.push(wr * (r * r - row.r));
            res.push(wt * ((1.0 + r).powi(2) - row.t));
            let gr = 2.0 * r * wr;
            let gt = 2.0 * (1.0 + r) * wt;
            j.push([gr * dr_k, gr * dr_p]);
            j.push([gt * dr_k, gt * dr_p]);
        }
        if let Some(out) = jac {
            *out = j;
        }
        res
    }

    fn cost(&self, p: [f64; 2]) -> f64 {
        self.residuals(p, None).iter().map(|r| r * r).sum()
    }
}

/// Closed-form starting point: Γφ from the low-power plateau through r0,
/// k from the power at which the reflection amplitude halves.
pub fn initial_guess(data: &SweepData, gamma01: f64) -> (f64, f64) {
    let amp = |row: &SweepRow| {
        let from_t = 1.0 - row.t.clamp(0.0, 1.0).sqrt();
        let from_r = row.r.clamp(0.0, 1.0).sqrt();
        0.5 * (from_t + from_r)
    };
    let first = &data.rows[0];
    let r0 = amp(first).clamp(1e-3, 1.0);
    let gphi = (0.5 * gamma01 * (1.0 / r0 - 1.0)).max(0.0);
    let gamma = 0.5 * gamma01 + gphi;
    let mut p_half = data.rows.last().map(|r| r.power).unwrap_or(1.0);
    for w in data.rows.windows(2) {
        let (a0, a1) = (amp(&w[0]), amp(&w[1]));
        if a0 >= 0.5 * r0 && a1 < 0.5 * r0 {
            let s = (a0 - 0.5 * r0) / (a0 - a1);
            p_half = (w[0].power.ln() + s * (w[1].power.ln() - w[0].power.ln())).exp();
            break;
        }
    }
    if amp(first) < 0.5 * r0 {
        p_half = first.power;
    }
    ((gamma01 * gamma / p_half).sqrt(), gphi)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

fn normal_matrix(jac: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let mut a = [[0.0; 2]; 2];
    for row in jac {
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    a
}

fn condition_number(a: [[f64; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (hi, lo) = (0.5 * tr + disc, 0.5 * tr - disc);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn summarize(problem: &Problem, p: [f64; 2], iterations: usize) -> FitResult {
    let mut jac = Vec::new();
    let res = problem.residuals(p, Some(&mut jac));
    let cost: f64 = res.iter().map(|r| r * r).sum();
    let k = p[0].exp();
    let shift = p[1].exp();
    // Jacobian in natural parameters (k, Γφ).
    let nat: Vec<[f64; 2]> = jac.iter().map(|j| [j[0] / k, j[1] / shift]).collect();
    let a = normal_matrix(&nat);
    let dof = res.len().saturating_sub(2).max(1) as f64;
    let sigma2 = cost / dof;
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let covariance = if det != 0.0 && det.is_finite() {
        [
            [sigma2 * a[1][1] / det, -sigma2 * a[0][1] / det],
            [-sigma2 * a[1][0] / det, sigma2 * a[0][0] / det],
        ]
    } else {
        [[f64::INFINITY; 2]; 2]
    };
    let cond = condition_number(normal_matrix(&jac));
    FitResult {
        k,
        gamma_phi: (shift - DEPHASING_OFFSET).max(0.0),
        residual_norm: cost.sqrt(),
        iterations,
        covariance,
        condition_number: cond,
        ill_conditioned: !(cond < ILL_CONDITIONED),
    }
}

/// Joint least-squares fit of `(k, Γφ)` with Γ01 held fixed.
pub fn fit_power_sweep(data: &SweepData, opts: &FitOptions) -> Result<FitResult> {
    data.validate()?;
    if data.rows.len() < 5 {
        return Err(Error::validation("sweep", format!("need at least 5 rows, got {}", data.rows.len())));
    }
    if !(opts.gamma01 > 0.0 && opts.gamma01.is_finite()) {
        return Err(Error::validation("gamma01", format!("must be > 0, got {}", opts.gamma01)));
    }
    let problem = Problem { data, opts: *opts };
    let (k0, g0) = initial_guess(data, opts.gamma01);
    let mut p = [k0.ln(), (g0 + DEPHASING_OFFSET).ln()];
    let mut cost = problem.cost(p);
    let mut lambda = 1e-3;
    let mut jac = Vec::new();
    for iter in 1..=opts.max_iterations {
        let res = problem.residuals(p, Some(&mut jac));
        let a = normal_matrix(&jac);
        let mut g = [0.0; 2];
        for (r, j) in res.iter().zip(&jac) {
            g[0] += j[0] * r;
            g[1] += j[1] * r;
        }
        let mut accepted = false;
        let mut step = [0.0; 2];
        for _ in 0..60 {
            let damped = [
                [a[0][0] * (1.0 + lambda), a[0][1]],
                [a[1][0], a[1][1] * (1.0 + lambda)],
            ];
            let Some(d) = solve2(damped, [-g[0], -g[1]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + d[0], p[1] + d[1]];
            let c = problem.cost(trial);
            if c.is_finite() && c <= cost {
                p = trial;
                cost = c;
                step = d;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        let max_step = step[0].abs().max(step[1].abs());
        if !accepted || max_step < opts.step_tolerance || cost == 0.0 {
            return Ok(summarize(&problem, p, iter));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        best: Box::new(summarize(&problem, p, opts.max_iterations)),
    })
}

/// `n` powers spaced evenly in log between `p_min` and `p_max`.
pub fn log_spaced(p_min: f64, p_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![p_min];
    }
    let (a, b) = (p_min.ln(), p_max.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Sweep generated from the on-resonance model with additive Gaussian noise
/// of standard deviation `noise` on R and T.
pub fn synthetic_sweep(k: f64, rates: &Rates, powers: &[f64], noise: f64, seed: u64) -> SweepData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite sigma");
    let r0 = max_reflection(rates.gamma01, rates.gamma_phi);
    let rows = powers
        .iter()
        .map(|&p| {
            let r = -r0 / (1.0 + k * k * p / (rates.gamma01 * rates.decoherence()));
            let (mut rr, mut tt) = (r * r, (1.0 + r).powi(2));
            if noise > 0.0 {
                rr += normal.sample(&mut rng);
                tt += normal.sample(&mut rng);
            }
            SweepRow {
                power: p,
                r: rr.clamp(0.0, MAX_SWEEP_VALUE),
                t: tt.clamp(0.0, MAX_SWEEP_VALUE),
                weight: 1.0,
            }
        })
        .collect();
    SweepData { rows }
}

/// Repeated fits of noisy synthetic sweeps, one per seed, in seed order.
pub fn monte_carlo(
    k: f64,
    rates: &Rates,
    powers: &[f64],
    noise: f64,
    seeds: &[u64],
    exec: Execution,
) -> Vec<Result<FitResult>> {
    let opts = FitOptions::new(rates.gamma01);
    exec.map(seeds, |&seed| {
        let data = synthetic_sweep(k, rates, powers, noise, seed);
        fit_power_sweep(&data, &opts)
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K_TRUE: f64 = 2.0e14;

    fn powers() -> Vec<f64> {
        // four decades around the half-saturation power 9.7e-15 W
        log_spaced(1e-16, 1e-12, 30)
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for &(lk, lp) in &[(K_TRUE.ln(), 8e6f64.ln()), (30.0, 0.0), (33.0, 17.0)] {
            for &p in &[1e-16, 1e-14, 1e-12] {
                let (_, dk, dp) = model(p, lk, lp, 21e6);
                let h = 1e-6;
                let fk = (model(p, lk + h, lp, 21e6).0 - model(p, lk - h, lp, 21e6).0) / (2.0 * h);
                let fp = (model(p, lk, lp + h, 21e6).0 - model(p, lk, lp - h, 21e6).0) / (2.0 * h);
                assert!((dk - fk).abs() < 1e-7, "{dk} {fk}");
                assert!((dp - fp).abs() < 1e-7, "{dp} {fp}");
            }
        }
    }

    #[test]
    fn noiseless_recovery() {
        let rates = Rates::new(21e6, 8e6);
        let data = synthetic_sweep(K_TRUE, &rates, &powers(), 0.0, 0);
        let fit = fit_power_sweep(&data, &FitOptions::new(21e6)).unwrap();
        assert!((fit.k / K_TRUE - 1.0).abs() < 1e-3, "{}", fit.k);
        assert!((fit.gamma_phi / 8e6 - 1.0).abs() < 1e-3, "{}", fit.gamma_phi);
        assert!(fit.residual_norm < 1e-10, "{}", fit.residual_norm);
        assert!(!fit.ill_conditioned);
    }

    #[test]
    fn zero_dephasing_boundary() {
        let rates = Rates::new(21e6, 0.0);
        let data = synthetic_sweep(K_TRUE, &rates, &powers(), 0.0, 0);
        let fit = fit_power_sweep(&data, &FitOptions::new(21e6)).unwrap();
        assert!(fit.gamma_phi >= 0.0);
        assert!(fit.gamma_phi < 1e3, "{}", fit.gamma_phi);
        assert!((fit.k / K_TRUE - 1.0).abs() < 1e-3);
    }

    #[test]
    fn saturated_data_is_flagged() {
        let rates = Rates::new(21e6, 8e6);
        let data = synthetic_sweep(K_TRUE, &rates, &log_spaced(1e-9, 1e-6, 10), 0.0, 0);
        match fit_power_sweep(&data, &FitOptions::new(21e6)) {
            Ok(fit) => assert!(fit.ill_conditioned, "cond {}", fit.condition_number),
            Err(Error::NoConvergence { best, .. }) => assert!(best.ill_conditioned),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn too_few_rows() {
        let rates = Rates::new(21e6, 8e6);
        let data = synthetic_sweep(K_TRUE, &rates, &log_spaced(1e-16, 1e-12, 4), 0.0, 0);
        assert!(fit_power_sweep(&data, &FitOptions::new(21e6)).is_err());
    }

    #[test]
    fn csv_parsing() {
        let text = "# synthetic\npower_w,R,T,weight\n1e-15,0.3,0.2,1\n2e-15,0.25,0.3,1\n";
        let d = SweepData::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[1].power, 2e-15);
        assert!(SweepData::from_csv_reader("power,R,T\n".as_bytes()).is_err());
        let bad = "power_w,R,T,weight\n2e-15,0.3,0.2,1\n1e-15,0.25,0.3,1\n";
        assert!(SweepData::from_csv_reader(bad.as_bytes()).is_err());
        let over = "power_w,R,T,weight\n1e-15,1.3,0.2,1\n";
        assert!(SweepData::from_csv_reader(over.as_bytes()).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
