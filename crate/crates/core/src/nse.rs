//! Small-data Navier–Stokes on a periodic box: Leray projection, the
//! Oseen–Duhamel operator by exponential time differencing, Picard
//! iteration with contraction bookkeeping, weighted monitoring and the
//! amplitude-threshold splitting of a datum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{classify_regularity, RegularityClass};
use crate::error::{Error, Result};
use crate::grids::time_norm;
use crate::index::{ExtReal, IndexTuple};
use crate::spectral::{fft3, SpectralField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn need_vector(f: &SpectralField) -> Result<()> {
    if f.components() != 3 {
        return Err(Error::Config(format!("expected a 3-component field, got {}", f.components())));
    }
    Ok(())
}

fn project_mode(xi: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if k2 == 0.0 {
        return v;
    }
    let d = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / k2;
    [v[0] - d * xi[0], v[1] - d * xi[1], v[2] - d * xi[2]]
}

/// `Pf = f − ∇Δ⁻¹∇·f`; the zero mode is left untouched.
pub fn leray_project(f: &SpectralField) -> Result<SpectralField> {
    need_vector(f)?;
    f.map_modes(3, |xi, _, v| project_mode(xi, [v[0], v[1], v[2]]).to_vec())
}

/// `e^{tΔ} f`.
pub fn heat_flow(f: &SpectralField, t: f64) -> Result<SpectralField> {
    f.multiplier(|xi| (-t * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])).exp())
}

fn wavenumber_squared(f: &SpectralField) -> Vec<f64> {
    (0..f.len())
        .map(|idx| {
            let xi = f.wavevector(idx);
            xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
        })
        .collect()
}

/// Keeps modes with every `|m_j| <= N/3`.
fn dealiased(f: &SpectralField, idx: usize) -> bool {
    let cut = (f.resolution / 3) as i64;
    f.mode(idx).iter().all(|m| m.abs() <= cut)
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Coefficients of the dealiased symmetric product `u ⊗ v`.
fn product_hat(u: &SpectralField, v: &SpectralField) -> Vec<Vec<Complex64>> {
    let n = u.resolution;
    let scale = 1.0 / u.len() as f64;
    let keep: Vec<bool> = (0..u.len()).map(|idx| dealiased(u, idx)).collect();
    PAIRS
        .par_iter()
        .map(|&(a, b)| {
            let mut z: Vec<Complex64> = (0..u.len())
                .map(|k| Complex64::new(0.5 * (u.real[a][k] * v.real[b][k] + u.real[b][k] * v.real[a][k]), 0.0))
                .collect();
            fft3(&mut z, n, false);
            z.iter_mut().zip(&keep).for_each(|(w, &k)| *w = if k { *w * scale } else { ZERO });
            z
        })
        .collect()
}

/// Symmetric tensor `u ⊗ v` (components `11, 12, 13, 22, 23, 33`),
/// dealiased by the 2/3 rule.
pub fn outer(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    need_vector(u)?;
    need_vector(v)?;
    if u.box_len != v.box_len || u.resolution != v.resolution {
        return Err(Error::Config("spectral fields live on different boxes".into()));
    }
    SpectralField::from_hat(u.box_len, u.resolution, u.center, product_hat(u, v))
}

fn tensor_entry(w: &[Vec<Complex64>], idx: usize, i: usize, j: usize) -> Complex64 {
    const SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    w[SLOT[i][j]][idx]
}

/// Coefficients of `P∇·F` from those of a symmetric tensor.
fn forcing_hat(geom: &SpectralField, tensor: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let modes: Vec<[Complex64; 3]> = (0..geom.len())
        .into_par_iter()
        .map(|idx| {
            if geom.is_nyquist(idx) {
                return [ZERO; 3];
            }
            let xi = geom.wavevector(idx);
            let mut g = [ZERO; 3];
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = (0..3).map(|j| I * xi[j] * tensor_entry(tensor, idx, i, j)).sum();
            }
            project_mode(xi, g)
        })
        .collect();
    (0..3).map(|c| modes.iter().map(|m| m[c]).collect()).collect()
}

/// `P∇·F` for a symmetric tensor `F` (6 components).
pub fn oseen_forcing(tensor: &SpectralField) -> Result<SpectralField> {
    if tensor.components() != 6 {
        return Err(Error::Config("forcing expects a symmetric tensor with 6 components".into()));
    }
    SpectralField::from_hat(tensor.box_len, tensor.resolution, tensor.center, forcing_hat(tensor, &tensor.hat))
}

/// `φ₁(z) = (1 − e^{−z})/z` and `ψ(z) = (z − 1 + e^{−z})/z²`.
fn etd_weights(z: f64) -> (f64, f64) {
    if z < 1e-4 {
        (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0, 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (z - 1.0 + e) / (z * z))
    }
}

fn check_times(count: usize, times: &[f64]) -> Result<()> {
    if count != times.len() || times.is_empty() || times[0] != 0.0 {
        return Err(Error::Config("duhamel needs one tensor per time sample, starting at t = 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("time samples must increase".into()));
    }
    Ok(())
}

/// Exponential time differencing over the samples, given the coefficients
/// of `P∇·F` at each one.
fn duhamel_from_forcing(geom: &SpectralField, g: &[Vec<Vec<Complex64>>], times: &[f64]) -> Result<Vec<SpectralField>> {
    let k2 = wavenumber_squared(geom);
    let mut d = vec![vec![ZERO; geom.len()]; 3];
    let mut out = vec![SpectralField::zeros(geom.box_len, geom.resolution, geom.center, 3)?];
    for m in 1..times.len() {
        let h = times[m] - times[m - 1];
        let weights: Vec<(f64, f64, f64)> = k2
            .iter()
            .map(|&k| {
                let z = h * k;
                let (phi, psi) = etd_weights(z);
                ((-z).exp(), h * (phi - psi), h * psi)
            })
            .collect();
        for (c, dc) in d.iter_mut().enumerate() {
            for (idx, v) in dc.iter_mut().enumerate() {
                let (e, w0, w1) = weights[idx];
                *v = *v * e + g[m - 1][c][idx] * w0 + g[m][c][idx] * w1;
            }
        }
        out.push(SpectralField::from_hat(geom.box_len, geom.resolution, geom.center, d.clone())?);
    }
    Ok(out)
}

/// `D(t_m) = ∫₀^{t_m} e^{(t_m − s)Δ} P∇·F(s) ds` at every sample, with
/// `P∇·F` interpolated linearly in `s` and integrated exactly per mode.
/// `times` must start at 0.
pub fn duhamel_step(forcing: &[SpectralField], times: &[f64]) -> Result<Vec<SpectralField>> {
    check_times(forcing.len(), times)?;
    if forcing.iter().any(|f| f.components() != 6) {
        return Err(Error::Config("forcing expects a symmetric tensor with 6 components".into()));
    }
    let g: Vec<Vec<Vec<Complex64>>> = forcing.iter().map(|f| forcing_hat(f, &f.hat)).collect();
    duhamel_from_forcing(&forcing[0], &g, times)
}

/// Compactly supported Taylor–Green-type datum: the curl of
/// `(0, 0, A φ(|x|/a) sin(kx) sin(ky) / k)` with the bump
/// `φ(ρ) = exp(1 − 1/(1 − ρ²))`, so `u₀` is divergence-free and mean-zero.
pub fn taylor_green_datum(box_len: f64, resolution: usize, amplitude: f64, radius: f64, wavenumber: f64) -> Result<SpectralField> {
    if !(radius > 0.0 && wavenumber > 0.0) {
        return Err(Error::Config("datum radius and wavenumber must be positive".into()));
    }
    let psi = SpectralField::from_fn(box_len, resolution, [0.0; 3], 1, |x| {
        let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() / radius;
        let bump = if rho < 1.0 { (1.0 - 1.0 / (1.0 - rho * rho)).exp() } else { 0.0 };
        vec![amplitude * bump * (wavenumber * x[0]).sin() * (wavenumber * x[1]).sin() / wavenumber]
    })?;
    psi.map_modes(3, |xi, idx, v| {
        if psi.is_nyquist(idx) {
            return vec![ZERO; 3];
        }
        vec![I * xi[1] * v[0], -I * xi[0] * v[0], ZERO]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub horizon: f64,
    /// Number of time samples on `[0, horizon]`, endpoints included.
    pub steps: usize,
    pub max_iter: usize,
    pub monitor: IndexTuple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardStop {
    Converged,
    /// Differences reached the roundoff floor and stopped contracting.
    Stagnated,
    Diverged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardTrace {
    pub times: Vec<f64>,
    /// First iterate (the heat flow of the datum).
    pub first: Vec<SpectralField>,
    /// Last iterate.
    pub last: Vec<SpectralField>,
    /// `‖u_k − u_{k−1}‖` in the monitor norm, `k = 1, 2, …` (`u_0 = 0`).
    pub diff_norms: Vec<f64>,
    /// The same differences at each time sample, before the time norm.
    pub diff_series: Vec<Vec<f64>>,
    pub contraction_ratios: Vec<f64>,
    /// Largest relative spectral divergence over the samples of each iterate.
    pub divergence: Vec<f64>,
    /// Monitor norm of the datum.
    pub datum_norm: f64,
    /// Empirical `4 d₀ c₀ ε` from the first two differences.
    pub smallness: Option<f64>,
    pub stop: PicardStop,
}

fn monitor_exponents(t: &IndexTuple) -> Result<(f64, ExtReal, ExtReal, ExtReal)> {
    Ok((t.req_alpha()?, t.req_p()?, t.req_p_tilde()?, t.s.unwrap_or(ExtReal::Infinity)))
}

/// `‖|x|^α u(t)‖_{L^p L^p̃}` at every sample.
pub fn norm_series(traj: &[SpectralField], monitor: &IndexTuple) -> Result<Vec<f64>> {
    let (alpha, p, pt, _) = monitor_exponents(monitor)?;
    traj.iter().map(|u| u.mixed_norm(alpha, p, pt)).collect()
}

/// `‖|x|^α u‖_{L^s_t L^p L^p̃}` of a sampled trajectory.
pub fn trajectory_norm(traj: &[SpectralField], times: &[f64], monitor: &IndexTuple) -> Result<f64> {
    let norms = norm_series(traj, monitor)?;
    if times.len() == 1 {
        return Ok(norms[0]);
    }
    time_norm(times, &norms, monitor.s.unwrap_or(ExtReal::Infinity))
}

/// Picard iteration `u_{k+1} = e^{tΔ}u₀ − ∫₀^t e^{(t−s)Δ}P∇·(u_k ⊗ u_k) ds`
/// from `u_0 = 0`.
pub fn picard_iterate(u0: &SpectralField, cfg: &PicardConfig) -> Result<PicardTrace> {
    need_vector(u0)?;
    if cfg.steps < 2 || !(cfg.horizon > 0.0) || cfg.max_iter == 0 {
        return Err(Error::Config("picard needs horizon > 0, at least 2 time samples and 1 iteration".into()));
    }
    let quarter = u0.box_len / 4.0;
    let outside = u0.energy_outside(quarter);
    if outside > 1e-3 {
        return Err(Error::Config(format!(
            "datum carries {outside:.3e} of its energy beyond L/4 = {quarter} from the center; weighted norms would feel the periodization"
        )));
    }
    let amp = u0.hat.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mean = (0..3).map(|c| u0.hat[c][0].norm()).fold(0.0, f64::max);
    if mean > 1e-12 * amp.max(f64::MIN_POSITIVE) {
        return Err(Error::Config("datum must have zero mean".into()));
    }
    if u0.divergence_residual() > 1e-10 {
        return Err(Error::Config(format!(
            "datum is not divergence-free (relative residual {:.3e})",
            u0.divergence_residual()
        )));
    }
    let times: Vec<f64> = (0..cfg.steps)
        .map(|m| cfg.horizon * m as f64 / (cfg.steps - 1) as f64)
        .collect();
    let heat: Vec<SpectralField> = times.iter().map(|&t| heat_flow(u0, t)).collect::<Result<_>>()?;
    let datum_norm = trajectory_norm(std::slice::from_ref(u0), &[0.0], &cfg.monitor)?;

    let divergence_of = |traj: &[SpectralField]| traj.iter().map(|u| u.divergence_residual()).fold(0.0, f64::max);
    let mut prev = heat.clone();
    let s_exp = cfg.monitor.s.unwrap_or(ExtReal::Infinity);
    let mut diff_series = vec![norm_series(&heat, &cfg.monitor)?];
    let mut diff_norms = vec![time_norm(&times, &diff_series[0], s_exp)?];
    let mut divergence = vec![divergence_of(&heat)];
    let mut ratios = Vec::new();
    let mut stop = PicardStop::MaxIter;
    let scale = diff_norms[0];
    if scale == 0.0 {
        stop = PicardStop::Converged;
    }
    let mut growth = 0;
    while stop == PicardStop::MaxIter && diff_norms.len() < cfg.max_iter {
        let forcing: Vec<Vec<Vec<Complex64>>> = prev.iter().map(|u| forcing_hat(u, &product_hat(u, u))).collect();
        let duh = duhamel_from_forcing(u0, &forcing, &times)?;
        let next: Vec<SpectralField> = heat.iter().zip(&duh).map(|(h, d)| h.sub(d)).collect::<Result<_>>()?;
        let delta: Vec<SpectralField> = next.iter().zip(&prev).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        let series = norm_series(&delta, &cfg.monitor)?;
        let dn = time_norm(&times, &series, s_exp)?;
        diff_series.push(series);
        let last = *diff_norms.last().expect("non-empty");
        if last > 0.0 {
            ratios.push(dn / last);
        }
        divergence.push(divergence_of(&next));
        diff_norms.push(dn);
        prev = next;
        if !dn.is_finite() {
            stop = PicardStop::Diverged;
        } else if dn <= 1e-13 * scale {
            stop = PicardStop::Converged;
        } else if dn <= 1e-10 * scale && ratios.last().is_some_and(|&r| r > 0.9) {
            stop = PicardStop::Stagnated;
        } else if ratios.last().is_some_and(|&r| r > 1.0) {
            growth += 1;
            if growth >= 2 {
                stop = PicardStop::Diverged;
            }
        } else {
            growth = 0;
        }
    }
    let smallness = (diff_norms.len() >= 2 && diff_norms[0] > 0.0).then(|| 4.0 * diff_norms[1] / diff_norms[0]);
    Ok(PicardTrace {
        times,
        first: heat,
        last: prev,
        diff_norms,
        diff_series,
        contraction_ratios: ratios,
        divergence,
        datum_norm,
        smallness,
        stop,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub amplitudes: Vec<f64>,
    /// Largest contraction ratio of each run.
    pub worst_ratio: Vec<f64>,
    /// Largest divergence residual over the iterates of each run.
    pub divergence: Vec<f64>,
    pub stops: Vec<PicardStop>,
    /// Largest swept amplitude below which every run contracts by `1/2`.
    pub threshold: Option<f64>,
}

/// Runs Picard at each amplitude (scanned downward) and locates the
/// largest amplitude from which all smaller ones contract by at least `1/2`.
pub fn contraction_threshold(
    datum: impl Fn(f64) -> Result<SpectralField>,
    amplitudes: &[f64],
    cfg: &PicardConfig,
) -> Result<ThresholdSweep> {
    let mut amps = amplitudes.to_vec();
    amps.sort_by(|a, b| b.total_cmp(a));
    let (mut worst, mut divergence, mut stops) = (vec![], vec![], vec![]);
    for &a in &amps {
        let tr = picard_iterate(&datum(a)?, cfg)?;
        worst.push(tr.contraction_ratios.iter().cloned().fold(0.0, f64::max));
        divergence.push(tr.divergence.iter().cloned().fold(0.0, f64::max));
        stops.push(tr.stop);
    }
    let mut threshold = None;
    for (a, w) in amps.iter().zip(&worst).rev() {
        if *w > 0.5 {
            break;
        }
        threshold = Some(*a);
    }
    Ok(ThresholdSweep {
        amplitudes: amps,
        worst_ratio: worst,
        divergence,
        stops,
        threshold,
    })
}

/// Relative change of the datum's monitor norm when the box is doubled at
/// fixed spacing: an estimate of the periodization bias.
pub fn box_doubling_bias(
    datum: impl Fn(f64, usize) -> Result<SpectralField>,
    box_len: f64,
    resolution: usize,
    monitor: &IndexTuple,
) -> Result<f64> {
    let a = trajectory_norm(&[datum(box_len, resolution)?], &[0.0], monitor)?;
    let b = trajectory_norm(&[datum(2.0 * box_len, 2 * resolution)?], &[0.0], monitor)?;
    Ok((a - b).abs() / b.max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup: f64,
    /// `sup_t` of the first iterate over the datum norm, the empirical `c₀`.
    pub c0: f64,
    /// `sup < 2 c₀ ε` with `ε` the datum norm.
    pub within_bound: bool,
    pub class: Option<RegularityClass>,
    pub class_error: Option<String>,
}

/// Per-time weighted norms of the last iterate plus the angular regularity
/// class of the monitor exponents.
pub fn monitor_norms(trace: &PicardTrace, t: &IndexTuple) -> Result<MonitorReport> {
    let (alpha, p, pt, s) = monitor_exponents(t)?;
    let norms = norm_series(&trace.last, t)?;
    let first = norm_series(&trace.first, t)?;
    let sup = norms.iter().cloned().fold(0.0, f64::max);
    let eps = trace.datum_norm;
    let c0 = if eps > 0.0 { first.iter().cloned().fold(0.0, f64::max) / eps } else { 0.0 };
    let (class, class_error) = match classify_regularity(alpha, p, pt, s, t.n) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(MonitorReport {
        times: trace.times.clone(),
        norms,
        sup,
        c0,
        within_bound: sup <= 2.0 * c0 * eps,
        class,
        class_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBound {
    pub label: String,
    /// Weighted norm of the split component.
    pub lhs: f64,
    /// `‖|x|^{−1/2} u₀‖_{L² L^p̃}` raised to `exponent`.
    pub datum_power: f64,
    pub exponent: f64,
    pub coefficient: f64,
    /// `lhs / (coefficient · datum_power)`: the constant this datum needs.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalderonSplit {
    pub theta: f64,
    pub s: f64,
    /// Projected part of `u₀` where `|u₀| >= s`.
    pub v0: SpectralField,
    /// Projected part of `u₀` where `|u₀| < s`.
    pub w0: SpectralField,
    pub a_theta: f64,
    pub b_theta: f64,
    pub bound_checks: [SplitBound; 2],
}

/// Interpolation parameter `θ` of `1/p̃ = (1 − θ)/2 + θ/4`.
pub fn split_theta(p_tilde: f64) -> f64 {
    2.0 - 4.0 / p_tilde
}

/// `(A_θ, B_θ) = (s^{(1−θ)/(2−θ)}, s^{−θ/(2−θ)})` with `s = θ/(1 − θ)`.
pub fn split_coefficients(theta: f64) -> (f64, f64) {
    let s = theta / (1.0 - theta);
    (s.powf((1.0 - theta) / (2.0 - theta)), s.powf(-theta / (2.0 - theta)))
}

/// Splits `u₀` at the amplitude `s = θ/(1 − θ)` and projects both parts.
pub fn calderon_split(u0: &SpectralField, p_tilde: f64) -> Result<CalderonSplit> {
    need_vector(u0)?;
    if !(p_tilde > 2.0 && p_tilde < 4.0) {
        return Err(Error::Config(format!("splitting needs 2 < p~ < 4, got {p_tilde}")));
    }
    let theta = split_theta(p_tilde);
    let s = theta / (1.0 - theta);
    let small: Vec<bool> = (0..u0.len()).map(|k| u0.magnitude(k) < s).collect();
    let part = |keep_small: bool| -> Result<SpectralField> {
        let real = u0
            .real
            .iter()
            .map(|c| c.iter().zip(&small).map(|(&v, &sm)| if sm == keep_small { v } else { 0.0 }).collect())
            .collect();
        leray_project(&SpectralField::from_real(u0.box_len, u0.resolution, u0.center, real)?)
    };
    let (w0, v0) = (part(true)?, part(false)?);
    let (a_theta, b_theta) = split_coefficients(theta);
    let datum = u0.mixed_norm(-0.5, ExtReal::Finite(2.0), ExtReal::Finite(p_tilde))?;
    let bound = |label: &str, lhs: f64, exponent: f64, coefficient: f64| {
        let datum_power = datum.powf(exponent);
        SplitBound {
            label: label.to_string(),
            lhs,
            datum_power,
            exponent,
            coefficient,
            ratio: if lhs == 0.0 { 0.0 } else { lhs / (coefficient * datum_power) },
        }
    };
    let wl = w0.mixed_norm(-0.5, ExtReal::Finite(2.0), ExtReal::Finite(4.0))?;
    let vl = v0.mixed_norm(-0.5, ExtReal::Finite(2.0), ExtReal::Finite(2.0))?;
    Ok(CalderonSplit {
        theta,
        s,
        bound_checks: [
            bound("small part in L2 L4", wl, p_tilde / 4.0, a_theta),
            bound("large part in L2", vl, p_tilde / 2.0, b_theta),
        ],
        v0,
        w0,
        a_theta,
        b_theta,
    })
}
