//! Convolution operators on product grids (Riesz potentials, smooth bracket
//! potentials, the heat semigroup), the fractional derivative on periodic
//! fields, and measurement of heat decay exponents.
//!
//! A convolution `∫ f(y) K(|x − y|) dy` at `x = rω` is split as
//!
//! ```text
//! ∫ f(sω) M_K(r, s) s^{n−1} ds  +  ∫∫ [f(sθ) − f(sω)] K(|x − sθ|) s^{n−1} dθ ds
//! ```
//!
//! where `M_K(r, s)` is the sphere mean of the kernel, known in closed form
//! for `n = 3`. The first term carries the whole singularity and is
//! integrated adaptively in `s` on the interpolated source; the second is a
//! plain product-grid sum and vanishes for radial sources.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{check_decay_estimate, DecayKind, Overall};
use crate::error::{Error, Result};
use crate::grids::{mixed_norm, mixed_norm_within, sphere_area, GridField, RadialGrid};
use crate::index::IndexTuple;
use crate::quad::{gauss_legendre_on, integrate_panels};
use crate::singint::sphere_mean_numeric;
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `|z|^{−γ}`
    Riesz(f64),
    /// `⟨z⟩^{−μ}`
    Bracket(f64),
    /// `(4πt)^{−n/2} e^{−|z|²/4t}`
    Heat(f64),
}

impl Kernel {
    fn value(self, z: f64, n: u32) -> f64 {
        match self {
            Kernel::Riesz(g) => z.powf(-g),
            Kernel::Bracket(m) => (1.0 + z * z).powf(-m / 2.0),
            Kernel::Heat(t) => (4.0 * PI * t).powf(-(n as f64) / 2.0) * (-z * z / (4.0 * t)).exp(),
        }
    }

    /// True when the sphere mean blows up at `s = r`.
    fn singular_on_shell(self, n: u32) -> bool {
        matches!(self, Kernel::Riesz(g) if g >= n as f64 - 1.0)
    }

    /// `∫ σ K(σ) dσ` primitive, for the `n = 3` sphere mean.
    fn primitive(self, s: f64) -> f64 {
        match self {
            Kernel::Riesz(g) if g == 2.0 => s.ln(),
            Kernel::Riesz(g) => s.powf(2.0 - g) / (2.0 - g),
            Kernel::Bracket(m) if m == 2.0 => 0.5 * (1.0 + s * s).ln(),
            Kernel::Bracket(m) => (1.0 + s * s).powf(1.0 - m / 2.0) / (2.0 - m),
            Kernel::Heat(_) => unreachable!("heat sphere mean has its own closed form"),
        }
    }

    /// `∫_{S^{n−1}} K(|rω − sθ|) dS(θ)`.
    pub fn sphere_mean(self, n: u32, r: f64, s: f64) -> f64 {
        if r == 0.0 || s == 0.0 {
            return sphere_area(n) * self.value(r.max(s), n);
        }
        if n != 3 {
            return sphere_mean_numeric(n, r, s, |z| self.value(z, n), 1e-12).unwrap_or(f64::NAN);
        }
        let lo = (r - s).abs();
        let hi = r + s;
        match self {
            Kernel::Heat(t) => {
                (4.0 * PI * t).powf(-0.5) / (r * s) * (-lo * lo / (4.0 * t)).exp() * -(-r * s / t).exp_m1()
            }
            _ if lo == 0.0 && self.singular_on_shell(n) => f64::INFINITY,
            _ if (hi - lo) < 0.1 * hi => {
                let (x, w) = gauss_legendre_on(12, lo, hi);
                let v: f64 = x.iter().zip(&w).map(|(&z, &w)| w * z * self.value(z, n)).sum();
                2.0 * PI * v / (r * s)
            }
            _ => 2.0 * PI * (self.primitive(hi) - self.primitive(lo)) / (r * s),
        }
    }
}

/// Barycentric interpolation on one radial panel.
struct PanelInterp<'a> {
    nodes: &'a [f64],
    bw: Vec<f64>,
}

impl<'a> PanelInterp<'a> {
    fn new(nodes: &'a [f64]) -> Self {
        let bw = (0..nodes.len())
            .map(|j| 1.0 / (0..nodes.len()).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product::<f64>())
            .collect();
        PanelInterp { nodes, bw }
    }

    fn eval(&self, values: &[f64], s: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.bw).zip(values) {
            let d = s - x;
            if d == 0.0 {
                return v;
            }
            num += w * v / d;
            den += w / d;
        }
        num / den
    }
}

fn panel_of(radial: &RadialGrid, s: f64) -> Option<usize> {
    if s > radial.rho_max {
        return None;
    }
    let k = radial.breaks.partition_point(|&b| b <= s);
    Some(k.saturating_sub(1).min(radial.panels() - 1))
}

/// Radial profile `s ↦ f(c, ·, j)` by panelwise interpolation; 0 beyond
/// `ρ_max`, extrapolated from the first panel below `ρ_min`.
fn profile(f: &GridField, c: usize, j: usize) -> Vec<Vec<f64>> {
    (0..f.radial.panels())
        .map(|k| f.radial.panel_nodes(k).map(|i| f.get(c, i, j)).collect())
        .collect()
}

/// Resamples `f` onto another radial grid (same sphere grid).
pub fn resample(f: &GridField, target: &RadialGrid) -> Result<GridField> {
    let interps: Vec<PanelInterp> = (0..f.radial.panels())
        .map(|k| PanelInterp::new(&f.radial.nodes[f.radial.panel_nodes(k)]))
        .collect();
    let (nt, ns) = (target.len(), f.sphere.len());
    let mut values = vec![0.0; f.components * nt * ns];
    for c in 0..f.components {
        for j in 0..ns {
            let prof = profile(f, c, j);
            for (i, &r) in target.nodes.iter().enumerate() {
                if let Some(k) = panel_of(&f.radial, r) {
                    values[(c * nt + i) * ns + j] = interps[k].eval(&prof[k], r);
                }
            }
        }
    }
    Ok(GridField::new(target.clone(), f.sphere.clone(), f.components, values)?)
}

/// `∫ f(y) K(|x − y|) dy` at every node of `target × f.sphere`.
pub fn convolve(f: &GridField, kernel: Kernel, target: &RadialGrid) -> Result<GridField> {
    let n = f.n();
    let (nr, ns, nt) = (f.radial.len(), f.sphere.len(), target.len());
    let src = &f.radial;
    let interps: Vec<PanelInterp> = (0..src.panels()).map(|k| PanelInterp::new(&src.nodes[src.panel_nodes(k)])).collect();
    let radial_rows: Vec<bool> = (0..f.components * nr)
        .map(|ci| {
            let (c, i) = (ci / nr, ci % nr);
            let v0 = f.get(c, i, 0);
            (1..ns).all(|j| f.get(c, i, j) == v0)
        })
        .collect();
    let radial = radial_rows.iter().all(|&b| b);
    let nf = n as f64;
    let singular_power = match kernel {
        Kernel::Riesz(g) if g == nf - 1.0 => Some(2.0),
        Kernel::Riesz(g) if g > nf - 1.0 => Some(1.0 / (nf - g)),
        _ => None,
    };

    // ∫ f̃(s) M(r, s) s^{n−1} ds for one radial profile
    let shell_part = |prof: &[Vec<f64>], r: f64| -> Result<f64> {
        let mut total = 0.0;
        for k in 0..src.panels() {
            let (a, b) = (src.breaks[k], src.breaks[k + 1]);
            let vals = &prof[k];
            if vals.iter().all(|&v| v == 0.0) {
                continue;
            }
            let g = |s: f64| interps[k].eval(vals, s) * kernel.sphere_mean(n, r, s) * s.powi(n as i32 - 1);
            let width = b - a;
            if r > a - width && r < b + width {
                let rough: f64 = src
                    .panel_nodes(k)
                    .map(|i| src.weights[i] * vals[i - src.panel_nodes(k).start].abs())
                    .sum::<f64>()
                    * kernel.sphere_mean(n, r, 0.5 * (a + b)).abs()
                    * b.powi(n as i32 - 1);
                let abs_tol = if rough.is_finite() { 1e-13 * rough + 1e-300 } else { 1e-300 };
                match singular_power {
                    Some(m) => {
                        // s = r ± u^m flattens the |s − r|^{n−1−γ} shell singularity
                        let pieces: Vec<(f64, f64)> = if r > a && r < b { vec![(a, r), (r, b)] } else { vec![(a, b)] };
                        for (lo, hi) in pieces {
                            let sign = if hi <= r { -1.0 } else { 1.0 };
                            let (u0, u1) = ((lo - r).abs().powf(1.0 / m), (hi - r).abs().powf(1.0 / m));
                            let h = |u: f64| g(r + sign * u.powf(m)) * m * u.powf(m - 1.0);
                            total += integrate_panels(&h, &[u0.min(u1), u0.max(u1)], abs_tol, 1e-11)?.value;
                        }
                    }
                    None => {
                        let breaks = if r > a && r < b { vec![a, r, b] } else { vec![a, b] };
                        total += integrate_panels(&g, &breaks, abs_tol, 1e-11)?.value;
                    }
                }
            } else {
                total += src.panel_nodes(k).map(|i| src.weights[i] * g(src.nodes[i])).sum::<f64>();
            }
        }
        Ok(total)
    };

    let mut values = vec![0.0; f.components * nt * ns];
    for c in 0..f.components {
        if radial {
            let prof = profile(f, c, 0);
            let col = target
                .nodes
                .par_iter()
                .map(|&r| shell_part(&prof, r))
                .collect::<Result<Vec<f64>>>()?;
            for (i, v) in col.iter().enumerate() {
                values[(c * nt) * ns + i * ns..(c * nt) * ns + (i + 1) * ns].fill(*v);
            }
            continue;
        }
        let cols = (0..ns)
            .into_par_iter()
            .map(|j| {
                let prof = profile(f, c, j);
                let w = f.sphere.points[j];
                target
                    .nodes
                    .iter()
                    .map(|&r| {
                        let mut v = shell_part(&prof, r)?;
                        let x = [r * w[0], r * w[1], r * w[2]];
                        let mut rem = 0.0;
                        for k in 0..nr {
                            if radial_rows[c * nr + k] {
                                continue;
                            }
                            let s = src.nodes[k];
                            let base = f.get(c, k, j);
                            let mut row = 0.0;
                            for (l, y) in f.sphere.points.iter().enumerate() {
                                let d = f.get(c, k, l) - base;
                                if d == 0.0 {
                                    continue;
                                }
                                let z = ((x[0] - s * y[0]).powi(2) + (x[1] - s * y[1]).powi(2) + (x[2] - s * y[2]).powi(2)).sqrt();
                                row += f.sphere.weights[l] * d * kernel.value(z, n);
                            }
                            rem += src.weights[k] * s.powi(n as i32 - 1) * row;
                        }
                        v += rem;
                        Ok(v)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[(c * nt + i) * ns + j] = *v;
            }
        }
    }
    Ok(GridField::new(target.clone(), f.sphere.clone(), f.components, values)?)
}

/// `T_γ f(x) = ∫ f(y) |x − y|^{−γ} dy`, `0 < γ < n`.
pub fn riesz_potential(f: &GridField, gamma: f64, target: &RadialGrid) -> Result<GridField> {
    let n = f.n() as f64;
    if !(gamma > 0.0 && gamma < n) {
        return Err(Error::Config(format!("Riesz exponent must lie in (0, {n}), got {gamma}")));
    }
    convolve(f, Kernel::Riesz(gamma), target)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothKind {
    /// The nonhomogeneous potential `S_γ`.
    BracketGamma,
    /// Convolution with `⟨x⟩^{−μ}`.
    BracketMu,
}

/// `∫ f(y) ⟨x − y⟩^{−exponent} dy`.
pub fn smooth_potential(f: &GridField, exponent: f64, _kind: SmoothKind, target: &RadialGrid) -> Result<GridField> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::Config(format!("bracket exponent must be positive, got {exponent}")));
    }
    convolve(f, Kernel::Bracket(exponent), target)
}

/// `e^{tΔ} f` sampled on `target × f.sphere`.
pub fn heat_evolve(f: &GridField, t: f64, target: &RadialGrid) -> Result<GridField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("heat time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return if *target == f.radial { Ok(f.clone()) } else { resample(f, target) };
    }
    convolve(f, Kernel::Heat(t), target)
}

/// `|D|^σ f`: multiplier `|ξ|^σ`, zero mode mapped to 0.
pub fn fractional_derivative(f: &SpectralField, sigma: f64) -> Result<SpectralField> {
    if !sigma.is_finite() {
        return Err(Error::Config(format!("derivative order must be finite, got {sigma}")));
    }
    f.multiplier(|xi| {
        let k = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        if k == 0.0 {
            0.0
        } else {
            k.powf(sigma)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log value` from the fitted line.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Least-squares line through `(log t, log value)`.
pub fn fit_decay(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::Config(format!("decay fit needs at least 4 points, got {}", series.len())));
    }
    if series.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::Config("decay fit needs positive times and values".into()));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Config("decay fit needs increasing times".into()));
    }
    let m = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(DecayFit {
        slope,
        intercept,
        residual,
        window: (series[0].0, series[series.len() - 1].0),
    })
}

/// Settings of a heat-decay measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayExperiment {
    pub kind: DecayKind,
    pub times: Vec<f64>,
    /// Parabola size `R` of `{|x| < R√t}` (localized estimates only).
    #[serde(default)]
    pub radius: Option<f64>,
    /// Require the fitted slope to match the prediction, not just respect it.
    #[serde(default)]
    pub saturating: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayVerification {
    pub predicted: Option<f64>,
    pub fit: Option<DecayFit>,
    pub verdict: Overall,
    /// `max_t t^{predicted} · lhs(t) / rhs`.
    pub constant: Option<f64>,
    pub series: Vec<(f64, f64)>,
    pub rhs: f64,
}

/// `‖1_{Π(R)} |x|^β e^{tΔ}u0‖_{L^q L^q̃}` (no restriction when `radius` is
/// `None`) along `times`, fitted against the predicted rate
/// `(n/p − n/q + α − β)/2`.
pub fn verify_decay(t: &IndexTuple, u0: &GridField, exp: &DecayExperiment, target: &RadialGrid) -> Result<DecayVerification> {
    if !matches!(exp.kind, DecayKind::PointwiseHeat | DecayKind::LocalParabola) {
        return Err(Error::Config("grid fields support the heat decay kinds only".into()));
    }
    if t.eta.unwrap_or(0) != 0 {
        return Err(Error::Config("derivative decay is not available on grid fields".into()));
    }
    if exp.kind == DecayKind::LocalParabola && exp.radius.is_none() {
        return Err(Error::Config("localized decay needs a parabola radius".into()));
    }
    let check = check_decay_estimate(t, exp.kind)?;
    let (alpha, beta) = (t.req_alpha()?, t.req_beta()?);
    let rhs = mixed_norm(u0, alpha, t.req_p()?, t.req_p_tilde()?)?;
    let (q, qt) = (t.req_q()?, t.req_q_tilde()?);
    let series = exp
        .times
        .iter()
        .map(|&time| {
            let u = heat_evolve(u0, time, target)?;
            let lhs = match exp.radius {
                Some(r) => mixed_norm_within(&u, beta, q, qt, r * time.sqrt())?,
                None => mixed_norm(&u, beta, q, qt)?,
            };
            Ok((time, lhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted = check.predicted_exponent;
    let fit = if series.iter().all(|p| p.1 > 0.0) && series.len() >= 4 {
        Some(fit_decay(&series)?)
    } else {
        None
    };
    let constant = predicted.map(|e| series.iter().map(|&(s, v)| s.powf(e) * v / rhs).fold(0.0, f64::max));
    let verdict = match (check.verdict.overall, predicted, &fit) {
        (Overall::Fail, _, _) | (_, None, _) | (_, _, None) => Overall::Fail,
        (_, Some(e), Some(fit)) => {
            let bound = fit.slope <= -e + 0.05;
            let saturated = !exp.saturating || (fit.slope + e).abs() <= 0.05;
            if bound && saturated {
                Overall::Pass
            } else {
                Overall::Fail
            }
        }
    };
    Ok(DecayVerification {
        predicted,
        fit,
        verdict,
        constant,
        series,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{build_radial_grid, build_sphere_grid, Grading, SphereGrid};
    use crate::index::ExtReal::{Finite as F, Infinity as INF};
    use crate::quad::integrate;
    use statrs::function::erf::erf;

    fn grids(nr: usize, level: usize) -> (RadialGrid, SphereGrid) {
        (
            build_radial_grid(1e-4, 8.0, nr, Grading::Composite).unwrap(),
            build_sphere_grid(3, level).unwrap(),
        )
    }

    fn gaussian(r: &RadialGrid, s: &SphereGrid) -> GridField {
        GridField::scalar(r, s, |rho, _| (-rho * rho).exp()).unwrap()
    }

    fn coulomb(r: f64) -> f64 {
        PI.powf(1.5) * erf(r) / r
    }

    #[test]
    fn sphere_means_match_quadrature() {
        for k in [Kernel::Riesz(1.0), Kernel::Riesz(2.0), Kernel::Riesz(2.5), Kernel::Bracket(1.3), Kernel::Bracket(2.0), Kernel::Heat(0.3)] {
            for (r, s) in [(0.7, 1.9), (2.0, 2.05), (1e-3, 0.5), (3.0, 0.2)] {
                let direct = 2.0 * PI
                    * integrate(
                        |t: f64| k.value(((r - s) * (r - s) + 4.0 * r * s * (t / 2.0).sin().powi(2)).sqrt(), 3) * t.sin(),
                        0.0,
                        PI,
                        1e-14,
                        1e-13,
                    )
                    .unwrap()
                    .value;
                let m = k.sphere_mean(3, r, s);
                assert!((m - direct).abs() < 1e-10 * direct, "{k:?} r={r} s={s}: {m} vs {direct}");
                let numeric = sphere_mean_numeric(3, r, s, |z| k.value(z, 3), 1e-12).unwrap();
                assert!((numeric - direct).abs() < 1e-9 * direct);
            }
        }
    }

    #[test]
    fn coulomb_of_gaussian() {
        let (r, s) = grids(96, 4);
        let out = riesz_potential(&gaussian(&r, &s), 1.0, &r).unwrap();
        for (i, &rho) in r.nodes.iter().enumerate() {
            if rho <= 3.0 {
                let e = coulomb(rho);
                assert!((out.get(0, i, 0) - e).abs() < 1e-7 * e, "rho={rho}");
            }
        }
        assert!(out.angular_deviation() < 1e-8);
        let origin = build_radial_grid(1e-9, 1e-8, 8, Grading::Linear).unwrap();
        let v = riesz_potential(&gaussian(&r, &s), 1.0, &origin).unwrap();
        assert!((v.get(0, 0, 0) - 2.0 * PI).abs() < 1e-7);
    }

    #[test]
    fn dilation_identity() {
        let (r, s) = grids(40, 4);
        let lam = 2.0;
        let (gamma, n) = (1.5, 3.0);
        let f = GridField::scalar(&r, &s, |rho, _| (-rho * rho).exp() * (1.0 + rho)).unwrap();
        let rl = r.dilated(lam);
        let fl = GridField::scalar(&rl, &s, |rho, _| (-(rho / lam).powi(2)).exp() * (1.0 + rho / lam)).unwrap();
        let a = riesz_potential(&f, gamma, &r).unwrap();
        let b = riesz_potential(&fl, gamma, &rl).unwrap();
        for i in 0..r.len() {
            let want = lam.powf(n - gamma) * a.get(0, i, 0);
            assert!((b.get(0, i, 0) - want).abs() < 1e-6 * want.abs());
        }
    }

    #[test]
    fn supercritical_riesz_is_finite() {
        let (r, s) = grids(32, 4);
        let out = riesz_potential(&gaussian(&r, &s), 2.5, &r).unwrap();
        // T_γ e^{−|y|²}(0) = ∫ |y|^{−γ} e^{−|y|²} dy = 2π Γ((3−γ)/2)
        let origin = build_radial_grid(1e-9, 1e-8, 8, Grading::Linear).unwrap();
        let v = riesz_potential(&gaussian(&r, &s), 2.5, &origin).unwrap();
        let gamma_quarter = 3.625_609_908_221_908;
        // minus the part of the integral inside the innermost grid radius
        let want = 2.0 * PI * gamma_quarter - 4.0 * PI * 2.0 * 1e-4f64.sqrt();
        assert!((v.get(0, 0, 0) - want).abs() < 1e-6 * want, "{} vs {want}", v.get(0, 0, 0));
        assert!(out.values.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(riesz_potential(&gaussian(&r, &s), 3.0, &r).is_err());
    }

    #[test]
    fn heat_of_gaussian_and_semigroup() {
        let (r, s) = grids(96, 4);
        let f = gaussian(&r, &s);
        let exact = |t: f64, rho: f64| (1.0 + 4.0 * t).powf(-1.5) * (-rho * rho / (1.0 + 4.0 * t)).exp();
        let u = heat_evolve(&f, 0.5, &r).unwrap();
        for (i, &rho) in r.nodes.iter().enumerate() {
            assert!((u.get(0, i, 0) - exact(0.5, rho)).abs() < 1e-8, "rho={rho}");
        }
        assert_eq!(heat_evolve(&f, 0.0, &r).unwrap(), f);
        let two = heat_evolve(&heat_evolve(&f, 0.2, &r).unwrap(), 0.3, &r).unwrap();
        for i in 0..r.len() {
            assert!((two.get(0, i, 0) - u.get(0, i, 0)).abs() < 1e-6);
        }
        let wide = build_radial_grid(1e-4, 14.0, 96, Grading::Composite).unwrap();
        let uw = heat_evolve(&f, 0.5, &wide).unwrap();
        let mass = |g: &GridField| {
            let rg = &g.radial;
            rg.nodes.iter().zip(&rg.weights).enumerate().map(|(i, (x, w))| w * g.get(0, i, 0) * 4.0 * PI * x * x).sum::<f64>()
        };
        assert!((mass(&uw) - mass(&f)).abs() < 1e-8, "{} vs {}", mass(&uw), mass(&f));
    }

    #[test]
    fn heat_of_translated_gaussian() {
        let r = build_radial_grid(1e-3, 7.0, 48, Grading::Linear).unwrap();
        let s = build_sphere_grid(3, 24).unwrap();
        let x0 = [0.0, 0.0, 1.0];
        let exact = |t: f64, rho: f64, w: [f64; 3]| {
            let d2 = (rho * w[0] - x0[0]).powi(2) + (rho * w[1] - x0[1]).powi(2) + (rho * w[2] - x0[2]).powi(2);
            (1.0 + 4.0 * t).powf(-1.5) * (-d2 / (1.0 + 4.0 * t)).exp()
        };
        let f = GridField::scalar(&r, &s, |rho, w| exact(0.0, rho, w)).unwrap();
        let u = heat_evolve(&f, 0.25, &r).unwrap();
        let mut worst = 0.0f64;
        for (i, &rho) in r.nodes.iter().enumerate() {
            for (j, &w) in s.points.iter().enumerate() {
                worst = worst.max((u.get(0, i, j) - exact(0.25, rho, w)).abs());
            }
        }
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn bracket_potential_domination_and_limits() {
        let (r, s) = grids(32, 6);
        let cap = GridField::scalar(&r, &s, |rho, w| (-rho * rho).exp() * (1.0 + w[2]).powi(2)).unwrap();
        for f in [gaussian(&r, &s), cap] {
            let sg = smooth_potential(&f, 1.5, SmoothKind::BracketGamma, &r).unwrap();
            let tg = riesz_potential(&f, 1.5, &r).unwrap();
            for (a, b) in sg.values.iter().zip(&tg.values) {
                assert!(a.abs() <= b * (1.0 + 1e-6), "{a} > {b}");
            }
        }
        // narrow bump of unit mass
        let eps: f64 = 0.05;
        let fine = build_radial_grid(1e-4, 0.5, 48, Grading::Log).unwrap();
        let mass = eps.powi(3) * PI.powf(1.5);
        let bump = GridField::scalar(&fine, &s, |rho, _| (-(rho / eps).powi(2)).exp() / mass).unwrap();
        let far = build_radial_grid(1.0, 10.0, 16, Grading::Linear).unwrap();
        let out = smooth_potential(&bump, 2.0, SmoothKind::BracketMu, &far).unwrap();
        for (i, &x) in far.nodes.iter().enumerate() {
            let want = 1.0 / (1.0 + x * x);
            assert!((out.get(0, i, 0) - want).abs() < 10.0 * eps * eps * want);
        }
    }

    #[test]
    fn fractional_derivative_algebra() {
        let f = SpectralField::from_fn(2.0 * PI, 16, [0.0; 3], 1, |x| vec![x[0].sin() * (2.0 * x[1]).cos() + x[2].cos()]).unwrap();
        let id = fractional_derivative(&f, 0.0).unwrap();
        for (a, b) in id.real[0].iter().zip(&f.real[0]) {
            assert!((a - b).abs() < 1e-13);
        }
        let ab = fractional_derivative(&fractional_derivative(&f, 0.7).unwrap(), 0.6).unwrap();
        let direct = fractional_derivative(&f, 1.3).unwrap();
        for (a, b) in ab.real[0].iter().zip(&direct.real[0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // σ = 2 against the second-difference stencil
        let n = 64;
        let g = SpectralField::from_fn(2.0 * PI, n, [0.0; 3], 1, |x| vec![(x[0].sin()).exp()]).unwrap();
        let d2 = fractional_derivative(&g, 2.0).unwrap();
        let h = g.spacing();
        let idx = |i: usize| (i % n) * n * n;
        let mut worst = 0.0f64;
        for i in 0..n {
            let fd = -(g.real[0][idx(i + 1)] - 2.0 * g.real[0][idx(i)] + g.real[0][idx(i + n - 1)]) / (h * h);
            worst = worst.max((fd - d2.real[0][idx(i)]).abs());
        }
        assert!(worst < 2.0 * h * h, "{worst}");
    }

    #[test]
    fn decay_fits() {
        let exact: Vec<(f64, f64)> = (0..10).map(|k| 2f64.powi(k)).map(|t| (t, t.powf(-1.5))).collect();
        let f = fit_decay(&exact).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12 && f.residual < 1e-12);
        let flat: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 3.0)).collect();
        assert!(fit_decay(&flat).unwrap().slope.abs() < 1e-15);
        let ts: Vec<f64> = (0..=20).map(|k| 10f64 * 100f64.powf(k as f64 / 20.0)).collect();
        let heat: Vec<(f64, f64)> = ts.iter().map(|&t| (t, (1.0 + 4.0 * t).powf(-1.5))).collect();
        assert!((fit_decay(&heat).unwrap().slope + 1.5).abs() < 0.01);
        assert!(fit_decay(&heat[..3]).is_err());
    }

    #[test]
    fn verify_heat_decay_saturates() {
        let (r, s) = grids(32, 2);
        let target = build_radial_grid(1e-4, 400.0, 64, Grading::Composite).unwrap();
        let t = IndexTuple {
            n: 3,
            p: Some(F(1.0)),
            p_tilde: Some(INF),
            q: Some(INF),
            q_tilde: Some(INF),
            alpha: Some(0.0),
            beta: Some(0.0),
            ..Default::default()
        };
        let times: Vec<f64> = (0..=8).map(|k| 10f64 * 100f64.powf(k as f64 / 8.0)).collect();
        let exp = DecayExperiment {
            kind: DecayKind::PointwiseHeat,
            times,
            radius: None,
            saturating: true,
        };
        let v = verify_decay(&t, &gaussian(&r, &s), &exp, &target).unwrap();
        assert_eq!(v.predicted, Some(1.5));
        assert!((v.fit.as_ref().unwrap().slope + 1.5).abs() < 0.05);
        assert_eq!(v.verdict, Overall::Pass);
    }

    #[test]
    fn verify_decay_contraction_case() {
        let (r, s) = grids(32, 2);
        let t = IndexTuple {
            n: 3,
            p: Some(F(2.0)),
            p_tilde: Some(F(2.0)),
            q: Some(F(2.0)),
            q_tilde: Some(F(2.0)),
            alpha: Some(0.0),
            beta: Some(0.0),
            eta: Some(0),
            ..Default::default()
        };
        let exp = DecayExperiment {
            kind: DecayKind::PointwiseHeat,
            times: vec![0.1, 0.2, 0.4, 0.8, 1.6],
            radius: None,
            saturating: false,
        };
        let v = verify_decay(&t, &gaussian(&r, &s), &exp, &r).unwrap();
        assert_eq!(v.predicted, Some(0.0));
        assert!(v.series.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(v.series[0].1 <= v.rhs);
    }
}
