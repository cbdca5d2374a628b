//! Test-function families and inequality-ratio experiments: Stein–Weiss,
//! Caffarelli–Kohn–Nirenberg and Strauss ratios, dilation checks and
//! sharpness scans across admissibility boundaries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{check_ckn, check_stein_weiss, CknMode, Overall, SwMode, SwVariant};
use crate::error::{Error, Result};
use crate::grids::{mixed_norm, GridField, RadialGrid, SphereGrid};
use crate::index::{ExtReal, IndexTuple};
use crate::kernels::{fractional_derivative, riesz_potential};
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFamily {
    /// `e^{−|x|²}`.
    Gaussian,
    /// `|x|^e log(1/|x|)` for `|x| >= δ`, continued inside `δ` by the even
    /// quartic with matching value, slope and curvature, and cut off
    /// smoothly between `|x| = 1/4` and `1/2`. A missing exponent is taken
    /// from the tuple when the family is scanned (`γ − n/r`).
    PowerLogSpike {
        #[serde(default)]
        exponent: Option<f64>,
        delta: f64,
    },
    /// Compact radial bump on `|x| < 1` times a smooth cap indicator: 1 within
    /// angle `κ` of the polar axis, 0 beyond `2κ`.
    AngularCap { aperture: f64 },
    /// `f(λx)` for the base family.
    Dilated { lambda: f64, base: Box<TestFamily> },
}

/// `0` for `t <= 0`, `1` for `t >= 1`, C^∞ in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

fn compact_bump(rho: f64) -> f64 {
    if rho < 1.0 {
        (1.0 - 1.0 / (1.0 - rho * rho)).exp()
    } else {
        0.0
    }
}

/// Coefficients `(c₀, c₂, c₄)` of the quartic continuation of the spike.
fn spike_core(e: f64, delta: f64) -> (f64, f64, f64) {
    let l = (1.0 / delta).ln();
    let s = delta.powf(e) * l;
    let d1 = delta.powf(e - 1.0) * (e * l - 1.0);
    let d2 = delta.powf(e - 2.0) * (e * (e - 1.0) * l - 2.0 * e + 1.0);
    let c4 = (d2 * delta - d1) / (8.0 * delta.powi(3));
    let c2 = (d1 - 4.0 * c4 * delta.powi(3)) / (2.0 * delta);
    (s - c2 * delta * delta - c4 * delta.powi(4), c2, c4)
}

fn spike(e: f64, delta: f64, rho: f64) -> f64 {
    let core = if rho >= delta {
        rho.powf(e) * (1.0 / rho).ln()
    } else {
        let (c0, c2, c4) = spike_core(e, delta);
        let r2 = rho * rho;
        c0 + c2 * r2 + c4 * r2 * r2
    };
    core * smooth_step((0.5 - rho) / 0.25)
}

impl TestFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFamily::Gaussian => Ok(()),
            TestFamily::PowerLogSpike { exponent, delta } => {
                if !(*delta > 0.0 && *delta < 0.25) {
                    return Err(Error::Config(format!("spike truncation needs 0 < delta < 1/4, got {delta}")));
                }
                match exponent {
                    Some(e) if !e.is_finite() => Err(Error::Config("spike exponent must be finite".into())),
                    _ => Ok(()),
                }
            }
            TestFamily::AngularCap { aperture } => {
                if !(*aperture > 0.0 && *aperture <= PI) {
                    return Err(Error::Config(format!("cap aperture must lie in (0, pi], got {aperture}")));
                }
                Ok(())
            }
            TestFamily::Dilated { lambda, base } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::Config(format!("dilation must be positive, got {lambda}")));
                }
                base.validate()
            }
        }
    }

    /// Value at radius `rho` in direction `omega` (a unit vector).
    pub fn value(&self, rho: f64, omega: [f64; 3], n: u32) -> Result<f64> {
        Ok(match self {
            TestFamily::Gaussian => (-rho * rho).exp(),
            TestFamily::PowerLogSpike { exponent, delta } => {
                let e = exponent.ok_or_else(|| Error::Config("spike exponent is unset".into()))?;
                spike(e, *delta, rho)
            }
            TestFamily::AngularCap { aperture } => {
                let axis = if n == 2 { omega[0] } else { omega[2] };
                let angle = axis.clamp(-1.0, 1.0).acos();
                compact_bump(rho) * smooth_step((2.0 * aperture - angle) / aperture)
            }
            TestFamily::Dilated { lambda, base } => base.value(lambda * rho, omega, n)?,
        })
    }

    /// Total dilation applied by nested `Dilated` wrappers.
    pub fn dilation(&self) -> f64 {
        match self {
            TestFamily::Dilated { lambda, base } => lambda * base.dilation(),
            _ => 1.0,
        }
    }

    /// Same family with the innermost spike exponent set when unset.
    pub fn with_spike_exponent(&self, e: f64) -> TestFamily {
        match self {
            TestFamily::PowerLogSpike { exponent: None, delta } => TestFamily::PowerLogSpike {
                exponent: Some(e),
                delta: *delta,
            },
            TestFamily::Dilated { lambda, base } => TestFamily::Dilated {
                lambda: *lambda,
                base: Box::new(base.with_spike_exponent(e)),
            },
            other => other.clone(),
        }
    }
}

/// Samples a family member. Members dilated by `λ` are sampled on the grid
/// dilated by `1/λ`, so every member is resolved alike.
pub fn make_test_field(fam: &TestFamily, radial: &RadialGrid, sphere: &SphereGrid) -> Result<GridField> {
    fam.validate()?;
    let grid = radial.dilated(1.0 / fam.dilation());
    let n = sphere.n;
    fam.value(1.0, sphere.points[0], n)?;
    Ok(GridField::scalar(&grid, sphere, |r, w| fam.value(r, w, n).unwrap_or(f64::NAN))?)
}

/// Samples a family member on a periodic box centered at the origin.
pub fn make_spectral_field(fam: &TestFamily, box_len: f64, resolution: usize) -> Result<SpectralField> {
    fam.validate()?;
    fam.value(1.0, [0.0, 0.0, 1.0], 3)?;
    SpectralField::from_fn(box_len, resolution, [0.0; 3], 1, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let w = if r == 0.0 { [0.0, 0.0, 1.0] } else { [x[0] / r, x[1] / r, x[2] / r] };
        vec![fam.value(r, w, 3).unwrap_or(f64::NAN)]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Individual right-hand norms before exponentiation, when the right
    /// side is a product.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<f64>,
    pub tuple: IndexTuple,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_params: Option<TestFamily>,
}

impl RatioReport {
    fn new(lhs: f64, rhs: f64, factors: Vec<f64>, tuple: IndexTuple) -> Result<Self> {
        if !(rhs > 0.0 && rhs.is_finite() && lhs.is_finite()) {
            return Err(Error::NonConvergence(format!("ratio needs finite norms with rhs > 0, got lhs = {lhs}, rhs = {rhs}")));
        }
        Ok(RatioReport {
            ratio: lhs / rhs,
            lhs,
            rhs,
            factors,
            tuple,
            family_params: None,
        })
    }

    pub fn with_family(mut self, fam: &TestFamily) -> Self {
        self.family_params = Some(fam.clone());
        self
    }
}

/// `‖|x|^{−β} T_γ f‖_{L^q L^q̃} / ‖|x|^α f‖_{L^p L^p̃}` with
/// `T_γ f = ∫ f(y)|x − y|^{−γ} dy` evaluated on the grid of `f`.
pub fn ratio_stein_weiss(f: &GridField, t: &IndexTuple) -> Result<RatioReport> {
    let gamma = t.req_gamma()?;
    let tf = riesz_potential(f, gamma, &f.radial)?;
    let lhs = mixed_norm(&tf, -t.req_beta()?, t.req_q()?, t.req_q_tilde()?)?;
    let rhs = mixed_norm(f, t.req_alpha()?, t.req_p()?, t.req_p_tilde()?)?;
    RatioReport::new(lhs, rhs, vec![], t.clone())
}

/// Barycentric differentiation matrix on arbitrary distinct nodes.
fn diff_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len();
    let w: Vec<f64> = (0..m)
        .map(|j| 1.0 / (0..m).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                d[i][j] = w[j] / w[i] / (x[i] - x[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Fourier differentiation matrix on `m` equispaced periodic nodes.
fn periodic_diff_matrix(m: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * PI / m as f64;
    let mut d = vec![vec![0.0; m]; m];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            let k = i as i64 - j as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let a = k as f64 * h / 2.0;
            *v = 0.5 * sign * if m % 2 == 0 { 1.0 / a.tan() } else { 1.0 / a.sin() };
        }
    }
    d
}

fn apply(d: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    d.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `∂_θ u` on the Gauss × equispaced sphere grid. Each azimuthal Fourier
/// mode `a_m(θ)` is written as `sin^m θ · p(cos θ)` and `p` is
/// differentiated by Lagrange interpolation in `cos θ`.
fn polar_derivative(row: &[f64], mu: &[f64], dmu: &[Vec<f64>], n_phi: usize) -> Vec<f64> {
    let n_theta = mu.len();
    let sin_t: Vec<f64> = mu.iter().map(|m| (1.0 - m * m).sqrt()).collect();
    let phi: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect();
    let mut out = vec![0.0; row.len()];
    for m in 0..=n_phi / 2 {
        let scale = if m == 0 || 2 * m == n_phi { 1.0 } else { 2.0 } / n_phi as f64;
        for sine in [false, true] {
            if sine && (m == 0 || 2 * m == n_phi) {
                continue;
            }
            let basis: Vec<f64> = phi
                .iter()
                .map(|&a| if sine { (m as f64 * a).sin() } else { (m as f64 * a).cos() })
                .collect();
            let p: Vec<f64> = (0..n_theta)
                .map(|it| {
                    let c: f64 = (0..n_phi).map(|k| row[it * n_phi + k] * basis[k]).sum::<f64>() * scale;
                    c / sin_t[it].powi(m as i32)
                })
                .collect();
            let dp = apply(dmu, &p);
            for it in 0..n_theta {
                let s = sin_t[it];
                let mf = m as f64;
                let da = if m == 0 { 0.0 } else { mf * s.powi(m as i32 - 1) * mu[it] * p[it] } - s.powi(m as i32 + 1) * dp[it];
                for k in 0..n_phi {
                    out[it * n_phi + k] += da * basis[k];
                }
            }
        }
    }
    out
}

/// `|∇f|` at every node: panelwise spectral differentiation in the radius,
/// Fourier in the azimuth and Lagrange in `cos θ` on the sphere.
pub fn gradient_magnitude(f: &GridField) -> Result<GridField> {
    let (nr, ns) = (f.radial.len(), f.sphere.len());
    let n = f.n();
    let panels: Vec<(std::ops::Range<usize>, Vec<Vec<f64>>)> = (0..f.radial.panels())
        .map(|k| {
            let range = f.radial.panel_nodes(k);
            let d = diff_matrix(&f.radial.nodes[range.clone()]);
            (range, d)
        })
        .collect();
    let (n_theta, n_phi) = match n {
        2 => (1, ns),
        3 => {
            let np = f.sphere.level + 1;
            (ns / np, np)
        }
        _ => return Err(Error::Config(format!("gradient needs n in {{2, 3}}, got {n}"))),
    };
    let dphi = periodic_diff_matrix(n_phi);
    let mu: Vec<f64> = (0..n_theta).map(|it| f.sphere.theta[it * n_phi].cos()).collect();
    let dmu = if n_theta > 1 { diff_matrix(&mu) } else { vec![vec![0.0]] };
    let mut sq = vec![0.0; nr * ns];
    for c in 0..f.components {
        for j in 0..ns {
            let col: Vec<f64> = (0..nr).map(|i| f.get(c, i, j)).collect();
            for (range, d) in &panels {
                let der = apply(d, &col[range.clone()]);
                for (i, v) in range.clone().zip(der) {
                    sq[i * ns + j] += v * v;
                }
            }
        }
        for i in 0..nr {
            let rho = f.radial.nodes[i];
            let row: Vec<f64> = (0..ns).map(|j| f.get(c, i, j)).collect();
            for it in 0..n_theta {
                let ring = &row[it * n_phi..(it + 1) * n_phi];
                let sin_t = if n == 3 { (1.0 - mu[it] * mu[it]).sqrt() } else { 1.0 };
                for (k, v) in apply(&dphi, ring).into_iter().enumerate() {
                    sq[i * ns + it * n_phi + k] += (v / (rho * sin_t)).powi(2);
                }
            }
            if n == 3 && n_theta > 1 {
                for (j, v) in polar_derivative(&row, &mu, &dmu, n_phi).into_iter().enumerate() {
                    sq[i * ns + j] += (v / rho).powi(2);
                }
            }
        }
    }
    Ok(GridField::new(f.radial.clone(), f.sphere.clone(), 1, sq.into_iter().map(f64::sqrt).collect())?)
}

/// Input of [`ratio_ckn`]: grid fields support `σ = 1` through the
/// gradient, box fields any `σ` through the Fourier multiplier.
#[derive(Clone, Copy, Debug)]
pub enum CknField<'a> {
    Grid(&'a GridField),
    Spectral(&'a SpectralField),
}

/// `‖|x|^{−γ}u‖_{L^r L^r̃} / (‖|x|^{−α}|D|^σ u‖^a_{L^p L^p̃} ‖|x|^{−β}u‖^{1−a}_{L^q L^q̃})`.
pub fn ratio_ckn(f: CknField, t: &IndexTuple) -> Result<RatioReport> {
    let a = t.req_a()?;
    let sigma = t.req_sigma()?;
    let (alpha, beta, gamma) = (t.req_alpha()?, t.req_beta()?, t.req_gamma()?);
    let (lhs, rd, rp) = match f {
        CknField::Grid(g) => {
            if sigma != 1.0 {
                return Err(Error::Config(format!("grid fields support sigma = 1 only, got {sigma}")));
            }
            let du = gradient_magnitude(g)?;
            (
                mixed_norm(g, -gamma, t.req_r()?, t.req_r_tilde()?)?,
                mixed_norm(&du, -alpha, t.req_p()?, t.req_p_tilde()?)?,
                if a == 1.0 { 1.0 } else { mixed_norm(g, -beta, t.req_q()?, t.req_q_tilde()?)? },
            )
        }
        CknField::Spectral(s) => {
            let du = fractional_derivative(s, sigma)?;
            (
                s.mixed_norm(-gamma, t.req_r()?, t.req_r_tilde()?)?,
                du.mixed_norm(-alpha, t.req_p()?, t.req_p_tilde()?)?,
                if a == 1.0 { 1.0 } else { s.mixed_norm(-beta, t.req_q()?, t.req_q_tilde()?)? },
            )
        }
    };
    let rhs = rd.powf(a) * if a == 1.0 { 1.0 } else { rp.powf(1.0 - a) };
    RatioReport::new(lhs, rhs, vec![rd, rp], t.clone())
}

/// `max |x|^{n/p − σ}|f| / ‖|D|^σ f‖_{L^p L^p̃}` on the box (`n = 3`).
/// Refuses exponents outside `(n−1)/p̃ + 1/p < σ < n/p`.
pub fn strauss_ratio(f: &SpectralField, sigma: f64, p: ExtReal, p_tilde: ExtReal) -> Result<RatioReport> {
    let n = 3.0;
    let (lo, hi) = ((n - 1.0) * p_tilde.recip() + p.recip(), n * p.recip());
    if !(lo < sigma && sigma < hi) {
        return Err(Error::Config(format!(
            "sigma = {sigma} outside the window ((n-1)/p~ + 1/p, n/p) = ({lo}, {hi})"
        )));
    }
    let w = n * p.recip() - sigma;
    let lhs = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let x = f.position(i);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r == 0.0 {
                if w == 0.0 {
                    f.magnitude(i)
                } else {
                    0.0
                }
            } else {
                r.powf(w) * f.magnitude(i)
            }
        })
        .reduce(|| 0.0, f64::max);
    let rhs = fractional_derivative(f, sigma)?.mixed_norm(0.0, p, p_tilde)?;
    let tuple = IndexTuple {
        n: 3,
        p: Some(p),
        p_tilde: Some(p_tilde),
        sigma: Some(sigma),
        ..Default::default()
    };
    RatioReport::new(lhs, rhs, vec![], tuple)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    SteinWeiss,
    Ckn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    Delta,
    Aperture,
    Lambda,
}

fn set_parameter(fam: &TestFamily, param: ScanParameter, v: f64) -> Result<TestFamily> {
    Ok(match (fam, param) {
        (TestFamily::PowerLogSpike { exponent, .. }, ScanParameter::Delta) => TestFamily::PowerLogSpike {
            exponent: *exponent,
            delta: v,
        },
        (TestFamily::AngularCap { .. }, ScanParameter::Aperture) => TestFamily::AngularCap { aperture: v },
        (TestFamily::Dilated { base, .. }, ScanParameter::Lambda) => TestFamily::Dilated {
            lambda: v,
            base: base.clone(),
        },
        (_, ScanParameter::Lambda) => TestFamily::Dilated {
            lambda: v,
            base: Box::new(fam.clone()),
        },
        (TestFamily::Dilated { lambda, base }, _) => TestFamily::Dilated {
            lambda: *lambda,
            base: Box::new(set_parameter(base, param, v)?),
        },
        _ => return Err(Error::Config(format!("family {fam:?} has no parameter {param:?}"))),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub tuple: IndexTuple,
    pub verdict: Overall,
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio among the members up to each ladder entry.
    pub running_sup: Vec<f64>,
    pub sup: f64,
    /// `running_sup.last / ratios.first`.
    pub growth: f64,
}

/// For each tuple along `path`, the ratios over the declared parameter
/// ladder and their running supremum. Spike families without an exponent
/// take `γ − n/r` (CKN) or `γ − n/q` (Stein–Weiss) from each tuple.
pub fn sharpness_scan(
    path: &[IndexTuple],
    family: &TestFamily,
    parameter: ScanParameter,
    values: &[f64],
    inequality: Inequality,
    radial: &RadialGrid,
    sphere: &SphereGrid,
) -> Result<Vec<SharpnessRow>> {
    if values.is_empty() {
        return Err(Error::Config("scan ladder is empty".into()));
    }
    path.iter()
        .map(|t| {
            let (verdict, e) = match inequality {
                Inequality::Ckn => (check_ckn(t, CknMode::Fractional)?.overall, t.req_gamma()? - t.nf() * t.req_r()?.recip()),
                Inequality::SteinWeiss => (
                    check_stein_weiss(t, SwVariant::Mixed, SwMode::General)?.overall,
                    t.req_gamma()? - t.nf() * t.req_q()?.recip(),
                ),
            };
            let base = family.with_spike_exponent(e);
            let ratios = values
                .par_iter()
                .map(|&v| {
                    let fam = set_parameter(&base, parameter, v)?;
                    let f = make_test_field(&fam, radial, sphere)?;
                    Ok(match inequality {
                        Inequality::Ckn => ratio_ckn(CknField::Grid(&f), t)?.ratio,
                        Inequality::SteinWeiss => ratio_stein_weiss(&f, t)?.ratio,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let running_sup: Vec<f64> = ratios
                .iter()
                .scan(0.0f64, |m, &r| {
                    *m = m.max(r);
                    Some(*m)
                })
                .collect();
            let sup = *running_sup.last().expect("non-empty ladder");
            Ok(SharpnessRow {
                tuple: t.clone(),
                verdict,
                parameter,
                values: values.to_vec(),
                growth: sup / ratios[0],
                ratios,
                running_sup,
                sup,
            })
        })
        .collect()
}
