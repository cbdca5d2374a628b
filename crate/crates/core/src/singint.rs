//! Angular singular integrals
//! `I_ν(x) = ∫_{S^{n−1}} |x − y|^{−ν} dS(y)` and
//! `J_ν(x, ρ) = ∫_{S^{n−1}} ⟨x − ρθ⟩^{−ν} dS(θ)`, with their regime
//! envelopes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::sphere_area;
use crate::quad::{graded_toward_start, integrate_panels};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Far,
    NearOrigin,
    ShellSub,
    ShellLog,
    ShellSuper,
    MixedJ,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "far" => Regime::Far,
            "near_origin" => Regime::NearOrigin,
            "shell_sub" => Regime::ShellSub,
            "shell_log" => Regime::ShellLog,
            "shell_super" => Regime::ShellSuper,
            "mixed_j" | "mixed_J" => Regime::MixedJ,
            _ => return Err(Error::Config(format!("unknown regime `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeEnvelope {
    pub regime: Regime,
    pub value: f64,
    pub formula_id: String,
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("exponent nu must be positive, got {nu}")))
    }
}

/// `∫_{S^{n−1}} g(|x − ρθ|) dS(θ)` for `|x| = r > 0`, `ρ > 0`.
///
/// For `n >= 3` the integral is taken in the distance variable
/// `σ = |x − ρθ|` (`σ dσ = rρ sin θ dθ`), with panels graded toward
/// `σ = |r − ρ|`; for `n = 2` in the angle, graded toward `θ = 0`.
pub fn sphere_mean_numeric<G: Fn(f64) -> f64>(n: u32, r: f64, rho: f64, g: G, tol: f64) -> Result<f64> {
    let lo = (r - rho).abs();
    let hi = r + rho;
    let levels = |width: f64, gap: f64| -> usize {
        let depth = (width / gap.max(width * 1e-15)).log2().max(0.0);
        (depth.ceil() as usize + 6).min(60)
    };
    if n == 2 {
        let f = |t: f64| g(((r - rho).powi(2) + 4.0 * r * rho * (t / 2.0).sin().powi(2)).sqrt());
        let gap = lo / (r * rho).sqrt().max(1e-300);
        let breaks = graded_toward_start(0.0, PI, 0.5, levels(PI, gap));
        let v = integrate_panels(&f, &breaks, 1e-300, tol)?;
        return Ok(2.0 * v.value);
    }
    let half = (n as f64 - 3.0) / 2.0;
    let f = |s: f64| {
        let c = ((r * r + rho * rho - s * s) / (2.0 * r * rho)).clamp(-1.0, 1.0);
        let ang = if half == 0.0 { 1.0 } else { (1.0 - c * c).powf(half) };
        g(s) * s * ang
    };
    let breaks = graded_toward_start(lo, hi, 0.5, levels(hi - lo, lo));
    let v = integrate_panels(&f, &breaks, 1e-300, tol)?;
    Ok(sphere_area(n - 1) * v.value / (r * rho))
}

/// `I_ν(x)` at `|x| = r`. Returns `+∞` on the divergence locus
/// `r = 1, ν >= n − 1`.
pub fn eval_i(nu: f64, r: f64, n: u32, tol: f64) -> Result<f64> {
    check_nu(nu)?;
    if n < 2 || !(r >= 0.0) {
        return Err(Error::Config(format!("need n >= 2 and r >= 0, got n = {n}, r = {r}")));
    }
    if r == 0.0 {
        return Ok(sphere_area(n));
    }
    if r == 1.0 && nu >= n as f64 - 1.0 {
        return Ok(f64::INFINITY);
    }
    sphere_mean_numeric(n, r, 1.0, |s| s.powf(-nu), tol)
}

/// `n = 3` closed form `2π/(r(2−ν)) ((r+1)^{2−ν} − |r−1|^{2−ν})`
/// (`2π/r · log((r+1)/|r−1|)` at `ν = 2`).
pub fn closed_form_i_n3(nu: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 4.0 * PI;
    }
    let d = (r - 1.0).abs();
    if d == 0.0 && nu >= 2.0 {
        return f64::INFINITY;
    }
    if nu == 2.0 {
        return 2.0 * PI / r * ((r + 1.0) / d).ln();
    }
    let e = 2.0 - nu;
    2.0 * PI / (r * e) * ((r + 1.0).powf(e) - d.powf(e))
}

/// Regime and envelope of `I_ν` at `|x| = r`.
pub fn envelope_i(nu: f64, r: f64, n: u32) -> RegimeEnvelope {
    let crit = n as f64 - 1.0;
    let (regime, value, id) = if r >= 2.0 {
        (Regime::Far, bracket(r).powf(-nu), "<x>^-nu")
    } else if r <= 0.5 {
        (Regime::NearOrigin, 1.0, "1")
    } else if nu < crit {
        (Regime::ShellSub, 1.0, "1")
    } else if nu == crit {
        (Regime::ShellLog, (r - 1.0).abs().ln().abs() + 1.0, "|log||x|-1||+1")
    } else {
        (Regime::ShellSuper, (r - 1.0).abs().powf(crit - nu), "||x|-1|^(n-1-nu)")
    };
    RegimeEnvelope {
        regime,
        value,
        formula_id: id.to_string(),
    }
}

/// `J_ν(x, ρ)` at `|x| = r`.
pub fn eval_j(nu: f64, r: f64, rho: f64, n: u32, tol: f64) -> Result<f64> {
    check_nu(nu)?;
    if n < 2 || !(r >= 0.0) || !(rho >= 0.0) {
        return Err(Error::Config(format!("need n >= 2, r >= 0, rho >= 0; got {n}, {r}, {rho}")));
    }
    if r == 0.0 || rho == 0.0 {
        return Ok(sphere_area(n) * bracket(r.max(rho)).powf(-nu));
    }
    sphere_mean_numeric(n, r, rho, |s| (1.0 + s * s).powf(-nu / 2.0), tol)
}

/// Regime and envelope of `J_ν` at `|x| = r`. The logarithmic case reads
/// `⟨·⟩` as the Japanese bracket of `|x| − ρ`.
pub fn envelope_j(nu: f64, r: f64, rho: f64, n: u32) -> RegimeEnvelope {
    let crit = n as f64 - 1.0;
    let (regime, value, id) = if rho <= 1.0 || r >= 2.0 * rho {
        (Regime::Far, bracket(r).powf(-nu), "<x>^-nu")
    } else if r <= 1.0 || rho >= 2.0 * r {
        (Regime::NearOrigin, bracket(rho).powf(-nu), "<rho>^-nu")
    } else if nu < crit {
        (Regime::MixedJ, bracket(rho).powf(-nu), "<rho>^-nu")
    } else if nu == crit {
        (
            Regime::MixedJ,
            bracket(rho).powf(-nu) * (2.0 * bracket(rho) / bracket(r - rho)).ln(),
            "<rho>^-nu log(2<rho>/<|x|-rho>)",
        )
    } else {
        (
            Regime::MixedJ,
            bracket(rho).powf(1.0 - n as f64) * bracket(r - rho).powf(crit - nu),
            "<rho>^(1-n) <|x|-rho>^(n-1-nu)",
        )
    };
    RegimeEnvelope {
        regime,
        value,
        formula_id: id.to_string(),
    }
}

fn logspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![a];
    }
    (0..m)
        .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (m - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBracket {
    pub regime: Regime,
    pub nu: f64,
    pub n: u32,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Sample points `(r, ρ)` (`ρ = 1` for `I_ν`).
    pub samples: usize,
}

/// Ratios `eval / envelope` over a log-spaced sample of the regime's band.
///
/// Bands: far `r ∈ [2, 100]`; near-origin `r ∈ [10⁻³, 1/2]`; shell
/// regimes `r = 1 ± d`, `d ∈ [10⁻⁶, 0.499]`; mixed `J` regime
/// `r ∈ [1, 50]`, `ρ/r ∈ [1/2, 2]` (with `ρ >= 1`).
pub fn envelope_ratio_scan(nu: f64, n: u32, regime: Regime, samples: usize) -> Result<RatioBracket> {
    check_nu(nu)?;
    let crit = n as f64 - 1.0;
    let valid = match regime {
        Regime::ShellSub => nu < crit,
        Regime::ShellLog => nu == crit,
        Regime::ShellSuper => nu > crit,
        _ => true,
    };
    if !valid || samples < 2 {
        return Err(Error::Config(format!(
            "regime {regime:?} does not apply to nu = {nu}, n = {n} (or fewer than 2 samples)"
        )));
    }
    let tol = 1e-10;
    let points: Vec<(f64, f64)> = match regime {
        Regime::Far => logspace(2.0, 100.0, samples).into_iter().map(|r| (r, 1.0)).collect(),
        Regime::NearOrigin => logspace(1e-3, 0.5, samples).into_iter().map(|r| (r, 1.0)).collect(),
        Regime::ShellSub | Regime::ShellLog | Regime::ShellSuper => {
            let d = logspace(1e-6, 0.499, samples.div_ceil(2));
            d.iter().flat_map(|&d| [(1.0 - d, 1.0), (1.0 + d, 1.0)]).collect()
        }
        Regime::MixedJ => {
            let rs = logspace(1.0, 50.0, samples);
            let ks = logspace(0.5, 2.0, 7);
            rs.iter()
                .flat_map(|&r| ks.iter().map(move |&k| (r, (k * r).max(1.0))))
                .collect()
        }
    };
    let ratios = points
        .par_iter()
        .map(|&(r, rho)| {
            if regime == Regime::MixedJ {
                Ok(eval_j(nu, r, rho, n, tol)? / envelope_j(nu, r, rho, n).value)
            } else {
                Ok(eval_i(nu, r, n, tol)? / envelope_i(nu, r, n).value)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(RatioBracket {
        regime,
        nu,
        n,
        min_ratio,
        max_ratio,
        samples: points.len(),
    })
}
