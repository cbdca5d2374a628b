//! Stein–Weiss type systems: classical, radial and mixed radial-angular
//! fractional integration, the nonhomogeneous/smooth-kernel corollary and
//! the weighted Sobolev embeddings.

use serde::{Deserialize, Serialize};

use super::verdict::{Builder, Relation, Status, Verdict};
use crate::error::IndexError;
use crate::index::{ExtReal, IndexTuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwVariant {
    Classical,
    Radial,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwMode {
    /// `1 < p <= q < ∞`.
    General,
    /// Third condition strict; `1 <= p <= q <= ∞`.
    Strict,
    /// Fourier support in an annulus; `1 <= p <= q <= ∞`.
    Annulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevMode {
    Embedding,
    Strauss,
}

/// `β < n/q`, read as `β <= 0` at `q = ∞` (bounded output weight near 0).
pub(crate) fn beta_upper(b: &mut Builder, beta: f64, q: ExtReal, n: f64) {
    if q.is_infinite() {
        b.push("beta<n/q", "beta <= 0 (q = inf endpoint of beta < n/q)", beta, Relation::Le, 0.0);
    } else {
        b.push("beta<n/q", "beta < n/q", beta, Relation::Lt, n * q.recip());
    }
}

/// `α < n/p'`, read as `α <= 0` at `p = 1`.
pub(crate) fn alpha_upper(b: &mut Builder, alpha: f64, p: ExtReal, n: f64) {
    let conj_recip = 1.0 - p.recip();
    if conj_recip == 0.0 {
        b.push("alpha<n/p'", "alpha <= 0 (p = 1 endpoint of alpha < n/p')", alpha, Relation::Le, 0.0);
    } else {
        b.push("alpha<n/p'", "alpha < n/p'", alpha, Relation::Lt, n * conj_recip);
    }
}

/// `β > −n/q`, read as `β >= 0` at `q = ∞`.
pub(crate) fn beta_lower(b: &mut Builder, beta: f64, q: ExtReal, n: f64) {
    if q.is_infinite() {
        b.push("beta>-n/q", "beta >= 0 (q = inf endpoint of beta > -n/q)", beta, Relation::Ge, 0.0);
    } else {
        b.push("beta>-n/q", "beta > -n/q", beta, Relation::Gt, -n * q.recip());
    }
}

/// `(n−1)(1/q − 1/p + 1/p̃ − 1/q̃)`, grouped so that it is exactly zero
/// when `p = p̃` and `q = q̃`.
pub(crate) fn mixed_rhs(n: f64, p: ExtReal, q: ExtReal, pt: ExtReal, qt: ExtReal) -> f64 {
    (n - 1.0) * ((q.recip() - qt.recip()) + (pt.recip() - p.recip()))
}

fn push_range(b: &mut Builder, p: ExtReal, q: ExtReal, relaxed: bool) {
    if !relaxed {
        b.push("p>1", "1 < p", p.as_f64(), Relation::Gt, 1.0);
    }
    b.push("p<=q", "p <= q", p.as_f64(), Relation::Le, q.as_f64());
    if !relaxed {
        b.push("q<inf", "q < inf", q.as_f64(), Relation::Lt, f64::INFINITY);
    }
}

pub fn check_stein_weiss(t: &IndexTuple, variant: SwVariant, mode: SwMode) -> Result<Verdict, IndexError> {
    t.validate()?;
    let n = t.nf();
    let p = t.req_p()?;
    let q = t.req_q()?;
    let alpha = t.req_alpha()?;
    let beta = t.req_beta()?;
    let gamma = t.req_gamma()?;
    let tilde = if variant == SwVariant::Mixed {
        Some((t.req_p_tilde()?, t.req_q_tilde()?))
    } else {
        None
    };
    let relaxed = variant == SwVariant::Mixed && mode != SwMode::General;

    let mut b = Builder::new();
    push_range(&mut b, p, q, relaxed);
    if let Some((pt, qt)) = tilde {
        b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
    }
    beta_upper(&mut b, beta, q, n);
    alpha_upper(&mut b, alpha, p, n);
    b.push("gamma>0", "0 < gamma", gamma, Relation::Gt, 0.0);
    b.push("gamma<n", "gamma < n", gamma, Relation::Lt, n);
    b.push(
        "scaling",
        "alpha + beta + gamma = n + n/q - n/p",
        alpha + beta + gamma,
        Relation::Eq,
        n + n * q.recip() - n * p.recip(),
    );
    let id = match variant {
        SwVariant::Classical => {
            b.push("alpha+beta>=0", "alpha + beta >= 0", alpha + beta, Relation::Ge, 0.0);
            "sw-classical"
        }
        SwVariant::Radial => {
            b.push(
                "alpha+beta>=radial",
                "alpha + beta >= (n-1)(1/q - 1/p)",
                alpha + beta,
                Relation::Ge,
                (n - 1.0) * (q.recip() - p.recip()),
            );
            b.note("radial data only");
            "sw-radial"
        }
        SwVariant::Mixed => {
            let (pt, qt) = tilde.expect("mixed variant reads p~, q~");
            let rhs = mixed_rhs(n, p, q, pt, qt);
            let desc = "alpha + beta >= (n-1)(1/q - 1/p + 1/p~ - 1/q~)";
            match mode {
                SwMode::Strict => {
                    b.push("alpha+beta>=mixed", &desc.replace(">=", ">"), alpha + beta, Relation::Gt, rhs);
                    b.note("index range relaxed to 1 <= p <= q <= inf (strict third condition)");
                }
                SwMode::Annulus => {
                    b.push("alpha+beta>=mixed", desc, alpha + beta, Relation::Ge, rhs);
                    b.note("index range relaxed to 1 <= p <= q <= inf (Fourier support in an annulus assumed)");
                }
                SwMode::General => {
                    let st = b.push("alpha+beta>=mixed", desc, alpha + beta, Relation::Ge, rhs);
                    let strict = st == Status::Satisfied
                        && super::verdict::status_of(Relation::Gt, alpha + beta, rhs) == Status::Satisfied;
                    let off_range = p.as_f64() <= 1.0 || q.is_infinite();
                    if strict && off_range {
                        b.note("relaxation via strict inequality applies: rerun in strict mode for 1 <= p <= q <= inf");
                    }
                }
            }
            match mode {
                SwMode::General => "mixed-sw",
                SwMode::Strict => "mixed-sw-strict",
                SwMode::Annulus => "mixed-sw-annulus",
            }
        }
    };
    Ok(b.finish(id))
}

/// Nonhomogeneous kernel `⟨x⟩^{-γ}` (γ-form) and smooth potential
/// `⟨x⟩^{-μ} * φ` (μ-form). Both forms are checked when both exponents are
/// present.
pub fn check_nonhomogeneous(t: &IndexTuple) -> Result<Verdict, IndexError> {
    t.validate()?;
    if t.gamma.is_none() && t.mu.is_none() {
        return Err(IndexError::Missing("gamma"));
    }
    let n = t.nf();
    let p = t.req_p()?;
    let q = t.req_q()?;
    let pt = t.req_p_tilde()?;
    let qt = t.req_q_tilde()?;
    let alpha = t.req_alpha()?;
    let beta = t.req_beta()?;

    let mut b = Builder::new();
    b.push("p<=q", "p <= q", p.as_f64(), Relation::Le, q.as_f64());
    b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
    beta_upper(&mut b, beta, q, n);
    alpha_upper(&mut b, alpha, p, n);
    b.push(
        "alpha+beta>=mixed",
        "alpha + beta >= (n-1)(1/q - 1/p + 1/p~ - 1/q~)",
        alpha + beta,
        Relation::Ge,
        mixed_rhs(n, p, q, pt, qt),
    );
    let homogeneity = n * (1.0 + q.recip() - p.recip());
    if let Some(gamma) = t.gamma {
        b.push(
            "alpha+beta+gamma>n(1+1/q-1/p)",
            "alpha + beta + gamma > n(1 + 1/q - 1/p)",
            alpha + beta + gamma,
            Relation::Gt,
            homogeneity,
        );
    }
    if let Some(mu) = t.mu {
        b.push(
            "mu>-alpha-beta+n(1+1/q-1/p)",
            "mu > -alpha - beta + n(1 + 1/q - 1/p)",
            mu,
            Relation::Gt,
            -alpha - beta + homogeneity,
        );
    }
    Ok(b.finish("nonhomogeneous"))
}

/// Weighted Sobolev embedding `‖|x|^{-β}u‖ ≲ ‖|x|^α |D|^σ u‖` and the
/// pointwise Strauss-type window.
pub fn check_sobolev_embedding(t: &IndexTuple, mode: SobolevMode) -> Result<Verdict, IndexError> {
    t.validate()?;
    let n = t.nf();
    let sigma = t.req_sigma()?;
    let p = t.req_p()?;
    let pt = t.req_p_tilde()?;
    let mut b = Builder::new();
    match mode {
        SobolevMode::Strauss => {
            b.push("p>1", "1 < p", p.as_f64(), Relation::Gt, 1.0);
            b.push("p<inf", "p < inf", p.as_f64(), Relation::Lt, f64::INFINITY);
            let lower = (n - 1.0) * pt.recip() + p.recip();
            let upper = n * p.recip();
            b.push("sigma>window", "(n-1)/p~ + 1/p < sigma", sigma, Relation::Gt, lower);
            b.push("sigma<n/p", "sigma < n/p", sigma, Relation::Lt, upper);
            if lower >= upper {
                b.note(format!("empty window: ({lower}, {upper})"));
            }
            b.note(format!("pointwise weight exponent n/p - sigma = {}", upper - sigma));
            Ok(b.finish("strauss"))
        }
        SobolevMode::Embedding => {
            let q = t.req_q()?;
            let qt = t.req_q_tilde()?;
            let alpha = t.req_alpha()?;
            let beta = t.req_beta()?;
            let rhs = mixed_rhs(n, p, q, pt, qt);
            let strict = super::verdict::status_of(Relation::Gt, alpha + beta, rhs) == Status::Satisfied;
            push_range(&mut b, p, q, strict);
            if strict {
                b.note("strict third condition: index range 1 <= p <= q <= inf");
            }
            b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
            beta_upper(&mut b, beta, q, n);
            alpha_upper(&mut b, alpha, p, n);
            b.push("sigma>0", "0 < sigma", sigma, Relation::Gt, 0.0);
            b.push("sigma<n", "sigma < n", sigma, Relation::Lt, n);
            b.push(
                "scaling",
                "alpha + beta = sigma + n/q - n/p",
                alpha + beta,
                Relation::Eq,
                sigma + n * q.recip() - n * p.recip(),
            );
            b.push(
                "alpha+beta>=mixed",
                "alpha + beta >= (n-1)(1/q - 1/p + 1/p~ - 1/q~)",
                alpha + beta,
                Relation::Ge,
                rhs,
            );
            Ok(b.finish("weighted-sobolev"))
        }
    }
}
