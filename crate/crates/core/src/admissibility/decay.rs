//! Hypotheses of the weighted heat and Oseen decay estimates.
//!
//! Output weight `|x|^β` in `L^q L^q̃`, input weight `|x|^α` in `L^p L^p̃`,
//! derivative order `|η|` (defaults to 0).

use serde::{Deserialize, Serialize};

use super::sw::{alpha_upper, beta_lower};
use super::verdict::{status_of, Builder, Relation, Status, Verdict};
use crate::error::IndexError;
use crate::index::{lambda_index, omega_index, ExtReal, IndexTuple, INF};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    PointwiseHeat,
    PointwiseOseen,
    LocalParabola,
    TimeIntegrated,
    Duhamel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub verdict: Verdict,
    /// Exponent `κ` of the `t^{-κ}` bound; `None` for the Duhamel estimate,
    /// which carries no pointwise rate.
    pub predicted_exponent: Option<f64>,
    /// `Λ_{α,β} = Λ(α,p,p̃) − Λ(β,q,q̃)`.
    pub lambda_gap: f64,
    /// Exponent of the `R^{-Λ_{α,β}}` amplification inside `Π(R)`
    /// (local parabola only).
    pub amplification_exponent: Option<f64>,
}

fn push_pq_range(b: &mut Builder, p: ExtReal, q: ExtReal, relaxed: bool) {
    if relaxed {
        b.push("p<=q", "p <= q", p.as_f64(), Relation::Le, q.as_f64());
    } else {
        b.push("p>1", "1 < p", p.as_f64(), Relation::Gt, 1.0);
        b.push("p<=q", "p <= q", p.as_f64(), Relation::Le, q.as_f64());
        b.push("q<inf", "q < inf", q.as_f64(), Relation::Lt, f64::INFINITY);
    }
}

pub fn check_decay_estimate(t: &IndexTuple, kind: DecayKind) -> Result<DecayCheck, IndexError> {
    t.validate()?;
    let n = t.n;
    let nf = t.nf();
    let p = t.req_p()?;
    let q = t.req_q()?;
    let pt = t.req_p_tilde()?;
    let qt = t.req_q_tilde()?;
    let alpha = t.req_alpha()?;
    let beta = t.req_beta()?;
    let eta = t.eta.unwrap_or(0) as f64;

    let lam_a = lambda_index(alpha, p, pt, n);
    let lam_b = lambda_index(beta, q, qt, n);
    let gap = lam_a - lam_b;
    let rate = eta + nf * p.recip() - nf * q.recip() + alpha - beta;

    let mut b = Builder::new();
    let mut predicted = Some(rate / 2.0);
    let mut amplification = None;
    let id = match kind {
        DecayKind::PointwiseHeat | DecayKind::PointwiseOseen => {
            let strict = status_of(Relation::Gt, lam_a, lam_b) == Status::Satisfied;
            push_pq_range(&mut b, p, q, strict);
            if strict {
                b.note("relaxation via strict inequality applies: 1 <= p <= q <= inf");
            }
            b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
            beta_lower(&mut b, beta, q, nf);
            alpha_upper(&mut b, alpha, p, nf);
            b.push("Lambda_a>=Lambda_b", "Lambda(alpha,p,p~) >= Lambda(beta,q,q~)", lam_a, Relation::Ge, lam_b);
            if kind == DecayKind::PointwiseHeat {
                b.push("rate>=0", "|eta| + n/p - n/q + alpha - beta >= 0", rate, Relation::Ge, 0.0);
                "decay-heat"
            } else {
                predicted = Some((rate + 1.0) / 2.0);
                b.push("rate>0", "1 + |eta| + n/p - n/q + alpha - beta > 0", rate + 1.0, Relation::Gt, 0.0);
                "decay-oseen"
            }
        }
        DecayKind::LocalParabola => {
            push_pq_range(&mut b, p, q, false);
            b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
            beta_lower(&mut b, beta, q, nf);
            alpha_upper(&mut b, alpha, p, nf);
            b.push("Lambda_a<Lambda_b", "Lambda(alpha,p,p~) < Lambda(beta,q,q~)", lam_a, Relation::Lt, lam_b);
            b.push("rate>=0", "|eta| + n/p - n/q + alpha - beta >= 0", rate, Relation::Ge, 0.0);
            amplification = Some(-gap);
            b.note(format!("constant grows like R^{} inside |x|/sqrt(t) < R", -gap));
            "decay-local"
        }
        DecayKind::TimeIntegrated => {
            let r = t.req_r()?;
            b.push("p>1", "1 < p", p.as_f64(), Relation::Gt, 1.0);
            b.push("p<=q", "p <= q", p.as_f64(), Relation::Le, q.as_f64());
            b.push("q<inf", "q < inf", q.as_f64(), Relation::Lt, f64::INFINITY);
            let den = (eta + alpha - beta) * p.as_f64() + nf - 2.0;
            b.push(
                "q<np/((|eta|+alpha-beta)p+n-2)",
                "1/q > ((|eta| + alpha - beta)p + n - 2)/(np)",
                q.recip(),
                Relation::Gt,
                den * p.recip() / nf,
            );
            b.push("r>1", "1 < r", r.as_f64(), Relation::Gt, 1.0);
            b.push("r<inf", "r < inf", r.as_f64(), Relation::Lt, f64::INFINITY);
            b.push("p~<=q~", "p~ <= q~", pt.as_f64(), Relation::Le, qt.as_f64());
            beta_lower(&mut b, beta, q, nf);
            alpha_upper(&mut b, alpha, p, nf);
            b.push(
                "scaling",
                "|eta| + Omega(alpha,p,inf) = Omega(beta,q,r)",
                eta + omega_index(alpha, p, INF, n),
                Relation::Eq,
                omega_index(beta, q, r, n),
            );
            b.push("Lambda_a>=Lambda_b", "Lambda(alpha,p,p~) >= Lambda(beta,q,q~)", lam_a, Relation::Ge, lam_b);
            "decay-integrated"
        }
        DecayKind::Duhamel => {
            let r = t.req_r()?;
            let s = t.req_s()?;
            predicted = None;
            let strict = status_of(Relation::Gt, 2.0 * lam_a, lam_b) == Status::Satisfied;
            if strict {
                b.push("p<=2q", "p <= 2q", p.as_f64(), Relation::Le, 2.0 * q.as_f64());
                b.note("relaxation via strict inequality applies: 1 <= p <= 2q <= inf");
            } else {
                b.push("p>1", "1 < p", p.as_f64(), Relation::Gt, 1.0);
                b.push("p<=2q", "p <= 2q", p.as_f64(), Relation::Le, 2.0 * q.as_f64());
                b.push("q<inf", "2q < inf", q.as_f64(), Relation::Lt, f64::INFINITY);
            }
            b.push("s>1", "1 < s", s.as_f64(), Relation::Gt, 1.0);
            b.push("s<=2r", "s <= 2r", s.as_f64(), Relation::Le, 2.0 * r.as_f64());
            b.push("r<inf", "2r < inf", r.as_f64(), Relation::Lt, f64::INFINITY);
            beta_lower(&mut b, beta, q, nf);
            alpha_upper(&mut b, alpha, p, nf);
            b.push(
                "2Lambda_a>=Lambda_b",
                "2 Lambda(alpha,p,p~) >= Lambda(beta,q,q~)",
                2.0 * lam_a,
                Relation::Ge,
                lam_b,
            );
            let om_a = omega_index(alpha, p, s, n);
            let om_b = omega_index(beta, q, r, n);
            let symmetric = alpha == beta && p == q && pt == qt && s == r;
            if symmetric {
                b.note("symmetric case: scaling reads 2/r + n/q = 1 - beta - |eta|, Lambda(beta,q,q~) >= 0");
                b.push("scaling", "Omega(beta,q,r) = 1 - |eta|", om_b, Relation::Eq, 1.0 - eta);
            } else {
                b.push(
                    "scaling",
                    "2 Omega(alpha,p,s) = Omega(beta,q,r) + 1 - |eta|",
                    2.0 * om_a,
                    Relation::Eq,
                    om_b + 1.0 - eta,
                );
            }
            "decay-duhamel"
        }
    };
    Ok(DecayCheck {
        verdict: b.finish(id),
        predicted_exponent: predicted,
        lambda_gap: gap,
        amplification_exponent: amplification,
    })
}
