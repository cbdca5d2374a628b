//! Angular-integrability regularity criteria for Leray solutions: the
//! threshold classifier and the full hypothesis systems of the global and
//! local criteria.

use serde::{Deserialize, Serialize};

use super::verdict::{Builder, Relation, Verdict};
use crate::error::IndexError;
use crate::index::{approx_eq, lambda_index, ptilde_global, ptilde_local, ExtReal, IndexTuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityValue {
    Global,
    LocalOnly,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityClass {
    pub value: RegularityValue,
    /// `p̃_L`, absent when `α` is outside `[-1/2, 1)`.
    pub ptilde_local: Option<ExtReal>,
    /// `p̃_G`, absent when `α` is outside `[(1-n)/2, 1/2]`.
    pub ptilde_global: Option<ExtReal>,
    /// `p̃` sits exactly on the threshold that decided the class.
    pub boundary: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Global,
    Local,
}

fn scaling_residual(alpha: f64, p: ExtReal, s: ExtReal, n: f64) -> f64 {
    2.0 * s.recip() + n * p.recip() - (1.0 - alpha)
}

/// Classifies `‖|x|^α u‖_{L^s_T L^p L^p̃}` by the angular thresholds.
///
/// Requires `2/s + n/p = 1 − α`. Side conditions of the criteria (ranges of
/// `p`, `s`, the datum) do not affect the class; see [`check_yz`].
pub fn classify_regularity(
    alpha: f64,
    p: ExtReal,
    p_tilde: ExtReal,
    s: ExtReal,
    n: u32,
) -> Result<RegularityClass, IndexError> {
    let nf = n as f64;
    let res = scaling_residual(alpha, p, s, nf);
    if !approx_eq(res, 0.0) {
        return Err(IndexError::Scaling {
            relation: "2/s + n/p = 1 - alpha",
            residual: res,
        });
    }
    let lo = (1.0 - nf) / 2.0;
    if !(alpha >= lo && alpha < 1.0) {
        return Err(IndexError::Domain {
            field: "alpha",
            reason: format!("outside the union of criterion ranges [{lo}, 1), got {alpha}"),
        });
    }
    let pl = ptilde_local(alpha, p, n).ok();
    let pg = ptilde_global(alpha, p, n).ok();
    let mut notes = Vec::new();
    if n < 3 {
        notes.push("criteria are stated for n >= 3".to_string());
    }
    let at = |th: ExtReal| th.approx_eq(p_tilde);
    let ge = |th: ExtReal| at(th) || p_tilde > th;
    let (value, boundary) = match (pl, pg) {
        (_, Some(g)) if ge(g) => (RegularityValue::Global, at(g)),
        (Some(l), _) if ge(l) => (RegularityValue::LocalOnly, at(l)),
        _ => (RegularityValue::Unknown, false),
    };
    if pg.is_none() {
        notes.push(format!("global threshold undefined for alpha = {alpha} > 1/2"));
    }
    if pl.is_none() {
        notes.push(format!("local threshold undefined for alpha = {alpha} < -1/2"));
    }
    Ok(RegularityClass {
        value,
        ptilde_local: pl,
        ptilde_global: pg,
        boundary,
        notes,
    })
}

fn push_p_range(b: &mut Builder, p: f64, floor: f64, alt: f64) {
    if approx_eq(p, alt) {
        b.push(&format!("p={alt}"), &format!("p = {alt} (endpoint alternative)"), p, Relation::Eq, alt);
    } else {
        b.push("p>floor", &format!("max({alt}, n/(1-alpha)) < p"), p, Relation::Gt, floor);
        b.push("p<inf", "p < inf", p, Relation::Lt, f64::INFINITY);
    }
}

/// Full hypothesis system of the global or local criterion. Datum conditions
/// are included when any of `p0`, `p0_tilde`, `alpha0` is present.
pub fn check_yz(t: &IndexTuple, which: Criterion) -> Result<Verdict, IndexError> {
    t.validate()?;
    let n = t.n;
    let nf = t.nf();
    let alpha = t.req_alpha()?;
    let p = t.req_p()?;
    let pt = t.req_p_tilde()?;
    let s = t.req_s()?;
    let with_datum = t.p0.is_some() || t.p0_tilde.is_some() || t.alpha0.is_some();
    let datum = if with_datum {
        Some((t.req_alpha0()?, t.req_p0()?, t.req_p0_tilde()?))
    } else {
        None
    };

    let mut b = Builder::new();
    b.push("n>=3", "n >= 3", nf, Relation::Ge, 3.0);
    let pf = p.as_f64();
    let negative = alpha < 0.0;
    let threshold = match which {
        Criterion::Global => {
            if negative {
                b.push("alpha>=(1-n)/2", "alpha >= (1-n)/2", alpha, Relation::Ge, (1.0 - nf) / 2.0);
                b.push("p>n/(1-alpha)", "n/(1-alpha) < p", pf, Relation::Gt, nf / (1.0 - alpha));
                b.push("p<=(1-n)/alpha", "p <= (1-n)/alpha", pf, Relation::Le, (1.0 - nf) / alpha);
            } else {
                b.push("alpha<=1/2", "alpha <= 1/2", alpha, Relation::Le, 0.5);
                push_p_range(&mut b, pf, 4f64.max(nf / (1.0 - alpha)), 4.0);
            }
            match ptilde_global(alpha, p, n) {
                Ok(g) => {
                    b.push("p~>=p~_G", "p~ >= p~_G", pt.as_f64(), Relation::Ge, g.as_f64());
                    Some(g)
                }
                Err(e) => {
                    b.note(format!("p~_G undefined: {e}"));
                    None
                }
            }
        }
        Criterion::Local => {
            if negative {
                b.push("alpha>=-1/2", "alpha >= -1/2", alpha, Relation::Ge, -0.5);
            } else {
                b.push("alpha<1", "alpha < 1", alpha, Relation::Lt, 1.0);
            }
            push_p_range(&mut b, pf, 2f64.max(nf / (1.0 - alpha)), 2.0);
            match ptilde_local(alpha, p, n) {
                Ok(l) => {
                    b.push("p~>=p~_L", "p~ >= p~_L", pt.as_f64(), Relation::Ge, l.as_f64());
                    Some(l)
                }
                Err(e) => {
                    b.note(format!("p~_L undefined: {e}"));
                    None
                }
            }
        }
    };
    b.push(
        "scaling",
        "2/s + n/p = 1 - alpha",
        2.0 * s.recip() + nf * p.recip(),
        Relation::Eq,
        1.0 - alpha,
    );
    b.push("s>2/(1-alpha)", "2/(1-alpha) < s", s.as_f64(), Relation::Gt, 2.0 / (1.0 - alpha));
    b.push("s<inf", "s < inf", s.as_f64(), Relation::Lt, f64::INFINITY);

    if let Some((a0, p0, pt0)) = datum {
        let p0f = p0.as_f64();
        b.push("alpha0=1-n/p0", "alpha0 = 1 - n/p0", a0, Relation::Eq, 1.0 - nf * p0.recip());
        match which {
            Criterion::Global => {
                b.push("alpha0>=(2-n)/2", "alpha0 >= (2-n)/2", a0, Relation::Ge, (2.0 - nf) / 2.0);
                b.push("alpha0<2/(2+n)", "alpha0 < 2/(2+n)", a0, Relation::Lt, 2.0 / (2.0 + nf));
                // the datum caps are p~_G/2 for negative alpha, p/2 otherwise
                let cap = if negative { threshold.map_or(f64::NAN, ExtReal::as_f64) } else { pf };
                let name = if negative { "p~_G" } else { "p" };
                b.push("p0~<=cap/2", &format!("p0~ <= {name}/2"), pt0.as_f64(), Relation::Le, cap / 2.0);
                b.push("p0>=2", "2 <= p0", p0f, Relation::Ge, 2.0);
                b.push("p0<=cap/2", &format!("p0 <= {name}/2"), p0f, Relation::Le, cap / 2.0);
                if cap > 2.0 * nf {
                    b.push(
                        "p0<2cap/(cap-2n)",
                        &format!("p0 < 2{name}/({name} - 2n) (branch {name} > 2n)"),
                        p0f,
                        Relation::Lt,
                        2.0 * cap / (cap - 2.0 * nf),
                    );
                } else {
                    b.note(format!("datum branch {name} <= 2n"));
                }
            }
            Criterion::Local => {
                if negative {
                    b.push("alpha0>=1-n", "alpha0 >= 1 - n", a0, Relation::Ge, 1.0 - nf);
                    b.push("alpha0<(2-n)/(2+n)", "alpha0 < (2-n)/(2+n)", a0, Relation::Lt, (2.0 - nf) / (2.0 + nf));
                } else {
                    b.push(
                        "alpha0>=1-(1-alpha)n",
                        "alpha0 >= 1 - (1-alpha)n",
                        a0,
                        Relation::Ge,
                        1.0 - (1.0 - alpha) * nf,
                    );
                    b.push(
                        "alpha0<1-(1-alpha)2n/(2+n)",
                        "alpha0 < 1 - (1-alpha)2n/(2+n)",
                        a0,
                        Relation::Lt,
                        1.0 - (1.0 - alpha) * 2.0 * nf / (2.0 + nf),
                    );
                }
                b.push("p0~<=p/2", "p0~ <= p/2", pt0.as_f64(), Relation::Le, pf / 2.0);
                b.push(
                    "Lambda(alpha0,p0,p0~)>=0",
                    "Lambda(alpha0, p0, p0~) >= 0",
                    lambda_index(a0, p0, pt0, n),
                    Relation::Ge,
                    0.0,
                );
                if negative {
                    b.push("p0>=1", "1 <= p0", p0f, Relation::Ge, 1.0);
                    b.push("p0<=p/2", "p0 <= p/2", p0f, Relation::Le, pf / 2.0);
                    if pf > nf {
                        b.push("p0<p/(p-n)", "p0 < p/(p - n) (branch p > n)", p0f, Relation::Lt, pf / (pf - nf));
                    } else {
                        b.note("datum branch p <= n");
                    }
                } else {
                    b.push("p0>=1/(1-alpha)", "1/(1-alpha) <= p0", p0f, Relation::Ge, 1.0 / (1.0 - alpha));
                    b.push("p0<=p/2", "p0 <= p/2", p0f, Relation::Le, pf / 2.0);
                    let den = (1.0 - alpha) * pf - nf;
                    if den > 0.0 {
                        b.push("p0<p/((1-alpha)p-n)", "p0 < p/((1-alpha)p - n)", p0f, Relation::Lt, pf / den);
                    } else {
                        b.note("(1-alpha)p - n <= 0: bound p0 < p/((1-alpha)p - n) vacuous");
                    }
                }
            }
        }
    } else {
        b.note("datum conditions not checked (p0, p0_tilde, alpha0 absent)");
    }
    let id = match which {
        Criterion::Global => "yz-global",
        Criterion::Local => "yz-local",
    };
    Ok(b.finish(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::{Overall, Status};
    use crate::index::{ExtReal::Finite as F, INF};

    #[test]
    fn classifier_examples() {
        let c = classify_regularity(-0.5, F(3.0), F(12.0), F(4.0), 3).unwrap();
        assert_eq!(c.value, RegularityValue::Global);
        assert!(c.ptilde_local.unwrap().approx_eq(F(3.0)));
        assert!(c.ptilde_global.unwrap().approx_eq(F(12.0)));
        assert!(c.boundary);
        let c = classify_regularity(-0.5, F(3.0), F(3.0), F(4.0), 3).unwrap();
        assert_eq!(c.value, RegularityValue::LocalOnly);
        let c = classify_regularity(-0.5, F(3.0), F(2.0), F(4.0), 3).unwrap();
        assert_eq!(c.value, RegularityValue::Unknown);
        assert!(!c.boundary);
    }

    #[test]
    fn monitor_tuple_is_global_boundary() {
        let c = classify_regularity(-0.5, F(2.0), F(4.0), INF, 3).unwrap();
        assert_eq!(c.value, RegularityValue::Global);
        assert_eq!(c.ptilde_global, Some(F(4.0)));
        assert!(c.boundary);
    }

    #[test]
    fn scaling_violation_carries_residual() {
        match classify_regularity(0.0, F(3.0), F(3.0), F(4.0), 3) {
            Err(IndexError::Scaling { residual, .. }) => assert!((residual - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positive_alpha_above_half_has_no_global_threshold() {
        // α = 3/4, n = 3: 2/s + 3/p = 1/4 with p = 24, s = 16
        let c = classify_regularity(0.75, F(24.0), F(100.0), F(16.0), 3).unwrap();
        assert_eq!(c.ptilde_global, None);
        assert_eq!(c.value, RegularityValue::LocalOnly);
    }

    #[test]
    fn global_system_with_datum() {
        // α = -1/2, n = 3, p = 3, s = 4, p~ = 12 = p~_G; datum p0 = 3, α0 = 0, p0~ = 6
        let t = IndexTuple {
            n: 3,
            alpha: Some(-0.5),
            p: Some(F(3.0)),
            p_tilde: Some(F(12.0)),
            s: Some(F(4.0)),
            p0: Some(F(3.0)),
            p0_tilde: Some(F(6.0)),
            alpha0: Some(0.0),
            ..Default::default()
        };
        let v = check_yz(&t, Criterion::Global).unwrap();
        assert_eq!(v.overall, Overall::Pass, "{v:#?}");
        assert!(v.constraint("p0<2cap/(cap-2n)").is_some());
        let mut bad = t.clone();
        bad.p0_tilde = Some(F(7.0));
        let v = check_yz(&bad, Criterion::Global).unwrap();
        assert_eq!(v.violated().map(|c| c.id.as_str()).collect::<Vec<_>>(), ["p0~<=cap/2"]);
        let mut partial = t;
        partial.alpha0 = None;
        assert_eq!(check_yz(&partial, Criterion::Global).unwrap_err(), IndexError::Missing("alpha0"));
    }

    #[test]
    fn local_system_endpoint_p() {
        // α = -1/2, p = 2: 2/s = 3/2 - 3/2 = 0 forces s = ∞, which the criterion excludes.
        let t = IndexTuple {
            n: 3,
            alpha: Some(-0.5),
            p: Some(F(2.0)),
            p_tilde: Some(F(2.0)),
            s: Some(INF),
            ..Default::default()
        };
        let v = check_yz(&t, Criterion::Local).unwrap();
        assert_eq!(v.constraint("p=2").unwrap().status, Status::Satisfied);
        assert_eq!(v.constraint("s<inf").unwrap().status, Status::Violated);
        assert_eq!(v.constraint("p~>=p~_L").unwrap().status, Status::Satisfied);
    }
}
