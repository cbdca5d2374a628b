use serde::{Deserialize, Serialize};

use super::verdict::{status_of, Builder, Relation, Status, Verdict};
use crate::error::IndexError;
use crate::index::{ckn_deltas, IndexTuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CknMode {
    Fractional,
    /// Integer `σ ∈ {1, …, n−1}`; the lower bound on `α` is dropped.
    IntegerSigma,
}

/// Interpolation inequality
/// `‖|x|^{-γ}u‖_{L^r L^r̃} ≤ C ‖|x|^{-α}|D|^σ u‖^a_{L^p L^p̃} ‖|x|^{-β}u‖^{1-a}_{L^q L^q̃}`.
///
/// Scaling is checked as `Δ = γ − aα − (1−a)β`.
pub fn check_ckn(t: &IndexTuple, mode: CknMode) -> Result<Verdict, IndexError> {
    t.validate()?;
    let n = t.nf();
    let a = t.req_a()?;
    let sigma = t.req_sigma()?;
    let alpha = t.req_alpha()?;
    let beta = t.req_beta()?;
    let gamma = t.req_gamma()?;
    let (p, q, r) = (t.req_p()?, t.req_q()?, t.req_r()?);
    let (pt, qt, rt) = (t.req_p_tilde()?, t.req_q_tilde()?, t.req_r_tilde()?);
    let d = ckn_deltas(t)?;
    let delta = d.delta;
    let delta_t = d.delta_tilde.expect("all tilde exponents present");

    let mut b = Builder::new();
    for (id, e) in [("r<inf", r), ("r~<inf", rt), ("p<inf", p), ("p~<inf", pt), ("q<inf", q), ("q~<inf", qt)] {
        b.push(id, &format!("{} < inf", &id[..id.len() - 4]), e.as_f64(), Relation::Lt, f64::INFINITY);
    }
    match mode {
        CknMode::Fractional => {
            b.push("sigma>0", "0 < sigma", sigma, Relation::Gt, 0.0);
            b.push("sigma<n", "sigma < n", sigma, Relation::Lt, n);
        }
        CknMode::IntegerSigma => {
            b.push("sigma integer", "|sigma - round(sigma)| = 0", (sigma - sigma.round()).abs(), Relation::Eq, 0.0);
            b.push("sigma>=1", "sigma >= 1", sigma, Relation::Ge, 1.0);
            b.push("sigma<=n-1", "sigma <= n - 1", sigma, Relation::Le, n - 1.0);
        }
    }
    b.push("gamma<n/r", "gamma < n/r", gamma, Relation::Lt, n * r.recip());
    b.push("beta<n/q", "beta < n/q", beta, Relation::Lt, n * q.recip());
    if mode == CknMode::Fractional {
        b.push("alpha>n/p-n", "n/p - n < alpha", alpha, Relation::Gt, n * p.recip() - n);
    }
    b.push("alpha<n/p-sigma", "alpha < n/p - sigma", alpha, Relation::Lt, n * p.recip() - sigma);
    b.push(
        "scaling",
        "Delta = gamma - a*alpha - (1-a)*beta",
        delta,
        Relation::Eq,
        gamma - a * alpha - (1.0 - a) * beta,
    );
    let second = delta + (n - 1.0) * delta_t;
    b.push("Delta+(n-1)Delta~>=0", "Delta + (n-1) Delta~ >= 0", second, Relation::Ge, 0.0);
    let relaxed = status_of(Relation::Gt, second, 0.0) == Status::Satisfied;
    let (open, p_rel) = if relaxed {
        b.note("strict Delta + (n-1) Delta~ > 0: third group relaxed to non-strict inequalities");
        (Relation::Ge, Relation::Ge)
    } else {
        (Relation::Gt, Relation::Gt)
    };
    b.push("p>1", "1 < p", p.as_f64(), p_rel, 1.0);
    b.push("Delta>a(sigma-n/p)", "a(sigma - n/p) < Delta", delta, open, a * (sigma - n * p.recip()));
    b.push("Delta<=a*sigma", "Delta <= a sigma", delta, Relation::Le, a * sigma);
    b.push(
        "Delta~>=a(sigma-n/p~)",
        "a(sigma - n/p~) <= Delta~",
        delta_t,
        Relation::Ge,
        a * (sigma - n * pt.recip()),
    );
    b.push("Delta~<=a*sigma", "Delta~ <= a sigma", delta_t, Relation::Le, a * sigma);
    b.note(format!("Delta = {delta}, Delta~ = {delta_t}"));
    let id = match mode {
        CknMode::Fractional => "ckn",
        CknMode::IntegerSigma => "ckn-integer",
    };
    Ok(b.finish(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::Overall;
    use crate::index::ExtReal::Finite as F;

    fn hardy() -> IndexTuple {
        IndexTuple {
            n: 3,
            a: Some(1.0),
            sigma: Some(1.0),
            r: Some(F(2.0)),
            q: Some(F(2.0)),
            p: Some(F(2.0)),
            r_tilde: Some(F(2.0)),
            q_tilde: Some(F(2.0)),
            p_tilde: Some(F(2.0)),
            alpha: Some(0.0),
            beta: Some(0.0),
            gamma: Some(1.0),
            ..Default::default()
        }
    }

    #[test]
    fn hardy_tuple_passes_tight() {
        let v = check_ckn(&hardy(), CknMode::Fractional).unwrap();
        assert_eq!(v.overall, Overall::Pass, "{v:#?}");
        let c = v.constraint("Delta<=a*sigma").unwrap();
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.slack(), 0.0);
        assert_eq!(v.constraint("Delta~<=a*sigma").unwrap().lhs, 1.0);
    }

    #[test]
    fn large_gamma_fails_integrability() {
        let mut t = hardy();
        t.gamma = Some(1.6);
        let v = check_ckn(&t, CknMode::Fractional).unwrap();
        assert_eq!(v.overall, Overall::Fail);
        assert_eq!(v.constraint("gamma<n/r").unwrap().status, Status::Violated);
    }

    #[test]
    fn radial_emulation_with_zero_angular_delta() {
        let mut t = hardy();
        t.p_tilde = Some(F(2.0));
        t.r_tilde = Some(F(6.0));
        let v = check_ckn(&t, CknMode::Fractional).unwrap();
        let dt = v.constraint("Delta~<=a*sigma").unwrap().lhs;
        assert!(dt.abs() < 1e-14);
        assert_eq!(v.overall, Overall::Pass, "{v:#?}");
    }

    #[test]
    fn integer_mode_drops_alpha_floor() {
        // α = -2 < n/p - n = -1.5; scaling via γ = Δ + α with a = 1.
        let mut t = hardy();
        t.alpha = Some(-2.0);
        t.gamma = Some(-1.0);
        let f = check_ckn(&t, CknMode::Fractional).unwrap();
        assert_eq!(f.constraint("alpha>n/p-n").unwrap().status, Status::Violated);
        let i = check_ckn(&t, CknMode::IntegerSigma).unwrap();
        assert!(i.constraint("alpha>n/p-n").is_none());
        assert_eq!(i.overall, Overall::Pass, "{i:#?}");
        t.sigma = Some(1.5);
        let i = check_ckn(&t, CknMode::IntegerSigma).unwrap();
        assert_eq!(i.constraint("sigma integer").unwrap().status, Status::Violated);
    }

    #[test]
    fn spike_violation_of_upper_delta() {
        let t = IndexTuple {
            n: 3,
            a: Some(1.0),
            sigma: Some(1.0),
            p: Some(F(2.0)),
            p_tilde: Some(F(2.0)),
            r: Some(F(1.2)),
            r_tilde: Some(F(1.2)),
            q: Some(F(2.0)),
            q_tilde: Some(F(2.0)),
            alpha: Some(0.0),
            beta: Some(0.0),
            gamma: Some(2.0),
            ..Default::default()
        };
        let v = check_ckn(&t, CknMode::Fractional).unwrap();
        let c = v.constraint("Delta<=a*sigma").unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-12);
        assert_eq!(c.status, Status::Violated);
    }
}
