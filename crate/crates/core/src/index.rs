//! Exponent arithmetic: extended reals, index tuples and the closed-form
//! index quantities (Hölder conjugates, Λ, Ω, angular thresholds, CKN
//! deltas, Stein–Weiss scaling).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::IndexError;

/// Absolute/relative tolerance used for every real comparison of exponents.
pub const TOL: f64 = 1e-12;

/// `|a - b| <= TOL * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * 1f64.max(a.abs()).max(b.abs())
}

/// A Lebesgue exponent: a finite real or `+∞`.
///
/// `∞` is a distinct variant so that `1/∞ = 0` holds exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

pub use ExtReal::Infinity as INF;

impl ExtReal {
    pub fn new(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(x)
        }
    }

    /// Reciprocal with `1/∞ = 0` and `1/0 = ∞`.
    pub fn recip(self) -> f64 {
        match self {
            ExtReal::Infinity => 0.0,
            ExtReal::Finite(x) => 1.0 / x,
        }
    }

    /// Inverse of [`ExtReal::recip`]: builds the exponent whose reciprocal is `r`.
    pub fn from_recip(r: f64) -> Self {
        if r == 0.0 {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(1.0 / r)
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    /// Value as an `f64`, mapping `∞` to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtReal::Infinity => f64::INFINITY,
            ExtReal::Finite(x) => x,
        }
    }

    pub fn approx_eq(self, other: ExtReal) -> bool {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => true,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => approx_eq(a, b),
            _ => false,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::new(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl ExtReal {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => Ordering::Equal,
            (ExtReal::Infinity, _) => Ordering::Greater,
            (_, ExtReal::Infinity) => Ordering::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Infinity => write!(f, "inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Infinity => s.serialize_str("inf"),
            ExtReal::Finite(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal::new(x)),
            Raw::Str(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" | "∞" => Ok(ExtReal::Infinity),
                other => other
                    .parse::<f64>()
                    .map(ExtReal::new)
                    .map_err(|_| serde::de::Error::custom(format!("not an exponent: {s:?}"))),
            },
        }
    }
}

/// Every exponent symbol used by the condition systems. Absent fields are
/// `None`; checkers report the first missing field they need.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexTuple {
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_tilde: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_tilde: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<u32>,
    /// Initial-datum exponents of the regularity criteria.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0_tilde: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
}

macro_rules! required {
    ($name:ident, $field:ident, $ty:ty) => {
        pub fn $name(&self) -> Result<$ty, IndexError> {
            self.$field.ok_or(IndexError::Missing(stringify!($field)))
        }
    };
}

impl IndexTuple {
    pub fn new(n: u32) -> Self {
        IndexTuple {
            n,
            ..Default::default()
        }
    }

    required!(req_p, p, ExtReal);
    required!(req_p_tilde, p_tilde, ExtReal);
    required!(req_q, q, ExtReal);
    required!(req_q_tilde, q_tilde, ExtReal);
    required!(req_r, r, ExtReal);
    required!(req_r_tilde, r_tilde, ExtReal);
    required!(req_s, s, ExtReal);
    required!(req_alpha, alpha, f64);
    required!(req_beta, beta, f64);
    required!(req_gamma, gamma, f64);
    required!(req_sigma, sigma, f64);
    required!(req_mu, mu, f64);
    required!(req_a, a, f64);
    required!(req_p0, p0, ExtReal);
    required!(req_p0_tilde, p0_tilde, ExtReal);
    required!(req_alpha0, alpha0, f64);

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Checks the tuple invariants: `n >= 2`, every present Lebesgue exponent
    /// in `[1, ∞]`, `a ∈ (0, 1]`, all reals finite.
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.n < 2 {
            return Err(IndexError::Domain {
                field: "n",
                reason: format!("dimension must be >= 2, got {}", self.n),
            });
        }
        let lebesgue = [
            ("p", self.p),
            ("p_tilde", self.p_tilde),
            ("q", self.q),
            ("q_tilde", self.q_tilde),
            ("r", self.r),
            ("r_tilde", self.r_tilde),
            ("s", self.s),
            ("p0", self.p0),
            ("p0_tilde", self.p0_tilde),
        ];
        for (field, v) in lebesgue {
            if let Some(ExtReal::Finite(x)) = v {
                if !x.is_finite() || x < 1.0 {
                    return Err(IndexError::Domain {
                        field,
                        reason: format!("Lebesgue exponent must lie in [1, inf], got {x}"),
                    });
                }
            }
        }
        let reals = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("alpha0", self.alpha0),
        ];
        for (field, v) in reals {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(IndexError::Domain {
                        field,
                        reason: format!("must be finite, got {x}"),
                    });
                }
            }
        }
        if let Some(a) = self.a {
            if !(a > 0.0 && a <= 1.0) {
                return Err(IndexError::Domain {
                    field: "a",
                    reason: format!("interpolation weight must lie in (0, 1], got {a}"),
                });
            }
        }
        Ok(())
    }
}

fn check_lebesgue(field: &'static str, p: ExtReal) -> Result<(), IndexError> {
    match p {
        ExtReal::Finite(x) if !(x >= 1.0) || !x.is_finite() => Err(IndexError::Domain {
            field,
            reason: format!("Lebesgue exponent must lie in [1, inf], got {x}"),
        }),
        _ => Ok(()),
    }
}

/// `p'` with `1/p + 1/p' = 1`.
pub fn holder_conjugate(p: ExtReal) -> Result<ExtReal, IndexError> {
    check_lebesgue("p", p)?;
    let r = 1.0 - p.recip();
    if approx_eq(r, 0.0) {
        return Ok(ExtReal::Infinity);
    }
    Ok(ExtReal::Finite(1.0 / r))
}

/// `Λ(α, p, p̃) = α + (n−1)/p − (n−1)/p̃`.
pub fn lambda_index(alpha: f64, p: ExtReal, p_tilde: ExtReal, n: u32) -> f64 {
    let m = n as f64 - 1.0;
    if p == p_tilde {
        return alpha;
    }
    alpha + m * p.recip() - m * p_tilde.recip()
}

/// `Ω(α, p, s) = α + n/p + 2/s`.
pub fn omega_index(alpha: f64, p: ExtReal, s: ExtReal, n: u32) -> f64 {
    alpha + n as f64 * p.recip() + 2.0 * s.recip()
}

/// Angular integrability threshold for local regularity, `p̃_L`.
///
/// Defined for `α ∈ [−1/2, 1)`; the branch switches at `α = 0`.
pub fn ptilde_local(alpha: f64, p: ExtReal, n: u32) -> Result<ExtReal, IndexError> {
    check_lebesgue("p", p)?;
    if !(alpha >= -0.5 && alpha < 1.0) {
        return Err(IndexError::Domain {
            field: "alpha",
            reason: format!("local threshold defined for alpha in [-1/2, 1), got {alpha}"),
        });
    }
    let m2 = 2.0 * (n as f64 - 1.0);
    let lead = if alpha < 0.0 { 2.0 * alpha + 1.0 } else { 1.0 };
    // 2(n-1)p / (lead p + 2(n-1)) written through 1/p
    let den = lead + m2 * p.recip();
    if approx_eq(den, 0.0) {
        return Ok(ExtReal::Infinity);
    }
    Ok(ExtReal::Finite(m2 / den))
}

/// Angular integrability threshold for global regularity, `p̃_G`.
///
/// Defined for `α ∈ [(1−n)/2, 1/2]`. When `αp + n − 1 = 0` the threshold
/// degenerates and `∞` is returned; a negative denominator is a domain error.
pub fn ptilde_global(alpha: f64, p: ExtReal, n: u32) -> Result<ExtReal, IndexError> {
    check_lebesgue("p", p)?;
    let m = n as f64 - 1.0;
    let lo = (1.0 - n as f64) / 2.0;
    if !(alpha >= lo - TOL && alpha <= 0.5 + TOL) {
        return Err(IndexError::Domain {
            field: "alpha",
            reason: format!("global threshold defined for alpha in [{lo}, 1/2], got {alpha}"),
        });
    }
    // (n-1)p / (αp + n-1) = (n-1) / (α + (n-1)/p)
    let den = alpha + m * p.recip();
    let base = if approx_eq(den, 0.0) {
        ExtReal::Infinity
    } else if den < 0.0 {
        return Err(IndexError::Domain {
            field: "p",
            reason: format!("alpha*p + n - 1 < 0 (alpha = {alpha}, p = {p})"),
        });
    } else {
        ExtReal::Finite(m / den)
    };
    if alpha < 0.0 {
        Ok(if base.total_cmp(&ExtReal::Finite(4.0)) == Ordering::Less {
            ExtReal::Finite(4.0)
        } else {
            base
        })
    } else {
        Ok(base)
    }
}

/// Output of [`ckn_deltas`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CknDeltas {
    pub delta: f64,
    pub delta_tilde: Option<f64>,
    /// `Δ − (γ − aα − (1−a)β)`; vanishes exactly when the scaling relation holds.
    pub scaling_residual: Option<f64>,
}

/// `Δ = aσ + n(1/r − (1−a)/q − a/p)` and its angular counterpart `Δ̃`.
pub fn ckn_deltas(t: &IndexTuple) -> Result<CknDeltas, IndexError> {
    let a = t.req_a()?;
    let sigma = t.req_sigma()?;
    let n = t.nf();
    let delta = a * sigma
        + n * (t.req_r()?.recip() - (1.0 - a) * t.req_q()?.recip() - a * t.req_p()?.recip());
    let delta_tilde = match (t.r_tilde, t.q_tilde, t.p_tilde) {
        (Some(rt), Some(qt), Some(pt)) => {
            Some(a * sigma + n * (rt.recip() - (1.0 - a) * qt.recip() - a * pt.recip()))
        }
        _ => None,
    };
    let scaling_residual = match (t.gamma, t.alpha, t.beta) {
        (Some(g), Some(al), Some(be)) => Some(delta - (g - a * al - (1.0 - a) * be)),
        _ => None,
    };
    Ok(CknDeltas {
        delta,
        delta_tilde,
        scaling_residual,
    })
}

/// Result of solving the Stein–Weiss scaling relation for `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaSolve {
    pub gamma: f64,
    /// `true` when `γ ∉ (0, n)`.
    pub out_of_range: bool,
}

/// `γ = n + n/q − n/p − α − β`.
pub fn sw_scaling_gamma(
    alpha: f64,
    beta: f64,
    p: ExtReal,
    q: ExtReal,
    n: u32,
) -> Result<GammaSolve, IndexError> {
    check_lebesgue("p", p)?;
    check_lebesgue("q", q)?;
    let nf = n as f64;
    let gamma = nf + nf * q.recip() - nf * p.recip() - alpha - beta;
    let out_of_range = !(gamma > TOL && gamma < nf - TOL * nf.max(1.0));
    Ok(GammaSolve {
        gamma,
        out_of_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(x: f64) -> ExtReal {
        ExtReal::Finite(x)
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(f(2.0)).unwrap(), f(2.0));
        assert_eq!(holder_conjugate(f(1.0)).unwrap(), INF);
        assert_eq!(holder_conjugate(INF).unwrap(), f(1.0));
        assert!(holder_conjugate(f(4.0)).unwrap().approx_eq(f(4.0 / 3.0)));
        assert!(matches!(
            holder_conjugate(f(0.5)),
            Err(IndexError::Domain { field: "p", .. })
        ));
    }

    #[test]
    fn lambda_and_omega() {
        assert_eq!(lambda_index(0.0, f(3.0), f(3.0), 3), 0.0);
        assert!(approx_eq(lambda_index(-0.5, f(2.0), f(4.0), 3), 0.0));
        assert!(approx_eq(lambda_index(0.5, f(2.0), f(2.0), 3), 0.5));
        assert!(approx_eq(omega_index(0.0, f(2.0), INF, 3), 1.5));
        assert!(approx_eq(omega_index(-0.5, f(6.0), f(2.0), 3), 1.0));
        assert_eq!(omega_index(0.0, INF, INF, 5), 0.0);
    }

    #[test]
    fn thresholds() {
        assert!(ptilde_local(0.0, f(2.0), 3).unwrap().approx_eq(f(4.0 / 3.0)));
        assert!(ptilde_local(-0.5, f(2.0), 3).unwrap().approx_eq(f(2.0)));
        assert!(ptilde_local(0.5, f(2.0), 3).unwrap().approx_eq(f(4.0 / 3.0)));
        assert!(ptilde_local(1.0, f(2.0), 3).is_err());
        assert!(ptilde_local(-0.6, f(2.0), 3).is_err());

        assert!(ptilde_global(-0.5, f(2.0), 3).unwrap().approx_eq(f(4.0)));
        assert!(ptilde_global(0.0, f(7.0), 3).unwrap().approx_eq(f(7.0)));
        assert!(ptilde_global(0.5, f(2.0), 3).unwrap().approx_eq(f(4.0 / 3.0)));
        assert!(ptilde_global(0.6, f(2.0), 3).is_err());
        assert!(ptilde_global(-1.1, f(2.0), 3).is_err());
        // αp + n − 1 = 0
        assert_eq!(ptilde_global(-0.5, f(4.0), 3).unwrap(), INF);
    }

    #[test]
    fn deltas() {
        let mut t = IndexTuple::new(3);
        t.a = Some(1.0);
        t.sigma = Some(1.0);
        t.r = Some(f(2.0));
        t.q = Some(f(2.0));
        t.p = Some(f(2.0));
        assert!(approx_eq(ckn_deltas(&t).unwrap().delta, 1.0));
        t.a = Some(0.5);
        assert!(approx_eq(ckn_deltas(&t).unwrap().delta, 0.5));
        // a = 1, r = p: Δ = σ whatever q is
        t.a = Some(1.0);
        t.sigma = Some(0.7);
        t.q = Some(f(9.0));
        t.r = Some(f(5.0));
        t.p = Some(f(5.0));
        assert!(approx_eq(ckn_deltas(&t).unwrap().delta, 0.7));
        assert!(ckn_deltas(&IndexTuple::new(3)).is_err());
    }

    #[test]
    fn scaling_gamma() {
        let g = sw_scaling_gamma(0.0, 0.0, f(2.0), f(4.0), 3).unwrap();
        assert!(approx_eq(g.gamma, 2.25) && !g.out_of_range);
        let g = sw_scaling_gamma(0.0, 0.0, f(3.0), f(3.0), 3).unwrap();
        assert!(approx_eq(g.gamma, 3.0) && g.out_of_range);
        let g = sw_scaling_gamma(-0.4, 0.0, f(2.0), f(4.0), 3).unwrap();
        assert!(approx_eq(g.gamma, 2.65));
    }

    #[test]
    fn validation() {
        let mut t = IndexTuple::new(3);
        t.p = Some(f(0.5));
        assert!(matches!(t.validate(), Err(IndexError::Domain { field: "p", .. })));
        t.p = Some(INF);
        t.a = Some(0.0);
        assert!(matches!(t.validate(), Err(IndexError::Domain { field: "a", .. })));
        assert!(IndexTuple::new(1).validate().is_err());
    }

    #[test]
    fn json_infinity() {
        let t: IndexTuple = serde_json::from_str(r#"{"n":3,"p":2,"q":"inf"}"#).unwrap();
        assert_eq!(t.q, Some(INF));
        let back = serde_json::to_string(&t).unwrap();
        assert_eq!(back, r#"{"n":3,"p":2.0,"q":"inf"}"#);
        assert!(serde_json::from_str::<IndexTuple>(r#"{"n":3,"zeta":1}"#).is_err());
    }

    fn exponent() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            1 => Just(INF),
            6 => (1.0f64..50.0).prop_map(ExtReal::Finite),
        ]
    }

    proptest! {
        #[test]
        fn conjugate_is_involution(p in exponent()) {
            let back = holder_conjugate(holder_conjugate(p).unwrap()).unwrap();
            prop_assert!(back.approx_eq(p) || (p.as_f64() - back.as_f64()).abs() < 1e-9 * p.as_f64());
        }

        #[test]
        fn lambda_diagonal_is_alpha(alpha in -5.0f64..5.0, p in exponent(), n in 2u32..6) {
            prop_assert_eq!(lambda_index(alpha, p, p, n), alpha);
        }

        #[test]
        fn ckn_residual_vanishes_under_scaling(
            a in 0.05f64..1.0, sigma in 0.1f64..2.0, alpha in -1.0f64..1.0, beta in -1.0f64..1.0,
            p in 1.0f64..8.0, q in 1.0f64..8.0, r in 1.0f64..8.0,
        ) {
            let mut t = IndexTuple::new(3);
            t.a = Some(a); t.sigma = Some(sigma);
            t.p = Some(f(p)); t.q = Some(f(q)); t.r = Some(f(r));
            t.alpha = Some(alpha); t.beta = Some(beta);
            let d = ckn_deltas(&t).unwrap().delta;
            t.gamma = Some(d + a * alpha + (1.0 - a) * beta);
            let res = ckn_deltas(&t).unwrap().scaling_residual.unwrap();
            prop_assert!(res.abs() < 1e-12);
        }
    }

    /// Relations between the local and global thresholds on a rational grid.
    #[test]
    fn threshold_orderings_on_grid() {
        for n in [3u32, 4] {
            for pi in 1..=24 {
                let p = 1.0 + pi as f64 / 4.0;
                for ai in 0..=20 {
                    let alpha = -0.5 + ai as f64 / 20.0;
                    let (Ok(l), Ok(g)) = (ptilde_local(alpha, f(p), n), ptilde_global(alpha, f(p), n))
                    else {
                        continue;
                    };
                    if approx_eq(alpha, 0.5) {
                        assert!(l.approx_eq(g), "alpha=1/2 p={p} {l} {g}");
                        continue;
                    }
                    assert!(l < g, "alpha={alpha} p={p} n={n}: {l} !< {g}");
                    if alpha < 0.0 && alpha > -0.5 {
                        assert!(l < f(p) && f(p) < g, "alpha={alpha} p={p}");
                    }
                    if alpha > 0.0 {
                        assert!(g < f(p), "alpha={alpha} p={p}");
                    }
                }
            }
        }
    }
}
