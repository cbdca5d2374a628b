//! Hypothesis systems of the weighted inequalities, decided on an
//! [`IndexTuple`](crate::index::IndexTuple) with pass/fail/boundary
//! granularity.

mod ckn;
mod decay;
mod regularity;
mod scan;
mod sw;
mod verdict;

use std::fmt;
use std::str::FromStr;

pub use ckn::{check_ckn, CknMode};
pub use decay::{check_decay_estimate, DecayCheck, DecayKind};
pub use regularity::{check_yz, classify_regularity, Criterion, RegularityClass, RegularityValue};
pub use scan::{scan_region, set_field, AxisMeta, ScanAxis, ScanGrid};
pub use sw::{check_nonhomogeneous, check_sobolev_embedding, check_stein_weiss, SobolevMode, SwMode, SwVariant};
pub use verdict::{status_of, Constraint, Overall, Relation, Status, Verdict};

use crate::error::IndexError;
use crate::index::IndexTuple;

/// A checker addressable by id from configs and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Checker {
    SteinWeiss(SwVariant, SwMode),
    Nonhomogeneous,
    Sobolev(SobolevMode),
    Ckn(CknMode),
    Decay(DecayKind),
    Regularity(Criterion),
}

const IDS: &[(&str, Checker)] = &[
    ("sw-classical", Checker::SteinWeiss(SwVariant::Classical, SwMode::General)),
    ("sw-radial", Checker::SteinWeiss(SwVariant::Radial, SwMode::General)),
    ("mixed-sw", Checker::SteinWeiss(SwVariant::Mixed, SwMode::General)),
    ("mixed-sw-strict", Checker::SteinWeiss(SwVariant::Mixed, SwMode::Strict)),
    ("mixed-sw-annulus", Checker::SteinWeiss(SwVariant::Mixed, SwMode::Annulus)),
    ("nonhomogeneous", Checker::Nonhomogeneous),
    ("weighted-sobolev", Checker::Sobolev(SobolevMode::Embedding)),
    ("strauss", Checker::Sobolev(SobolevMode::Strauss)),
    ("ckn", Checker::Ckn(CknMode::Fractional)),
    ("ckn-integer", Checker::Ckn(CknMode::IntegerSigma)),
    ("decay-heat", Checker::Decay(DecayKind::PointwiseHeat)),
    ("decay-oseen", Checker::Decay(DecayKind::PointwiseOseen)),
    ("decay-local", Checker::Decay(DecayKind::LocalParabola)),
    ("decay-integrated", Checker::Decay(DecayKind::TimeIntegrated)),
    ("decay-duhamel", Checker::Decay(DecayKind::Duhamel)),
    ("yz-global", Checker::Regularity(Criterion::Global)),
    ("yz-local", Checker::Regularity(Criterion::Local)),
];

impl Checker {
    pub fn ids() -> impl Iterator<Item = &'static str> {
        IDS.iter().map(|(id, _)| *id)
    }

    pub fn run(self, t: &IndexTuple) -> Result<Verdict, IndexError> {
        match self {
            Checker::SteinWeiss(v, m) => check_stein_weiss(t, v, m),
            Checker::Nonhomogeneous => check_nonhomogeneous(t),
            Checker::Sobolev(m) => check_sobolev_embedding(t, m),
            Checker::Ckn(m) => check_ckn(t, m),
            Checker::Decay(k) => check_decay_estimate(t, k).map(|d| d.verdict),
            Checker::Regularity(c) => check_yz(t, c),
        }
    }
}

impl FromStr for Checker {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IDS.iter()
            .find(|(id, _)| *id == s)
            .map(|(_, c)| *c)
            .ok_or_else(|| IndexError::Domain {
                field: "theorem",
                reason: format!("unknown checker `{s}`; known: {}", Checker::ids().collect::<Vec<_>>().join(", ")),
            })
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = IDS.iter().find(|(_, c)| c == self).map(|(id, _)| *id).unwrap_or("?");
        f.write_str(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ExtReal::Finite as F;
    use proptest::prelude::*;

    #[test]
    fn ids_round_trip() {
        for id in Checker::ids() {
            let c: Checker = id.parse().unwrap();
            assert_eq!(c.to_string(), id);
        }
        assert!("sw".parse::<Checker>().is_err());
    }

    fn exponent() -> impl Strategy<Value = f64> {
        prop_oneof![(1.0f64..8.0), Just(1.0), Just(2.0), Just(4.0)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn mixed_reduces_to_classical_on_diagonal(
            n in 2u32..5,
            p in exponent(),
            q in exponent(),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            on_scaling in any::<bool>(),
            gamma in 0.0f64..5.0,
        ) {
            let nf = n as f64;
            let gamma = if on_scaling { nf + nf / q - nf / p - alpha - beta } else { gamma };
            let t = IndexTuple {
                n,
                p: Some(F(p)),
                p_tilde: Some(F(p)),
                q: Some(F(q)),
                q_tilde: Some(F(q)),
                alpha: Some(alpha),
                beta: Some(beta),
                gamma: Some(gamma),
                ..Default::default()
            };
            let c = check_stein_weiss(&t, SwVariant::Classical, SwMode::General).unwrap();
            let m = check_stein_weiss(&t, SwVariant::Mixed, SwMode::General).unwrap();
            prop_assert_eq!(c.overall, m.overall);
        }

        #[test]
        fn mixed_verdict_monotone_in_ptilde(
            alpha in -1.0f64..1.0,
            pt1 in 1.0f64..10.0,
            dp in 0.0f64..10.0,
            qt in 1.0f64..30.0,
        ) {
            let pt2 = pt1 + dp;
            prop_assume!(pt2 <= qt);
            let mk = |pt: f64| IndexTuple {
                n: 3,
                p: Some(F(2.0)),
                q: Some(F(4.0)),
                p_tilde: Some(F(pt)),
                q_tilde: Some(F(qt)),
                alpha: Some(alpha),
                beta: Some(0.0),
                gamma: Some(2.25 - alpha),
                ..Default::default()
            };
            let v1 = check_stein_weiss(&mk(pt1), SwVariant::Mixed, SwMode::General).unwrap();
            let v2 = check_stein_weiss(&mk(pt2), SwVariant::Mixed, SwMode::General).unwrap();
            if v1.overall == Overall::Pass {
                prop_assert_eq!(v2.overall, Overall::Pass);
            }
        }

        #[test]
        fn verdicts_are_reproducible(alpha in -2.0f64..2.0, gamma in 0.1f64..2.9) {
            let t = IndexTuple {
                n: 3,
                p: Some(F(2.0)),
                q: Some(F(4.0)),
                p_tilde: Some(F(3.0)),
                q_tilde: Some(F(5.0)),
                alpha: Some(alpha),
                beta: Some(0.0),
                gamma: Some(gamma),
                ..Default::default()
            };
            let a = check_stein_weiss(&t, SwVariant::Mixed, SwMode::General).unwrap();
            let b = check_stein_weiss(&t, SwVariant::Mixed, SwMode::General).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
