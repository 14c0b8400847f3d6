//! Closed-form first-order privacy–utility trade-off constants, the
//! threshold `zeta` separating the two LDP regimes, and the lower-bound map
//! from `sup F`.
//!
//! Everything here is plain `f64` with `exp_m1`/`ln_1p` care so that terms
//! like `e^eps - 1` stay accurate near zero.

use crate::mechanism::PrivacyConstraint;
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("alphabet size must be >= 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("eps must be > 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must be in [0,1], got {0}")]
    InvalidDelta(f64),
    #[error("gamma must be in (0, log 2], got {0}")]
    GammaOutOfRange(f64),
    #[error("sup F value must exceed 1, got {0}")]
    SupFNotAboveOne(f64),
}

/// Threshold below which the diagonal construction is optimal:
/// `zeta(v, delta) = log(1 + 2(sqrt(delta (v*-1)(v*-delta)) - delta)/v*)`
/// with `v* = 2 ceil(v/2)`. Always zero at `delta = 0`.
pub fn zeta(v: usize, delta: f64) -> Result<f64, BoundsError> {
    if v < 2 {
        return Err(BoundsError::AlphabetTooSmall(v));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(BoundsError::InvalidDelta(delta));
    }
    let v_star = (2 * v.div_ceil(2)) as f64;
    let inner = (delta * (v_star - 1.0) * (v_star - delta)).sqrt() - delta;
    Ok((2.0 * inner / v_star).ln_1p())
}

/// First-order LDP trade-off constant (units: n x MSE), by regime:
/// even/odd closed forms above the threshold, `(v-1)(v-delta)/(v delta)`
/// below. At `eps = zeta` exactly, the above-threshold branch is used; the
/// two branches agree there to high accuracy.
pub fn put_ldp(v: usize, eps: f64, delta: f64) -> Result<f64, BoundsError> {
    if v < 2 {
        return Err(BoundsError::AlphabetTooSmall(v));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(BoundsError::InvalidEpsilon(eps));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(BoundsError::InvalidDelta(delta));
    }
    let em1 = eps.exp_m1();
    let v_f = v as f64;
    let lead = (v_f - 1.0) * (v_f - 1.0) / v_f;
    if eps >= zeta(v, delta)? {
        // e^eps + 1 = em1 + 2, e^eps + 2 delta - 1 = em1 + 2 delta
        if v % 2 == 0 {
            let ratio = (em1 + 2.0) / (em1 + 2.0 * delta);
            Ok(lead * ratio * ratio)
        } else {
            let numer = (em1 + 2.0) * (em1 + 2.0)
                + 4.0 / (v_f * v_f - 1.0) * (em1 + 1.0 + delta) * (1.0 - delta);
            let denom = (em1 + 2.0 * delta) * (em1 + 2.0 * delta);
            Ok(lead * numer / denom)
        }
    } else {
        // reachable only when zeta > 0, which forces delta > 0
        Ok((v_f - 1.0) * (v_f - delta) / (v_f * delta))
    }
}

/// First-order ML trade-off constant:
/// `(v-1)(v - e^gamma + 1)/(v (e^gamma - 1))` for `gamma` in `(0, log 2]`.
pub fn put_ml(v: usize, gamma: f64) -> Result<f64, BoundsError> {
    if v < 2 {
        return Err(BoundsError::AlphabetTooSmall(v));
    }
    if !(gamma > 0.0) || gamma > LN_2 {
        return Err(BoundsError::GammaOutOfRange(gamma));
    }
    let gm1 = gamma.exp_m1();
    let v_f = v as f64;
    Ok((v_f - 1.0) * (v_f - gm1) / (v_f * gm1))
}

/// The lower bound `(v-1)^2 / (v (sup F - 1))` obtained from an optimized
/// `sup F` value.
pub fn lan_lower_bound(v: usize, sup_f_value: f64) -> Result<f64, BoundsError> {
    if v < 2 {
        return Err(BoundsError::AlphabetTooSmall(v));
    }
    if !(sup_f_value > 1.0) {
        return Err(BoundsError::SupFNotAboveOne(sup_f_value));
    }
    let v_f = v as f64;
    Ok((v_f - 1.0) * (v_f - 1.0) / (v_f * (sup_f_value - 1.0)))
}

/// A trade-off query: alphabet size plus privacy constraint.
#[derive(Clone, Copy, Debug)]
pub struct PutQuery {
    pub v: usize,
    pub constraint: PrivacyConstraint,
}

impl PutQuery {
    pub fn new(v: usize, constraint: PrivacyConstraint) -> Result<Self, BoundsError> {
        if v < 2 {
            return Err(BoundsError::AlphabetTooSmall(v));
        }
        Ok(Self { v, constraint })
    }

    /// The trade-off constant for this query.
    pub fn put(&self) -> Result<f64, BoundsError> {
        match self.constraint {
            PrivacyConstraint::Ldp { eps, delta } => put_ldp(self.v, eps, delta),
            PrivacyConstraint::Ml { gamma } => put_ml(self.v, gamma),
        }
    }

    /// The regime threshold; `None` under ML.
    pub fn threshold(&self) -> Result<Option<f64>, BoundsError> {
        match self.constraint {
            PrivacyConstraint::Ldp { delta, .. } => zeta(self.v, delta).map(Some),
            PrivacyConstraint::Ml { .. } => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{f_level_zero, f_two_level, sup_f};

    #[test]
    fn zeta_vanishes_without_additive_slack() {
        for v in 2..=12 {
            assert_eq!(zeta(v, 0.0).unwrap(), 0.0);
        }
        assert_eq!(zeta(2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn zeta_matches_candidate_crossover_by_bisection() {
        // Independent oracle: the eps where the two-level candidate equals
        // the level-zero candidate, found by bisection.
        for (v, delta) in [(2, 0.5), (3, 0.2), (4, 0.1), (7, 0.9)] {
            let t = v / 2;
            let gap = |eps: f64| {
                let a = (eps.exp() + delta) / (eps.exp() + 1.0);
                f_two_level(a, t, v).unwrap() - f_level_zero(delta, 1, v).unwrap()
            };
            let (mut lo, mut hi) = (1e-9, 5.0);
            assert!(gap(lo) < 0.0 && gap(hi) > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = zeta(v, delta).unwrap();
            assert!((z - lo).abs() < 1e-9, "v={v} delta={delta}: {z} vs {lo}");
        }
        // frozen from the bisection oracle above
        assert!((zeta(2, 0.5).unwrap() - 0.31190535818243564).abs() < 1e-12);
    }

    #[test]
    fn put_ldp_examples() {
        // pure LDP at eps = ln 3, v = 2: (1/2)((3+1)/(3-1))^2 = 2
        let p = put_ldp(2, 3f64.ln(), 0.0).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        // cross-check through the lower-bound map
        let c = PrivacyConstraint::ldp(3f64.ln(), 0.0).unwrap();
        let f = sup_f(&c, 2).unwrap().0;
        assert!((lan_lower_bound(2, f).unwrap() - 2.0).abs() < 1e-12);

        // vacuous constraint: (v-1)^2/v for every eps
        for v in 2..=8 {
            for eps in [0.2, 1.0, 3.0] {
                let p = put_ldp(v, eps, 1.0).unwrap();
                let expected = ((v - 1) * (v - 1)) as f64 / v as f64;
                assert!((p - expected).abs() < 1e-12, "v={v} eps={eps}");
            }
        }

        // below threshold: (v-1)(v-delta)/(v delta)
        let z = zeta(3, 0.5).unwrap();
        let p = put_ldp(3, z / 2.0, 0.5).unwrap();
        assert!((p - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn put_ml_examples() {
        assert!((put_ml(2, LN_2).unwrap() - 0.5).abs() < 1e-12);
        assert!((put_ml(4, 1.5f64.ln()).unwrap() - 5.25).abs() < 1e-12);
        // diverges as gamma shrinks
        let mut prev = f64::INFINITY;
        for gamma in [0.5, 0.25, 0.1, 0.01, 1e-4] {
            let p = put_ml(5, gamma).unwrap();
            assert!(p > 0.0 && p.is_finite());
            assert!(p > prev || prev == f64::INFINITY);
            prev = p;
        }
        assert!(matches!(put_ml(4, 0.8), Err(BoundsError::GammaOutOfRange(_))));
        assert!(matches!(put_ml(4, 0.0), Err(BoundsError::GammaOutOfRange(_))));
    }

    #[test]
    fn lower_bound_map() {
        assert!((lan_lower_bound(2, 1.25).unwrap() - 2.0).abs() < 1e-15);
        assert!((lan_lower_bound(2, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(lan_lower_bound(2, 1.0).is_err());
        assert!(lan_lower_bound(2, 1.0 + 1e-15).unwrap() > 1e13);
    }

    #[test]
    fn monotone_in_parameters() {
        for v in [2usize, 3, 4, 7] {
            let mut prev = f64::INFINITY;
            for eps in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0] {
                let p = put_ldp(v, eps, 0.2).unwrap();
                assert!(p <= prev + 1e-12);
                prev = p;
            }
            let mut prev = f64::INFINITY;
            for delta in [0.0, 0.05, 0.2, 0.5, 0.9, 1.0] {
                let p = put_ldp(v, 0.5, delta).unwrap();
                assert!(p <= prev + 1e-12);
                prev = p;
            }
        }
        // non-decreasing in v
        for eps in [0.25, 1.0] {
            let mut prev = 0.0;
            for v in 2..=8 {
                let p = put_ldp(v, eps, 0.1).unwrap();
                assert!(p >= prev - 1e-12);
                prev = p;
            }
        }
    }

    #[test]
    fn query_dispatch() {
        let q = PutQuery::new(4, PrivacyConstraint::ml(0.4).unwrap()).unwrap();
        assert_eq!(q.put().unwrap(), put_ml(4, 0.4).unwrap());
        assert_eq!(q.threshold().unwrap(), None);
        let q = PutQuery::new(4, PrivacyConstraint::ldp(1.0, 0.1).unwrap()).unwrap();
        assert_eq!(q.threshold().unwrap(), Some(zeta(4, 0.1).unwrap()));
    }
}
