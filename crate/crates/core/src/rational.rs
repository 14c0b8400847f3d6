//! Exact rational arithmetic helpers shared by the whole crate.
//!
//! Mechanisms, designs and estimator tables are kept as arbitrary-precision
//! rationals so that constraint checks, dual-pair detection and resolution
//! identities are tolerance-free. Floats enter only at the boundary: privacy
//! parameters are mapped through [`rat_from_f64`] (every finite `f64` is an
//! exact rational) and results leave through [`rat_to_f64`].

use num::bigint::Sign;
use num::{BigRational, One, Zero};

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// Exact rational image of a finite `f64`.
///
/// Panics on NaN or infinity; privacy parameters and probabilities are
/// always finite.
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float required")
}

pub fn rat_from_int(x: i64) -> Rat {
    Rat::from_integer(x.into())
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Rational image of `exp(x)`.
///
/// All privacy-parameter exponentials go through this single helper so that
/// scheme construction and constraint checking agree bit-for-bit on the
/// rational value of `e^eps` / `e^gamma`.
pub fn exp_rat(x: f64) -> Rat {
    rat_from_f64(x.exp())
}

/// Nearest-`f64` conversion of a rational.
///
/// `num`'s `ToPrimitive` rounds numerator and denominator separately (up to
/// ~2 ulp of combined error), which is too lossy for the 1e-10 agreement
/// checks this crate performs on ill-conditioned quantities. This routine
/// instead scales the numerator so the integer quotient carries 63-64
/// significant bits and lets the hardware `u64 -> f64` conversion do a single
/// round-to-nearest step: the result is within 0.5 ulp + 2^-62 of the true
/// value.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let negative = r.numer().sign() == Sign::Minus;
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let num_bits = num.bits() as i64;
    let den_bits = den.bits() as i64;
    // Choose s so that q = floor(num * 2^s / den) lands in [2^62, 2^64).
    let shift = 63 - (num_bits - den_bits);
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let q = q.to_u64_digits();
    debug_assert!(q.len() == 1, "scaled quotient must fit in a u64");
    let magnitude = q[0] as f64 * 2f64.powi(-(shift as i32));
    if negative {
        -magnitude
    } else {
        magnitude
    }
}
