//! Exact rational evaluation of discrete-budget payoffs.
//!
//! Every finite `f64` is a dyadic rational, so converting inputs with
//! [`BigRational::from_float`] loses nothing. Equilibrium membership for
//! ticket assignments is decided in this arithmetic whenever the
//! floating-point comparison is too close to call.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// An exact rational that prints and serializes as `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn zero() -> Self {
        Exact(BigRational::zero())
    }

    pub fn from_f64(x: f64) -> Self {
        Exact(rational(x))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Exact value of a finite float.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// `sum_j own_j v_j / (opposing_j + own_j)` over items with positive basket mass.
pub fn prize_value(valuations: &[BigRational], opposing: &[BigRational], own: &[BigRational]) -> BigRational {
    let mut total = BigRational::zero();
    for ((v, a), y) in valuations.iter().zip(opposing).zip(own) {
        if y.is_zero() || v.is_zero() {
            continue;
        }
        total += y * v / (a + y);
    }
    total
}
