//! Base arithmetic: factorization, residue symbols, p-adic unit structure,
//! Hilbert symbols over Q_p and R.

pub mod factor;
pub mod hilbert;
pub mod padic;
pub mod symbols;

use serde::{Deserialize, Serialize};
use std::fmt;

/// A place of Q. Finite places carry the prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    Finite(u128),
}

impl Place {
    /// Constructor that insists on primality; use for untrusted input.
    pub fn finite(p: u128) -> Option<Place> {
        if factor::is_prime(p) {
            Some(Place::Finite(p))
        } else {
            None
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Place::Real)
    }

    pub fn prime(&self) -> Option<u128> {
        match self {
            Place::Real => None,
            Place::Finite(p) => Some(*p),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "real"),
            Place::Finite(p) => write!(f, "{}", p),
        }
    }
}

/// Element of (1/2)Z / Z, the value group of local invariants of quaternion
/// classes. Addition is mod Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvariantValue {
    Zero,
    Half,
}

impl InvariantValue {
    pub fn as_fraction(&self) -> (u8, u8) {
        match self {
            InvariantValue::Zero => (0, 1),
            InvariantValue::Half => (1, 2),
        }
    }
}

impl std::ops::Add for InvariantValue {
    type Output = InvariantValue;
    fn add(self, rhs: InvariantValue) -> InvariantValue {
        if self == rhs {
            InvariantValue::Zero
        } else {
            InvariantValue::Half
        }
    }
}

impl std::iter::Sum for InvariantValue {
    fn sum<I: Iterator<Item = InvariantValue>>(iter: I) -> InvariantValue {
        iter.fold(InvariantValue::Zero, |acc, v| acc + v)
    }
}

impl fmt::Display for InvariantValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantValue::Zero => write!(f, "0"),
            InvariantValue::Half => write!(f, "1/2"),
        }
    }
}

/// Square class of a nonzero integer over Q: a positive square, the negative
/// of a square, or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareClass {
    PlusSquare,
    MinusSquare,
    NonSquare,
}

impl SquareClass {
    pub fn of(n: i128) -> SquareClass {
        assert!(n != 0, "square class of 0 undefined");
        let m = n.unsigned_abs();
        if is_perfect_square_u128(m) {
            if n > 0 {
                SquareClass::PlusSquare
            } else {
                SquareClass::MinusSquare
            }
        } else {
            SquareClass::NonSquare
        }
    }
}

pub(crate) fn is_perfect_square_u128(m: u128) -> bool {
    let r = isqrt_u128(m);
    r * r == m
}

/// Floor of sqrt. Newton iteration on u128, exact.
pub fn isqrt_u128(m: u128) -> u128 {
    if m < 2 {
        return m;
    }
    let mut x = 1u128 << ((128 - m.leading_zeros()).div_ceil(2));
    loop {
        let y = (x + m / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt_u128(0), 0);
        assert_eq!(isqrt_u128(1), 1);
        assert_eq!(isqrt_u128(2), 1);
        assert_eq!(isqrt_u128(3), 1);
        assert_eq!(isqrt_u128(4), 2);
        assert_eq!(isqrt_u128(u128::MAX), (1u128 << 64) - 1);
        for n in [15u128, 16, 17, 99980001, 99980002] {
            let r = isqrt_u128(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "n={}", n);
        }
    }

    #[test]
    fn square_classes() {
        assert_eq!(SquareClass::of(1), SquareClass::PlusSquare);
        assert_eq!(SquareClass::of(4), SquareClass::PlusSquare);
        assert_eq!(SquareClass::of(-9), SquareClass::MinusSquare);
        assert_eq!(SquareClass::of(-1), SquareClass::MinusSquare);
        assert_eq!(SquareClass::of(2), SquareClass::NonSquare);
        assert_eq!(SquareClass::of(-2), SquareClass::NonSquare);
        assert_eq!(SquareClass::of(-894348), SquareClass::NonSquare);
    }

    #[test]
    fn invariant_group_law() {
        use InvariantValue::*;
        assert_eq!(Zero + Zero, Zero);
        assert_eq!(Half + Zero, Half);
        assert_eq!(Half + Half, Zero);
        let s: InvariantValue = [Half, Half, Half].into_iter().sum();
        assert_eq!(s, Half);
        assert_eq!(format!("{}", Half), "1/2");
    }

    #[test]
    fn place_constructor_checks_primality() {
        assert_eq!(Place::finite(13), Some(Place::Finite(13)));
        assert_eq!(Place::finite(1), None);
        assert_eq!(Place::finite(91), None);
        assert_eq!(format!("{}", Place::Real), "real");
        assert_eq!(format!("{}", Place::Finite(2)), "2");
    }
}
