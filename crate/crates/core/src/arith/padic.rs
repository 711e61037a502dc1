//! Local unit structure of Q_p and R: valuations, unit parts, and the
//! square / fourth power predicates the solubility criteria turn on.

use crate::arith::factor::{gcd_u128, powmod};
use crate::arith::symbols::kronecker;
use crate::arith::Place;
use num_rational::Ratio;

/// Write n = p^v * u with p not dividing u; returns (v, u). n must be
/// nonzero, p prime.
pub fn padic_unit_part(n: i128, p: u128) -> (u32, i128) {
    assert!(n != 0, "unit part of 0");
    let p = p as i128;
    let mut v = 0u32;
    let mut u = n;
    while u % p == 0 {
        u /= p;
        v += 1;
    }
    (v, u)
}

/// Is n a square in the completion at `place`? n nonzero.
///
/// Odd p: even valuation and unit a quadratic residue. p = 2: even
/// valuation and unit = 1 mod 8. Real: positive.
pub fn is_padic_square(n: i128, place: Place) -> bool {
    assert!(n != 0);
    match place {
        Place::Real => n > 0,
        Place::Finite(2) => {
            let (v, u) = padic_unit_part(n, 2);
            v % 2 == 0 && u.rem_euclid(8) == 1
        }
        Place::Finite(p) => {
            let (v, u) = padic_unit_part(n, p);
            v % 2 == 0 && kronecker(u, p as i128) == 1
        }
    }
}

/// Is n a fourth power in the completion at `place`? n nonzero.
///
/// Odd p: valuation = 0 mod 4 and the unit lands in the image of the
/// fourth power map on F_p^*, tested by Euler's criterion with exponent
/// (p-1)/gcd(4, p-1). For p = 3 mod 4 squaring is a bijection on the
/// 2-part, so fourth powers coincide with squares; the gcd handles that
/// uniformly. p = 2: valuation = 0 mod 4 and unit = 1 mod 16 (the odd
/// fourth powers are exactly that class: squares of 1 mod 8 land in
/// 1 mod 16, and every 1 + 16t descends twice by Hensel). Real: positive.
pub fn is_padic_fourth_power(n: i128, place: Place) -> bool {
    assert!(n != 0);
    match place {
        Place::Real => n > 0,
        Place::Finite(2) => {
            let (v, u) = padic_unit_part(n, 2);
            v % 4 == 0 && u.rem_euclid(16) == 1
        }
        Place::Finite(p) => {
            let (v, u) = padic_unit_part(n, p);
            if v % 4 != 0 {
                return false;
            }
            let e = (p - 1) / gcd_u128(4, p - 1);
            powmod(u.rem_euclid(p as i128) as u128, e, p) == 1
        }
    }
}

/// Unit decomposition of a nonzero rational: x = p^v * u with u of valuation
/// zero; v is negative when p divides the denominator.
pub fn padic_unit_part_ratio(x: &Ratio<i128>, p: u128) -> (i64, Ratio<i128>) {
    assert!(*x.numer() != 0, "unit part of 0");
    let (vn, un) = padic_unit_part(*x.numer(), p);
    let (vd, ud) = padic_unit_part(*x.denom(), p);
    (vn as i64 - vd as i64, Ratio::new(un, ud))
}

/// Square predicate on rationals: n/d is a square iff n*d is (scale by d^2).
/// Callers keep |n*d| inside i128.
pub fn is_padic_square_ratio(x: &Ratio<i128>, place: Place) -> bool {
    is_padic_square(x.numer() * x.denom(), place)
}

/// Fourth power predicate on rationals: scale by d^4, so test n*d^3.
pub fn is_padic_fourth_power_ratio(x: &Ratio<i128>, place: Place) -> bool {
    is_padic_fourth_power(x.numer() * x.denom().pow(3), place)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_parts() {
        assert_eq!(padic_unit_part(-126, 3), (2, -14));
        assert_eq!(padic_unit_part(-126, 2), (1, -63));
        assert_eq!(padic_unit_part(48, 2), (4, 3));
        assert_eq!(padic_unit_part(7, 5), (0, 7));
    }

    #[test]
    fn rational_unit_parts() {
        let x = Ratio::new(7, 9);
        assert_eq!(padic_unit_part_ratio(&x, 3), (-2, Ratio::from_integer(7)));
        let y = Ratio::new(50, 3);
        assert_eq!(padic_unit_part_ratio(&y, 5), (2, Ratio::new(2, 3)));
        assert!(is_padic_square_ratio(&Ratio::new(4, 9), Place::Real));
        assert!(is_padic_square_ratio(&Ratio::new(4, 9), Place::Finite(5)));
        // 2/7 = 2 * 7 * 7^-2 has odd valuation at 7
        assert!(!is_padic_square_ratio(&Ratio::new(2, 7), Place::Finite(7)));
        // 2 itself is a square in Q_7
        assert!(is_padic_square_ratio(&Ratio::new(2, 1), Place::Finite(7)));
        // 16/81 = (2/3)^4 everywhere
        assert!(is_padic_fourth_power_ratio(&Ratio::new(16, 81), Place::Finite(5)));
        assert!(is_padic_fourth_power_ratio(&Ratio::new(16, 81), Place::Finite(3)));
        // 32/81 has unit part 2 mod 3, outside the fourth powers {1}
        assert!(!is_padic_fourth_power_ratio(&Ratio::new(32, 81), Place::Finite(3)));
    }

    #[test]
    fn squares_pinned() {
        assert!(is_padic_square(17, Place::Finite(2)));
        assert!(!is_padic_square(-1, Place::Finite(2)));
        assert!(!is_padic_square(3, Place::Finite(2)));
        assert!(is_padic_square(4, Place::Finite(2)));
        assert!(!is_padic_square(8, Place::Finite(2)));
        assert!(is_padic_square(2, Place::Finite(7)));
        assert!(!is_padic_square(3, Place::Finite(7)));
        assert!(is_padic_square(5, Place::Finite(11)));
        assert!(is_padic_square(-4, Place::Finite(5)));
        assert!(is_padic_square(7, Place::Real));
        assert!(!is_padic_square(-7, Place::Real));
    }

    #[test]
    fn fourth_powers_pinned() {
        // 16 = 2^4: valuation 4, unit 1
        assert!(is_padic_fourth_power(16, Place::Finite(2)));
        // 2^4 = 16 = 5 mod 11, and 11 = 3 mod 4 merges fourth powers with squares
        assert!(is_padic_fourth_power(5, Place::Finite(11)));
        assert!(is_padic_fourth_power(1, Place::Finite(2)));
        assert!(is_padic_fourth_power(17, Place::Finite(2)));
        assert!(!is_padic_fourth_power(9, Place::Finite(2)));
        assert!(!is_padic_fourth_power(4, Place::Finite(2)));
        assert!(!is_padic_fourth_power(2, Place::Finite(5)));
        assert!(is_padic_fourth_power(16, Place::Finite(5)));
        // 5 is a square mod 5-adic? no: val 1
        assert!(!is_padic_fourth_power(5, Place::Finite(5)));
        // p = 1 mod 4 separates: 4 is a square mod 5 but 4 = x^4 mod 5 has no solution
        assert!(!is_padic_fourth_power(4, Place::Finite(5)));
        assert!(is_padic_fourth_power(81, Place::Finite(3)));
        assert!(is_padic_fourth_power(7, Place::Real));
        assert!(!is_padic_fourth_power(-16, Place::Real));
    }

    #[test]
    fn fourth_powers_force_squares() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x4441);
        for _ in 0..500 {
            let n = rng.gen_range(-100_000i128..100_000);
            if n == 0 {
                continue;
            }
            for place in [
                Place::Real,
                Place::Finite(2),
                Place::Finite(3),
                Place::Finite(5),
                Place::Finite(13),
            ] {
                if is_padic_fourth_power(n, place) {
                    assert!(is_padic_square(n, place), "n={} at {}", n, place);
                }
                // squares of squares are fourth powers
                if n.checked_mul(n).and_then(|m| m.checked_mul(m)).is_some() {
                    assert!(is_padic_fourth_power(n * n * n * n, place), "n={}", n);
                }
            }
        }
    }
}
