//! Hilbert symbols (a, b)_v over the completions of Q, in closed form,
//! and the translation to local invariants of quaternion classes.

use crate::arith::padic::padic_unit_part;
use crate::arith::symbols::kronecker;
use crate::arith::{InvariantValue, Place};

// characters on the 2-adic units, defined mod 4 resp. mod 8
fn eps(u: i128) -> u32 {
    debug_assert!(u % 2 != 0);
    if u.rem_euclid(4) == 1 {
        0
    } else {
        1
    }
}

fn omega(u: i128) -> u32 {
    debug_assert!(u % 2 != 0);
    match u.rem_euclid(8) {
        1 | 7 => 0,
        3 | 5 => 1,
        _ => unreachable!(),
    }
}

/// Hilbert symbol (a, b) at a place of Q; a, b nonzero. Returns +1 or -1,
/// +1 meaning z^2 = a x^2 + b y^2 has a nontrivial local solution.
pub fn hilbert_symbol(a: i128, b: i128, place: Place) -> i32 {
    assert!(a != 0 && b != 0, "hilbert symbol needs nonzero entries");
    match place {
        Place::Real => {
            if a < 0 && b < 0 {
                -1
            } else {
                1
            }
        }
        Place::Finite(2) => {
            let (alpha, u) = padic_unit_part(a, 2);
            let (beta, v) = padic_unit_part(b, 2);
            let exp = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
            if exp % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Place::Finite(p) => {
            debug_assert!(p % 2 == 1);
            let (alpha, u) = padic_unit_part(a, p);
            let (beta, v) = padic_unit_part(b, p);
            let e = ((p - 1) / 2 % 2) as u32; // quadratic character of -1
            let mut s = 1i32;
            if (alpha * beta * e) % 2 == 1 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= kronecker(u, p as i128);
            }
            if alpha % 2 == 1 {
                s *= kronecker(v, p as i128);
            }
            s
        }
    }
}

/// Local invariant of the quaternion class (a, b): 0 for split, 1/2 for
/// ramified. Input must be a bona fide symbol value.
pub fn invariant_from_symbol(s: i32) -> InvariantValue {
    match s {
        1 => InvariantValue::Zero,
        -1 => InvariantValue::Half,
        _ => panic!("not a symbol value: {}", s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor::factorize;

    #[test]
    fn pinned_symbols() {
        assert_eq!(hilbert_symbol(-1, -1, Place::Real), -1);
        assert_eq!(hilbert_symbol(-1, -1, Place::Finite(2)), -1);
        assert_eq!(hilbert_symbol(-1, -1, Place::Finite(3)), 1);
        assert_eq!(hilbert_symbol(-1, -1, Place::Finite(5)), 1);
        assert_eq!(hilbert_symbol(2, 3, Place::Finite(3)), -1);
        assert_eq!(hilbert_symbol(2, 3, Place::Finite(2)), -1);
        assert_eq!(hilbert_symbol(2, 3, Place::Real), 1);
        assert_eq!(hilbert_symbol(5, 5, Place::Finite(5)), 1); // (5,5) ~ (5,-1)
        assert_eq!(hilbert_symbol(3, 3, Place::Finite(3)), -1);
        assert_eq!(hilbert_symbol(1, -17, Place::Finite(2)), 1);
    }

    #[test]
    fn invariant_translation() {
        assert_eq!(invariant_from_symbol(1), InvariantValue::Zero);
        assert_eq!(invariant_from_symbol(-1), InvariantValue::Half);
    }

    #[test]
    #[should_panic]
    fn invariant_rejects_zero() {
        invariant_from_symbol(0);
    }

    fn all_places(a: i128, b: i128) -> Vec<Place> {
        let mut ps: Vec<u128> = factorize(a).primes().chain(factorize(b).primes()).collect();
        ps.push(2);
        ps.sort_unstable();
        ps.dedup();
        let mut out = vec![Place::Real];
        out.extend(ps.into_iter().map(Place::Finite));
        out
    }

    #[test]
    fn product_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb11be27);
        for _ in 0..500 {
            let a = rng.gen_range(-3000i128..3000);
            let b = rng.gen_range(-3000i128..3000);
            if a == 0 || b == 0 {
                continue;
            }
            let prod: i32 = all_places(a, b)
                .into_iter()
                .map(|v| hilbert_symbol(a, b, v))
                .product();
            assert_eq!(prod, 1, "product formula fails for ({}, {})", a, b);
        }
    }

    #[test]
    fn symbol_identities() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1de27);
        let places = [
            Place::Real,
            Place::Finite(2),
            Place::Finite(3),
            Place::Finite(7),
            Place::Finite(13),
        ];
        for _ in 0..400 {
            let a = rng.gen_range(-400i128..400);
            let b = rng.gen_range(-400i128..400);
            let c = rng.gen_range(-400i128..400);
            if a == 0 || b == 0 || c == 0 {
                continue;
            }
            for v in places {
                // symmetry
                assert_eq!(hilbert_symbol(a, b, v), hilbert_symbol(b, a, v));
                // bimultiplicativity
                assert_eq!(
                    hilbert_symbol(a * b, c, v),
                    hilbert_symbol(a, c, v) * hilbert_symbol(b, c, v),
                    "a={} b={} c={} v={}",
                    a,
                    b,
                    c,
                    v
                );
                // square invariance
                assert_eq!(hilbert_symbol(a * a * b, c, v), hilbert_symbol(b, c, v));
                // (a, -a) always splits
                assert_eq!(hilbert_symbol(a, -a, v), 1);
            }
        }
    }
}
