//! Independent cross-check oracles used by the test suite.
//!
//! Everything here decides its question by search over residues plus a
//! Newton certificate, never through the closed-form symbol or residue
//! formulas it is meant to audit. Costs are table builds of size p (conics)
//! or p^3 (power residues), so callers keep p small.

use crate::arith::factor::mulmod;
use crate::arith::Place;
use crate::hensel::odd_tables;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Does a x^2 + b y^2 = z^2 have a nonzero solution over the completion?
///
/// Real: a point exists unless both coefficients are negative. Odd p: square
/// factors of p are absorbed into the variables, then each valuation shape
/// is settled by a residue search mod p; nonzero points of a unit conic are
/// automatically smooth, and in the mixed shapes the found point carries a
/// unit partial derivative, so each hit lifts. No hit is a proof of
/// insolubility because the searches cover every normalised class. p = 2
/// runs a digit tree with Newton acceptance; conic trees resolve within a
/// few digits past the coefficient valuations, and the cap is generous, so
/// running out of room panics rather than guessing.
pub fn conic_locally_soluble(a: i128, b: i128, place: Place) -> bool {
    assert!(a != 0 && b != 0, "conic coefficients must be nonzero");
    let p = match place {
        Place::Real => return !(a < 0 && b < 0),
        Place::Finite(p) => p,
    };
    let psq = (p * p) as i128;
    let mut a = a;
    let mut b = b;
    while a % psq == 0 {
        a /= psq;
    }
    while b % psq == 0 {
        b /= psq;
    }
    if p == 2 {
        return conic_two_adic(a, b);
    }
    let t = odd_tables(p as u64);
    let pp = p;
    let ra = a.rem_euclid(pp as i128) as u128;
    let rb = b.rem_euclid(pp as i128) as u128;
    match (ra == 0, rb == 0) {
        (false, false) => {
            // z^2 = a + b y^2 with x = 1, or x = 0, y = 1, z^2 = b
            for y in 0..pp {
                let rhs = (ra + mulmod(rb, mulmod(y, y, pp), pp)) % pp;
                if !t.sqrts[rhs as usize].is_empty() {
                    return true;
                }
            }
            t.square[rb as usize]
        }
        (false, true) => odd_mixed_shape(&t.square, ra, pp),
        (true, false) => odd_mixed_shape(&t.square, rb, pp),
        (true, true) => {
            // p(u x^2 + v y^2) = z^2 forces p | z, then u + v y^2 = 0 mod p
            // with both variables units
            let u = (a / pp as i128).rem_euclid(pp as i128) as u128;
            let v = (b / pp as i128).rem_euclid(pp as i128) as u128;
            (1..pp).any(|y| (u + mulmod(v, mulmod(y, y, pp), pp)) % pp == 0)
        }
    }
}

/// Shape u x^2 + p v y^2 = z^2: soluble iff u is a square mod p. The hit
/// (x, 0, z) has unit z-partial; a miss forces x, z, then y to vanish.
fn odd_mixed_shape(square: &[bool], u: u128, p: u128) -> bool {
    (1..p).any(|x| square[mulmod(u, mulmod(x, x, p), p) as usize])
}

fn conic_two_adic(a: i128, b: i128) -> bool {
    let eval = |x: u128, y: u128, z: u128| -> u128 {
        (a as u128)
            .wrapping_mul(x.wrapping_mul(x))
            .wrapping_add((b as u128).wrapping_mul(y.wrapping_mul(y)))
            .wrapping_sub(z.wrapping_mul(z))
    };
    let grad_val = |c: i128, v: u128| -> Option<u32> {
        // d/dv of c v^2 is 2 c v; exact once v is a nonzero residue
        if v == 0 {
            None
        } else {
            Some(1 + (c.unsigned_abs().trailing_zeros()) + v.trailing_zeros())
        }
    };
    let k_cap = (a.unsigned_abs().trailing_zeros() + b.unsigned_abs().trailing_zeros() + 16)
        .min(40);
    let mut frontier: Vec<[u128; 3]> = (1u32..8)
        .map(|m| [(m & 1) as u128, (m >> 1 & 1) as u128, (m >> 2 & 1) as u128])
        .collect();
    let mut nodes = frontier.len() as u64;
    for j in 1.. {
        let mut next = Vec::new();
        for &[x, y, z] in &frontier {
            let vf = eval(x, y, z).trailing_zeros();
            if vf < j {
                continue;
            }
            let certs = [grad_val(a, x), grad_val(b, y), grad_val(-1, z)];
            if certs.iter().flatten().any(|&t| vf >= 2 * t + 1) {
                return true;
            }
            assert!(j < k_cap, "conic oracle: unresolved class at depth {j} for ({a}, {b})");
            let bit = 1u128 << j;
            for d in 0u32..8 {
                next.push([
                    x | ((d as u128 & 1) * bit),
                    y | ((d as u128 >> 1 & 1) * bit),
                    z | ((d as u128 >> 2 & 1) * bit),
                ]);
            }
        }
        if next.is_empty() {
            return false;
        }
        nodes += next.len() as u64;
        assert!(nodes < 1 << 24, "conic oracle: node budget blown for ({a}, {b})");
        frontier = next;
    }
    unreachable!()
}

struct PowerTables {
    /// squares mod p^3 (all residues y^2, y in 0..p^3)
    sq: Vec<bool>,
    /// fourth powers mod p^3
    quartic: Vec<bool>,
}

fn power_tables(p: u64) -> Arc<PowerTables> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<PowerTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = cache.read().unwrap().get(&p) {
        return Arc::clone(t);
    }
    let m = (p as u128).pow(3);
    let mut sq = vec![false; m as usize];
    let mut quartic = vec![false; m as usize];
    for y in 0..m {
        let s = mulmod(y, y, m);
        sq[s as usize] = true;
        quartic[mulmod(s, s, m) as usize] = true;
    }
    let t = Arc::new(PowerTables { sq, quartic });
    cache.write().unwrap().insert(p, Arc::clone(&t));
    t
}

/// Split x exactly as p^v * u by repeated division. Pure bookkeeping, no
/// residue theory.
fn strip(mut x: i128, p: i128) -> (u32, i128) {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    (v, x)
}

/// Is x a square in Q_p? Decided by exhaustive enumeration: after the
/// valuation is split off by exact division, the unit is looked up in the
/// table of squares mod p^3 (odd p) or compared against odd squares mod 32.
/// Those moduli leave Newton margin, so membership is exact both ways.
pub fn brute_is_square(x: i128, p: u64) -> bool {
    assert!(x != 0 && p >= 2);
    let (v, u) = strip(x, p as i128);
    if v % 2 != 0 {
        return false;
    }
    if p == 2 {
        let r = u.rem_euclid(32);
        return (1..32).step_by(2).any(|y: i128| y * y % 32 == r);
    }
    let m = (p as i128).pow(3);
    power_tables(p).sq[u.rem_euclid(m) as usize]
}

/// Is x a fourth power in Q_p? Same scheme mod p^3 (odd) or mod 64 (p = 2).
pub fn brute_is_fourth_power(x: i128, p: u64) -> bool {
    assert!(x != 0 && p >= 2);
    let (v, u) = strip(x, p as i128);
    if v % 4 != 0 {
        return false;
    }
    if p == 2 {
        let r = u.rem_euclid(64);
        return (1..64).step_by(2).any(|y: i128| y * y % 64 * y % 64 * y % 64 == r);
    }
    let m = (p as i128).pow(3);
    power_tables(p).quartic[u.rem_euclid(m) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conic_pinned() {
        assert!(!conic_locally_soluble(-1, -1, Place::Real));
        assert!(conic_locally_soluble(-1, 2, Place::Real));
        // (-1, -1) ramifies at 2: x^2 + y^2 + z^2 = 0 has no 2-adic point
        assert!(!conic_locally_soluble(-1, -1, Place::Finite(2)));
        assert!(conic_locally_soluble(-1, 2, Place::Finite(2)));
        assert!(conic_locally_soluble(2, 3, Place::Finite(5)));
        // (3, 5)_5: z^2 = 3 x^2 needs 3 to be a square mod 5, and it is not
        assert!(!conic_locally_soluble(3, 5, Place::Finite(5)));
        assert!(conic_locally_soluble(-1, 5, Place::Finite(5)));
        // (p, p) = (p, -1) shape: 3 x^2 + 3 y^2 = z^2 at 3 wants -1 square
        assert!(!conic_locally_soluble(3, 3, Place::Finite(3)));
        assert!(conic_locally_soluble(5, 5, Place::Finite(5)));
    }

    #[test]
    fn power_residue_pinned() {
        assert!(brute_is_square(16, 2));
        assert!(brute_is_square(-4, 5));
        assert!(!brute_is_square(2, 5));
        assert!(brute_is_square(5, 11));
        assert!(!brute_is_square(8, 2));
        assert!(brute_is_fourth_power(16, 2));
        assert!(!brute_is_fourth_power(4, 2));
        assert!(brute_is_fourth_power(81, 5));
        assert!(!brute_is_fourth_power(25, 5));
        // -4 = (1+i)^4 up to units is special to Q(i), not to Q_3
        assert!(!brute_is_fourth_power(-4, 3));
        // 2^4 * unit with unit = 1 mod 16
        assert!(brute_is_fourth_power(16 * 17, 2));
        assert!(!brute_is_fourth_power(16 * 9, 2));
    }

    #[test]
    fn brute_square_matches_exact_roots() {
        for n in 1i128..200 {
            assert!(brute_is_square(n * n, 7), "{n}^2");
            assert!(brute_is_square(n * n, 2), "{n}^2");
            assert!(brute_is_fourth_power(n * n * n * n, 3), "{n}^4");
        }
    }
}
